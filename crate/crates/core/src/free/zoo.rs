//! Shipped free functions, addressable by id from the CLI.

use crate::error::{Error, Result};
use crate::free::expr::{Domain, Expr, FreeFunctionSpec};
use crate::linalg::C64;

/// Known mathematical properties of a zoo member, used as ground truth in
/// the test suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Traits {
    pub monotone: bool,
    pub concave: bool,
    /// Maps `ℙ_Re` (or its Hermitian part, for Hermitian domains) into `ℙ_Re`.
    pub maps_into_p_re: bool,
    /// Commutes with similarities on its domain.
    pub similarity_invariant: bool,
    /// Affine in its variables.
    pub affine: bool,
}

#[derive(Debug, Clone)]
pub struct ZooEntry {
    pub id: &'static str,
    pub summary: &'static str,
    pub spec: FreeFunctionSpec,
    pub traits: Traits,
}

/// `a₀ I + Σ aⱼ Xⱼ`.
pub fn affine(name: &str, a0: C64, coeffs: &[C64], domain: Domain) -> Result<FreeFunctionSpec> {
    let mut terms = vec![Expr::Const(a0)];
    for (j, a) in coeffs.iter().enumerate() {
        terms.push(Expr::var(j).scale(a.re, a.im));
    }
    FreeFunctionSpec::new(name, coeffs.len(), domain, Expr::sum(terms))
}

fn traits(monotone: bool, concave: bool, maps_into_p_re: bool, similarity_invariant: bool) -> Traits {
    Traits {
        monotone,
        concave,
        maps_into_p_re,
        similarity_invariant,
        affine: false,
    }
}

fn entry(id: &'static str, summary: &'static str, arity: usize, domain: Domain, expr: Expr, traits: Traits) -> ZooEntry {
    ZooEntry {
        id,
        summary,
        spec: FreeFunctionSpec::new(id, arity, domain, expr).expect("zoo specs are valid"),
        traits,
    }
}

pub fn zoo() -> Vec<ZooEntry> {
    use num_complex::Complex64 as C;
    let x = || Expr::var(0);
    let affine_traits = |monotone, into| Traits {
        monotone,
        concave: true,
        maps_into_p_re: into,
        similarity_invariant: true,
        affine: true,
    };
    vec![
        ZooEntry {
            id: "affine-pos",
            summary: "I + 2 X1 + 3 X2",
            spec: affine("affine-pos", C::new(1.0, 0.0), &[C::new(2.0, 0.0), C::new(3.0, 0.0)], Domain::All)
                .unwrap(),
            traits: affine_traits(true, true),
        },
        ZooEntry {
            id: "affine-neg",
            summary: "I + 2 X1 - X2 (negative coefficient)",
            spec: affine("affine-neg", C::new(1.0, 0.0), &[C::new(2.0, 0.0), C::new(-1.0, 0.0)], Domain::All)
                .unwrap(),
            traits: affine_traits(false, false),
        },
        ZooEntry {
            id: "affine-imag",
            summary: "0.5 I + i X1 (non-real coefficient)",
            spec: affine("affine-imag", C::new(0.5, 0.0), &[C::new(0.0, 1.0)], Domain::All).unwrap(),
            traits: affine_traits(false, false),
        },
        entry("square", "X1^2", 1, Domain::All, x().pow(2), traits(false, false, false, true)),
        entry("cube", "X1^3", 1, Domain::All, x().pow(3), traits(false, false, false, true)),
        entry("neg-inverse", "-X1^-1", 1, Domain::PRe, x().inv().neg(), traits(false, false, false, true)),
        entry(
            "neg-re-inverse",
            "-(Re X1)^-1",
            1,
            Domain::PRe,
            x().re().inv().neg(),
            traits(true, true, false, false),
        ),
        entry("sqrt-re", "sqrt(Re X1)", 1, Domain::PRe, x().re().sqrt(), traits(true, true, true, false)),
        entry(
            "geomean",
            "X1 # X2 on real-positive pairs",
            2,
            Domain::PRe,
            x().geo_mean(Expr::var(1)),
            traits(false, false, true, true),
        ),
        entry(
            "geomean-hpd",
            "X1 # X2 on Hermitian positive definite pairs",
            2,
            Domain::HermitianPd,
            x().geo_mean(Expr::var(1)),
            traits(true, true, true, false),
        ),
        entry(
            "cor-sqrt",
            "sqrt(Re X1) + i (Im X1)^2",
            1,
            Domain::PRe,
            Expr::sum(vec![x().re().sqrt(), x().im().pow(2).scale(0.0, 1.0)]),
            traits(true, true, true, false),
        ),
        entry(
            "cor-neginv",
            "-(Re X1)^-1 + i Re X1 Im X1 Re X1",
            1,
            Domain::PRe,
            Expr::sum(vec![
                x().re().inv().neg(),
                Expr::product(vec![x().re(), x().im(), x().re()]).scale(0.0, 1.0),
            ]),
            traits(true, true, false, false),
        ),
    ]
}

pub fn zoo_ids() -> Vec<&'static str> {
    zoo().into_iter().map(|e| e.id).collect()
}

pub fn lookup(id: &str) -> Result<ZooEntry> {
    zoo().into_iter().find(|e| e.id == id).ok_or_else(|| {
        Error::Config(format!(
            "unknown zoo member `{id}` (known: {})",
            zoo_ids().join(", ")
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free::domain::sample_evaluated;
    use crate::order::in_p_re;
    use crate::sampling;
    use crate::linalg::OperatorTuple;

    #[test]
    fn ids_are_unique_and_resolvable() {
        let ids = zoo_ids();
        let mut sorted = ids.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), ids.len());
        for id in ids {
            assert_eq!(lookup(id).unwrap().spec.name, id);
        }
        assert!(matches!(lookup("nope"), Err(Error::Config(_))));
    }

    #[test]
    fn declared_image_in_p_re_matches_samples() {
        for e in zoo() {
            let mut r = sampling::rng(11);
            let mut all_inside = true;
            for t in 0..300 {
                let n = 1 + t % 3;
                let (_, y) = sample_evaluated(&mut r, &e.spec, n).unwrap();
                all_inside &= in_p_re(&OperatorTuple::single(y).unwrap(), 0.0);
            }
            assert_eq!(all_inside, e.traits.maps_into_p_re, "{}", e.id);
        }
    }
}
