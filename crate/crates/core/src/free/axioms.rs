//! Sampled checks of the free-function axioms (direct sums and unitary
//! conjugation) and of similarity invariance.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::free::domain::{resample, sample_point};
use crate::free::expr::FreeFunctionSpec;
use crate::linalg::{block_diag, inverse, CMatrix, OperatorTuple};
use crate::linalg::direct_sum;
use crate::report::Witness;
use crate::sampling;

/// Pass threshold for the direct-sum and unitary residuals.
pub const AXIOM_TOL: f64 = 1e-9;
/// Pass threshold for the similarity residual.
pub const SIMILARITY_TOL: f64 = 1e-8;
/// Condition-number cap for similarity transforms.
pub const SIMILARITY_COND: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    DirectSum,
    Unitary,
    Similarity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub property: Property,
    pub spec: String,
    pub dim: usize,
    pub trials: usize,
    pub seed: u64,
    pub threshold: f64,
    /// Largest `‖lhs − rhs‖_F / max(1, ‖rhs‖_F)` over the trials.
    pub max_residual: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

struct Worst {
    residual: f64,
    witness: Option<Witness>,
}

impl Worst {
    fn new() -> Self {
        Self {
            residual: 0.0,
            witness: None,
        }
    }

    fn record(&mut self, residual: f64, threshold: f64, witness: impl FnOnce() -> Witness) {
        if residual > self.residual {
            self.residual = residual;
        }
        if residual > threshold && self.witness.is_none() {
            self.witness = Some(witness());
        }
    }

    fn finish(self, property: Property, f: &FreeFunctionSpec, dim: usize, trials: usize, seed: u64, threshold: f64) -> InvarianceReport {
        InvarianceReport {
            property,
            spec: f.name.clone(),
            dim,
            trials,
            seed,
            threshold,
            max_residual: self.residual,
            passed: self.witness.is_none(),
            witness: self.witness,
        }
    }
}

fn relative(lhs: &CMatrix, rhs: &CMatrix) -> f64 {
    (lhs - rhs).norm() / rhs.norm().max(1.0)
}

/// Direct-sum and unitary-conjugation residuals at dimension `n`.
///
/// The second summand of each direct sum has a random dimension in `1..=n`.
pub fn check_free_axioms(
    f: &FreeFunctionSpec,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<(InvarianceReport, InvarianceReport)> {
    if n == 0 || trials == 0 {
        return Err(Error::Config("free-axiom check needs n >= 1 and trials >= 1".into()));
    }
    f.validate()?;
    let mut sums = Worst::new();
    let mut unitary = Worst::new();
    for t in 0..trials {
        let mut r = sampling::trial_rng(seed, t as u64);
        let (a, b, fa, fb, fab) = resample(&mut r, |r| {
            let m = r.gen_range(1..=n);
            let a = sample_point(r, f.domain, n, f.arity);
            let b = sample_point(r, f.domain, m, f.arity);
            let fa = f.evaluate(&a)?;
            let fb = f.evaluate(&b)?;
            let fab = f.evaluate(&direct_sum(&a, &b)?)?;
            Ok((a, b, fa, fb, fab))
        })?;
        let rhs = block_diag(&fa, &fb);
        let res = relative(&fab, &rhs);
        sums.record(res, AXIOM_TOL, || {
            Witness::new(t, n, -res).tuple("A", &a).tuple("B", &b).subtest("direct_sum")
        });

        let u = sampling::unitary(&mut r, n);
        let lhs = f.evaluate(&a.conjugate(&u)?)?;
        let rhs = u.adjoint() * &fa * &u;
        let res = relative(&lhs, &rhs);
        unitary.record(res, AXIOM_TOL, || {
            Witness::new(t, n, -res).tuple("A", &a).matrix("U", &u).subtest("unitary")
        });
    }
    Ok((
        sums.finish(Property::DirectSum, f, n, trials, seed, AXIOM_TOL),
        unitary.finish(Property::Unitary, f, n, trials, seed, AXIOM_TOL),
    ))
}

/// Residual of `F(S⁻¹AS) = S⁻¹F(A)S` over seeded `S` with condition ≤ 10.
///
/// Points whose similarity orbit leaves the domain are resampled.
pub fn check_similarity_invariance(
    f: &FreeFunctionSpec,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<InvarianceReport> {
    if n == 0 || trials == 0 {
        return Err(Error::Config("similarity check needs n >= 1 and trials >= 1".into()));
    }
    f.validate()?;
    let mut worst = Worst::new();
    for t in 0..trials {
        let mut r = sampling::trial_rng(seed, t as u64);
        let (a, s, lhs, rhs) = resample(&mut r, |r| {
            let a = sample_point(r, f.domain, n, f.arity);
            // spread the condition numbers over [1, 10]
            let u: f64 = r.gen();
            let s = sampling::bounded_condition(r, n, 1.0 + (SIMILARITY_COND - 1.0) * u * u);
            let fa = f.evaluate(&a)?;
            let lhs = f.evaluate(&a.similarity(&s)?)?;
            let rhs = inverse(&s)? * fa * &s;
            Ok((a, s, lhs, rhs))
        })?;
        let res = relative(&lhs, &rhs);
        worst.record(res, SIMILARITY_TOL, || {
            Witness::new(t, n, -res).tuple("A", &a).matrix("S", &s).subtest("similarity")
        });
    }
    Ok(worst.finish(Property::Similarity, f, n, trials, seed, SIMILARITY_TOL))
}

/// Largest eigenvalue mismatch between `F(A ⊕ B)` and `F(A) ∪ F(B)`
/// (compared as sorted complex spectra).
pub fn direct_sum_spectrum_gap(f: &FreeFunctionSpec, a: &OperatorTuple, b: &OperatorTuple) -> Result<f64> {
    let joint = f.evaluate(&direct_sum(a, b)?)?;
    let mut lhs = spectrum(&joint);
    let mut rhs = spectrum(&f.evaluate(a)?);
    rhs.extend(spectrum(&f.evaluate(b)?));
    let key = |z: &crate::linalg::C64| (z.re, z.im);
    lhs.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
    rhs.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
    Ok(lhs
        .iter()
        .zip(&rhs)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max))
}

fn spectrum(m: &CMatrix) -> Vec<crate::linalg::C64> {
    let t = m.clone().schur().unpack().1;
    (0..m.nrows()).map(|i| t[(i, i)]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free::expr::{Domain, Expr};
    use crate::free::zoo::{affine, lookup, zoo};
    use crate::linalg::c;

    #[test]
    fn affine_residuals_are_tiny() {
        let f = lookup("affine-pos").unwrap().spec;
        let (ds, un) = check_free_axioms(&f, 3, 100, 1).unwrap();
        assert!(ds.passed && un.passed);
        assert!(ds.max_residual <= 1e-12 && un.max_residual <= 1e-12);
    }

    #[test]
    fn geometric_mean_on_hermitian_pairs() {
        let f = lookup("geomean-hpd").unwrap().spec;
        for n in 1..=4 {
            let (ds, un) = check_free_axioms(&f, n, 50, 2).unwrap();
            assert!(ds.max_residual <= 1e-9 && un.max_residual <= 1e-9, "{ds:?} {un:?}");
        }
    }

    #[test]
    fn every_zoo_member_is_free() {
        for e in zoo() {
            for n in 1..=4 {
                let (ds, un) = check_free_axioms(&e.spec, n, 20, 3).unwrap();
                assert!(ds.passed, "{} n={n}: {}", e.id, ds.max_residual);
                assert!(un.passed, "{} n={n}: {}", e.id, un.max_residual);
            }
        }
    }

    #[test]
    fn similarity_examples() {
        let poly = FreeFunctionSpec::new(
            "poly",
            1,
            Domain::All,
            Expr::sum(vec![Expr::var(0).pow(3), Expr::var(0).scale(-2.0, 0.5), Expr::constant(1.0, 1.0)]),
        )
        .unwrap();
        let rep = check_similarity_invariance(&poly, 3, 50, 4).unwrap();
        assert!(rep.passed && rep.max_residual <= 1e-8, "{rep:?}");

        let nri = lookup("neg-re-inverse").unwrap().spec;
        let rep = check_similarity_invariance(&nri, 2, 50, 4).unwrap();
        assert!(!rep.passed && rep.max_residual > 0.01);
        assert!(rep.witness.is_some());

        let aff = affine("aff", c(0.5, -1.0), &[c(1.0, 0.0), c(0.0, 2.0), c(3.0, 0.0)], Domain::All).unwrap();
        let rep = check_similarity_invariance(&aff, 3, 50, 4).unwrap();
        assert!(rep.max_residual <= 1e-10, "{rep:?}");
    }

    #[test]
    fn zoo_similarity_matches_traits() {
        for e in zoo() {
            if e.spec.domain == Domain::HermitianPd {
                continue;
            }
            let rep = check_similarity_invariance(&e.spec, 2, 30, 5).unwrap();
            assert_eq!(rep.passed, e.traits.similarity_invariant, "{}: {}", e.id, rep.max_residual);
        }
    }

    #[test]
    fn direct_sum_spectra() {
        let mut r = sampling::rng(6);
        for e in zoo() {
            for n in 1..=3 {
                let a = sample_point(&mut r, e.spec.domain, n, e.spec.arity);
                let b = sample_point(&mut r, e.spec.domain, 2, e.spec.arity);
                let gap = direct_sum_spectrum_gap(&e.spec, &a, &b).unwrap();
                assert!(gap <= 1e-9, "{}: {gap}", e.id);
            }
        }
    }
}
