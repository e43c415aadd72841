//! Free functions: expression trees, domains, the shipped zoo, and the
//! sampled free-function axioms.

pub mod axioms;
pub mod domain;
pub mod expr;
pub mod zoo;

pub use axioms::{check_free_axioms, check_similarity_invariance, InvarianceReport, Property};
pub use expr::{evaluate, Domain, Expr, FreeFunctionSpec};
pub use zoo::{lookup, zoo, zoo_ids, ZooEntry};

use crate::error::{Error, Result};
use crate::linalg::hermitian_defect;
use crate::sampling;

/// Probe points used to check that the parts of a corollary form are Hermitian.
const HERMITIAN_PROBES: usize = 8;

/// Builds `F(X) = G(Re X) + i·H(Re X, Im X)`.
///
/// `G` has arity `k` and `H` arity `2k`; `H` reads the real parts in its
/// first `k` slots and the imaginary parts in the rest. Both must return
/// Hermitian outputs on Hermitian inputs, which is checked on seeded probes.
pub fn make_corollary_form(g: &FreeFunctionSpec, h: &FreeFunctionSpec) -> Result<FreeFunctionSpec> {
    let k = g.arity;
    if h.arity != 2 * k {
        return Err(Error::Arity {
            expected: 2 * k,
            got: h.arity,
        });
    }
    let mut r = sampling::rng(0x0c0f);
    for _ in 0..HERMITIAN_PROBES {
        for n in 1..=3 {
            let (_, gy) = domain::resample(&mut r, |r| {
                let x = domain::sample_point(r, Domain::HermitianPd, n, k);
                let x = if g.domain == Domain::HermitianPd {
                    x
                } else {
                    x.map(|m| m - crate::linalg::identity(n) * crate::linalg::c(0.5, 0.0))
                };
                g.evaluate(&x).map(|y| (x, y))
            })?;
            let (_, hy) = domain::resample(&mut r, |r| {
                let x = crate::linalg::OperatorTuple::new(
                    (0..2 * k)
                        .map(|j| {
                            if j < k && g.domain == Domain::HermitianPd {
                                sampling::hermitian_pd(r, n)
                            } else {
                                sampling::hermitian(r, n)
                            }
                        })
                        .collect(),
                )?;
                h.evaluate(&x).map(|y| (x, y))
            })?;
            for (part, y) in [("G", &gy), ("H", &hy)] {
                let defect = hermitian_defect(y) / y.norm().max(1.0);
                if defect > 1e-10 {
                    return Err(Error::Contract(format!(
                        "{part} returned a non-Hermitian value (relative defect {defect:.3e})"
                    )));
                }
            }
        }
    }
    let g_expr = g.expr.substitute(&|j| Expr::var(j).re());
    let h_expr = h.expr.substitute(&|j| if j < k { Expr::var(j).re() } else { Expr::var(j - k).im() });
    let domain = if g.domain == Domain::HermitianPd { Domain::PRe } else { Domain::All };
    FreeFunctionSpec::new(
        format!("cor({},{})", g.name, h.name),
        k,
        domain,
        Expr::sum(vec![g_expr, h_expr.scale(0.0, 1.0)]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, OperatorTuple};

    #[test]
    fn corollary_form_matches_its_parts() {
        let g = FreeFunctionSpec::new("g", 1, Domain::HermitianPd, Expr::var(0).sqrt()).unwrap();
        let h = FreeFunctionSpec::new("h", 2, Domain::All, Expr::var(1).pow(2)).unwrap();
        let f = make_corollary_form(&g, &h).unwrap();
        assert_eq!(f.domain, Domain::PRe);
        let mut r = sampling::rng(3);
        let x = sampling::real_positive(&mut r, 3);
        let re = (&x + x.adjoint()) * c(0.5, 0.0);
        let im = (&x - x.adjoint()) * c(0.0, -0.5);
        let want = g.evaluate(&OperatorTuple::single(re).unwrap()).unwrap()
            + &im * &im * c(0.0, 1.0);
        let got = f.evaluate(&OperatorTuple::single(x).unwrap()).unwrap();
        assert!((got - want).norm() < 1e-10);
    }

    #[test]
    fn non_hermitian_parts_are_rejected() {
        let g = FreeFunctionSpec::new("g", 1, Domain::All, Expr::var(0).scale(0.0, 1.0)).unwrap();
        let h = FreeFunctionSpec::new("h", 2, Domain::All, Expr::var(0)).unwrap();
        assert!(matches!(make_corollary_form(&g, &h), Err(Error::Contract(_))));
        let g = FreeFunctionSpec::new("g", 1, Domain::All, Expr::var(0)).unwrap();
        let h = FreeFunctionSpec::new("h", 2, Domain::All, Expr::product(vec![Expr::var(0), Expr::var(1)])).unwrap();
        assert!(matches!(make_corollary_form(&g, &h), Err(Error::Contract(_))));
        assert!(matches!(make_corollary_form(&g, &g), Err(Error::Arity { .. })));
    }
}
