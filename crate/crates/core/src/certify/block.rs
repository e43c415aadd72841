//! The block-unitary construction behind "monotone ⇒ concave" and the
//! Lipschitz bound for real concave functions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::certify::monotone::{concave_trial_with, DEFAULT_LAMBDAS};
use crate::error::{Error, Result};
use crate::free::{Domain, FreeFunctionSpec};
use crate::linalg::{block_diag, c, identity, re_part, spectral_norm, CMatrix, OperatorTuple, Tol};
use crate::order::{in_p_re, real_leq_matrix};
use crate::report::{CertificateReport, Claim, Tally};
use crate::sampling;

/// Residual bounds for the construction's exact identities.
pub const UNITARY_TOL: f64 = 1e-12;
pub const BLOCK_IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockConstructionReport {
    pub lambda: f64,
    pub eps: f64,
    /// `‖V*V − I‖_F`.
    pub unitary_residual: f64,
    /// Max over items of `‖V*(A⊕B)V − displayed block form‖_F`.
    pub block_identity_residual: f64,
    /// Min over items of the margin of `V*(A⊕B)V ≤_Re diag(λA+(1−λ)B+εI, 2Z)`.
    pub domination_margin: f64,
    pub domination_holds: bool,
    pub passed: bool,
}

/// `[[√λ I, −√(1−λ) I], [√(1−λ) I, √λ I]]`.
pub fn block_unitary(n: usize, lambda: f64) -> CMatrix {
    let (s, t) = (lambda.sqrt(), (1.0 - lambda).sqrt());
    let mut v = CMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        v[(i, i)] = c(s, 0.0);
        v[(i, n + i)] = c(-t, 0.0);
        v[(n + i, i)] = c(t, 0.0);
        v[(n + i, n + i)] = c(s, 0.0);
    }
    v
}

fn blocks(tl: &CMatrix, tr: &CMatrix, bl: &CMatrix, br: &CMatrix) -> CMatrix {
    let n = tl.nrows();
    let mut m = CMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(tl);
    m.view_mut((0, n), (n, n)).copy_from(tr);
    m.view_mut((n, 0), (n, n)).copy_from(bl);
    m.view_mut((n, n), (n, n)).copy_from(br);
    m
}

/// Checks the construction componentwise: `V` is unitary, `V*(A⊕B)V` has
/// the block form `[[λA+(1−λ)B, st(B−A)], [st(B−A), (1−λ)A+λB]]` with
/// `s = √λ, t = √(1−λ)`, and with `D = −st(Re B − Re A)`,
/// `Z = D²/ε + (1−λ)Re A + λ Re B` it is dominated by
/// `diag(λA+(1−λ)B+εI, 2Z)` in the real order.
pub fn block_concavity_construction(
    a: &OperatorTuple,
    b: &OperatorTuple,
    lambda: f64,
    eps: f64,
    tol: impl Into<Tol>,
) -> Result<BlockConstructionReport> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Parameter(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Parameter(format!("eps must be positive, got {eps}")));
    }
    a.ensure_compatible(b)?;
    if !(in_p_re(a, 0.0) && in_p_re(b, 0.0)) {
        return Err(Error::Domain("A and B must have positive definite real parts".into()));
    }
    let tol = tol.into();
    let n = a.dim();
    let v = block_unitary(n, lambda);
    let unitary_residual = (v.adjoint() * &v - identity(2 * n)).norm();
    let (s, t) = (lambda.sqrt(), (1.0 - lambda).sqrt());
    let w = |x: f64| c(x, 0.0);
    let mut block_identity_residual: f64 = 0.0;
    let mut margin = f64::INFINITY;
    for (ai, bi) in a.items().iter().zip(b.items()) {
        let conj = v.adjoint() * block_diag(ai, bi) * &v;
        let off = (bi - ai) * w(s * t);
        let shown = blocks(
            &(ai * w(lambda) + bi * w(1.0 - lambda)),
            &off,
            &off,
            &(ai * w(1.0 - lambda) + bi * w(lambda)),
        );
        block_identity_residual = block_identity_residual.max((&conj - shown).norm());

        let (ra, rb) = (re_part(ai)?.into_matrix(), re_part(bi)?.into_matrix());
        let d = (&rb - &ra) * w(-s * t);
        let z = &d * &d * w(1.0 / eps) + &ra * w(1.0 - lambda) + &rb * w(lambda);
        let upper = block_diag(&(ai * w(lambda) + bi * w(1.0 - lambda) + identity(n) * w(eps)), &(z * w(2.0)));
        margin = margin.min(real_leq_matrix(&conj, &upper, tol)?.margin);
    }
    let tol_value = match tol {
        Tol::Abs(t) => t,
        Tol::Auto => 0.0,
    };
    let domination_holds = margin >= -tol_value;
    Ok(BlockConstructionReport {
        lambda,
        eps,
        unitary_residual,
        block_identity_residual,
        domination_margin: margin,
        domination_holds,
        passed: unitary_residual <= UNITARY_TOL && block_identity_residual <= BLOCK_IDENTITY_TOL && domination_holds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub spec: String,
    pub radius: f64,
    pub trials: usize,
    pub seed: u64,
    /// Concavity certificate on the `2r` ball.
    pub concavity: CertificateReport,
    pub hypothesis_met: bool,
    /// Estimate of `sup ‖Re F‖` on the `2r` ball.
    pub m_estimate: f64,
    /// `2M/r`.
    pub bound: f64,
    /// Largest `‖Re F(Y) − Re F(X)‖ / ‖Y − X‖` seen in the `r` ball.
    pub max_ratio: f64,
    /// `None` when the concavity hypothesis failed and no bound is asserted.
    pub passed: Option<bool>,
}

/// A point `center + ρE` with `‖E‖ = 1` per item and `ρ ∈ [0, radius]`.
fn ball_point<R: Rng + ?Sized>(r: &mut R, center: &OperatorTuple, domain: Domain, radius: f64) -> OperatorTuple {
    let n = center.dim();
    let rho = radius * r.gen::<f64>();
    let items = center
        .items()
        .iter()
        .map(|x| {
            let e = match domain {
                Domain::HermitianPd => sampling::hermitian(r, n),
                _ => sampling::ginibre(r, n, n),
            };
            x + &e * c(rho / spectral_norm(&e), 0.0)
        })
        .collect();
    OperatorTuple::new(items).expect("uniform sizes")
}

fn re_value(f: &FreeFunctionSpec, x: &OperatorTuple) -> Result<CMatrix> {
    Ok(re_part(&f.evaluate(x)?)?.into_matrix())
}

/// Compares observed difference quotients of `Re F` on the ball of radius
/// `r` with the bound `2M/r`, `M = sup ‖Re F‖` over the `2r` ball.
///
/// The bound is only asserted when sampled concavity on the `2r` ball
/// holds. Probes include steps along `(I, …, I)` in addition to random ones.
pub fn lipschitz_probe(
    f: &FreeFunctionSpec,
    center: &OperatorTuple,
    r: f64,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<LipschitzReport> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Parameter(format!("radius must be positive, got {r}")));
    }
    if trials == 0 {
        return Err(Error::Config("trials must be positive".into()));
    }
    if center.arity() != f.arity {
        return Err(Error::Arity {
            expected: f.arity,
            got: center.arity(),
        });
    }
    let n = center.dim();
    // ‖E‖ ≤ 2r perturbations keep Re in the domain iff λ_min(Re C) > 2r
    let inside = match f.domain {
        Domain::All => true,
        Domain::PRe | Domain::HermitianPd => {
            f.domain.contains(center)
                && center
                    .items()
                    .iter()
                    .all(|x| re_part(x).map(|h| h.min_eigen().0 > 2.0 * r).unwrap_or(false))
        }
    };
    if !inside {
        return Err(Error::Parameter(format!(
            "the ball of radius {} around the center leaves the domain",
            2.0 * r
        )));
    }

    let mut tally = Tally::new(Claim::Concave, &f.name, &[n], seed, tol);
    for t in 0..trials {
        let mut g = sampling::trial_rng(seed, t as u64);
        let (margin, w) = concave_trial_with(f, &mut g, t, n, &DEFAULT_LAMBDAS, tol, |g| {
            (ball_point(g, center, f.domain, 2.0 * r), ball_point(g, center, f.domain, 2.0 * r))
        })?;
        tally.record(margin, || w.expect("violating trials carry a witness"));
    }
    let concavity = tally.finish();
    let hypothesis_met = concavity.passed();

    let mut g = sampling::rng(seed ^ 0x11b5);
    let mut m_estimate = spectral_norm(&re_value(f, center)?);
    for _ in 0..trials {
        m_estimate = m_estimate.max(spectral_norm(&re_value(f, &ball_point(&mut g, center, f.domain, 2.0 * r))?));
    }
    let ones = OperatorTuple::identities(n, f.arity);
    let mut max_ratio: f64 = 0.0;
    for t in 0..trials {
        let x = ball_point(&mut g, center, f.domain, 0.5 * r);
        let y = if t % 2 == 0 {
            // identity direction, kept inside the r ball
            let step = 0.5 * r * (2.0 * g.gen::<f64>() - 1.0);
            x.axpy(step, &ones)?
        } else {
            ball_point(&mut g, center, f.domain, r)
        };
        let dist = y.axpy(-1.0, &x)?.norm();
        if dist == 0.0 {
            continue;
        }
        let gap = spectral_norm(&(re_value(f, &y)? - re_value(f, &x)?));
        max_ratio = max_ratio.max(gap / dist);
    }
    let bound = 2.0 * m_estimate / r;
    Ok(LipschitzReport {
        spec: f.name.clone(),
        radius: r,
        trials,
        seed,
        concavity,
        hypothesis_met,
        m_estimate,
        bound,
        max_ratio,
        passed: hypothesis_met.then(|| max_ratio <= bound + tol),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free::zoo::{affine, lookup};

    #[test]
    fn half_lambda_unitary() {
        let v = block_unitary(2, 0.5);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v[(0, 0)].re - h).abs() < 1e-16 && (v[(0, 2)].re + h).abs() < 1e-16);
        assert!((v.adjoint() * &v - identity(4)).norm() <= 1e-15);
    }

    #[test]
    fn equal_inputs_have_margin_eps() {
        let mut r = sampling::rng(1);
        let a = OperatorTuple::new(vec![sampling::real_positive(&mut r, 3) + identity(3)]).unwrap();
        let rep = block_concavity_construction(&a, &a, 0.4, 0.05, 1e-10).unwrap();
        assert!(rep.passed);
        assert!((rep.domination_margin - 0.05).abs() < 1e-10, "{}", rep.domination_margin);
    }

    #[test]
    fn seeded_construction_passes() {
        let mut r = sampling::rng(2);
        for _ in 0..100 {
            let n = r.gen_range(1..=4);
            let k = r.gen_range(1..=2);
            let a = crate::free::domain::sample_point(&mut r, Domain::PRe, n, k);
            let b = crate::free::domain::sample_point(&mut r, Domain::PRe, n, k);
            let lambda = r.gen_range(0.05..0.95);
            let eps = r.gen_range(0.01..1.0);
            let rep = block_concavity_construction(&a, &b, lambda, eps, 1e-10).unwrap();
            assert!(rep.passed, "{rep:?}");
        }
        let a = OperatorTuple::identities(2, 1);
        let rep = block_concavity_construction(&a, &a.scale(2.0), 0.3, 0.1, 1e-10).unwrap();
        assert!(rep.passed);
    }

    #[test]
    fn construction_parameters_are_checked() {
        let a = OperatorTuple::identities(1, 1);
        assert!(matches!(block_concavity_construction(&a, &a, 1.0, 0.1, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(block_concavity_construction(&a, &a, 0.5, 0.0, 0.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn affine_ratio_is_the_coefficient_sum() {
        let f = affine("f", c(1.0, 0.0), &[c(2.0, 0.0), c(0.5, 0.0)], Domain::All).unwrap();
        let center = OperatorTuple::identities(2, 2);
        let rep = lipschitz_probe(&f, &center, 0.5, 50, 1, 1e-8).unwrap();
        assert!(rep.hypothesis_met);
        assert!((rep.max_ratio - 2.5).abs() < 1e-12, "{}", rep.max_ratio);
        assert_eq!(rep.passed, Some(true));
    }

    #[test]
    fn negative_inverse_real_part_near_two() {
        let f = lookup("neg-re-inverse").unwrap().spec;
        let center = OperatorTuple::identities(2, 1).scale(2.0);
        let rep = lipschitz_probe(&f, &center, 0.5, 100, 1, 1e-8).unwrap();
        assert!(rep.hypothesis_met);
        assert!(rep.max_ratio <= 1.0 / (1.5 * 1.5) + 1e-9, "{}", rep.max_ratio);
        assert_eq!(rep.passed, Some(true));
    }

    #[test]
    fn square_does_not_meet_the_hypothesis() {
        let f = lookup("square").unwrap().spec;
        let rep = lipschitz_probe(&f, &OperatorTuple::identities(2, 1), 0.5, 100, 1, 1e-8).unwrap();
        assert!(!rep.hypothesis_met);
        assert_eq!(rep.passed, None);
    }

    #[test]
    fn ball_must_fit_in_the_domain() {
        let f = lookup("neg-re-inverse").unwrap().spec;
        let center = OperatorTuple::identities(1, 1);
        assert!(matches!(lipschitz_probe(&f, &center, 0.5, 10, 0, 1e-8), Err(Error::Parameter(_))));
    }
}
