//! Finite-difference Fréchet derivatives and the derivative criterion for
//! real monotonicity.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::certify::choi::LinearMap;
use crate::certify::{check_dims, re_margin};
use crate::error::{Error, Result};
use crate::free::domain::{resample, sample_direction, sample_point};
use crate::free::{Domain, FreeFunctionSpec};
use crate::linalg::{c, identity, kron, CMatrix, OperatorTuple};
use crate::report::{CertificateReport, Claim, Tally, Witness};
use crate::sampling;

/// Relative base step: `h = STEP_SCALE · (1 + ‖X‖)`.
pub const STEP_SCALE: f64 = 1e-5;
/// Default tolerance for derivative positivity (FD noise dominates).
pub const DERIVATIVE_TOL: f64 = 1e-6;
/// Largest acceptable amplification-identity residual.
pub const AMPLIFICATION_TOL: f64 = 1e-6;
/// Step halvings tried after a stencil leaves the domain.
const MAX_HALVINGS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrechetEstimate {
    #[serde(with = "crate::json::matrix")]
    pub value: CMatrix,
    /// `‖R − D(h/2)‖_F` for the Richardson value `R`.
    pub error: f64,
    pub step: f64,
}

/// `DF(X)[H]` by central differences in the real variables with one
/// Richardson step.
///
/// The stencil runs along `H/‖H‖`; the result is rescaled. A stencil point
/// outside the domain is a step error, so callers can retry with `h/2`.
pub fn frechet_derivative(
    f: &FreeFunctionSpec,
    x: &OperatorTuple,
    h: &OperatorTuple,
    step: Option<f64>,
) -> Result<FrechetEstimate> {
    x.ensure_compatible(h)?;
    let step = step.unwrap_or(STEP_SCALE * (1.0 + x.norm()));
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Parameter(format!("step must be positive, got {step}")));
    }
    let scale = h.norm();
    let n = x.dim();
    if scale == 0.0 {
        return Ok(FrechetEstimate {
            value: CMatrix::zeros(n, n),
            error: 0.0,
            step,
        });
    }
    let dir = h.scale(1.0 / scale);
    let eval = |t: f64| -> Result<CMatrix> {
        f.evaluate(&x.axpy(t, &dir)?).map_err(|e| match e {
            Error::Domain(reason) => Error::Step { step, reason },
            e => e,
        })
    };
    let central = |t: f64| -> Result<CMatrix> { Ok((eval(t)? - eval(-t)?) * c(0.5 / t, 0.0)) };
    let d1 = central(step)?;
    let d2 = central(0.5 * step)?;
    let r = (&d2 * c(4.0, 0.0) - d1) * c(1.0 / 3.0, 0.0);
    let error = (&r - d2).norm() * scale;
    Ok(FrechetEstimate {
        value: r * c(scale, 0.0),
        error,
        step,
    })
}

/// [`frechet_derivative`] that halves the step on domain exits.
pub fn frechet_adaptive(f: &FreeFunctionSpec, x: &OperatorTuple, h: &OperatorTuple) -> Result<FrechetEstimate> {
    let mut step = STEP_SCALE * (1.0 + x.norm());
    for _ in 0..MAX_HALVINGS {
        match frechet_derivative(f, x, h, Some(step)) {
            Err(Error::Step { .. }) => step *= 0.5,
            other => return other,
        }
    }
    frechet_derivative(f, x, h, Some(step))
}

/// `H ↦ DF(X)[H]` as a linear map on `n × n` matrices (single-variable `F`).
///
/// For `F` built from `Re`/`Im` this map is only real-linear.
pub struct DerivativeMap<'a> {
    pub f: &'a FreeFunctionSpec,
    pub x: OperatorTuple,
}

impl LinearMap for DerivativeMap<'_> {
    fn input_dim(&self) -> usize {
        self.x.dim()
    }

    fn output_dim(&self) -> usize {
        self.x.dim()
    }

    fn apply(&self, h: &CMatrix) -> Result<CMatrix> {
        if self.f.arity != 1 {
            return Err(Error::Arity {
                expected: 1,
                got: self.f.arity,
            });
        }
        Ok(frechet_adaptive(self.f, &self.x, &OperatorTuple::single(h.clone())?)?.value)
    }

    fn linearity_tol(&self) -> f64 {
        1e-6
    }
}

/// `‖DF(X⊗I)[H⊗V] − DF(X)[H]⊗V‖ / max(1, ‖DF(X)[H]⊗V‖)`.
pub fn amplification_residual(f: &FreeFunctionSpec, x: &OperatorTuple, h: &OperatorTuple, v: &CMatrix) -> Result<f64> {
    let m = v.nrows();
    let lhs = frechet_adaptive(f, &x.kron_right(&identity(m)), &h.kron_right(v))?.value;
    let rhs = kron(&frechet_adaptive(f, x, h)?.value, v);
    Ok((lhs - &rhs).norm() / rhs.norm().max(1.0))
}

fn direction_trial<R: Rng>(
    f: &FreeFunctionSpec,
    r: &mut R,
    trial: usize,
    x: &OperatorTuple,
    tol: f64,
    tally: &mut Tally,
) -> Result<()> {
    let h = sample_direction(r, f.domain, x.dim(), f.arity);
    let d = frechet_adaptive(f, x, &h)?;
    let margin = re_margin(&d.value)?;
    tally.metric_max("max_fd_error", d.error);
    let m = r.gen_range(1..=2);
    let v = sampling::hermitian(r, m);
    let amp = amplification_residual(f, x, &h, &v)?;
    tally.metric_max("max_amplification_residual", amp);
    tally.record(margin, || {
        Witness::new(trial, x.dim(), margin).tuple("X", x).tuple("H", &h).param("tol", tol)
    });
    Ok(())
}

fn finish_with_amplification_note(tally: Tally) -> CertificateReport {
    let mut rep = tally.finish();
    if rep.metrics.get("max_amplification_residual").copied().unwrap_or(0.0) > AMPLIFICATION_TOL {
        rep.notes
            .push("amplification identity residual exceeds 1e-6; F may not be a free function".into());
    }
    rep
}

/// Checks `DF(X)[H] ≥_Re 0` at a fixed `X` over sampled real-positive
/// directions `H` (a quarter of them with `Re H = 0`), tracking the
/// amplification identity `DF(X⊗I)[H⊗V] = DF(X)[H]⊗V` on the way.
pub fn derivative_criterion(
    f: &FreeFunctionSpec,
    x: &OperatorTuple,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<CertificateReport> {
    check_dims(&[x.dim()], trials)?;
    if x.arity() != f.arity {
        return Err(Error::Arity {
            expected: f.arity,
            got: x.arity(),
        });
    }
    if !f.domain.contains(x) {
        return Err(Error::Domain("base point lies outside the domain".into()));
    }
    let mut tally = Tally::new(Claim::DerivativeCp, &f.name, &[x.dim()], seed, tol);
    for t in 0..trials {
        let mut r = sampling::trial_rng(seed, t as u64);
        direction_trial(f, &mut r, t, x, tol, &mut tally)?;
    }
    Ok(finish_with_amplification_note(tally))
}

/// [`derivative_criterion`] with a fresh base point per trial.
pub fn certify_derivative(
    f: &FreeFunctionSpec,
    dims: &[usize],
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<CertificateReport> {
    check_dims(dims, trials)?;
    f.validate()?;
    let mut tally = Tally::new(Claim::DerivativeCp, &f.name, dims, seed, tol);
    for t in 0..trials {
        let n = dims[t % dims.len()];
        let mut r = sampling::trial_rng(seed, t as u64);
        let x = resample(&mut r, |r| {
            let x = sample_point(r, f.domain, n, f.arity);
            f.evaluate(&x)?;
            Ok(x)
        })?;
        direction_trial(f, &mut r, t, &x, tol, &mut tally)?;
    }
    Ok(finish_with_amplification_note(tally))
}

/// Relative error of `∫₀¹ DF(A + t(B−A))[B−A] dt` (composite Simpson with
/// `intervals` panels) against `F(B) − F(A)`.
pub fn integral_reconstruction(
    f: &FreeFunctionSpec,
    a: &OperatorTuple,
    b: &OperatorTuple,
    intervals: usize,
) -> Result<f64> {
    a.ensure_compatible(b)?;
    if intervals == 0 || intervals % 2 == 1 {
        return Err(Error::Parameter("Simpson needs a positive even number of intervals".into()));
    }
    if f.domain != Domain::All && !(f.domain.contains(a) && f.domain.contains(b)) {
        return Err(Error::Domain("segment endpoints lie outside the domain".into()));
    }
    let dir = b.axpy(-1.0, a)?;
    let n = a.dim();
    let mut acc = CMatrix::zeros(n, n);
    for i in 0..=intervals {
        let t = i as f64 / intervals as f64;
        let w = if i == 0 || i == intervals {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += frechet_adaptive(f, &a.axpy(t, &dir)?, &dir)?.value * c(w, 0.0);
    }
    let integral = acc * c(1.0 / (3.0 * intervals as f64), 0.0);
    let exact = f.evaluate(b)? - f.evaluate(a)?;
    Ok((integral - &exact).norm() / exact.norm().max(1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::{certify_monotone, DEFAULT_TOL};
    use crate::free::{lookup, zoo, Expr};
    use crate::linalg::inverse;

    fn fd(f: &FreeFunctionSpec, x: &OperatorTuple, h: &OperatorTuple) -> CMatrix {
        frechet_derivative(f, x, h, None).unwrap().value
    }

    #[test]
    fn closed_form_examples() {
        let sq = lookup("square").unwrap().spec;
        let i2 = OperatorTuple::identities(2, 1);
        assert!((fd(&sq, &i2, &i2) - identity(2) * c(2.0, 0.0)).norm() < 1e-9);

        let ni = lookup("neg-inverse").unwrap().spec;
        let x = OperatorTuple::scalars(&[c(2.0, 0.0)]);
        let h = OperatorTuple::scalars(&[c(1.0, 0.0)]);
        assert!((fd(&ni, &x, &h)[(0, 0)] - c(0.25, 0.0)).norm() < 1e-10);

        let aff = lookup("affine-pos").unwrap().spec;
        let mut r = sampling::rng(1);
        let x = sample_point(&mut r, Domain::All, 3, 2);
        let h = sample_direction(&mut r, Domain::All, 3, 2);
        let want = h.get(0) * c(2.0, 0.0) + h.get(1) * c(3.0, 0.0);
        let est = frechet_derivative(&aff, &x, &h, None).unwrap();
        let err = (est.value - &want).norm();
        assert!(err <= 1e-10 * want.norm().max(1.0), "{err}");
    }

    #[test]
    fn fd_accuracy_against_closed_forms() {
        let mut r = sampling::rng(2);
        let sq = lookup("square").unwrap().spec;
        let ni = lookup("neg-inverse").unwrap().spec;
        for _ in 0..50 {
            let n = r.gen_range(1..=4);
            let x = sample_point(&mut r, Domain::PRe, n, 1);
            let h = sample_direction(&mut r, Domain::PRe, n, 1);
            let (xm, hm) = (x.get(0), h.get(0));
            let want = xm * hm + hm * xm;
            assert!((fd(&sq, &x, &h) - &want).norm() <= 1e-7 * want.norm().max(1.0));
            let xi = inverse(xm).unwrap();
            let want = &xi * hm * &xi;
            assert!((fd(&ni, &x, &h) - &want).norm() <= 1e-7 * want.norm().max(1.0));
        }
    }

    #[test]
    fn criterion_examples() {
        let aff = lookup("affine-pos").unwrap().spec;
        let rep = certify_derivative(&aff, &[1, 2, 3], 100, 1, DERIVATIVE_TOL).unwrap();
        assert!(rep.passed());

        let nri = lookup("neg-re-inverse").unwrap().spec;
        let rep = certify_derivative(&nri, &[1, 2, 3], 100, 1, DERIVATIVE_TOL).unwrap();
        assert!(rep.passed(), "{}", rep.worst_margin);
        assert!(rep.metrics["max_amplification_residual"] <= 1e-8);

        let sq = lookup("square").unwrap().spec;
        let x = sample_point(&mut sampling::rng(4), Domain::PRe, 2, 1);
        let rep = derivative_criterion(&sq, &x, 200, 1, DERIVATIVE_TOL).unwrap();
        assert!(rep.violated());
    }

    #[test]
    fn criterion_agrees_with_monotone_certifier_on_zoo() {
        for e in zoo() {
            let d = certify_derivative(&e.spec, &[1, 2, 3], 300, 3, DERIVATIVE_TOL).unwrap();
            let m = certify_monotone(&e.spec, &[1, 2, 3], 300, 3, DEFAULT_TOL).unwrap();
            assert_eq!(d.passed(), m.passed(), "{}: {} vs {}", e.id, d.worst_margin, m.worst_margin);
        }
    }

    #[test]
    fn integral_reconstruction_is_accurate() {
        let mut r = sampling::rng(5);
        for e in zoo() {
            let n = 2;
            let a = sample_point(&mut r, e.spec.domain, n, e.spec.arity);
            let b = sample_point(&mut r, e.spec.domain, n, e.spec.arity);
            let err = integral_reconstruction(&e.spec, &a, &b, 256).unwrap();
            assert!(err <= 1e-6, "{}: {err}", e.id);
        }
        let sq = lookup("square").unwrap().spec;
        let a = OperatorTuple::scalars(&[c(1.0, 0.0)]);
        assert!(integral_reconstruction(&sq, &a, &a, 3).is_err());
    }

    #[test]
    fn domain_exit_is_a_step_error() {
        let f = FreeFunctionSpec::new("ni", 1, Domain::PRe, Expr::var(0).inv().neg()).unwrap();
        let x = OperatorTuple::scalars(&[c(1e-3, 0.0)]);
        let h = OperatorTuple::scalars(&[c(1.0, 0.0)]);
        assert!(matches!(
            frechet_derivative(&f, &x, &h, Some(0.01)),
            Err(Error::Step { .. })
        ));
        assert!(frechet_adaptive(&f, &x, &h).is_ok());
    }
}
