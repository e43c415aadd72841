//! Real-part independence and affine rigidity.

use serde::{Deserialize, Serialize};

use crate::certify::monotone::certify_monotone;
use crate::certify::check_dims;
use crate::error::{Error, Result};
use crate::free::domain::{resample, sample_point};
use crate::free::{Domain, Expr, FreeFunctionSpec};
use crate::linalg::{c, identity, re_part, spectral_norm, zeros, CMatrix, OperatorTuple, C64};
use crate::report::{CertificateReport, Claim, Tally, Witness};
use crate::sampling;

/// `R ↦ Re F(R)` on Hermitian positive definite tuples.
pub fn hermitian_part_map(f: &FreeFunctionSpec) -> FreeFunctionSpec {
    FreeFunctionSpec {
        name: format!("re({})", f.name),
        arity: f.arity,
        domain: Domain::HermitianPd,
        expr: Expr::Re(Box::new(f.expr.clone())),
    }
}

fn with_imaginary(r: &OperatorTuple, w: &[CMatrix]) -> OperatorTuple {
    let items = r.items().iter().zip(w).map(|(ri, wi)| ri + wi * c(0.0, 1.0)).collect();
    OperatorTuple::new(items).expect("matching shapes")
}

fn re_gap(f: &FreeFunctionSpec, r: &OperatorTuple, w: &[CMatrix], w2: &[CMatrix]) -> Result<f64> {
    let a = re_part(&f.evaluate(&with_imaginary(r, w))?)?;
    let b = re_part(&f.evaluate(&with_imaginary(r, w2))?)?;
    Ok(spectral_norm(&(a.into_matrix() - b.into_matrix())))
}

/// Compares `Re F(R + iW)` with `Re F(R + iW′)` for Hermitian `W, W′`; the
/// trial margin is minus the spectral-norm gap.
///
/// Trial 0 is the canonical probe `R = I, W = 0, W′ = I` at `dims[0]`. The
/// monotonicity certificate of `R ↦ Re F(R)` is attached as a sub-report.
pub fn re_independence_test(
    f: &FreeFunctionSpec,
    dims: &[usize],
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<CertificateReport> {
    check_dims(dims, trials)?;
    f.validate()?;
    if f.domain == Domain::HermitianPd {
        return Err(Error::Config(format!(
            "`{}` is only defined on Hermitian tuples; the test needs a domain containing the real-positive tuples",
            f.name
        )));
    }
    let k = f.arity;
    let mut tally = Tally::new(Claim::ReIndependent, &f.name, dims, seed, tol);
    for t in 0..trials {
        let n = dims[t % dims.len()];
        let mut rng = sampling::trial_rng(seed, t as u64);
        let (r, w, w2, gap) = if t == 0 {
            let (r, w, w2) = (OperatorTuple::identities(n, k), vec![zeros(n); k], vec![identity(n); k]);
            let gap = re_gap(f, &r, &w, &w2)?;
            (r, w, w2, gap)
        } else {
            resample(&mut rng, |g| {
                let x = sample_point(g, Domain::PRe, n, k);
                let r = x.map(|m| (m + m.adjoint()) * c(0.5, 0.0));
                let w: Vec<_> = (0..k).map(|_| sampling::hermitian(g, n)).collect();
                let w2: Vec<_> = (0..k).map(|_| sampling::hermitian(g, n)).collect();
                let gap = re_gap(f, &r, &w, &w2)?;
                Ok((r, w, w2, gap))
            })?
        };
        tally.record(-gap, || {
            let w = OperatorTuple::new(w.clone()).expect("shapes");
            let w2 = OperatorTuple::new(w2.clone()).expect("shapes");
            Witness::new(t, n, -gap).tuple("R", &r).tuple("W", &w).tuple("W2", &w2)
        });
    }
    let mut rep = tally.finish();
    let induced = certify_monotone(&hermitian_part_map(f), dims, trials, seed, tol)?;
    rep.absorb(induced);
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineFit {
    /// Fitted `F(X) ≈ a₀ I + Σ aⱼ Xⱼ`.
    pub a0: C64,
    pub a: Vec<C64>,
    /// Max of `‖F(X) − (a₀I + ΣaⱼXⱼ)‖ / (1 + ‖F(X)‖)` over the probe set.
    pub residual: f64,
    /// Scalar value of the base point: `0` when the domain contains zero,
    /// otherwise `1` (probes taken around `(I, …, I)`).
    pub base: f64,
    /// Set when `F(base)` is not a multiple of the identity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rigidity_violation: Option<String>,
}

impl AffineFit {
    pub fn is_affine(&self, tol: f64) -> bool {
        self.rigidity_violation.is_none() && self.residual <= tol
    }
}

fn scalar_value(f: &FreeFunctionSpec, values: &[f64]) -> Result<C64> {
    let x = OperatorTuple::scalars(&values.iter().map(|&v| c(v, 0.0)).collect::<Vec<_>>());
    Ok(f.evaluate(&x)?[(0, 0)])
}

/// Reads the affine coefficients off 1×1 probes: `a₀` from the base point
/// and `aⱼ = F(b + eⱼ) − F(b)`, then measures how well the fit explains `F`
/// on `n_probe` seeded points at each `n ∈ {1, 2, 3}`.
pub fn affine_fit(f: &FreeFunctionSpec, n_probe: usize, seed: u64) -> Result<AffineFit> {
    f.validate()?;
    let k = f.arity;
    let base = if f.domain.contains_zero() { 0.0 } else { 1.0 };
    let b = vec![base; k];
    let fb = scalar_value(f, &b)?;
    let mut a = Vec::with_capacity(k);
    for j in 0..k {
        let mut p = b.clone();
        p[j] += 1.0;
        a.push(scalar_value(f, &p)? - fb);
    }
    let a0 = fb - a.iter().map(|aj| aj * base).sum::<C64>();

    let mut rigidity_violation = None;
    for n in 2..=3 {
        let y = f.evaluate(&OperatorTuple::identities(n, k).scale(base))?;
        let off = (&y - identity(n) * y.trace() * c(1.0 / n as f64, 0.0)).norm();
        if off > 1e-8 {
            rigidity_violation = Some(format!(
                "F at the base point is not a multiple of the identity at n={n} (defect {off:.3e})"
            ));
            break;
        }
    }

    let mut residual: f64 = 0.0;
    let mut r = sampling::rng(seed);
    for n in 1..=3 {
        for _ in 0..n_probe {
            let (x, y) = resample(&mut r, |g| {
                let x = sample_point(g, f.domain, n, k);
                let y = f.evaluate(&x)?;
                Ok((x, y))
            })?;
            let model = x
                .items()
                .iter()
                .zip(&a)
                .fold(identity(n) * a0, |acc, (xj, aj)| acc + xj * *aj);
            residual = residual.max((&y - model).norm() / (1.0 + y.norm()));
        }
    }
    Ok(AffineFit {
        a0,
        a,
        residual,
        base,
        rigidity_violation,
    })
}

/// Adapts [`affine_fit`] to the certificate format: one trial per probe
/// dimension, failing when the residual exceeds `tol`.
pub fn affine_certificate(f: &FreeFunctionSpec, n_probe: usize, seed: u64, tol: f64) -> Result<(AffineFit, CertificateReport)> {
    let fit = affine_fit(f, n_probe, seed)?;
    let mut tally = Tally::new(Claim::Affine, &f.name, &[1, 2, 3], seed, tol);
    let margin = -fit.residual;
    tally.record(margin, || Witness::new(0, 1, margin).param("residual", fit.residual));
    tally.metric("residual", fit.residual);
    if let Some(v) = &fit.rigidity_violation {
        tally.note(v.clone());
    }
    Ok((fit, tally.finish()))
}
