//! Real hypographs `{(Y, X) : Y ≤_Re F(X)}` and sampled matrix convexity.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::certify::{check_dims, DEFAULT_LAMBDAS};
use crate::error::{Error, Result};
use crate::free::domain::{resample, sample_point};
use crate::free::FreeFunctionSpec;
use crate::linalg::{block_diag, c, direct_sum, CMatrix, OperatorTuple};
use crate::order::{real_leq_matrix, OrderVerdict};
use crate::report::{CertificateReport, Claim, Tally, Witness};
use crate::sampling;

/// A pair `(Y, X)` at one level of the graded hypograph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradedPoint {
    #[serde(with = "crate::json::matrix")]
    pub y: CMatrix,
    pub x: OperatorTuple,
}

impl GradedPoint {
    pub fn new(y: CMatrix, x: OperatorTuple) -> Result<Self> {
        if y.shape() != (x.dim(), x.dim()) {
            return Err(Error::Dimension(format!(
                "Y is {}x{} but X has dimension {}",
                y.nrows(),
                y.ncols(),
                x.dim()
            )));
        }
        Ok(Self { y, x })
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    /// `(V*YV, V*XV)`.
    pub fn conjugate(&self, v: &CMatrix) -> Result<Self> {
        Self::new(v.adjoint() * &self.y * v, self.x.conjugate(v)?)
    }

    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        Self::new(block_diag(&self.y, &other.y), direct_sum(&self.x, &other.x)?)
    }

    pub fn lerp(&self, lambda: f64, other: &Self) -> Result<Self> {
        Self::new(
            &self.y * c(1.0 - lambda, 0.0) + &other.y * c(lambda, 0.0),
            self.x.lerp(lambda, &other.x)?,
        )
    }
}

/// `Y ≤_Re F(X)`.
pub fn hypo_member(f: &FreeFunctionSpec, p: &GradedPoint, tol: f64) -> Result<OrderVerdict> {
    if !f.domain.contains(&p.x) {
        return Err(Error::Domain(format!("X lies outside the domain `{}`", f.domain)));
    }
    real_leq_matrix(&p.y, &f.evaluate(&p.x)?, tol)
}

/// Whether some candidate `Y` satisfies `X ≤_Re Y`.
pub fn sat_member(candidates: &[CMatrix], x: &CMatrix, tol: f64) -> Result<bool> {
    for y in candidates {
        if real_leq_matrix(x, y, tol)?.holds {
            return Ok(true);
        }
    }
    Ok(false)
}

/// `(F(X) − P, X)` with `P` real positive, a member by construction.
pub fn sample_member<R: Rng + ?Sized>(r: &mut R, f: &FreeFunctionSpec, n: usize) -> Result<GradedPoint> {
    let (x, fx) = resample(r, |g| {
        let x = sample_point(g, f.domain, n, f.arity);
        let fx = f.evaluate(&x)?;
        Ok((x, fx))
    })?;
    let rank = r.gen_range(0..=n);
    let p = sampling::psd(r, n, rank) + sampling::hermitian(r, n) * c(0.0, 1.0);
    GradedPoint::new(fx - p, x)
}

/// A random contraction with operator norm in `(0, 1]`.
fn contraction<R: Rng + ?Sized>(r: &mut R, n: usize) -> CMatrix {
    let g = sampling::ginibre(r, n, n);
    let s = crate::linalg::spectral_norm(&g);
    g * c(r.gen_range(0.1..=1.0) / s, 0.0)
}

fn zero_is_member(f: &FreeFunctionSpec, tol: f64) -> bool {
    f.domain.contains_zero()
        && GradedPoint::new(CMatrix::zeros(1, 1), OperatorTuple::zeros(1, f.arity))
            .and_then(|p| hypo_member(f, &p, tol))
            .map(|v| v.holds)
            .unwrap_or(false)
}

fn point_witness(w: Witness, tag: &str, p: &GradedPoint) -> Witness {
    let y = OperatorTuple::single(p.y.clone()).expect("square");
    w.subtest(tag).tuple("Y", &y).tuple("X", &p.x)
}

/// Samples hypograph members and checks closure under
/// (a) convex combinations, (b) direct sums, (c) isometric compressions of
/// direct sums, (d) restriction to reducing subspaces, and — when `(0, 0)`
/// is a member at level one — (e) conjugation by contractions.
///
/// A trial's margin is the worst sub-test margin; the witness names the
/// failing sub-test.
pub fn check_matrix_convexity(
    f: &FreeFunctionSpec,
    dims: &[usize],
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<CertificateReport> {
    check_dims(dims, trials)?;
    f.validate()?;
    let contractions = zero_is_member(f, tol);
    let mut tally = Tally::new(Claim::HypographConvex, &f.name, dims, seed, tol);
    tally.note(format!("dimensions covered: {dims:?} (direct sums reach {})", 2 * dims.iter().max().unwrap()));
    if !contractions {
        tally.note("contraction sub-test skipped: (0, 0) is not a level-one member");
    }
    for t in 0..trials {
        let n = dims[t % dims.len()];
        let mut r = sampling::trial_rng(seed, t as u64);
        let p1 = sample_member(&mut r, f, n)?;
        let p2 = sample_member(&mut r, f, n)?;
        let mut subtests: Vec<(&str, GradedPoint, f64)> = Vec::new();

        let lambda = DEFAULT_LAMBDAS[r.gen_range(0..DEFAULT_LAMBDAS.len())];
        let comb = p1.lerp(lambda, &p2)?;
        subtests.push(("convex_combination", comb.clone(), hypo_member(f, &comb, tol)?.margin));

        let sum = p1.direct_sum(&p2)?;
        let fsum = f.evaluate(&sum.x)?;
        let split = block_diag(&f.evaluate(&p1.x)?, &f.evaluate(&p2.x)?);
        tally.metric_max("direct_sum_residual", (&fsum - split).norm() / fsum.norm().max(1.0));
        subtests.push(("direct_sum", sum.clone(), real_leq_matrix(&sum.y, &fsum, tol)?.margin));

        let m = r.gen_range(1..2 * n);
        let u = sampling::isometry(&mut r, 2 * n, m);
        let comp = sum.conjugate(&u)?;
        subtests.push(("isometry", comp.clone(), hypo_member(f, &comp, tol)?.margin));

        // a member that is block diagonal in a rotated basis
        let w = sampling::unitary(&mut r, 2 * n);
        let x = sum.x.conjugate(&w)?;
        let fx = f.evaluate(&x)?;
        let rank = r.gen_range(0..=n);
        let pa = sampling::psd(&mut r, n, rank) + sampling::hermitian(&mut r, n) * c(0.0, 1.0);
        let pb = sampling::psd(&mut r, n, n) + sampling::hermitian(&mut r, n) * c(0.0, 1.0);
        let big = GradedPoint::new(fx - w.adjoint() * block_diag(&pa, &pb) * &w, x)?;
        let v = w.adjoint().columns(0, n).into_owned();
        let restricted = big.conjugate(&v)?;
        subtests.push(("reducing_subspace", restricted.clone(), hypo_member(f, &restricted, tol)?.margin));

        if contractions {
            let k = contraction(&mut r, n);
            let q = p1.conjugate(&k)?;
            if f.domain.contains(&q.x) {
                subtests.push(("contraction", q.clone(), hypo_member(f, &q, tol)?.margin));
            }
        }

        let (tag, point, margin) = subtests
            .into_iter()
            .fold(None, |acc: Option<(&str, GradedPoint, f64)>, s| match acc {
                Some(a) if a.2 <= s.2 => Some(a),
                _ => Some(s),
            })
            .expect("at least one sub-test");
        tally.record(margin, || {
            let w = Witness::new(t, n, margin).param("lambda", lambda);
            let w = point_witness(w, tag, &point);
            w.tuple("X1", &p1.x).tuple("X2", &p2.x)
        });
    }
    Ok(tally.finish())
}

/// Turns a concavity witness `(A, B, λ)` into a convex-combination
/// witness: `(F(A), A)` and `(F(B), B)` are members whose combination is not.
pub fn hypograph_witness_from_concavity(
    f: &FreeFunctionSpec,
    w: &Witness,
    tol: f64,
) -> Result<(GradedPoint, GradedPoint, f64, OrderVerdict)> {
    let a = w.input_tuple("A")?;
    let b = w.input_tuple("B")?;
    let lambda = *w
        .params
        .get("lambda")
        .ok_or_else(|| Error::Config("concavity witness has no `lambda`".into()))?;
    let pa = GradedPoint::new(f.evaluate(&a)?, a)?;
    let pb = GradedPoint::new(f.evaluate(&b)?, b)?;
    let verdict = hypo_member(f, &pa.lerp(lambda, &pb)?, tol)?;
    Ok((pa, pb, lambda, verdict))
}
