//! Choi matrices, complete positivity and Kraus extraction.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, Hermitian, Tol, C64};
use crate::order::{is_real_positive, OrderVerdict};
use crate::sampling;

/// A map on `n × n` matrices with `m × m` outputs.
pub trait LinearMap {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn apply(&self, x: &CMatrix) -> Result<CMatrix>;

    /// Residual allowed by the complex-linearity check.
    fn linearity_tol(&self) -> f64 {
        1e-10
    }
}

/// A closure with declared dimensions.
pub struct FnMap<F> {
    pub n: usize,
    pub m: usize,
    pub f: F,
}

impl<F: Fn(&CMatrix) -> CMatrix> LinearMap for FnMap<F> {
    fn input_dim(&self) -> usize {
        self.n
    }

    fn output_dim(&self) -> usize {
        self.m
    }

    fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        Ok((self.f)(x))
    }
}

/// `X ↦ Σ Kᵢ X Kᵢ*` with every `Kᵢ` of shape `m × n`.
#[derive(Debug, Clone)]
pub struct KrausMap {
    pub factors: Vec<CMatrix>,
}

impl KrausMap {
    pub fn new(factors: Vec<CMatrix>) -> Result<Self> {
        let first = factors
            .first()
            .ok_or_else(|| Error::Dimension("a Kraus map needs at least one factor".into()))?;
        let shape = first.shape();
        if factors.iter().any(|k| k.shape() != shape) {
            return Err(Error::Dimension("Kraus factors must share one shape".into()));
        }
        Ok(Self { factors })
    }

    /// `X ↦ V* X V`, the single-factor Stinespring form.
    pub fn conjugation(v: &CMatrix) -> Self {
        Self {
            factors: vec![v.adjoint()],
        }
    }
}

impl LinearMap for KrausMap {
    fn input_dim(&self) -> usize {
        self.factors[0].ncols()
    }

    fn output_dim(&self) -> usize {
        self.factors[0].nrows()
    }

    fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.shape() != (self.input_dim(), self.input_dim()) {
            return Err(Error::Dimension(format!(
                "Kraus map expects {n}x{n} input",
                n = self.input_dim()
            )));
        }
        Ok(self.factors.iter().map(|k| k * x * k.adjoint()).sum())
    }
}

fn unit(n: usize, i: usize, j: usize) -> CMatrix {
    let mut e = CMatrix::zeros(n, n);
    e[(i, j)] = c(1.0, 0.0);
    e
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiMatrix {
    pub n: usize,
    pub m: usize,
    /// `Σᵢⱼ Eᵢⱼ ⊗ L(Eᵢⱼ)`; block `(i, j)` is `L(Eᵢⱼ)`.
    #[serde(with = "crate::json::matrix")]
    pub matrix: CMatrix,
    pub source: String,
    pub hermitian: bool,
}

impl ChoiMatrix {
    pub fn block(&self, i: usize, j: usize) -> CMatrix {
        self.matrix.view((i * self.m, j * self.m), (self.m, self.m)).into_owned()
    }
}

/// Largest relative violation of complex linearity over a few random
/// combinations `αX + βY`.
pub fn linearity_defect(map: &dyn LinearMap, seed: u64) -> Result<f64> {
    let n = map.input_dim();
    let mut r = sampling::rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..4 {
        let x = sampling::ginibre(&mut r, n, n);
        let y = sampling::ginibre(&mut r, n, n);
        let alpha = C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        let beta = C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        let lhs = map.apply(&(&x * alpha + &y * beta))?;
        let rhs = map.apply(&x)? * alpha + map.apply(&y)? * beta;
        worst = worst.max((lhs - &rhs).norm() / rhs.norm().max(1.0));
    }
    Ok(worst)
}

/// Builds the Choi matrix after checking that `L` is complex-linear.
pub fn choi_of_linear_map(map: &dyn LinearMap, source: &str) -> Result<ChoiMatrix> {
    let (n, m) = (map.input_dim(), map.output_dim());
    if n == 0 || m == 0 {
        return Err(Error::Dimension("maps need positive dimensions".into()));
    }
    let defect = linearity_defect(map, 0x5eed)?;
    if defect > map.linearity_tol() {
        return Err(Error::Contract(format!(
            "map `{source}` is not complex-linear (defect {defect:.3e})"
        )));
    }
    let mut matrix = CMatrix::zeros(n * m, n * m);
    for i in 0..n {
        for j in 0..n {
            let img = map.apply(&unit(n, i, j))?;
            if img.shape() != (m, m) {
                return Err(Error::Dimension(format!("map output is {:?}, expected {m}x{m}", img.shape())));
            }
            matrix.view_mut((i * m, j * m), (m, m)).copy_from(&img);
        }
    }
    let hermitian = crate::linalg::hermitian_defect(&matrix) <= 1e-10 * matrix.norm().max(1.0);
    Ok(ChoiMatrix {
        n,
        m,
        matrix,
        source: source.to_string(),
        hermitian,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpReport {
    pub verdict: OrderVerdict,
    pub eigenvalues: Vec<f64>,
    /// Kraus factors `Kᵢ` (`m × n`) with `L(X) = Σ Kᵢ X Kᵢ*`; empty unless CP.
    #[serde(with = "crate::json::matrices")]
    pub kraus: Vec<CMatrix>,
    /// `max_ij ‖Σ Kᵢ Eᵢⱼ Kᵢ* − L(Eᵢⱼ)‖_F`; zero unless CP.
    pub reconstruction_residual: f64,
}

/// CP iff the Choi matrix is PSD; on success the Kraus factors come from
/// the eigendecomposition `C = Σ λ v v*` via `K[r, i] = √λ · v[i·m + r]`.
pub fn is_cp(choi: &ChoiMatrix, tol: impl Into<Tol>) -> Result<CpReport> {
    if !choi.hermitian {
        return Err(Error::Contract(format!(
            "Choi matrix of `{}` is not Hermitian; the map does not preserve Hermiticity",
            choi.source
        )));
    }
    let h = Hermitian::symmetrize(&choi.matrix);
    let verdict = OrderVerdict::from_hermitian(&h, tol);
    let (vals, vecs) = h.eigh();
    let mut kraus = Vec::new();
    let mut residual = 0.0;
    if verdict.holds {
        let cut = 1e-12 * h.spectral_norm().max(1.0);
        for (idx, &lam) in vals.iter().enumerate() {
            if lam <= cut {
                continue;
            }
            let s = lam.sqrt();
            let k = CMatrix::from_fn(choi.m, choi.n, |r, i| vecs[(i * choi.m + r, idx)] * s);
            kraus.push(k);
        }
        for i in 0..choi.n {
            for j in 0..choi.n {
                let e = unit(choi.n, i, j);
                let rebuilt: CMatrix = kraus
                    .iter()
                    .map(|k| k * &e * k.adjoint())
                    .fold(CMatrix::zeros(choi.m, choi.m), |a, b| a + b);
                residual = f64::max(residual, (rebuilt - choi.block(i, j)).norm());
            }
        }
    }
    Ok(CpReport {
        verdict,
        eigenvalues: vals,
        kraus,
        reconstruction_residual: residual,
    })
}

/// Worst smallest eigenvalue of `Re((id_m ⊗ L)(P))` over sampled
/// real-positive `P ∈ M_m(M_n)`.
///
/// This tests (real) complete positivity straight from the definition at
/// amplification level `m`, and applies to maps that are only real-linear.
pub fn amplified_positivity(map: &dyn LinearMap, m: usize, samples: usize, seed: u64) -> Result<f64> {
    let (n, out) = (map.input_dim(), map.output_dim());
    let mut r = sampling::rng(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        let rank = r.gen_range(1..=n * m);
        let p = sampling::psd(&mut r, n * m, rank);
        let mut img = CMatrix::zeros(out * m, out * m);
        for a in 0..m {
            for b in 0..m {
                let blk = p.view((a * n, b * n), (n, n)).into_owned();
                img.view_mut((a * out, b * out), (out, out)).copy_from(&map.apply(&blk)?);
            }
        }
        worst = worst.min(is_real_positive(&img, 0.0)?.margin);
    }
    Ok(worst)
}
