//! Arithmetic, harmonic and geometric means of two matrices, the block
//! matrix characterization of the geometric mean, and AGH inequality probes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, ensure_same_shape, identity, inverse, re_part, sqrtm, CMatrix, Hermitian, Tol};
use crate::order::{real_leq_matrix, OrderVerdict};
use crate::sampling;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanKind {
    Arithmetic,
    Harmonic,
    Geometric,
}

impl FromStr for MeanKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "arithmetic" => Ok(MeanKind::Arithmetic),
            "harmonic" => Ok(MeanKind::Harmonic),
            "geometric" => Ok(MeanKind::Geometric),
            other => Err(Error::Config(format!("unknown mean `{other}`"))),
        }
    }
}

impl fmt::Display for MeanKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeanKind::Arithmetic => "arithmetic",
            MeanKind::Harmonic => "harmonic",
            MeanKind::Geometric => "geometric",
        })
    }
}

fn ensure_re_pd(x: &CMatrix, name: &str) -> Result<()> {
    let (min, _) = re_part(x)?.min_eigen();
    if min <= 0.0 {
        return Err(Error::Domain(format!(
            "{name} must have positive definite real part (λ_min = {min:.3e})"
        )));
    }
    Ok(())
}

/// `A # B = A^{1/2} (A^{−1/2} B A^{−1/2})^{1/2} A^{1/2}` with principal roots.
///
/// For accretive `A`, `B` the inner product is similar to `B A⁻¹`, whose
/// spectrum avoids `(−∞, 0]`, so every root is well defined.
pub fn geometric_mean(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let a_half = sqrtm(a)?;
    let a_neg_half = inverse(&a_half)?;
    let inner = &a_neg_half * b * &a_neg_half;
    let inner_half = sqrtm(&inner)?;
    Ok(&a_half * inner_half * &a_half)
}

pub fn mean(kind: MeanKind, a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    ensure_same_shape(a, b)?;
    crate::linalg::ensure_square(a)?;
    match kind {
        MeanKind::Arithmetic => Ok((a + b) * c(0.5, 0.0)),
        MeanKind::Harmonic => {
            ensure_re_pd(a, "A")?;
            ensure_re_pd(b, "B")?;
            let s = inverse(a)? + inverse(b)?;
            Ok(inverse(&s)? * c(2.0, 0.0))
        }
        MeanKind::Geometric => {
            ensure_re_pd(a, "A")?;
            ensure_re_pd(b, "B")?;
            geometric_mean(a, b)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxCharacterizationReport {
    /// `λ_min([[A, G], [G, B]])`.
    pub feasibility_margin: f64,
    pub feasible: bool,
    pub eps: f64,
    /// `λ_min([[A, G + εI], [G + εI, B]])`.
    pub inflated_margin: f64,
    /// The inflated candidate is infeasible.
    pub maximal: bool,
}

fn block2(a: &CMatrix, g: &CMatrix, b: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let mut m = CMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    m.view_mut((0, n), (n, n)).copy_from(g);
    m.view_mut((n, 0), (n, n)).copy_from(&g.adjoint());
    m.view_mut((n, n), (n, n)).copy_from(b);
    m
}

/// Probes `G` as the maximum of `{X ≥ 0 : [[A, X], [X, B]] ⪰ 0}`.
pub fn verify_max_characterization(
    a: &Hermitian,
    b: &Hermitian,
    g: &Hermitian,
    eps: f64,
) -> Result<MaxCharacterizationReport> {
    for (name, h) in [("A", a), ("B", b)] {
        let (min, _) = h.min_eigen();
        if min <= 0.0 {
            return Err(Error::Domain(format!("{name} is not positive definite (λ_min = {min:.3e})")));
        }
    }
    if a.dim() != b.dim() || a.dim() != g.dim() {
        return Err(Error::Dimension("A, B and G must share a dimension".into()));
    }
    let n = a.dim();
    let block = Hermitian::symmetrize(&block2(a.as_matrix(), g.as_matrix(), b.as_matrix()));
    let tol = crate::linalg::default_tol(&block);
    let (feasibility_margin, _) = block.min_eigen();
    let inflated = g.as_matrix() + identity(n) * c(eps, 0.0);
    let block_eps = Hermitian::symmetrize(&block2(a.as_matrix(), &inflated, b.as_matrix()));
    let (inflated_margin, _) = block_eps.min_eigen();
    Ok(MaxCharacterizationReport {
        feasibility_margin,
        feasible: feasibility_margin >= -tol,
        eps,
        inflated_margin,
        maximal: inflated_margin < 0.0,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AghReport {
    #[serde(with = "crate::json::matrix")]
    pub harmonic: CMatrix,
    #[serde(with = "crate::json::matrix")]
    pub geometric: CMatrix,
    #[serde(with = "crate::json::matrix")]
    pub arithmetic: CMatrix,
    /// `harmonic ≤_Re geometric`.
    pub harmonic_le_geometric: OrderVerdict,
    /// `geometric ≤_Re arithmetic`.
    pub geometric_le_arithmetic: OrderVerdict,
}

impl AghReport {
    pub fn holds(&self) -> bool {
        self.harmonic_le_geometric.holds && self.geometric_le_arithmetic.holds
    }

    pub fn worst_margin(&self) -> f64 {
        self.harmonic_le_geometric
            .margin
            .min(self.geometric_le_arithmetic.margin)
    }
}

pub fn agh_probe(a: &CMatrix, b: &CMatrix, tol: impl Into<Tol>) -> Result<AghReport> {
    let tol = tol.into();
    let harmonic = mean(MeanKind::Harmonic, a, b)?;
    let geometric = mean(MeanKind::Geometric, a, b)?;
    let arithmetic = mean(MeanKind::Arithmetic, a, b)?;
    let harmonic_le_geometric = real_leq_matrix(&harmonic, &geometric, tol)?;
    let geometric_le_arithmetic = real_leq_matrix(&geometric, &arithmetic, tol)?;
    Ok(AghReport {
        harmonic,
        geometric,
        arithmetic,
        harmonic_le_geometric,
        geometric_le_arithmetic,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AghSearchReport {
    pub trials_run: usize,
    pub seed: u64,
    pub dims: Vec<usize>,
    /// Trial index of the first violation.
    pub found_at: Option<usize>,
    pub worst_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none", with = "opt_pair", default)]
    pub witness: Option<(CMatrix, CMatrix)>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness_report: Option<AghReport>,
}

mod opt_pair {
    use super::*;
    use crate::json::MatrixJson;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        v: &Option<(CMatrix, CMatrix)>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        v.as_ref()
            .map(|(a, b)| [MatrixJson::from(a), MatrixJson::from(b)])
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<(CMatrix, CMatrix)>, D::Error> {
        let v = Option::<[MatrixJson; 2]>::deserialize(d)?;
        v.map(|[a, b]| {
            Ok((
                CMatrix::try_from(&a).map_err(serde::de::Error::custom)?,
                CMatrix::try_from(&b).map_err(serde::de::Error::custom)?,
            ))
        })
        .transpose()
    }
}

/// Searches seeded non-Hermitian real-positive pairs for a failing AGH chain.
pub fn agh_search(dims: &[usize], trials: usize, seed: u64, tol: f64) -> Result<AghSearchReport> {
    if dims.is_empty() || trials == 0 {
        return Err(Error::Config("agh search needs dims and trials".into()));
    }
    let mut worst = f64::INFINITY;
    for t in 0..trials {
        let n = dims[t % dims.len()];
        let mut r = sampling::trial_rng(seed, t as u64);
        let a = sampling::real_positive(&mut r, n);
        let b = sampling::real_positive(&mut r, n);
        let rep = agh_probe(&a, &b, tol)?;
        worst = worst.min(rep.worst_margin());
        if !rep.holds() {
            return Ok(AghSearchReport {
                trials_run: t + 1,
                seed,
                dims: dims.to_vec(),
                found_at: Some(t),
                worst_margin: worst,
                witness: Some((a, b)),
                witness_report: Some(rep),
            });
        }
    }
    Ok(AghSearchReport {
        trials_run: trials,
        seed,
        dims: dims.to_vec(),
        found_at: None,
        worst_margin: worst,
        witness: None,
        witness_report: None,
    })
}
