//! Seeded random matrix generators.
//!
//! Every generator draws from a caller-supplied RNG; [`rng`] and
//! [`trial_rng`] build ChaCha streams so that a `(seed, trial)` pair always
//! reproduces the same matrices.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{c, identity, CMatrix, OperatorTuple, C64};

/// Lower bound on `λ_min(Re X)` for real-positive samples.
pub const REAL_POSITIVE_DELTA: f64 = 0.1;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `trial` of the generator seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(trial);
    r
}

fn cnormal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Complex Ginibre matrix with `CN(0, 1)` entries.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| cnormal(rng))
}

/// Hermitian Gaussian with spectral norm of order one.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = ginibre(rng, n, n);
    (&g + g.adjoint()) * c(0.5 / (n as f64).sqrt(), 0.0)
}

/// Haar unitary from the QR factorization of a Ginibre matrix.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let qr = ginibre(rng, n, n).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Isometry `ℂ^m → ℂ^n` (an `n × m` matrix with `U*U = I`).
pub fn isometry<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> CMatrix {
    assert!(m <= n, "isometry needs m <= n");
    unitary(rng, n).columns(0, m).into_owned()
}

/// PSD matrix `W W* / n` with `W` of the given rank.
pub fn psd<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> CMatrix {
    if rank == 0 {
        return CMatrix::zeros(n, n);
    }
    let w = ginibre(rng, n, rank);
    let p = &w * w.adjoint() * c(1.0 / n as f64, 0.0);
    (&p + p.adjoint()) * c(0.5, 0.0)
}

/// Hermitian positive definite: `W*W/n + δI`.
pub fn hermitian_pd<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    psd(rng, n, n) + identity(n) * c(REAL_POSITIVE_DELTA, 0.0)
}

/// Real-positive matrix with `Re X ⪰ δI` and an independent Hermitian imaginary part.
pub fn real_positive<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let re = hermitian_pd(rng, n);
    let im = hermitian(rng, n);
    re + im * c(0.0, 1.0)
}

/// Invertible `S = U diag(σ) V*` with singular values in `[1, cond]`.
pub fn bounded_condition<R: Rng + ?Sized>(rng: &mut R, n: usize, cond: f64) -> CMatrix {
    let u = unitary(rng, n);
    let v = unitary(rng, n);
    let sigma: Vec<C64> = (0..n).map(|_| c(rng.gen_range(1.0..=cond), 0.0)).collect();
    u * CMatrix::from_diagonal(&DVector::from_vec(sigma)) * v.adjoint()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleKind {
    Hermitian,
    Unitary,
    Isometry,
    RealPositive,
    PsdPairOrdered,
}

impl FromStr for SampleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "hermitian" => SampleKind::Hermitian,
            "unitary" => SampleKind::Unitary,
            "isometry" => SampleKind::Isometry,
            "real_positive" => SampleKind::RealPositive,
            "psd_pair_ordered" => SampleKind::PsdPairOrdered,
            other => return Err(Error::Config(format!("unknown sample kind `{other}`"))),
        })
    }
}

impl fmt::Display for SampleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SampleKind::Hermitian => "hermitian",
            SampleKind::Unitary => "unitary",
            SampleKind::Isometry => "isometry",
            SampleKind::RealPositive => "real_positive",
            SampleKind::PsdPairOrdered => "psd_pair_ordered",
        })
    }
}

/// Column count used by [`sample`] for isometries: `⌈n/2⌉`.
pub fn isometry_cols(n: usize) -> usize {
    n.div_ceil(2)
}

/// Deterministic batch of `k` samples of the given kind.
///
/// Isometries are `n × ⌈n/2⌉`; `PsdPairOrdered` returns `2k` Hermitian
/// matrices `[A_1..A_k, B_1..B_k]` with every `B_i − A_i` PSD.
pub fn sample(kind: SampleKind, n: usize, k: usize, seed: u64) -> Result<Vec<CMatrix>> {
    if n == 0 || k == 0 {
        return Err(Error::Config(format!("sample needs n >= 1 and k >= 1 (got n={n}, k={k})")));
    }
    let mut r = rng(seed);
    let out = match kind {
        SampleKind::Hermitian => (0..k).map(|_| hermitian(&mut r, n)).collect(),
        SampleKind::Unitary => (0..k).map(|_| unitary(&mut r, n)).collect(),
        SampleKind::Isometry => (0..k).map(|_| isometry(&mut r, n, isometry_cols(n))).collect(),
        SampleKind::RealPositive => (0..k).map(|_| real_positive(&mut r, n)).collect(),
        SampleKind::PsdPairOrdered => {
            let a: Vec<CMatrix> = (0..k).map(|_| hermitian_pd(&mut r, n)).collect();
            let b: Vec<CMatrix> = a
                .iter()
                .map(|a| {
                    let rank = r.gen_range(0..=n);
                    a + psd(&mut r, n, rank)
                })
                .collect();
            a.into_iter().chain(b).collect()
        }
    };
    Ok(out)
}

/// [`sample`] for the square kinds, wrapped as a tuple.
pub fn sample_tuple(kind: SampleKind, n: usize, k: usize, seed: u64) -> Result<OperatorTuple> {
    if kind == SampleKind::Isometry && isometry_cols(n) != n {
        return Err(Error::Config("isometry samples are not square".into()));
    }
    OperatorTuple::new(sample(kind, n, k, seed)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{re_part, Hermitian};

    #[test]
    fn real_positive_margin() {
        for seed in 0..20 {
            for x in sample(SampleKind::RealPositive, 4, 3, seed).unwrap() {
                let (min, _) = re_part(&x).unwrap().min_eigen();
                assert!(min >= REAL_POSITIVE_DELTA - 1e-10, "{min}");
            }
        }
    }

    #[test]
    fn unitary_and_isometry_are_orthonormal() {
        for seed in 0..20 {
            for u in sample(SampleKind::Unitary, 5, 2, seed).unwrap() {
                assert!((u.adjoint() * &u - identity(5)).norm() <= 1e-10);
            }
            for u in sample(SampleKind::Isometry, 5, 2, seed).unwrap() {
                assert_eq!(u.shape(), (5, 3));
                assert!((u.adjoint() * &u - identity(3)).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn ordered_pairs_are_ordered() {
        for seed in 0..20 {
            let s = sample(SampleKind::PsdPairOrdered, 3, 2, seed).unwrap();
            for i in 0..2 {
                let d = Hermitian::new(&s[i + 2] - &s[i]).unwrap();
                assert!(d.min_eigen().0 >= -1e-12);
            }
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        for kind in [
            SampleKind::Hermitian,
            SampleKind::Unitary,
            SampleKind::Isometry,
            SampleKind::RealPositive,
            SampleKind::PsdPairOrdered,
        ] {
            assert_eq!(sample(kind, 3, 2, 42).unwrap(), sample(kind, 3, 2, 42).unwrap());
            assert_ne!(sample(kind, 3, 2, 42).unwrap(), sample(kind, 3, 2, 43).unwrap());
        }
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("unitary".parse::<SampleKind>().unwrap(), SampleKind::Unitary);
        assert!(matches!("gaussian".parse::<SampleKind>(), Err(Error::Config(_))));
    }

    #[test]
    fn bounded_condition_number() {
        let mut r = rng(3);
        for _ in 0..20 {
            let s = bounded_condition(&mut r, 4, 10.0);
            let sv = s.singular_values();
            let cond = sv.max() / sv.min();
            assert!(cond <= 10.0 + 1e-9, "{cond}");
        }
    }
}
