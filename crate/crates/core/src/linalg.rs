//! Dense complex matrix kernels.
//!
//! Everything in the crate is carried by [`CMatrix`], a dense `n × n` complex
//! matrix. This module provides the Hermitian/skew split, eigenvalue based
//! positivity tests, principal square roots (Hermitian and general), direct
//! sums and the [`OperatorTuple`] carrier for multivariate arguments.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Relative Hermiticity tolerance used by [`Hermitian::new`].
pub const HERMITIAN_REL_TOL: f64 = 1e-12;

/// Relative factor of the scale-aware PSD tolerance.
pub const PSD_REL_TOL: f64 = 1e-8;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(n: usize) -> CMatrix {
    CMatrix::zeros(n, n)
}

pub fn ensure_square(x: &CMatrix) -> Result<usize> {
    if x.nrows() != x.ncols() {
        return Err(Error::Dimension(format!(
            "expected a square matrix, got {}x{}",
            x.nrows(),
            x.ncols()
        )));
    }
    if x.nrows() == 0 {
        return Err(Error::Dimension("empty matrix".into()));
    }
    Ok(x.nrows())
}

pub fn ensure_same_shape(a: &CMatrix, b: &CMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "shape {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

pub fn is_finite(x: &CMatrix) -> bool {
    x.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest entry of `|X − X*|`.
pub fn hermitian_defect(x: &CMatrix) -> f64 {
    let n = x.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((x[(i, j)] - x[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Spectral (operator 2-) norm.
pub fn spectral_norm(x: &CMatrix) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let gram = x.adjoint() * x;
    let gram = (&gram + gram.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(gram);
    eig.eigenvalues.iter().cloned().fold(0.0, f64::max).max(0.0).sqrt()
}

/// A Hermitian matrix, symmetrized on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Hermitian(CMatrix);

impl Hermitian {
    /// Accepts `x` when `max |x_ij − conj(x_ji)| ≤ 1e−12 · (1 + ‖x‖₂)` and
    /// stores `(x + x*)/2`.
    pub fn new(x: CMatrix) -> Result<Self> {
        ensure_square(&x)?;
        let defect = hermitian_defect(&x);
        let allowed = HERMITIAN_REL_TOL * (1.0 + spectral_norm(&x));
        if defect > allowed {
            return Err(Error::NotHermitian { defect, allowed });
        }
        Ok(Self::symmetrize(&x))
    }

    /// `(x + x*)/2` without any tolerance check.
    pub fn symmetrize(x: &CMatrix) -> Self {
        Hermitian((x + x.adjoint()) * c(0.5, 0.0))
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = zeros(n);
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = c(*v, 0.0);
        }
        Hermitian(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    /// Eigenvalues in ascending order with matching unit eigenvectors (columns).
    pub fn eigh(&self) -> (Vec<f64>, CMatrix) {
        let eig = SymmetricEigen::new(self.0.clone());
        let n = self.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = zeros(n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        (values, vectors)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigh().0
    }

    pub fn min_eigen(&self) -> (f64, Vec<C64>) {
        let (vals, vecs) = self.eigh();
        (vals[0], vecs.column(0).iter().cloned().collect())
    }

    pub fn spectral_norm(&self) -> f64 {
        let vals = self.eigenvalues();
        vals.first().unwrap().abs().max(vals.last().unwrap().abs())
    }
}

/// Absolute or scale-aware tolerance for positivity checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tol {
    /// `1e−8 · max(1, ‖H‖₂)` evaluated on the matrix under test.
    Auto,
    Abs(f64),
}

impl Tol {
    pub fn resolve(self, h: &Hermitian) -> f64 {
        match self {
            Tol::Auto => default_tol(h),
            Tol::Abs(t) => t,
        }
    }
}

impl From<f64> for Tol {
    fn from(t: f64) -> Self {
        Tol::Abs(t)
    }
}

pub fn default_tol(h: &Hermitian) -> f64 {
    PSD_REL_TOL * h.spectral_norm().max(1.0)
}

pub fn re_part(x: &CMatrix) -> Result<Hermitian> {
    ensure_square(x)?;
    Ok(Hermitian::symmetrize(x))
}

/// `(X − X*)/(2i)`.
pub fn im_part(x: &CMatrix) -> Result<Hermitian> {
    ensure_square(x)?;
    Ok(Hermitian((x - x.adjoint()) * c(0.0, -0.5)))
}

/// Result of a PSD test: `margin` is the smallest eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsdVerdict {
    pub holds: bool,
    pub margin: f64,
}

pub fn is_psd(h: &Hermitian, tol: impl Into<Tol>) -> PsdVerdict {
    let t = tol.into().resolve(h);
    let margin = h.eigh().0[0];
    PsdVerdict {
        holds: margin >= -t,
        margin,
    }
}

/// Principal (PSD) square root through the spectral decomposition.
pub fn sqrt_psd(h: &Hermitian, tol: impl Into<Tol>) -> Result<Hermitian> {
    let t = tol.into().resolve(h);
    let (vals, vecs) = h.eigh();
    if vals[0] < -t {
        return Err(Error::Domain(format!(
            "square root of a matrix with eigenvalue {:.3e}",
            vals[0]
        )));
    }
    let roots: Vec<C64> = vals.iter().map(|v| c(v.max(0.0).sqrt(), 0.0)).collect();
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(roots));
    Ok(Hermitian::symmetrize(&(&vecs * d * vecs.adjoint())))
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_map(h: &Hermitian, f: impl Fn(f64) -> f64) -> Hermitian {
    let (vals, vecs) = h.eigh();
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&v| c(f(v), 0.0)),
    ));
    Hermitian::symmetrize(&(&vecs * d * vecs.adjoint()))
}

/// Principal square root of a general square matrix.
///
/// Uses the complex Schur form `X = Q T Q*` and the upper-triangular
/// recurrence `R_ii = √T_ii`, `R_ij = (T_ij − Σ R_ik R_kj)/(R_ii + R_jj)`.
/// Fails when an eigenvalue lies on the closed negative real axis.
pub fn sqrtm(x: &CMatrix) -> Result<CMatrix> {
    let n = ensure_square(x)?;
    let scale = x.norm().max(f64::MIN_POSITIVE);
    let schur = x
        .clone()
        .try_schur(f64::EPSILON, 100 * n.max(10))
        .ok_or_else(|| Error::Domain("Schur decomposition did not converge".into()))?;
    let (q, t) = schur.unpack();
    let mut r = zeros(n);
    for i in 0..n {
        let lam = t[(i, i)];
        if lam.im.abs() <= 1e-14 * scale && lam.re <= 1e-14 * scale {
            return Err(Error::Domain(format!(
                "eigenvalue {lam} on the closed negative real axis"
            )));
        }
        r[(i, i)] = lam.sqrt();
    }
    for j in 1..n {
        for i in (0..j).rev() {
            let mut s = t[(i, j)];
            for k in (i + 1)..j {
                s -= r[(i, k)] * r[(k, j)];
            }
            r[(i, j)] = s / (r[(i, i)] + r[(j, j)]);
        }
    }
    Ok(&q * r * q.adjoint())
}

/// Inverse with a reciprocal-condition guard.
pub fn inverse(x: &CMatrix) -> Result<CMatrix> {
    ensure_square(x)?;
    let inv = x
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Domain("singular matrix".into()))?;
    let cond = x.norm() * inv.norm();
    if !cond.is_finite() || cond > 1e14 {
        return Err(Error::Domain(format!(
            "matrix is numerically singular (Frobenius condition {cond:.3e})"
        )));
    }
    Ok(inv)
}

/// Kronecker product `A ⊗ B` (block `(i, j)` is `A_ij B`).
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Block-diagonal `A ⊕ B`.
pub fn block_diag(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = CMatrix::zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

/// Relative Frobenius distance `‖a − b‖ / max(1, ‖b‖)`.
pub fn rel_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

/// An ordered `k`-tuple of same-size square matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorTuple {
    items: Vec<CMatrix>,
}

impl OperatorTuple {
    pub fn new(items: Vec<CMatrix>) -> Result<Self> {
        let first = items
            .first()
            .ok_or_else(|| Error::Dimension("operator tuple needs at least one item".into()))?;
        let n = ensure_square(first)?;
        for m in &items {
            if m.shape() != (n, n) {
                return Err(Error::Dimension(format!(
                    "tuple items must all be {n}x{n}, found {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if !is_finite(m) {
                return Err(Error::Domain("non-finite matrix entry".into()));
            }
        }
        Ok(Self { items })
    }

    pub fn single(x: CMatrix) -> Result<Self> {
        Self::new(vec![x])
    }

    pub fn scalars(values: &[C64]) -> Self {
        Self {
            items: values
                .iter()
                .map(|&v| CMatrix::from_element(1, 1, v))
                .collect(),
        }
    }

    pub fn identities(n: usize, k: usize) -> Self {
        Self {
            items: vec![identity(n); k],
        }
    }

    pub fn zeros(n: usize, k: usize) -> Self {
        Self {
            items: vec![zeros(n); k],
        }
    }

    pub fn dim(&self) -> usize {
        self.items[0].nrows()
    }

    pub fn arity(&self) -> usize {
        self.items.len()
    }

    pub fn items(&self) -> &[CMatrix] {
        &self.items
    }

    pub fn into_items(self) -> Vec<CMatrix> {
        self.items
    }

    pub fn get(&self, i: usize) -> &CMatrix {
        &self.items[i]
    }

    pub fn ensure_compatible(&self, other: &OperatorTuple) -> Result<()> {
        if self.arity() != other.arity() {
            return Err(Error::Arity {
                expected: self.arity(),
                got: other.arity(),
            });
        }
        if self.dim() != other.dim() {
            return Err(Error::Dimension(format!(
                "tuple dimensions {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        Self {
            items: self.items.iter().map(f).collect(),
        }
    }

    pub fn zip_map(
        &self,
        other: &OperatorTuple,
        f: impl Fn(&CMatrix, &CMatrix) -> CMatrix,
    ) -> Result<Self> {
        self.ensure_compatible(other)?;
        Ok(Self {
            items: self
                .items
                .iter()
                .zip(&other.items)
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }

    /// `self + t·other`.
    pub fn axpy(&self, t: f64, other: &OperatorTuple) -> Result<Self> {
        self.zip_map(other, |a, b| a + b * c(t, 0.0))
    }

    /// `(1 − λ)·self + λ·other`.
    pub fn lerp(&self, lambda: f64, other: &OperatorTuple) -> Result<Self> {
        self.zip_map(other, |a, b| a * c(1.0 - lambda, 0.0) + b * c(lambda, 0.0))
    }

    pub fn scale(&self, t: f64) -> Self {
        self.map(|a| a * c(t, 0.0))
    }

    /// Simultaneous conjugation `U* X_i U`; `U` may be rectangular.
    pub fn conjugate(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.dim() {
            return Err(Error::Dimension(format!(
                "conjugating {}-dimensional tuple by a {}x{} matrix",
                self.dim(),
                u.nrows(),
                u.ncols()
            )));
        }
        let ua = u.adjoint();
        Ok(self.map(|x| &ua * x * u))
    }

    /// Simultaneous similarity `S⁻¹ X_i S`.
    pub fn similarity(&self, s: &CMatrix) -> Result<Self> {
        let si = inverse(s)?;
        Ok(self.map(|x| &si * x * s))
    }

    /// `X_i ⊗ V` for every item.
    pub fn kron_right(&self, v: &CMatrix) -> Self {
        self.map(|x| kron(x, v))
    }

    /// Restriction to the coordinate block `[start, start + len)`.
    pub fn block(&self, start: usize, len: usize) -> Self {
        self.map(|x| x.view((start, start), (len, len)).into_owned())
    }

    /// Largest spectral norm among the items.
    pub fn norm(&self) -> f64 {
        self.items.iter().map(spectral_norm).fold(0.0, f64::max)
    }
}

/// Componentwise block-diagonal stacking `(A_i ⊕ B_i)`.
pub fn direct_sum(a: &OperatorTuple, b: &OperatorTuple) -> Result<OperatorTuple> {
    if a.arity() != b.arity() {
        return Err(Error::Arity {
            expected: a.arity(),
            got: b.arity(),
        });
    }
    Ok(OperatorTuple {
        items: a
            .items
            .iter()
            .zip(&b.items)
            .map(|(x, y)| block_diag(x, y))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m(rows: &[&[C64]]) -> CMatrix {
        let n = rows.len();
        CMatrix::from_fn(n, rows[0].len(), |i, j| rows[i][j])
    }

    #[test]
    fn re_part_examples() {
        let x = m(&[&[c(0.0, 1.0)]]);
        assert_eq!(re_part(&x).unwrap().as_matrix()[(0, 0)], c(0.0, 0.0));

        let x = m(&[&[c(1.0, 2.0), c(3.0, 0.0)], &[c(-1.0, 0.0), c(4.0, 0.0)]]);
        let expect = m(&[&[c(1.0, 0.0), c(1.0, 0.0)], &[c(1.0, 0.0), c(4.0, 0.0)]]);
        assert_eq!(re_part(&x).unwrap().as_matrix(), &expect);

        let h = m(&[&[c(2.0, 0.0), c(1.0, -1.0)], &[c(1.0, 1.0), c(5.0, 0.0)]]);
        assert_eq!(re_part(&h).unwrap().as_matrix(), &h);
    }

    #[test]
    fn im_part_examples() {
        let x = m(&[&[c(0.0, 1.0)]]);
        assert_eq!(im_part(&x).unwrap().as_matrix()[(0, 0)], c(1.0, 0.0));
        let x = m(&[&[c(1.0, 2.0)]]);
        assert_eq!(im_part(&x).unwrap().as_matrix()[(0, 0)], c(2.0, 0.0));
        let h = m(&[&[c(2.0, 0.0), c(1.0, -1.0)], &[c(1.0, 1.0), c(5.0, 0.0)]]);
        assert_eq!(im_part(&h).unwrap().as_matrix().norm(), 0.0);
    }

    #[test]
    fn non_square_is_rejected() {
        let x = CMatrix::zeros(2, 3);
        assert!(matches!(re_part(&x), Err(Error::Dimension(_))));
        assert!(matches!(im_part(&x), Err(Error::Dimension(_))));
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let x = m(&[&[c(1.0, 0.0), c(1.0, 0.0)], &[c(0.0, 0.0), c(1.0, 0.0)]]);
        assert!(matches!(Hermitian::new(x), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn psd_examples() {
        let v = is_psd(&Hermitian::new(identity(3)).unwrap(), 0.0);
        assert!(v.holds);
        assert_abs_diff_eq!(v.margin, 1.0, epsilon = 1e-14);

        let v = is_psd(&Hermitian::from_real_diagonal(&[-1.0]), 1e-8);
        assert!(!v.holds);
        assert_eq!(v.margin, -1.0);

        let h = m(&[&[c(2.0, 0.0), c(1.0, 0.0)], &[c(1.0, 0.0), c(2.0, 0.0)]]);
        let v = is_psd(&Hermitian::new(h).unwrap(), Tol::Auto);
        assert!(v.holds);
        assert_abs_diff_eq!(v.margin, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn sqrt_psd_examples() {
        let r = sqrt_psd(&Hermitian::new(identity(2)).unwrap(), Tol::Auto).unwrap();
        assert_abs_diff_eq!((r.as_matrix() - identity(2)).norm(), 0.0, epsilon = 1e-14);

        let r = sqrt_psd(&Hermitian::from_real_diagonal(&[4.0]), Tol::Auto).unwrap();
        assert_abs_diff_eq!(r.as_matrix()[(0, 0)].re, 2.0, epsilon = 1e-14);

        let r = sqrt_psd(&Hermitian::from_real_diagonal(&[4.0, 9.0]), Tol::Auto).unwrap();
        let expect = Hermitian::from_real_diagonal(&[2.0, 3.0]);
        assert_abs_diff_eq!((r.as_matrix() - expect.as_matrix()).norm(), 0.0, epsilon = 1e-13);

        let err = sqrt_psd(&Hermitian::from_real_diagonal(&[1.0, -0.5]), Tol::Auto);
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn sqrtm_handles_non_normal_input() {
        // [[4, 1], [0, 9]] has principal root [[2, 1/5], [0, 3]].
        let x = m(&[&[c(4.0, 0.0), c(1.0, 0.0)], &[c(0.0, 0.0), c(9.0, 0.0)]]);
        let r = sqrtm(&x).unwrap();
        let expect = m(&[&[c(2.0, 0.0), c(0.2, 0.0)], &[c(0.0, 0.0), c(3.0, 0.0)]]);
        assert!((&r - expect).norm() < 1e-12);

        // principal branch of sqrt(i) has positive real part
        let r = sqrtm(&m(&[&[c(0.0, 1.0)]])).unwrap();
        assert!((r[(0, 0)] - c(0.5f64.sqrt(), 0.5f64.sqrt())).norm() < 1e-14);

        assert!(sqrtm(&m(&[&[c(-1.0, 0.0)]])).is_err());
    }

    #[test]
    fn direct_sum_examples() {
        let a = OperatorTuple::scalars(&[c(1.0, 0.0)]);
        let b = OperatorTuple::scalars(&[c(2.0, 0.0)]);
        let s = direct_sum(&a, &b).unwrap();
        assert_eq!(
            s.get(0),
            &m(&[&[c(1.0, 0.0), c(0.0, 0.0)], &[c(0.0, 0.0), c(2.0, 0.0)]])
        );

        let a = OperatorTuple::single(m(&[&[c(1.0, 1.0), c(2.0, 0.0)], &[c(3.0, 0.0), c(4.0, 0.0)]]))
            .unwrap();
        let s = direct_sum(&a, &OperatorTuple::zeros(1, 1)).unwrap();
        assert_eq!(s.dim(), 3);
        assert_eq!(s.get(0).view((0, 0), (2, 2)).into_owned(), a.get(0).clone());
        assert!(s.get(0).row(2).iter().all(|z| z.norm() == 0.0));
        assert!(s.get(0).column(2).iter().all(|z| z.norm() == 0.0));

        let a = OperatorTuple::scalars(&[c(1.0, 0.0), c(3.0, 0.0)]);
        let b = OperatorTuple::scalars(&[c(2.0, 0.0), c(4.0, 0.0)]);
        let s = direct_sum(&a, &b).unwrap();
        assert_eq!(s.arity(), 2);
        assert_eq!(s.get(1)[(1, 1)], c(4.0, 0.0));
        assert_eq!(s.get(1)[(0, 1)], c(0.0, 0.0));

        let err = direct_sum(&a, &OperatorTuple::scalars(&[c(1.0, 0.0)]));
        assert!(matches!(err, Err(Error::Arity { .. })));
    }

    #[test]
    fn tuple_rejects_mixed_dimensions() {
        let err = OperatorTuple::new(vec![identity(2), identity(3)]);
        assert!(matches!(err, Err(Error::Dimension(_))));
        assert!(OperatorTuple::new(vec![]).is_err());
    }

    mod properties {
        use super::*;
        use crate::sampling;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn re_im_reconstruct(seed in any::<u64>(), n in 1usize..7) {
                let x = sampling::ginibre(&mut sampling::rng(seed), n, n) * c(3.0, 0.0);
                let back = re_part(&x).unwrap().into_matrix()
                    + im_part(&x).unwrap().into_matrix() * c(0.0, 1.0);
                let scale = x.norm();
                for (a, b) in back.iter().zip(x.iter()) {
                    prop_assert!((a - b).norm() <= 1e-14 * scale);
                }
            }

            #[test]
            fn psd_margin_is_conjugation_stable(seed in any::<u64>(), n in 1usize..7) {
                let mut r = sampling::rng(seed);
                let h = Hermitian::new(sampling::hermitian(&mut r, n)).unwrap();
                let u = sampling::unitary(&mut r, n);
                let conj = Hermitian::new(u.adjoint() * h.as_matrix() * &u).unwrap();
                let a = is_psd(&h, Tol::Auto).margin;
                let b = is_psd(&conj, Tol::Auto).margin;
                prop_assert!((a - b).abs() <= 1e-10);
            }

            #[test]
            fn direct_sum_spectrum_is_union(seed in any::<u64>(), n in 1usize..5, m in 1usize..5) {
                let mut r = sampling::rng(seed);
                let a = sampling::hermitian(&mut r, n);
                let b = sampling::hermitian(&mut r, m);
                let s = direct_sum(
                    &OperatorTuple::single(a.clone()).unwrap(),
                    &OperatorTuple::single(b.clone()).unwrap(),
                ).unwrap();
                let mut expect = Hermitian::new(a).unwrap().eigenvalues();
                expect.extend(Hermitian::new(b).unwrap().eigenvalues());
                expect.sort_by(f64::total_cmp);
                let got = Hermitian::new(s.get(0).clone()).unwrap().eigenvalues();
                for (g, e) in got.iter().zip(&expect) {
                    prop_assert!((g - e).abs() <= 1e-9);
                }
            }
        }

        #[test]
        fn sqrt_psd_squares_back() {
            let mut r = sampling::rng(2024);
            for i in 0..1000 {
                let n = 1 + i % 8;
                let rank = 1 + (i / 8) % n;
                let h = Hermitian::new(sampling::psd(&mut r, n, rank)).unwrap();
                let root = sqrt_psd(&h, Tol::Auto).unwrap();
                assert!(is_psd(&root, Tol::Auto).holds);
                let sq = root.as_matrix() * root.as_matrix();
                let err = (&sq - h.as_matrix()).norm() / h.as_matrix().norm();
                assert!(err <= 1e-10, "trial {i}: {err:e}");
            }
        }

        #[test]
        fn sqrtm_squares_back_on_accretive_input() {
            let mut r = sampling::rng(99);
            for i in 0..500 {
                let n = 1 + i % 8;
                let x = sampling::real_positive(&mut r, n);
                let root = sqrtm(&x).unwrap();
                assert!((&root * &root - &x).norm() <= 1e-10 * x.norm());
                // principal branch: spectrum in the open right half-plane
                let t = root.clone().schur().unpack().1;
                assert!((0..n).all(|j| t[(j, j)].re > 0.0));
            }
        }
    }
}
