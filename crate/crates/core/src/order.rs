//! The real-positive preorder.
//!
//! `A ≤_Re B` holds when `Re(B − A)` is positive semidefinite, itemwise for
//! tuples. Equal real parts compare both ways, so this is only a preorder.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{c, re_part, CMatrix, Hermitian, OperatorTuple, Tol, C64};
use crate::sampling;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderVerdict {
    pub holds: bool,
    /// Smallest eigenvalue of the relevant Hermitian part.
    pub margin: f64,
    /// Unit eigenvector for `margin`, present when the relation fails.
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        with = "crate::json::cvec"
    )]
    pub witness_vector: Option<Vec<C64>>,
}

impl OrderVerdict {
    /// Verdict for `H ⪰ 0`.
    pub fn from_hermitian(h: &Hermitian, tol: impl Into<Tol>) -> Self {
        let t = tol.into().resolve(h);
        let (margin, v) = h.min_eigen();
        let holds = margin >= -t;
        OrderVerdict {
            holds,
            margin,
            witness_vector: (!holds).then_some(v),
        }
    }

    /// Conjunction, keeping the smaller margin and its witness.
    pub fn and(self, other: OrderVerdict) -> OrderVerdict {
        let holds = self.holds && other.holds;
        let (mut pick, rest) = if other.margin < self.margin {
            (other, self)
        } else {
            (self, other)
        };
        pick.holds = holds;
        if !holds && pick.witness_vector.is_none() {
            pick.witness_vector = rest.witness_vector;
        }
        pick
    }
}

/// `X ≥_Re 0`.
pub fn is_real_positive(x: &CMatrix, tol: impl Into<Tol>) -> Result<OrderVerdict> {
    Ok(OrderVerdict::from_hermitian(&re_part(x)?, tol))
}

/// Membership in `ℙ_Re`: every item has `λ_min(Re X_i) > tol`.
pub fn in_p_re(x: &OperatorTuple, tol: f64) -> bool {
    x.items()
        .iter()
        .all(|m| re_part(m).map(|h| h.min_eigen().0 > tol).unwrap_or(false))
}

/// `a ≤_Re b` for single matrices.
pub fn real_leq_matrix(a: &CMatrix, b: &CMatrix, tol: impl Into<Tol>) -> Result<OrderVerdict> {
    crate::linalg::ensure_same_shape(a, b)?;
    is_real_positive(&(b - a), tol)
}

/// `A ≤_Re B` for tuples; the margin is the minimum over items.
pub fn real_leq(a: &OperatorTuple, b: &OperatorTuple, tol: impl Into<Tol>) -> Result<OrderVerdict> {
    a.ensure_compatible(b)?;
    let tol = tol.into();
    let mut verdict: Option<OrderVerdict> = None;
    for (x, y) in a.items().iter().zip(b.items()) {
        let v = real_leq_matrix(x, y, tol)?;
        verdict = Some(match verdict {
            None => v,
            Some(acc) => acc.and(v),
        });
    }
    Ok(verdict.expect("tuples are non-empty"))
}

/// Draws `(A, B)` in `ℙ_Re` with `A ≤_Re B`.
///
/// `B = A + P` where `Re P` is PSD of random rank (possibly zero) and the
/// imaginary part of `B` is drawn independently of `A`.
pub fn ordered_pair_with<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    k: usize,
) -> (OperatorTuple, OperatorTuple) {
    let mut a = Vec::with_capacity(k);
    let mut b = Vec::with_capacity(k);
    for _ in 0..k {
        let ra = sampling::hermitian_pd(rng, n);
        let ia = sampling::hermitian(rng, n);
        let rank = rng.gen_range(0..=n);
        let rb = &ra + sampling::psd(rng, n, rank);
        let ib = sampling::hermitian(rng, n);
        a.push(ra + ia * c(0.0, 1.0));
        b.push(rb + ib * c(0.0, 1.0));
    }
    (
        OperatorTuple::new(a).expect("uniform sizes"),
        OperatorTuple::new(b).expect("uniform sizes"),
    )
}

pub fn sample_ordered_pair(n: usize, k: usize, seed: u64) -> (OperatorTuple, OperatorTuple) {
    ordered_pair_with(&mut sampling::rng(seed), n, k)
}
