//! Sampling-based certification and refutation.
//!
//! A passing report means no violation was found at the stated trial
//! budget and seed; it is evidence, never a proof.

pub mod block;
pub mod choi;
pub mod derivative;
pub mod monotone;
pub mod rigidity;

pub use block::{block_concavity_construction, lipschitz_probe, BlockConstructionReport, LipschitzReport};
pub use choi::{amplified_positivity, choi_of_linear_map, is_cp, ChoiMatrix, CpReport, FnMap, KrausMap, LinearMap};
pub use derivative::{
    certify_derivative, derivative_criterion, frechet_derivative, integral_reconstruction, DerivativeMap,
    FrechetEstimate,
};
pub use monotone::{certify_concave, certify_monotone, replay_concave, replay_monotone, DEFAULT_LAMBDAS};
pub use rigidity::{affine_certificate, affine_fit, hermitian_part_map, re_independence_test, AffineFit};

use crate::error::Result;
use crate::linalg::{re_part, CMatrix};

/// Default absolute tolerance for order checks on sampled outputs.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Smallest eigenvalue of `Re(x)`.
pub(crate) fn re_margin(x: &CMatrix) -> Result<f64> {
    Ok(re_part(x)?.min_eigen().0)
}

pub(crate) fn check_dims(dims: &[usize], trials: usize) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(crate::Error::Config("dims must be a non-empty list of positive sizes".into()));
    }
    if trials == 0 {
        return Err(crate::Error::Config("trials must be positive".into()));
    }
    Ok(())
}
