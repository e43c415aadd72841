//! Numerical laboratory for the real-positive operator order.

pub mod acceptance;
pub mod certify;
pub mod cli;
pub mod error;
pub mod free;
pub mod hypograph;
pub mod json;
pub mod linalg;
pub mod means;
pub mod order;
pub mod pluri;
pub mod report;
pub mod sampling;

pub use error::{Error, Result};
pub use linalg::{CMatrix, Hermitian, OperatorTuple, Tol, C64};
