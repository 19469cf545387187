//! Sparse kernel principal components with elastic-net coefficient vectors,
//! applied to one-class outlier detection with a compressed scoring model.
//!
//! The numeric core is generic over the scalar type (`f32` or `f64`) through
//! the [`Float`] trait; the aliases at the crate root fix `f64`, which is
//! what the CLI uses.

pub mod basis;
pub mod detector;
pub mod enet;
pub mod error;
pub mod eval;
pub mod float;
pub mod kernel;
pub mod linalg;
pub mod synth;

pub use error::{Error, Result};
pub use float::Float;

/// f64 aliases for the main artifacts.
pub type Mat64 = linalg::Mat<f64>;
pub type DataMatrix64 = kernel::DataMatrix<f64>;
pub type GramMatrix64 = kernel::GramMatrix<f64>;
pub type SparseBasis64 = basis::SparseBasis<f64>;
pub type AlgoConfig64 = basis::AlgoConfig<f64>;
pub type DetectorModel64 = detector::DetectorModel<f64>;
