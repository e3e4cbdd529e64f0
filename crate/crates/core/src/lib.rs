//! q-deformed Fock space, Wick products and the gradient bimodule.

pub mod error;
pub mod numerics;
pub mod partitions;
pub mod qfock;
pub mod wick;
pub mod gradient;
pub mod cohomology;
pub mod torus;
pub mod ao;
pub mod suite;

pub use error::{QError, Result};
pub use numerics::{CMat, CVec, SpectralReport, C64};
pub use qfock::{FockOperator, FockParams, FockVector};
