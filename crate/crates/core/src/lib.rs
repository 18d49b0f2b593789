//! Finite groupoids, their (pre-)equivalences, and Fell-bundle equivalences in a
//! complex-matrix model, with the balanced tensor and quotient constructions that
//! compose two equivalences into a third.
//!
//! Matrix-bearing types are generic over the real scalar `T: Real` (`f32` or
//! `f64`); the aliases at the crate root fix `f64`.

pub mod action_space;
pub mod equiv_bundle;
pub mod error;
pub mod fell_bundle;
pub mod gen;
pub mod groupoid;
pub mod io;
pub mod linalg;
pub mod quotient_bundle;
pub mod report;
pub mod scalar;
pub mod tensor_compose;

pub use error::{Error, Result};
pub use report::{Coverage, Report, Status};
pub use scalar::{Real, C};

pub type CMatrix = linalg::CMat<f64>;
pub type MatrixSubspace = linalg::MatrixSubspace<f64>;
pub type FellBundle = fell_bundle::FellBundle<f64>;
pub type BundleSpace = equiv_bundle::BundleSpace<f64>;
pub type TensorBundle = tensor_compose::TensorBundle<f64>;
pub type QuotientBundle = quotient_bundle::QuotientBundle<f64>;
