//! Spectra of Schrödinger operators on weighted graphs and their
//! permutation-voltage coverings.
//!
//! The crate is generic over the scalar: [`Scalar`] covers exact rationals
//! and floats, [`Real`] the floating types used by the eigensolvers.

pub mod amenability;
pub mod bundle;
pub mod cheeger;
pub mod covering;
pub mod error;
pub mod graph;
pub mod scalar;
pub mod spectral;
pub mod transplant;

pub use error::{Error, Result};
pub use scalar::{Exact, Real, Scalar};

/// Double-precision graph.
pub type Graph = graph::WeightedGraph<f64>;
/// Double-precision operator.
pub type Operator = graph::SchrodingerOp<f64>;
/// Double-precision vertex function.
pub type Function = graph::VertexFunction<f64>;
/// Double-precision cover.
pub type Cover = covering::CoveringGraph<f64>;
/// Graph with exact rational weights and measure.
pub type ExactGraph = graph::WeightedGraph<Exact>;
/// Operator with exact rational data.
pub type ExactOperator = graph::SchrodingerOp<Exact>;
