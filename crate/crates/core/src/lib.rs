//! Explicit neural networks that approximate multivariate polynomials.
//!
//! The crate builds shallow and deep networks from closed-form gadgets,
//! verifies them by pushing truncated power series through every layer,
//! computes the neuron-count bounds that separate shallow from deep
//! constructions, and trains small MLPs on the product function to probe the
//! same trade-off empirically.

pub mod bounds;
pub mod constructors;
pub mod error;
pub mod network;
pub mod numeric;
pub mod polynomial;
pub mod selftest;
pub mod series;
pub mod trainer;
pub mod verifier;

pub use error::{Error, Result};
pub use network::{AffineLayer, Annotation, Carry, FeedforwardNetwork, GateTag};
pub use polynomial::SparsePolynomial;
pub use series::{ExponentVector, Layout, Nonlinearity, TruncatedSeries};
