//! Degree-capped multivariate power series.
//!
//! This is the verification engine: a network's Taylor expansion is pushed
//! through its layers as [`TruncatedSeries`] values and compared coefficient
//! by coefficient against target polynomials.

mod exponent;
mod layout;
mod nonlinearity;
#[allow(clippy::module_inception)]
mod series;

pub use exponent::ExponentVector;
pub use layout::Layout;
pub use nonlinearity::Nonlinearity;
pub use series::TruncatedSeries;
