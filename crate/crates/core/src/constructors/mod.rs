//! Explicit network constructions: sign-pattern gadgets, square, product
//! and identity gates, binary exponentiation, layered product trees, the
//! Vandermonde univariate network and sparse-polynomial sums.

pub(crate) mod builder;
mod deep;
pub(crate) mod gates;
mod polynomial;
mod shallow;
mod tree;
mod univariate;

pub use deep::{deep_monomial, deep_power};
pub use polynomial::{build_polynomial_network, monomial_network, Mode};
pub use shallow::{shallow_monomial, shallow_product_gadget};
pub use tree::{tree_monomial, tree_product, TreePlan};
pub use univariate::{univariate_network, Univariate};

use crate::error::Result;
use crate::network::FeedforwardNetwork;
use crate::series::Nonlinearity;

/// Single-gate networks on fresh inputs, for inspection and tests.
pub mod gate_networks {
    use super::builder::Builder;
    use super::gates;
    use super::*;
    use crate::network::GateTag;

    /// `x ↦ x²` (three neurons).
    pub fn square_gate(sigma: Nonlinearity) -> Result<FeedforwardNetwork> {
        let mut b = Builder::new(1, sigma);
        let x = b.inputs();
        let out = b.layer(vec![gates::square(sigma, &x[0])?])?;
        b.finish(&out)
    }

    /// `(x, y) ↦ xy` (four neurons).
    pub fn product_gate(sigma: Nonlinearity) -> Result<FeedforwardNetwork> {
        let mut b = Builder::new(2, sigma);
        let x = b.inputs();
        let out = b.layer(vec![gates::product(sigma, &x[0], &x[1])?])?;
        b.finish(&out)
    }

    /// `x ↦ x` (one neuron).
    pub fn identity_gate(sigma: Nonlinearity) -> Result<FeedforwardNetwork> {
        let mut b = Builder::new(1, sigma);
        let x = b.inputs();
        let out = b.layer(vec![gates::identity(sigma, &x[0], GateTag::Identity)?])?;
        b.finish(&out)
    }
}
