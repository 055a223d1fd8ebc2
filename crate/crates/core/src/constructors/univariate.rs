use nalgebra::{DMatrix, DVector};

use super::builder::{Builder, Form, Fragment};
use super::gates;
use crate::error::{Error, Result};
use crate::network::{FeedforwardNetwork, GateTag};
use crate::polynomial::SparsePolynomial;
use crate::series::{ExponentVector, Nonlinearity};

/// Systems with a larger 2-norm condition number are refused.
const MAX_CONDITION: f64 = 1e12;

/// A univariate construction and the conditioning of the system behind it.
#[derive(Debug, Clone)]
pub struct Univariate {
    pub network: FeedforwardNetwork,
    pub nodes: Vec<f64>,
    pub condition: f64,
}

/// One hidden layer of `d + 1` neurons `σ(aᵢ x)` whose output weights solve
/// `Σᵢ wᵢ σ_j aᵢ^j = p_j` for `j = 0..=d`.
///
/// Nodes are Chebyshev points on `[−1, 1]`; an ill-conditioned system is
/// retried once with the nodes doubled.
pub fn univariate_network(p: &SparsePolynomial, sigma: Nonlinearity) -> Result<Univariate> {
    if p.n() != 1 {
        return Err(Error::Dimension {
            expected: 1,
            got: p.n(),
            context: "univariate target variable count",
        });
    }
    let d = p.degree() as usize;
    let s = gates::coefficients(sigma, d + 1)?;
    if let Some(j) = s.iter().position(|&c| c == 0.0) {
        return Err(Error::ZeroCoefficient {
            name: sigma.name(),
            degree: j,
            required_by: "the Vandermonde construction",
        });
    }
    let target = DVector::from_fn(d + 1, |j, _| p.coefficient(&ExponentVector::new(vec![j as u32])));
    let chebyshev: Vec<f64> = (0..=d)
        .map(|i| (std::f64::consts::PI * (2 * i + 1) as f64 / (2 * (d + 1)) as f64).cos())
        .map(|a| if a.abs() < 1e-15 { 0.0 } else { a })
        .collect();

    let mut worst = f64::INFINITY;
    for scale in [1.0, 2.0] {
        let nodes: Vec<f64> = chebyshev.iter().map(|a| a * scale).collect();
        let m = DMatrix::from_fn(d + 1, d + 1, |j, i| s[j] * nodes[i].powi(j as i32));
        let sv = m.singular_values();
        let (max, min) = sv
            .iter()
            .fold((0.0f64, f64::INFINITY), |(hi, lo), &x| (hi.max(x), lo.min(x)));
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        worst = worst.min(condition);
        if condition > MAX_CONDITION {
            continue;
        }
        let Some(w) = m.lu().solve(&target) else {
            continue;
        };
        let mut b = Builder::new(1, sigma);
        let x = b.inputs();
        let out = b.layer(vec![Fragment {
            pres: nodes
                .iter()
                .map(|&a| if a == 0.0 { Form::default() } else { x[0].scaled(a) })
                .collect(),
            out: w.iter().copied().collect(),
            out_const: 0.0,
            tag: GateTag::Vandermonde,
        }])?;
        return Ok(Univariate {
            network: b.finish(&out)?,
            nodes,
            condition,
        });
    }
    Err(Error::IllConditioned { condition: worst })
}
