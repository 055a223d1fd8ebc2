use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar activation functions. Every analytic entry can produce its Taylor
/// coefficients about an arbitrary center, which the series engine needs
/// because gadget pre-activations may carry constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Nonlinearity {
    Exp,
    Sigmoid,
    Tanh,
    Softplus,
    Relu,
}

impl Nonlinearity {
    pub const ALL: [Nonlinearity; 5] = [
        Nonlinearity::Exp,
        Nonlinearity::Sigmoid,
        Nonlinearity::Tanh,
        Nonlinearity::Softplus,
        Nonlinearity::Relu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Nonlinearity::Exp => "exp",
            Nonlinearity::Sigmoid => "sigmoid",
            Nonlinearity::Tanh => "tanh",
            Nonlinearity::Softplus => "softplus",
            Nonlinearity::Relu => "relu",
        }
    }

    pub fn is_analytic(self) -> bool {
        !matches!(self, Nonlinearity::Relu)
    }

    pub fn eval(self, x: f64) -> f64 {
        match self {
            Nonlinearity::Exp => x.exp(),
            Nonlinearity::Sigmoid => sigmoid(x),
            Nonlinearity::Tanh => x.tanh(),
            Nonlinearity::Softplus => softplus(x),
            Nonlinearity::Relu => x.max(0.0),
        }
    }

    /// First derivative, used by backpropagation.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Nonlinearity::Exp => x.exp(),
            Nonlinearity::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            Nonlinearity::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Nonlinearity::Softplus => sigmoid(x),
            Nonlinearity::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// The first `count` Taylor coefficients `σ₀, σ₁, …` of `σ(center + t)`
    /// in powers of `t`.
    pub fn taylor(self, center: f64, count: usize) -> Result<Vec<f64>> {
        let mut c = vec![0.0; count];
        if count == 0 {
            return Ok(c);
        }
        match self {
            Nonlinearity::Exp => {
                let mut t = center.exp();
                for (j, slot) in c.iter_mut().enumerate() {
                    if j > 0 {
                        t /= j as f64;
                    }
                    *slot = t;
                }
            }
            // y' = y - y²
            Nonlinearity::Sigmoid => riccati(&mut c, sigmoid(center), 0.0, 1.0),
            // y' = 1 - y²
            Nonlinearity::Tanh => riccati(&mut c, center.tanh(), 1.0, 0.0),
            Nonlinearity::Softplus => {
                let mut s = vec![0.0; count];
                riccati(&mut s, sigmoid(center), 0.0, 1.0);
                c[0] = softplus(center);
                for k in 1..count {
                    c[k] = s[k - 1] / k as f64;
                }
            }
            Nonlinearity::Relu => {
                if center == 0.0 {
                    return Err(Error::NonAnalytic("relu"));
                }
                if center > 0.0 {
                    c[0] = center;
                    if count > 1 {
                        c[1] = 1.0;
                    }
                }
            }
        }
        Ok(c)
    }

    /// Taylor coefficients about the origin.
    pub fn maclaurin(self, count: usize) -> Result<Vec<f64>> {
        self.taylor(0.0, count)
    }
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Nonlinearity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Nonlinearity::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown activation `{s}`")))
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Series solution of `y' = a + b·y - y²` with `y(0) = y0`, written into `c`.
fn riccati(c: &mut [f64], y0: f64, a: f64, b: f64) {
    c[0] = y0;
    for k in 0..c.len() - 1 {
        let mut sq = 0.0;
        for i in 0..=k {
            sq += c[i] * c[k - i];
        }
        let lin = b * c[k] + if k == 0 { a } else { 0.0 };
        c[k + 1] = (lin - sq) / (k + 1) as f64;
    }
}
