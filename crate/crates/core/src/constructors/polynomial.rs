use std::fmt;
use std::str::FromStr;

use super::builder::{Builder, Form};
use super::{deep_monomial, shallow_monomial, tree_monomial};
use crate::error::{Error, Result};
use crate::network::combine::combine;
use crate::network::{Carry, FeedforwardNetwork};
use crate::polynomial::SparsePolynomial;
use crate::series::{ExponentVector, Nonlinearity};

/// Which monomial construction [`build_polynomial_network`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Shallow,
    Deep,
    /// Layered product tree with `k` hidden layers per monomial.
    Tree { k: usize },
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Shallow => f.write_str("shallow"),
            Mode::Deep => f.write_str("deep"),
            Mode::Tree { k } => write!(f, "tree(k={k})"),
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    /// Accepts `shallow`, `deep`, or `tree` (depth 2) / `tree:<k>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shallow" => Ok(Mode::Shallow),
            "deep" => Ok(Mode::Deep),
            "tree" => Ok(Mode::Tree { k: 2 }),
            _ => s
                .strip_prefix("tree:")
                .and_then(|k| k.parse().ok())
                .filter(|&k| k >= 1)
                .map(|k| Mode::Tree { k })
                .ok_or_else(|| Error::Invalid(format!("unknown construction mode `{s}`"))),
        }
    }
}

/// The monomial network for `x^r` under `mode`.
pub fn monomial_network(r: &ExponentVector, sigma: Nonlinearity, mode: Mode) -> Result<FeedforwardNetwork> {
    match mode {
        Mode::Shallow => shallow_monomial(r, sigma),
        Mode::Deep => deep_monomial(r, sigma),
        Mode::Tree { k } => tree_monomial(r, k, sigma),
    }
}

/// Relative size below which a leftover coefficient counts as rounding.
const RESIDUE_TOL: f64 = 1e-12;

/// A network whose Taylor polynomial of degree `deg p` is `p`.
///
/// Each monomial `cⱼ x^{rⱼ}` gets its own network with the output layer
/// scaled by `cⱼ`. When a monomial's gadget leaves residue terms of degree
/// between `deg rⱼ` and `deg p`, extra monomial networks with opposite
/// coefficients are added to the same part (tagged as corrections) until
/// nothing below the cap survives. Parts are summed with exact carries and
/// the constant term goes into the output bias.
pub fn build_polynomial_network(
    p: &SparsePolynomial,
    sigma: Nonlinearity,
    mode: Mode,
) -> Result<FeedforwardNetwork> {
    let cap = p.degree();
    let constant = p.constant_term();
    let families = p
        .monomials()
        .iter()
        .filter(|(_, r)| r.degree() > 0)
        .map(|(c, r)| family(*c, r, cap, sigma, mode))
        .collect::<Result<Vec<_>>>()?;
    let net = match families.len() {
        0 => {
            let b = Builder::new(p.n(), sigma);
            b.finish(&[Form::default()])?
        }
        1 => families.into_iter().next().expect("one family"),
        _ => combine(&families, Carry::Exact { cap }, true)?,
    };
    Ok(net.shift_output(constant))
}

fn family(
    coefficient: f64,
    r: &ExponentVector,
    cap: u32,
    sigma: Nonlinearity,
    mode: Mode,
) -> Result<FeedforwardNetwork> {
    let main = monomial_network(r, sigma, mode)?.scale_output(coefficient)?;
    let target = SparsePolynomial::monomial(coefficient, r.clone())?.to_series(cap)?;
    let mut members = vec![main];
    let tol = RESIDUE_TOL * coefficient.abs();
    for _ in 0..=cap {
        let current = if members.len() == 1 {
            members[0].clone()
        } else {
            combine(&members, Carry::Exact { cap }, false)?
        };
        let residue = target.sub(&current.taylor_expand(cap)?)?;
        let pending: Vec<(f64, ExponentVector)> = residue
            .terms()
            .filter(|(_, c)| c.abs() > tol)
            .map(|(e, c)| (c, e.clone()))
            .collect();
        if pending.is_empty() {
            return Ok(current);
        }
        if let Some((_, e)) = pending.iter().find(|(_, e)| e.degree() <= r.degree()) {
            return Err(Error::Invalid(format!(
                "network for x^({r}) misses its own degree-{} term at ({e})",
                e.degree()
            )));
        }
        for (c, e) in pending {
            members.push(
                monomial_network(&e, sigma, mode)?
                    .scale_output(c)?
                    .mark_correction(),
            );
        }
    }
    Err(Error::Invalid(format!(
        "residue cancellation for x^({r}) did not settle below degree {cap}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_parsing() {
        assert_eq!("shallow".parse::<Mode>().unwrap(), Mode::Shallow);
        assert_eq!("tree:3".parse::<Mode>().unwrap(), Mode::Tree { k: 3 });
        assert!("tree:0".parse::<Mode>().is_err());
        assert!("wide".parse::<Mode>().is_err());
    }

    #[test]
    fn single_monomial_is_the_monomial_network() {
        let p: SparsePolynomial = "x1^2*x2".parse().unwrap();
        let r = ExponentVector::new(vec![2, 1]);
        for mode in [Mode::Shallow, Mode::Deep] {
            let a = build_polynomial_network(&p, Nonlinearity::Exp, mode).unwrap();
            let b = monomial_network(&r, Nonlinearity::Exp, mode).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn constant_only() {
        let p: SparsePolynomial = "3.5".parse().unwrap();
        let net = build_polynomial_network(&p, Nonlinearity::Exp, Mode::Deep).unwrap();
        assert_eq!(net.depth(), 0);
        assert_eq!(net.eval(&[]).unwrap(), vec![3.5]);
    }
}
