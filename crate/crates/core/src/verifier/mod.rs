//! Taylor-coefficient checks, sampled sup-error, the δ-rescaling search that
//! turns a Taylor approximation into a uniform one, and the derivative-matrix
//! rank test behind the shallow lower bound.

mod epsilon;
mod rank;
mod sampling;

pub use epsilon::{
    epsilonize, taylor_certificate, ApproximationCertificate, CertificateKind, EpsilonOptions,
    PartDelta, SearchStep, DELTA_FLOOR, TAYLOR_TOL,
};
pub use rank::{derivative_matrix, derivative_matrix_rank, output_fit_residual, RankReport};
pub use sampling::{sup_error, SupErrorEstimate};

use crate::error::{Error, Result};
use crate::network::FeedforwardNetwork;
use crate::polynomial::SparsePolynomial;
use crate::series::TruncatedSeries;

/// Relative threshold under which a coefficient is treated as rounding.
pub const SUPPORT_TOL: f64 = 1e-12;

/// Brings `p` to the network's variable count.
pub(crate) fn aligned(net: &FeedforwardNetwork, p: &SparsePolynomial) -> Result<SparsePolynomial> {
    if p.n() > net.n() {
        return Err(Error::Dimension {
            expected: net.n(),
            got: p.n(),
            context: "target variable count",
        });
    }
    p.with_n(net.n())
}

/// The network's expansion at `D = deg p` and `p` on the same layout.
pub fn expansions(
    net: &FeedforwardNetwork,
    p: &SparsePolynomial,
) -> Result<(TruncatedSeries, TruncatedSeries)> {
    let p = aligned(net, p)?;
    let s = net.taylor_expand(p.degree())?;
    let t = p.to_series_on(s.layout())?;
    Ok((s, t))
}

/// Largest absolute coefficient difference between the network's Taylor
/// polynomial of degree `deg p` and `p`.
pub fn check_taylor(net: &FeedforwardNetwork, p: &SparsePolynomial) -> Result<f64> {
    let (s, t) = expansions(net, p)?;
    s.max_abs_diff(&t)
}

/// True when the expansion and `p` have the same monomial support once
/// coefficients below `SUPPORT_TOL` relative are discarded.
pub fn same_support(net: &FeedforwardNetwork, p: &SparsePolynomial) -> Result<bool> {
    let (s, t) = expansions(net, p)?;
    let scale = t
        .coefficients()
        .iter()
        .fold(0.0f64, |m, c| m.max(c.abs()))
        .max(f64::MIN_POSITIVE);
    Ok(s
        .coefficients()
        .iter()
        .zip(t.coefficients())
        .all(|(a, b)| (a.abs() > SUPPORT_TOL * scale) == (*b != 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructors::shallow_monomial;
    use crate::network::AffineLayer;
    use crate::series::{ExponentVector, Nonlinearity};

    #[test]
    fn perturbed_output_weight_is_detected() {
        let r = ExponentVector::new(vec![1, 1]);
        let net = shallow_monomial(&r, Nonlinearity::Exp).unwrap();
        let p = SparsePolynomial::monomial(1.0, r).unwrap();
        assert!(check_taylor(&net, &p).unwrap() < 1e-12);
        assert!(same_support(&net, &p).unwrap());

        let mut layers = net.layers().to_vec();
        let last = layers.last_mut().unwrap();
        let mut w = last.weights().to_vec();
        w[0] += 0.01;
        *last = AffineLayer::new(1, w.len(), w, last.bias().to_vec()).unwrap();
        let bad = FeedforwardNetwork::new(2, Nonlinearity::Exp, layers, vec![]).unwrap();
        assert!(check_taylor(&bad, &p).unwrap() >= 1e-4);
    }

    #[test]
    fn zero_network_against_zero_polynomial() {
        let l = AffineLayer::zeros(1, 2);
        let net = FeedforwardNetwork::new(2, Nonlinearity::Exp, vec![l], vec![]).unwrap();
        assert_eq!(check_taylor(&net, &SparsePolynomial::zero(2)).unwrap(), 0.0);
    }
}
