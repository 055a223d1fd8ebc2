use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::FeedforwardNetwork;
use crate::numeric::json_f64;
use crate::series::{ExponentVector, Layout, TruncatedSeries};

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOL: f64 = 1e-9;

/// Rank of a derivative matrix.
///
/// `rank` is exact: every entry is a product of binary floating-point
/// weights, hence a dyadic rational, and elimination runs over the
/// integers. `numerical_rank` counts singular values above
/// `RANK_TOL · σ_max` and falls short of `rank` when the matrix is badly
/// conditioned, as Vandermonde blocks on many nodes are.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankReport {
    pub r: Vec<u32>,
    pub rank: usize,
    pub numerical_rank: usize,
    pub rows: usize,
    pub cols: usize,
    #[serde(serialize_with = "json_f64::many")]
    pub singular_values: Vec<f64>,
}

impl RankReport {
    pub fn full_row_rank(&self) -> bool {
        self.rank == self.rows
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("rank report serializes");
        s.push('\n');
        s
    }
}

fn require_shallow(net: &FeedforwardNetwork, r: &ExponentVector) -> Result<()> {
    if net.depth() != 1 {
        return Err(Error::Invalid(format!(
            "derivative matrix needs exactly one hidden layer, network has {}",
            net.depth()
        )));
    }
    if r.n() != net.n() {
        return Err(Error::Dimension {
            expected: net.n(),
            got: r.n(),
            context: "exponent vector length",
        });
    }
    Ok(())
}

/// `A[S, j] = ∏_{h∈S} a_{hj}` over the sub-multisets `S` of `r`, with `a_{hj}`
/// the weight from input `h` to hidden neuron `j`.
pub fn derivative_matrix(net: &FeedforwardNetwork, r: &ExponentVector) -> Result<DMatrix<f64>> {
    require_shallow(net, r)?;
    let first = &net.layers()[0];
    let subsets = r.sub_multisets();
    let cols = first.rows();
    Ok(DMatrix::from_fn(subsets.len(), cols, |s, j| {
        subsets[s]
            .support()
            .map(|(i, e)| first.weight(j, i).powi(e as i32))
            .product()
    }))
}

/// `x = m · 2^e` with integer `m`.
fn dyadic(x: f64) -> (i64, i32) {
    if x == 0.0 {
        return (0, 0);
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1u64 << 52) - 1)) as i64;
    let (m, e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1i64 << 52), exp - 1075)
    };
    let tz = m.trailing_zeros() as i32;
    (sign * (m >> tz), e + tz)
}

/// The derivative matrix with column `j` multiplied by a power of two that
/// makes every entry an integer.
fn integer_derivative_matrix(net: &FeedforwardNetwork, r: &ExponentVector) -> Vec<Vec<BigInt>> {
    let first = &net.layers()[0];
    let subsets = r.sub_multisets();
    let cols = first.rows();
    let mut m = vec![vec![BigInt::zero(); cols]; subsets.len()];
    for j in 0..cols {
        let parts: Vec<(BigInt, i32)> = (0..net.n())
            .map(|i| {
                let (mant, e) = dyadic(first.weight(j, i));
                (BigInt::from(mant), e)
            })
            .collect();
        let shift: i64 = parts
            .iter()
            .zip(r.as_slice())
            .map(|((_, e), &ri)| (*e).min(0) as i64 * ri as i64)
            .sum();
        for (s, row) in subsets.iter().zip(m.iter_mut()) {
            let mut v = BigInt::from(1);
            let mut e: i64 = -shift;
            for (i, k) in s.support() {
                v *= parts[i].0.pow(k);
                e += parts[i].1 as i64 * k as i64;
            }
            row[j] = v << e as usize;
        }
    }
    m
}

/// Rank by fraction-free (Bareiss) elimination.
fn bareiss_rank(mut m: Vec<Vec<BigInt>>) -> usize {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut prev = BigInt::from(1);
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let (top, below) = m.split_at_mut(rank + 1);
        let pivot_row = &top[rank];
        let pivot = &pivot_row[c];
        for row in below.iter_mut() {
            let factor = std::mem::take(&mut row[c]);
            for (x, p) in row[c + 1..].iter_mut().zip(&pivot_row[c + 1..]) {
                *x = (&*x * pivot - &factor * p) / &prev;
            }
        }
        prev = pivot.abs();
        rank += 1;
    }
    rank
}

/// Exact and numerical rank of the derivative matrix.
pub fn derivative_matrix_rank(net: &FeedforwardNetwork, r: &ExponentVector) -> Result<RankReport> {
    let a = derivative_matrix(net, r)?;
    if net.layers()[0].weights().iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite { layer: 0 });
    }
    let exact = bareiss_rank(integer_derivative_matrix(net, r));
    let (rows, cols) = a.shape();
    let mut sv: Vec<f64> = if rows == 0 || cols == 0 {
        Vec::new()
    } else {
        a.singular_values().iter().copied().collect()
    };
    sv.sort_by(|x, y| y.total_cmp(x));
    let top = sv.first().copied().unwrap_or(0.0);
    let numerical = if top > 0.0 {
        sv.iter().filter(|&&s| s > RANK_TOL * top).count()
    } else {
        0
    };
    Ok(RankReport {
        r: r.as_slice().to_vec(),
        rank: exact,
        numerical_rank: numerical,
        rows,
        cols,
        singular_values: sv,
    })
}

/// Best Taylor match to `x^r` reachable by refitting only the output
/// weights and bias of a shallow network.
///
/// Returns the largest coefficient residual of the least-squares fit over
/// every monomial of degree at most `|r|`.
pub fn output_fit_residual(net: &FeedforwardNetwork, r: &ExponentVector) -> Result<f64> {
    require_shallow(net, r)?;
    let cap = r.degree();
    let layout = Arc::new(Layout::new(net.n(), cap)?);
    let inputs: Vec<TruncatedSeries> = (0..net.n())
        .map(|i| TruncatedSeries::variable(&layout, i))
        .collect();
    let hidden = net.layers()[0]
        .apply_series(&layout, &inputs)?
        .iter()
        .map(|s| s.compose(net.activation()))
        .collect::<Result<Vec<_>>>()?;
    let len = layout.len();
    let m = DMatrix::from_fn(len, hidden.len() + 1, |i, j| {
        if j < hidden.len() {
            hidden[j].coefficients()[i]
        } else if i == 0 {
            1.0
        } else {
            0.0
        }
    });
    let target_index = layout
        .index_of(r)
        .ok_or_else(|| Error::Invalid("monomial outside the layout".into()))?;
    let t = DVector::from_fn(len, |i, _| if i == target_index { 1.0 } else { 0.0 });
    let svd = m.clone().svd(true, true);
    let top = svd.singular_values.max();
    let v = svd
        .solve(&t, RANK_TOL * top.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::Invalid(e.to_string()))?;
    let residual = &m * v - t;
    Ok(residual.amax())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructors::shallow_monomial;
    use crate::network::AffineLayer;
    use crate::series::Nonlinearity;

    #[test]
    fn product_gadget_matrix_is_full_rank() {
        let r = ExponentVector::new(vec![1, 1]);
        let net = shallow_monomial(&r, Nonlinearity::Exp).unwrap();
        let rep = derivative_matrix_rank(&net, &r).unwrap();
        assert_eq!((rep.rank, rep.rows, rep.cols), (4, 4, 4));
        assert!(output_fit_residual(&net, &r).unwrap() < 1e-9);
    }

    #[test]
    fn duplicated_columns_lose_rank() {
        let w = vec![1.0, 1.0, 1.0, 1.0, 1.0, -1.0];
        let l0 = AffineLayer::new(3, 2, w, vec![0.0; 3]).unwrap();
        let l1 = AffineLayer::new(1, 3, vec![1.0; 3], vec![0.0]).unwrap();
        let net = FeedforwardNetwork::new(2, Nonlinearity::Exp, vec![l0, l1], vec![]).unwrap();
        let r = ExponentVector::new(vec![1, 1]);
        let rep = derivative_matrix_rank(&net, &r).unwrap();
        assert_eq!(rep.rows, 4);
        assert!(rep.rank < 4);
    }

    #[test]
    fn dyadic_parts() {
        assert_eq!(dyadic(0.25), (1, -2));
        assert_eq!(dyadic(-3.0), (-3, 0));
        assert_eq!(dyadic(12.0), (3, 2));
        assert_eq!(dyadic(0.0), (0, 0));
        let (m, e) = dyadic(0.1);
        assert_eq!(m as f64 * (e as f64).exp2(), 0.1);
    }

    #[test]
    fn exact_rank_survives_bad_conditioning() {
        let r = ExponentVector::new(vec![31]);
        let net = shallow_monomial(&r, Nonlinearity::Exp).unwrap();
        let rep = derivative_matrix_rank(&net, &r).unwrap();
        assert_eq!(rep.rank, 32);
        assert!(rep.numerical_rank < 32);
    }

    #[test]
    fn bareiss_small() {
        let m = |v: &[&[i64]]| -> Vec<Vec<BigInt>> {
            v.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
        };
        assert_eq!(bareiss_rank(m(&[&[1, 2], &[2, 4]])), 1);
        assert_eq!(bareiss_rank(m(&[&[0, 1], &[1, 0]])), 2);
        assert_eq!(bareiss_rank(m(&[&[0, 0, 1], &[0, 0, 2], &[1, 1, 1]])), 2);
        assert_eq!(bareiss_rank(m(&[&[2, 4, 6], &[1, 3, 5], &[3, 7, 11]])), 2);
    }

    #[test]
    fn deep_networks_are_rejected() {
        let l = AffineLayer::zeros(1, 1);
        let net = FeedforwardNetwork::new(1, Nonlinearity::Exp, vec![l], vec![]).unwrap();
        assert!(derivative_matrix_rank(&net, &ExponentVector::new(vec![1])).is_err());
    }
}
