use rayon::prelude::*;
use serde::Serialize;

use super::aligned;
use crate::error::{Error, Result};
use crate::network::FeedforwardNetwork;
use crate::numeric::json_f64;
use crate::polynomial::SparsePolynomial;

/// Corners are enumerated only up to this many variables.
const MAX_CORNER_DIM: usize = 16;
/// Scrambled Sobol' points are available in this many dimensions.
const MAX_SOBOL_DIM: usize = 256;
/// Points per scrambled sequence; longer sweeps chain independent blocks.
const BLOCK: usize = 1 << 16;

/// Largest observed `|N(x) − p(x)|` over a deterministic point set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupErrorEstimate {
    #[serde(serialize_with = "json_f64::one")]
    pub radius: f64,
    pub samples: usize,
    pub corners: usize,
    #[serde(serialize_with = "json_f64::one")]
    pub max_abs_error: f64,
    #[serde(serialize_with = "json_f64::many")]
    pub argmax: Vec<f64>,
    pub seed: u64,
}

/// Point `i` of the sweep: scrambled Sobol' coordinates mapped to `(−R, R)`
/// for `i < samples`, then the `2ⁿ` corners `(±R, …, ±R)`. Every block of
/// `2¹⁶` points uses its own scramble seed.
fn point(i: usize, samples: usize, n: usize, radius: f64, seed: u32) -> Vec<f64> {
    if i < samples {
        let block = (i / BLOCK) as u32;
        let seed = seed ^ block.wrapping_mul(0x9e37_79b9);
        let j = (i % BLOCK) as u32;
        (0..n)
            .map(|d| {
                let u = sobol_burley::sample(j, d as u32, seed) as f64;
                radius * (2.0 * u - 1.0)
            })
            .collect()
    } else {
        let mask = i - samples;
        (0..n)
            .map(|d| if mask >> d & 1 == 1 { -radius } else { radius })
            .collect()
    }
}

fn fold_seed(seed: u64) -> u32 {
    (seed ^ (seed >> 32)) as u32
}

/// Sampled sup-norm error of `net` against `p` on `(−R, R)ⁿ`.
///
/// Each point depends only on `(seed, index)`, so the parallel sweep gives
/// the same answer as a sequential one; ties keep the lowest index.
pub fn sup_error(
    net: &FeedforwardNetwork,
    p: &SparsePolynomial,
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<SupErrorEstimate> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Invalid(format!("radius must be positive, got {radius}")));
    }
    if samples == 0 {
        return Err(Error::Invalid("at least one sample is required".into()));
    }
    let p = aligned(net, p)?;
    let n = net.n();
    if n > MAX_SOBOL_DIM {
        return Err(Error::Invalid(format!(
            "sampling supports at most {MAX_SOBOL_DIM} variables, got {n}"
        )));
    }
    let corners = if n <= MAX_CORNER_DIM { 1usize << n } else { 0 };
    let s = fold_seed(seed);
    let total = samples + corners;

    let best = (0..total)
        .into_par_iter()
        .map(|i| -> Result<(f64, usize)> {
            let x = point(i, samples, n, radius, s);
            let err = (net.eval_scalar(&x)? - p.eval(&x)).abs();
            Ok((err, i))
        })
        .try_reduce(
            || (f64::NEG_INFINITY, usize::MAX),
            |a, b| {
                Ok(if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
            },
        )?;
    if !best.0.is_finite() {
        return Err(Error::NonFinite { layer: net.depth() });
    }
    Ok(SupErrorEstimate {
        radius,
        samples,
        corners,
        max_abs_error: best.0,
        argmax: point(best.1, samples, n, radius, s),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::AffineLayer;
    use crate::series::Nonlinearity;

    #[test]
    fn exact_linear_copy_has_no_error() {
        let l = AffineLayer::new(1, 2, vec![2.0, -1.0], vec![0.5]).unwrap();
        let net = FeedforwardNetwork::new(2, Nonlinearity::Exp, vec![l], vec![]).unwrap();
        let p: SparsePolynomial = "2*x1 - x2 + 0.5".parse().unwrap();
        let est = sup_error(&net, &p, 1.0, 500, 3).unwrap();
        assert!(est.max_abs_error < 1e-15);
        assert_eq!(est.corners, 4);
    }

    #[test]
    fn points_stay_inside_the_box() {
        for i in 0..200 {
            let x = point(i, 200, 5, 0.7, 11);
            assert!(x.iter().all(|v| v.abs() < 0.7));
        }
        assert_eq!(point(200, 200, 2, 1.0, 0), vec![1.0, 1.0]);
        assert_eq!(point(203, 200, 2, 1.0, 0), vec![-1.0, -1.0]);
    }

    #[test]
    fn long_sweeps_chain_blocks() {
        let a = point(5, 200_000, 3, 1.0, 7);
        let b = point(5 + BLOCK, 200_000, 3, 1.0, 7);
        assert_ne!(a, b);
        assert!(b.iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn deterministic_for_a_seed() {
        let l0 = AffineLayer::new(2, 1, vec![1.0, -1.0], vec![0.0, 0.0]).unwrap();
        let l1 = AffineLayer::new(1, 2, vec![1.0, 1.0], vec![-2.0]).unwrap();
        let net = FeedforwardNetwork::new(1, Nonlinearity::Exp, vec![l0, l1], vec![]).unwrap();
        let p: SparsePolynomial = "x1^2".parse().unwrap();
        let a = sup_error(&net, &p, 1.0, 1000, 5).unwrap();
        let b = sup_error(&net, &p, 1.0, 1000, 5).unwrap();
        assert_eq!(a, b);
        assert!(sup_error(&net, &p, 0.0, 10, 0).is_err());
        assert!(sup_error(&net, &p, 1.0, 0, 0).is_err());
    }
}
