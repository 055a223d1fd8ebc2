//! Closed-form neuron counts: the shallow count `∏(rᵢ+1)`, the deep upper
//! bound, the max-coefficient lower bound, sparse-polynomial aggregates,
//! layered tree counts and the optimal group-size planner.

mod planner;

pub use planner::{asymptotic_width, depth_rule_of_thumb, solve_optimal_groups, DepthPlan};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numeric::{ceil_log2, json_f64};
use crate::polynomial::SparsePolynomial;
use crate::series::ExponentVector;

/// Big integers are written as decimal strings.
fn big<S: Serializer>(x: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_str_radix(10))
}

/// Tree count at the planner's integer group sizes for one depth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeCount {
    pub k: usize,
    pub b: Vec<usize>,
    #[serde(serialize_with = "big")]
    pub count: BigUint,
}

/// Counts and bounds for a single monomial `x^r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonomialBounds {
    pub r: Vec<u32>,
    pub degree: u32,
    /// Exact shallow Taylor count `∏(rᵢ+1)`.
    #[serde(serialize_with = "big")]
    pub shallow_exact: BigUint,
    /// `Σ (7⌈log₂ rᵢ⌉ + 4)` over the variables that occur.
    pub deep_upper: u64,
    /// Largest coefficient of `∏(1 + y + … + y^{rᵢ})`.
    #[serde(serialize_with = "big")]
    pub thm5_max_coeff: BigUint,
    /// `(1/d)∏(rᵢ+1)`.
    #[serde(serialize_with = "json_f64::one")]
    pub thm5_simple: f64,
    /// `∏(rᵢ+1)/(d+1)`: the sub-multiset sizes take `d + 1` values, so
    /// this is what counting guarantees for the largest coefficient.
    #[serde(serialize_with = "json_f64::one")]
    pub pigeonhole_lower: f64,
    pub tree_counts: Vec<TreeCount>,
}

/// Bounds for a polynomial, one entry per non-constant monomial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub target: String,
    pub sparsity: usize,
    pub monomials: Vec<MonomialBounds>,
    /// `max_j ∏(r_{j,i}+1) / c`.
    #[serde(serialize_with = "json_f64::one")]
    pub sparse_lower: f64,
    pub sparse_lower_argmax: usize,
    /// `Σ_j deep_upper(q_j)`.
    pub sparse_upper: u64,
}

impl BoundsReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("bounds serialize");
        s.push('\n');
        s
    }
}

/// Product of `(rᵢ + 1)`.
pub fn shallow_exact(r: &ExponentVector) -> BigUint {
    r.as_slice()
        .iter()
        .fold(BigUint::one(), |acc, &e| acc * BigUint::from(e + 1))
}

/// Deep upper bound, summed over exponents `rᵢ > 0`.
pub fn deep_upper(r: &ExponentVector) -> u64 {
    r.as_slice()
        .iter()
        .filter(|&&e| e > 0)
        .map(|&e| 7 * ceil_log2(e as u64) as u64 + 4)
        .sum()
}

/// Coefficients of `∏ᵢ (1 + y + … + y^{rᵢ})`.
pub fn divisor_profile(r: &ExponentVector) -> Vec<BigUint> {
    let mut coeffs = vec![BigUint::one()];
    for &e in r.as_slice() {
        let e = e as usize;
        let mut next = vec![BigUint::zero(); coeffs.len() + e];
        // Sliding window sum of width e + 1.
        let mut window = BigUint::zero();
        for (k, slot) in next.iter_mut().enumerate() {
            if k < coeffs.len() {
                window += &coeffs[k];
            }
            if k > e && k - e - 1 < coeffs.len() {
                window -= &coeffs[k - e - 1];
            }
            *slot = window.clone();
        }
        coeffs = next;
    }
    coeffs
}

fn tree_counts(d: u32) -> Vec<TreeCount> {
    if d < 2 {
        return Vec::new();
    }
    (1..=3)
        .filter_map(|k| {
            let plan = solve_optimal_groups(d as f64, k).ok()?;
            let count = tree_count(d as usize, &plan.integer_b).ok()?;
            Some(TreeCount {
                k,
                b: plan.integer_b,
                count,
            })
        })
        .collect()
}

fn bounds_for(r: &ExponentVector) -> Result<MonomialBounds> {
    let d = r.degree();
    if d == 0 {
        return Err(Error::Invalid("exponent vector must have a positive entry".into()));
    }
    let shallow = shallow_exact(r);
    let profile = divisor_profile(r);
    let max_coeff = profile.into_iter().max().expect("nonempty profile");
    let total = shallow.to_f64().unwrap_or(f64::INFINITY);
    Ok(MonomialBounds {
        r: r.as_slice().to_vec(),
        degree: d,
        shallow_exact: shallow,
        deep_upper: deep_upper(r),
        thm5_max_coeff: max_coeff,
        thm5_simple: total / d as f64,
        pigeonhole_lower: total / (d + 1) as f64,
        tree_counts: tree_counts(d),
    })
}

/// Bounds for `x^r`.
pub fn monomial_bounds(r: &ExponentVector) -> Result<BoundsReport> {
    let m = bounds_for(r)?;
    let p = SparsePolynomial::monomial(1.0, r.clone())?;
    Ok(BoundsReport {
        target: p.to_string(),
        sparsity: 1,
        sparse_lower: m.shallow_exact.to_f64().unwrap_or(f64::INFINITY),
        sparse_lower_argmax: 0,
        sparse_upper: m.deep_upper,
        monomials: vec![m],
    })
}

/// Bounds for a sparse polynomial with `c` non-constant monomials.
pub fn sparse_bounds(p: &SparsePolynomial) -> Result<BoundsReport> {
    let monomials = p
        .monomials()
        .iter()
        .filter(|(_, r)| r.degree() > 0)
        .map(|(_, r)| bounds_for(r))
        .collect::<Result<Vec<_>>>()?;
    if monomials.is_empty() {
        return Err(Error::Invalid("polynomial has no non-constant monomial".into()));
    }
    let c = monomials.len();
    let mut argmax = 0;
    for (j, m) in monomials.iter().enumerate() {
        if m.shallow_exact > monomials[argmax].shallow_exact {
            argmax = j;
        }
    }
    let lower = monomials[argmax].shallow_exact.to_f64().unwrap_or(f64::INFINITY) / c as f64;
    Ok(BoundsReport {
        target: p.to_string(),
        sparsity: c,
        sparse_lower: lower,
        sparse_lower_argmax: argmax,
        sparse_upper: monomials.iter().map(|m| m.deep_upper).sum(),
        monomials,
    })
}

/// `Σᵢ (∏_{j>i} bⱼ) 2^{bᵢ}` for group sizes covering `n` inputs.
///
/// Requires `∏ bᵢ ≥ n` with every `bᵢ ≥ 1`.
pub fn tree_count(n: usize, b: &[usize]) -> Result<BigUint> {
    if b.is_empty() || b.contains(&0) {
        return Err(Error::Invalid(format!("group sizes must be positive, got {b:?}")));
    }
    let product = b
        .iter()
        .fold(BigUint::one(), |acc, &x| acc * BigUint::from(x));
    if product < BigUint::from(n) {
        return Err(Error::Invalid(format!(
            "group sizes {b:?} cover {product} inputs, need {n}"
        )));
    }
    let mut total = BigUint::zero();
    let mut above = BigUint::one();
    for &bi in b.iter().rev() {
        total += &above * (BigUint::one() << bi);
        above *= BigUint::from(bi);
    }
    Ok(total)
}
