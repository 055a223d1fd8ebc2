use std::f64::consts::LN_2;

use num_bigint::BigUint;
use serde::Serialize;

use super::tree_count;
use crate::error::{Error, Result};
use crate::numeric::json_f64;

/// Real and rounded group sizes minimizing the tree count for depth `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthPlan {
    #[serde(serialize_with = "json_f64::one")]
    pub n: f64,
    pub k: usize,
    #[serde(serialize_with = "json_f64::many")]
    pub b: Vec<f64>,
    pub integer_b: Vec<usize>,
    /// Continuous tree count at `b`; infinite when it exceeds `f64`.
    #[serde(serialize_with = "json_f64::one")]
    pub predicted_count: f64,
    #[serde(serialize_with = "json_f64::one")]
    pub log2_predicted_count: f64,
    #[serde(serialize_with = "json_f64::one")]
    pub recursion_residual: f64,
    #[serde(serialize_with = "json_f64::one")]
    pub constraint_residual: f64,
    /// Spread of the Lagrange multiplier implied by each coordinate.
    #[serde(serialize_with = "json_f64::one")]
    pub stationarity_residual: f64,
}

impl DepthPlan {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan serializes");
        s.push('\n');
        s
    }
}

/// `1/ln 2`; below `1 + 1/ln 2` the recursion stops increasing.
const INV_LN2: f64 = 1.0 / LN_2;

fn step(b: f64) -> f64 {
    b + (b - INV_LN2).log2()
}

fn shoot(b1: f64, k: usize) -> Vec<f64> {
    let mut b = Vec::with_capacity(k);
    b.push(b1);
    for _ in 1..k {
        let prev = *b.last().expect("nonempty");
        b.push(step(prev));
    }
    b
}

fn log_product(b: &[f64]) -> f64 {
    b.iter().map(|x| x.ln()).sum()
}

/// Natural logs of the terms `(∏_{j>i} bⱼ) 2^{bᵢ}`.
fn log_terms(b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; b.len()];
    let mut above = 0.0;
    for i in (0..b.len()).rev() {
        out[i] = above + b[i] * LN_2;
        above += b[i].ln();
    }
    out
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Continuous tree count `Σᵢ (∏_{j>i} bⱼ) 2^{bᵢ}` as a natural log.
pub(crate) fn log_objective(b: &[f64]) -> f64 {
    log_sum_exp(&log_terms(b))
}

/// Relative spread of `bᵢ ∂f/∂bᵢ` over `i`. At a constrained stationary
/// point all of these equal `λ ∏ bⱼ`.
fn stationarity(b: &[f64]) -> f64 {
    if b.len() < 2 {
        return 0.0;
    }
    let t = log_terms(b);
    let top = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = t.iter().map(|x| (x - top).exp()).collect();
    // bᵢ ∂f/∂bᵢ = Σ_{h<i} term_h + ln 2 · bᵢ · term_i
    let mut g = Vec::with_capacity(b.len());
    let mut below = 0.0;
    for i in 0..b.len() {
        g.push(below + LN_2 * b[i] * scaled[i]);
        below += scaled[i];
    }
    let hi = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = g.iter().copied().fold(f64::INFINITY, f64::min);
    (hi - lo) / hi
}

fn recursion_residual(b: &[f64]) -> f64 {
    b.windows(2)
        .map(|w| (w[1] - step(w[0])).abs() / w[1])
        .fold(0.0, f64::max)
}

/// Cheapest floor/ceil rounding of `b`, with the last group raised until
/// the product covers `n`.
fn integer_plan(n: usize, b: &[f64]) -> Vec<usize> {
    let k = b.len();
    if k == 1 {
        return vec![n];
    }
    let mut best: Option<(BigUint, Vec<usize>)> = None;
    for mask in 0u32..(1 << (k - 1)) {
        let mut plan: Vec<usize> = b[..k - 1]
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let v = if mask >> i & 1 == 1 { x.ceil() } else { x.floor() };
                (v as usize).max(2)
            })
            .collect();
        let head: usize = plan.iter().product();
        plan.push(n.div_ceil(head).max(1));
        let Ok(count) = tree_count(n, &plan) else { continue };
        if best.as_ref().map_or(true, |(c, _)| count < *c) {
            best = Some((count, plan));
        }
    }
    best.expect("at least one rounding covers n").1
}

/// Group sizes `b₁ … b_k` with `∏ bᵢ = n` minimizing the tree count.
///
/// Stationarity gives `bᵢ = bᵢ₋₁ + log₂(bᵢ₋₁ − 1/ln 2)`; `b₁` is found by
/// bisection on the product. The recursion only increases past
/// `b₁ = 1 + 1/ln 2`, so smaller `n` for a given `k` is rejected.
pub fn solve_optimal_groups(n: f64, k: usize) -> Result<DepthPlan> {
    if !(n > 1.0 && n.is_finite()) {
        return Err(Error::Invalid(format!("n must exceed 1, got {n}")));
    }
    if k == 0 {
        return Err(Error::Invalid("k must be at least 1".into()));
    }
    let b1_floor = 1.0 + INV_LN2;
    let target = n.ln();
    let b = if k == 1 {
        vec![n]
    } else {
        let min_n = b1_floor.powi(k as i32);
        if n <= min_n {
            return Err(Error::PlanDomain { k, min_n, b1_floor });
        }
        let mut lo = b1_floor;
        let mut hi = n.powf(1.0 / k as f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if log_product(&shoot(mid, k)) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let a = shoot(lo, k);
        let c = shoot(hi, k);
        if (log_product(&a) - target).abs() <= (log_product(&c) - target).abs() {
            a
        } else {
            c
        }
    };
    let constraint = (log_product(&b) - target).exp_m1().abs();
    let log_count = log_objective(&b);
    Ok(DepthPlan {
        n,
        k,
        integer_b: integer_plan(n.ceil() as usize, &b),
        predicted_count: log_count.exp(),
        log2_predicted_count: log_count / LN_2,
        recursion_residual: recursion_residual(&b),
        constraint_residual: constraint,
        stationarity_residual: stationarity(&b),
        b,
    })
}

/// `n^{(k−1)/k} · 2^{n^{1/k}}`.
pub fn asymptotic_width(n: u64, k: u32) -> f64 {
    let n = n as f64;
    let root = n.powf(1.0 / k as f64);
    n.powf((k as f64 - 1.0) / k as f64) * root.exp2()
}

/// Smallest depth `k` with `n^{1/k} ≤ log₂(width_cap)`.
pub fn depth_rule_of_thumb(n: u64, width_cap: u64) -> Result<u32> {
    if width_cap < 2 {
        return Err(Error::Invalid(format!("width cap must be at least 2, got {width_cap}")));
    }
    if n <= 1 {
        return Ok(1);
    }
    let l = (width_cap as f64).log2();
    if l <= 1.0 {
        return Err(Error::Invalid(format!(
            "width cap {width_cap} cannot host any product of {n} inputs"
        )));
    }
    let n = n as f64;
    let mut k = 1u32;
    while n > l.powi(k as i32) * (1.0 + 1e-12) {
        k += 1;
    }
    Ok(k)
}
