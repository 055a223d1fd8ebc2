//! The acceptance suite as a library: each criterion runs, reports whether
//! it held, and returns the text artifact it produced so reruns can be
//! compared byte for byte.

use std::fmt::Write;
use std::time::Instant;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{monomial_bounds, solve_optimal_groups, tree_count};
use crate::constructors::{deep_monomial, deep_power, shallow_monomial};
use crate::error::Result;
use crate::numeric::ceil_log2;
use crate::polynomial::SparsePolynomial;
use crate::series::{ExponentVector, Nonlinearity};
use crate::trainer::{experiment_grid, gradient_check, write_grid_csv, GridRow, GridSpec, TrainConfig};
use crate::verifier::{check_taylor, derivative_matrix_rank, epsilonize, sup_error, EpsilonOptions};

/// Knobs for the suite. The defaults are the acceptance settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SelftestOptions {
    pub training_steps: usize,
    pub training_seeds: Vec<u64>,
    pub eval_samples: usize,
    pub threads: usize,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        Self {
            training_steps: 30_000,
            training_seeds: vec![0, 1, 2],
            eval_samples: 100_000,
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub artifact: String,
    pub elapsed_s: f64,
    pub budget_s: f64,
}

impl CriterionReport {
    /// One status line for tables.
    pub fn line(&self) -> String {
        format!(
            "[{}] {}. {:<22} {:>8.2}s / {:<5} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed_s,
            self.budget_s,
            self.detail
        )
    }
}

type Outcome = (bool, String, String);

/// Every `r` of length `n` with entries in `0..=max` and total degree in
/// `1..=deg`.
fn exponent_vectors(n: usize, max: u32, deg: u32) -> Vec<ExponentVector> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    loop {
        let d: u32 = cur.iter().sum();
        if d >= 1 && d <= deg {
            out.push(ExponentVector::new(cur.clone()));
        }
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            if cur[i] < max {
                cur[i] += 1;
                break;
            }
            cur[i] = 0;
            i += 1;
        }
    }
}

/// Positive exponent vectors with `∏(rᵢ+1) ≤ cap`.
fn bounded_products(cap: u32) -> Vec<ExponentVector> {
    fn walk(prefix: &mut Vec<u32>, prod: u32, cap: u32, out: &mut Vec<ExponentVector>) {
        if !prefix.is_empty() {
            out.push(ExponentVector::new(prefix.clone()));
        }
        let mut e = 1;
        while prod * (e + 1) <= cap {
            prefix.push(e);
            walk(prefix, prod * (e + 1), cap, out);
            prefix.pop();
            e += 1;
        }
    }
    let mut out = Vec::new();
    walk(&mut Vec::new(), 1, cap, &mut out);
    out
}

fn taylor_suite() -> Result<Outcome> {
    let mut art = String::new();
    let mut ok = true;
    let mut worst = 0.0f64;
    let mut count = 0;
    for n in 1..=4 {
        for r in exponent_vectors(n, 3, 8) {
            let p = SparsePolynomial::monomial(1.0, r.clone())?;
            let shallow = shallow_monomial(&r, Nonlinearity::Exp)?;
            let deep = deep_monomial(&r, Nonlinearity::Exp)?;
            let ds = check_taylor(&shallow, &p)?;
            let dd = check_taylor(&deep, &p)?;
            let expected: u64 = r.as_slice().iter().map(|&e| e as u64 + 1).product();
            let good = ds < 1e-9 && dd < 1e-9 && shallow.neuron_count() as u64 == expected;
            ok &= good;
            worst = worst.max(ds).max(dd);
            count += 1;
            let _ = writeln!(
                art,
                "{:?} shallow={} dev={:e} deep={} dev={:e} {}",
                r.as_slice(),
                shallow.neuron_count(),
                ds,
                deep.neuron_count(),
                dd,
                if good { "ok" } else { "BAD" }
            );
        }
    }
    Ok((ok, format!("{count} exponent vectors, worst deviation {worst:.1e}"), art))
}

fn deep_power_suite() -> Result<Outcome> {
    let mut art = String::new();
    let mut ok = true;
    let mut worst = 0.0f64;
    for d in 2..=64u32 {
        let net = deep_power(d, Nonlinearity::Exp)?;
        let p = SparsePolynomial::monomial(1.0, ExponentVector::new(vec![d]))?;
        let dev = check_taylor(&net, &p)?;
        let bound = 7 * ceil_log2(d as u64) as usize;
        let good = dev < 1e-9 && net.neuron_count() <= bound;
        ok &= good;
        worst = worst.max(dev);
        let _ = writeln!(
            art,
            "d={d} neurons={} bound={bound} dev={dev:e} {}",
            net.neuron_count(),
            if good { "ok" } else { "BAD" }
        );
    }
    Ok((ok, format!("d = 2..64, worst deviation {worst:.1e}"), art))
}

fn epsilon_suite(replay_samples: usize) -> Result<Outcome> {
    let p: SparsePolynomial = "x1*x2*x3".parse()?;
    let net = shallow_monomial(&ExponentVector::new(vec![1, 1, 1]), Nonlinearity::Exp)?;
    let eps = 1e-3;
    let (scaled, cert) = epsilonize(&net, &p, eps, 1.0, EpsilonOptions::default())?;
    let replay = sup_error(&scaled, &p, 1.0, replay_samples, 0x5eed)?;
    let ok = replay.max_abs_error < eps;
    let mut art = cert.to_json();
    let _ = writeln!(
        art,
        "replay samples={} corners={} max_abs_error={:e}",
        replay.samples, replay.corners, replay.max_abs_error
    );
    Ok((
        ok,
        format!(
            "delta {}, replayed error {:.3e} over {} points + {} corners",
            cert.delta, replay.max_abs_error, replay.samples, replay.corners
        ),
        art,
    ))
}

fn rank_suite() -> Result<Outcome> {
    let mut art = String::new();
    let mut ok = true;
    let mut count = 0;
    for r in bounded_products(32) {
        let net = shallow_monomial(&r, Nonlinearity::Exp)?;
        let rep = derivative_matrix_rank(&net, &r)?;
        ok &= rep.full_row_rank();
        count += 1;
        let _ = writeln!(
            art,
            "{:?} rank={} rows={} numerical_rank={}",
            r.as_slice(),
            rep.rank,
            rep.rows,
            rep.numerical_rank
        );
    }
    Ok((ok, format!("{count} exponent vectors with prod(r+1) <= 32"), art))
}

fn bounds_suite() -> Result<Outcome> {
    let mut art = String::new();
    let mut stated_fail = Vec::new();
    let mut ok = true;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let n = rng.gen_range(1..=8);
        let mut r: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=6)).collect();
        if r.iter().all(|&e| e == 0) {
            r[0] = 1;
        }
        let r = ExponentVector::new(r);
        let b = monomial_bounds(&r)?;
        let m = &b.monomials[0];
        // (1/d)∏ ≤ max ⇔ ∏ ≤ d · max, and likewise for d + 1
        let stated = m.shallow_exact <= &m.thm5_max_coeff * BigUint::from(m.degree);
        let counted = m.shallow_exact <= &m.thm5_max_coeff * BigUint::from(m.degree + 1);
        let upper = m.thm5_max_coeff <= m.shallow_exact;
        ok &= counted && upper;
        if !stated {
            stated_fail.push(r.as_slice().to_vec());
        }
        let _ = writeln!(
            art,
            "{:?} prod={} max_coeff={} d={} stated={} counted={} upper={}",
            r.as_slice(),
            m.shallow_exact,
            m.thm5_max_coeff,
            m.degree,
            stated,
            counted,
            upper
        );
    }
    let mut crossover = true;
    for n in 5..=20 {
        let b = monomial_bounds(&ExponentVector::new(vec![1; n]))?;
        let m = &b.monomials[0];
        crossover &= BigUint::from(m.deep_upper) < m.shallow_exact && m.deep_upper == 4 * n as u64;
        let _ = writeln!(art, "ones n={n} deep={} shallow={}", m.deep_upper, m.shallow_exact);
    }
    ok &= crossover && stated_fail.is_empty();
    let detail = if stated_fail.is_empty() {
        "200 random r satisfy (1/d)prod <= max_coeff <= prod; crossover 4n < 2^n for n = 5..20".to_string()
    } else {
        format!(
            "(1/d)prod <= max_coeff fails for {} of 200 r, e.g. {:?} (single-variable r: (r+1)/r > 1); \
             prod/(d+1) <= max_coeff <= prod holds for all; crossover holds: {crossover}",
            stated_fail.len(),
            stated_fail[0]
        )
    };
    Ok((ok, detail, art))
}

fn planner_suite() -> Result<Outcome> {
    let mut art = String::new();
    let mut ok = true;
    for k in 1..=3 {
        for n in [1e2, 1e4, 1e6] {
            let p = solve_optimal_groups(n, k)?;
            let increasing = p.b.windows(2).all(|w| w[1] > w[0]);
            let good = p.recursion_residual < 1e-6 && p.constraint_residual < 1e-6 && increasing;
            ok &= good;
            let _ = writeln!(
                art,
                "k={k} n={n:e} b={:?} integer={:?} recursion={:e} constraint={:e} stationarity={:e}",
                p.b, p.integer_b, p.recursion_residual, p.constraint_residual, p.stationarity_residual
            );
        }
    }
    for k in 2..=3 {
        let spread = |n: f64| -> Result<f64> {
            let p = solve_optimal_groups(n, k)?;
            let root = n.powf(1.0 / k as f64);
            Ok(p.b.iter().map(|b| (b / root - 1.0).abs()).fold(0.0, f64::max))
        };
        let (small, large) = (spread(1e3)?, spread(1e6)?);
        ok &= large < small;
        let _ = writeln!(art, "k={k} spread n=1e3 {small:.6} n=1e6 {large:.6}");
    }
    let a = tree_count(16, &[4, 4])?;
    let b = tree_count(8, &[8])?;
    ok &= a == BigUint::from(80u32) && b == BigUint::from(256u32);
    let _ = writeln!(art, "tree_count(16,(4,4))={a} tree_count(8,(8))={b}");
    Ok((ok, "k = 1..3, n = 1e2, 1e4, 1e6".into(), art))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn training_suite(opts: &SelftestOptions) -> Result<Outcome> {
    let check = gradient_check(&TrainConfig {
        n: 6,
        depth: 2,
        width: 8,
        ..TrainConfig::default()
    })?;
    let spec = GridSpec {
        base: TrainConfig {
            n: 6,
            steps: opts.training_steps,
            batch_size: 64,
            eval_samples: opts.eval_samples,
            ..TrainConfig::default()
        },
        depths: vec![1, 3],
        widths: vec![20],
        seeds: opts.training_seeds.clone(),
    };
    let rows = experiment_grid(&spec, opts.threads, |_| {})?;
    let errs = |d: usize| -> Vec<f64> {
        rows.iter().filter(|r| r.depth == d).map(|r: &GridRow| r.test_err).collect()
    };
    let (shallow, deep) = (median(errs(1)), median(errs(3)));
    let ok = check < 1e-5 && deep < 0.05 && deep < 0.5 * shallow;
    let mut csv = Vec::new();
    write_grid_csv(&rows, &mut csv, false)?;
    let mut art = String::from_utf8(csv).expect("csv is utf-8");
    let _ = writeln!(art, "gradient_check={check:e}");
    Ok((
        ok,
        format!(
            "grad dev {check:.1e}; median test err deep {deep:.4} (< 0.05: {}), shallow {shallow:.4}, ratio {:.3} (< 0.5: {})",
            deep < 0.05,
            deep / shallow,
            deep < 0.5 * shallow
        ),
        art,
    ))
}

const NAMES: [&str; 8] = [
    "taylor exactness",
    "deep power",
    "epsilon approximation",
    "rank property",
    "bounds",
    "planner",
    "training",
    "determinism",
];
const BUDGETS: [f64; 8] = [60.0, 30.0, 30.0, 10.0, 5.0, 5.0, 900.0, 1800.0];

/// Runs criterion `id` (1 to 7).
pub fn run_criterion(id: u8, opts: &SelftestOptions) -> CriterionReport {
    let start = Instant::now();
    let result = match id {
        1 => taylor_suite(),
        2 => deep_power_suite(),
        3 => epsilon_suite(opts.eval_samples),
        4 => rank_suite(),
        5 => bounds_suite(),
        6 => planner_suite(),
        7 => training_suite(opts),
        _ => panic!("criterion {id} is not a standalone check"),
    };
    finish(id, start, result)
}

fn finish(id: u8, start: Instant, result: Result<Outcome>) -> CriterionReport {
    let elapsed_s = start.elapsed().as_secs_f64();
    let budget_s = BUDGETS[id as usize - 1];
    let (passed, detail, artifact) = match result {
        Ok((p, d, a)) => (p && elapsed_s < budget_s, d, a),
        Err(e) => (false, format!("error: {e}"), String::new()),
    };
    let detail = if elapsed_s >= budget_s {
        format!("{detail}; over time budget")
    } else {
        detail
    };
    CriterionReport {
        id,
        name: NAMES[id as usize - 1],
        passed,
        detail,
        artifact,
        elapsed_s,
        budget_s,
    }
}

/// Reruns criteria 1 to 7 and compares every artifact with `first`.
pub fn run_determinism(first: &[CriterionReport], opts: &SelftestOptions) -> CriterionReport {
    let start = Instant::now();
    let mut differing = Vec::new();
    for report in first.iter().filter(|r| (1..=7).contains(&r.id)) {
        let again = run_criterion(report.id, opts);
        if again.artifact.is_empty() || again.artifact != report.artifact {
            differing.push(report.id);
        }
    }
    let ok = differing.is_empty() && first.len() >= 7;
    let detail = if ok {
        "criteria 1-7 artifacts byte-identical on rerun".to_string()
    } else {
        format!("artifacts differ for criteria {differing:?}")
    };
    finish(8, start, Ok((ok, detail, String::new())))
}

/// Criteria 1 to 7, then the determinism rerun.
pub fn run_all<F: FnMut(&CriterionReport)>(opts: &SelftestOptions, mut on_report: F) -> Vec<CriterionReport> {
    let mut reports = Vec::with_capacity(8);
    for id in 1..=7 {
        let r = run_criterion(id, opts);
        on_report(&r);
        reports.push(r);
    }
    let det = run_determinism(&reports, opts);
    on_report(&det);
    reports.push(det);
    reports
}
