//! Dense-MLP training on the product of `n` inputs: AdaDelta on mean
//! absolute error, a finite-difference gradient check, a depth × width grid
//! runner with CSV output and an SVG heatmap.

mod adadelta;
mod grid;
mod mlp;
mod svg;

pub use adadelta::AdaDelta;
pub use grid::{experiment_grid, write_grid_csv, GridRow, GridSpec, CSV_HEADER};
pub use mlp::{Mlp, Workspace};
pub use svg::heatmap_svg;

use std::time::Instant;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bounds::asymptotic_width;
use crate::error::{Error, Result};
use crate::numeric::json_f64;
use crate::series::Nonlinearity;

/// Streams drawn from one run key.
const STREAM_INIT: u64 = 0;
const STREAM_TRAIN: u64 = 1;
const STREAM_EVAL: u64 = 2;
const STREAM_CHECK: u64 = 3;

/// Losses averaged into the reported training error.
const TRAIN_TAIL: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainConfig {
    pub n: usize,
    pub depth: usize,
    pub width: usize,
    pub activation: Nonlinearity,
    pub steps: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub rho: f64,
    pub eps: f64,
    pub lr: f64,
    pub input_low: f64,
    pub input_high: f64,
    pub eval_samples: usize,
    /// Points kept in the loss history.
    pub history_points: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n: 6,
            depth: 3,
            width: 20,
            activation: Nonlinearity::Tanh,
            steps: 30_000,
            batch_size: 64,
            seed: 0,
            rho: 0.95,
            eps: 1e-6,
            lr: 1.0,
            input_low: 0.0,
            input_high: 2.0,
            eval_samples: 100_000,
            history_points: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n", self.n),
            ("depth", self.depth),
            ("width", self.width),
            ("batch_size", self.batch_size),
            ("eval_samples", self.eval_samples),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Invalid(format!("{name} must be positive")));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::Invalid(format!("rho must lie in (0, 1), got {}", self.rho)));
        }
        if !(self.eps > 0.0 && self.lr > 0.0) {
            return Err(Error::Invalid("eps and lr must be positive".into()));
        }
        if self.input_low.partial_cmp(&self.input_high) != Some(std::cmp::Ordering::Less) {
            return Err(Error::Invalid(format!(
                "empty input interval [{}, {}]",
                self.input_low, self.input_high
            )));
        }
        Ok(())
    }

    /// Independent stream `stream` of the generator keyed by
    /// `(seed, n, depth, width)`.
    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let words = [self.seed, self.n as u64, self.depth as u64, self.width as u64];
        for (chunk, w) in key.chunks_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream);
        rng
    }

    fn sample(&self, rng: &mut ChaCha8Rng, x: &mut [f64]) -> f64 {
        for v in x.iter_mut() {
            *v = rng.gen_range(self.input_low..self.input_high);
        }
        x.iter().product()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistoryPoint {
    pub step: usize,
    #[serde(serialize_with = "json_f64::one")]
    pub train_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainResult {
    pub config: TrainConfig,
    pub param_count: usize,
    #[serde(serialize_with = "json_f64::one")]
    pub final_train_err: f64,
    #[serde(serialize_with = "json_f64::one")]
    pub final_test_err: f64,
    pub err_history: Vec<HistoryPoint>,
    #[serde(serialize_with = "json_f64::one")]
    pub theory_width: f64,
    #[serde(serialize_with = "json_f64::one")]
    pub wallclock_s: f64,
}

/// Network initialized for `config`.
pub fn init_mlp(config: &TrainConfig) -> Result<Mlp> {
    config.validate()?;
    let mut rng = config.rng(STREAM_INIT);
    Mlp::init(config.n, config.depth, config.width, config.activation, &mut rng)
}

/// Mean absolute error of `mlp` on `count` points of `rng`.
fn mean_abs_error(mlp: &Mlp, config: &TrainConfig, rng: &mut ChaCha8Rng, count: usize) -> f64 {
    let mut ws = Workspace::default();
    let mut x = vec![0.0; config.n];
    let mut total = 0.0;
    for _ in 0..count {
        let t = config.sample(rng, &mut x);
        total += (mlp.forward(&x, &mut ws) - t).abs();
    }
    total / count as f64
}

/// Trains on fresh uniform batches, one AdaDelta step per batch, and
/// evaluates on a held-out stream.
pub fn train(config: &TrainConfig) -> Result<TrainResult> {
    let start = Instant::now();
    let mut mlp = init_mlp(config)?;
    let mut opt = AdaDelta::new(mlp.param_count(), config.rho, config.eps, config.lr);
    let mut rng = config.rng(STREAM_TRAIN);
    let mut ws = Workspace::default();
    let mut grad = vec![0.0; mlp.param_count()];
    let mut x = vec![0.0; config.n];
    let every = (config.steps / config.history_points.max(1)).max(1);
    let mut history = Vec::new();
    let mut window = (0.0, 0usize);
    let mut tail = std::collections::VecDeque::with_capacity(TRAIN_TAIL);
    let scale = 1.0 / config.batch_size as f64;

    for step in 0..config.steps {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        for _ in 0..config.batch_size {
            let t = config.sample(&mut rng, &mut x);
            let y = mlp.forward(&x, &mut ws);
            let r = y - t;
            loss += r.abs();
            // d|r|/dr, taken as 0 at r = 0
            let dy = if r > 0.0 {
                scale
            } else if r < 0.0 {
                -scale
            } else {
                0.0
            };
            mlp.backward(dy, &mut ws, &mut grad);
        }
        loss *= scale;
        if !loss.is_finite() {
            return Err(Error::Diverged { step });
        }
        opt.step(mlp.params_mut(), &grad);
        if mlp.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged { step });
        }
        if tail.len() == TRAIN_TAIL {
            tail.pop_front();
        }
        tail.push_back(loss);
        window.0 += loss;
        window.1 += 1;
        if (step + 1) % every == 0 || step + 1 == config.steps {
            history.push(HistoryPoint {
                step: step + 1,
                train_err: window.0 / window.1 as f64,
            });
            window = (0.0, 0);
        }
    }

    let final_train_err = if tail.is_empty() {
        mean_abs_error(&mlp, config, &mut rng, config.batch_size)
    } else {
        tail.iter().sum::<f64>() / tail.len() as f64
    };
    let final_test_err = mean_abs_error(&mlp, config, &mut config.rng(STREAM_EVAL), config.eval_samples);
    Ok(TrainResult {
        config: config.clone(),
        param_count: mlp.param_count(),
        final_train_err,
        final_test_err,
        err_history: history,
        theory_width: asymptotic_width(config.n as u64, config.depth as u32),
        wallclock_s: start.elapsed().as_secs_f64(),
    })
}

/// Squared-error loss `½ mean (y − t)²` and its backprop gradient.
fn squared_loss(mlp: &Mlp, xs: &[Vec<f64>], ts: &[f64], grad: Option<&mut [f64]>) -> f64 {
    let mut ws = Workspace::default();
    let scale = 1.0 / xs.len() as f64;
    let mut loss = 0.0;
    match grad {
        Some(g) => {
            g.iter_mut().for_each(|v| *v = 0.0);
            for (x, &t) in xs.iter().zip(ts) {
                let r = mlp.forward(x, &mut ws) - t;
                loss += 0.5 * r * r;
                mlp.backward(r * scale, &mut ws, g);
            }
        }
        None => {
            for (x, &t) in xs.iter().zip(ts) {
                let r = mlp.forward(x, &mut ws) - t;
                loss += 0.5 * r * r;
            }
        }
    }
    loss * scale
}

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Largest relative gap between backprop and central differences over
/// `indices`. Pairs where both sides are below `1e-12` count as agreeing.
pub fn gradient_deviation(mlp: &Mlp, xs: &[Vec<f64>], ts: &[f64], indices: &[usize]) -> f64 {
    let mut grad = vec![0.0; mlp.param_count()];
    squared_loss(mlp, xs, ts, Some(&mut grad));
    let mut probe = mlp.clone();
    let mut worst = 0.0f64;
    for &i in indices {
        let p0 = probe.params()[i];
        probe.params_mut()[i] = p0 + FD_STEP;
        let up = squared_loss(&probe, xs, ts, None);
        probe.params_mut()[i] = p0 - FD_STEP;
        let down = squared_loss(&probe, xs, ts, None);
        probe.params_mut()[i] = p0;
        let fd = (up - down) / (2.0 * FD_STEP);
        let g = grad[i];
        let big = g.abs().max(fd.abs());
        if big < 1e-12 {
            continue;
        }
        worst = worst.max((g - fd).abs() / big);
    }
    worst
}

/// Parameters probed by [`gradient_check`].
pub const CHECKED_PARAMS: usize = 50;
/// Largest network [`gradient_check`] accepts.
pub const CHECK_MAX_PARAMS: usize = 200;

/// Backprop against finite differences for the network `config` describes,
/// on a squared-error loss over 16 training points.
pub fn gradient_check(config: &TrainConfig) -> Result<f64> {
    let mlp = init_mlp(config)?;
    if mlp.param_count() > CHECK_MAX_PARAMS {
        return Err(Error::Invalid(format!(
            "gradient check is limited to {CHECK_MAX_PARAMS} parameters, network has {}",
            mlp.param_count()
        )));
    }
    let mut rng = config.rng(STREAM_CHECK);
    let mut xs = Vec::with_capacity(16);
    let mut ts = Vec::with_capacity(16);
    for _ in 0..16 {
        let mut x = vec![0.0; config.n];
        ts.push(config.sample(&mut rng, &mut x));
        xs.push(x);
    }
    let count = CHECKED_PARAMS.min(mlp.param_count());
    let mut indices = index::sample(&mut rng, mlp.param_count(), count).into_vec();
    indices.sort_unstable();
    Ok(gradient_deviation(&mlp, &xs, &ts, &indices))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> TrainConfig {
        TrainConfig {
            n: 2,
            depth: 2,
            width: 6,
            steps: 200,
            eval_samples: 2000,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn init_is_deterministic() {
        let a = init_mlp(&small()).unwrap();
        let b = init_mlp(&small()).unwrap();
        assert_eq!(a, b);
        let c = init_mlp(&TrainConfig { seed: 1, ..small() }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_steps_reports_baseline() {
        let r = train(&TrainConfig { steps: 0, ..small() }).unwrap();
        assert!(r.err_history.is_empty());
        assert!(r.final_test_err > 0.0);
    }

    #[test]
    fn training_reduces_error() {
        let before = train(&TrainConfig { steps: 0, ..small() }).unwrap();
        let after = train(&small()).unwrap();
        assert!(after.final_test_err < before.final_test_err);
        assert_eq!(after.err_history.len(), 100);
    }

    #[test]
    fn backprop_matches_differences() {
        assert!(gradient_check(&small()).unwrap() < 1e-5);
        let big = TrainConfig { width: 20, ..small() };
        assert!(gradient_check(&big).is_err());
    }

    #[test]
    fn invalid_configs() {
        assert!(train(&TrainConfig { width: 0, ..small() }).is_err());
        assert!(train(&TrainConfig { rho: 1.0, ..small() }).is_err());
        assert!(train(&TrainConfig { input_low: 2.0, ..small() }).is_err());
    }
}
