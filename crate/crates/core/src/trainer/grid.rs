use std::collections::BTreeMap;
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use serde::Serialize;

use super::{train, TrainConfig};
use crate::bounds::asymptotic_width;
use crate::error::{Error, Result};
use crate::numeric::json_f64;

/// Column names of the grid CSV.
pub const CSV_HEADER: [&str; 10] = [
    "n",
    "depth",
    "width",
    "seed",
    "steps",
    "activation",
    "train_err",
    "test_err",
    "theory_width",
    "wallclock_s",
];

/// A depth × width × seed sweep around a base configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub base: TrainConfig,
    pub depths: Vec<usize>,
    pub widths: Vec<usize>,
    pub seeds: Vec<u64>,
}

impl GridSpec {
    /// Every run in grid order: depth, then width, then seed.
    pub fn configs(&self) -> Vec<TrainConfig> {
        let mut out = Vec::new();
        for &depth in &self.depths {
            for &width in &self.widths {
                for &seed in &self.seeds {
                    out.push(TrainConfig {
                        depth,
                        width,
                        seed,
                        ..self.base.clone()
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub n: usize,
    pub depth: usize,
    pub width: usize,
    pub seed: u64,
    pub steps: usize,
    pub activation: String,
    #[serde(serialize_with = "json_f64::one")]
    pub train_err: f64,
    #[serde(serialize_with = "json_f64::one")]
    pub test_err: f64,
    #[serde(serialize_with = "json_f64::one")]
    pub theory_width: f64,
    #[serde(serialize_with = "json_f64::one")]
    pub wallclock_s: f64,
    /// Set when the run failed; the error columns are then NaN.
    pub error: Option<String>,
}

impl GridRow {
    fn from_run(config: &TrainConfig, run: Result<super::TrainResult>) -> Self {
        let (train_err, test_err, wallclock_s, error) = match run {
            Ok(r) => (r.final_train_err, r.final_test_err, r.wallclock_s, None),
            Err(e) => (f64::NAN, f64::NAN, 0.0, Some(e.to_string())),
        };
        Self {
            n: config.n,
            depth: config.depth,
            width: config.width,
            seed: config.seed,
            steps: config.steps,
            activation: config.activation.name().to_string(),
            train_err,
            test_err,
            theory_width: asymptotic_width(config.n as u64, config.depth as u32),
            wallclock_s,
            error,
        }
    }

    fn record(&self, wallclock: bool) -> [String; 10] {
        let wall = if wallclock { self.wallclock_s } else { 0.0 };
        [
            self.n.to_string(),
            self.depth.to_string(),
            self.width.to_string(),
            self.seed.to_string(),
            self.steps.to_string(),
            self.activation.clone(),
            self.train_err.to_string(),
            self.test_err.to_string(),
            self.theory_width.to_string(),
            format!("{wall:.3}"),
        ]
    }
}

/// Runs every configuration of `spec` on up to `threads` worker threads.
///
/// Runs share nothing and draw their randomness from their own
/// configuration, so results do not depend on scheduling. `sink` sees the
/// rows in grid order as soon as each prefix is complete. A failed run
/// yields a row carrying its error; the rest of the grid continues.
pub fn experiment_grid<F>(spec: &GridSpec, threads: usize, mut sink: F) -> Result<Vec<GridRow>>
where
    F: FnMut(&GridRow),
{
    if spec.depths.is_empty() || spec.widths.is_empty() || spec.seeds.is_empty() {
        return Err(Error::Invalid("grid needs at least one depth, width and seed".into()));
    }
    spec.base.validate()?;
    let configs = spec.configs();
    let next = AtomicUsize::new(0);
    let workers = threads.max(1).min(configs.len());
    let mut rows = Vec::with_capacity(configs.len());
    std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel();
        for _ in 0..workers {
            let tx = tx.clone();
            let (configs, next) = (&configs, &next);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(config) = configs.get(i) else { break };
                let row = GridRow::from_run(config, train(config));
                if tx.send((i, row)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut pending = BTreeMap::new();
        for (i, row) in rx {
            pending.insert(i, row);
            while let Some(row) = pending.remove(&rows.len()) {
                sink(&row);
                rows.push(row);
            }
        }
    });
    Ok(rows)
}

/// Writes `rows` as CSV; with `wallclock` off the timing column is zero so
/// reruns are byte-identical.
pub fn write_grid_csv<W: Write>(rows: &[GridRow], out: W, wallclock: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
    w.write_record(CSV_HEADER).map_err(io)?;
    for row in rows {
        w.write_record(row.record(wallclock)).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Invalid(format!("csv: {e}")))?;
    Ok(())
}
