use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use polydepth::bounds::{monomial_bounds, solve_optimal_groups, sparse_bounds, DepthPlan};
use polydepth::constructors::{build_polynomial_network, univariate_network, Mode};
use polydepth::selftest::{run_all, run_criterion, SelftestOptions};
use polydepth::trainer::{experiment_grid, heatmap_svg, write_grid_csv, GridSpec, TrainConfig};
use polydepth::verifier::{
    check_taylor, derivative_matrix_rank, epsilonize, taylor_certificate, EpsilonOptions, TAYLOR_TOL,
};
use polydepth::{ExponentVector, FeedforwardNetwork, Nonlinearity, SparsePolynomial};

/// Explicit networks for multivariate polynomials.
#[derive(Parser)]
#[command(name = "polydepth", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a network for a polynomial and print its certificate.
    Construct(ConstructArgs),
    /// Check a saved network against a polynomial.
    Verify(VerifyArgs),
    /// Rank of the derivative matrix of a one-hidden-layer network.
    Rank(RankArgs),
    /// Neuron-count bounds for a monomial or sparse polynomial.
    Bounds(BoundsArgs),
    /// Optimal group sizes for a depth-k product tree.
    Plan(PlanArgs),
    /// Group sizes over a range of input counts.
    PlanSweep(PlanSweepArgs),
    /// Train a depth × width grid of MLPs on the product function.
    Experiment(ExperimentArgs),
    /// Run the acceptance checks and print a pass/fail table.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct SamplingArgs {
    /// Half-width R of the box (−R, R)ⁿ.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Low-discrepancy sample count; the 2ⁿ corners are added on top.
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SamplingArgs {
    fn options(&self) -> EpsilonOptions {
        EpsilonOptions {
            samples: self.samples,
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct ConstructArgs {
    /// Target polynomial, e.g. "x1*x2*x3" or "2*x1^2 - x2 + 1".
    #[arg(long)]
    target: String,
    /// shallow, deep, tree, tree:<k> or univariate.
    #[arg(long, default_value = "shallow")]
    mode: String,
    #[arg(long, default_value = "exp")]
    activation: String,
    /// Rescale until the uniform error on the box is below this.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Network JSON destination.
    #[arg(long)]
    out: PathBuf,
    /// Certificate JSON destination; standard output if absent.
    #[arg(long)]
    certificate: Option<PathBuf>,
    #[command(flatten)]
    sampling: SamplingArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    target: String,
    /// Search for a rescaling that meets this uniform error.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Where to write the rescaled network when --epsilon is given.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    sampling: SamplingArgs,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long)]
    network: PathBuf,
    /// Exponent vector, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    r: Vec<u32>,
}

#[derive(Args)]
struct BoundsArgs {
    /// Exponent vector, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "target", required_unless_present = "target")]
    r: Vec<u32>,
    /// Sparse polynomial instead of a single monomial.
    #[arg(long)]
    target: Option<String>,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    n: f64,
    #[arg(long)]
    k: usize,
    /// CSV rows `n,k,i,b_i,b_i_over_n^(1/k)` instead of JSON.
    #[arg(long)]
    emit_csv: bool,
}

#[derive(Args)]
struct PlanSweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    k: Vec<usize>,
    /// `log:A..B` (optionally `log:A..B:P` with P points per decade) or a
    /// comma separated list.
    #[arg(long, default_value = "log:10..1e6")]
    n_grid: String,
    /// CSV instead of a JSON array of plans.
    #[arg(long)]
    emit_csv: bool,
    /// Destination; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    depths: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,40")]
    widths: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 30_000)]
    steps: usize,
    #[arg(long, default_value = "tanh")]
    activation: String,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    #[arg(long, default_value_t = 100_000)]
    eval_samples: usize,
    /// The 20-input grid: depths 1..6, widths 16..1024. Takes many hours.
    #[arg(long)]
    full_grid: bool,
    /// Allow more than 8 inputs without --full-grid.
    #[arg(long)]
    long: bool,
    /// Write 0 in the wallclock column so reruns are byte-identical.
    #[arg(long)]
    no_wallclock: bool,
    #[arg(long)]
    out: PathBuf,
    /// Heatmap destination.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    /// Run only these criteria (1 to 7); the determinism rerun needs all.
    #[arg(long, value_delimiter = ',')]
    only: Vec<u8>,
    #[arg(long, default_value_t = 30_000)]
    steps: usize,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 100_000)]
    eval_samples: usize,
}

enum Failure {
    /// A requested check did not hold.
    Verification(String),
    Usage(String),
    Runtime(String),
}

impl From<polydepth::Error> for Failure {
    fn from(e: polydepth::Error) -> Self {
        match e {
            polydepth::Error::Parse { .. } => Failure::Usage(e.to_string()),
            polydepth::Error::DeltaFloor { .. } | polydepth::Error::EpsilonNotReached { .. } => {
                Failure::Verification(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Writes via a temporary file in the same directory and renames it, so a
/// failed command never leaves a partial artifact.
fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn parse_target(s: &str) -> Result<SparsePolynomial, Failure> {
    s.parse().map_err(|e: polydepth::Error| Failure::Usage(e.to_string()))
}

fn parse_activation(s: &str) -> Result<Nonlinearity, Failure> {
    s.parse().map_err(|e: polydepth::Error| Failure::Usage(e.to_string()))
}

fn load_network(path: &Path) -> Result<FeedforwardNetwork, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    Ok(FeedforwardNetwork::from_json(&text)?)
}

fn print(text: &str) -> Outcome {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn coefficient_scale(p: &SparsePolynomial) -> f64 {
    p.monomials().iter().fold(1.0f64, |m, (c, _)| m.max(c.abs()))
}

fn construct(args: ConstructArgs) -> Outcome {
    let p = parse_target(&args.target)?;
    let sigma = parse_activation(&args.activation)?;
    let net = if args.mode == "univariate" {
        univariate_network(&p, sigma)?.network
    } else {
        let mode: Mode = args.mode.parse().map_err(|e: polydepth::Error| Failure::Usage(e.to_string()))?;
        build_polynomial_network(&p, sigma, mode)?
    };
    let opts = args.sampling.options();
    let (net, cert) = match args.epsilon {
        Some(eps) => epsilonize(&net, &p, eps, args.sampling.radius, opts)?,
        None => {
            let cert = taylor_certificate(&net, &p, args.sampling.radius, opts)?;
            (net, cert)
        }
    };
    write_atomic(&args.out, net.to_json().as_bytes())?;
    match &args.certificate {
        Some(path) => write_atomic(path, cert.to_json().as_bytes())?,
        None => print(&cert.to_json())?,
    }
    eprintln!(
        "{}: {} hidden neurons ({} padding, {} correction) in {} layers",
        args.out.display(),
        net.neuron_count(),
        net.padding_count(),
        net.correction_count(),
        net.depth()
    );
    Ok(())
}

fn verify(args: VerifyArgs) -> Outcome {
    let net = load_network(&args.network)?;
    let p = parse_target(&args.target)?;
    let opts = args.sampling.options();
    let tol = TAYLOR_TOL * coefficient_scale(&p);
    let deviation = check_taylor(&net, &p)?;
    match args.epsilon {
        Some(_) if deviation > tol => {
            return Err(Failure::Verification(format!(
                "coefficient deviation {deviation:e} exceeds {tol:e}; no rescaling can help"
            )));
        }
        Some(eps) => {
            let (scaled, cert) = epsilonize(&net, &p, eps, args.sampling.radius, opts)?;
            if let Some(out) = &args.out {
                write_atomic(out, scaled.to_json().as_bytes())?;
            }
            print(&cert.to_json())?;
            if !cert.holds() {
                return Err(Failure::Verification(format!("epsilon {eps:e} not reached")));
            }
        }
        None => {
            let cert = taylor_certificate(&net, &p, args.sampling.radius, opts)?;
            print(&cert.to_json())?;
            if deviation > tol {
                return Err(Failure::Verification(format!(
                    "coefficient deviation {deviation:e} exceeds {tol:e}"
                )));
            }
        }
    }
    Ok(())
}

fn rank(args: RankArgs) -> Outcome {
    let net = load_network(&args.network)?;
    let report = derivative_matrix_rank(&net, &ExponentVector::new(args.r))?;
    print(&report.to_json())
}

fn bounds(args: BoundsArgs) -> Outcome {
    let report = match &args.target {
        Some(t) => sparse_bounds(&parse_target(t)?)?,
        None => monomial_bounds(&ExponentVector::new(args.r))?,
    };
    print(&report.to_json())
}

const PLAN_CSV_HEADER: [&str; 5] = ["n", "k", "i", "b_i", "b_i_over_n^(1/k)"];

fn plan_csv<W: Write>(plans: &[DepthPlan], out: W) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Failure::Runtime(e.to_string());
    w.write_record(PLAN_CSV_HEADER).map_err(err)?;
    for plan in plans {
        let root = plan.n.powf(1.0 / plan.k as f64);
        for (i, b) in plan.b.iter().enumerate() {
            w.write_record([
                plan.n.to_string(),
                plan.k.to_string(),
                (i + 1).to_string(),
                b.to_string(),
                (b / root).to_string(),
            ])
            .map_err(err)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn plan(args: PlanArgs) -> Outcome {
    let plan = solve_optimal_groups(args.n, args.k)?;
    if args.emit_csv {
        plan_csv(&[plan], io::stdout().lock())
    } else {
        print(&plan.to_json())
    }
}

/// `log:A..B[:P]` or `a,b,c`.
fn parse_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::Usage(format!("bad n grid `{spec}`"));
    let num = |s: &str| s.trim().parse::<f64>().ok().filter(|v| v.is_finite() && *v > 0.0);
    if let Some(rest) = spec.strip_prefix("log:") {
        let (range, per_decade) = match rest.split_once(':') {
            Some((r, p)) => (r, p.parse::<usize>().map_err(|_| bad())?),
            None => (rest, 4),
        };
        let (a, b) = range.split_once("..").ok_or_else(bad)?;
        let (a, b) = (num(a).ok_or_else(bad)?, num(b).ok_or_else(bad)?);
        if a >= b || per_decade == 0 {
            return Err(bad());
        }
        let steps = ((b / a).log10() * per_decade as f64).round() as usize;
        Ok((0..=steps)
            .map(|i| a * 10f64.powf(i as f64 / per_decade as f64))
            .collect())
    } else {
        spec.split(',').map(|s| num(s).ok_or_else(bad)).collect()
    }
}

fn plan_sweep(args: PlanSweepArgs) -> Outcome {
    let grid = parse_grid(&args.n_grid)?;
    let mut plans = Vec::new();
    for &k in &args.k {
        for &n in &grid {
            match solve_optimal_groups(n, k) {
                Ok(p) => plans.push(p),
                Err(e @ polydepth::Error::PlanDomain { .. }) => eprintln!("skipping n = {n}: {e}"),
                Err(e) => return Err(e.into()),
            }
        }
    }
    let mut buf = Vec::new();
    if args.emit_csv {
        plan_csv(&plans, &mut buf)?;
    } else {
        let values: Vec<serde_json::Value> = plans
            .iter()
            .map(|p| serde_json::from_str(&p.to_json()).expect("plan JSON"))
            .collect();
        buf = serde_json::to_vec_pretty(&values).map_err(|e| Failure::Runtime(e.to_string()))?;
        buf.push(b'\n');
    }
    match &args.out {
        Some(path) => Ok(write_atomic(path, &buf)?),
        None => print(&String::from_utf8_lossy(&buf)),
    }
}

fn threads() -> usize {
    let machine = std::thread::available_parallelism().map_or(1, |n| n.get());
    std::env::var("POLYDEPTH_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t > 0)
        .map_or(machine, |t| t.min(machine))
}

fn experiment(mut args: ExperimentArgs) -> Outcome {
    if args.full_grid {
        args.n = 20;
        args.depths = (1..=6).collect();
        args.widths = vec![16, 32, 64, 128, 256, 512, 1024];
    } else if args.n > 8 && !args.long {
        return Err(Failure::Usage(format!(
            "n = {} trains for a long time; pass --long to run it anyway",
            args.n
        )));
    }
    let activation = parse_activation(&args.activation)?;
    let base = TrainConfig {
        n: args.n,
        activation,
        steps: args.steps,
        batch_size: args.batch_size,
        eval_samples: args.eval_samples,
        ..TrainConfig::default()
    };
    let spec = GridSpec {
        base,
        depths: args.depths,
        widths: args.widths,
        seeds: args.seeds,
    };
    let total = spec.configs().len();
    let mut done = 0;
    let rows = experiment_grid(&spec, threads(), |row| {
        done += 1;
        match &row.error {
            Some(e) => eprintln!("[{done}/{total}] depth {} width {} seed {}: {e}", row.depth, row.width, row.seed),
            None => eprintln!(
                "[{done}/{total}] depth {} width {} seed {}: test error {:.4}",
                row.depth, row.width, row.seed, row.test_err
            ),
        }
    })?;
    let mut csv = Vec::new();
    write_grid_csv(&rows, &mut csv, !args.no_wallclock)?;
    write_atomic(&args.out, &csv)?;
    if let Some(path) = &args.svg {
        write_atomic(path, heatmap_svg(&rows).as_bytes())?;
    }
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        return Err(Failure::Runtime(format!("{failed} of {total} runs failed")));
    }
    Ok(())
}

fn selftest(args: SelftestArgs) -> Outcome {
    let opts = SelftestOptions {
        training_steps: args.steps,
        training_seeds: args.seeds,
        eval_samples: args.eval_samples,
        threads: threads(),
    };
    if let Some(&bad) = args.only.iter().find(|&&id| !(1..=7).contains(&id)) {
        return Err(Failure::Usage(format!("criterion {bad} cannot run alone")));
    }
    let reports = if args.only.is_empty() {
        run_all(&opts, |r| println!("{}", r.line()))
    } else {
        args.only
            .iter()
            .map(|&id| {
                let r = run_criterion(id, &opts);
                println!("{}", r.line());
                r
            })
            .collect()
    };
    let failed: Vec<u8> = reports.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(format!("criteria {failed:?} failed")))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Construct(a) => construct(a),
        Command::Verify(a) => verify(a),
        Command::Rank(a) => rank(a),
        Command::Bounds(a) => bounds(a),
        Command::Plan(a) => plan(a),
        Command::PlanSweep(a) => plan_sweep(a),
        Command::Experiment(a) => experiment(a),
        Command::Selftest(a) => selftest(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("polydepth: verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("polydepth: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("polydepth: {msg}");
            ExitCode::from(3)
        }
    }
}
