use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use quaddiag::experiment::{run_experiment, ExperimentSpec, MatrixSource, Selector, GRID_MSC10480, GRID_SYNTHETIC};
use quaddiag::theory::{self, PlanMode, SamplePlan};
use quaddiag::{estimate_diagonal, estimate_diagonal_median, explicit_oracle, Error, MatrixHandle};

const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_DEGENERATE: u8 = 3;

/// Diagonal estimation from quadratic-form queries.
#[derive(Parser, Debug)]
#[command(name = "quaddiag", version)]
struct Cli {
    /// Worker threads (defaults to the number of CPUs). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the diagonal of a matrix.
    Estimate(EstimateArgs),
    /// Print theoretical sample sizes.
    Predict(PredictArgs),
    /// Run a relative-error sweep and write results.csv plus SVG plots.
    Experiment(ExperimentArgs),
}

#[derive(Args, Debug)]
struct MatrixArgs {
    /// gauss:D, uniform:D or mm:PATH
    #[arg(long)]
    matrix: String,

    /// Seed for the synthetic gauss:/uniform: generators.
    #[arg(long, default_value_t = 1)]
    matrix_seed: u64,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[command(flatten)]
    source: MatrixArgs,

    /// Samples (per repeat when --median-T is given).
    #[arg(long)]
    n: u64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Use the median of T repeats.
    #[arg(long = "median-T")]
    median_t: Option<u64>,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[command(flatten)]
    source: MatrixArgs,

    #[arg(long)]
    eps: f64,

    #[arg(long)]
    delta: f64,

    /// 1-based index, or first | argmax | argmin.
    #[arg(long, conflicts_with = "normwise")]
    p: Option<String>,

    /// Plan for the norm-wise target instead of a single entry.
    #[arg(long)]
    normwise: bool,

    /// Plan for the median-of-repeats estimator.
    #[arg(long, conflicts_with = "normwise")]
    median: bool,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[command(flatten)]
    source: MatrixArgs,

    /// Comma-separated, strictly increasing sample sizes.
    #[arg(long)]
    grid: Option<String>,

    #[arg(long, default_value_t = 10)]
    repeats: u64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// δ used for the theory curves.
    #[arg(long, default_value_t = 1.0)]
    delta: f64,

    #[arg(long)]
    out: PathBuf,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) | Error::Parse { .. } | Error::UnsupportedShape { .. } | Error::UnsupportedField(_) => EXIT_IO,
            Error::DegenerateTarget(_) => EXIT_DEGENERATE,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_IO,
        message: e.to_string(),
    }
}

fn parse_source(s: &str) -> Result<MatrixSource, Failure> {
    s.parse::<MatrixSource>().map_err(|e| Failure::usage(e.to_string()))
}

fn load(source: &MatrixSource, matrix_seed: u64) -> Result<MatrixHandle, Failure> {
    source.load(matrix_seed).map_err(|e| {
        let code = match e {
            Error::InvalidArgument(_) if !matches!(source, MatrixSource::MatrixMarket(_)) => EXIT_USAGE,
            Error::DegenerateTarget(_) => EXIT_DEGENERATE,
            _ => EXIT_IO,
        };
        Failure {
            code,
            message: format!("cannot load {source}: {e}"),
        }
    })
}

fn resolve_index(spec: &str, m: &MatrixHandle) -> Result<usize, Failure> {
    let selector = match spec {
        "first" => Selector::First,
        "argmax" => Selector::ArgMax,
        "argmin" => Selector::ArgMin,
        other => {
            let p: usize = other
                .parse()
                .map_err(|_| Failure::usage(format!("--p must be an index or first|argmax|argmin, got '{other}'")))?;
            if p == 0 || p > m.dim() {
                return Err(Failure::usage(format!("--p {p} outside 1..={}", m.dim())));
            }
            return Ok(p - 1);
        }
    };
    Ok(selector.index(m).expect("element-wise selector"))
}

fn cmd_estimate(args: EstimateArgs, out: &mut impl Write) -> Result<(), Failure> {
    let source = parse_source(&args.source.matrix)?;
    if args.n == 0 {
        return Err(Failure::usage("--n must be at least 1"));
    }
    let m = load(&source, args.source.matrix_seed)?;
    let oracle = explicit_oracle(&m);
    let start = Instant::now();
    let g = match args.median_t {
        Some(t) => estimate_diagonal_median(&oracle, args.n, t, args.seed)?,
        None => estimate_diagonal(&oracle, args.n, args.seed)?,
    };
    let elapsed = start.elapsed();

    writeln!(out, "# matrix={} d={}", source, m.dim()).map_err(io_failure)?;
    writeln!(
        out,
        "# samples={} repeats={} queries={} seed={}",
        g.samples, g.repeats, g.queries, g.seed
    )
    .map_err(io_failure)?;
    writeln!(out, "index,estimate").map_err(io_failure)?;
    for (p, v) in g.values.iter().enumerate() {
        writeln!(out, "{},{}", p + 1, v).map_err(io_failure)?;
    }
    // Timing stays off stdout so repeated runs produce identical bytes.
    eprintln!("wall_time_ms={:.3}", elapsed.as_secs_f64() * 1e3);
    Ok(())
}

fn print_plan(out: &mut impl Write, plan: &SamplePlan) -> std::io::Result<()> {
    writeln!(out, "epsilon={}", plan.epsilon)?;
    writeln!(out, "delta={}", plan.delta)?;
    match plan.mode {
        PlanMode::Elementwise { index, variance } => {
            writeln!(out, "mode=elementwise")?;
            writeln!(out, "p={}", index + 1)?;
            writeln!(out, "variance={variance}")?;
            writeln!(out, "N={}", plan.samples)?;
        }
        PlanMode::Normwise {
            total_variance,
            diag_norm_sq,
        } => {
            writeln!(out, "mode=normwise")?;
            writeln!(out, "total_variance={total_variance}")?;
            writeln!(out, "diag_norm_sq={diag_norm_sq}")?;
            writeln!(out, "N={}", plan.samples)?;
        }
        PlanMode::Median {
            index,
            variance,
            repeats,
        } => {
            writeln!(out, "mode=median")?;
            writeln!(out, "p={}", index + 1)?;
            writeln!(out, "variance={variance}")?;
            writeln!(out, "N_prime={}", plan.samples)?;
            writeln!(out, "T={repeats}")?;
            writeln!(out, "total_queries={}", plan.total_queries())?;
        }
        PlanMode::MatVec {
            index,
            off_diagonal_row_sq,
        } => {
            writeln!(out, "mode=matvec")?;
            writeln!(out, "p={}", index + 1)?;
            writeln!(out, "off_diagonal_row_sq={off_diagonal_row_sq}")?;
            writeln!(out, "N={}", plan.samples)?;
        }
    }
    Ok(())
}

fn cmd_predict(args: PredictArgs, out: &mut impl Write) -> Result<(), Failure> {
    let source = parse_source(&args.source.matrix)?;
    if !(args.eps > 0.0 && args.eps.is_finite()) {
        return Err(Failure::usage("--eps must be positive"));
    }
    if !(args.delta > 0.0 && args.delta < 1.0) {
        return Err(Failure::usage("--delta must lie in (0, 1)"));
    }
    let m = load(&source, args.source.matrix_seed)?;
    writeln!(out, "# matrix={} d={}", source, m.dim()).map_err(io_failure)?;
    if args.normwise {
        let plan = theory::sample_size_normwise(&m, args.eps, args.delta)?;
        let report = theory::total_variance(&m);
        print_plan(out, &plan).map_err(io_failure)?;
        writeln!(out, "printed_closed_form={}", report.printed_closed_form).map_err(io_failure)?;
        writeln!(out, "corrected_closed_form={}", report.corrected_closed_form).map_err(io_failure)?;
        return Ok(());
    }
    let p = resolve_index(args.p.as_deref().unwrap_or("first"), &m)?;
    let plan = if args.median {
        theory::sample_size_median(&m, p, args.eps, args.delta)?
    } else {
        theory::sample_size_elementwise(&m, p, args.eps, args.delta)?
    };
    print_plan(out, &plan).map_err(io_failure)?;
    let baseline = theory::sample_size_matvec_elementwise(&m, p, args.eps, args.delta)?;
    writeln!(out, "matvec_N={}", baseline.samples).map_err(io_failure)?;
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs, out: &mut impl Write) -> Result<(), Failure> {
    let source = parse_source(&args.source.matrix)?;
    let grid = match &args.grid {
        Some(g) => quaddiag::experiment::parse_grid(g).map_err(|e| Failure::usage(e.to_string()))?,
        None => match source {
            MatrixSource::MatrixMarket(_) => GRID_MSC10480.to_vec(),
            _ => GRID_SYNTHETIC.to_vec(),
        },
    };
    let spec = ExperimentSpec {
        repeats: args.repeats,
        delta: args.delta,
        ..ExperimentSpec::new(source.clone(), grid, args.seed)
    };
    spec.validate().map_err(|e| Failure::usage(e.to_string()))?;

    if let MatrixSource::MatrixMarket(path) = &source {
        if !path.exists() {
            eprintln!("warning: {} not found; skipping experiment", path.display());
            return Ok(());
        }
    }
    let m = load(&source, args.source.matrix_seed)?;
    let result = run_experiment(&spec, &m)?;
    let written = result.write_to(&args.out)?;
    for path in written {
        writeln!(out, "wrote {}", path.display()).map_err(io_failure)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Estimate(a) => cmd_estimate(a, &mut out),
        Command::Predict(a) => cmd_predict(a, &mut out),
        Command::Experiment(a) => cmd_experiment(a, &mut out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match pool.install(|| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
