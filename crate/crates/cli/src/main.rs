use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use granger_core::blockdetect::{BlockEstimate, OracleSigma, SigmaSource};
use granger_core::config::ModelConfig;
use granger_core::harness::ingest::RowReader;
use granger_core::harness::{
    default_pfa_levels, emit, ingest_pair, run_roc, run_windowed, threshold_grid, write_table, IngestOptions,
    OutputFormat, Tabular,
};
use granger_core::model::{SecondOrderStats, VarModel};
use granger_core::scalar::{Field, Scalar};
use granger_core::seqdetect::{SeqConfig, SeqDetector, SigmaMode, Verdict};
use granger_core::simulate::{corrupt, default_burn_in, derive_seed, generate};
use granger_core::stats::{tail_probability, threshold_for_pfa};
use num_complex::Complex64;

#[derive(Parser)]
#[command(
    name = "granger",
    version,
    about = "Granger causality detection for noisy bivariate series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a VAR model and print `y x` columns (cause first).
    Simulate(SimulateArgs),
    /// Block test on consecutive windows of a sample file.
    BlockTest(BlockTestArgs),
    /// Threshold for a false-alarm level and predicted detection probability.
    Calibrate(CalibrateArgs),
    /// Streaming sequential test, one output line per input sample.
    Sequential(SequentialArgs),
    /// Monte Carlo ROC of the block test on a simulated model.
    Roc(RocArgs),
    /// ROC of the block test on a recorded two-column pair with injected noise.
    Windowed(WindowedArgs),
}

/// Model selection shared by the simulation commands.
#[derive(Args, Clone)]
struct ModelArgs {
    /// TOML model description.
    #[arg(long, conflicts_with = "toy")]
    config: Option<PathBuf>,
    /// First-order toy model with coupling `a` and unit innovations.
    #[arg(long)]
    toy: Option<f64>,
    #[arg(long, default_value = "complex")]
    field: Field,
    /// Measurement SNR in dB on both series; overrides any noise in the config.
    #[arg(long)]
    snr: Option<f64>,
}

impl ModelArgs {
    fn resolve(&self) -> Result<ModelConfig> {
        let mut cfg = match (&self.config, self.toy) {
            (Some(path), _) => ModelConfig::load(path)?,
            (None, Some(a)) => ModelConfig::toy(a, self.field),
            (None, None) => bail!("pass either --config FILE or --toy A"),
        };
        if let Some(db) = self.snr {
            cfg.snr_x_db = Some(db);
            cfg.snr_y_db = Some(db);
            cfg.sigma2_nu_x = None;
            cfg.sigma2_nu_y = None;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(short = 'n', long)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Discarded leading samples; defaults to 100 K.
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct InputArgs {
    /// Sample file (`-` or omitted for stdin). Real data has two columns,
    /// complex data four (`re im` per series).
    input: Option<PathBuf>,
    #[arg(long, default_value = "real")]
    field: Field,
    /// Treat the second column pair as the cause instead of the first.
    #[arg(long)]
    effect_first: bool,
}

#[derive(Args)]
struct BlockTestArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(short = 'k', long)]
    order: usize,
    /// Window length; defaults to the whole series.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long, conflicts_with = "pfa")]
    threshold: Option<f64>,
    #[arg(long)]
    pfa: Option<f64>,
    #[arg(long, default_value = "plugin")]
    sigma: SigmaMode,
    /// Model file supplying the true statistics for `--sigma oracle`.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(short = 'k', long)]
    order: usize,
    #[arg(long, default_value = "complex")]
    field: Field,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Noncentrality of the statistic; repeat for several values.
    #[arg(long = "kappa")]
    kappa: Vec<f64>,
}

#[derive(Args)]
struct SequentialArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(short = 'k', long)]
    order: usize,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 1e-6)]
    delta: f64,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0.05)]
    beta: f64,
    /// Truncation horizon; defaults to 20 K / alpha.
    #[arg(long)]
    nmax: Option<usize>,
    #[arg(long, default_value = "plugin")]
    sigma: SigmaMode,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// `csv` or `jsonl`; inferred from the output extension when omitted.
    #[arg(long)]
    format: Option<OutputFormat>,
}

impl OutputArgs {
    fn write<R: Tabular>(&self, result: &R) -> Result<()> {
        match &self.output {
            Some(path) => {
                let format = self.format.unwrap_or_else(|| OutputFormat::from_path(path));
                emit(result, path, format)?;
            }
            None => write_table(result, io::stdout().lock(), self.format.unwrap_or(OutputFormat::Csv))?,
        }
        Ok(())
    }
}

#[derive(Args)]
struct RocArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(short = 'n', long)]
    samples: usize,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "plugin")]
    sigma: SigmaMode,
    /// False-alarm levels for the threshold grid (comma separated).
    #[arg(long, value_delimiter = ',')]
    pfa: Vec<f64>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct WindowedArgs {
    input: PathBuf,
    #[arg(short = 'k', long, default_value_t = 1)]
    order: usize,
    #[arg(long, default_value_t = 50)]
    window: usize,
    #[arg(long)]
    snr: f64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',')]
    pfa: Vec<f64>,
    #[arg(long)]
    effect_first: bool,
    #[command(flatten)]
    out: OutputArgs,
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn open_input(path: Option<&Path>) -> Result<Box<dyn BufRead>> {
    Ok(match path {
        Some(p) if p.as_os_str() != "-" => Box::new(BufReader::new(
            File::open(p).with_context(|| format!("cannot open {}", p.display()))?,
        )),
        _ => Box::new(BufReader::new(io::stdin().lock())),
    })
}

fn fmt_scalar<T: Scalar>(v: T) -> String {
    match T::FIELD {
        Field::Real => format!("{}", v.re_f64()),
        Field::Complex => format!("{} {}", v.re_f64(), v.im_f64()),
    }
}

fn simulate_typed<T: Scalar>(args: &SimulateArgs, cfg: &ModelConfig) -> Result<()> {
    let model: VarModel<T> = cfg.model()?;
    let noise = cfg.noise(&model)?;
    let burn_in = args.burn_in.unwrap_or_else(|| default_burn_in(model.order()));
    let clean = generate(&model, args.samples, derive_seed(args.seed, 0, 0), burn_in)?;
    let path = corrupt(&clean, &noise, derive_seed(args.seed, 1, 0))?;
    let mut out = open_output(args.output.as_deref())?;
    match T::FIELD {
        Field::Real => writeln!(out, "# y x")?,
        Field::Complex => writeln!(out, "# y_re y_im x_re x_im")?,
    }
    for (x, y) in path.x.iter().zip(&path.y) {
        writeln!(out, "{} {}", fmt_scalar(*y), fmt_scalar(*x))?;
    }
    out.flush()?;
    Ok(())
}

fn row_to_pair<T: Scalar>(row: &[f64], effect_first: bool) -> (T, T) {
    let (first, second) = match T::FIELD {
        Field::Real => (T::from_parts(row[0], 0.0), T::from_parts(row[1], 0.0)),
        Field::Complex => (T::from_parts(row[0], row[1]), T::from_parts(row[2], row[3])),
    };
    if effect_first {
        (first, second)
    } else {
        (second, first)
    }
}

fn columns_for(field: Field) -> usize {
    match field {
        Field::Real => 2,
        Field::Complex => 4,
    }
}

fn read_pairs<T: Scalar>(input: &InputArgs) -> Result<(Vec<T>, Vec<T>)> {
    let reader = open_input(input.input.as_deref())?;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for row in RowReader::new(reader, Some(columns_for(T::FIELD))) {
        let (a, b) = row_to_pair::<T>(&row?, input.effect_first);
        x.push(a);
        y.push(b);
    }
    if x.is_empty() {
        bail!("input holds no samples");
    }
    Ok((x, y))
}

fn oracle_for<T: Scalar>(config: Option<&Path>, order: usize) -> Result<OracleSigma<T>> {
    let path = config.context("--sigma oracle needs --config with the true model")?;
    let cfg = ModelConfig::load(path)?;
    let model: VarModel<T> = cfg.model()?;
    if model.order() != order {
        bail!("config model has order {} but --order is {order}", model.order());
    }
    let noise = cfg.noise(&model)?;
    Ok(OracleSigma::from(&SecondOrderStats::new(&model, &noise)?))
}

fn block_test_typed<T: Scalar>(args: &BlockTestArgs) -> Result<()> {
    let (x, y) = read_pairs::<T>(&args.input)?;
    let k = args.order;
    let lambda = match (args.threshold, args.pfa) {
        (Some(l), _) => l,
        (None, Some(a)) => threshold_for_pfa(k, a, T::FIELD)?,
        (None, None) => threshold_for_pfa(k, 0.1, T::FIELD)?,
    };
    let source = match args.sigma {
        SigmaMode::Plugin => SigmaSource::Plugin,
        SigmaMode::Oracle => SigmaSource::Oracle(oracle_for::<T>(args.config.as_deref(), k)?),
    };
    let window = args.window.unwrap_or(x.len());
    if window == 0 || window > x.len() {
        bail!("window {window} does not fit {} samples", x.len());
    }
    let dof = T::FIELD.dof(k);
    let mut out = io::stdout().lock();
    if args.format == OutputFormat::Csv {
        writeln!(out, "window,start,n,statistic,threshold,p_value,decision")?;
    }
    for w in 0..x.len() / window {
        let start = w * window;
        let est = BlockEstimate::from_samples(&x[start..], &y[start..], k, window)?;
        let t = est.test_statistic(&source)?;
        let p_value = tail_probability(dof, 0.0, t)?;
        let decision = if t > lambda {
            Verdict::Causal
        } else {
            Verdict::Noncausal
        };
        match args.format {
            OutputFormat::Csv => writeln!(out, "{w},{start},{window},{t},{lambda},{p_value},{decision}")?,
            OutputFormat::JsonLines => writeln!(
                out,
                "{{\"window\":{w},\"start\":{start},\"n\":{window},\"statistic\":{t},\"threshold\":{lambda},\"p_value\":{p_value},\"decision\":\"{decision}\"}}"
            )?,
        }
    }
    Ok(())
}

fn calibrate(args: &CalibrateArgs) -> Result<()> {
    let lambda = threshold_for_pfa(args.order, args.alpha, args.field)?;
    let dof = args.field.dof(args.order);
    let mut out = io::stdout().lock();
    writeln!(out, "order,field,dof,alpha,lambda,kappa,p_d")?;
    let kappas = if args.kappa.is_empty() {
        vec![0.0]
    } else {
        args.kappa.clone()
    };
    for kappa in kappas {
        let p_d = tail_probability(dof, kappa, lambda)?;
        writeln!(
            out,
            "{},{},{dof},{},{lambda},{kappa},{p_d}",
            args.order, args.field, args.alpha
        )?;
    }
    Ok(())
}

fn sequential_typed<T: Scalar>(args: &SequentialArgs) -> Result<()> {
    let defaults = SeqConfig::new(args.order);
    let config = SeqConfig {
        mu: args.mu,
        delta: args.delta,
        alpha: args.alpha,
        beta: args.beta,
        n_max: args.nmax.unwrap_or(defaults.n_max),
        sigma_mode: args.sigma,
        ..defaults
    };
    let mut det = match args.sigma {
        SigmaMode::Plugin => SeqDetector::<T>::new(config)?,
        SigmaMode::Oracle => SeqDetector::<T>::with_oracle(config, oracle_for(args.config.as_deref(), args.order)?)?,
    };
    let (lambda0, lambda1) = det.thresholds();
    let reader = open_input(args.input.input.as_deref())?;
    let mut out = io::stdout().lock();
    writeln!(out, "n,statistic,lambda0,lambda1,verdict")?;
    let mut rows = RowReader::new(reader, Some(columns_for(T::FIELD)));
    while let Some(row) = rows.next() {
        let row = row?;
        let (x, y) = row_to_pair::<T>(&row, args.input.effect_first);
        let (t, decision) = det
            .step(x, y)
            .with_context(|| format!("at input line {}", rows.line_number()))?;
        writeln!(out, "{},{t},{lambda0},{lambda1},{}", decision.n, decision.verdict)?;
        out.flush()?;
        if decision.verdict.is_terminal() {
            break;
        }
    }
    Ok(())
}

fn roc_typed<T: Scalar>(args: &RocArgs, cfg: &ModelConfig) -> Result<()> {
    let model: VarModel<T> = cfg.model()?;
    let snr = match (cfg.snr_x_db, cfg.snr_y_db, cfg.sigma2_nu_x, cfg.sigma2_nu_y) {
        (Some(a), Some(b), None, None) if a == b => a,
        (None, None, None, None) => f64::INFINITY,
        _ => bail!("roc applies one SNR to both series: pass --snr or set equal snr_x_db and snr_y_db"),
    };
    let levels = if args.pfa.is_empty() {
        default_pfa_levels()
    } else {
        args.pfa.clone()
    };
    let grid = threshold_grid(T::FIELD.dof(model.order()), &levels)?;
    let curve = run_roc(&model, snr, args.samples, args.trials, args.seed, &grid, args.sigma)?;
    args.out.write(&curve)
}

fn windowed(args: &WindowedArgs) -> Result<()> {
    let opts = IngestOptions {
        cause_first: !args.effect_first,
        zero_mean: true,
    };
    let (x, y) = ingest_pair(&args.input, opts)?;
    let levels = if args.pfa.is_empty() {
        default_pfa_levels()
    } else {
        args.pfa.clone()
    };
    let grid = threshold_grid(args.order, &levels)?;
    let result = run_windowed(&x, &y, args.order, args.window, args.snr, args.trials, &grid, args.seed)?;
    args.out.write(&result)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = args.model.resolve()?;
            match cfg.field {
                Field::Real => simulate_typed::<f64>(&args, &cfg),
                Field::Complex => simulate_typed::<Complex64>(&args, &cfg),
            }
        }
        Command::BlockTest(args) => match args.input.field {
            Field::Real => block_test_typed::<f64>(&args),
            Field::Complex => block_test_typed::<Complex64>(&args),
        },
        Command::Calibrate(args) => calibrate(&args),
        Command::Sequential(args) => match args.input.field {
            Field::Real => sequential_typed::<f64>(&args),
            Field::Complex => sequential_typed::<Complex64>(&args),
        },
        Command::Roc(args) => {
            let cfg = args.model.resolve()?;
            match cfg.field {
                Field::Real => roc_typed::<f64>(&args, &cfg),
                Field::Complex => roc_typed::<Complex64>(&args, &cfg),
            }
        }
        Command::Windowed(args) => windowed(&args),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if e.downcast_ref::<io::Error>()
                .is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)
            {
                return ExitCode::SUCCESS;
            }
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
