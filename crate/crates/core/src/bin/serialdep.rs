use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use serialdep::apps::{HedgeConfig, QueueConfig, QueueMeasure};
use serialdep::divergence::CopulaFamily;
use serialdep::experiment::{
    default_copulas, run_experiment, BivariateCostKind, EtaGrid, ExperimentKind, ExperimentSpec, HedgeStudy,
    OutputFormat, QueueStudy, SerialModel, ALL_FAMILIES,
};
use serialdep::serial_anova::AnovaConfig;
use serialdep::{Error, Result};

#[derive(Parser)]
#[command(
    name = "serialdep",
    version,
    about = "Worst-case performance bounds under input dependency"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Master seed; every random stream derives from it.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Outer sample size K of the ANOVA estimators.
    #[arg(long)]
    outer: Option<usize>,
    /// Inner sample size n of the ANOVA estimators.
    #[arg(long)]
    inner: Option<usize>,
    /// Replications N of the ANOVA estimators.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Budget grid `start:stop:step`.
    #[arg(long)]
    eta_grid: Option<String>,
    /// Plain Monte Carlo sample size.
    #[arg(long)]
    samples: Option<usize>,
    /// Output file; extra tables go next to it as `<stem>.<table>.<ext>`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Worker threads. Never changes the output.
    #[arg(long)]
    threads: Option<usize>,
    /// Use the published sample sizes instead of the desk-scale defaults.
    #[arg(long)]
    paper_scale: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct BivariateArgs {
    #[arg(long, default_value = "x2y2")]
    cost: String,
    /// Comma-separated copula families.
    #[arg(long, value_delimiter = ',', default_values_t = ["gaussian".to_string(), "gumbel".into(), "clayton".into(), "amh".into()])]
    families: Vec<String>,
    #[arg(long, default_value_t = 64)]
    grid_size: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelName {
    /// `P(W_T > b)` of the M/M/1 queue.
    Queue,
    /// `E W_T` of the M/M/1 queue.
    QueueMean,
    /// `E|H_e|` of discrete delta hedging.
    Hedge,
    /// Product of Bernoulli inputs.
    Toy,
}

#[derive(Args)]
struct SerialArgs {
    #[arg(long, value_enum, default_value = "queue")]
    model: ModelName,
    /// Customer index (queue) or input length (toy).
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, default_value_t = 2.0)]
    threshold: f64,
    #[arg(long, default_value_t = 0.7)]
    q: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum QueueStudyName {
    TSweep,
    BSweep,
    Dependence,
}

#[derive(Args)]
struct QueueArgs {
    #[arg(long, value_enum, default_value = "t-sweep")]
    study: QueueStudyName,
    /// Sweep values (customer indices or thresholds).
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
    #[arg(long, default_value_t = 30)]
    horizon: usize,
    #[arg(long, default_value_t = 2.0)]
    threshold: f64,
    #[arg(long, default_value_t = 0.8)]
    arrival_rate: f64,
    #[arg(long, default_value_t = 1.0)]
    service_rate: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-0.2, -0.1, 0.1, 0.2])]
    beta1: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.3, 0.5])]
    mc_a: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-0.2, 0.2])]
    mc_theta: Vec<f64>,
    /// Consecutive pairs binned for the histogram φ².
    #[arg(long, default_value_t = 10_000_000)]
    pairs: u64,
    /// Bins per axis of the histogram; the coarse column uses half as many.
    #[arg(long, default_value_t = 200)]
    bins: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum HedgeStudyName {
    Baseline,
    Ar1,
    Ar2,
}

#[derive(Args)]
struct HedgeArgs {
    #[arg(long, value_enum, default_value = "baseline")]
    study: HedgeStudyName,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-0.2, -0.1, 0.0, 0.1, 0.2])]
    grid: Vec<f64>,
    /// The coefficient held fixed in the AR(2) study.
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    fixed: f64,
    #[arg(long, default_value_t = 1.0)]
    maturity: f64,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long, default_value_t = 100.0)]
    x0: f64,
    #[arg(long, default_value_t = 100.0)]
    strike: f64,
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    mu: f64,
    #[arg(long, default_value_t = 0.2)]
    sigma: f64,
    #[arg(long, default_value_t = 0.05, allow_hyphen_values = true)]
    rate: f64,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 0.7)]
    q: f64,
    /// Input length for the lag-one check.
    #[arg(long, default_value_t = 3)]
    horizon1: usize,
    /// Input length for the lag-two check.
    #[arg(long, default_value_t = 4)]
    horizon2: usize,
    /// Outer sizes compared for estimator variance.
    #[arg(long, value_delimiter = ',', default_values_t = [10, 20])]
    scaling_outer: Vec<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form bounds for a bivariate cost, with copula reference points.
    BivariateBounds {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: BivariateArgs,
    },
    /// Copula means against the bounds at their φ².
    CopulaCompare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: BivariateArgs,
    },
    /// First-order coefficient and band for a serial model.
    SerialXi1 {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: SerialArgs,
    },
    /// Two-lag coefficients and band for a serial model.
    #[command(name = "serial-2dep")]
    Serial2dep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: SerialArgs,
    },
    /// M/M/1 sweeps and dependent-arrival comparisons.
    QueueExperiment {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: QueueArgs,
    },
    /// Delta-hedging coefficients and AR comparisons.
    HedgeExperiment {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: HedgeArgs,
    },
    /// Estimator means against exact enumeration on a two-state toy.
    OracleCheck {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: OracleArgs,
    },
}

struct Defaults {
    outer: usize,
    inner: usize,
    reps: usize,
    eta: &'static str,
}

const SERIAL: Defaults = Defaults {
    outer: 20,
    inner: 100,
    reps: 20,
    eta: "0:0.05:0.005",
};

fn build_spec(common: &Common, kind: ExperimentKind, d: Defaults) -> Result<ExperimentSpec> {
    let samples = common
        .samples
        .unwrap_or(if common.paper_scale { 1_000_000 } else { 100_000 });
    Ok(ExperimentSpec {
        kind,
        seed: common.seed,
        anova: AnovaConfig::new(common.outer.unwrap_or(d.outer), common.inner.unwrap_or(d.inner))?,
        reps: common.reps.unwrap_or(d.reps),
        alpha: common.alpha,
        eta_grid: EtaGrid::parse(common.eta_grid.as_deref().unwrap_or(d.eta))?,
        samples,
        paper_scale: common.paper_scale,
        format: match common.format {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        },
    })
}

fn bivariate_kind(args: &BivariateArgs, compare: bool) -> Result<ExperimentKind> {
    let families = args
        .families
        .iter()
        .map(|f| CopulaFamily::parse(f))
        .collect::<Result<Vec<_>>>()?;
    let cost = BivariateCostKind::parse(&args.cost)?;
    let copulas = default_copulas(if families.is_empty() { &ALL_FAMILIES } else { &families });
    let grid_size = args.grid_size;
    Ok(if compare {
        ExperimentKind::CopulaCompare {
            cost,
            copulas,
            grid_size,
        }
    } else {
        ExperimentKind::BivariateBounds {
            cost,
            copulas,
            grid_size,
        }
    })
}

fn serial_model(args: &SerialArgs) -> Result<SerialModel> {
    Ok(match args.model {
        ModelName::Queue | ModelName::QueueMean => {
            let measure = match args.model {
                ModelName::Queue => QueueMeasure::TailProbability {
                    threshold: args.threshold,
                },
                _ => QueueMeasure::MeanWaiting,
            };
            SerialModel::Queue(QueueConfig::new(0.8, 1.0, args.horizon.unwrap_or(30), measure)?)
        }
        ModelName::Hedge => {
            if args.horizon.is_some() {
                return Err(Error::Config(
                    "the hedging horizon is set by its maturity and dt".into(),
                ));
            }
            SerialModel::Hedge(HedgeConfig::standard())
        }
        ModelName::Toy => SerialModel::Toy {
            q: args.q,
            horizon: args.horizon.unwrap_or(3),
        },
    })
}

fn integers(values: &[f64]) -> Result<Vec<usize>> {
    values
        .iter()
        .map(|&v| {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!("{v} is not a customer index")))
            }
        })
        .collect()
}

fn spec_from_cli(command: &Command) -> Result<(ExperimentSpec, &Common)> {
    Ok(match command {
        Command::BivariateBounds { common, args } => {
            let d = Defaults {
                eta: "0:0.16:0.01",
                ..SERIAL
            };
            (build_spec(common, bivariate_kind(args, false)?, d)?, common)
        }
        Command::CopulaCompare { common, args } => {
            let d = Defaults {
                eta: "0:0.16:0.01",
                ..SERIAL
            };
            (build_spec(common, bivariate_kind(args, true)?, d)?, common)
        }
        Command::SerialXi1 { common, args } => {
            let kind = ExperimentKind::SerialXi1 {
                model: serial_model(args)?,
            };
            (build_spec(common, kind, SERIAL)?, common)
        }
        Command::Serial2dep { common, args } => {
            let kind = ExperimentKind::Serial2dep {
                model: serial_model(args)?,
            };
            (build_spec(common, kind, SERIAL)?, common)
        }
        Command::QueueExperiment { common, args } => {
            let queue = QueueConfig::new(
                args.arrival_rate,
                args.service_rate,
                args.horizon,
                QueueMeasure::TailProbability {
                    threshold: args.threshold,
                },
            )?;
            let study = match args.study {
                QueueStudyName::TSweep => QueueStudy::HorizonSweep {
                    values: if args.values.is_empty() {
                        (10..=50).step_by(5).collect()
                    } else {
                        integers(&args.values)?
                    },
                },
                QueueStudyName::BSweep => QueueStudy::ThresholdSweep {
                    values: if args.values.is_empty() {
                        (1..=10).map(f64::from).collect()
                    } else {
                        args.values.clone()
                    },
                },
                QueueStudyName::Dependence => QueueStudy::Dependence {
                    ar1_beta1: args.beta1.clone(),
                    mc_a: args.mc_a.clone(),
                    mc_theta: args.mc_theta.clone(),
                    pairs: args.pairs,
                    bins: args.bins,
                },
            };
            let d = Defaults { reps: 50, ..SERIAL };
            (
                build_spec(common, ExperimentKind::QueueExperiment { study, queue }, d)?,
                common,
            )
        }
        Command::HedgeExperiment { common, args } => {
            let hedge = HedgeConfig::new(
                args.maturity,
                args.dt,
                args.x0,
                args.strike,
                args.mu,
                args.sigma,
                args.rate,
            )?;
            let study = match args.study {
                HedgeStudyName::Baseline => HedgeStudy::Baseline,
                HedgeStudyName::Ar1 => HedgeStudy::Ar1 {
                    beta1: args.grid.clone(),
                },
                HedgeStudyName::Ar2 => HedgeStudy::Ar2 {
                    fixed: args.fixed,
                    grid: args.grid.clone(),
                },
            };
            (
                build_spec(common, ExperimentKind::HedgeExperiment { study, hedge }, SERIAL)?,
                common,
            )
        }
        Command::OracleCheck { common, args } => {
            let kind = ExperimentKind::OracleCheck {
                q: args.q,
                horizon1: args.horizon1,
                horizon2: args.horizon2,
                scaling_outer: args.scaling_outer.clone(),
            };
            let d = Defaults {
                outer: 4,
                inner: 4,
                reps: 10_000,
                ..SERIAL
            };
            (build_spec(common, kind, d)?, common)
        }
    })
}

fn run(cli: &Cli) -> Result<()> {
    let (spec, common) = spec_from_cli(&cli.command)?;
    spec.validate()?;
    let threads = common.threads.unwrap_or(0);
    if common.threads == Some(0) {
        return Err(Error::Config("--threads must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    let (_, files) = pool.install(|| run_experiment(&spec, common.out.as_deref()))?;
    for f in files {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
