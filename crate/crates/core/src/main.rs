use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fogcache::delivery::{simulate, EngineOptions};
use fogcache::harness::{
    self, default_file_bits, example1_trace, gnuplot_script, sweep, verify_example1, write_csv,
    ArrivalModel, ExperimentSpec, HarnessError, SweepVariable,
};
use fogcache::model::{render_trace, Config, Mode, RequestSchedule};

#[derive(Parser)]
#[command(name = "fogcache", version, about = "Asynchronous coded caching simulator for fog RANs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Base RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Replicas per sweep value.
    #[arg(long, global = true, default_value_t = 100)]
    replicas: usize,
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
    /// Output path for CSV (sweeps) or trace TSV (example1, run).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Expected,
    Sampled,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Expected => Mode::ExpectedSize,
            ModeArg::Sampled => Mode::SampledBit,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ArrivalArg {
    Sequential,
    Uniform,
    UniformNonempty,
}

#[derive(Subcommand)]
enum Command {
    /// Print the trace of the four-F-AP worked example.
    Example1 {
        #[arg(long, default_value_t = 2)]
        delta_b: usize,
    },
    /// Diff the worked example against its golden trace.
    Verify,
    /// Run a single instance and print its load report.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = ArrivalArg::UniformNonempty)]
        arrivals: ArrivalArg,
        /// Also print the full trace.
        #[arg(long)]
        trace: bool,
    },
    /// Load versus cache size M.
    SweepM {
        #[command(flatten)]
        common: SweepArgs,
        #[arg(long, default_value_t = 2)]
        delta_b: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [10, 20, 30, 40, 50, 60, 70, 80, 90])]
        cache_sizes: Vec<usize>,
    },
    /// Load versus maximum request delay, one sweep per cache size.
    SweepDelay {
        #[command(flatten)]
        common: SweepArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [25, 50])]
        cache_sizes: Vec<usize>,
    },
}

#[derive(clap::Args)]
struct SweepArgs {
    #[arg(short = 'K', long = "faps", default_value_t = 10)]
    k: usize,
    #[arg(short = 'N', long = "files", default_value_t = 100)]
    n: usize,
    #[arg(short = 'B', long = "slots", default_value_t = 5)]
    b: usize,
    /// File size in bits; defaults to 1 Gb (expected) or 2^20 (sampled).
    #[arg(short = 'F', long = "file-bits")]
    f: Option<u64>,
    /// Write a gnuplot script next to the CSV.
    #[arg(long)]
    gnuplot: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), HarnessError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| HarnessError::Io {
            path: path.clone(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    let mode = cli.mode.map(Mode::from).unwrap_or_default();
    match cli.command {
        Command::Example1 { delta_b } => {
            emit(&cli.out, &example1_trace(delta_b, EngineOptions::default())?)?;
        }
        Command::Verify => match verify_example1() {
            Ok(()) => println!("example1: trace matches golden file"),
            Err(e @ HarnessError::GoldenMismatch { .. }) => {
                eprintln!("example1: FAIL\n{e}");
                return Ok(ExitCode::FAILURE);
            }
            Err(e) => return Err(e),
        },
        Command::Run { config, arrivals, trace } => {
            let text = fs::read_to_string(&config).map_err(|source| HarnessError::Io {
                path: config.clone(),
                source,
            })?;
            let mut config = Config::from_json(&text)?;
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            if let Some(m) = cli.mode {
                config.mode = m.into();
                config.validate()?;
            }
            let model = match arrivals {
                ArrivalArg::Sequential => ArrivalModel::Sequential,
                ArrivalArg::Uniform => ArrivalModel::Uniform { require_nonempty: false },
                ArrivalArg::UniformNonempty => ArrivalModel::Uniform { require_nonempty: true },
            };
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let arrivals = model.sample(config.k, config.b, &mut rng)?;
            let demands = harness::worst_case_demands(config.k, config.n)?;
            let schedule = RequestSchedule::new(&config, arrivals, demands)?;
            let report = simulate(&config, &schedule)?;
            println!("arrivals: {:?}", schedule.arrivals());
            print!("{report}");
            if trace {
                emit(&cli.out, &render_trace(&report.trace))?;
            }
        }
        Command::SweepM { common, delta_b, cache_sizes } => {
            let spec = spec_for(&common, mode, cli.seed, cli.replicas, &cli.out, SweepVariable::CacheSize, delta_b, cache_sizes, 0);
            run_sweep(spec, &common)?;
        }
        Command::SweepDelay { common, cache_sizes } => {
            for m in cache_sizes {
                let out = cli.out.as_ref().map(|p| suffixed(p, m));
                let spec = spec_for(
                    &common,
                    mode,
                    cli.seed,
                    cli.replicas,
                    &out,
                    SweepVariable::Delay,
                    1,
                    (1..=common.b).collect(),
                    m,
                );
                run_sweep(spec, &common)?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// `loads.csv` with `M = 25` becomes `loads_M25.csv`.
fn suffixed(path: &std::path::Path, m: usize) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    path.with_file_name(format!("{stem}_M{m}{ext}"))
}

#[allow(clippy::too_many_arguments)]
fn spec_for(
    common: &SweepArgs,
    mode: Mode,
    seed: Option<u64>,
    replicas: usize,
    out: &Option<PathBuf>,
    variable: SweepVariable,
    delta_b: usize,
    values: Vec<usize>,
    m: usize,
) -> ExperimentSpec {
    let f = common.f.unwrap_or_else(|| default_file_bits(mode));
    let mut base = Config::new(common.k, common.n, m.max(1), f, common.b, delta_b)
        .with_mode(mode)
        .with_seed(seed.unwrap_or(0));
    base.t = 10.0;
    ExperimentSpec {
        base,
        variable,
        values,
        replicas,
        arrivals: ArrivalModel::Uniform { require_nonempty: common.k >= common.b },
        out: out.clone(),
    }
}

fn run_sweep(spec: ExperimentSpec, common: &SweepArgs) -> Result<(), HarnessError> {
    let dataset = sweep(&spec)?;
    match &spec.out {
        Some(path) => {
            eprintln!("wrote {}", path.display());
            if let Some(script) = &common.gnuplot {
                let script_path = match spec.variable {
                    SweepVariable::Delay => suffixed(script, spec.base.m),
                    SweepVariable::CacheSize => script.clone(),
                };
                fs::write(&script_path, gnuplot_script(path, spec.variable)).map_err(|source| {
                    HarnessError::Io {
                        path: script_path.clone(),
                        source,
                    }
                })?;
            }
        }
        None => write_csv(&dataset, std::io::stdout().lock())?,
    }
    Ok(())
}
