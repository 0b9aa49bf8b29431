use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scma_ofdm::harness::{run_sweep, CsvSink, Method, Scenario, SweepOptions, PRESETS};
use scma_ofdm::plot::{emit_plot, PlotKind, PlotSpec};
use scma_ofdm::Error;

#[derive(Parser)]
#[command(
    name = "scma-ofdm",
    version,
    about = "Downlink SCMA-OFDM BER under carrier frequency offset"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every method of the scenario (simulation and analysis).
    Simulate(RunArgs),
    /// Run only the analytical methods of the scenario.
    Analyze(RunArgs),
    /// Render a sweep CSV as an SVG figure.
    Plot(PlotArgs),
    /// Print a built-in scenario as TOML.
    Preset {
        #[arg(value_parser = PRESETS)]
        name: String,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    scenario: Option<PathBuf>,
    /// Built-in scenario.
    #[arg(long, value_parser = PRESETS)]
    preset: Option<String>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Append to an existing --out file, skipping points it already holds.
    #[arg(long, requires = "out")]
    resume: bool,
    /// Worker threads.
    #[arg(long, env = "SCMA_OFDM_WORKERS")]
    workers: Option<usize>,
    /// Override the per-point frame limit.
    #[arg(long)]
    max_frames: Option<u64>,
    /// Leave the seconds column empty.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct PlotArgs {
    /// Sweep CSV.
    #[arg(long)]
    input: PathBuf,
    /// Output SVG.
    #[arg(long)]
    out: PathBuf,
    /// Plot BER against eps at this SNR instead of BER against SNR.
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long, default_value = "SCMA-OFDM BER")]
    title: String,
}

fn load(args: &RunArgs) -> Result<Scenario, Error> {
    let mut s = match (&args.scenario, &args.preset) {
        (Some(path), _) => Scenario::from_file(path)?,
        (None, Some(name)) => Scenario::preset(name)?,
        (None, None) => unreachable!("clap requires one of --scenario and --preset"),
    };
    if let Some(seed) = args.seed {
        s.seed = seed;
    }
    if let Some(m) = args.max_frames {
        s.max_frames = m;
    }
    if args.no_timing {
        s.record_timing = false;
    }
    s.validate()?;
    Ok(s)
}

fn run(args: RunArgs, analytic_only: bool) -> Result<(), Error> {
    let scenario = load(&args)?;
    let (mut sink, resume) = match &args.out {
        Some(path) if args.resume => CsvSink::open_append(path)?,
        Some(path) => {
            let f = std::fs::File::create(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            (
                CsvSink::new(Box::new(std::io::BufWriter::new(f)))?,
                Vec::new(),
            )
        }
        None => (CsvSink::stdout()?, Vec::new()),
    };
    let only = analytic_only.then(|| {
        [Method::Series, Method::Mc, Method::Awgn]
            .into_iter()
            .collect::<Vec<_>>()
    });
    let opts = SweepOptions {
        workers: args.workers,
        only,
        resume,
    };
    run_sweep(&scenario, &opts, |row| sink.write(row))?;
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate(a) => run(a, false),
        Command::Analyze(a) => run(a, true),
        Command::Plot(a) => {
            let kind = match a.snr_db {
                Some(snr_db) => PlotKind::BerVsEps { snr_db },
                None => PlotKind::BerVsSnr,
            };
            emit_plot(
                &a.input,
                &a.out,
                &PlotSpec {
                    kind,
                    title: a.title,
                },
            )
        }
        Command::Preset { name } => {
            print!("{}", Scenario::preset(&name)?.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
