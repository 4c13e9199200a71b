use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fasris::ao_driver::{alternating_optimize_with, AoOptions};
use fasris::archive::{self, RealizationArchive};
use fasris::channel::{sample_realization, ChannelRealization};
use fasris::experiments::{child_seed, parse_schemes, preset, run_sweep, streams, trial_rng, SweepSpec, SweepVariable};
use fasris::rate::MultipleAccess;
use fasris::scenario::load_config_file;
use fasris::{Result, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "fasris",
    version,
    about = "Movable-RIS NOMA downlink with fluid-antenna users"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo sweep, written as CSV.
    Run(RunArgs),
    /// One alternating-optimization run, printed as JSON.
    Solve(SolveArgs),
    /// Write the channel draws of one trial to an archive file.
    DumpRealization(DumpArgs),
}

#[derive(Args)]
struct Common {
    /// Scenario TOML; the built-in reference scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Master seed; overrides the scenario's `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// fig1, fig2, fig3 or fig4.
    #[arg(long, conflicts_with = "sweep")]
    preset: Option<String>,
    /// snr_db, M, W, K, kappa_ri or iteration.
    #[arg(long, requires = "values")]
    sweep: Option<String>,
    /// Comma-separated sweep values.
    #[arg(long, requires = "sweep")]
    values: Option<String>,
    /// Comma-separated scheme labels, e.g. FAS-NOMA,TAS-OMA.
    #[arg(long)]
    schemes: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optimize the OMA schemes for their own objective.
    #[arg(long)]
    reoptimize_oma: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Trial index whose channel is used.
    #[arg(long, default_value_t = 0)]
    trial: u64,
    /// Replay an archived realization instead of drawing one.
    #[arg(long)]
    realization: Option<PathBuf>,
    /// Optimize for the OMA sum rate.
    #[arg(long)]
    oma: bool,
}

#[derive(Args)]
struct DumpArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 0)]
    trial: u64,
    #[arg(long)]
    out: PathBuf,
}

fn base_config(common: &Common) -> Result<ScenarioConfig> {
    let mut cfg = match &common.scenario {
        Some(path) => load_config_file(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_values(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| fasris::Error::Domain(format!("bad sweep value `{s}`: {e}")))
        })
        .collect()
}

fn run(args: RunArgs) -> Result<()> {
    let cfg = base_config(&args.common)?;
    let mut spec = match (&args.preset, &args.sweep, &args.values) {
        (Some(name), _, _) => preset(name, &cfg)?,
        (None, Some(var), Some(values)) => {
            SweepSpec::new(cfg.clone(), var.parse::<SweepVariable>()?, parse_values(values)?)
        }
        _ => {
            return Err(fasris::Error::Validation(vec![
                "either --preset or --sweep with --values is required".into(),
            ]))
        }
    };
    if let Some(list) = &args.schemes {
        spec.schemes = parse_schemes(list)?;
    }
    if let Some(trials) = args.trials {
        spec.trials = trials;
    }
    spec.master_seed = cfg.seed;
    spec.reoptimize_oma = args.reoptimize_oma;
    spec.out = args.out.clone();
    let result = run_sweep(&spec)?;
    if args.out.is_none() {
        print!("{}", result.to_csv_string());
    }
    Ok(())
}

fn trial_realization(cfg: &ScenarioConfig, trial: u64) -> Result<(u64, ChannelRealization)> {
    let seed = child_seed(cfg.seed, trial);
    let real = sample_realization(cfg, &mut trial_rng(seed, streams::REALIZATION))?;
    Ok((seed, real))
}

fn read_archive(path: &Path) -> Result<RealizationArchive> {
    archive::decode(&std::fs::read_to_string(path)?)
}

fn solve(args: SolveArgs) -> Result<()> {
    let cfg = base_config(&args.common)?;
    let (seed, real) = match &args.realization {
        Some(path) => {
            let arch = read_archive(path)?;
            (arch.seed, arch.restore(&cfg)?)
        }
        None => trial_realization(&cfg, args.trial)?,
    };
    let opts = AoOptions {
        access: if args.oma {
            MultipleAccess::Oma
        } else {
            MultipleAccess::Noma
        },
        ..AoOptions::default()
    };
    let sol = alternating_optimize_with(&cfg, &real, &opts, &mut trial_rng(seed, streams::OPTIMIZER))?;
    println!("{}", sol.to_json());
    Ok(())
}

fn dump(args: DumpArgs) -> Result<()> {
    let cfg = base_config(&args.common)?;
    let (seed, real) = trial_realization(&cfg, args.trial)?;
    std::fs::write(&args.out, RealizationArchive::from_realization(&real, seed).encode())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => run(a),
        Command::Solve(a) => solve(a),
        Command::DumpRealization(a) => dump(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
