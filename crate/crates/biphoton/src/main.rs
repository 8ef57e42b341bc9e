use std::path::PathBuf;
use std::process::ExitCode;

use biphoton::commands::{cmd_budget, cmd_car, cmd_spectrum, cmd_sweep, cmd_tomography, RunContext};
use biphoton::config::{load_config, Overrides, Target};
use biphoton::report::RunReport;
use biphoton::Result;
use biphoton_core::source::SourceConfig;
use clap::{Args, Parser, Subcommand};

/// Simulated PPSF biphoton source experiments.
#[derive(Debug, Parser)]
#[command(name = "biphoton", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fiber-spectrometer measurement of the pair spectrum.
    Spectrum(Common),
    /// Sixteen-setting polarization tomography with MLE.
    Tomography(Common),
    /// Repeated coincidence-to-accidental ratio batches.
    Car(Common),
    /// Analytic rate and loss budget.
    Budget(Common),
    /// CAR against pump power.
    Sweep(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration; defaults are used for anything missing.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of CAR batches.
    #[arg(long)]
    batches: Option<usize>,
    /// Acquisition time per run or batch, s.
    #[arg(long, allow_negative_numbers = true)]
    duration: Option<f64>,
    /// Leave accidental coincidences out of the tomography record.
    #[arg(long)]
    no_accidentals: bool,
    /// Subtract estimated accidentals before reconstruction.
    #[arg(long)]
    subtract_background: bool,
    /// Pump power, mW.
    #[arg(long, allow_negative_numbers = true)]
    power: Option<f64>,
    /// Record wall time in report.json.
    #[arg(long)]
    timing: bool,
    /// Also write raw data (JSA, time tags).
    #[arg(long)]
    save_raw: bool,
}

type Runner = fn(&SourceConfig, &RunContext) -> Result<RunReport>;

fn run(common: Common, target: Target, runner: Runner) -> Result<RunReport> {
    let base = match &common.config {
        Some(path) => load_config(path)?,
        None => SourceConfig::default(),
    };
    let overrides = Overrides {
        seed: common.seed,
        batches: common.batches,
        duration: common.duration,
        no_accidentals: common.no_accidentals,
        subtract_background: common.subtract_background,
        power: common.power,
    };
    let config = overrides.apply(base, target)?;
    let ctx = RunContext {
        out_dir: common.out,
        timing: common.timing,
        save_raw: common.save_raw,
    };
    runner(&config, &ctx)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Spectrum(c) => run(c, Target::Spectrum, cmd_spectrum),
        Command::Tomography(c) => run(c, Target::Tomography, cmd_tomography),
        Command::Car(c) => run(c, Target::Car, cmd_car),
        Command::Budget(c) => run(c, Target::Budget, cmd_budget),
        Command::Sweep(c) => run(c, Target::Sweep, cmd_sweep),
    };
    match result {
        Ok(report) => {
            for (name, m) in &report.metrics {
                let value = m.value.map_or("null".to_string(), |v| format!("{v:.6}"));
                match m.stderr {
                    Some(e) => println!("{name:<26} {value} ± {e:.6} {}", m.unit),
                    None => println!("{name:<26} {value} {}", m.unit),
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
