//! The five experiments behind the subcommands. Each writes its data files
//! into the output directory and returns the report it also saved there.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use biphoton_core::counting::{car_vs_power_sweep, rate_budget_for, simulate_car_streams, RateBudget, SweepPoint};
use biphoton_core::experiment::{run_car, run_spectrum, run_tomography, source_jsa};
use biphoton_core::source::SourceConfig;
use biphoton_core::spectral::{marginal_spectrum, Axis};
use biphoton_core::state::{concurrence, fidelity, psi_plus_with_phase, Matrix4c};
use serde::Serialize;

use crate::config::{digest, to_toml, PROFILE};
use crate::error::{CliError, Result};
use crate::formats::{self, DensityMatrixJson, Part, BASIS_LABELS};
use crate::plot::{self, Series};
use crate::report::{Metric, RunReport};

const SPECTRAL: &str = "spectral-model";
const STATE: &str = "polarization-state";
const TOMOGRAPHY: &str = "tomography";
const COUNTING: &str = "photon-counting";
const SPECTROMETER: &str = "fiber-spectrometer";

/// Output settings shared by all commands.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub out_dir: PathBuf,
    /// Record wall time in the report (makes it nondeterministic).
    pub timing: bool,
    /// Also write bulky raw data: the JSA for `spectrum`, the first batch's
    /// time tags for `car`.
    pub save_raw: bool,
}

impl RunContext {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            out_dir: out_dir.into(),
            timing: false,
            save_raw: false,
        }
    }
}

struct Outputs<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl<'a> Outputs<'a> {
    fn open(dir: &'a Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir, files: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        formats::write_atomic(&self.dir.join(name), bytes.as_ref())?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Writes `config.toml` and `report.json`.
    fn finish(
        mut self,
        command: &str,
        config: &SourceConfig,
        ctx: &RunContext,
        start: Instant,
        metrics: BTreeMap<String, Metric>,
    ) -> Result<RunReport> {
        self.write("config.toml", to_toml(config))?;
        self.files.push("report.json".into());
        let report = RunReport {
            command: command.into(),
            profile: PROFILE.into(),
            config_digest: digest(config),
            software_version: env!("CARGO_PKG_VERSION").into(),
            seed: config.seed,
            wall_time_s: ctx.timing.then(|| start.elapsed().as_secs_f64()),
            outputs: self.files.clone(),
            metrics,
        };
        formats::write_atomic(&self.dir.join("report.json"), report.to_json().as_bytes())?;
        Ok(report)
    }
}

fn metrics(entries: impl IntoIterator<Item = (&'static str, Metric)>) -> BTreeMap<String, Metric> {
    entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

pub fn cmd_spectrum(config: &SourceConfig, ctx: &RunContext) -> Result<RunReport> {
    let start = Instant::now();
    let mut out = Outputs::open(&ctx.out_dir)?;
    let run = run_spectrum(config, config.seed)?;
    out.write("spectrum.csv", formats::spectrum_csv(&run.spectrum))?;
    out.write("histogram.csv", formats::histogram_csv(&run.histogram))?;

    let resolution = config.spectrometer.resolution_nm;
    let smoothed = run.spectrum.smoothed(resolution);
    let peak = smoothed.iter().map(|p| p.1).fold(0.0, f64::max);
    let jsa = source_jsa(config)?;
    let model: Vec<(f64, f64)> = marginal_spectrum(&jsa, Axis::Signal).into_iter().map(|(l, v)| (l, v * peak)).collect();
    let bins = &run.spectrum.bins;
    let svg = plot::line_plot(
        "Biphoton spectrum",
        "wavelength (nm)",
        "coincidences per nm",
        &[
            Series::markers(
                "reconstructed",
                run.spectrum.curve(),
                Some(bins.iter().map(|b| b.intensity_err()).collect()),
            ),
            Series::line(&format!("{resolution} nm boxcar"), smoothed),
            Series::line("model marginal (scaled)", model),
        ],
    );
    out.write("spectrum.svg", svg)?;
    if ctx.save_raw {
        out.write("jsa.csv", formats::jsa_csv(&jsa))?;
    }

    let net: f64 = bins.iter().map(|b| b.net_counts).sum();
    let m = metrics([
        ("fwhm_nm", Metric::new(run.fwhm, "nm", &[SPECTRAL, SPECTROMETER])),
        ("model_fwhm_nm", Metric::new(run.model_fwhm, "nm", &[SPECTRAL])),
        ("l1_error", Metric::new(run.l1_error, "", &[SPECTRAL, SPECTROMETER])),
        ("accidental_floor", Metric::new(run.spectrum.accidental_floor, "counts/bin", &[SPECTROMETER])),
        ("net_coincidences", Metric::new(net, "counts", &[SPECTROMETER, COUNTING])),
    ]);
    out.finish("spectrum", config, ctx, start, m)
}

fn parts(m: &Matrix4c) -> ([[f64; 4]; 4], [[f64; 4]; 4]) {
    let re = std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)].re));
    let im = std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)].im));
    (re, im)
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serializable");
    v.push(b'\n');
    v
}

pub fn cmd_tomography(config: &SourceConfig, ctx: &RunContext) -> Result<RunReport> {
    let start = Instant::now();
    let mut out = Outputs::open(&ctx.out_dir)?;
    let run = run_tomography(config, config.seed)?;
    let r = &run.result;
    let rho = r.rho_mle.elements();
    out.write("record.csv", formats::record_csv(&run.record))?;
    out.write("rho_real.csv", formats::density_csv(rho, Part::Real))?;
    out.write("rho_imag.csv", formats::density_csv(rho, Part::Imag))?;
    out.write("rho.json", json_bytes(&DensityMatrixJson::from_matrix(rho)))?;
    out.write("rho_model.json", json_bytes(&DensityMatrixJson::from_matrix(run.rho_model.elements())))?;
    let (re, im) = parts(rho);
    out.write("rho_real.svg", plot::matrix_bars("Re ρ (MLE)", BASIS_LABELS, re))?;
    out.write("rho_imag.svg", plot::matrix_bars("Im ρ (MLE)", BASIS_LABELS, im))?;

    let target = psi_plus_with_phase(config.tomography.target_phase);
    let m = metrics([
        (
            "concurrence",
            Metric::new(r.concurrence.value, "", &[TOMOGRAPHY, STATE]).with_stderr(r.concurrence.stderr),
        ),
        ("fidelity", Metric::new(r.fidelity.value, "", &[TOMOGRAPHY, STATE]).with_stderr(r.fidelity.stderr)),
        ("purity", Metric::new(r.purity, "", &[TOMOGRAPHY, STATE])),
        ("model_concurrence", Metric::new(concurrence(&run.rho_model), "", &[SPECTRAL, STATE])),
        ("model_fidelity", Metric::new(fidelity(&run.rho_model, &target)?, "", &[SPECTRAL, STATE])),
        ("log_likelihood", Metric::new(r.log_likelihood, "", &[TOMOGRAPHY])),
        ("mle_iterations", Metric::new(r.iterations as f64, "", &[TOMOGRAPHY])),
        ("mle_converged", Metric::new(if r.converged { 1.0 } else { 0.0 }, "bool", &[TOMOGRAPHY])),
        ("total_coincidences", Metric::new(run.record.total_counts(), "counts", &[TOMOGRAPHY, COUNTING])),
        ("pair_rate", Metric::new(run.source.pair_rate, "1/s", &[COUNTING, SPECTRAL])),
    ]);
    out.finish("tomography", config, ctx, start, m)
}

pub fn cmd_car(config: &SourceConfig, ctx: &RunContext) -> Result<RunReport> {
    let start = Instant::now();
    let mut out = Outputs::open(&ctx.out_dir)?;
    let run = run_car(config, config.seed)?;
    out.write("car_timeseries.csv", formats::car_timeseries_csv(&run.batches))?;
    out.write("histogram.csv", formats::histogram_csv(&run.first_histogram))?;
    let analytic = run.budget.car();
    let points: Vec<(f64, f64)> = run.batches.iter().map(|b| (b.index as f64, b.car)).collect();
    let last = run.batches.len().saturating_sub(1) as f64;
    let svg = plot::line_plot(
        "Coincidence-to-accidental ratio",
        "batch",
        "CAR",
        &[
            Series::markers("measured", points, Some(run.batches.iter().map(|b| b.car_stderr).collect())),
            Series::line("rate budget", vec![(0.0, analytic), (last, analytic)]),
        ],
    );
    out.write("car.svg", svg)?;
    if ctx.save_raw {
        let first = &run.batches[0];
        let streams = simulate_car_streams(
            config,
            config.pump.power,
            first.temperature_offset,
            config.car.batch_duration,
            config.seed,
        )?;
        formats::write_ttag(&ctx.out_dir.join("batch0.ttag"), &streams)?;
        out.files.push("batch0.ttag".into());
    }

    let n = run.batches.len() as f64;
    let mean = run.mean_car();
    let spread = run.relative_std() * mean;
    let max_z = run
        .batches
        .iter()
        .map(|b| (b.accidental_counts as f64 - b.accidental_expected).abs() / b.accidental_expected.sqrt())
        .fold(0.0, f64::max);
    let cars = run.batches.iter().map(|b| b.car);
    let m = metrics([
        ("mean_car", Metric::new(mean, "", &[COUNTING]).with_stderr((n > 1.0).then(|| spread / n.sqrt()))),
        ("car_relative_std", Metric::new(run.relative_std(), "", &[COUNTING])),
        ("min_car", Metric::new(cars.clone().fold(f64::INFINITY, f64::min), "", &[COUNTING])),
        ("max_car", Metric::new(cars.fold(f64::NEG_INFINITY, f64::max), "", &[COUNTING])),
        ("analytic_car", Metric::new(analytic, "", &[COUNTING, SPECTRAL])),
        ("accidental_max_z", Metric::new(max_z, "sigma", &[COUNTING])),
        (
            "coincidences_per_minute",
            Metric::new(
                run.batches.iter().map(|b| b.peak_counts as f64).sum::<f64>() / (n * config.car.batch_duration) * 60.0,
                "1/min",
                &[COUNTING],
            ),
        ),
    ]);
    out.finish("car", config, ctx, start, m)
}

/// Rates quoted for the source, used by the consistency section of
/// `budget.json`.
pub const QUOTED_GENERATION_RATE: f64 = 7.0e5;
pub const QUOTED_MAX_GENERATION_RATE: f64 = 2.8e6;
pub const QUOTED_COINCIDENCES_PER_MINUTE: f64 = 1.1e4;
pub const QUOTED_DETECTED_PER_NM: f64 = 200.0;

#[derive(Debug, Serialize)]
struct StageJson {
    name: String,
    loss_db: f64,
    internal: bool,
}

#[derive(Debug, Serialize)]
struct ArmJson {
    filter_loss_db: f64,
    transmission: f64,
    spectral_fraction: f64,
    photon_rate: f64,
    detected_singles: f64,
    live_fraction: f64,
}

#[derive(Debug, Serialize)]
struct ChannelJson {
    coincident_fraction: f64,
    arms: [ArmJson; 2],
    coincidence_rate: f64,
    coincidences_per_minute: f64,
    accidental_rate: f64,
    car: Option<f64>,
    detected_pairs_per_nm: f64,
}

#[derive(Debug, Serialize)]
struct ConsistencyJson {
    generation_rate_matches: bool,
    max_generation_rate_matches: bool,
    coincidences_per_minute_ratio: f64,
    coincidences_within_factor_two: bool,
    detected_pairs_per_nm: f64,
    detected_pairs_per_nm_exceeds_quote: bool,
}

#[derive(Debug, Serialize)]
struct BudgetJson {
    pump_power_mw: f64,
    generation_rate: f64,
    internal_pair_rate: f64,
    max_pump_power_mw: f64,
    max_generation_rate: f64,
    coincidence_window_s: f64,
    stages: Vec<StageJson>,
    dwdm_pair: ChannelJson,
    cl_splitter: ChannelJson,
    consistency: ConsistencyJson,
}

fn channel(b: &RateBudget, filters: [&biphoton_core::filter::FilterSpec; 2]) -> ChannelJson {
    let arm = |a: usize| ArmJson {
        filter_loss_db: filters[a].insertion_loss_db,
        transmission: b.arm_transmission[a],
        spectral_fraction: b.spectral.arm[a],
        photon_rate: b.photon_rate[a],
        detected_singles: b.detected_singles[a],
        live_fraction: b.live_fraction[a],
    };
    ChannelJson {
        coincident_fraction: b.spectral.coincident,
        arms: [arm(0), arm(1)],
        coincidence_rate: b.coincidence_rate,
        coincidences_per_minute: 60.0 * b.coincidence_rate,
        accidental_rate: b.accidental_rate,
        car: Some(b.car()).filter(|c| c.is_finite()),
        detected_pairs_per_nm: b.detected_pairs_per_nm,
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs()
}

pub fn cmd_budget(config: &SourceConfig, ctx: &RunContext) -> Result<RunReport> {
    let start = Instant::now();
    let mut out = Outputs::open(&ctx.out_dir)?;
    let dwdm_filters = config.filters.dwdm_pair.as_array();
    let cl_filters = config.filters.cl_splitter.as_array();
    let dwdm = rate_budget_for(config, dwdm_filters, config.pump.power)?;
    let cl = rate_budget_for(config, cl_filters, config.pump.power)?;
    let max_power = config.rates.max_pump_power;
    let max_generation = config.generation_rate(max_power);
    let per_minute = 60.0 * dwdm.coincidence_rate;
    let ratio = per_minute / QUOTED_COINCIDENCES_PER_MINUTE;
    let json = BudgetJson {
        pump_power_mw: config.pump.power,
        generation_rate: dwdm.generation_rate,
        internal_pair_rate: dwdm.internal_pair_rate,
        max_pump_power_mw: max_power,
        max_generation_rate: max_generation,
        coincidence_window_s: dwdm.coincidence_window,
        stages: dwdm
            .stages
            .iter()
            .map(|s| StageJson {
                name: s.name.clone(),
                loss_db: s.loss_db,
                internal: s.internal,
            })
            .collect(),
        dwdm_pair: channel(&dwdm, dwdm_filters),
        cl_splitter: channel(&cl, cl_filters),
        consistency: ConsistencyJson {
            generation_rate_matches: close(config.generation_rate(7.5), QUOTED_GENERATION_RATE),
            max_generation_rate_matches: close(max_generation, QUOTED_MAX_GENERATION_RATE),
            coincidences_per_minute_ratio: ratio,
            coincidences_within_factor_two: (0.5..=2.0).contains(&ratio),
            detected_pairs_per_nm: dwdm.detected_pairs_per_nm,
            detected_pairs_per_nm_exceeds_quote: dwdm.detected_pairs_per_nm > QUOTED_DETECTED_PER_NM,
        },
    };
    out.write("budget.json", json_bytes(&json))?;
    let m = metrics([
        ("generation_rate", Metric::new(dwdm.generation_rate, "1/s", &[COUNTING])),
        ("max_generation_rate", Metric::new(max_generation, "1/s", &[COUNTING])),
        ("coincidences_per_minute", Metric::new(per_minute, "1/min", &[COUNTING, SPECTRAL])),
        ("analytic_car", Metric::new(dwdm.car(), "", &[COUNTING, SPECTRAL])),
        ("detected_pairs_per_nm", Metric::new(dwdm.detected_pairs_per_nm, "1/(s nm)", &[COUNTING, SPECTRAL])),
        ("cl_coincidence_rate", Metric::new(cl.coincidence_rate, "1/s", &[COUNTING, SPECTRAL])),
    ]);
    out.finish("budget", config, ctx, start, m)
}

/// Points run on separate threads; point `i` uses seed `config.seed + i`,
/// the same as the sequential sweep.
pub fn sweep_points(config: &SourceConfig) -> Result<Vec<SweepPoint>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = config
            .sweep
            .powers
            .iter()
            .enumerate()
            .map(|(i, &power)| {
                let mut c = config.clone();
                c.seed = config.seed.wrapping_add(i as u64);
                scope.spawn(move || car_vs_power_sweep(&c, &[power]).map(|mut v| v.remove(0)))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked").map_err(CliError::from))
            .collect()
    })
}

pub fn cmd_sweep(config: &SourceConfig, ctx: &RunContext) -> Result<RunReport> {
    let start = Instant::now();
    let mut out = Outputs::open(&ctx.out_dir)?;
    let points = sweep_points(config)?;
    out.write("sweep.csv", formats::sweep_csv(&points))?;
    let svg = plot::line_plot(
        "CAR against pump power",
        "pump power (mW)",
        "CAR",
        &[Series::markers(
            "measured",
            points.iter().map(|p| (p.power, p.car)).collect(),
            Some(points.iter().map(|p| p.car_stderr).collect()),
        )],
    );
    out.write("sweep.svg", svg)?;
    let at_default_power = points.iter().find(|p| (p.power - 7.5).abs() < 1e-9);
    let mut m = metrics([
        ("points", Metric::new(points.len() as f64, "", &[COUNTING])),
        (
            "max_coincidence_rate",
            Metric::new(points.iter().map(|p| p.coincidence_rate).fold(0.0, f64::max), "1/s", &[COUNTING]),
        ),
    ]);
    if let Some(p) = at_default_power {
        m.insert("car_at_7.5mW".into(), Metric::new(p.car, "", &[COUNTING]).with_stderr(Some(p.car_stderr)));
    }
    out.finish("sweep", config, ctx, start, m)
}
