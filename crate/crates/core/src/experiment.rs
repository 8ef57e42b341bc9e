//! End-to-end simulations of the three measurements, shared by the command
//! line front end and the tests.

use alloc::vec::Vec;

use crate::counting::{rate_budget_for, simulate_car_run, CoincidenceHistogram, RateBudget};
use crate::error::Result;
use crate::filter::apply_filters;
use crate::source::SourceConfig;
use crate::spectral::{compute_jsa, fwhm, marginal_spectrum, Axis, JointSpectralAmplitude};
use crate::spectrometer::{
    normalized_l1, reconstruct_spectrum, simulate_spectrometer_run, true_photon_masses, AccidentalWindow,
    ReconstructedSpectrum, SpectrometerAcquisition,
};
use crate::state::{psi_plus_with_phase, reduce_to_polarization, PolarizationDensityMatrix};
use crate::tomography::{
    bootstrap_errors_with, mle_reconstruct_with, simulate_record, standard_16_settings, BootstrapErrors,
    MeasurementRecord, MleOptions, TomographyResult, TomographySource,
};

/// Joint spectral amplitude of the configured source on its analysis grid.
pub fn source_jsa(config: &SourceConfig) -> Result<JointSpectralAmplitude> {
    config.validate()?;
    compute_jsa(&config.ppsf, &config.pump, &config.spectral_grid()?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumOutcome {
    pub histogram: CoincidenceHistogram,
    pub spectrum: ReconstructedSpectrum,
    /// FWHM of the reconstructed spectrum after smoothing, nm.
    pub fwhm: f64,
    /// FWHM of the model's signal marginal, nm.
    pub model_fwhm: f64,
    /// Normalized L1 distance between reconstructed and true bin masses.
    pub l1_error: f64,
    pub pairs_emitted_mean: f64,
}

/// Fiber-spectrometer measurement of the unfiltered source spectrum.
pub fn run_spectrum(config: &SourceConfig, seed: u64) -> Result<SpectrumOutcome> {
    let jsa = source_jsa(config)?;
    let s = &config.spectrometer;
    let acquisition = SpectrometerAcquisition {
        pair_rate: s.pair_rate,
        duration: s.pairs as f64 / s.pair_rate,
        beamsplitter_ratio: s.beamsplitter_ratio,
        bin_width: s.bin_width,
        max_delay: s.max_delay,
    };
    let histogram = simulate_spectrometer_run(&jsa, &config.fiber, &config.detectors.as_array(), &acquisition, seed)?;
    let window = AccidentalWindow {
        low: s.accidental_low,
        high: s.accidental_high,
    };
    let spectrum = reconstruct_spectrum(&histogram, &config.fiber, &config.pump, &window)?;
    let fwhm_value = fwhm(&spectrum.smoothed(s.resolution_nm))?;
    let truth = true_photon_masses(&jsa, &spectrum.edges());
    let l1_error = normalized_l1(&spectrum.masses(), &truth);
    Ok(SpectrumOutcome {
        histogram,
        spectrum,
        fwhm: fwhm_value,
        model_fwhm: fwhm(&marginal_spectrum(&jsa, Axis::Signal))?,
        l1_error,
        pairs_emitted_mean: s.pairs as f64,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TomographyOutcome {
    /// Frequency-traced state after the C/L splitter.
    pub rho_model: PolarizationDensityMatrix,
    pub record: MeasurementRecord,
    pub result: TomographyResult,
    pub bootstrap: Option<BootstrapErrors>,
    pub source: TomographySource,
}

/// Pair source seen by the analyzers behind the C/L splitter.
pub fn tomography_source(config: &SourceConfig) -> Result<TomographySource> {
    let filters = config.filters.cl_splitter.as_array();
    let budget = rate_budget_for(config, filters, config.pump.power)?;
    let (pair_rate, unpaired_rate) = budget.arm_inputs();
    let t = &config.tomography;
    Ok(TomographySource {
        pair_rate,
        unpaired_rate,
        arm_loss_db: [filters[0].insertion_loss_db, filters[1].insertion_loss_db],
        detectors: config.detectors.as_array(),
        coincidence_window: config.counting.windows.coincidence_window,
        include_accidentals: t.include_accidentals,
        angle_jitter: t.angle_jitter,
    })
}

/// Sixteen-setting tomography of the C/L-split source. The record uses
/// `seed`; bootstrap resample `i` uses `seed + 1 + i`.
pub fn run_tomography(config: &SourceConfig, seed: u64) -> Result<TomographyOutcome> {
    let jsa = source_jsa(config)?;
    let cl = &config.filters.cl_splitter;
    let filtered = apply_filters(&jsa, &cl.signal, &cl.idler)?;
    let rho_model = reduce_to_polarization(&filtered)?;
    let source = tomography_source(config)?;
    let t = &config.tomography;
    let record = simulate_record(&rho_model, &standard_16_settings(), &source, t.acquisition_time, seed)?;
    let analysed = if t.subtract_background {
        record.subtract_accidentals(source.coincidence_window)?
    } else {
        record.clone()
    };
    let options = MleOptions {
        target: psi_plus_with_phase(t.target_phase),
        ..MleOptions::default()
    };
    let mut result = mle_reconstruct_with(&analysed, None, &options)?;
    let bootstrap = if t.bootstrap_resamples >= 2 {
        let errors =
            bootstrap_errors_with(&analysed, t.bootstrap_resamples, seed.wrapping_add(1), Some(&result.rho_mle), &options)?;
        result.concurrence.stderr = Some(errors.concurrence);
        result.fidelity.stderr = Some(errors.fidelity);
        Some(errors)
    } else {
        None
    };
    Ok(TomographyOutcome {
        rho_model,
        record,
        result,
        bootstrap,
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarBatch {
    pub index: usize,
    /// °C
    pub temperature_offset: f64,
    pub car: f64,
    pub car_stderr: f64,
    pub peak_counts: u64,
    pub accidental_counts: u64,
    /// Accidental-window counts predicted from the measured singles,
    /// `S_1 S_2 w T`.
    pub accidental_expected: f64,
    pub singles_rate: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarOutcome {
    pub batches: Vec<CarBatch>,
    /// Histogram of the first batch.
    pub first_histogram: CoincidenceHistogram,
    pub budget: RateBudget,
}

impl CarOutcome {
    pub fn mean_car(&self) -> f64 {
        self.batches.iter().map(|b| b.car).sum::<f64>() / self.batches.len() as f64
    }

    /// Sample standard deviation over mean; zero for a single batch.
    pub fn relative_std(&self) -> f64 {
        let n = self.batches.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.mean_car();
        let var = self.batches.iter().map(|b| (b.car - mean) * (b.car - mean)).sum::<f64>() / (n - 1) as f64;
        libm::sqrt(var) / mean
    }
}

/// Repeated CAR acquisitions through the DWDM pair. Batch `i` uses seed
/// `seed + i` and the drift model's temperature offset.
pub fn run_car(config: &SourceConfig, seed: u64) -> Result<CarOutcome> {
    config.validate()?;
    let budget = rate_budget_for(config, config.filters.dwdm_pair.as_array(), config.pump.power)?;
    let c = &config.car;
    let mut batches = Vec::with_capacity(c.batches);
    let mut first_histogram = None;
    for index in 0..c.batches {
        let offset = c.drift.offset(index);
        let run = simulate_car_run(config, config.pump.power, offset, c.batch_duration, seed.wrapping_add(index as u64))?;
        let m = &run.measurement;
        let width = m.accidental_bins as f64 * run.histogram.bin_width();
        batches.push(CarBatch {
            index,
            temperature_offset: offset,
            car: m.ratio,
            car_stderr: m.stderr(),
            peak_counts: m.peak_counts,
            accidental_counts: m.accidental_counts,
            accidental_expected: run.singles_rate[0] * run.singles_rate[1] * width * run.duration,
            singles_rate: run.singles_rate,
        });
        if first_histogram.is_none() {
            first_histogram = Some(run.histogram);
        }
    }
    Ok(CarOutcome {
        batches,
        first_histogram: first_histogram.expect("at least one batch"),
        budget,
    })
}
