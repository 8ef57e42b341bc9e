//! Aggregated source and experiment configuration. `Default` is the
//! paper-default profile: every constant not measured on the real apparatus is
//! marked as a modeling choice where it is defined.

use alloc::vec;
use alloc::vec::Vec;

use crate::counting::{CarWindows, DetectorParams};
use crate::error::{invalid, Result};
use crate::filter::{FilterSpec, Passband};
use crate::spectral::{PpsfParams, PumpParams, SpectralGrid};
use crate::spectrometer::DispersiveFiber;

/// Signal and idler arm filters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct FilterPair {
    pub signal: FilterSpec,
    pub idler: FilterSpec,
}

impl FilterPair {
    pub fn as_array(&self) -> [&FilterSpec; 2] {
        [&self.signal, &self.idler]
    }

    pub fn validate(&self) -> Result<()> {
        self.signal.validate()?;
        self.idler.validate()
    }
}

/// Nominal 3 dB bandwidth of the DWDM channels. The filters themselves are
/// modeled with the 0.85 nm effective bandwidth.
pub const DWDM_3DB_BANDWIDTH_NM: f64 = 1.1;
pub const DWDM_EFFECTIVE_BANDWIDTH_NM: f64 = 0.85;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct FilterBank {
    /// C band to the signal arm, L band to the idler arm.
    pub cl_splitter: FilterPair,
    /// Narrow channels for the CAR measurement.
    pub dwdm_pair: FilterPair,
    /// Inside the source, before its output.
    pub pump_suppression: FilterSpec,
}

impl Default for FilterBank {
    fn default() -> Self {
        Self {
            cl_splitter: FilterPair {
                signal: FilterSpec::band(1530.0, 1565.0, 0.5, 0.5),
                idler: FilterSpec::band(1565.0, 1615.0, 0.5, 0.5),
            },
            dwdm_pair: FilterPair {
                signal: FilterSpec {
                    passbands: vec![Passband::centered(1554.95, DWDM_EFFECTIVE_BANDWIDTH_NM)],
                    insertion_loss_db: 1.0,
                    edge_width: 0.1,
                },
                idler: FilterSpec {
                    passbands: vec![Passband::centered(1577.05, DWDM_EFFECTIVE_BANDWIDTH_NM)],
                    insertion_loss_db: 2.0,
                    edge_width: 0.1,
                },
            },
            pump_suppression: FilterSpec::band(1400.0, 1800.0, 4.0, 0.0),
        }
    }
}

impl FilterBank {
    pub fn validate(&self) -> Result<()> {
        self.cl_splitter.validate()?;
        self.dwdm_pair.validate()?;
        self.pump_suppression.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DetectorPair {
    pub signal: DetectorParams,
    pub idler: DetectorParams,
}

impl DetectorPair {
    pub fn as_array(&self) -> [DetectorParams; 2] {
        [self.signal, self.idler]
    }
}

/// Pump-power-to-pair-rate calibration and internal loss stages.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct RateCalibration {
    /// Pairs/s at the source output per mW of pump.
    pub pairs_per_mw: f64,
    /// mW
    pub max_pump_power: f64,
    /// Pump-side splice, dB.
    pub pmf_ppsf_splice_db: f64,
    /// Photon-side splice, dB.
    pub ppsf_smf_splice_db: f64,
}

impl Default for RateCalibration {
    fn default() -> Self {
        Self {
            // 7e5 pairs/s at 7.5 mW
            pairs_per_mw: 7.0e5 / 7.5,
            max_pump_power: 30.0,
            pmf_ppsf_splice_db: 1.5,
            ppsf_smf_splice_db: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct GridSettings {
    pub low_nm: f64,
    pub high_nm: f64,
    pub points: usize,
}

impl Default for GridSettings {
    fn default() -> Self {
        Self {
            low_nm: 1465.0,
            high_nm: 1665.0,
            points: 512,
        }
    }
}

/// Coincidence analysis settings (all in seconds).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct CountingSettings {
    pub bin_width: f64,
    pub max_delay: f64,
    pub windows: CarWindows,
}

impl Default for CountingSettings {
    fn default() -> Self {
        Self {
            bin_width: 100e-12,
            max_delay: 260e-9,
            windows: CarWindows::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TomographySettings {
    /// Seconds per analyzer setting.
    pub acquisition_time: f64,
    pub bootstrap_resamples: usize,
    pub include_accidentals: bool,
    /// Subtract estimated accidentals from coincidences before reconstruction.
    pub subtract_background: bool,
    /// Gaussian analyzer angle error, rad.
    pub angle_jitter: f64,
    /// Relative phase of the |psi+> fidelity target, rad.
    pub target_phase: f64,
}

impl Default for TomographySettings {
    fn default() -> Self {
        Self {
            acquisition_time: 1.0,
            bootstrap_resamples: 50,
            include_accidentals: true,
            subtract_background: false,
            angle_jitter: 0.0,
            target_phase: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SpectrometerSettings {
    /// Simulated pair emissions.
    pub pairs: u64,
    /// Pairs per second entering the spool.
    pub pair_rate: f64,
    /// Probability a photon leaves output 1 of the beamsplitter.
    pub beamsplitter_ratio: f64,
    /// s
    pub bin_width: f64,
    /// s
    pub max_delay: f64,
    /// |delay| range used for the accidental floor, s.
    pub accidental_low: f64,
    pub accidental_high: f64,
    /// Boxcar width applied before measuring the FWHM, nm.
    pub resolution_nm: f64,
}

impl Default for SpectrometerSettings {
    fn default() -> Self {
        Self {
            pairs: 1_000_000,
            pair_rate: 2.0e4,
            beamsplitter_ratio: 0.5,
            bin_width: 500e-12,
            max_delay: 120e-9,
            accidental_low: 90e-9,
            accidental_high: 120e-9,
            resolution_nm: 5.0,
        }
    }
}

/// Slow sinusoidal drift of the fiber temperature across CAR batches.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DriftModel {
    pub enabled: bool,
    /// °C
    pub amplitude: f64,
    /// Period in batches.
    pub period_batches: f64,
}

impl Default for DriftModel {
    fn default() -> Self {
        Self {
            enabled: true,
            amplitude: 0.3,
            period_batches: 10.0,
        }
    }
}

impl DriftModel {
    /// Temperature offset for batch `index`, °C.
    pub fn offset(&self, index: usize) -> f64 {
        if !self.enabled || self.period_batches <= 0.0 {
            return 0.0;
        }
        self.amplitude * libm::sin(2.0 * core::f64::consts::PI * index as f64 / self.period_batches)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct CarSettings {
    pub batches: usize,
    /// s
    pub batch_duration: f64,
    pub drift: DriftModel,
}

impl Default for CarSettings {
    fn default() -> Self {
        Self {
            batches: 10,
            batch_duration: 60.0,
            drift: DriftModel::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SweepSettings {
    /// mW
    pub powers: Vec<f64>,
    /// s per point
    pub duration: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            powers: vec![1.0, 2.5, 5.0, 7.5, 10.0, 15.0, 20.0, 30.0],
            duration: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SourceConfig {
    pub pump: PumpParams,
    pub ppsf: PpsfParams,
    pub filters: FilterBank,
    pub fiber: DispersiveFiber,
    pub detectors: DetectorPair,
    pub rates: RateCalibration,
    pub seed: u64,
    pub grid: GridSettings,
    pub counting: CountingSettings,
    pub tomography: TomographySettings,
    pub spectrometer: SpectrometerSettings,
    pub car: CarSettings,
    pub sweep: SweepSettings,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            pump: PumpParams::default(),
            ppsf: PpsfParams::default(),
            filters: FilterBank::default(),
            fiber: DispersiveFiber::default(),
            detectors: DetectorPair::default(),
            rates: RateCalibration::default(),
            seed: 20_190_101,
            grid: GridSettings::default(),
            counting: CountingSettings::default(),
            tomography: TomographySettings::default(),
            spectrometer: SpectrometerSettings::default(),
            car: CarSettings::default(),
            sweep: SweepSettings::default(),
        }
    }
}

impl SourceConfig {
    pub fn validate(&self) -> Result<()> {
        self.pump.validate()?;
        self.ppsf.validate()?;
        self.filters.validate()?;
        self.fiber.validate()?;
        self.detectors.signal.validate()?;
        self.detectors.idler.validate()?;
        let r = &self.rates;
        if !(r.pairs_per_mw >= 0.0 && r.pairs_per_mw.is_finite()) {
            return Err(invalid("rates.pairs_per_mw ≥ 0"));
        }
        if !(r.max_pump_power > 0.0) {
            return Err(invalid("rates.max_pump_power > 0"));
        }
        if !(r.pmf_ppsf_splice_db >= 0.0 && r.ppsf_smf_splice_db >= 0.0) {
            return Err(invalid("splice losses ≥ 0 dB"));
        }
        let g = &self.grid;
        if !(g.low_nm > 0.0 && g.low_nm < g.high_nm) || g.points < crate::spectral::MIN_GRID_POINTS {
            return Err(invalid("grid: 0 < low_nm < high_nm and points ≥ 8"));
        }
        let c = &self.counting;
        if !(c.bin_width > 0.0 && c.max_delay > c.bin_width) {
            return Err(invalid("counting: 0 < bin_width < max_delay"));
        }
        let t = &self.tomography;
        if !(t.acquisition_time > 0.0) {
            return Err(invalid("tomography.acquisition_time > 0"));
        }
        if t.bootstrap_resamples == 1 {
            return Err(invalid("tomography.bootstrap_resamples = 0 or ≥ 2"));
        }
        if !(t.angle_jitter >= 0.0) {
            return Err(invalid("tomography.angle_jitter ≥ 0"));
        }
        let s = &self.spectrometer;
        if !(s.pair_rate > 0.0) {
            return Err(invalid("spectrometer.pair_rate > 0"));
        }
        if !(0.0..=1.0).contains(&s.beamsplitter_ratio) {
            return Err(invalid("spectrometer.beamsplitter_ratio in [0, 1]"));
        }
        if !(s.bin_width > 0.0 && s.max_delay > s.bin_width) {
            return Err(invalid("spectrometer: 0 < bin_width < max_delay"));
        }
        if !(s.accidental_low < s.accidental_high && s.accidental_high <= s.max_delay) {
            return Err(invalid("spectrometer accidental window inside max_delay"));
        }
        if !(s.resolution_nm >= 0.0) {
            return Err(invalid("spectrometer.resolution_nm ≥ 0"));
        }
        if self.car.batches < 1 {
            return Err(invalid("car.batches ≥ 1"));
        }
        if !(self.car.batch_duration > 0.0) {
            return Err(invalid("car.batch_duration > 0"));
        }
        if self.sweep.powers.iter().any(|p| !(*p > 0.0)) || !(self.sweep.duration > 0.0) {
            return Err(invalid("sweep powers > 0 and duration > 0"));
        }
        Ok(())
    }

    /// Pairs/s at the source output for a pump power in mW.
    pub fn generation_rate(&self, power_mw: f64) -> f64 {
        self.rates.pairs_per_mw * power_mw
    }

    pub fn spectral_grid(&self) -> Result<SpectralGrid> {
        SpectralGrid::conjugate_symmetric(&self.pump, self.grid.low_nm, self.grid.high_nm, self.grid.points)
    }
}
