use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::filter::FilterSpec;
use crate::source::SourceConfig;
use crate::spectral::{effective_degeneracy, phase_matching_intensity, Branch, PpsfParams, PumpParams};
use crate::units::{db_to_transmission, nm_to_omega, omega_to_nm};

/// Fractions of all generated pairs that reach the arm filters, from the
/// passband shapes only (insertion loss excluded).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralFractions {
    /// Pairs with one photon in each arm, counting both photon orderings.
    pub coincident: f64,
    /// Photons per pair that fall in each arm.
    pub arm: [f64; 2],
}

const QUADRATURE_POINTS: usize = 400_000;

/// Integrates the normalized pair spectrum against the two filters.
///
/// The pump linewidth is neglected here, so each signal frequency pairs with
/// exactly one idler frequency. The spectrum is integrated over detunings up
/// to a quarter of the degeneracy frequency, where the phase-matching
/// intensity has long decayed.
pub fn spectral_fractions(ppsf: &PpsfParams, pump: &PumpParams, filters: [&FilterSpec; 2]) -> SpectralFractions {
    let w_deg = nm_to_omega(effective_degeneracy(ppsf));
    let w_pump = pump.omega();
    let half = 0.25 * w_deg;
    let step = 2.0 * half / QUADRATURE_POINTS as f64;
    let mut norm = 0.0;
    let mut coincident = 0.0;
    let mut arm = [0.0; 2];
    for k in 0..QUADRATURE_POINTS {
        let ws = w_deg - half + step * (k as f64 + 0.5);
        let density = 0.5
            * (phase_matching_intensity(ws, ppsf, Branch::Plus) + phase_matching_intensity(ws, ppsf, Branch::Minus));
        if density == 0.0 {
            continue;
        }
        norm += density;
        let (ls, li) = (omega_to_nm(ws), omega_to_nm(w_pump - ws));
        let t0 = [filters[0].shape(ls), filters[0].shape(li)];
        let t1 = [filters[1].shape(ls), filters[1].shape(li)];
        coincident += density * (t0[0] * t1[1] + t1[0] * t0[1]);
        arm[0] += density * (t0[0] + t0[1]);
        arm[1] += density * (t1[0] + t1[1]);
    }
    SpectralFractions {
        coincident: coincident / norm,
        arm: [arm[0] / norm, arm[1] / norm],
    }
}

/// A loss element in the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct LossStage {
    pub name: String,
    pub loss_db: f64,
    /// Inside the source, already folded into the output-rate calibration.
    pub internal: bool,
}

/// Analytic rates from pump power to detected coincidences.
#[derive(Debug, Clone, PartialEq)]
pub struct RateBudget {
    /// mW
    pub pump_power: f64,
    /// Pairs/s at the source output.
    pub generation_rate: f64,
    /// Pairs/s inside the fiber before the internal photon-side losses.
    pub internal_pair_rate: f64,
    pub stages: Vec<LossStage>,
    pub spectral: SpectralFractions,
    /// Insertion-loss transmission of each arm.
    pub arm_transmission: [f64; 2],
    /// Photons/s reaching each detector.
    pub photon_rate: [f64; 2],
    /// Dead-time-corrected count rate of each detector including darks.
    pub detected_singles: [f64; 2],
    pub live_fraction: [f64; 2],
    pub coincidence_rate: f64,
    pub accidental_rate: f64,
    /// s
    pub coincidence_window: f64,
    /// Detected coincidences per second per nm of signal-filter bandwidth.
    pub detected_pairs_per_nm: f64,
}

impl RateBudget {
    /// Coincidences per accidental in the coincidence window.
    pub fn car(&self) -> f64 {
        if self.accidental_rate == 0.0 {
            f64::INFINITY
        } else {
            self.coincidence_rate / self.accidental_rate
        }
    }

    /// Pairs/s with one photon entering each arm, and the unpaired photon
    /// rates per arm, before insertion loss.
    pub fn arm_inputs(&self) -> (f64, [f64; 2]) {
        let pairs = self.generation_rate * self.spectral.coincident;
        let unpaired = [0, 1].map(|a| (self.generation_rate * self.spectral.arm[a] - pairs).max(0.0));
        (pairs, unpaired)
    }
}

fn integrated_width(filter: &FilterSpec) -> f64 {
    filter
        .passbands
        .iter()
        .filter(|b| b.high.is_finite())
        .map(|b| b.transmittance * (b.high - b.low))
        .sum()
}

/// Rate budget through the DWDM pair at the configured pump power.
pub fn rate_budget(config: &SourceConfig) -> Result<RateBudget> {
    rate_budget_for(config, config.filters.dwdm_pair.as_array(), config.pump.power)
}

/// Rate budget through arbitrary arm filters.
pub fn rate_budget_for(config: &SourceConfig, arm_filters: [&FilterSpec; 2], power_mw: f64) -> Result<RateBudget> {
    config.validate()?;
    let pump = PumpParams {
        power: power_mw,
        ..config.pump
    };
    pump.validate()?;
    let generation_rate = config.generation_rate(power_mw);
    let photon_side_internal =
        db_to_transmission(config.rates.ppsf_smf_splice_db + config.filters.pump_suppression.insertion_loss_db);
    let stages = vec![
        LossStage {
            name: "PMF-PPSF splice (pump)".into(),
            loss_db: config.rates.pmf_ppsf_splice_db,
            internal: true,
        },
        LossStage {
            name: "PPSF-SMF splice".into(),
            loss_db: config.rates.ppsf_smf_splice_db,
            internal: true,
        },
        LossStage {
            name: "pump suppression".into(),
            loss_db: config.filters.pump_suppression.insertion_loss_db,
            internal: true,
        },
        LossStage {
            name: "arm 1 filter".into(),
            loss_db: arm_filters[0].insertion_loss_db,
            internal: false,
        },
        LossStage {
            name: "arm 2 filter".into(),
            loss_db: arm_filters[1].insertion_loss_db,
            internal: false,
        },
    ];

    let spectral = spectral_fractions(&config.ppsf, &pump, arm_filters);
    let detectors = config.detectors.as_array();
    let arm_transmission = [0, 1].map(|a| db_to_transmission(arm_filters[a].insertion_loss_db));
    let photon_rate = [0, 1].map(|a| generation_rate * spectral.arm[a] * arm_transmission[a]);
    let raw = [0, 1].map(|a| photon_rate[a] * detectors[a].efficiency + detectors[a].dark_rate);
    let live_fraction = [0, 1].map(|a| detectors[a].live_fraction(raw[a]));
    let detected_singles = [0, 1].map(|a| raw[a] * live_fraction[a]);
    let coincidence_rate = generation_rate
        * spectral.coincident
        * arm_transmission[0]
        * arm_transmission[1]
        * detectors[0].efficiency
        * detectors[1].efficiency
        * live_fraction[0]
        * live_fraction[1];
    let window = config.counting.windows.coincidence_window;
    let accidental_rate = detected_singles[0] * detected_singles[1] * window;
    let width = integrated_width(arm_filters[0]);
    let detected_pairs_per_nm = if width > 0.0 { coincidence_rate / width } else { 0.0 };

    Ok(RateBudget {
        pump_power: power_mw,
        generation_rate,
        internal_pair_rate: generation_rate / (photon_side_internal * photon_side_internal),
        stages,
        spectral,
        arm_transmission,
        photon_rate,
        detected_singles,
        live_fraction,
        coincidence_rate,
        accidental_rate,
        coincidence_window: window,
        detected_pairs_per_nm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::DetectorParams;
    use crate::spectral::degeneracy_wavelength;

    fn lossless_config() -> (SourceConfig, FilterSpec, FilterSpec) {
        let mut c = SourceConfig::default();
        c.detectors.signal = DetectorParams::ideal();
        c.detectors.idler = DetectorParams::ideal();
        let deg = degeneracy_wavelength(&c.pump).unwrap();
        let short = FilterSpec::band(1000.0, deg, 0.0, 0.0);
        let long = FilterSpec::band(deg, 3000.0, 0.0, 0.0);
        (c, short, long)
    }

    #[test]
    fn lossless_chain_collapses() {
        let (c, short, long) = lossless_config();
        let b = rate_budget_for(&c, [&short, &long], 7.5).unwrap();
        assert!((b.spectral.coincident - 1.0).abs() < 1e-9);
        assert!((b.coincidence_rate - b.generation_rate).abs() < 1e-9 * b.generation_rate);
        assert!((b.generation_rate - 7.0e5).abs() < 1e-6);
    }

    #[test]
    fn coincidences_never_exceed_singles() {
        let c = SourceConfig::default();
        for p in [1.0, 7.5, 30.0] {
            let b = rate_budget_for(&c, c.filters.dwdm_pair.as_array(), p).unwrap();
            assert!(b.coincidence_rate <= b.detected_singles[0].min(b.detected_singles[1]));
            assert!(b.coincidence_rate > 0.0 && b.accidental_rate > 0.0);
        }
    }

    #[test]
    fn fractions_bounded_by_arm_fractions() {
        let c = SourceConfig::default();
        let f = spectral_fractions(&c.ppsf, &c.pump, c.filters.cl_splitter.as_array());
        assert!(f.coincident > 0.0);
        assert!(f.coincident <= f.arm[0] + 1e-12 && f.coincident <= f.arm[1] + 1e-12);
    }
}
