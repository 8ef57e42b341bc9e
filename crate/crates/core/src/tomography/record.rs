use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use super::analyzer::{measurement_operator, projector, AnalyzerSetting, SettingPair};
use crate::counting::DetectorParams;
use crate::error::{invalid, Result};
use crate::rng::{rng_from_seed, SimRng};
use crate::state::{Matrix4c, PolarizationDensityMatrix};
use crate::units::db_to_transmission;
use crate::Complex64;

/// Coincidence and singles counts per analyzer setting pair.
///
/// Counts are stored as `f64` so that expected (noiseless) and
/// background-subtracted records share the type with simulated ones.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    settings: Vec<SettingPair>,
    counts: Vec<f64>,
    acquisition_time: Vec<f64>,
    singles: Vec<[f64; 2]>,
}

impl MeasurementRecord {
    pub fn new(
        settings: Vec<SettingPair>,
        counts: Vec<f64>,
        acquisition_time: Vec<f64>,
        singles: Vec<[f64; 2]>,
    ) -> Result<Self> {
        let n = settings.len();
        if counts.len() != n || acquisition_time.len() != n || singles.len() != n {
            return Err(invalid("record lists must have equal lengths"));
        }
        if counts.iter().chain(singles.iter().flatten()).any(|c| !(*c >= 0.0 && c.is_finite())) {
            return Err(invalid("record counts ≥ 0"));
        }
        if acquisition_time.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(invalid("acquisition_time > 0"));
        }
        let angles_finite = settings.iter().all(|(s, i)| {
            [s.qwp_angle, s.hwp_angle, i.qwp_angle, i.hwp_angle].iter().all(|a| a.is_finite())
        });
        if !angles_finite {
            return Err(invalid("analyzer angles finite"));
        }
        Ok(Self {
            settings,
            counts,
            acquisition_time,
            singles,
        })
    }

    pub fn settings(&self) -> &[SettingPair] {
        &self.settings
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn acquisition_time(&self) -> &[f64] {
        &self.acquisition_time
    }

    pub fn singles(&self) -> &[[f64; 2]] {
        &self.singles
    }

    pub fn len(&self) -> usize {
        self.settings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.settings.is_empty()
    }

    pub fn total_counts(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// Same settings and metadata with new coincidence counts.
    pub fn with_counts(&self, counts: Vec<f64>) -> Result<Self> {
        Self::new(self.settings.clone(), counts, self.acquisition_time.clone(), self.singles.clone())
    }

    /// Subtracts the accidental estimate `S_s S_i tau / T` from every
    /// setting, clipping at zero.
    pub fn subtract_accidentals(&self, coincidence_window: f64) -> Result<Self> {
        let counts = self
            .counts
            .iter()
            .zip(&self.singles)
            .zip(&self.acquisition_time)
            .map(|((&c, s), &t)| (c - s[0] * s[1] * coincidence_window / t).max(0.0))
            .collect();
        self.with_counts(counts)
    }
}

/// Pair stream feeding the two polarization analyzers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TomographySource {
    /// Pairs/s with one photon entering each analyzer.
    pub pair_rate: f64,
    /// Photons/s entering each analyzer without a partner in the other arm.
    /// They are unpolarized.
    pub unpaired_rate: [f64; 2],
    /// Loss between source and analyzer, dB.
    pub arm_loss_db: [f64; 2],
    pub detectors: [DetectorParams; 2],
    /// s
    pub coincidence_window: f64,
    pub include_accidentals: bool,
    /// Standard deviation of the waveplate angle errors, rad.
    pub angle_jitter: f64,
}

impl TomographySource {
    /// Noiseless pairs with ideal detectors.
    pub fn ideal(pair_rate: f64) -> Self {
        Self {
            pair_rate,
            unpaired_rate: [0.0; 2],
            arm_loss_db: [0.0; 2],
            detectors: [DetectorParams::ideal(); 2],
            coincidence_window: 1e-9,
            include_accidentals: false,
            angle_jitter: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.pair_rate >= 0.0 && self.pair_rate.is_finite()) {
            return Err(invalid("pair_rate ≥ 0"));
        }
        if self.unpaired_rate.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return Err(invalid("unpaired_rate ≥ 0"));
        }
        if self.arm_loss_db.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(invalid("arm loss ≥ 0 dB"));
        }
        for d in &self.detectors {
            d.validate()?;
        }
        if !(self.coincidence_window >= 0.0) {
            return Err(invalid("coincidence_window ≥ 0"));
        }
        if !(self.angle_jitter >= 0.0 && self.angle_jitter.is_finite()) {
            return Err(invalid("angle_jitter ≥ 0"));
        }
        Ok(())
    }

    /// Mean coincidences, singles per arm for one setting.
    fn means(&self, rho: &Matrix4c, pair: &SettingPair, time: f64) -> (f64, [f64; 2]) {
        let born = (rho * measurement_operator(pair)).trace().re.max(0.0);
        let ps = projector(&pair.0);
        let pi = projector(&pair.1);
        let id = nalgebra::Matrix2::<Complex64>::identity();
        let marginal = [
            (rho * crate::state::kron2(&ps, &id)).trace().re.max(0.0),
            (rho * crate::state::kron2(&id, &pi)).trace().re.max(0.0),
        ];
        let survive = [0, 1].map(|a| db_to_transmission(self.arm_loss_db[a]) * self.detectors[a].efficiency);
        let raw = [0, 1].map(|a| {
            (self.pair_rate * marginal[a] + 0.5 * self.unpaired_rate[a]) * survive[a] + self.detectors[a].dark_rate
        });
        let live = [0, 1].map(|a| self.detectors[a].live_fraction(raw[a]));
        let singles_rate = [raw[0] * live[0], raw[1] * live[1]];
        let mut coincidence_rate = self.pair_rate * born * survive[0] * survive[1] * live[0] * live[1];
        if self.include_accidentals {
            coincidence_rate += singles_rate[0] * singles_rate[1] * self.coincidence_window;
        }
        (coincidence_rate * time, [singles_rate[0] * time, singles_rate[1] * time])
    }
}

fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng)
}

fn check_inputs(settings: &[SettingPair], acquisition_time: f64) -> Result<()> {
    if !(acquisition_time > 0.0 && acquisition_time.is_finite()) {
        return Err(invalid("acquisition_time > 0"));
    }
    if settings.is_empty() {
        return Err(invalid("at least one analyzer setting"));
    }
    Ok(())
}

/// Noiseless record whose counts equal the Poisson means.
pub fn expected_record(
    rho: &PolarizationDensityMatrix,
    settings: &[SettingPair],
    source: &TomographySource,
    acquisition_time: f64,
) -> Result<MeasurementRecord> {
    source.validate()?;
    check_inputs(settings, acquisition_time)?;
    let mut counts = Vec::with_capacity(settings.len());
    let mut singles = Vec::with_capacity(settings.len());
    for pair in settings {
        let (c, s) = source.means(rho.elements(), pair, acquisition_time);
        counts.push(c);
        singles.push(s);
    }
    MeasurementRecord::new(settings.to_vec(), counts, alloc::vec![acquisition_time; settings.len()], singles)
}

fn jittered(setting: &AnalyzerSetting, rng: &mut SimRng, sigma: f64) -> AnalyzerSetting {
    if sigma == 0.0 {
        return *setting;
    }
    let n = Normal::new(0.0, sigma).expect("finite sigma");
    AnalyzerSetting::new(setting.qwp_angle + n.sample(rng), setting.hwp_angle + n.sample(rng))
}

/// Poisson-sampled record. The nominal settings are recorded even when the
/// actual waveplate angles are jittered.
pub fn simulate_record(
    rho: &PolarizationDensityMatrix,
    settings: &[SettingPair],
    source: &TomographySource,
    acquisition_time: f64,
    seed: u64,
) -> Result<MeasurementRecord> {
    source.validate()?;
    check_inputs(settings, acquisition_time)?;
    let mut rng = rng_from_seed(seed);
    let mut counts = Vec::with_capacity(settings.len());
    let mut singles = Vec::with_capacity(settings.len());
    for pair in settings {
        let actual = (
            jittered(&pair.0, &mut rng, source.angle_jitter),
            jittered(&pair.1, &mut rng, source.angle_jitter),
        );
        let (c, s) = source.means(rho.elements(), &actual, acquisition_time);
        counts.push(poisson(&mut rng, c));
        singles.push([poisson(&mut rng, s[0]), poisson(&mut rng, s[1])]);
    }
    MeasurementRecord::new(settings.to_vec(), counts, alloc::vec![acquisition_time; settings.len()], singles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::psi_plus;
    use crate::tomography::{standard_16_settings, AnalyzerBasis};

    fn setting(s: AnalyzerBasis, i: AnalyzerBasis) -> SettingPair {
        (s.setting(), i.setting())
    }

    #[test]
    fn psi_plus_means() {
        let rho = PolarizationDensityMatrix::pure(&psi_plus()).unwrap();
        let det = DetectorParams {
            efficiency: 0.2,
            dead_time: 0.0,
            dark_rate: 0.0,
            jitter_sigma: 0.0,
        };
        let source = TomographySource {
            detectors: [det, det],
            ..TomographySource::ideal(1e5)
        };
        let settings = [
            setting(AnalyzerBasis::H, AnalyzerBasis::H),
            setting(AnalyzerBasis::H, AnalyzerBasis::V),
        ];
        let r = expected_record(&rho, &settings, &source, 2.0).unwrap();
        assert!(r.counts()[0].abs() < 1e-9);
        assert!((r.counts()[1] - 1e5 * 0.04 * 0.5 * 2.0).abs() < 1e-6);

        let noisy = TomographySource {
            include_accidentals: true,
            detectors: [DetectorParams { dark_rate: 1000.0, ..det }; 2],
            ..source
        };
        let r = expected_record(&rho, &settings, &noisy, 1.0).unwrap();
        let s = r.singles()[0];
        assert!((r.counts()[0] - s[0] * s[1] * 1e-9).abs() < 1e-12);
    }

    #[test]
    fn simulation_is_deterministic() {
        let rho = PolarizationDensityMatrix::pure(&psi_plus()).unwrap();
        let source = TomographySource::ideal(1e4);
        let settings = standard_16_settings();
        let a = simulate_record(&rho, &settings, &source, 1.0, 9).unwrap();
        let b = simulate_record(&rho, &settings, &source, 1.0, 9).unwrap();
        assert_eq!(a, b);
        assert!(simulate_record(&rho, &settings, &source, -1.0, 9).is_err());
    }

    #[test]
    fn record_validation() {
        let s = standard_16_settings();
        assert!(MeasurementRecord::new(s.clone(), alloc::vec![1.0; 15], alloc::vec![1.0; 16], alloc::vec![[0.0; 2]; 16]).is_err());
        assert!(MeasurementRecord::new(s.clone(), alloc::vec![-1.0; 16], alloc::vec![1.0; 16], alloc::vec![[0.0; 2]; 16]).is_err());
        assert!(MeasurementRecord::new(s, alloc::vec![1.0; 16], alloc::vec![0.0; 16], alloc::vec![[0.0; 2]; 16]).is_err());
    }
}
