use crate::error::{invalid, Result};

/// Default uncorrelated count rate per detector, 1/s. Calibrated so the
/// default DWDM configuration at 7.5 mW gives a CAR near 2400 with a 1 ns
/// coincidence window.
pub const DEFAULT_DARK_RATE: f64 = 6000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DetectorParams {
    /// Detection efficiency in [0, 1].
    pub efficiency: f64,
    /// s
    pub dead_time: f64,
    /// 1/s
    pub dark_rate: f64,
    /// Gaussian timing jitter, s.
    pub jitter_sigma: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            efficiency: 0.20,
            dead_time: 15e-6,
            dark_rate: DEFAULT_DARK_RATE,
            jitter_sigma: 100e-12,
        }
    }
}

impl DetectorParams {
    /// Noiseless, lossless, instantaneous detector.
    pub fn ideal() -> Self {
        Self {
            efficiency: 1.0,
            dead_time: 0.0,
            dark_rate: 0.0,
            jitter_sigma: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(invalid("detector efficiency in [0, 1]"));
        }
        if !(self.dead_time >= 0.0 && self.dead_time.is_finite()) {
            return Err(invalid("detector dead_time ≥ 0"));
        }
        if !(self.dark_rate >= 0.0 && self.dark_rate.is_finite()) {
            return Err(invalid("detector dark_rate ≥ 0"));
        }
        if !(self.jitter_sigma >= 0.0 && self.jitter_sigma.is_finite()) {
            return Err(invalid("detector jitter_sigma ≥ 0"));
        }
        Ok(())
    }

    /// Fraction of time the detector is live at raw count rate `rate`
    /// (non-paralyzable).
    pub fn live_fraction(&self, rate: f64) -> f64 {
        1.0 / (1.0 + rate * self.dead_time)
    }
}
