//! TOML config loading, overrides and digests.

use std::path::Path;

use biphoton_core::source::SourceConfig;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Name and revision of the built-in profile every config starts from.
pub const PROFILE: &str = "paper-default/1";

/// Parses config text. Missing keys take their paper-default values and
/// unknown keys are errors. The result is validated.
pub fn parse_config(text: &str) -> Result<SourceConfig> {
    let config: SourceConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<SourceConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Full TOML rendering; reparses to an equal config.
pub fn to_toml(config: &SourceConfig) -> String {
    toml::to_string_pretty(config).expect("config serializes to TOML")
}

/// SHA-256 of the compact JSON rendering, hex encoded. Field order is fixed
/// by the type, so equal configs give equal digests.
pub fn digest(config: &SourceConfig) -> String {
    let json = serde_json::to_vec(config).expect("config serializes to JSON");
    hex::encode(Sha256::digest(&json))
}

/// Command-line overrides applied on top of a loaded config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub batches: Option<usize>,
    /// Seconds; see [`Overrides::apply`] for what it sets per command.
    pub duration: Option<f64>,
    pub no_accidentals: bool,
    pub subtract_background: bool,
    /// mW
    pub power: Option<f64>,
}

/// Which experiment an override is aimed at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Spectrum,
    Tomography,
    Car,
    Budget,
    Sweep,
}

impl Overrides {
    /// Applies the overrides and revalidates. `duration` sets the spectrometer
    /// acquisition (pairs = duration × pair_rate), the tomography time per
    /// setting, the CAR batch length or the sweep time per point.
    pub fn apply(&self, mut config: SourceConfig, target: Target) -> Result<SourceConfig> {
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(power) = self.power {
            config.pump.power = power;
        }
        if let Some(batches) = self.batches {
            config.car.batches = batches;
        }
        if self.no_accidentals {
            config.tomography.include_accidentals = false;
        }
        if self.subtract_background {
            config.tomography.subtract_background = true;
        }
        if let Some(duration) = self.duration {
            if !(duration > 0.0 && duration.is_finite()) {
                return Err(CliError::Config("--duration must be > 0".into()));
            }
            match target {
                Target::Spectrum => {
                    config.spectrometer.pairs = (duration * config.spectrometer.pair_rate).round() as u64
                }
                Target::Tomography => config.tomography.acquisition_time = duration,
                Target::Car => config.car.batch_duration = duration,
                Target::Sweep => config.sweep.duration = duration,
                Target::Budget => {}
            }
        }
        config.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_the_default_profile() {
        assert_eq!(parse_config("").unwrap(), SourceConfig::default());
    }

    #[test]
    fn negative_power_names_the_invariant() {
        let err = parse_config("[pump]\npower = -1.0\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("power ≥ 0"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let err = parse_config("[pump]\npowr = 1.0\n").unwrap_err().to_string();
        assert!(err.contains("powr"), "{err}");
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn round_trip_and_digest() {
        let mut config = SourceConfig {
            seed: 99,
            ..SourceConfig::default()
        };
        config.ppsf.group_birefringence = 3e-6;
        let text = to_toml(&config);
        let back = parse_config(&text).unwrap();
        assert_eq!(back, config);
        assert_eq!(digest(&back), digest(&config));
        assert_ne!(digest(&config), digest(&SourceConfig::default()));
    }

    #[test]
    fn overrides_revalidate() {
        let o = Overrides {
            power: Some(-2.0),
            ..Overrides::default()
        };
        assert!(matches!(o.apply(SourceConfig::default(), Target::Car), Err(CliError::Config(_))));
        let o = Overrides {
            duration: Some(5.0),
            seed: Some(4),
            ..Overrides::default()
        };
        let c = o.apply(SourceConfig::default(), Target::Spectrum).unwrap();
        assert_eq!(c.spectrometer.pairs, 100_000);
        assert_eq!(c.seed, 4);
    }
}
