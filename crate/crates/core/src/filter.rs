//! Passband filters with raised-cosine edges.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::spectral::JointSpectralAmplitude;
use crate::units::db_to_transmission;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct Passband {
    /// nm
    pub low: f64,
    /// nm
    pub high: f64,
    /// Peak power transmittance in [0, 1].
    pub transmittance: f64,
}

impl Passband {
    pub fn new(low: f64, high: f64) -> Self {
        Self {
            low,
            high,
            transmittance: 1.0,
        }
    }

    pub fn centered(center: f64, width: f64) -> Self {
        Self::new(center - width / 2.0, center + width / 2.0)
    }
}

/// A filter made of one or more passbands. Each edge rolls off as a raised
/// cosine of total width `edge_width` centered on the nominal edge, so the
/// integrated transmission of a passband equals `high - low` and the edges sit
/// at the 3 dB points.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct FilterSpec {
    pub passbands: Vec<Passband>,
    /// dB, applied uniformly on top of the passband shape.
    pub insertion_loss_db: f64,
    /// nm
    pub edge_width: f64,
}

pub const DEFAULT_EDGE_WIDTH_NM: f64 = 0.5;

impl FilterSpec {
    pub fn new(passbands: Vec<Passband>, insertion_loss_db: f64, edge_width: f64) -> Result<Self> {
        let spec = Self {
            passbands,
            insertion_loss_db,
            edge_width,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Transmits everything with no loss.
    pub fn all_pass() -> Self {
        Self {
            passbands: alloc::vec![Passband::new(0.0, f64::INFINITY)],
            insertion_loss_db: 0.0,
            edge_width: 0.0,
        }
    }

    pub fn band(low: f64, high: f64, insertion_loss_db: f64, edge_width: f64) -> Self {
        Self {
            passbands: alloc::vec![Passband::new(low, high)],
            insertion_loss_db,
            edge_width,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for band in &self.passbands {
            if !(band.low < band.high) {
                return Err(invalid("passband low < high"));
            }
            if !(0.0..=1.0).contains(&band.transmittance) {
                return Err(invalid("passband transmittance in [0, 1]"));
            }
        }
        if !(self.insertion_loss_db >= 0.0 && self.insertion_loss_db.is_finite()) {
            return Err(invalid("insertion_loss_db ≥ 0"));
        }
        if !(self.edge_width >= 0.0 && self.edge_width.is_finite()) {
            return Err(invalid("edge_width ≥ 0"));
        }
        Ok(())
    }

    /// Passband shape at `wavelength` without insertion loss.
    pub fn shape(&self, wavelength: f64) -> f64 {
        self.passbands
            .iter()
            .map(|b| b.transmittance * edge(wavelength - b.low, self.edge_width) * edge(b.high - wavelength, self.edge_width))
            .fold(0.0, f64::max)
    }

    /// Power transmission including insertion loss.
    pub fn transmission(&self, wavelength: f64) -> f64 {
        self.shape(wavelength) * db_to_transmission(self.insertion_loss_db)
    }
}

// Rises from 0 at x = -w/2 to 1 at x = +w/2.
fn edge(x: f64, width: f64) -> f64 {
    if width == 0.0 {
        return if x >= 0.0 { 1.0 } else { 0.0 };
    }
    if x <= -width / 2.0 {
        0.0
    } else if x >= width / 2.0 {
        1.0
    } else {
        0.5 * (1.0 + libm::sin(PI * x / width))
    }
}

/// Multiplies the amplitudes by `sqrt(T_s(l_s) T_i(l_i))`.
pub fn apply_filters(
    jsa: &JointSpectralAmplitude,
    signal_filter: &FilterSpec,
    idler_filter: &FilterSpec,
) -> Result<JointSpectralAmplitude> {
    signal_filter.validate()?;
    idler_filter.validate()?;
    let out = jsa.scaled_by(|ls, li| libm::sqrt(signal_filter.transmission(ls) * idler_filter.transmission(li)));
    if out.joint_norm() == 0.0 {
        return Err(Error::Empty("no grid point survives the filters".into()));
    }
    Ok(out)
}
