//! Unit conversions. Wavelengths are vacuum nanometres at every public
//! boundary; angular frequencies are rad/s internally.

use core::f64::consts::PI;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Seconds per picosecond.
pub const PICOSECOND: f64 = 1e-12;

/// Vacuum wavelength in nm to angular frequency in rad/s.
pub fn nm_to_omega(wavelength_nm: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / (wavelength_nm * 1e-9)
}

/// Angular frequency in rad/s to vacuum wavelength in nm.
pub fn omega_to_nm(omega: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / omega * 1e9
}

/// Power ratio for a loss in dB.
pub fn db_to_transmission(loss_db: f64) -> f64 {
    libm::pow(10.0, -loss_db / 10.0)
}

/// Group-velocity dispersion in ps²/km to s²/m.
pub fn gvd_to_si(ps2_per_km: f64) -> f64 {
    ps2_per_km * 1e-27
}

/// Seconds to integer picosecond ticks, rounded to nearest.
pub fn seconds_to_ps(seconds: f64) -> i64 {
    libm::round(seconds / PICOSECOND) as i64
}

pub fn ps_to_seconds(ticks: i64) -> f64 {
    ticks as f64 * PICOSECOND
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequency_round_trip() {
        for nm in [782.9, 1565.8, 1465.0, 1665.0] {
            let back = omega_to_nm(nm_to_omega(nm));
            assert!((back - nm).abs() < 1e-9 * nm);
        }
    }

    #[test]
    fn three_db_is_about_half() {
        assert!((db_to_transmission(3.0) - 0.501_187_233_627_272_3).abs() < 1e-15);
        assert_eq!(db_to_transmission(0.0), 1.0);
    }
}
