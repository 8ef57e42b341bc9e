//! Type-II phase matching in the poled fiber and the joint spectral amplitudes
//! `f_-` (|H_s V_i>) and `f_+` (|V_s H_i>).
//!
//! The propagation constants are expanded to second order around the effective
//! degeneracy frequency `w_d`. With the symmetric detuning
//! `W = ((w_s - w_d) - (w_i - (w_p - w_d))) / 2` (which reduces to `w_s - w_d`
//! when energy is conserved exactly) the mismatch of the two branches is
//!
//! ```text
//! dk_±(W) = -beta2 * W^2 ± (dn_g / c) * W
//! ```
//!
//! so both branches are phase matched at `W = 0` and differ only through the
//! group-birefringence walk-off term.

use alloc::vec::Vec;
use core::f64::consts::LN_2;

use crate::error::{invalid, Error, Result};
use crate::units::{gvd_to_si, nm_to_omega, omega_to_nm, SPEED_OF_LIGHT};
use crate::Complex64;

/// Dispersion coefficient fitted once so that the default marginal spectrum
/// has a 101 nm FWHM (see `default_gvd_reproduces_bandwidth` in the tests).
pub const FITTED_GVD_PS2_PER_KM: f64 = 9.253;

/// Default group birefringence of the poled fiber. Small enough that the
/// branch phase difference stays below 0.1 rad over the whole C/L band.
pub const DEFAULT_GROUP_BIREFRINGENCE: f64 = 1.0e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PumpParams {
    /// Vacuum wavelength, nm.
    pub center_wavelength: f64,
    /// Spectral FWHM of the pump amplitude, nm.
    pub linewidth_fwhm: f64,
    /// Power launched into the poled fiber, mW.
    pub power: f64,
}

impl Default for PumpParams {
    fn default() -> Self {
        Self {
            center_wavelength: 782.90,
            linewidth_fwhm: 0.05,
            power: 7.5,
        }
    }
}

impl PumpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.center_wavelength > 0.0 && self.center_wavelength.is_finite()) {
            return Err(invalid("pump.center_wavelength > 0"));
        }
        if !(self.linewidth_fwhm >= 0.0 && self.linewidth_fwhm.is_finite()) {
            return Err(invalid("pump.linewidth_fwhm ≥ 0"));
        }
        if !(self.power >= 0.0 && self.power.is_finite()) {
            return Err(invalid("pump.power ≥ 0"));
        }
        Ok(())
    }

    pub fn omega(&self) -> f64 {
        nm_to_omega(self.center_wavelength)
    }

    /// FWHM of the pump amplitude envelope in angular frequency.
    pub fn omega_fwhm(&self) -> f64 {
        let lambda = self.center_wavelength;
        nm_to_omega(lambda - self.linewidth_fwhm / 2.0) - nm_to_omega(lambda + self.linewidth_fwhm / 2.0)
    }
}

/// Poled-fiber parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PpsfParams {
    /// Interaction length, m.
    pub length: f64,
    /// Degeneracy wavelength at `ref_temperature`, nm.
    pub degeneracy_wavelength_at_ref_temp: f64,
    /// Operating temperature, °C.
    pub temperature: f64,
    /// °C.
    pub ref_temperature: f64,
    /// Shift of the phase-matching wavelength, nm/°C.
    pub temp_tuning_coeff: f64,
    /// Group-index difference between the two polarization modes.
    pub group_birefringence: f64,
    /// Common-mode group-velocity dispersion at degeneracy, ps²/km.
    pub gvd_coeff: f64,
}

impl Default for PpsfParams {
    fn default() -> Self {
        Self {
            length: 0.20,
            degeneracy_wavelength_at_ref_temp: 1565.80,
            temperature: 34.0,
            ref_temperature: 34.0,
            temp_tuning_coeff: 0.1,
            group_birefringence: DEFAULT_GROUP_BIREFRINGENCE,
            gvd_coeff: FITTED_GVD_PS2_PER_KM,
        }
    }
}

impl PpsfParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(invalid("ppsf.length > 0"));
        }
        if !(self.degeneracy_wavelength_at_ref_temp > 0.0) {
            return Err(invalid("ppsf.degeneracy_wavelength_at_ref_temp > 0"));
        }
        if !self.gvd_coeff.is_finite() {
            return Err(invalid("ppsf.gvd_coeff finite"));
        }
        if !(self.group_birefringence >= 0.0 && self.group_birefringence.is_finite()) {
            return Err(invalid("ppsf.group_birefringence ≥ 0"));
        }
        if !(self.temperature.is_finite()
            && self.ref_temperature.is_finite()
            && self.temp_tuning_coeff.is_finite())
        {
            return Err(invalid("ppsf temperatures finite"));
        }
        Ok(())
    }
}

/// Polarization branch of the type-II pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `f_+`, |V_s H_i>.
    Plus,
    /// `f_-`, |H_s V_i>.
    Minus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Signal,
    Idler,
}

/// Sampling grid over signal and idler vacuum wavelengths (nm).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid {
    signal: Vec<f64>,
    idler: Vec<f64>,
}

pub const MIN_GRID_POINTS: usize = 8;

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.len() < MIN_GRID_POINTS {
        return Err(invalid(alloc::format!("{name} axis needs at least {MIN_GRID_POINTS} points")));
    }
    if axis.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(invalid(alloc::format!("{name} wavelengths positive")));
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid(alloc::format!("{name} wavelengths strictly increasing")));
    }
    Ok(())
}

impl SpectralGrid {
    pub fn new(signal_wavelengths: Vec<f64>, idler_wavelengths: Vec<f64>) -> Result<Self> {
        check_axis("signal", &signal_wavelengths)?;
        check_axis("idler", &idler_wavelengths)?;
        Ok(Self {
            signal: signal_wavelengths,
            idler: idler_wavelengths,
        })
    }

    /// Same axis for signal and idler, uniform in wavelength.
    pub fn uniform_wavelength(low_nm: f64, high_nm: f64, points: usize) -> Result<Self> {
        if !(low_nm < high_nm) || points < 2 {
            return Err(invalid("grid low < high"));
        }
        let step = (high_nm - low_nm) / (points - 1) as f64;
        let axis: Vec<f64> = (0..points).map(|k| low_nm + step * k as f64).collect();
        Self::new(axis.clone(), axis)
    }

    /// Identical signal and idler axes, uniform in angular frequency and
    /// symmetric about the pump degeneracy `w_p / 2`, covering at least
    /// `[low_nm, high_nm]`.
    ///
    /// Every signal sample `j` has its exact energy-conjugate at idler index
    /// `points - 1 - j`, so a pump envelope much narrower than the grid pitch
    /// is still sampled at its peak along the anti-diagonal.
    pub fn conjugate_symmetric(pump: &PumpParams, low_nm: f64, high_nm: f64, points: usize) -> Result<Self> {
        pump.validate()?;
        if !(low_nm < high_nm) || points < 2 {
            return Err(invalid("grid low < high"));
        }
        let center = pump.omega() / 2.0;
        let half_span = (nm_to_omega(low_nm) - center).max(center - nm_to_omega(high_nm));
        if !(half_span > 0.0 && half_span < center) {
            return Err(invalid("grid must straddle the degeneracy wavelength"));
        }
        let step = 2.0 * half_span / (points - 1) as f64;
        // Increasing wavelength is decreasing frequency.
        let axis: Vec<f64> = (0..points)
            .map(|k| omega_to_nm(center + half_span - step * k as f64))
            .collect();
        Self::new(axis.clone(), axis)
    }

    /// Default analysis grid: 512 x 512 covering 1465–1665 nm.
    pub fn default_for(pump: &PumpParams) -> Result<Self> {
        Self::conjugate_symmetric(pump, 1465.0, 1665.0, 512)
    }

    pub fn signal_wavelengths(&self) -> &[f64] {
        &self.signal
    }

    pub fn idler_wavelengths(&self) -> &[f64] {
        &self.idler
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.signal.len(), self.idler.len())
    }

    pub fn axis(&self, axis: Axis) -> &[f64] {
        match axis {
            Axis::Signal => &self.signal,
            Axis::Idler => &self.idler,
        }
    }
}

/// Trapezoidal quadrature weights of an axis in angular frequency.
pub(crate) fn trapezoid_weights(wavelengths_nm: &[f64]) -> Vec<f64> {
    let omega: Vec<f64> = wavelengths_nm.iter().map(|&l| nm_to_omega(l)).collect();
    let n = omega.len();
    let mut w = alloc::vec![0.0; n];
    for k in 0..n - 1 {
        let h = (omega[k] - omega[k + 1]).abs() / 2.0;
        w[k] += h;
        w[k + 1] += h;
    }
    w
}

/// Joint spectral amplitudes of both branches on a grid. Arrays are row-major
/// with the signal index as the row.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpectralAmplitude {
    grid: SpectralGrid,
    f_minus: Vec<Complex64>,
    f_plus: Vec<Complex64>,
}

impl JointSpectralAmplitude {
    pub fn new(grid: SpectralGrid, f_minus: Vec<Complex64>, f_plus: Vec<Complex64>) -> Result<Self> {
        let (ns, ni) = grid.shape();
        if f_minus.len() != ns * ni || f_plus.len() != ns * ni {
            return Err(invalid("amplitude arrays must match the grid shape"));
        }
        if f_minus.iter().chain(f_plus.iter()).any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(invalid("amplitudes must be finite"));
        }
        Ok(Self { grid, f_minus, f_plus })
    }

    /// Builds a JSA by evaluating both branch functions at every grid point.
    pub fn from_fn(
        grid: SpectralGrid,
        mut minus: impl FnMut(f64, f64) -> Complex64,
        mut plus: impl FnMut(f64, f64) -> Complex64,
    ) -> Result<Self> {
        let mut f_minus = Vec::with_capacity(grid.signal.len() * grid.idler.len());
        let mut f_plus = Vec::with_capacity(f_minus.capacity());
        for &ls in &grid.signal {
            for &li in &grid.idler {
                f_minus.push(minus(ls, li));
                f_plus.push(plus(ls, li));
            }
        }
        Self::new(grid, f_minus, f_plus)
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn f_minus(&self) -> &[Complex64] {
        &self.f_minus
    }

    pub fn f_plus(&self) -> &[Complex64] {
        &self.f_plus
    }

    pub fn index(&self, signal: usize, idler: usize) -> usize {
        signal * self.grid.idler.len() + idler
    }

    /// Plain sum of `|f_-|² + |f_+|²` over grid points.
    pub fn joint_norm(&self) -> f64 {
        self.f_minus
            .iter()
            .zip(&self.f_plus)
            .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
            .sum()
    }

    /// Per-point joint intensity `|f_-|² + |f_+|²`, row-major.
    pub fn intensity(&self) -> Vec<f64> {
        self.f_minus
            .iter()
            .zip(&self.f_plus)
            .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
            .collect()
    }

    /// Multiplies both branches by a real per-point factor.
    pub fn scaled_by(&self, mut factor: impl FnMut(f64, f64) -> f64) -> Self {
        let mut out = self.clone();
        for (j, &ls) in self.grid.signal.iter().enumerate() {
            for (k, &li) in self.grid.idler.iter().enumerate() {
                let idx = self.index(j, k);
                let s = factor(ls, li);
                out.f_minus[idx] *= s;
                out.f_plus[idx] *= s;
            }
        }
        out
    }
}

/// Wavelength at which signal and idler are degenerate for this pump.
pub fn degeneracy_wavelength(pump: &PumpParams) -> Result<f64> {
    if !(pump.center_wavelength > 0.0) {
        return Err(invalid("pump.center_wavelength > 0"));
    }
    Ok(2.0 * pump.center_wavelength)
}

/// Idler wavelength satisfying `1/l_s + 1/l_i = 1/l_p`.
pub fn conjugate_wavelength(pump: &PumpParams, signal_wavelength: f64) -> Result<f64> {
    if !(pump.center_wavelength > 0.0) {
        return Err(invalid("pump.center_wavelength > 0"));
    }
    let inv = 1.0 / pump.center_wavelength - 1.0 / signal_wavelength;
    if !(inv > 0.0) || !(signal_wavelength > 0.0) {
        return Err(Error::Domain(alloc::format!(
            "signal at {signal_wavelength} nm leaves no positive idler frequency"
        )));
    }
    Ok(1.0 / inv)
}

/// Phase-matching degeneracy at the fiber's operating temperature, nm.
pub fn effective_degeneracy(ppsf: &PpsfParams) -> f64 {
    ppsf.degeneracy_wavelength_at_ref_temp
        + ppsf.temp_tuning_coeff * (ppsf.temperature - ppsf.ref_temperature)
}

/// Symmetric detuning from the effective degeneracy, rad/s.
pub fn detuning(signal_wavelength: f64, idler_wavelength: f64, ppsf: &PpsfParams, pump: &PumpParams) -> f64 {
    let w_deg = nm_to_omega(effective_degeneracy(ppsf));
    let w_deg_partner = pump.omega() - w_deg;
    ((nm_to_omega(signal_wavelength) - w_deg) - (nm_to_omega(idler_wavelength) - w_deg_partner)) / 2.0
}

/// Mismatch as a function of the detuning alone, 1/m.
pub fn phase_mismatch_at(detuning: f64, ppsf: &PpsfParams, branch: Branch) -> f64 {
    let beta2 = gvd_to_si(ppsf.gvd_coeff);
    let walk_off = ppsf.group_birefringence / SPEED_OF_LIGHT;
    -beta2 * detuning * detuning + branch.sign() * walk_off * detuning
}

/// Phase mismatch `dk` of one branch, 1/m.
pub fn phase_mismatch(
    signal_wavelength: f64,
    idler_wavelength: f64,
    ppsf: &PpsfParams,
    pump: &PumpParams,
    branch: Branch,
) -> f64 {
    phase_mismatch_at(detuning(signal_wavelength, idler_wavelength, ppsf, pump), ppsf, branch)
}

/// `sin(x)/x` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        libm::sin(x) / x
    }
}

/// Phase-matching amplitude `sinc(dk L / 2) exp(i dk L / 2)`.
pub fn phase_matching_amplitude(dk: f64, length: f64) -> Complex64 {
    let half = dk * length / 2.0;
    Complex64::new(libm::cos(half), libm::sin(half)) * sinc(half)
}

/// Phase-matching intensity of one branch with the idler fixed by energy
/// conservation, so the detuning is just `w_s - w_d`.
pub fn phase_matching_intensity(signal_omega: f64, ppsf: &PpsfParams, branch: Branch) -> f64 {
    let w_deg = nm_to_omega(effective_degeneracy(ppsf));
    let dk = phase_mismatch_at(signal_omega - w_deg, ppsf, branch);
    let s = sinc(dk * ppsf.length / 2.0);
    s * s
}

/// Gaussian pump amplitude as a function of the pair's summed frequency.
pub fn pump_envelope(sum_omega: f64, pump: &PumpParams) -> f64 {
    let fwhm = pump.omega_fwhm();
    let offset = sum_omega - pump.omega();
    if fwhm <= 0.0 {
        return if offset == 0.0 { 1.0 } else { 0.0 };
    }
    // amplitude exp(-4 ln2 (x / FWHM)^2)
    libm::exp(-4.0 * LN_2 * (offset / fwhm) * (offset / fwhm))
}

/// Evaluates `f_±` on the grid. The overall scale is `sqrt(power / 1 mW)`.
pub fn compute_jsa(ppsf: &PpsfParams, pump: &PumpParams, grid: &SpectralGrid) -> Result<JointSpectralAmplitude> {
    ppsf.validate()?;
    pump.validate()?;
    let (ns, ni) = grid.shape();
    if ns == 0 || ni == 0 {
        return Err(invalid("grid must not be empty"));
    }
    let scale = libm::sqrt(pump.power);
    let signal_omega: Vec<f64> = grid.signal.iter().map(|&l| nm_to_omega(l)).collect();
    let idler_omega: Vec<f64> = grid.idler.iter().map(|&l| nm_to_omega(l)).collect();
    let w_deg = nm_to_omega(effective_degeneracy(ppsf));
    let w_partner = pump.omega() - w_deg;

    let mut f_minus = Vec::with_capacity(ns * ni);
    let mut f_plus = Vec::with_capacity(ns * ni);
    for &ws in &signal_omega {
        for &wi in &idler_omega {
            let envelope = scale * pump_envelope(ws + wi, pump);
            if envelope == 0.0 {
                f_minus.push(Complex64::new(0.0, 0.0));
                f_plus.push(Complex64::new(0.0, 0.0));
                continue;
            }
            let det = ((ws - w_deg) - (wi - w_partner)) / 2.0;
            let dk_minus = phase_mismatch_at(det, ppsf, Branch::Minus);
            let dk_plus = phase_mismatch_at(det, ppsf, Branch::Plus);
            f_minus.push(phase_matching_amplitude(dk_minus, ppsf.length) * envelope);
            f_plus.push(phase_matching_amplitude(dk_plus, ppsf.length) * envelope);
        }
    }
    JointSpectralAmplitude::new(grid.clone(), f_minus, f_plus)
}

/// Marginal intensity along one axis, normalized to unit peak.
pub fn marginal_spectrum(jsa: &JointSpectralAmplitude, axis: Axis) -> Vec<(f64, f64)> {
    let (ns, ni) = jsa.grid.shape();
    let intensity = jsa.intensity();
    let mut values = match axis {
        Axis::Signal => (0..ns)
            .map(|j| intensity[j * ni..(j + 1) * ni].iter().sum::<f64>())
            .collect::<Vec<_>>(),
        Axis::Idler => (0..ni)
            .map(|k| (0..ns).map(|j| intensity[j * ni + k]).sum::<f64>())
            .collect::<Vec<_>>(),
    };
    let peak = values.iter().cloned().fold(0.0, f64::max);
    if peak > 0.0 {
        values.iter_mut().for_each(|v| *v /= peak);
    }
    jsa.grid.axis(axis).iter().cloned().zip(values).collect()
}

/// Full width at half maximum with linear interpolation of the crossings.
pub fn fwhm(curve: &[(f64, f64)]) -> Result<f64> {
    let (peak_idx, peak) = curve
        .iter()
        .enumerate()
        .fold((0usize, f64::NEG_INFINITY), |acc, (i, &(_, y))| if y > acc.1 { (i, y) } else { acc });
    if curve.len() < 3 || !(peak > 0.0) {
        return Err(Error::NotMeasurable("curve has no positive peak".into()));
    }
    let half = peak / 2.0;
    let crossing = |a: (f64, f64), b: (f64, f64)| a.0 + (half - a.1) * (b.0 - a.0) / (b.1 - a.1);

    let left = (1..=peak_idx)
        .rev()
        .find(|&i| curve[i - 1].1 < half)
        .map(|i| crossing(curve[i - 1], curve[i]))
        .ok_or_else(|| Error::NotMeasurable("no half-maximum crossing below the peak".into()))?;
    let right = (peak_idx..curve.len() - 1)
        .find(|&i| curve[i + 1].1 < half)
        .map(|i| crossing(curve[i], curve[i + 1]))
        .ok_or_else(|| Error::NotMeasurable("no half-maximum crossing above the peak".into()))?;
    Ok((right - left).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pump(nm: f64) -> PumpParams {
        PumpParams {
            center_wavelength: nm,
            ..PumpParams::default()
        }
    }

    #[test]
    fn degeneracy_doubles_pump() {
        assert!((degeneracy_wavelength(&pump(782.90)).unwrap() - 1565.80).abs() < 1e-9);
        assert!((degeneracy_wavelength(&pump(775.0)).unwrap() - 1550.0).abs() < 1e-12);
        assert!((degeneracy_wavelength(&pump(391.45)).unwrap() - 782.90).abs() < 1e-12);
        assert!(matches!(degeneracy_wavelength(&pump(0.0)), Err(Error::InvalidParameter(_))));
        assert!(degeneracy_wavelength(&pump(-3.0)).is_err());
    }

    #[test]
    fn conjugate_wavelengths() {
        let p = pump(782.90);
        assert!((conjugate_wavelength(&p, 1565.80).unwrap() - 1565.80).abs() < 1e-9);
        // 1 / (1/782.90 - 1/1554.95), evaluated with 40-digit arithmetic
        assert!((conjugate_wavelength(&p, 1554.95).unwrap() - 1576.802480409).abs() < 1e-6);
        assert!((conjugate_wavelength(&p, 1530.00).unwrap() - 1603.315486548).abs() < 1e-6);
        assert!(matches!(conjugate_wavelength(&p, 700.0), Err(Error::Domain(_))));
        assert!(matches!(conjugate_wavelength(&p, 782.90), Err(Error::Domain(_))));
    }

    #[test]
    fn temperature_tuning() {
        let mut f = PpsfParams::default();
        assert!((effective_degeneracy(&f) - 1565.80).abs() < 1e-12);
        f.temperature = 34.3;
        assert!((effective_degeneracy(&f) - 1565.83).abs() < 1e-9);
        f.temperature = 33.7;
        assert!((effective_degeneracy(&f) - 1565.77).abs() < 1e-9);
    }

    #[test]
    fn phase_matched_at_degeneracy_after_temperature_shift() {
        let p = PumpParams::default();
        for temp in [33.7, 34.0, 34.3, 40.0] {
            let f = PpsfParams {
                temperature: temp,
                group_birefringence: 5e-4,
                ..PpsfParams::default()
            };
            let ls = effective_degeneracy(&f);
            let li = conjugate_wavelength(&p, ls).unwrap();
            for b in [Branch::Plus, Branch::Minus] {
                let dk = phase_mismatch(ls, li, &f, &p, b);
                assert!(dk.abs() < 1e-12, "dk = {dk}");
            }
        }
    }

    #[test]
    fn branches_coincide_without_birefringence() {
        let p = PumpParams::default();
        let f = PpsfParams {
            group_birefringence: 0.0,
            ..PpsfParams::default()
        };
        for ls in [1470.0, 1530.0, 1565.0, 1600.0, 1660.0] {
            let li = conjugate_wavelength(&p, ls).unwrap();
            assert_eq!(
                phase_mismatch(ls, li, &f, &p, Branch::Plus),
                phase_mismatch(ls, li, &f, &p, Branch::Minus)
            );
        }
    }

    #[test]
    fn quadratic_term_matches_polynomial_propagation_constant() {
        // k(w) = k0 + k1 (w - w0) + beta2/2 (w - w0)^2 for signal and idler,
        // pump and grating vector cancel the constant term at degeneracy.
        let f = PpsfParams {
            group_birefringence: 0.0,
            ..PpsfParams::default()
        };
        let beta2 = gvd_to_si(f.gvd_coeff);
        let w0 = nm_to_omega(effective_degeneracy(&f));
        let k = |w: f64| 7.0e6 + 4.9e-9 * (w - w0) + 0.5 * beta2 * (w - w0) * (w - w0);
        let mismatch = |det: f64| -(k(w0 + det) + k(w0 - det) - 2.0 * k(w0));
        let h = 2.0e12;
        for det in [1.0e13, 3.0e13, 6.0e13] {
            let second_fd = (mismatch(det + h) - 2.0 * mismatch(det) + mismatch(det - h)) / (h * h);
            let second_model = (phase_mismatch_at(det + h, &f, Branch::Plus)
                - 2.0 * phase_mismatch_at(det, &f, Branch::Plus)
                + phase_mismatch_at(det - h, &f, Branch::Plus))
                / (h * h);
            assert!((second_fd - second_model).abs() < 1e-3 * second_model.abs());
            assert!((mismatch(det) - phase_mismatch_at(det, &f, Branch::Minus)).abs() < 1e-6 * mismatch(det).abs());
        }
    }

    #[test]
    fn sinc_convention() {
        assert_eq!(sinc(0.0), 1.0);
        assert!((sinc(core::f64::consts::PI)).abs() < 1e-15);
        assert!((sinc(1e-9) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fwhm_examples() {
        let gauss: Vec<(f64, f64)> = (0..2001)
            .map(|i| {
                let x = -100.0 + 0.1 * i as f64;
                (x, libm::exp(-x * x / 200.0))
            })
            .collect();
        assert!((fwhm(&gauss).unwrap() - 23.548_200_45).abs() < 0.1);

        let triangle = vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)];
        assert!((fwhm(&triangle).unwrap() - 1.0).abs() < 1e-12);

        // half-maximum of sinc²(pi x) found by dense scan: 0.885_893
        let sinc2: Vec<(f64, f64)> = (0..4001)
            .map(|i| {
                let x = -2.0 + 0.001 * i as f64;
                let s = sinc(core::f64::consts::PI * x);
                (x, s * s)
            })
            .collect();
        assert!((fwhm(&sinc2).unwrap() - 0.886).abs() < 0.01);
    }

    #[test]
    fn fwhm_rejects_flat_and_monotone() {
        let flat: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 1.0)).collect();
        assert!(matches!(fwhm(&flat), Err(Error::NotMeasurable(_))));
        let ramp: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, i as f64)).collect();
        assert!(matches!(fwhm(&ramp), Err(Error::NotMeasurable(_))));
        let zeros: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 0.0)).collect();
        assert!(fwhm(&zeros).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(SpectralGrid::uniform_wavelength(1500.0, 1600.0, 4).is_err());
        assert!(SpectralGrid::new(vec![1.0; 8], (1..9).map(|x| x as f64).collect()).is_err());
        let g = SpectralGrid::default_for(&PumpParams::default()).unwrap();
        assert_eq!(g.shape(), (512, 512));
        let s = g.signal_wavelengths();
        assert!(s[0] <= 1465.0 + 1e-9 && s[511] >= 1665.0 - 1e-9);
        // exact conjugate pairs across the anti-diagonal
        let p = PumpParams::default();
        for j in [0, 100, 255, 400] {
            let conj = conjugate_wavelength(&p, s[j]).unwrap();
            assert!((conj - g.idler_wavelengths()[511 - j]).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_power_gives_zero_amplitudes() {
        let p = PumpParams {
            power: 0.0,
            ..PumpParams::default()
        };
        let g = SpectralGrid::conjugate_symmetric(&p, 1500.0, 1640.0, 32).unwrap();
        let jsa = compute_jsa(&PpsfParams::default(), &p, &g).unwrap();
        assert_eq!(jsa.joint_norm(), 0.0);
    }
}
