//! Jones-calculus analyzers.
//!
//! Each arm has a half-wave plate, then a quarter-wave plate, then a polarizer
//! transmitting H. A plate with fast axis at angle `t` from H and retardance
//! `d` is `R(-t) diag(1, e^{i d}) R(t)`, with `d = pi` for the HWP and
//! `d = pi/2` for the QWP. The transmitted amplitude for an input `|psi>` is
//! `<H| QWP(q) HWP(h) |psi>`, so the arm projects onto
//! `|v> = HWP(h)† QWP(q)† |H>`.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI};

use nalgebra::{Matrix2, Vector2};

use crate::state::{kron2, Matrix4c};
use crate::Complex64;

/// Waveplate angles in radians, measured from the H axis.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnalyzerSetting {
    pub qwp_angle: f64,
    pub hwp_angle: f64,
}

/// (signal, idler)
pub type SettingPair = (AnalyzerSetting, AnalyzerSetting);

impl AnalyzerSetting {
    pub const fn new(qwp_angle: f64, hwp_angle: f64) -> Self {
        Self { qwp_angle, hwp_angle }
    }
}

/// The four analyzer states of the standard set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyzerBasis {
    H,
    V,
    /// (H + V)/sqrt 2
    D,
    /// (H - iV)/sqrt 2
    R,
}

impl AnalyzerBasis {
    pub const ALL: [AnalyzerBasis; 4] = [AnalyzerBasis::H, AnalyzerBasis::V, AnalyzerBasis::D, AnalyzerBasis::R];

    pub fn setting(self) -> AnalyzerSetting {
        match self {
            AnalyzerBasis::H => AnalyzerSetting::new(0.0, 0.0),
            AnalyzerBasis::V => AnalyzerSetting::new(0.0, FRAC_PI_4),
            AnalyzerBasis::D => AnalyzerSetting::new(0.0, FRAC_PI_8),
            AnalyzerBasis::R => AnalyzerSetting::new(FRAC_PI_4, 0.0),
        }
    }

    pub fn ket(self) -> Vector2<Complex64> {
        let s = FRAC_1_SQRT_2;
        let c = Complex64::new;
        match self {
            AnalyzerBasis::H => Vector2::new(c(1.0, 0.0), c(0.0, 0.0)),
            AnalyzerBasis::V => Vector2::new(c(0.0, 0.0), c(1.0, 0.0)),
            AnalyzerBasis::D => Vector2::new(c(s, 0.0), c(s, 0.0)),
            AnalyzerBasis::R => Vector2::new(c(s, 0.0), c(0.0, -s)),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AnalyzerBasis::H => "H",
            AnalyzerBasis::V => "V",
            AnalyzerBasis::D => "D",
            AnalyzerBasis::R => "R",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.label() == label)
    }

    /// Matches a setting to a standard basis state by angle.
    pub fn of_setting(setting: &AnalyzerSetting) -> Option<Self> {
        Self::ALL.into_iter().find(|b| {
            let s = b.setting();
            (s.qwp_angle - setting.qwp_angle).abs() < 1e-12 && (s.hwp_angle - setting.hwp_angle).abs() < 1e-12
        })
    }
}

pub fn waveplate(angle: f64, retardance: f64) -> Matrix2<Complex64> {
    let (s, c) = (libm::sin(angle), libm::cos(angle));
    let re = |x: f64| Complex64::new(x, 0.0);
    let rot = Matrix2::new(re(c), re(s), re(-s), re(c));
    let rot_back = Matrix2::new(re(c), re(-s), re(s), re(c));
    let phase = Matrix2::new(re(1.0), re(0.0), re(0.0), Complex64::new(libm::cos(retardance), libm::sin(retardance)));
    rot_back * phase * rot
}

/// The polarization state the analyzer transmits with unit probability.
pub fn analyzed_state(setting: &AnalyzerSetting) -> Vector2<Complex64> {
    let hwp = waveplate(setting.hwp_angle, PI);
    let qwp = waveplate(setting.qwp_angle, FRAC_PI_2);
    let h = Vector2::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    hwp.adjoint() * qwp.adjoint() * h
}

pub fn projector(setting: &AnalyzerSetting) -> Matrix2<Complex64> {
    let v = analyzed_state(setting);
    v * v.adjoint()
}

/// `P_signal ⊗ P_idler`.
pub fn measurement_operator(pair: &SettingPair) -> Matrix4c {
    kron2(&projector(&pair.0), &projector(&pair.1))
}

/// `{H, V, D, R} ⊗ {H, V, D, R}` with the signal setting as the outer loop.
pub fn standard_16_settings() -> Vec<SettingPair> {
    let mut out = Vec::with_capacity(16);
    for s in AnalyzerBasis::ALL {
        for i in AnalyzerBasis::ALL {
            out.push((s.setting(), i.setting()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Matrix2<Complex64>, b: &Matrix2<Complex64>, tol: f64) -> bool {
        (a - b).iter().all(|z| z.norm() < tol)
    }

    #[test]
    fn identity_setting_projects_on_h() {
        let p = projector(&AnalyzerSetting::new(0.0, 0.0));
        let h = AnalyzerBasis::H.ket();
        assert!(close(&p, &(h * h.adjoint()), 1e-15));
    }

    #[test]
    fn quarter_and_half_wave_give_circular_state() {
        let p = projector(&AnalyzerSetting::new(45f64.to_radians(), 22.5f64.to_radians()));
        assert!((p[(0, 1)].norm() - 0.5).abs() < 1e-12);
        assert!((p[(0, 0)].re - 0.5).abs() < 1e-12);
        // off-diagonal is purely imaginary for a circular state
        assert!(p[(0, 1)].re.abs() < 1e-12);
    }

    #[test]
    fn standard_settings_hit_their_kets() {
        for b in AnalyzerBasis::ALL {
            let p = projector(&b.setting());
            let k = b.ket();
            assert!(close(&p, &(k * k.adjoint()), 1e-12), "{:?}", b);
            assert_eq!(AnalyzerBasis::of_setting(&b.setting()), Some(b));
        }
    }

    #[test]
    fn projectors_are_idempotent_with_unit_trace() {
        for i in 0..40 {
            let s = AnalyzerSetting::new(0.37 * i as f64, -0.91 * i as f64 + 0.2);
            let p = projector(&s);
            assert!((p.trace().re - 1.0).abs() < 1e-12);
            assert!(close(&(p * p), &p, 1e-12));
        }
    }

    #[test]
    fn standard_set_is_informationally_complete() {
        let settings = standard_16_settings();
        assert_eq!(settings.len(), 16);
        assert_eq!(settings[0], (AnalyzerBasis::H.setting(), AnalyzerBasis::H.setting()));
        // rank of the 16x16 matrix of vectorized operators
        let m = nalgebra::DMatrix::<f64>::from_fn(16, 32, |r, c| {
            let op = measurement_operator(&settings[r]);
            let z = op[((c % 16) / 4, c % 4)];
            if c < 16 { z.re } else { z.im }
        });
        let sv = m.svd(false, false).singular_values;
        let max = sv.max();
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min / max > 1e-3, "condition number {}", max / min);
    }
}
