use std::f64::consts::PI;

use biphoton_core::spectral::{compute_jsa, JointSpectralAmplitude, PpsfParams, PumpParams, SpectralGrid};
use biphoton_core::state::{
    concurrence, fidelity, hermitian_eigen, kron2, psi_plus, purity, random_density_matrix, random_qubit_unitary,
    reduce_to_polarization, PolarizationDensityMatrix, HV, VH,
};
use biphoton_core::units::nm_to_omega;
use biphoton_core::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn grid() -> SpectralGrid {
    SpectralGrid::uniform_wavelength(1500.0, 1640.0, 8).unwrap()
}

fn amplitudes() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 128)
}

fn jsa_from(values: &[(f64, f64)]) -> JointSpectralAmplitude {
    let z: Vec<Complex64> = values.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
    JointSpectralAmplitude::new(grid(), z[..64].to_vec(), z[64..].to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn random_jsas_reduce_to_density_matrices(values in amplitudes()) {
        prop_assume!(values.iter().any(|&(a, b)| a != 0.0 || b != 0.0));
        let rho = reduce_to_polarization(&jsa_from(&values)).unwrap();
        let m = rho.elements();
        prop_assert!((m.trace().re - 1.0).abs() < 1e-12);
        prop_assert!((m - m.adjoint()).norm() < 1e-12);
        let (values, _) = hermitian_eigen(m);
        prop_assert!(values[0] >= -1e-12);
    }

    #[test]
    fn fidelity_bounded_by_concurrence(values in amplitudes()) {
        prop_assume!(values.iter().any(|&(a, b)| a != 0.0 || b != 0.0));
        let rho = reduce_to_polarization(&jsa_from(&values)).unwrap();
        let f = fidelity(&rho, &psi_plus()).unwrap();
        prop_assert!(f <= (1.0 + concurrence(&rho)) / 2.0 + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn concurrence_invariant_under_local_unitaries(seed in any::<u64>(), rank in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density_matrix(&mut rng, rank);
        let u = kron2(&random_qubit_unitary(&mut rng), &random_qubit_unitary(&mut rng));
        let rotated = rho.conjugated_by(&u).unwrap();
        prop_assert!((concurrence(&rho) - concurrence(&rotated)).abs() < 1e-9);
        prop_assert!((purity(&rho) - purity(&rotated)).abs() < 1e-12);
    }
}

#[test]
fn identical_branches_are_maximally_entangled() {
    let pump = PumpParams::default();
    let ppsf = PpsfParams {
        group_birefringence: 0.0,
        ..PpsfParams::default()
    };
    let jsa = compute_jsa(&ppsf, &pump, &SpectralGrid::default_for(&pump).unwrap()).unwrap();
    let rho = reduce_to_polarization(&jsa).unwrap();
    assert!(1.0 - concurrence(&rho) < 1e-9);
    assert!(1.0 - fidelity(&rho, &psi_plus()).unwrap() < 1e-9);
}

/// `f+ = f- exp(i phi)` with `phi` running linearly from 0 to `span` across
/// the signal axis.
fn phase_ramped(span: f64) -> (JointSpectralAmplitude, Complex64) {
    let pump = PumpParams::default();
    let grid = SpectralGrid::default_for(&pump).unwrap();
    let base = compute_jsa(&PpsfParams::default(), &pump, &grid).unwrap();
    let axis = grid.signal_wavelengths();
    let (w0, w1) = (nm_to_omega(axis[0]), nm_to_omega(axis[axis.len() - 1]));
    let phase = |l: f64| span * (nm_to_omega(l) - w0) / (w1 - w0);
    let ni = axis.len();
    let plus: Vec<Complex64> = base
        .f_minus()
        .iter()
        .enumerate()
        .map(|(idx, f)| f * Complex64::from_polar(1.0, phase(axis[idx / ni])))
        .collect();
    let jsa = JointSpectralAmplitude::new(grid.clone(), base.f_minus().to_vec(), plus).unwrap();

    // independent quadrature: the grid is uniform in frequency, so
    // trapezoid weights are 1 inside and 1/2 on the edges
    let weight = |k: usize| if k == 0 || k == ni - 1 { 0.5 } else { 1.0 };
    let mut norm = 0.0;
    let mut cross = Complex64::new(0.0, 0.0);
    for (j, &lambda) in axis.iter().enumerate() {
        for k in 0..ni {
            let f = base.f_minus()[j * ni + k];
            let w = weight(j) * weight(k);
            norm += 2.0 * w * f.norm_sqr();
            cross += Complex64::from_polar(w * f.norm_sqr(), -phase(lambda));
        }
    }
    (jsa, cross / norm)
}

#[test]
fn phase_spread_matches_quadrature_and_lowers_concurrence() {
    let (flat, _) = phase_ramped(0.0);
    let (ramped, expected) = phase_ramped(PI);
    let rho_flat = reduce_to_polarization(&flat).unwrap();
    let rho = reduce_to_polarization(&ramped).unwrap();
    let off = rho.elements()[(HV, VH)];
    assert!((off.norm() - expected.norm()).abs() < 1e-9, "{} vs {}", off.norm(), expected.norm());
    assert!((off - expected).norm() < 1e-9);
    assert!(concurrence(&rho) < concurrence(&rho_flat));
    assert!(concurrence(&rho) < 0.99);
}

#[test]
fn werner_family_closed_forms() {
    for p in [0.0, 1.0 / 3.0, 0.5, 0.8, 1.0] {
        let rho = PolarizationDensityMatrix::werner(p).unwrap();
        assert!((concurrence(&rho) - f64::max(0.0, (3.0 * p - 1.0) / 2.0)).abs() < 1e-9);
        assert!((fidelity(&rho, &psi_plus()).unwrap() - (p + (1.0 - p) / 4.0)).abs() < 1e-9);
        assert!((purity(&rho) - (1.0 + 3.0 * p * p) / 4.0).abs() < 1e-9);
        // eigenvalues: (1+3p)/4 once, (1-p)/4 three times
        let values = rho.eigenvalues();
        let mut expected = [(1.0 - p) / 4.0, (1.0 - p) / 4.0, (1.0 - p) / 4.0, (1.0 + 3.0 * p) / 4.0];
        expected.sort_by(f64::total_cmp);
        for (a, b) in values.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
