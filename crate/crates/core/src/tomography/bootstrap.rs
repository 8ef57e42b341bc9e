use alloc::vec::Vec;

use rand_distr::{Distribution, Poisson};

use super::mle::{mle_reconstruct_with, MleOptions};
use super::record::MeasurementRecord;
use crate::error::{invalid, Result};
use crate::rng::derived_rng;
use crate::state::PolarizationDensityMatrix;

/// Standard deviations of the measures over Poisson resamples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapErrors {
    pub concurrence: f64,
    pub fidelity: f64,
    pub resamples: usize,
}

fn sample_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    libm::sqrt(var)
}

/// Resamples every count as `Poisson(n_k)` and reconstructs each resample.
/// Resample `i` uses the generator seeded with `seed + i`.
pub fn bootstrap_errors(record: &MeasurementRecord, n_resamples: usize, seed: u64) -> Result<BootstrapErrors> {
    bootstrap_errors_with(record, n_resamples, seed, None, &MleOptions::default())
}

/// As [`bootstrap_errors`], warm-starting every reconstruction at `initial`.
pub fn bootstrap_errors_with(
    record: &MeasurementRecord,
    n_resamples: usize,
    seed: u64,
    initial: Option<&PolarizationDensityMatrix>,
    options: &MleOptions,
) -> Result<BootstrapErrors> {
    if n_resamples < 2 {
        return Err(invalid("n_resamples ≥ 2"));
    }
    let mut concurrences = Vec::with_capacity(n_resamples);
    let mut fidelities = Vec::with_capacity(n_resamples);
    for i in 0..n_resamples {
        let mut rng = derived_rng(seed, i as u64);
        let counts = record
            .counts()
            .iter()
            .map(|&n| if n > 0.0 { Poisson::new(n).expect("positive mean").sample(&mut rng) } else { 0.0 })
            .collect();
        let resampled = record.with_counts(counts)?;
        let res = mle_reconstruct_with(&resampled, initial, options)?;
        concurrences.push(res.concurrence.value);
        fidelities.push(res.fidelity.value);
    }
    Ok(BootstrapErrors {
        concurrence: sample_std(&concurrences),
        fidelity: sample_std(&fidelities),
        resamples: n_resamples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::PolarizationDensityMatrix;
    use crate::tomography::{simulate_record, standard_16_settings, TomographySource};

    #[test]
    fn two_resamples_and_determinism() {
        let rho = PolarizationDensityMatrix::werner(0.9).unwrap();
        let r = simulate_record(&rho, &standard_16_settings(), &TomographySource::ideal(5e3), 1.0, 1).unwrap();
        let a = bootstrap_errors(&r, 2, 7).unwrap();
        assert!(a.concurrence.is_finite() && a.concurrence >= 0.0);
        assert!(a.fidelity.is_finite() && a.fidelity >= 0.0);
        assert_eq!(a, bootstrap_errors(&r, 2, 7).unwrap());
        assert!(bootstrap_errors(&r, 1, 7).is_err());
    }
}
