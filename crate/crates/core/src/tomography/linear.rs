use nalgebra::{DMatrix, DVector, Matrix2};

use super::analyzer::measurement_operator;
use super::record::MeasurementRecord;
use crate::error::{Error, Result};
use crate::state::{hermitian_eigen, hermitize, kron2, Matrix4c, PolarizationDensityMatrix, PSD_TOL};
use crate::Complex64;

/// Linear-inversion estimate. The matrix is Hermitian with unit trace but may
/// have negative eigenvalues; `is_psd` reports whether it passes the
/// density-matrix checks.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEstimate {
    pub matrix: Matrix4c,
    pub is_psd: bool,
    pub min_eigenvalue: f64,
}

impl LinearEstimate {
    /// Nearest density matrix obtained by clipping negative eigenvalues.
    pub fn projected(&self) -> Result<PolarizationDensityMatrix> {
        PolarizationDensityMatrix::project(&self.matrix)
    }
}

pub(crate) fn pauli(k: usize) -> Matrix2<Complex64> {
    let c = Complex64::new;
    match k {
        0 => Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)),
        1 => Matrix2::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)),
        2 => Matrix2::new(c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)),
        _ => Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)),
    }
}

/// Smallest ratio of singular values accepted for the measurement matrix.
const CONDITION_LIMIT: f64 = 1e-10;

/// Least-squares inversion of the Born rule on count rates.
///
/// The unnormalized state is expanded as `X = (1/4) sum x_ab s_a ⊗ s_b` in
/// the Pauli basis, each rate `n_k / t_k` is modeled as `tr(X M_k)`, and the
/// 16 real coefficients are solved by SVD. The result is `X / x_00`.
pub fn linear_inversion(record: &MeasurementRecord) -> Result<LinearEstimate> {
    let rows = record.len();
    if rows < 16 {
        return Err(Error::NonInvertible(alloc::format!("{rows} settings cannot span 16 parameters")));
    }
    let basis: alloc::vec::Vec<Matrix4c> = (0..16).map(|k| kron2(&pauli(k / 4), &pauli(k % 4))).collect();
    let mut design = DMatrix::<f64>::zeros(rows, 16);
    for (r, pair) in record.settings().iter().enumerate() {
        let m = measurement_operator(pair);
        for (col, b) in basis.iter().enumerate() {
            design[(r, col)] = 0.25 * (b * m).trace().re;
        }
    }
    let y = DVector::from_iterator(
        rows,
        record.counts().iter().zip(record.acquisition_time()).map(|(n, t)| n / t),
    );
    let svd = design.svd(true, true);
    let max_sv = svd.singular_values.max();
    let min_sv = svd.singular_values.min();
    if !(max_sv > 0.0) || min_sv / max_sv < CONDITION_LIMIT {
        return Err(Error::NonInvertible("measurement operators do not span the state space".into()));
    }
    let x = svd.solve(&y, 0.0).map_err(|e| Error::NonInvertible(e.into()))?;
    if !(x[0] > 0.0) {
        return Err(Error::DegenerateData("reconstructed trace is not positive".into()));
    }
    let mut m = Matrix4c::zeros();
    for (k, b) in basis.iter().enumerate() {
        m += b * Complex64::new(0.25 * x[k] / x[0], 0.0);
    }
    let m = hermitize(&m);
    let (values, _) = hermitian_eigen(&m);
    let min_eigenvalue = values[0];
    Ok(LinearEstimate {
        matrix: m,
        is_psd: min_eigenvalue >= -PSD_TOL,
        min_eigenvalue,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{psi_plus, trace_distance};
    use crate::tomography::{expected_record, standard_16_settings, TomographySource};

    #[test]
    fn noiseless_psi_plus_and_mixed() {
        let settings = standard_16_settings();
        for rho in [
            PolarizationDensityMatrix::pure(&psi_plus()).unwrap(),
            PolarizationDensityMatrix::maximally_mixed(),
        ] {
            let r = expected_record(&rho, &settings, &TomographySource::ideal(1e4), 1.0).unwrap();
            let est = linear_inversion(&r).unwrap();
            assert!(trace_distance(&est.matrix, rho.elements()) < 1e-9);
            assert!(est.is_psd);
        }
    }

    #[test]
    fn too_few_settings() {
        let settings = standard_16_settings()[..12].to_vec();
        let rho = PolarizationDensityMatrix::maximally_mixed();
        let r = expected_record(&rho, &settings, &TomographySource::ideal(1e4), 1.0).unwrap();
        assert!(matches!(linear_inversion(&r), Err(Error::NonInvertible(_))));
        let repeated = alloc::vec![standard_16_settings()[0]; 16];
        let r = expected_record(&rho, &repeated, &TomographySource::ideal(1e4), 1.0).unwrap();
        assert!(matches!(linear_inversion(&r), Err(Error::NonInvertible(_))));
    }
}
