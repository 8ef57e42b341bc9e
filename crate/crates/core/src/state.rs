//! Two-qubit polarization states in the ordered basis {HH, HV, VH, VV}
//! (signal first).

use alloc::vec::Vec;

use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::spectral::{trapezoid_weights, JointSpectralAmplitude};
use crate::Complex64;

pub type Matrix4c = Matrix4<Complex64>;
pub type Ket4 = Vector4<Complex64>;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues down to `-PSD_TOL` are clipped to zero; below that is an error.
pub const PSD_TOL: f64 = 1e-9;

pub const HH: usize = 0;
pub const HV: usize = 1;
pub const VH: usize = 2;
pub const VV: usize = 3;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `(|HV> + e^{i phase}|VH>) / sqrt 2`.
pub fn psi_plus_with_phase(phase: f64) -> Ket4 {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    Ket4::new(c(0.0, 0.0), c(s, 0.0), c(s * libm::cos(phase), s * libm::sin(phase)), c(0.0, 0.0))
}

pub fn psi_plus() -> Ket4 {
    psi_plus_with_phase(0.0)
}

pub fn psi_minus() -> Ket4 {
    psi_plus_with_phase(core::f64::consts::PI)
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(m: &Matrix4c) -> (Vec<f64>, Matrix4c) {
    let eig = SymmetricEigen::new(*m);
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = Matrix4c::from_fn(|r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

fn max_abs(m: &Matrix4c) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Rebuilds `V diag(values) V†`.
fn from_spectrum(values: &[f64], vectors: &Matrix4c) -> Matrix4c {
    let mut out = Matrix4c::zeros();
    for (k, &v) in values.iter().enumerate() {
        let col = vectors.column(k);
        out += col * col.adjoint() * c(v, 0.0);
    }
    out
}

/// Hermitian part `(m + m†) / 2`.
pub fn hermitize(m: &Matrix4c) -> Matrix4c {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// A validated two-qubit density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationDensityMatrix {
    elements: Matrix4c,
}

impl PolarizationDensityMatrix {
    /// Checks Hermiticity, unit trace and positivity. Eigenvalues within
    /// [`PSD_TOL`] below zero are clipped and the trace renormalized.
    pub fn new(elements: Matrix4c) -> Result<Self> {
        if elements.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidState("non-finite entries".into()));
        }
        if max_abs(&(elements - elements.adjoint())) > HERMITIAN_TOL {
            return Err(Error::InvalidState("matrix is not Hermitian".into()));
        }
        let trace = elements.trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(alloc::format!("trace {trace} is not 1")));
        }
        let h = hermitize(&elements);
        let (values, vectors) = hermitian_eigen(&h);
        if values[0] < -PSD_TOL {
            return Err(Error::InvalidState(alloc::format!(
                "eigenvalue {} below -{PSD_TOL}",
                values[0]
            )));
        }
        if values[0] < 0.0 {
            let clipped: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
            let total: f64 = clipped.iter().sum();
            let scaled: Vec<f64> = clipped.iter().map(|v| v / total).collect();
            return Ok(Self {
                elements: from_spectrum(&scaled, &vectors),
            });
        }
        Ok(Self { elements: h })
    }

    /// Hermitizes and trace-normalizes before validating.
    pub fn from_unnormalized(m: &Matrix4c) -> Result<Self> {
        let h = hermitize(m);
        let trace = h.trace().re;
        if !(trace > 0.0) {
            return Err(Error::DegenerateState("trace is not positive".into()));
        }
        Self::new(h / c(trace, 0.0))
    }

    /// Nearest density matrix by clipping negative eigenvalues of the
    /// Hermitian part and renormalizing.
    pub fn project(m: &Matrix4c) -> Result<Self> {
        let (values, vectors) = hermitian_eigen(&hermitize(m));
        let clipped: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        if !(total > 0.0) {
            return Err(Error::DegenerateState("no positive eigenvalue".into()));
        }
        let scaled: Vec<f64> = clipped.iter().map(|v| v / total).collect();
        Self::new(hermitize(&from_spectrum(&scaled, &vectors)))
    }

    pub fn pure(ket: &Ket4) -> Result<Self> {
        let norm = ket.norm_squared();
        if !(norm > 0.0) {
            return Err(Error::DegenerateState("zero vector".into()));
        }
        Self::new(ket * ket.adjoint() / c(norm, 0.0))
    }

    pub fn maximally_mixed() -> Self {
        Self {
            elements: Matrix4c::identity() * c(0.25, 0.0),
        }
    }

    /// `p |psi+><psi+| + (1 - p) I/4`.
    pub fn werner(p: f64) -> Result<Self> {
        if !(-1.0 / 3.0..=1.0).contains(&p) {
            return Err(invalid("Werner weight in [-1/3, 1]"));
        }
        let bell = psi_plus();
        let m = bell * bell.adjoint() * c(p, 0.0) + Matrix4c::identity() * c((1.0 - p) / 4.0, 0.0);
        Self::new(hermitize(&m))
    }

    pub fn elements(&self) -> &Matrix4c {
        &self.elements
    }

    pub fn into_inner(self) -> Matrix4c {
        self.elements
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.elements).0
    }

    /// `U rho U†` for a unitary `U`.
    pub fn conjugated_by(&self, unitary: &Matrix4c) -> Result<Self> {
        Self::new(hermitize(&(unitary * self.elements * unitary.adjoint())))
    }
}

/// Traces the JSA over frequency. Only the {HV, VH} block is populated.
pub fn reduce_to_polarization(jsa: &JointSpectralAmplitude) -> Result<PolarizationDensityMatrix> {
    let grid = jsa.grid();
    let ws = trapezoid_weights(grid.signal_wavelengths());
    let wi = trapezoid_weights(grid.idler_wavelengths());
    let (fm, fp) = (jsa.f_minus(), jsa.f_plus());
    let mut minus = 0.0;
    let mut plus = 0.0;
    let mut cross = c(0.0, 0.0);
    for (j, wj) in ws.iter().enumerate() {
        for (k, wk) in wi.iter().enumerate() {
            let idx = jsa.index(j, k);
            let w = wj * wk;
            minus += w * fm[idx].norm_sqr();
            plus += w * fp[idx].norm_sqr();
            cross += fm[idx] * fp[idx].conj() * w;
        }
    }
    let total = minus + plus;
    if !(total > 0.0) {
        return Err(Error::DegenerateState("joint spectral amplitude has zero norm".into()));
    }
    let mut m = Matrix4c::zeros();
    m[(HV, HV)] = c(minus / total, 0.0);
    m[(VH, VH)] = c(plus / total, 0.0);
    m[(HV, VH)] = cross / total;
    m[(VH, HV)] = (cross / total).conj();
    PolarizationDensityMatrix::new(m)
}

fn spin_flip() -> Matrix4c {
    // sigma_y ⊗ sigma_y
    let mut y = Matrix4c::zeros();
    y[(0, 3)] = c(-1.0, 0.0);
    y[(1, 2)] = c(1.0, 0.0);
    y[(2, 1)] = c(1.0, 0.0);
    y[(3, 0)] = c(-1.0, 0.0);
    y
}

/// Eigenvalues below this are treated as exact zeros when factoring `rho`.
const RANK_TOL: f64 = 1e-13;

/// Two-qubit concurrence `max(0, l1 - l2 - l3 - l4)`, where `l` are the
/// square roots of the eigenvalues of `rho (Y⊗Y) rho* (Y⊗Y)`.
///
/// With `rho = W W†` they are the singular values of `W^T (Y⊗Y) W`, which
/// avoids square roots of near-zero eigenvalues and keeps rank-deficient
/// states accurate to rounding.
pub fn concurrence(rho: &PolarizationDensityMatrix) -> f64 {
    let (values, vectors) = hermitian_eigen(rho.elements());
    let kept: Vec<usize> = (0..4).filter(|&k| values[k] > RANK_TOL).collect();
    if kept.is_empty() {
        return 0.0;
    }
    let w = nalgebra::DMatrix::<Complex64>::from_fn(4, kept.len(), |r, col| {
        vectors[(r, kept[col])] * libm::sqrt(values[kept[col]])
    });
    let y = nalgebra::DMatrix::<Complex64>::from_fn(4, 4, |r, col| spin_flip()[(r, col)]);
    let tau = w.transpose() * y * &w;
    let mut l: Vec<f64> = tau.singular_values().iter().cloned().collect();
    l.resize(4, 0.0);
    l.sort_by(|a, b| b.total_cmp(a));
    (l[0] - l[1] - l[2] - l[3]).clamp(0.0, 1.0)
}

/// Concurrence of a raw matrix, validating it first.
pub fn concurrence_of(m: &Matrix4c) -> Result<f64> {
    Ok(concurrence(&PolarizationDensityMatrix::new(*m)?))
}

/// Overlap `<psi| rho |psi>` with a normalized pure target.
pub fn fidelity(rho: &PolarizationDensityMatrix, target: &Ket4) -> Result<f64> {
    if (target.norm_squared() - 1.0).abs() > 1e-6 {
        return Err(invalid("fidelity target must be normalized"));
    }
    let v = (target.adjoint() * rho.elements() * target)[(0, 0)];
    Ok(v.re.clamp(0.0, 1.0))
}

/// `tr(rho²)`.
pub fn purity(rho: &PolarizationDensityMatrix) -> f64 {
    let m = rho.elements();
    (m * m).trace().re
}

/// Half the trace norm of `a - b`.
pub fn trace_distance(a: &Matrix4c, b: &Matrix4c) -> f64 {
    let (values, _) = hermitian_eigen(&hermitize(&(a - b)));
    values.iter().map(|v| v.abs()).sum::<f64>() / 2.0
}

/// Random density matrix of the given rank from the Ginibre ensemble.
pub fn random_density_matrix<R: Rng + ?Sized>(rng: &mut R, rank: usize) -> PolarizationDensityMatrix {
    let rank = rank.clamp(1, 4);
    let mut g = nalgebra::DMatrix::<Complex64>::zeros(4, rank);
    for z in g.iter_mut() {
        *z = c(StandardNormal.sample(rng), StandardNormal.sample(rng));
    }
    let a = &g * g.adjoint();
    let m = Matrix4c::from_fn(|r, col| a[(r, col)]);
    PolarizationDensityMatrix::from_unnormalized(&m).expect("Ginibre matrices are positive")
}

/// Random 2x2 unitary (Haar measure up to phase).
pub fn random_qubit_unitary<R: Rng + ?Sized>(rng: &mut R) -> nalgebra::Matrix2<Complex64> {
    let mut q = [0.0f64; 4];
    for x in q.iter_mut() {
        *x = StandardNormal.sample(rng);
    }
    let n = libm::sqrt(q.iter().map(|x| x * x).sum::<f64>());
    let (a, b, cc, d) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
    nalgebra::Matrix2::new(c(a, b), c(cc, d), c(-cc, d), c(a, -b))
}

/// Kronecker product of two single-qubit operators (signal ⊗ idler).
pub fn kron2(a: &nalgebra::Matrix2<Complex64>, b: &nalgebra::Matrix2<Complex64>) -> Matrix4c {
    Matrix4c::from_fn(|r, col| a[(r / 2, col / 2)] * b[(r % 2, col % 2)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn bell_state_measures() {
        let rho = PolarizationDensityMatrix::pure(&psi_plus()).unwrap();
        assert!((concurrence(&rho) - 1.0).abs() < 1e-9);
        assert!((fidelity(&rho, &psi_plus()).unwrap() - 1.0).abs() < 1e-12);
        assert!((purity(&rho) - 1.0).abs() < 1e-12);
        assert!(fidelity(&rho, &psi_minus()).unwrap() < 1e-12);
    }

    #[test]
    fn maximally_mixed_measures() {
        let rho = PolarizationDensityMatrix::maximally_mixed();
        assert!(concurrence(&rho) < 1e-12);
        assert!((fidelity(&rho, &psi_plus()).unwrap() - 0.25).abs() < 1e-12);
        let hh = Ket4::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        assert!((fidelity(&rho, &hh).unwrap() - 0.25).abs() < 1e-12);
        assert!((purity(&rho) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn werner_measures_match_closed_forms() {
        let rho = PolarizationDensityMatrix::werner(0.8).unwrap();
        assert!((concurrence(&rho) - 0.70).abs() < 1e-9);
        let rho = PolarizationDensityMatrix::werner(0.9).unwrap();
        assert!((fidelity(&rho, &psi_plus()).unwrap() - 0.925).abs() < 1e-12);
        let rho = PolarizationDensityMatrix::werner(0.5).unwrap();
        assert!((purity(&rho) - 0.4375).abs() < 1e-12);
    }

    #[test]
    fn unnormalized_target_rejected() {
        let rho = PolarizationDensityMatrix::maximally_mixed();
        let t = psi_plus() * c(1.01, 0.0);
        assert!(matches!(fidelity(&rho, &t), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let mut m = Matrix4c::identity() * c(0.25, 0.0);
        m[(0, 1)] = c(0.1, 0.0);
        assert!(PolarizationDensityMatrix::new(m).is_err());
        let m = Matrix4c::identity() * c(0.3, 0.0);
        assert!(PolarizationDensityMatrix::new(m).is_err());
        let mut m = Matrix4c::zeros();
        m[(0, 0)] = c(1.1, 0.0);
        m[(1, 1)] = c(-0.1, 0.0);
        assert!(matches!(PolarizationDensityMatrix::new(m), Err(Error::InvalidState(_))));
        assert!(matches!(concurrence_of(&m), Err(Error::InvalidState(_))));
    }

    #[test]
    fn tiny_negative_eigenvalues_are_clipped() {
        let mut m = Matrix4c::zeros();
        m[(0, 0)] = c(1.0 + 5e-10, 0.0);
        m[(1, 1)] = c(-5e-10, 0.0);
        let rho = PolarizationDensityMatrix::new(m).unwrap();
        assert!(rho.eigenvalues()[0] >= -1e-15);
        assert!((rho.elements().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn concurrence_invariant_under_local_unitaries() {
        let mut rng = rng_from_seed(11);
        for rank in 1..=4 {
            let rho = random_density_matrix(&mut rng, rank);
            let before = concurrence(&rho);
            for _ in 0..5 {
                let u = kron2(&random_qubit_unitary(&mut rng), &random_qubit_unitary(&mut rng));
                let after = concurrence(&rho.conjugated_by(&u).unwrap());
                assert!((before - after).abs() < 1e-9, "{before} vs {after}");
            }
        }
    }

    #[test]
    fn trace_distance_basics() {
        let a = PolarizationDensityMatrix::pure(&psi_plus()).unwrap();
        let b = PolarizationDensityMatrix::pure(&psi_minus()).unwrap();
        assert!((trace_distance(a.elements(), b.elements()) - 1.0).abs() < 1e-12);
        assert!(trace_distance(a.elements(), a.elements()) < 1e-15);
    }
}
