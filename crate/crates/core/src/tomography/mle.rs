//! Maximum-likelihood reconstruction.
//!
//! The unnormalized state is `A = T† T` with `T` upper triangular (real
//! diagonal, 16 real parameters), so every iterate is positive semidefinite.
//! The expected counts are `mu_k = s t_k tr(A M_k)` with the fixed scale
//! `s = sum n / sum t`, and the objective is the Poisson log-likelihood per
//! count `f = (1/N) sum (n_k ln mu_k - mu_k)`. With `G = (1/N) sum s t_k
//! (n_k / mu_k - 1) M_k` and `Y = T G`, the gradient with respect to the real
//! and imaginary parts of `T_ab` is `2 Re Y_ab` and `2 Im Y_ab`.
//!
//! Steps use a Barzilai–Borwein length followed by Armijo backtracking, so the
//! log-likelihood never decreases.

use alloc::vec::Vec;

use super::analyzer::measurement_operator;
use super::linear::linear_inversion;
use super::record::MeasurementRecord;
use crate::error::{Error, Result};
use crate::state::{
    concurrence, fidelity, hermitize, psi_plus, purity, Ket4, Matrix4c, PolarizationDensityMatrix,
};
use crate::Complex64;

use super::linear::LinearEstimate;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    /// Stop when the gradient norm falls below this. States on the boundary
    /// of the PSD cone usually exit earlier, once the log-likelihood gains
    /// less than `STALL_NATS` over `STALL_WINDOW` steps.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Keep the log-likelihood of every accepted iterate.
    pub record_trace: bool,
    /// Fidelity target.
    pub target: Ket4,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 10_000,
            record_trace: false,
            target: psi_plus(),
        }
    }
}

/// A value with an optional one-sigma uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Estimate {
    pub value: f64,
    pub stderr: Option<f64>,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, stderr: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TomographyResult {
    /// `None` when linear inversion was not possible for the record.
    pub rho_linear: Option<LinearEstimate>,
    pub rho_mle: PolarizationDensityMatrix,
    pub concurrence: Estimate,
    pub fidelity: Estimate,
    pub purity: f64,
    /// Poisson log-likelihood of `rho_mle` with the count scale profiled out.
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Per-iteration log-likelihood when requested.
    pub trace: Vec<f64>,
}

const MIX_EPSILON: f64 = 1e-4;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
/// Likelihood-ratio scale far below anything statistically visible.
const STALL_NATS: f64 = 1e-3;
const STALL_WINDOW: usize = 50;

/// Flattened measurement data.
struct Problem {
    operators: Vec<Matrix4c>,
    weights: Vec<f64>,
    counts: Vec<f64>,
    total: f64,
}

impl Problem {
    fn new(record: &MeasurementRecord) -> Result<Self> {
        if record.is_empty() {
            return Err(Error::DegenerateData("record has no settings".into()));
        }
        let total = record.total_counts();
        if !(total > 0.0) {
            return Err(Error::DegenerateData("all coincidence counts are zero".into()));
        }
        let time: f64 = record.acquisition_time().iter().sum();
        let scale = total / time;
        Ok(Self {
            operators: record.settings().iter().map(measurement_operator).collect(),
            weights: record.acquisition_time().iter().map(|t| scale * t).collect(),
            counts: record.counts().to_vec(),
            total,
        })
    }

    fn means(&self, a: &Matrix4c) -> Vec<f64> {
        self.operators
            .iter()
            .zip(&self.weights)
            .map(|(m, w)| w * trace_product(a, m))
            .collect()
    }

    /// Per-count log-likelihood of an unnormalized state.
    fn objective(&self, a: &Matrix4c) -> f64 {
        let mut sum = 0.0;
        for (mu, &n) in self.means(a).iter().zip(&self.counts) {
            if n > 0.0 {
                if *mu <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                sum += n * libm::log(*mu);
            }
            sum -= mu;
        }
        sum / self.total
    }

    /// Log-likelihood of a normalized state with the best overall scale.
    fn profile_log_likelihood(&self, rho: &Matrix4c) -> f64 {
        let expected: f64 = self.means(rho).iter().sum();
        if !(expected > 0.0) {
            return f64::NEG_INFINITY;
        }
        let scale = self.total / expected;
        self.objective(&(rho * Complex64::new(scale, 0.0))) * self.total
    }

    fn gradient_matrix(&self, a: &Matrix4c) -> Matrix4c {
        let mut g = Matrix4c::zeros();
        for ((m, &w), (&n, mu)) in self.operators.iter().zip(&self.weights).zip(self.counts.iter().zip(self.means(a))) {
            let ratio = if n > 0.0 { n / mu } else { 0.0 };
            g += m * Complex64::new(w * (ratio - 1.0) / self.total, 0.0);
        }
        g
    }
}

fn trace_product(a: &Matrix4c, b: &Matrix4c) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let (x, y) = (a[(i, j)], b[(j, i)]);
            s += x.re * y.re - x.im * y.im;
        }
    }
    s
}

const PARAMS: usize = 16;

/// Upper-triangular entries in row order: diagonal real, off-diagonal complex.
fn unpack(x: &[f64; PARAMS]) -> Matrix4c {
    let mut t = Matrix4c::zeros();
    let mut k = 0;
    for a in 0..4 {
        t[(a, a)] = Complex64::new(x[k], 0.0);
        k += 1;
        for b in a + 1..4 {
            t[(a, b)] = Complex64::new(x[k], x[k + 1]);
            k += 2;
        }
    }
    t
}

fn pack(t: &Matrix4c) -> [f64; PARAMS] {
    let mut x = [0.0; PARAMS];
    let mut k = 0;
    for a in 0..4 {
        x[k] = t[(a, a)].re;
        k += 1;
        for b in a + 1..4 {
            x[k] = t[(a, b)].re;
            x[k + 1] = t[(a, b)].im;
            k += 2;
        }
    }
    x
}

fn gram(t: &Matrix4c) -> Matrix4c {
    t.adjoint() * t
}

fn gradient(problem: &Problem, t: &Matrix4c) -> [f64; PARAMS] {
    let y = t * problem.gradient_matrix(&gram(t));
    let mut g = [0.0; PARAMS];
    let mut k = 0;
    for a in 0..4 {
        g[k] = 2.0 * y[(a, a)].re;
        k += 1;
        for b in a + 1..4 {
            g[k] = 2.0 * y[(a, b)].re;
            g[k + 1] = 2.0 * y[(a, b)].im;
            k += 2;
        }
    }
    g
}

fn dot(a: &[f64; PARAMS], b: &[f64; PARAMS]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Upper-triangular `T` with `T† T = A` for a positive definite `A`.
fn cholesky_factor(a: &Matrix4c) -> Option<Matrix4c> {
    nalgebra::Cholesky::new(*a).map(|c| c.l().adjoint())
}

fn starting_point(problem: &Problem, rho: &Matrix4c) -> Matrix4c {
    let mixed = rho * Complex64::new(1.0 - MIX_EPSILON, 0.0) + Matrix4c::identity() * Complex64::new(MIX_EPSILON / 4.0, 0.0);
    let expected: f64 = problem.means(&mixed).iter().sum();
    let scale = if expected > 0.0 { problem.total / expected } else { 1.0 };
    let a = hermitize(&(mixed * Complex64::new(scale, 0.0)));
    cholesky_factor(&a).unwrap_or_else(|| Matrix4c::identity() * Complex64::new(libm::sqrt(scale / 4.0), 0.0))
}

fn normalized(a: &Matrix4c) -> Result<PolarizationDensityMatrix> {
    PolarizationDensityMatrix::from_unnormalized(a)
}

/// Profile log-likelihood of a density matrix for a record.
pub fn log_likelihood_of_state(record: &MeasurementRecord, rho: &PolarizationDensityMatrix) -> Result<f64> {
    Ok(Problem::new(record)?.profile_log_likelihood(rho.elements()))
}

pub fn mle_reconstruct(record: &MeasurementRecord, initial: Option<&PolarizationDensityMatrix>) -> Result<TomographyResult> {
    mle_reconstruct_with(record, initial, &MleOptions::default())
}

/// Maximum-likelihood reconstruction starting from `initial`, or from the
/// PSD-projected linear inversion when none is given.
pub fn mle_reconstruct_with(
    record: &MeasurementRecord,
    initial: Option<&PolarizationDensityMatrix>,
    options: &MleOptions,
) -> Result<TomographyResult> {
    let problem = Problem::new(record)?;
    let rho_linear = linear_inversion(record).ok();
    let linear_start = rho_linear
        .as_ref()
        .and_then(|l| l.projected().ok())
        .unwrap_or_else(PolarizationDensityMatrix::maximally_mixed);
    let start = initial.cloned().unwrap_or_else(|| linear_start.clone());

    let mut t = starting_point(&problem, start.elements());
    let mut x = pack(&t);
    let mut f = problem.objective(&gram(&t));
    let mut g = gradient(&problem, &t);
    let mut step = 1.0;
    let mut trace = Vec::new();
    if options.record_trace {
        trace.push(f * problem.total);
    }
    let mut iterations = 0;
    let mut converged = false;
    // objective values of the last STALL_WINDOW iterates, oldest first
    let mut window = alloc::collections::VecDeque::with_capacity(STALL_WINDOW + 1);
    window.push_back(f);
    while iterations < options.max_iterations {
        let gnorm2 = dot(&g, &g);
        if libm::sqrt(gnorm2) < options.tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        let mut alpha = step;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let mut trial = x;
            for (xi, gi) in trial.iter_mut().zip(&g) {
                *xi += alpha * gi;
            }
            let t_trial = unpack(&trial);
            let f_trial = problem.objective(&gram(&t_trial));
            if f_trial.is_finite() && f_trial >= f + ARMIJO * alpha * gnorm2 {
                accepted = Some((trial, t_trial, f_trial));
                break;
            }
            alpha *= 0.5;
        }
        let Some((x_new, t_new, f_new)) = accepted else {
            // no ascent direction left at machine precision
            converged = true;
            break;
        };
        let g_new = gradient(&problem, &t_new);
        // Barzilai–Borwein length for the next step (ascent form)
        let s: [f64; PARAMS] = core::array::from_fn(|i| x_new[i] - x[i]);
        let y: [f64; PARAMS] = core::array::from_fn(|i| g[i] - g_new[i]);
        let sy = dot(&s, &y);
        step = if sy > 0.0 { dot(&s, &s) / sy } else { 2.0 * alpha };
        step = step.clamp(1e-12, 1e6);
        x = x_new;
        t = t_new;
        f = f_new;
        g = g_new;
        if options.record_trace {
            trace.push(f * problem.total);
        }
        window.push_back(f);
        if window.len() > STALL_WINDOW {
            let oldest = window.pop_front().unwrap_or(f);
            if (f - oldest) * problem.total < STALL_NATS {
                converged = true;
                break;
            }
        }
    }

    let candidate = normalized(&gram(&t))?;
    let ll_candidate = problem.profile_log_likelihood(candidate.elements());
    let ll_start = problem.profile_log_likelihood(linear_start.elements());
    let (rho_mle, log_likelihood) = if ll_candidate >= ll_start {
        (candidate, ll_candidate)
    } else {
        (linear_start, ll_start)
    };
    Ok(TomographyResult {
        rho_linear,
        concurrence: Estimate::exact(concurrence(&rho_mle)),
        fidelity: Estimate::exact(fidelity(&rho_mle, &options.target)?),
        purity: purity(&rho_mle),
        rho_mle,
        log_likelihood,
        iterations,
        converged,
        trace,
    })
}
