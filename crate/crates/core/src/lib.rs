//! Physics and statistics core for a fiber-based, type-II, polarization-entangled
//! photon-pair source.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. All transcendental functions go through `libm`, so results are
//! bitwise reproducible across targets for a fixed seed.
//!
//! Modules:
//! - [`spectral`]: phase matching and the joint spectral amplitudes of the two
//!   polarization branches.
//! - [`filter`]: passband filters with raised-cosine edges and insertion loss.
//! - [`state`]: frequency-traced two-qubit polarization density matrices and
//!   entanglement measures.
//! - [`tomography`]: waveplate analyzers, simulated measurement records, linear
//!   inversion and maximum-likelihood reconstruction.
//! - [`counting`]: time-tagged detection, coincidence histograms, CAR and rate
//!   budgets.
//! - [`spectrometer`]: the dispersive-fiber single-photon spectrometer.
//! - [`source`]: the aggregated source configuration with its default profile.
//! - [`experiment`]: end-to-end spectrum, tomography and CAR simulations.
#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod counting;
mod error;
pub mod experiment;
pub mod filter;
pub mod rng;
pub mod source;
pub mod spectral;
pub mod spectrometer;
pub mod state;
pub mod tomography;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64;
