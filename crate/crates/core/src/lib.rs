//! Resonance fluorescence of a driven, damped Kerr exciton mode and the
//! spectral filtering of its second-order field moments by the absorption
//! line of the host quantum well.
//!
//! The pipeline runs bottom-up: [`model`] parameters feed the Fock-space
//! Liouvillian in [`fock`], [`qrt`] propagates two-time correlators,
//! [`spectra`] turns them into emission and absorption spectra, [`filter`]
//! produces the absorption-filtered moments and [`observables`] evaluates
//! squeezing and nonclassicality witnesses. [`pipeline`] strings the steps
//! together for single points and pump-power sweeps.

pub mod expm;
pub mod filter;
pub mod fock;
pub mod model;
pub mod observables;
pub mod pipeline;
pub mod qrt;
pub mod spectra;
pub mod spline;
mod transform;

pub use num_complex::Complex64;
