//! Absorption-filtered second-order moments.
//!
//! A filtered moment of m creation and n annihilation operators is the
//! (m+n)-fold frequency integral of the source correlator's spectral density
//! weighted by √a(ω_j) per operator. For a stationary source the frequency
//! integrals collapse onto one variable, which gives the three closed forms
//! implemented here (m + n ≤ 2). The non-decaying part of each correlator
//! turns into δ-functions in frequency and is evaluated exactly through a(0).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qrt::{CorrelationKind, CorrelationTrace};
use crate::spectra::{AbsorptionModel, OmegaGrid, SpectraError, Spectrum};
use crate::transform::{one_sided_fft, Rule};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error("filtered moments are implemented for m + n <= 2 only (requested m = {creation}, n = {annihilation})")]
    UnsupportedOrder { creation: u32, annihilation: u32 },
    #[error("anomalous moment needs an ⟨A(τ)A(0)⟩ correlator, got {0:?}")]
    WrongKind(CorrelationKind),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
}

/// Moments of the bare exciton field (x) and of the filtered field (q).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub mean_x: Complex64,
    pub mean_q: Complex64,
    pub intensity_x: f64,
    pub intensity_q: f64,
    pub anom_x: Complex64,
    pub anom_q: Complex64,
}

/// ⟨A⟩_q = √a(0) ⟨A⟩_x: a stationary mean only samples the laser frequency.
pub fn coherent_moment_q(mean_x: Complex64, m: &AbsorptionModel) -> Complex64 {
    mean_x * m.absorption(0.0).sqrt()
}

/// ⟨A†A⟩_q = ∫ dω a(ω) S_x(ω), with the Rayleigh line weighted by a(0).
pub fn intensity_q(sx: &Spectrum, m: &AbsorptionModel) -> f64 {
    let weighted: Vec<f64> = sx.grid.iter().zip(&sx.density).map(|(w, s)| m.absorption(w) * s).collect();
    sx.grid.trapezoid(&weighted) + m.absorption(0.0) * sx.delta_weight
}

/// FFT length used for the anomalous-moment quadrature of a trace.
pub fn band_len(trace_len: usize) -> usize {
    (2 * trace_len).next_power_of_two()
}

/// ⟨A²⟩_q = a(0)⟨A⟩_x² + (1/π) ∫ dω √(a(ω)a(−ω)) ∫₀^∞ dτ cos(ωτ) [C₂(τ) − ⟨A⟩_x²].
///
/// The constant high-frequency limit w∞ of the weight contributes exactly
/// w∞·(C₂(0) − ⟨A⟩_x²). The decaying remainder multiplies a cosine transform
/// taken by FFT with Gregory end weights and is summed over the full Nyquist
/// band of the trace.
pub fn anomalous_moment_q(c2: &CorrelationTrace, m: &AbsorptionModel) -> Result<Complex64, FilterError> {
    if c2.kind != CorrelationKind::AA {
        return Err(FilterError::WrongKind(c2.kind));
    }
    let dtau = c2.grid.step();
    let k = band_len(c2.fluct.len());
    let grid = OmegaGrid::full_band(dtau, k)?;
    // start the transform at the band edge so index i is ω_i = grid.omega(i)
    let f = one_sided_fft(&c2.fluct, dtau, grid.start, k, Rule::Gregory);
    let w_inf = m.asymptotic_weight();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..k {
        let w = grid.omega(i);
        // F(−ω_i) sits at the mirrored index on the periodic band
        let mirror = (k - i) % k;
        let cosine = 0.5 * (f[i] + f[mirror]);
        acc += cosine * (m.mirrored_weight(w) - w_inf);
    }
    let fluct_part = acc * grid.step / PI + c2.fluct[0] * w_inf;
    Ok(c2.asymptote * m.absorption(0.0) + fluct_part)
}

/// Numbers of creation (m) and annihilation (n) operators in a moment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MomentOrder {
    pub creation: u32,
    pub annihilation: u32,
}

impl MomentOrder {
    pub const MEAN: Self = Self { creation: 0, annihilation: 1 };
    pub const INTENSITY: Self = Self { creation: 1, annihilation: 1 };
    pub const ANOMALOUS: Self = Self { creation: 0, annihilation: 2 };

    pub fn total(&self) -> u32 {
        self.creation + self.annihilation
    }
}

/// Source data of the exciton field the filtered moments are built from.
#[derive(Debug, Clone, Copy)]
pub struct FilterSources<'a> {
    pub mean_x: Complex64,
    pub spectrum_x: &'a Spectrum,
    pub c2: &'a CorrelationTrace,
}

/// Filtered steady-state moment ⟨A†^m A^n⟩_q for m + n ≤ 2.
pub fn filtered_moment(order: MomentOrder, src: &FilterSources, m: &AbsorptionModel) -> Result<Complex64, FilterError> {
    match (order.creation, order.annihilation) {
        (0, 0) => Ok(Complex64::new(1.0, 0.0)),
        (0, 1) => Ok(coherent_moment_q(src.mean_x, m)),
        (1, 0) => Ok(coherent_moment_q(src.mean_x, m).conj()),
        (1, 1) => Ok(Complex64::from(intensity_q(src.spectrum_x, m))),
        (0, 2) => anomalous_moment_q(src.c2, m),
        (2, 0) => Ok(anomalous_moment_q(src.c2, m)?.conj()),
        (creation, annihilation) => Err(FilterError::UnsupportedOrder { creation, annihilation }),
    }
}
