//! Squeezing and nonclassicality witnesses built from second-order moments.
//!
//! Variances are in units of |ζ|², the squared coupling between the source
//! field and the exciton operator.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filter::MomentSet;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObservableError {
    #[error("intensity must be non-negative, got {0}")]
    NegativeIntensity(f64),
    #[error("phase of {which} undefined: modulus {modulus:.3e} below 1e-12")]
    UndefinedPhase { which: &'static str, modulus: f64 },
}

/// Phase-optimized normally ordered variance, 2(⟨A†A⟩ − |⟨A⟩|² − |⟨A⟩² − ⟨A²⟩|).
/// Negative values certify squeezing.
pub fn squeezing_variance(mean: Complex64, intensity: f64, anom: Complex64) -> f64 {
    2.0 * (intensity - mean.norm_sqr() - (mean * mean - anom).norm())
}

/// ⟨A†A⟩ − |⟨A²⟩|; negative values certify nonclassicality.
pub fn anomalous_nonclassicality(intensity: f64, anom: Complex64) -> f64 {
    intensity - anom.norm()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coherence {
    pub value: f64,
    /// Raw ratio exceeded 1 + 1e-10, which signals inconsistent moments.
    pub clipped: bool,
}

/// |⟨A⟩|²/⟨A†A⟩, taken as 1 for the vacuum.
pub fn degree_of_coherence(mean: Complex64, intensity: f64) -> Result<Coherence, ObservableError> {
    if intensity < 0.0 || intensity.is_nan() {
        return Err(ObservableError::NegativeIntensity(intensity));
    }
    if intensity == 0.0 {
        return Ok(Coherence { value: 1.0, clipped: mean.norm_sqr() > 0.0 });
    }
    let raw = mean.norm_sqr() / intensity;
    if raw > 1.0 + 1e-10 {
        Ok(Coherence { value: 1.0, clipped: true })
    } else {
        Ok(Coherence { value: raw, clipped: false })
    }
}

/// Maps an angle onto (−π, π].
pub fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub mean_sq: f64,
    pub anom_x: f64,
    pub anom_q: f64,
    /// |wrap(arg⟨A²⟩_x − arg⟨A⟩²)|
    pub gap_x: f64,
    /// |wrap(arg⟨A²⟩_q − arg⟨A⟩²)|
    pub gap_q: f64,
}

pub fn phase_report(mean: Complex64, anom_x: Complex64, anom_q: Complex64) -> Result<PhaseReport, ObservableError> {
    for (which, z) in [("<A>", mean), ("<A^2>_x", anom_x), ("<A^2>_q", anom_q)] {
        if z.norm() <= 1e-12 {
            return Err(ObservableError::UndefinedPhase { which, modulus: z.norm() });
        }
    }
    let mean_sq = (mean * mean).arg();
    let (ax, aq) = (anom_x.arg(), anom_q.arg());
    Ok(PhaseReport {
        mean_sq,
        anom_x: ax,
        anom_q: aq,
        gap_x: wrap_phase(ax - mean_sq).abs(),
        gap_q: wrap_phase(aq - mean_sq).abs(),
    })
}

/// One sweep point: everything plotted against pump power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableRow {
    pub p_l: f64,
    pub var_x: f64,
    pub var_q: f64,
    pub ncl_x: f64,
    pub ncl_q: f64,
    pub dcoh_x: f64,
    pub dcoh_q: f64,
    pub phase_mean_sq: f64,
    pub phase_anom_x: f64,
    pub phase_anom_q: f64,
    pub gap_x: f64,
    pub gap_q: f64,
}

impl ObservableRow {
    pub fn from_moments(p_l: f64, m: &MomentSet) -> Result<Self, ObservableError> {
        let phases = phase_report(m.mean_x, m.anom_x, m.anom_q).unwrap_or(PhaseReport {
            mean_sq: f64::NAN,
            anom_x: f64::NAN,
            anom_q: f64::NAN,
            gap_x: f64::NAN,
            gap_q: f64::NAN,
        });
        Ok(Self {
            p_l,
            var_x: squeezing_variance(m.mean_x, m.intensity_x, m.anom_x),
            var_q: squeezing_variance(m.mean_q, m.intensity_q, m.anom_q),
            ncl_x: anomalous_nonclassicality(m.intensity_x, m.anom_x),
            ncl_q: anomalous_nonclassicality(m.intensity_q, m.anom_q),
            dcoh_x: degree_of_coherence(m.mean_x, m.intensity_x)?.value,
            dcoh_q: degree_of_coherence(m.mean_q, m.intensity_q)?.value,
            phase_mean_sq: phases.mean_sq,
            phase_anom_x: phases.anom_x,
            phase_anom_q: phases.anom_q,
            gap_x: phases.gap_x,
            gap_q: phases.gap_q,
        })
    }
}
