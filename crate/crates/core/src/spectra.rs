//! Susceptibility, absorption line, emission spectra and detector response.
//!
//! Frequencies are rotating-frame detunings from the laser (ω = 0 is ω_L),
//! in meV. A [`Spectrum`] carries the coherent Rayleigh line as an exact
//! weight at ω = 0 next to the sampled incoherent density.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::PhysParams;
use crate::qrt::{CorrelationKind, CorrelationTrace};
use crate::transform::{commensurate_len, one_sided_direct, one_sided_fft, Rule};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectraError {
    #[error("thin-sheet coupling κ·f = {kf} must stay below Γ/2 = {half_gamma} for non-negative absorption")]
    NegativeAbsorption { kf: f64, half_gamma: f64 },
    #[error("invalid absorption parameter {name} = {value}")]
    BadModel { name: &'static str, value: f64 },
    #[error("invalid ω grid (start {start}, step {step}, len {len})")]
    BadGrid { start: f64, step: f64, len: usize },
    #[error("emission spectrum expects an ⟨A†A⟩ correlator, got {0:?}")]
    WrongKind(CorrelationKind),
    #[error(
        "spectral leakage: ∫S dω + Rayleigh weight = {got:.6e} but ⟨A†A⟩ = {want:.6e}; increase τ_max or the ω span"
    )]
    Leakage { got: f64, want: f64 },
    #[error("detector width must be positive and finite, got {0}")]
    BadDetectorWidth(f64),
    #[error("grid spacing {step:.3e} meV too coarse for detector width {width:.3e} meV (need < width/4)")]
    TooCoarse { step: f64, width: f64 },
}

/// Uniform frequency grid ω_i = start + i·step, i = 0..len.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl OmegaGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self, SpectraError> {
        if !start.is_finite() || !(step.is_finite() && step > 0.0) || len < 2 {
            return Err(SpectraError::BadGrid { start, step, len });
        }
        Ok(Self { start, step, len })
    }

    /// Grid over [lo, hi] with at least `min_points` points whose spacing is
    /// 2π/(K·dτ) for a power-of-two K, so the emission spectrum can be taken
    /// by a single FFT.
    pub fn commensurate_window(lo: f64, hi: f64, min_points: usize, dtau: f64) -> Result<Self, SpectraError> {
        if !(hi > lo) || min_points < 2 {
            return Err(SpectraError::BadGrid { start: lo, step: hi - lo, len: min_points });
        }
        let want = (hi - lo) / (min_points - 1) as f64;
        let k = (2.0 * PI / (want * dtau)).ceil() as usize;
        let k = k.next_power_of_two();
        let step = 2.0 * PI / (k as f64 * dtau);
        let len = ((hi - lo) / step).floor() as usize + 1;
        Self::new(lo, step, len)
    }

    /// The complete Nyquist band [-π/dτ, π/dτ] of a τ grid, sampled with
    /// `n_fft` intervals. The last point repeats the first by periodicity, so
    /// the trapezoidal rule on this grid is the periodic Riemann sum.
    pub fn full_band(dtau: f64, n_fft: usize) -> Result<Self, SpectraError> {
        let step = 2.0 * PI / (n_fft as f64 * dtau);
        Self::new(-((n_fft / 2) as f64) * step, step, n_fft + 1)
    }

    pub fn omega(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.omega(self.len - 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |i| self.omega(i))
    }

    pub fn trapezoid(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len);
        let inner: f64 = values[1..values.len() - 1].iter().sum();
        self.step * (inner + 0.5 * (values[0] + values[values.len() - 1]))
    }

    /// Whether this is the full Nyquist band of a trace sampled at `dtau`.
    pub fn is_full_band(&self, dtau: f64) -> bool {
        match commensurate_len(self.step, dtau) {
            Some(k) => self.len == k + 1 && (self.start + (k / 2) as f64 * self.step).abs() <= 1e-9 * self.step,
            None => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub grid: OmegaGrid,
    /// Incoherent spectral density, meV⁻¹.
    pub density: Vec<f64>,
    /// Weight of the coherent line at ω = 0.
    pub delta_weight: f64,
    /// Number of density samples below -1e-10 that were clipped to zero.
    pub clipped: usize,
}

impl Spectrum {
    pub fn integral(&self) -> f64 {
        self.grid.trapezoid(&self.density) + self.delta_weight
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AbsorptionMode {
    /// Thin oscillator sheet with r = iκχ and t = 1 + r.
    ThinSheet { kappa: f64 },
    /// Lorentzian line with a prescribed peak.
    Lorentzian { a_peak: f64 },
    /// Frequency-independent absorption, the degenerate filter.
    Constant { value: f64 },
}

/// Absorption line bound to the resonance (δ, Γ, f) of one parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionModel {
    pub mode: AbsorptionMode,
    pub delta: f64,
    pub gamma: f64,
    pub f: f64,
}

impl AbsorptionModel {
    pub fn thin_sheet(p: &PhysParams, kappa: f64) -> Result<Self, SpectraError> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(SpectraError::BadModel { name: "kappa", value: kappa });
        }
        let kf = kappa * p.f;
        if kf >= 0.5 * p.gamma {
            return Err(SpectraError::NegativeAbsorption { kf, half_gamma: 0.5 * p.gamma });
        }
        Ok(Self::bind(AbsorptionMode::ThinSheet { kappa }, p))
    }

    /// κ = Γ/(4f): the thin sheet at its maximal peak absorption of 1/2.
    pub fn default_for(p: &PhysParams) -> Self {
        Self::bind(AbsorptionMode::ThinSheet { kappa: p.gamma / (4.0 * p.f) }, p)
    }

    pub fn lorentzian(p: &PhysParams, a_peak: f64) -> Result<Self, SpectraError> {
        if !(a_peak > 0.0 && a_peak <= 1.0) {
            return Err(SpectraError::BadModel { name: "a_peak", value: a_peak });
        }
        Ok(Self::bind(AbsorptionMode::Lorentzian { a_peak }, p))
    }

    pub fn constant(p: &PhysParams, value: f64) -> Result<Self, SpectraError> {
        if !(0.0..=1.0).contains(&value) {
            return Err(SpectraError::BadModel { name: "value", value });
        }
        Ok(Self::bind(AbsorptionMode::Constant { value }, p))
    }

    fn bind(mode: AbsorptionMode, p: &PhysParams) -> Self {
        Self { mode, delta: p.delta, gamma: p.gamma, f: p.f }
    }

    fn chi(&self, omega: f64) -> Complex64 {
        self.f / Complex64::new(omega - self.delta, -0.5 * self.gamma)
    }

    /// (r, t) of the thin sheet; `None` for the other modes.
    pub fn reflection_transmission(&self, omega: f64) -> Option<(Complex64, Complex64)> {
        match self.mode {
            AbsorptionMode::ThinSheet { kappa } => {
                let r = Complex64::i() * kappa * self.chi(omega);
                Some((r, 1.0 + r))
            }
            _ => None,
        }
    }

    pub fn absorption(&self, omega: f64) -> f64 {
        let hw = 0.5 * self.gamma;
        let x = omega - self.delta;
        match self.mode {
            AbsorptionMode::ThinSheet { kappa } => {
                let kf = kappa * self.f;
                kf * (self.gamma - 2.0 * kf) / (x * x + hw * hw)
            }
            AbsorptionMode::Lorentzian { a_peak } => a_peak * hw * hw / (x * x + hw * hw),
            AbsorptionMode::Constant { value } => value,
        }
    }

    /// √(a(ω) a(−ω)), the weight pairing frequencies mirrored about the laser.
    pub fn mirrored_weight(&self, omega: f64) -> f64 {
        (self.absorption(omega) * self.absorption(-omega)).sqrt()
    }

    /// lim_{|ω|→∞} √(a(ω) a(−ω)).
    pub fn asymptotic_weight(&self) -> f64 {
        match self.mode {
            AbsorptionMode::Constant { value } => value,
            _ => 0.0,
        }
    }

    /// Peak value max_ω a(ω).
    pub fn peak(&self) -> f64 {
        self.absorption(self.delta)
    }
}

/// χ(ω) = f / (ω − δ − iΓ/2).
pub fn susceptibility(omega: f64, p: &PhysParams) -> Complex64 {
    p.f / Complex64::new(omega - p.delta, -0.5 * p.gamma)
}

pub fn absorption(omega: f64, m: &AbsorptionModel) -> f64 {
    m.absorption(omega)
}

/// S(ω) = (1/π) Re ∫₀^∞ dτ e^{iωτ} [C₁(τ) − C₁(∞)], plus the Rayleigh weight
/// |⟨A⟩|² at ω = 0.
///
/// Commensurate grids (see [`OmegaGrid::commensurate_window`],
/// [`OmegaGrid::full_band`]) go through one FFT; other grids are summed
/// directly. On the full band the normalization against ⟨A†A⟩ is verified.
pub fn emission_spectrum(c1: &CorrelationTrace, grid: &OmegaGrid) -> Result<Spectrum, SpectraError> {
    if c1.kind != CorrelationKind::AdagA {
        return Err(SpectraError::WrongKind(c1.kind));
    }
    let dtau = c1.grid.step();
    let transform = match commensurate_len(grid.step, dtau) {
        Some(k) if k >= c1.fluct.len() => {
            let full = one_sided_fft(&c1.fluct, dtau, grid.start, k, Rule::Trapezoid);
            (0..grid.len).map(|i| full[i % k]).collect()
        }
        _ => one_sided_direct(&c1.fluct, dtau, grid.iter()),
    };
    let mut clipped = 0;
    let density = transform
        .iter()
        .map(|z| {
            let s = z.re / PI;
            if s < -1e-10 {
                clipped += 1;
                0.0
            } else {
                s
            }
        })
        .collect();
    let spectrum = Spectrum { grid: *grid, density, delta_weight: c1.asymptote.re, clipped };
    if grid.is_full_band(dtau) {
        let want = c1.values[0].re;
        let got = spectrum.integral();
        if (got - want).abs() > 1e-4 * want.abs() + 1e-14 {
            return Err(SpectraError::Leakage { got, want });
        }
    }
    Ok(spectrum)
}

/// S_q(ω) = a(ω) S_x(ω); the Rayleigh line is scaled by a(0).
pub fn qw_spectrum(sx: &Spectrum, m: &AbsorptionModel) -> Spectrum {
    let density = sx.grid.iter().zip(&sx.density).map(|(w, s)| m.absorption(w) * s).collect();
    Spectrum { grid: sx.grid, density, delta_weight: m.absorption(0.0) * sx.delta_weight, clipped: sx.clipped }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorShape {
    Lorentzian,
    Gaussian,
}

impl DetectorShape {
    /// Unnormalized line shape at offset x for full width `width`.
    fn profile(self, x: f64, width: f64) -> f64 {
        let hw = 0.5 * width;
        match self {
            DetectorShape::Lorentzian => hw / PI / (x * x + hw * hw),
            DetectorShape::Gaussian => {
                let sigma = width / (2.0 * (2.0 * 2f64.ln()).sqrt());
                (-0.5 * (x / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt())
            }
        }
    }
}

/// Convolves with the detector line of full width `width` (HWHM width/2).
///
/// The convolution is circular on the grid and the kernel is normalized to
/// unit discrete area, so the total integral is preserved exactly; the
/// Rayleigh weight is spread into the density and the output carries none.
pub fn detector_convolve(s: &Spectrum, width: f64, shape: DetectorShape) -> Result<Spectrum, SpectraError> {
    if !(width.is_finite() && width > 0.0) {
        return Err(SpectraError::BadDetectorWidth(width));
    }
    let grid = s.grid;
    if grid.step >= width / 4.0 {
        return Err(SpectraError::TooCoarse { step: grid.step, width });
    }
    let n = grid.len;
    let period = n as f64 * grid.step;
    let wrap = |x: f64| x - period * (x / period).round();

    let mut kernel: Vec<Complex64> = (0..n)
        .map(|j| Complex64::from(shape.profile(wrap(j as f64 * grid.step), width)))
        .collect();
    let ksum: f64 = kernel.iter().map(|z| z.re).sum::<f64>() * grid.step;
    for k in &mut kernel {
        *k /= ksum;
    }

    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut data: Vec<Complex64> = s.density.iter().map(|&d| Complex64::from(d)).collect();
    fwd.process(&mut data);
    fwd.process(&mut kernel);
    for (d, k) in data.iter_mut().zip(&kernel) {
        *d *= k * grid.step / n as f64;
    }
    inv.process(&mut data);

    let mut density: Vec<f64> = data.iter().map(|z| z.re).collect();
    if s.delta_weight != 0.0 {
        let line: Vec<f64> = grid.iter().map(|w| shape.profile(wrap(w), width)).collect();
        let area: f64 = line.iter().sum::<f64>() * grid.step;
        for (d, l) in density.iter_mut().zip(&line) {
            *d += s.delta_weight * l / area;
        }
    }
    Ok(Spectrum { grid, density, delta_weight: 0.0, clipped: s.clipped })
}
