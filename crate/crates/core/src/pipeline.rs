//! End-to-end evaluation of single parameter sets and pump-power sweeps.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filter::{anomalous_moment_q, band_len, coherent_moment_q, intensity_q, FilterError, MomentSet};
use crate::fock::{annihilation, build_liouvillian, choose_truncation, steady_moments, steady_state, FockError};
use crate::model::{ModelError, ParamInterpolator, ParamTable, PhysParams};
use crate::observables::{ObservableError, ObservableRow};
use crate::qrt::{correlator_pair, CorrelationTrace, Propagator, QrtError, TauGrid};
use crate::spectra::{emission_spectrum, AbsorptionModel, OmegaGrid, SpectraError, Spectrum};
use crate::spline::NaturalCubicSpline;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("model: {0}")]
    Model(#[from] ModelError),
    #[error("fock: {0}")]
    Fock(#[from] FockError),
    #[error("qrt: {0}")]
    Qrt(#[from] QrtError),
    #[error("spectra: {0}")]
    Spectra(#[from] SpectraError),
    #[error("filter: {0}")]
    Filter(#[from] FilterError),
    #[error("observables: {0}")]
    Observables(#[from] ObservableError),
    #[error("sweep point P_L = {p_l} µW failed: {source}")]
    SweepPoint {
        p_l: f64,
        #[source]
        source: Box<PipelineError>,
    },
    #[error("invalid sweep range [{min}, {max}] with step {step}")]
    BadRange { min: f64, max: f64, step: f64 },
}

/// Numerical knobs. Γ-relative fields are multiplied by the Γ of each point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Numerics {
    /// Fixed Fock truncation N; chosen adaptively when absent.
    pub truncation: Option<usize>,
    pub truncation_tol: f64,
    /// τ_max in units of 1/Γ.
    pub tau_max_gammas: f64,
    /// Upper bound on dτ in units of 1/Γ.
    pub dtau_gammas: f64,
    /// Half-width of the spectral window around δ, in units of Γ.
    pub window_gammas: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self { truncation: None, truncation_tol: 1e-10, tau_max_gammas: 40.0, dtau_gammas: 0.05, window_gammas: 12.0 }
    }
}

impl Numerics {
    pub fn tau_max(&self, p: &PhysParams) -> f64 {
        self.tau_max_gammas / p.gamma
    }

    /// dτ = min(dτ_Γ/Γ, 2π/(40·ω_span)) with ω_span the full window width.
    pub fn dtau(&self, p: &PhysParams) -> f64 {
        let span = 2.0 * self.window_gammas * p.gamma;
        (self.dtau_gammas / p.gamma).min(2.0 * std::f64::consts::PI / (40.0 * span))
    }

    pub fn tau_grid(&self, p: &PhysParams) -> Result<TauGrid, QrtError> {
        TauGrid::covering(self.tau_max(p), self.dtau(p))
    }

    /// Spectral window [δ − wΓ, δ + wΓ].
    pub fn window(&self, p: &PhysParams) -> (f64, f64) {
        (p.delta - self.window_gammas * p.gamma, p.delta + self.window_gammas * p.gamma)
    }
}

/// How the absorption line is set up for each parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AbsorptionChoice {
    /// Thin sheet; κ defaults to Γ/(4f) per point.
    ThinSheet { kappa: Option<f64> },
    Lorentzian { a_peak: f64 },
    Constant { value: f64 },
}

impl Default for AbsorptionChoice {
    fn default() -> Self {
        Self::ThinSheet { kappa: None }
    }
}

impl AbsorptionChoice {
    pub fn bind(&self, p: &PhysParams) -> Result<AbsorptionModel, SpectraError> {
        match *self {
            Self::ThinSheet { kappa: None } => Ok(AbsorptionModel::default_for(p)),
            Self::ThinSheet { kappa: Some(k) } => AbsorptionModel::thin_sheet(p, k),
            Self::Lorentzian { a_peak } => AbsorptionModel::lorentzian(p, a_peak),
            Self::Constant { value } => AbsorptionModel::constant(p, value),
        }
    }
}

/// Full result for one parameter set.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub params: PhysParams,
    pub truncation: usize,
    pub absorption: AbsorptionModel,
    pub moments: MomentSet,
    pub row: ObservableRow,
    pub c1: CorrelationTrace,
    pub c2: CorrelationTrace,
    /// Exciton spectrum on the full Nyquist band of the τ grid.
    pub spectrum_x: Spectrum,
}

pub fn resolve_truncation(p: &PhysParams, numerics: &Numerics) -> Result<usize, FockError> {
    match numerics.truncation {
        Some(n) => Ok(n),
        None => Ok(choose_truncation(p, numerics.truncation_tol)?.n),
    }
}

pub fn evaluate_point(
    p: &PhysParams,
    truncation: usize,
    numerics: &Numerics,
    absorption: &AbsorptionChoice,
) -> Result<PointResult, PipelineError> {
    p.validate()?;
    let model = absorption.bind(p)?;
    let l = build_liouvillian(p, truncation)?;
    let rho = steady_state(&l)?;
    let a = annihilation(truncation)?;
    let sm = steady_moments(&rho)?;

    let grid = numerics.tau_grid(p)?;
    let prop = Propagator::new(&l, grid.step())?;
    let (c1, c2) = correlator_pair(&prop, &rho, &a, grid)?;

    let band = OmegaGrid::full_band(grid.step(), band_len(grid.len()))?;
    let spectrum_x = emission_spectrum(&c1, &band)?;

    let moments = MomentSet {
        mean_x: sm.mean,
        mean_q: coherent_moment_q(sm.mean, &model),
        intensity_x: sm.intensity,
        intensity_q: intensity_q(&spectrum_x, &model),
        anom_x: sm.anom,
        anom_q: anomalous_moment_q(&c2, &model)?,
    };
    let row = ObservableRow::from_moments(p.p_l, &moments)?;
    Ok(PointResult { params: *p, truncation, absorption: model, moments, row, c1, c2, spectrum_x })
}

/// Pump powers min, min+step, …, max (the last point pinned to max).
pub fn sweep_powers(min: f64, max: f64, step: f64) -> Result<Vec<f64>, PipelineError> {
    if !(min.is_finite() && max.is_finite() && step.is_finite() && step > 0.0 && max >= min) {
        return Err(PipelineError::BadRange { min, max, step });
    }
    let n = ((max - min) / step + 1e-9).floor() as usize;
    let mut out: Vec<f64> = (0..=n).map(|i| min + i as f64 * step).collect();
    let last = *out.last().unwrap();
    if (max - last).abs() > 1e-9 * step {
        out.push(max);
    } else {
        *out.last_mut().unwrap() = max;
    }
    Ok(out)
}

/// Sign change of a swept quantity, located on its spline interpolant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub p_l: f64,
    /// true when the quantity goes from negative to non-negative.
    pub rising: bool,
}

/// Zero crossings of `ys` over the sweep, bisected to `resolution` µW on the
/// natural cubic spline through the sweep samples.
pub fn zero_crossings(xs: &[f64], ys: &[f64], resolution: f64) -> Vec<Crossing> {
    if xs.len() < 2 {
        return Vec::new();
    }
    let spline = NaturalCubicSpline::new(xs, ys).expect("sweep powers strictly increasing");
    let mut out = Vec::new();
    for i in 0..xs.len() - 1 {
        let (y0, y1) = (ys[i], ys[i + 1]);
        if (y0 < 0.0) == (y1 < 0.0) {
            continue;
        }
        let rising = y0 < 0.0;
        let (mut lo, mut hi) = (xs[i], xs[i + 1]);
        while hi - lo > resolution {
            let mid = 0.5 * (lo + hi);
            if (spline.eval(mid) < 0.0) == (y0 < 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(Crossing { p_l: 0.5 * (lo + hi), rising });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCrossings {
    pub var_x: Vec<Crossing>,
    pub var_q: Vec<Crossing>,
    pub ncl_x: Vec<Crossing>,
    pub ncl_q: Vec<Crossing>,
}

/// Outcome of each qualitative claim checked on a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepVerdicts {
    /// var_q < var_x − 1e-10 at every point.
    pub filtered_variance_below_bare: bool,
    /// var_x turns non-negative at a lower power than var_q does.
    pub squeezing_persists_longer: bool,
    /// ncl_q < 0 while ncl_x > 0 on a non-empty interval starting at the lowest power.
    pub anomalous_ncl_filtered_only: bool,
    /// Upper end (µW) of that low-power interval, if non-empty.
    pub anomalous_ncl_interval_end: Option<f64>,
    /// gap_q < gap_x at every point.
    pub phase_gap_reduced: bool,
    /// dcoh_q > dcoh_x at every point.
    pub coherence_degree_raised: bool,
    /// Pearson correlation of intensity_x with P_L over the anchors in range.
    pub intensity_x_linearity: f64,
    /// intensity_q has a slope sign change or a vanishing slope.
    pub intensity_q_saturates: bool,
}

impl SweepVerdicts {
    pub fn all_hold(&self) -> bool {
        self.filtered_variance_below_bare
            && self.squeezing_persists_longer
            && self.anomalous_ncl_filtered_only
            && self.phase_gap_reduced
            && self.coherence_degree_raised
            && self.intensity_x_linearity > 0.99
            && self.intensity_q_saturates
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub truncation: usize,
    pub rows: Vec<ObservableRow>,
    pub moments: Vec<MomentSet>,
    pub crossings: SweepCrossings,
    pub verdicts: SweepVerdicts,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub min: f64,
    pub max: f64,
    pub step: f64,
    pub crossing_resolution: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { min: 100.0, max: 310.0, step: 2.5, crossing_resolution: 0.1 }
    }
}

/// One truncation for the whole sweep: the largest adaptive choice over the
/// sweep endpoints and the table anchors inside the range.
pub fn sweep_truncation(interp: &ParamInterpolator, table: &ParamTable, spec: &SweepSpec, numerics: &Numerics) -> Result<usize, PipelineError> {
    if let Some(n) = numerics.truncation {
        return Ok(n);
    }
    let mut anchors = vec![spec.min, spec.max];
    anchors.extend(table.rows().iter().map(|r| r.p_l).filter(|&p| p > spec.min && p < spec.max));
    let mut n = 0;
    for p_l in anchors {
        n = n.max(resolve_truncation(&interp.at(p_l)?, numerics)?);
    }
    Ok(n)
}

pub fn run_sweep(table: &ParamTable, spec: &SweepSpec, numerics: &Numerics, absorption: &AbsorptionChoice) -> Result<SweepResult, PipelineError> {
    let powers = sweep_powers(spec.min, spec.max, spec.step)?;
    let interp = ParamInterpolator::new(table);
    let truncation = sweep_truncation(&interp, table, spec, numerics)?;

    let results: Vec<Result<(ObservableRow, MomentSet), PipelineError>> = powers
        .par_iter()
        .map(|&p_l| {
            let wrap = |e: PipelineError| PipelineError::SweepPoint { p_l, source: Box::new(e) };
            let p = interp.at(p_l).map_err(|e| wrap(e.into()))?;
            let r = evaluate_point(&p, truncation, numerics, absorption).map_err(wrap)?;
            Ok((r.row, r.moments))
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut moments = Vec::with_capacity(results.len());
    for r in results {
        let (row, m) = r?;
        rows.push(row);
        moments.push(m);
    }

    let col = |f: fn(&ObservableRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let res = spec.crossing_resolution;
    let crossings = SweepCrossings {
        var_x: zero_crossings(&powers, &col(|r| r.var_x), res),
        var_q: zero_crossings(&powers, &col(|r| r.var_q), res),
        ncl_x: zero_crossings(&powers, &col(|r| r.ncl_x), res),
        ncl_q: zero_crossings(&powers, &col(|r| r.ncl_q), res),
    };
    let verdicts = judge(table, &rows, &moments, &crossings);
    Ok(SweepResult { truncation, rows, moments, crossings, verdicts })
}

fn first_rising(c: &[Crossing]) -> Option<f64> {
    c.iter().find(|c| c.rising).map(|c| c.p_l)
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

fn judge(table: &ParamTable, rows: &[ObservableRow], moments: &[MomentSet], crossings: &SweepCrossings) -> SweepVerdicts {
    let filtered_variance_below_bare = rows.iter().all(|r| r.var_q < r.var_x - 1e-10);

    // var_x must turn positive inside the sweep; var_q must do so later or never.
    let squeezing_persists_longer = match (first_rising(&crossings.var_x), first_rising(&crossings.var_q)) {
        (Some(x), Some(q)) => x < q && rows[0].var_q < 0.0,
        (Some(_), None) => rows.iter().all(|r| r.var_q < 0.0),
        _ => false,
    };

    let interval: Vec<&ObservableRow> = rows.iter().take_while(|r| r.ncl_q < 0.0 && r.ncl_x > 0.0).collect();
    let anomalous_ncl_interval_end = interval.last().map(|r| r.p_l);

    let anchor_idx: Vec<usize> = table
        .rows()
        .iter()
        .filter_map(|a| rows.iter().position(|r| (r.p_l - a.p_l).abs() < 1e-9))
        .collect();
    let (px, ix): (Vec<f64>, Vec<f64>) = if anchor_idx.len() >= 2 {
        anchor_idx.iter().map(|&i| (rows[i].p_l, moments[i].intensity_x)).unzip()
    } else {
        rows.iter().zip(moments).map(|(r, m)| (r.p_l, m.intensity_x)).unzip()
    };

    let slopes: Vec<f64> = rows
        .windows(2)
        .zip(moments.windows(2))
        .map(|(r, m)| (m[1].intensity_q - m[0].intensity_q) / (r[1].p_l - r[0].p_l))
        .collect();
    let max_slope = slopes.iter().map(|s| s.abs()).fold(0.0, f64::max);
    let sign_change = slopes.windows(2).any(|w| (w[0] > 0.0) != (w[1] > 0.0));
    let vanishing = slopes.iter().any(|s| s.abs() < 1e-2 * max_slope);

    SweepVerdicts {
        filtered_variance_below_bare,
        squeezing_persists_longer,
        anomalous_ncl_filtered_only: !interval.is_empty(),
        anomalous_ncl_interval_end,
        phase_gap_reduced: rows.iter().all(|r| r.gap_q < r.gap_x),
        coherence_degree_raised: rows.iter().all(|r| r.dcoh_q > r.dcoh_x),
        intensity_x_linearity: if px.len() >= 2 { pearson(&px, &ix) } else { f64::NAN },
        intensity_q_saturates: sign_change || vanishing,
    }
}

/// Mean ⟨A⟩ of the driven damped linear oscillator, −Ω_R/(δ − iΓ/2).
pub fn linear_coherent_amplitude(p: &PhysParams) -> Complex64 {
    -p.omega_r / Complex64::new(p.delta, -0.5 * p.gamma)
}
