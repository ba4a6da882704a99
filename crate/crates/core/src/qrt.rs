//! Two-time steady-state correlators via the quantum regression theorem.
//!
//! Both correlators share one step propagator `e^{L·dτ}`. Each trace keeps the
//! factorized long-time limit as an analytic constant (`asymptote`) and the
//! decaying remainder (`fluct`) explicitly, so downstream transforms can treat
//! the coherent part exactly.

use std::io::Write;

use num_complex::Complex64;
use thiserror::Error;

use crate::expm::{expm, norm1};
use crate::fock::{steady_moments, vec, CMatrix, CVector, DensityMatrix, FockError, Liouvillian, OperatorMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QrtError {
    #[error("τ grid needs a positive finite step and at least 2 points (step {step}, len {len})")]
    BadGrid { step: f64, len: usize },
    #[error("step propagator is unstable: 1-norm {norm:.3e} exceeds bound {bound:.3e}")]
    Unstable { norm: f64, bound: f64 },
    #[error("propagated state became non-finite at τ index {0}")]
    NonFinite(usize),
    #[error(
        "correlation fluctuations not decayed at τ_max = {tau_max}: tail {tail:.3e} vs peak {peak:.3e}; increase τ_max"
    )]
    NotDecayed { tau_max: f64, tail: f64, peak: f64 },
    #[error("dimension mismatch between Liouvillian ({0}) and operands ({1})")]
    DimMismatch(usize, usize),
    #[error(transparent)]
    Fock(#[from] FockError),
}

/// Uniform grid τ_j = j·dτ, j = 0..len.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauGrid {
    step: f64,
    len: usize,
}

impl TauGrid {
    pub fn new(step: f64, len: usize) -> Result<Self, QrtError> {
        if !(step.is_finite() && step > 0.0) || len < 2 {
            return Err(QrtError::BadGrid { step, len });
        }
        Ok(Self { step, len })
    }

    /// Smallest grid with spacing `step` reaching at least `tau_max`.
    pub fn covering(tau_max: f64, step: f64) -> Result<Self, QrtError> {
        let len = (tau_max / step).ceil() as usize + 1;
        Self::new(step, len)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn tau(&self, j: usize) -> f64 {
        j as f64 * self.step
    }

    pub fn tau_max(&self) -> f64 {
        self.tau(self.len - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationKind {
    /// ⟨A†(0) A(τ)⟩
    AdagA,
    /// ⟨A(τ) A(0)⟩
    AA,
}

#[derive(Debug, Clone)]
pub struct CorrelationTrace {
    pub kind: CorrelationKind,
    pub grid: TauGrid,
    pub values: Vec<Complex64>,
    pub asymptote: Complex64,
    pub fluct: Vec<Complex64>,
}

impl CorrelationTrace {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "tau,re,im,re_fluct,im_fluct")?;
        for (j, (v, f)) in self.values.iter().zip(&self.fluct).enumerate() {
            writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", self.grid.tau(j), v.re, v.im, f.re, f.im)?;
        }
        Ok(())
    }

    /// Largest |fluct| on the grid.
    pub fn fluct_peak(&self) -> f64 {
        self.fluct.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Precomputed one-step propagator e^{L·dτ}.
#[derive(Debug, Clone)]
pub struct Propagator {
    dim: usize,
    step: f64,
    matrix: CMatrix,
    // column-major real and imaginary planes of `matrix` for the functional walk
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Propagator {
    pub fn new(l: &Liouvillian, step: f64) -> Result<Self, QrtError> {
        if !(step.is_finite() && step > 0.0) {
            return Err(QrtError::BadGrid { step, len: 0 });
        }
        let matrix = expm(&(l.matrix() * Complex64::from(step)));
        // A CPTP step is a contraction in trace norm; measured in the column
        // 1-norm of the superoperator it can exceed 1 by at most dim^{3/2}.
        let d = l.dim() as f64;
        let bound = 2.0 * d * d.sqrt();
        let norm = norm1(&matrix);
        if !norm.is_finite() || norm > bound {
            return Err(QrtError::Unstable { norm, bound });
        }
        let re = matrix.iter().map(|z| z.re).collect();
        let im = matrix.iter().map(|z| z.im).collect();
        Ok(Self { dim: l.dim(), step, matrix, re, im })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Visits bₖ = b₀ Pᵏ for k = 0..len, where b₀ is a row vector.
    fn walk_functional(&self, b0: Vec<Complex64>, len: usize, mut visit: impl FnMut(usize, &[f64], &[f64])) -> Result<(), QrtError> {
        let n = b0.len();
        let (mut br, mut bi): (Vec<f64>, Vec<f64>) = b0.iter().map(|z| (z.re, z.im)).unzip();
        let (mut nr, mut ni) = (vec![0.0; n], vec![0.0; n]);
        for k in 0..len {
            if br.iter().chain(&bi).any(|x| !x.is_finite()) {
                return Err(QrtError::NonFinite(k));
            }
            visit(k, &br, &bi);
            if k + 1 == len {
                break;
            }
            for j in 0..n {
                let (pr, pi) = (&self.re[j * n..(j + 1) * n], &self.im[j * n..(j + 1) * n]);
                (nr[j], ni[j]) = planar_dot(&br, &bi, pr, pi);
            }
            std::mem::swap(&mut br, &mut nr);
            std::mem::swap(&mut bi, &mut ni);
        }
        Ok(())
    }

    fn walk(&self, x0: &CMatrix, len: usize, mut visit: impl FnMut(usize, &CVector)) -> Result<(), QrtError> {
        if x0.nrows() != self.dim || x0.ncols() != self.dim {
            return Err(QrtError::DimMismatch(self.dim, x0.nrows()));
        }
        let mut v = vec(x0);
        let mut next = CVector::zeros(v.len());
        for j in 0..len {
            if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(QrtError::NonFinite(j));
            }
            visit(j, &v);
            if j + 1 < len {
                next.gemv(Complex64::from(1.0), &self.matrix, &v, Complex64::from(0.0));
                std::mem::swap(&mut v, &mut next);
            }
        }
        Ok(())
    }
}

/// e^{Lτ_j} X₀ for every grid point, by repeated application of one step.
pub fn evolve_vec(prop: &Propagator, x0: &CMatrix, len: usize) -> Result<Vec<CMatrix>, QrtError> {
    let mut out = Vec::with_capacity(len);
    prop.walk(x0, len, |_, v| out.push(CMatrix::from_column_slice(prop.dim, prop.dim, v.as_slice())))?;
    Ok(out)
}

fn planar_dot(ar: &[f64], ai: &[f64], br: &[f64], bi: &[f64]) -> (f64, f64) {
    let (mut sr, mut si) = (0.0, 0.0);
    for k in 0..ar.len() {
        sr += ar[k] * br[k] - ai[k] * bi[k];
        si += ar[k] * bi[k] + ai[k] * br[k];
    }
    (sr, si)
}

/// Row vector w with w·vec(X) = Tr(A·X).
fn trace_functional(a: &CMatrix) -> Vec<Complex64> {
    let d = a.nrows();
    let mut w = vec![Complex64::new(0.0, 0.0); d * d];
    for r in 0..d {
        for c in 0..d {
            w[c + r * d] = a[(r, c)];
        }
    }
    w
}

fn dot(br: &[f64], bi: &[f64], x: &CVector) -> Complex64 {
    let (mut sr, mut si) = (0.0, 0.0);
    for ((r, i), z) in br.iter().zip(bi).zip(x.iter()) {
        sr += r * z.re - i * z.im;
        si += r * z.im + i * z.re;
    }
    Complex64::new(sr, si)
}

fn finish(kind: CorrelationKind, grid: TauGrid, values: Vec<Complex64>, asymptote: Complex64) -> Result<CorrelationTrace, QrtError> {
    let fluct: Vec<Complex64> = values.iter().map(|v| v - asymptote).collect();
    let trace = CorrelationTrace { kind, grid, values, asymptote, fluct };
    let peak = trace.fluct_peak();
    let tail = trace.fluct[grid.len - 1].norm();
    // the floor absorbs roundoff between the analytic asymptote and the propagated limit
    if tail > 1e-8 * peak + 1e-10 * trace.values[0].norm().max(asymptote.norm()) {
        return Err(QrtError::NotDecayed { tau_max: grid.tau_max(), tail, peak });
    }
    Ok(trace)
}

/// Tr[A e^{Lτ}X] for several seeds X at once. The trace functional is
/// propagated instead of the seeds, so one walk serves every seed.
fn trace_correlators(prop: &Propagator, a: &OperatorMatrix, seeds: &[CMatrix], grid: TauGrid) -> Result<Vec<Vec<Complex64>>, QrtError> {
    if (grid.step - prop.step).abs() > 1e-15 * prop.step {
        return Err(QrtError::BadGrid { step: grid.step, len: grid.len });
    }
    let xs: Vec<CVector> = seeds.iter().map(vec).collect();
    let mut values = vec![Vec::with_capacity(grid.len); seeds.len()];
    prop.walk_functional(trace_functional(a.matrix()), grid.len, |_, br, bi| {
        for (v, x) in values.iter_mut().zip(&xs) {
            v.push(dot(br, bi, x));
        }
    })?;
    Ok(values)
}

/// C₁(τ) = Tr[A e^{Lτ}(ρ A†)] = ⟨A†(0)A(τ)⟩, τ ≥ 0.
pub fn correlator_adag_a(
    prop: &Propagator,
    rho: &DensityMatrix,
    a: &OperatorMatrix,
    grid: TauGrid,
) -> Result<CorrelationTrace, QrtError> {
    check_dims(prop, rho, a)?;
    let m = steady_moments(rho)?;
    let x0 = rho.matrix() * a.matrix().adjoint();
    let v = trace_correlators(prop, a, &[x0], grid)?.remove(0);
    finish(CorrelationKind::AdagA, grid, v, m.mean.conj() * m.mean)
}

/// C₂(τ) = Tr[A e^{Lτ}(A ρ)] = ⟨A(τ)A(0)⟩, τ ≥ 0.
pub fn correlator_a_a(
    prop: &Propagator,
    rho: &DensityMatrix,
    a: &OperatorMatrix,
    grid: TauGrid,
) -> Result<CorrelationTrace, QrtError> {
    check_dims(prop, rho, a)?;
    let m = steady_moments(rho)?;
    let x0 = a.matrix() * rho.matrix();
    let v = trace_correlators(prop, a, &[x0], grid)?.remove(0);
    finish(CorrelationKind::AA, grid, v, m.mean * m.mean)
}

/// Both correlators from a single propagation.
pub fn correlator_pair(
    prop: &Propagator,
    rho: &DensityMatrix,
    a: &OperatorMatrix,
    grid: TauGrid,
) -> Result<(CorrelationTrace, CorrelationTrace), QrtError> {
    check_dims(prop, rho, a)?;
    let m = steady_moments(rho)?;
    let seeds = [rho.matrix() * a.matrix().adjoint(), a.matrix() * rho.matrix()];
    let mut v = trace_correlators(prop, a, &seeds, grid)?;
    let c2 = finish(CorrelationKind::AA, grid, v.pop().unwrap(), m.mean * m.mean)?;
    let c1 = finish(CorrelationKind::AdagA, grid, v.pop().unwrap(), m.mean.conj() * m.mean)?;
    Ok((c1, c2))
}

fn check_dims(prop: &Propagator, rho: &DensityMatrix, a: &OperatorMatrix) -> Result<(), QrtError> {
    for d in [rho.dim(), a.dim()] {
        if d != prop.dim {
            return Err(QrtError::DimMismatch(prop.dim, d));
        }
    }
    Ok(())
}
