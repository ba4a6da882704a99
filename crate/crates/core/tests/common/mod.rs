#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use qwfluor_core::fock::{annihilation, build_liouvillian, steady_moments, steady_state, unvec, vec, CMatrix, Liouvillian};
use qwfluor_core::model::PhysParams;

/// Steady state and the two trace-free QRT seeds of one parameter set.
pub struct Resolvent {
    pub l: Liouvillian,
    pub a: CMatrix,
    pub rho: CMatrix,
    pub mean: Complex64,
    pub intensity: f64,
    pub anom: Complex64,
    /// ρA† − ⟨A†⟩ρ, seed of the ⟨A†(0)A(τ)⟩ fluctuations.
    pub y1: CMatrix,
    /// Aρ − ⟨A⟩ρ, seed of the ⟨A(τ)A(0)⟩ fluctuations.
    pub y2: CMatrix,
}

impl Resolvent {
    pub fn new(p: &PhysParams, n: usize) -> Self {
        let l = build_liouvillian(p, n).unwrap();
        let rho = steady_state(&l).unwrap();
        let m = steady_moments(&rho).unwrap();
        let a = annihilation(n).unwrap().matrix().clone();
        let r = rho.matrix().clone();
        let y1 = &r * a.adjoint() - &r * m.mean.conj();
        let y2 = &a * &r - &r * m.mean;
        Self { l, a, rho: r, mean: m.mean, intensity: m.intensity, anom: m.anom, y1, y2 }
    }

    /// ∫₀^∞ e^{izτ} Tr[A e^{Lτ} Y] dτ = −Tr[A (L + iz)⁻¹ Y] for Im z ≥ 0, z ≠ 0.
    pub fn laplace(&self, y: &CMatrix, z: Complex64) -> Complex64 {
        let d = self.l.dim();
        let shifted = self.l.matrix() + DMatrix::identity(d * d, d * d) * (Complex64::i() * z);
        let x = shifted.lu().solve(&vec(y)).expect("shifted Liouvillian invertible");
        -(&self.a * unvec(&x, d)).trace()
    }

    /// Exact incoherent emission density (1/π) Re ∫₀^∞ e^{iωτ} C₁ fluct dτ.
    pub fn emission_density(&self, omega: f64) -> f64 {
        self.laplace(&self.y1, Complex64::from(omega)).re / std::f64::consts::PI
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite Gauss–Legendre quadrature of f over [lo, hi] split at `breaks`.
pub fn integrate(f: impl Fn(f64) -> f64, edges: &[f64], panels_per_piece: usize, order: usize) -> f64 {
    let gl = gauss_legendre(order);
    let mut total = 0.0;
    for w in edges.windows(2) {
        let h = (w[1] - w[0]) / panels_per_piece as f64;
        for k in 0..panels_per_piece {
            let (a, b) = (w[0] + k as f64 * h, w[0] + (k + 1) as f64 * h);
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            total += gl.iter().map(|(x, wt)| wt * f(mid + half * x)).sum::<f64>() * half;
        }
    }
    total
}
