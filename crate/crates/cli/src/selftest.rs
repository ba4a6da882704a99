//! Analytic-oracle checks run by `qwfluor selftest`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use qwfluor_core::fock::{annihilation, build_liouvillian, steady_state, unvec, vec};
use qwfluor_core::model::{builtin_table, PhysParams};
use qwfluor_core::observables::squeezing_variance;
use qwfluor_core::pipeline::{evaluate_point, linear_coherent_amplitude, resolve_truncation, AbsorptionChoice, Numerics};
use qwfluor_core::qrt::{correlator_a_a, correlator_adag_a, Propagator, TauGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type VarianceFn = fn(Complex64, f64, Complex64) -> f64;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    /// Largest deviation measured; NaN when the check errored.
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.measured <= self.tolerance
    }

    pub fn line(&self) -> String {
        let tag = if self.passed() { "PASS" } else { "FAIL" };
        format!("{tag} {:<24} measured={:.3e} tol={:.1e} {}", self.name, self.measured, self.tolerance, self.detail)
    }
}

fn errored(name: &'static str, tolerance: f64, e: impl std::fmt::Display) -> CheckResult {
    CheckResult { name, measured: f64::NAN, tolerance, detail: format!("error: {e}") }
}

/// Linear drive, no Kerr term: the steady state is the coherent state
/// −Ω_R/(δ − iΓ/2) and neither field is squeezed.
pub fn coherent_fixed_point(variance: VarianceFn) -> CheckResult {
    const TOL: f64 = 1e-8;
    let p = PhysParams { g: 0.0, ..PhysParams::demo() };
    let numerics = Numerics { truncation: Some(20), ..Numerics::default() };
    let r = match evaluate_point(&p, 20, &numerics, &AbsorptionChoice::default()) {
        Ok(r) => r,
        Err(e) => return errored("coherent_fixed_point", TOL, e),
    };
    let m = &r.moments;
    let mean_err = (m.mean_x - linear_coherent_amplitude(&p)).norm();
    let var_x = variance(m.mean_x, m.intensity_x, m.anom_x).abs();
    let var_q = variance(m.mean_q, m.intensity_q, m.anom_q).abs();
    let density = r.spectrum_x.density.iter().fold(0.0f64, |acc, s| acc.max(s.abs()));
    CheckResult {
        name: "coherent_fixed_point",
        measured: mean_err.max(var_x).max(var_q).max(density),
        tolerance: TOL,
        detail: format!("mean={mean_err:.1e} var_x={var_x:.1e} var_q={var_q:.1e} S_x={density:.1e}"),
    }
}

/// a(ω) ≡ c scales a moment with m + n operators by c^((m+n)/2).
pub fn constant_filter_scaling(variance: VarianceFn) -> CheckResult {
    const TOL: f64 = 1e-8;
    let p = PhysParams::demo();
    let numerics = Numerics::default();
    let mut worst = 0.0f64;
    for c in [0.1, 0.5, 1.0] {
        let choice = AbsorptionChoice::Constant { value: c };
        let r = match resolve_truncation(&p, &numerics).map_err(|e| e.to_string()).and_then(|n| {
            evaluate_point(&p, n, &numerics, &choice).map_err(|e| e.to_string())
        }) {
            Ok(r) => r,
            Err(e) => return errored("constant_filter_scaling", TOL, e),
        };
        let m = &r.moments;
        let var_x = variance(m.mean_x, m.intensity_x, m.anom_x);
        let var_q = variance(m.mean_q, m.intensity_q, m.anom_q);
        worst = worst
            .max((m.mean_q - m.mean_x * c.sqrt()).norm())
            .max((m.intensity_q - c * m.intensity_x).abs())
            .max((m.anom_q - m.anom_x * c).norm())
            .max((var_q - c * var_x).abs());
    }
    CheckResult { name: "constant_filter_scaling", measured: worst, tolerance: TOL, detail: "c in {0.1, 0.5, 1}".into() }
}

fn random_params(rng: &mut ChaCha8Rng) -> PhysParams {
    PhysParams {
        g: rng.gen_range(0.0..0.5),
        omega_r: rng.gen_range(0.01..0.2),
        delta: rng.gen_range(-0.2..0.2),
        gamma: rng.gen_range(0.1..0.3),
        f: 1.0,
        p_l: f64::NAN,
    }
}

/// Stepped correlators at N = 3 against e^{Lτ} evaluated densely per point.
pub fn qrt_small_dim() -> CheckResult {
    const TOL: f64 = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let p = random_params(&mut rng);
        let run = || -> Result<f64, Box<dyn std::error::Error>> {
            let l = build_liouvillian(&p, 3)?;
            let rho = steady_state(&l)?;
            let a = annihilation(3)?;
            let grid = TauGrid::covering(40.0 / p.gamma, 0.05 / p.gamma)?;
            let prop = Propagator::new(&l, grid.step())?;
            let c1 = correlator_adag_a(&prop, &rho, &a, grid)?;
            let c2 = correlator_a_a(&prop, &rho, &a, grid)?;
            let x1 = vec(&(rho.matrix() * a.matrix().adjoint()));
            let x2 = vec(&(a.matrix() * rho.matrix()));
            let mut err = 0.0f64;
            for j in (0..grid.len()).step_by(7) {
                let e: DMatrix<Complex64> = (l.matrix() * Complex64::from(grid.tau(j))).exp();
                let d1 = (a.matrix() * unvec(&(&e * &x1), 4)).trace();
                let d2 = (a.matrix() * unvec(&(&e * &x2), 4)).trace();
                err = err.max((c1.values[j] - d1).norm()).max((c2.values[j] - d2).norm());
            }
            Ok(err)
        };
        match run() {
            Ok(e) => worst = worst.max(e),
            Err(e) => return errored("qrt_small_dim", TOL, e),
        }
    }
    CheckResult { name: "qrt_small_dim", measured: worst, tolerance: TOL, detail: "10 seeded parameter sets, N=3".into() }
}

/// ∫S_x dω plus the Rayleigh weight reproduces ⟨A†A⟩ at every table anchor.
pub fn spectrum_normalization() -> CheckResult {
    const TOL: f64 = 1e-4;
    let numerics = Numerics::default();
    let mut worst = 0.0f64;
    for p in builtin_table().rows() {
        let r = match resolve_truncation(p, &numerics).map_err(|e| e.to_string()).and_then(|n| {
            evaluate_point(p, n, &numerics, &AbsorptionChoice::default()).map_err(|e| e.to_string())
        }) {
            Ok(r) => r,
            Err(e) => return errored("spectrum_normalization", TOL, e),
        };
        let i = r.moments.intensity_x;
        worst = worst.max((r.spectrum_x.integral() - i).abs() / i);
    }
    CheckResult { name: "spectrum_normalization", measured: worst, tolerance: TOL, detail: "relative, three anchors".into() }
}

pub fn run_checks(variance: VarianceFn) -> Vec<CheckResult> {
    vec![coherent_fixed_point(variance), constant_filter_scaling(variance), qrt_small_dim(), spectrum_normalization()]
}

pub fn run_default_checks() -> Vec<CheckResult> {
    run_checks(squeezing_variance)
}
