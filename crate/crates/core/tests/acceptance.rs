//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero when any of them fails.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use qwfluor_core::fock::{annihilation, build_liouvillian, steady_state, unvec, vec};
use qwfluor_core::model::{builtin_table, ParamInterpolator, PhysParams};
use qwfluor_core::observables::squeezing_variance;
use qwfluor_core::pipeline::{
    evaluate_point, linear_coherent_amplitude, resolve_truncation, run_sweep, zero_crossings, AbsorptionChoice, Numerics,
    SweepResult, SweepSpec,
};
use qwfluor_core::qrt::{correlator_a_a, correlator_adag_a, Propagator, TauGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn coherent_fixed_point() -> Outcome {
    let start = Instant::now();
    let p = PhysParams { g: 0.0, ..PhysParams::demo() };
    let numerics = Numerics::default();
    let n = resolve_truncation(&p, &numerics).unwrap();
    let r = evaluate_point(&p, n, &numerics, &AbsorptionChoice::default()).unwrap();
    let m = r.moments;
    let mean_err = (m.mean_x - Complex64::new(-0.5, -0.5)).norm().max((linear_coherent_amplitude(&p) - Complex64::new(-0.5, -0.5)).norm());
    let density = r.spectrum_x.density.iter().fold(0.0f64, |a, d| a.max(d.abs()));
    let elapsed = start.elapsed();
    let pass = mean_err < 1e-8 && r.row.var_x.abs() < 1e-8 && r.row.var_q.abs() < 1e-8 && density < 1e-8 && elapsed < Duration::from_secs(5);
    outcome(
        pass,
        format!(
            "N={n} |<A>+0.5+0.5i|={mean_err:.1e} var_x={:.1e} var_q={:.1e} max S_x={density:.1e} t={:.2}s",
            r.row.var_x,
            r.row.var_q,
            elapsed.as_secs_f64()
        ),
    )
}

fn constant_filter_scaling() -> Outcome {
    let p = PhysParams::demo();
    let numerics = Numerics::default();
    let n = resolve_truncation(&p, &numerics).unwrap();
    let mut worst = 0.0f64;
    for c in [0.1f64, 0.5, 1.0] {
        let m = evaluate_point(&p, n, &numerics, &AbsorptionChoice::Constant { value: c }).unwrap().moments;
        let rel = |q: Complex64, x: Complex64| (q - x).norm() / x.norm();
        worst = worst
            .max(rel(m.mean_q, m.mean_x * c.sqrt()))
            .max(rel(Complex64::from(m.intensity_q), Complex64::from(c * m.intensity_x)))
            .max(rel(m.anom_q, m.anom_x * c));
        let var_x = squeezing_variance(m.mean_x, m.intensity_x, m.anom_x);
        let var_q = squeezing_variance(m.mean_q, m.intensity_q, m.anom_q);
        worst = worst.max((var_q - c * var_x).abs());
    }
    outcome(worst < 1e-8, format!("c in {{0.1, 0.5, 1}}: worst deviation {worst:.1e}"))
}

fn qrt_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(31_415);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let p = PhysParams {
            g: rng.gen_range(0.0..0.5),
            omega_r: rng.gen_range(0.01..0.2),
            delta: rng.gen_range(-0.2..0.2),
            gamma: rng.gen_range(0.1..0.3),
            f: 1.0,
            p_l: f64::NAN,
        };
        let l = build_liouvillian(&p, 3).unwrap();
        let rho = steady_state(&l).unwrap();
        let a = annihilation(3).unwrap();
        let grid = TauGrid::covering(40.0 / p.gamma, 0.05 / p.gamma).unwrap();
        let prop = Propagator::new(&l, grid.step()).unwrap();
        let c1 = correlator_adag_a(&prop, &rho, &a, grid).unwrap();
        let c2 = correlator_a_a(&prop, &rho, &a, grid).unwrap();
        let x1 = vec(&(rho.matrix() * a.matrix().adjoint()));
        let x2 = vec(&(a.matrix() * rho.matrix()));
        for j in 0..grid.len() {
            let e: DMatrix<Complex64> = (l.matrix() * Complex64::from(grid.tau(j))).exp();
            let d1 = (a.matrix() * unvec(&(&e * &x1), 4)).trace();
            let d2 = (a.matrix() * unvec(&(&e * &x2), 4)).trace();
            worst = worst.max((c1.values[j] - d1).norm()).max((c2.values[j] - d2).norm());
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst < 1e-9 && elapsed < Duration::from_secs(10),
        format!("10 seeded parameter sets at N=3: worst |Δ|={worst:.1e} t={:.2}s", elapsed.as_secs_f64()),
    )
}

fn spectrum_normalization() -> Outcome {
    let numerics = Numerics::default();
    let mut worst = 0.0f64;
    for p in builtin_table().rows() {
        let n = resolve_truncation(p, &numerics).unwrap();
        let r = evaluate_point(p, n, &numerics, &AbsorptionChoice::default()).unwrap();
        let i = r.moments.intensity_x;
        worst = worst.max((r.spectrum_x.integral() - i).abs() / i);
    }
    outcome(worst < 1e-4, format!("three anchors: worst relative error {worst:.1e}"))
}

fn filtered_variance_below_bare(s: &SweepResult) -> Outcome {
    let bad: Vec<f64> = s.rows.iter().filter(|r| !(r.var_q < r.var_x - 1e-10)).map(|r| r.p_l).collect();
    let worst = s.rows.iter().map(|r| r.var_q - r.var_x).fold(f64::NEG_INFINITY, f64::max);
    let detail = match (bad.first(), bad.last()) {
        (Some(a), Some(b)) => format!("{} of {} points violate, P_L in [{a}, {b}] µW, max(var_q - var_x)={worst:.3e}", bad.len(), s.rows.len()),
        _ => format!("all {} points, max(var_q - var_x)={worst:.3e}", s.rows.len()),
    };
    outcome(bad.is_empty(), detail)
}

fn squeezing_persistence(s: &SweepResult) -> Outcome {
    let xs: Vec<f64> = s.rows.iter().map(|r| r.p_l).collect();
    let col = |f: fn(&qwfluor_core::observables::ObservableRow) -> f64| s.rows.iter().map(f).collect::<Vec<f64>>();
    let cx = zero_crossings(&xs, &col(|r| r.var_x), 0.1);
    let cq = zero_crossings(&xs, &col(|r| r.var_q), 0.1);
    let first = |c: &[qwfluor_core::pipeline::Crossing]| c.first().map(|c| c.p_l);
    let crossing_order = matches!((first(&cx), first(&cq)), (Some(x), Some(q)) if x < q);
    let low: Vec<&qwfluor_core::observables::ObservableRow> = s.rows.iter().take_while(|r| r.ncl_q < 0.0 && r.ncl_x > 0.0).collect();
    let min_ncl_q = s.rows.iter().map(|r| r.ncl_q).fold(f64::INFINITY, f64::min);
    outcome(
        crossing_order && !low.is_empty(),
        format!(
            "var_x crosses at {:?} µW, var_q at {:?} µW; ncl_q < 0 < ncl_x on {} low-power points (min ncl_q={min_ncl_q:.3e})",
            first(&cx),
            first(&cq),
            low.len()
        ),
    )
}

fn phase_matching(s: &SweepResult) -> Outcome {
    let bad = s.rows.iter().filter(|r| !(r.gap_q < r.gap_x)).count();
    let ratio = s.rows.iter().map(|r| r.gap_q / r.gap_x).fold(0.0, f64::max);
    outcome(bad == 0, format!("{bad} violations, max gap_q/gap_x={ratio:.3}"))
}

fn coherence_and_intensity(s: &SweepResult) -> Outcome {
    let bad = s.rows.iter().filter(|r| !(r.dcoh_q > r.dcoh_x)).count();
    let margin = s.rows.iter().map(|r| r.dcoh_q - r.dcoh_x).fold(f64::INFINITY, f64::min);
    let anchors: Vec<(f64, f64)> = builtin_table()
        .rows()
        .iter()
        .filter_map(|a| s.rows.iter().position(|r| r.p_l == a.p_l).map(|i| (a.p_l, s.moments[i].intensity_x)))
        .collect();
    let n = anchors.len() as f64;
    let (mx, my) = (anchors.iter().map(|a| a.0).sum::<f64>() / n, anchors.iter().map(|a| a.1).sum::<f64>() / n);
    let sxy: f64 = anchors.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = anchors.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let syy: f64 = anchors.iter().map(|(_, y)| (y - my).powi(2)).sum();
    let corr = sxy / (sxx * syy).sqrt();
    let slopes: Vec<f64> = s
        .rows
        .windows(2)
        .zip(s.moments.windows(2))
        .map(|(r, m)| (m[1].intensity_q - m[0].intensity_q) / (r[1].p_l - r[0].p_l))
        .collect();
    let max_slope = slopes.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let sign_change = slopes.windows(2).any(|w| w[0].signum() != w[1].signum());
    let vanishing = slopes.iter().any(|v| v.abs() < 1e-2 * max_slope);
    let peak = s.moments.iter().zip(&s.rows).fold((f64::NEG_INFINITY, 0.0), |b, (m, r)| if m.intensity_q > b.0 { (m.intensity_q, r.p_l) } else { b });
    outcome(
        bad == 0 && anchors.len() == 3 && corr > 0.99 && (sign_change || vanishing),
        format!(
            "dcoh violations {bad} (min margin {margin:.2e}); corr(I_x, P_L)={corr:.4}; I_q slope sign change={sign_change}, max I_q at {} µW",
            peak.1
        ),
    )
}

fn robustness() -> Outcome {
    let base = Numerics::default();
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for p in builtin_table().rows() {
        let n = resolve_truncation(p, &base).unwrap();
        let reference = evaluate_point(p, n, &base, &AbsorptionChoice::default()).unwrap().row;
        let variants = [
            (2 * n, base),
            (n, Numerics { dtau_gammas: 0.5 * base.dtau(p) * p.gamma, ..base }),
            (n, Numerics { window_gammas: 2.0 * base.window_gammas, ..base }),
        ];
        let mut local = 0.0f64;
        for (nv, numerics) in variants {
            let row = evaluate_point(p, nv, &numerics, &AbsorptionChoice::default()).unwrap().row;
            local = local.max((row.var_x - reference.var_x).abs()).max((row.var_q - reference.var_q).abs());
        }
        parts.push(format!("{} µW: {local:.1e}", p.p_l));
        worst = worst.max(local);
    }
    outcome(worst < 1e-6, format!("max |Δvar| {}", parts.join(", ")))
}

fn main() {
    let start = Instant::now();
    let table = builtin_table();
    let _ = ParamInterpolator::new(&table);
    let sweep = run_sweep(&table, &SweepSpec::default(), &Numerics::default(), &AbsorptionChoice::default()).expect("default sweep");

    let results: Vec<(&str, Outcome)> = vec![
        ("coherent-state fixed point", coherent_fixed_point()),
        ("constant-filter scaling law", constant_filter_scaling()),
        ("QRT small-dimension oracle", qrt_oracle()),
        ("spectrum normalization", spectrum_normalization()),
        ("filtered variance below bare variance", filtered_variance_below_bare(&sweep)),
        ("squeezing persistence", squeezing_persistence(&sweep)),
        ("phase matching", phase_matching(&sweep)),
        ("degree of coherence and intensity", coherence_and_intensity(&sweep)),
        ("numerical robustness", robustness()),
    ];
    let total = start.elapsed();

    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!("criterion {} {:<40} {}  {}", i + 1, name, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    let in_budget = total < Duration::from_secs(300);
    println!("total runtime {:.1}s ({})", total.as_secs_f64(), if in_budget { "within 5 min" } else { "over 5 min" });
    println!("{} of {} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
