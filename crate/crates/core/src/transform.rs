//! One-sided Fourier transforms of sampled correlators,
//! F(ω) = ∫₀^∞ dτ e^{iωτ} f(τ).

use num_complex::Complex64;
use rustfft::FftPlanner;

/// τ quadrature rule. The trapezoidal rule keeps the exact discrete
/// identities on the full Nyquist band (the band integral of the transform
/// returns f(0)); the Gregory rule corrects the τ = 0 end to O(dτ⁴) and is
/// meant for transforms weighted by a decaying frequency window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Rule {
    Trapezoid,
    Gregory,
}

const GREGORY_HEAD: [f64; 3] = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];

fn weight(rule: Rule, j: usize, len: usize) -> f64 {
    if j + 1 == len {
        return 0.5;
    }
    match rule {
        Rule::Gregory if j < GREGORY_HEAD.len() => GREGORY_HEAD[j],
        _ if j == 0 => 0.5,
        _ => 1.0,
    }
}

/// Transform on ω_k = ω₀ + k·dω, k = 0..n_fft, with dω = 2π/(n_fft·dτ).
/// Requires `n_fft >= f.len()` so the trace does not wrap onto itself.
pub(crate) fn one_sided_fft(f: &[Complex64], dtau: f64, omega0: f64, n_fft: usize, rule: Rule) -> Vec<Complex64> {
    assert!(n_fft >= f.len(), "FFT length shorter than the trace");
    assert!(f.len() > GREGORY_HEAD.len(), "trace too short");
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    for (j, (b, &v)) in buf.iter_mut().zip(f).enumerate() {
        let phase = Complex64::from_polar(1.0, omega0 * dtau * j as f64);
        *b = v * phase * weight(rule, j, f.len());
    }
    // inverse FFT is the unnormalized e^{+2πi jk/K} sum
    FftPlanner::new().plan_fft_inverse(n_fft).process(&mut buf);
    for b in &mut buf {
        *b *= dtau;
    }
    buf
}

/// Same quadrature, summed directly at arbitrary frequencies.
pub(crate) fn one_sided_direct(f: &[Complex64], dtau: f64, omegas: impl Iterator<Item = f64>) -> Vec<Complex64> {
    omegas
        .map(|w| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &v) in f.iter().enumerate() {
                let phase = Complex64::from_polar(1.0, w * dtau * j as f64);
                acc += v * phase * weight(Rule::Trapezoid, j, f.len());
            }
            acc * dtau
        })
        .collect()
}

/// FFT length K with K·dω·dτ = 2π, if such an integer exists.
pub(crate) fn commensurate_len(step: f64, dtau: f64) -> Option<usize> {
    let k = 2.0 * std::f64::consts::PI / (step * dtau);
    let r = k.round();
    ((k - r).abs() <= 1e-9 * k && r >= 1.0).then_some(r as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fft_matches_direct_sum() {
        let dtau = 0.05;
        let f: Vec<Complex64> = (0..200)
            .map(|j| {
                let t = j as f64 * dtau;
                Complex64::from_polar((-0.4 * t).exp(), -0.7 * t) * Complex64::new(1.0, 0.3)
            })
            .collect();
        let n = 512;
        let w0 = -3.1;
        let fast = one_sided_fft(&f, dtau, w0, n, Rule::Trapezoid);
        let dw = 2.0 * std::f64::consts::PI / (n as f64 * dtau);
        let slow = one_sided_direct(&f, dtau, (0..n).map(|k| w0 + k as f64 * dw));
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-11);
        }
    }

    #[test]
    fn exponential_transform() {
        // ∫₀^∞ e^{iωτ} e^{-κτ} dτ = 1/(κ - iω)
        let (kappa, dtau) = (0.5, 0.002);
        let f: Vec<Complex64> = (0..40_000).map(|j| Complex64::from((-kappa * j as f64 * dtau).exp())).collect();
        let got = one_sided_direct(&f, dtau, [0.0, 1.3].into_iter());
        for (w, g) in [0.0, 1.3].iter().zip(got) {
            let want = 1.0 / Complex64::new(kappa, -w);
            assert!((g - want).norm() < 1e-6, "{g} vs {want}");
        }
    }

    #[test]
    fn commensurability() {
        let dtau = 0.01;
        let step = 2.0 * std::f64::consts::PI / (4096.0 * dtau);
        assert_eq!(commensurate_len(step, dtau), Some(4096));
        assert_eq!(commensurate_len(step * 1.0001, dtau), None);
    }
}
