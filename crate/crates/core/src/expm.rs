//! Matrix exponential by scaling and squaring with diagonal Padé approximants
//! (Higham 2005 degree selection).

use nalgebra::DMatrix;
use num_complex::Complex64;

type CMat = DMatrix<Complex64>;

const THETA: [(usize, f64); 5] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
    (13, 5.371920351148152e0),
];

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Induced 1-norm (maximum absolute column sum).
pub fn norm1(a: &CMat) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn scaled(a: &CMat, s: f64) -> CMat {
    a.map(|z| z * s)
}

/// Padé approximant of degree m < 13 from the even powers already formed.
fn pade_low(a: &CMat, powers: &[CMat], b: &[f64]) -> (CMat, CMat) {
    let n = a.nrows();
    let mut u_inner = CMat::identity(n, n) * Complex64::from(b[1]);
    let mut v = CMat::identity(n, n) * Complex64::from(b[0]);
    for (k, p) in powers.iter().enumerate() {
        u_inner += scaled(p, b[2 * k + 3]);
        v += scaled(p, b[2 * k + 2]);
    }
    (a * u_inner, v)
}

pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let norm = norm1(a);
    let a2 = a * a;
    for &(m, theta) in &THETA[..4] {
        if norm <= theta {
            let mut powers = vec![a2.clone()];
            while powers.len() < (m - 1) / 2 {
                let next = powers.last().unwrap() * &a2;
                powers.push(next);
            }
            let b: &[f64] = match m {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            let (u, v) = pade_low(a, &powers, b);
            return solve_pade(u, v);
        }
    }

    let theta13 = THETA[4].1;
    let s = if norm > theta13 { (norm / theta13).log2().ceil().max(0.0) as i32 } else { 0 };
    let scale = 0.5f64.powi(s);
    let a = scaled(a, scale);
    let a2 = scaled(&a2, scale * scale);
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &B13;
    let id = CMat::identity(n, n);

    let u_hi = scaled(&a6, b[13]) + scaled(&a4, b[11]) + scaled(&a2, b[9]);
    let u_inner = &a6 * u_hi + scaled(&a6, b[7]) + scaled(&a4, b[5]) + scaled(&a2, b[3]) + scaled(&id, b[1]);
    let u = &a * u_inner;
    let v_hi = scaled(&a6, b[12]) + scaled(&a4, b[10]) + scaled(&a2, b[8]);
    let v = &a6 * v_hi + scaled(&a6, b[6]) + scaled(&a4, b[4]) + scaled(&a2, b[2]) + scaled(&id, b[0]);

    let mut r = solve_pade(u, v);
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

fn solve_pade(u: CMat, v: CMat) -> CMat {
    let p = &v + &u;
    let q = v - u;
    q.lu().solve(&p).expect("Padé denominator is nonsingular for admissible norms")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_matrix() {
        for scale in [1e-3, 0.1, 1.0, 4.0, 50.0] {
            let d = [c(-1.0, 0.5), c(0.3, -2.0), c(-0.2, 0.0)];
            let a = CMat::from_diagonal(&nalgebra::DVector::from_row_slice(&d)) * c(scale, 0.0);
            let e = expm(&a);
            for (i, z) in d.iter().enumerate() {
                let want = (z * scale).exp();
                assert!((e[(i, i)] - want).norm() <= 1e-12 * want.norm().max(1.0), "scale {scale}");
            }
        }
    }

    #[test]
    fn nilpotent_block() {
        // exp([[0, t], [0, 0]]) = [[1, t], [0, 1]]
        let a = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(7.5, 1.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let e = expm(&a);
        assert!((e[(0, 1)] - c(7.5, 1.0)).norm() < 1e-13);
        assert!((e[(0, 0)] - c(1.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn rotation_generator() {
        // exp(-i θ σ_x) = cos θ I - i sin θ σ_x
        for theta in [0.01, 0.7, 3.0, 20.0] {
            let a = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -theta), c(0.0, -theta), c(0.0, 0.0)]);
            let e = expm(&a);
            assert!((e[(0, 0)] - c(theta.cos(), 0.0)).norm() < 1e-12);
            assert!((e[(0, 1)] - c(0.0, -theta.sin())).norm() < 1e-12);
        }
    }
}
