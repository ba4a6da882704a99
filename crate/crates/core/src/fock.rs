//! Truncated Fock-space algebra for the collective exciton mode.
//!
//! Density matrices are vectorized column-major, which is also nalgebra's
//! storage order: `vec(ρ)[i + j·d] = ρ[i, j]` and `vec(AXB) = (Bᵀ ⊗ A) vec(X)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::model::PhysParams;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("Fock truncation N must be >= 1, got {0}")]
    BadTruncation(usize),
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("operator matrix must be square, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("steady-state system is singular or ill-conditioned (pivot condition estimate {condition:.3e})")]
    Singular { condition: f64 },
    #[error("steady-state residual {residual:.3e} exceeds 1e-10")]
    Residual { residual: f64 },
    #[error("truncation tolerance must lie in (0, 1e-4], got {0}")]
    BadTolerance(f64),
    #[error("truncation cap N={cap} reached; top-level populations {top:?} still above tolerance")]
    TruncationCap { cap: usize, top: [f64; 2] },
}

/// Square operator on the Fock levels 0..=N.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix(CMatrix);

impl OperatorMatrix {
    pub fn from_matrix(m: CMatrix) -> Result<Self, FockError> {
        if m.nrows() != m.ncols() {
            return Err(FockError::NotSquare(m.nrows(), m.ncols()));
        }
        Ok(Self(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0)
    }
}

/// Steady-state or propagated density operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn from_matrix(m: CMatrix) -> Result<Self, FockError> {
        if m.nrows() != m.ncols() {
            return Err(FockError::NotSquare(m.nrows(), m.ncols()));
        }
        Ok(Self(m))
    }

    /// Projector onto the Fock state |n⟩.
    pub fn fock(dim: usize, n: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(n, n)] = Complex64::from(1.0);
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn population(&self, n: usize) -> f64 {
        self.0[(n, n)].re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.0 - self.0.adjoint()).camax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.0 + self.0.adjoint()) * Complex64::from(0.5);
        h.symmetric_eigenvalues().min()
    }
}

pub fn annihilation(n: usize) -> Result<OperatorMatrix, FockError> {
    if n < 1 {
        return Err(FockError::BadTruncation(n));
    }
    let mut a = CMatrix::zeros(n + 1, n + 1);
    for k in 1..=n {
        a[(k - 1, k)] = Complex64::from((k as f64).sqrt());
    }
    Ok(OperatorMatrix(a))
}

/// H = δ A†A + Ω_R (A + A†) + G A†² A² in the frame rotating at the laser.
pub fn build_hamiltonian(p: &PhysParams, n: usize) -> Result<OperatorMatrix, FockError> {
    let a = annihilation(n)?;
    let a = a.matrix();
    let ad = a.adjoint();
    let num = &ad * a;
    let kerr = &ad * &ad * a * a;
    let h = num * Complex64::from(p.delta) + (a + &ad) * Complex64::from(p.omega_r) + kerr * Complex64::from(p.g);
    Ok(OperatorMatrix(h))
}

/// Dense generator of the master equation acting on column-major vec(ρ).
#[derive(Debug, Clone)]
pub struct Liouvillian {
    dim: usize,
    gamma: f64,
    matrix: CMatrix,
}

impl Liouvillian {
    /// Fock dimension N+1; the superoperator is dim² × dim².
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let v = &self.matrix * vec(rho);
        unvec(&v, self.dim)
    }

    /// Eigenvalues sorted by increasing modulus.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        let mut ev: Vec<Complex64> = self.matrix.clone().schur().eigenvalues().expect("complex Schur form").iter().copied().collect();
        ev.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        ev
    }
}

pub fn vec(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

pub fn unvec(v: &CVector, dim: usize) -> CMatrix {
    CMatrix::from_column_slice(dim, dim, v.as_slice())
}

pub fn build_liouvillian(p: &PhysParams, n: usize) -> Result<Liouvillian, FockError> {
    let h = build_hamiltonian(p, n)?;
    let a = annihilation(n)?;
    let (h, a) = (h.matrix(), a.matrix());
    let d = n + 1;
    let id = CMatrix::identity(d, d);
    let num = a.adjoint() * a;
    let half = Complex64::from(0.5 * p.gamma);

    let mut l = (id.kronecker(h) - h.transpose().kronecker(&id)) * (-I);
    l += (a.conjugate().kronecker(a) * Complex64::from(2.0) - id.kronecker(&num) - num.transpose().kronecker(&id)) * half;
    Ok(Liouvillian { dim: d, gamma: p.gamma, matrix: l })
}

/// Solves L vec(ρ) = 0 with the first equation replaced by Tr ρ = 1.
pub fn steady_state(l: &Liouvillian) -> Result<DensityMatrix, FockError> {
    let d = l.dim;
    let dd = d * d;
    let mut m = l.matrix.clone();
    for j in 0..dd {
        m[(0, j)] = Complex64::from(0.0);
    }
    for k in 0..d {
        m[(0, k + k * d)] = Complex64::from(1.0);
    }
    let mut rhs = CVector::zeros(dd);
    rhs[0] = Complex64::from(1.0);

    let lu = m.lu();
    let u = lu.u();
    let pivots = u.diagonal().map(|z| z.norm());
    let (pmin, pmax) = (pivots.min(), pivots.max());
    let condition = if pmin > 0.0 { pmax / pmin } else { f64::INFINITY };
    if !condition.is_finite() || condition > 1e13 {
        return Err(FockError::Singular { condition });
    }
    let x = lu.solve(&rhs).ok_or(FockError::Singular { condition })?;

    let rho = unvec(&x, d);
    let mut rho = (&rho + rho.adjoint()) * Complex64::from(0.5);
    let tr = rho.trace();
    rho /= tr;
    let residual = (&l.matrix * vec(&rho)).camax();
    if residual > 1e-10 {
        return Err(FockError::Residual { residual });
    }
    Ok(DensityMatrix(rho))
}

/// Tr(O ρ).
pub fn expectation(rho: &DensityMatrix, op: &OperatorMatrix) -> Result<Complex64, FockError> {
    if rho.dim() != op.dim() {
        return Err(FockError::DimMismatch { left: rho.dim(), right: op.dim() });
    }
    let (o, r) = (op.matrix(), rho.matrix());
    let mut acc = Complex64::from(0.0);
    for i in 0..o.nrows() {
        for j in 0..o.ncols() {
            acc += o[(i, j)] * r[(j, i)];
        }
    }
    Ok(acc)
}

/// The three equal-time moments ⟨A⟩, ⟨A†A⟩, ⟨A²⟩ of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyMoments {
    pub mean: Complex64,
    pub intensity: f64,
    pub anom: Complex64,
}

pub fn steady_moments(rho: &DensityMatrix) -> Result<SteadyMoments, FockError> {
    let a = annihilation(rho.dim() - 1)?;
    let mean = expectation(rho, &a)?;
    let intensity = expectation(rho, &a.adjoint().mul(&a))?.re;
    let anom = expectation(rho, &a.mul(&a))?;
    Ok(SteadyMoments { mean, intensity, anom })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationChoice {
    pub n: usize,
    /// Populations of levels N-1 and N in the steady state.
    pub top: [f64; 2],
}

pub const TRUNCATION_START: usize = 8;
pub const TRUNCATION_CAP: usize = 64;

/// Smallest N on the doubling schedule 8, 16, 32, 64 whose steady state
/// leaves both top levels below `tol`.
pub fn choose_truncation(p: &PhysParams, tol: f64) -> Result<TruncationChoice, FockError> {
    truncation_search(p, tol, TRUNCATION_CAP)
}

fn truncation_search(p: &PhysParams, tol: f64, cap: usize) -> Result<TruncationChoice, FockError> {
    if !(tol > 0.0 && tol <= 1e-4) {
        return Err(FockError::BadTolerance(tol));
    }
    let mut n = TRUNCATION_START;
    loop {
        let rho = steady_state(&build_liouvillian(p, n)?)?;
        let top = [rho.population(n - 1).abs(), rho.population(n).abs()];
        if top[0] < tol && top[1] < tol {
            return Ok(TruncationChoice { n, top });
        }
        if n >= cap {
            return Err(FockError::TruncationCap { cap: n, top });
        }
        n *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(g: f64, omega_r: f64, delta: f64, gamma: f64) -> PhysParams {
        PhysParams { g, omega_r, delta, gamma, f: 1.0, p_l: f64::NAN }
    }

    #[test]
    fn ladder_action() {
        let a = annihilation(2).unwrap();
        let one = CVector::from_row_slice(&[0.0.into(), 1.0.into(), 0.0.into()]);
        let two = CVector::from_row_slice(&[0.0.into(), 0.0.into(), 1.0.into()]);
        assert_eq!((a.matrix() * one)[0], Complex64::from(1.0));
        assert!(((a.matrix() * two)[1] - Complex64::from(2f64.sqrt())).norm() < 1e-15);
        assert!(matches!(annihilation(0), Err(FockError::BadTruncation(0))));
    }

    #[test]
    fn commutator_below_top_level() {
        let n = 6;
        let a = annihilation(n).unwrap();
        let a = a.matrix();
        let comm = a * a.adjoint() - a.adjoint() * a;
        for k in 0..n {
            assert!((comm[(k, k)] - Complex64::from(1.0)).norm() < 1e-14);
        }
        // truncation artifact lives in the top level only
        assert!((comm[(n, n)] - Complex64::from(-(n as f64))).norm() < 1e-13);
        let vac = DensityMatrix::fock(n + 1, 0);
        let c = expectation(&vac, &OperatorMatrix(comm)).unwrap();
        assert!((c - Complex64::from(1.0)).norm() < 1e-15);
    }

    #[test]
    fn hamiltonian_entries() {
        let h = build_hamiltonian(&params(0.0, 0.0, 0.1, 0.2), 4).unwrap();
        for k in 0..5 {
            assert!((h.matrix()[(k, k)] - Complex64::from(0.1 * k as f64)).norm() < 1e-15);
        }
        let h = build_hamiltonian(&PhysParams::demo(), 2).unwrap();
        assert!((h.matrix()[(2, 2)] - Complex64::from(0.5)).norm() < 1e-15);
        assert!((h.matrix()[(0, 1)] - Complex64::from(0.1)).norm() < 1e-15);
        assert!((h.matrix() - h.matrix().adjoint()).camax() < 1e-15);
    }

    #[test]
    fn pure_decay_of_one_exciton() {
        let l = build_liouvillian(&params(0.0, 0.0, 0.0, 0.3), 3).unwrap();
        let out = l.apply(DensityMatrix::fock(4, 1).matrix());
        assert!((out[(0, 0)] - Complex64::from(0.3)).norm() < 1e-15);
        assert!((out[(1, 1)] - Complex64::from(-0.3)).norm() < 1e-15);
        assert!(out.iter().enumerate().filter(|(i, _)| *i != 0 && *i != 5).all(|(_, z)| z.norm() < 1e-15));
    }

    #[test]
    fn undriven_steady_state_is_vacuum() {
        let l = build_liouvillian(&params(0.3, 0.0, -0.2, 0.1), 8).unwrap();
        let rho = steady_state(&l).unwrap();
        assert!((rho.population(0) - 1.0).abs() < 1e-12);
        assert!((rho.matrix() - DensityMatrix::fock(9, 0).matrix()).camax() < 1e-12);
    }

    #[test]
    fn zero_damping_is_singular() {
        let l = build_liouvillian(&params(0.1, 0.1, 0.1, 0.0), 4).unwrap();
        assert!(matches!(steady_state(&l), Err(FockError::Singular { .. })));
    }

    #[test]
    fn demo_steady_state_properties() {
        let p = PhysParams::demo();
        let l = build_liouvillian(&p, 16).unwrap();
        let rho = steady_state(&l).unwrap();
        assert!((rho.trace() - Complex64::from(1.0)).norm() < 1e-12);
        assert!(rho.hermiticity_defect() < 1e-12);
        assert!(rho.min_eigenvalue() > -1e-10);
        assert!((&l.matrix * vec(rho.matrix())).camax() < 1e-10);
        let m = steady_moments(&rho).unwrap();
        let linear_bound = p.omega_r.powi(2) / (p.gamma / 2.0).powi(2);
        assert!(m.intensity > 0.0 && m.intensity < linear_bound, "{}", m.intensity);
    }

    #[test]
    fn expectation_checks_dims() {
        let rho = DensityMatrix::fock(3, 0);
        let a = annihilation(3).unwrap();
        assert!(matches!(expectation(&rho, &a), Err(FockError::DimMismatch { .. })));
        let a = annihilation(2).unwrap();
        assert_eq!(expectation(&rho, &a.adjoint().mul(&a)).unwrap(), Complex64::from(0.0));
    }

    #[test]
    fn adaptive_truncation() {
        let vac = choose_truncation(&params(0.2, 0.0, 0.1, 0.2), 1e-10).unwrap();
        assert_eq!(vac.n, 8);
        assert_eq!(vac.top, [0.0, 0.0]);
        let demo = choose_truncation(&PhysParams::demo(), 1e-10).unwrap();
        assert!(demo.n <= 32 && demo.top[1] < 1e-10);
        assert!(matches!(choose_truncation(&PhysParams::demo(), 0.0), Err(FockError::BadTolerance(_))));
        assert!(matches!(choose_truncation(&PhysParams::demo(), 1e-3), Err(FockError::BadTolerance(_))));
    }

    #[test]
    fn truncation_cap_reported() {
        // linear drive without Kerr blockade: |α|² = 16 does not fit in 16 levels
        let p = params(0.0, 0.4, 0.0, 0.2);
        match truncation_search(&p, 1e-10, 16) {
            Err(FockError::TruncationCap { cap, top }) => {
                assert_eq!(cap, 16);
                assert!(top[1] > 1e-10);
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }
}
