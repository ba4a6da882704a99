//! Physical parameter sets and their interpolation in pump power.
//!
//! Energies and rates are in meV with ħ = 1, so times come out in ħ/meV
//! (≈ 0.658 ps). Pump power is carried in µW as metadata only.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spline::NaturalCubicSpline;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("parameter table needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("pump powers must be strictly increasing (row {row}: {prev} µW then {next} µW)")]
    NotIncreasing { row: usize, prev: f64, next: f64 },
    #[error("pump power {p_l} µW outside the table range [{min}, {max}] µW")]
    OutOfRange { p_l: f64, min: f64, max: f64 },
}

/// Fit parameters of the collective exciton model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    /// Exciton-exciton (Kerr) coupling G.
    pub g: f64,
    /// Collective Rabi frequency Ω_R.
    pub omega_r: f64,
    /// Exciton detuning from the laser, ω_x = ω_L + δ.
    pub delta: f64,
    /// Spontaneous emission rate Γ.
    pub gamma: f64,
    /// Oscillator strength entering the susceptibility.
    pub f: f64,
    /// Pump power in µW. Never enters the dynamics.
    pub p_l: f64,
}

impl PhysParams {
    pub fn new(g: f64, omega_r: f64, delta: f64, gamma: f64, f: f64, p_l: f64) -> Result<Self, ModelError> {
        let p = Self { g, omega_r, delta, gamma, f, p_l };
        p.validate()?;
        Ok(p)
    }

    /// Parameters of the spectrum demonstration (G = 0.15, Γ = 0.2, Ω_R = 0.1,
    /// δ = 0.1, f = 1, all meV). Not an anchor of the pump-power table.
    pub fn demo() -> Self {
        Self { g: 0.15, omega_r: 0.1, delta: 0.1, gamma: 0.2, f: 1.0, p_l: f64::NAN }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let check = |name, value: f64, ok: bool, reason| {
            if ok {
                Ok(())
            } else {
                Err(ModelError::InvalidParam { name, value, reason })
            }
        };
        check("gamma", self.gamma, self.gamma.is_finite() && self.gamma > 0.0, "must be > 0")?;
        check("omega_r", self.omega_r, self.omega_r.is_finite() && self.omega_r >= 0.0, "must be >= 0")?;
        check("f", self.f, self.f.is_finite() && self.f > 0.0, "must be > 0")?;
        check("g", self.g, self.g.is_finite() && self.g >= 0.0, "must be >= 0")?;
        check("delta", self.delta, self.delta.is_finite(), "must be finite")?;
        Ok(())
    }
}

/// Anchor rows of fitted parameters, ordered by pump power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamTable {
    rows: Vec<PhysParams>,
}

impl ParamTable {
    pub fn new(rows: Vec<PhysParams>) -> Result<Self, ModelError> {
        if rows.len() < 2 {
            return Err(ModelError::TooFewRows(rows.len()));
        }
        for r in &rows {
            r.validate()?;
            if !r.p_l.is_finite() {
                return Err(ModelError::InvalidParam {
                    name: "p_l",
                    value: r.p_l,
                    reason: "anchor pump power must be finite",
                });
            }
        }
        for (i, w) in rows.windows(2).enumerate() {
            if w[1].p_l <= w[0].p_l {
                return Err(ModelError::NotIncreasing { row: i + 1, prev: w[0].p_l, next: w[1].p_l });
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[PhysParams] {
        &self.rows
    }

    pub fn p_l_range(&self) -> (f64, f64) {
        (self.rows[0].p_l, self.rows[self.rows.len() - 1].p_l)
    }
}

/// The three measured anchors at 100, 150 and 310 µW.
pub fn builtin_table() -> ParamTable {
    let row = |p_l, g, omega_r, delta, f, gamma| PhysParams { g, omega_r, delta, gamma, f, p_l };
    ParamTable {
        rows: vec![
            row(100.0, 0.10, 0.045, 0.08, 1.0, 0.15),
            row(150.0, 0.205, 0.075, 0.08, 1.0, 0.20),
            row(310.0, 0.45, 0.16, 0.09, 0.9, 0.22),
        ],
    }
}

/// Independent natural cubic splines of every parameter against pump power.
#[derive(Debug, Clone)]
pub struct ParamInterpolator {
    range: (f64, f64),
    g: NaturalCubicSpline,
    omega_r: NaturalCubicSpline,
    delta: NaturalCubicSpline,
    gamma: NaturalCubicSpline,
    f: NaturalCubicSpline,
}

impl ParamInterpolator {
    pub fn new(table: &ParamTable) -> Self {
        let xs: Vec<f64> = table.rows.iter().map(|r| r.p_l).collect();
        let spline = |get: fn(&PhysParams) -> f64| {
            let ys: Vec<f64> = table.rows.iter().map(get).collect();
            NaturalCubicSpline::new(&xs, &ys).expect("table validated on construction")
        };
        Self {
            range: table.p_l_range(),
            g: spline(|r| r.g),
            omega_r: spline(|r| r.omega_r),
            delta: spline(|r| r.delta),
            gamma: spline(|r| r.gamma),
            f: spline(|r| r.f),
        }
    }

    pub fn at(&self, p_l: f64) -> Result<PhysParams, ModelError> {
        let (min, max) = self.range;
        if !(p_l >= min && p_l <= max) {
            return Err(ModelError::OutOfRange { p_l, min, max });
        }
        let p = PhysParams {
            g: self.g.eval(p_l),
            omega_r: self.omega_r.eval(p_l),
            delta: self.delta.eval(p_l),
            gamma: self.gamma.eval(p_l),
            f: self.f.eval(p_l),
            p_l,
        };
        p.validate()?;
        Ok(p)
    }
}

pub fn interpolate_params(table: &ParamTable, p_l: f64) -> Result<PhysParams, ModelError> {
    ParamInterpolator::new(table).at(p_l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_rows() {
        let t = builtin_table();
        assert_eq!(t.rows().len(), 3);
        assert_eq!(t.rows()[0].g, 0.10);
        assert_eq!(t.rows()[2].gamma, 0.22);
        assert_eq!(t.rows()[1].omega_r, 0.075);
        assert_eq!(t.rows()[2].f, 0.9);
        assert!(ParamTable::new(t.rows().to_vec()).is_ok());
    }

    #[test]
    fn anchors_reproduced() {
        let t = builtin_table();
        for row in t.rows() {
            let p = interpolate_params(&t, row.p_l).unwrap();
            for (a, b) in [(p.g, row.g), (p.omega_r, row.omega_r), (p.delta, row.delta), (p.gamma, row.gamma), (p.f, row.f)] {
                assert!((a - b).abs() <= 1e-15 * b.abs().max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn no_extrapolation() {
        let t = builtin_table();
        assert!(matches!(interpolate_params(&t, 99.9), Err(ModelError::OutOfRange { .. })));
        assert!(matches!(interpolate_params(&t, 310.1), Err(ModelError::OutOfRange { .. })));
        assert!(interpolate_params(&t, f64::NAN).is_err());
    }

    #[test]
    fn table_validation() {
        let r = builtin_table().rows()[0];
        assert_eq!(ParamTable::new(vec![r]), Err(ModelError::TooFewRows(1)));
        assert!(matches!(ParamTable::new(vec![r, r]), Err(ModelError::NotIncreasing { .. })));
        let bad = PhysParams { gamma: 0.0, ..r };
        assert!(PhysParams::new(bad.g, bad.omega_r, bad.delta, bad.gamma, bad.f, bad.p_l).is_err());
        assert!(PhysParams { omega_r: -0.1, ..r }.validate().is_err());
        assert!(PhysParams { f: 0.0, ..r }.validate().is_err());
        assert!(PhysParams { delta: -3.0, ..r }.validate().is_ok());
    }
}
