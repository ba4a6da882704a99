//! Layered run configuration: TOML file, then the output-directory
//! environment variable, then command-line flags.

use std::path::{Path, PathBuf};

use qwfluor_core::model::{builtin_table, ModelError, ParamTable, PhysParams};
use qwfluor_core::pipeline::{AbsorptionChoice, Numerics, SweepSpec};
use qwfluor_core::spectra::DetectorShape;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const OUT_DIR_ENV: &str = "QWFLUOR_OUT_DIR";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Toml(#[from] toml::de::Error),
    #[error("override `{0}` is not of the form key.path=value")]
    BadOverride(String),
    #[error("override `{key}`: `{segment}` is not a table")]
    NotATable { key: String, segment: String },
    #[error("{key} = {value}: must be {range}")]
    Range { key: &'static str, value: f64, range: &'static str },
    #[error("model.table: {0}")]
    Table(String),
    #[error("model: {0}")]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub g: f64,
    pub omega_r: f64,
    pub delta: f64,
    pub gamma: f64,
    pub f: f64,
    /// CSV with header p_l,g,omega_r,delta,f,gamma; the built-in table when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
    pub p_l_min: f64,
    pub p_l_max: f64,
    pub p_l_step: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let p = PhysParams::demo();
        Self {
            g: p.g,
            omega_r: p.omega_r,
            delta: p.delta,
            gamma: p.gamma,
            f: p.f,
            table: None,
            p_l_min: 100.0,
            p_l_max: 310.0,
            p_l_step: 2.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FockSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
    pub truncation_tol: f64,
}

impl Default for FockSection {
    fn default() -> Self {
        Self { truncation: None, truncation_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QrtSection {
    /// τ_max in units of 1/Γ.
    pub tau_max_gammas: f64,
    /// Upper bound on dτ in units of 1/Γ.
    pub dtau_gammas: f64,
}

impl Default for QrtSection {
    fn default() -> Self {
        let n = Numerics::default();
        Self { tau_max_gammas: n.tau_max_gammas, dtau_gammas: n.dtau_gammas }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectraSection {
    /// Half-width of the output window around δ, in units of Γ.
    pub window_gammas: f64,
    pub grid_points: usize,
    /// Detector line width Γ_f in meV.
    pub detector_width: f64,
    pub detector_shape: DetectorShape,
}

impl Default for SpectraSection {
    fn default() -> Self {
        Self {
            window_gammas: Numerics::default().window_gammas,
            grid_points: 1 << 14,
            detector_width: 0.0107,
            detector_shape: DetectorShape::Lorentzian,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSection {
    pub absorption: AbsorptionChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservablesSection {
    /// Bisection resolution of zero crossings, µW.
    pub crossing_resolution: f64,
}

impl Default for ObservablesSection {
    fn default() -> Self {
        Self { crossing_resolution: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), formats: vec![Format::Csv, Format::Json] }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub fock: FockSection,
    pub qrt: QrtSection,
    pub spectra: SpectraSection,
    pub filter: FilterSection,
    pub observables: ObservablesSection,
    pub output: OutputSection,
}

/// Parses a scalar override value as TOML, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

fn apply_override(root: &mut toml::Table, spec: &str) -> Result<(), ConfigError> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| ConfigError::BadOverride(spec.into()))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::BadOverride(spec.into()));
    }
    let mut table = root;
    for seg in &parts[..parts.len() - 1] {
        let entry = table.entry(seg.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| ConfigError::NotATable { key: key.into(), segment: seg.to_string() })?;
    }
    table.insert(parts[parts.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

/// Sources of one resolved configuration, lowest precedence first.
#[derive(Debug, Default, Clone)]
pub struct Layers {
    pub file: Option<String>,
    pub env_out_dir: Option<String>,
    pub overrides: Vec<String>,
    pub out_dir: Option<PathBuf>,
}

impl Layers {
    pub fn from_path(path: Option<&Path>) -> Result<Self, ConfigError> {
        let file = match path {
            Some(p) => Some(std::fs::read_to_string(p).map_err(|source| ConfigError::Read { path: p.into(), source })?),
            None => None,
        };
        Ok(Self { file, ..Default::default() })
    }

    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let mut root: toml::Table = match &self.file {
            Some(text) => text.parse()?,
            None => toml::Table::new(),
        };
        if let Some(dir) = &self.env_out_dir {
            apply_override(&mut root, &format!("output.dir={}", toml::Value::String(dir.clone())))?;
        }
        for o in &self.overrides {
            apply_override(&mut root, o)?;
        }
        if let Some(dir) = &self.out_dir {
            let dir = dir.to_string_lossy().into_owned();
            apply_override(&mut root, &format!("output.dir={}", toml::Value::String(dir)))?;
        }
        let cfg: RunConfig = toml::Value::Table(root).try_into()?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn positive(key: &'static str, value: f64) -> Result<(), ConfigError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::Range { key, value, range: "finite and > 0" })
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params()?;
        let m = &self.model;
        positive("model.p_l_step", m.p_l_step)?;
        if !(m.p_l_min.is_finite() && m.p_l_max >= m.p_l_min) {
            return Err(ConfigError::Range { key: "model.p_l_max", value: m.p_l_max, range: ">= model.p_l_min" });
        }
        if let Some(n) = self.fock.truncation {
            if n < 2 {
                return Err(ConfigError::Range { key: "fock.truncation", value: n as f64, range: ">= 2" });
            }
        }
        let tol = self.fock.truncation_tol;
        if !(tol > 0.0 && tol <= 1e-4) {
            return Err(ConfigError::Range { key: "fock.truncation_tol", value: tol, range: "in (0, 1e-4]" });
        }
        positive("qrt.tau_max_gammas", self.qrt.tau_max_gammas)?;
        positive("qrt.dtau_gammas", self.qrt.dtau_gammas)?;
        positive("spectra.window_gammas", self.spectra.window_gammas)?;
        positive("spectra.detector_width", self.spectra.detector_width)?;
        if self.spectra.grid_points < 16 {
            return Err(ConfigError::Range { key: "spectra.grid_points", value: self.spectra.grid_points as f64, range: ">= 16" });
        }
        positive("observables.crossing_resolution", self.observables.crossing_resolution)?;
        match self.filter.absorption {
            AbsorptionChoice::ThinSheet { kappa: Some(k) } => {
                let limit = 0.5 * m.gamma / m.f;
                if !(k > 0.0 && k < limit) {
                    return Err(ConfigError::Range { key: "filter.absorption.kappa", value: k, range: "in (0, Γ/(2f))" });
                }
            }
            AbsorptionChoice::Lorentzian { a_peak } if !(a_peak > 0.0 && a_peak <= 1.0) => {
                return Err(ConfigError::Range { key: "filter.absorption.a_peak", value: a_peak, range: "in (0, 1]" });
            }
            AbsorptionChoice::Constant { value } if !(0.0..=1.0).contains(&value) => {
                return Err(ConfigError::Range { key: "filter.absorption.value", value, range: "in [0, 1]" });
            }
            _ => {}
        }
        Ok(())
    }

    /// Explicit parameter set of the spectrum command.
    pub fn params(&self) -> Result<PhysParams, ConfigError> {
        let m = &self.model;
        Ok(PhysParams::new(m.g, m.omega_r, m.delta, m.gamma, m.f, f64::NAN)?)
    }

    pub fn numerics(&self) -> Numerics {
        Numerics {
            truncation: self.fock.truncation,
            truncation_tol: self.fock.truncation_tol,
            tau_max_gammas: self.qrt.tau_max_gammas,
            dtau_gammas: self.qrt.dtau_gammas,
            window_gammas: self.spectra.window_gammas,
        }
    }

    pub fn sweep_spec(&self) -> SweepSpec {
        SweepSpec {
            min: self.model.p_l_min,
            max: self.model.p_l_max,
            step: self.model.p_l_step,
            crossing_resolution: self.observables.crossing_resolution,
        }
    }

    pub fn table(&self) -> Result<ParamTable, ConfigError> {
        match &self.model.table {
            None => Ok(builtin_table()),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.clone(), source })?;
                parse_table_csv(&text)
            }
        }
    }

    pub fn wants(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }

    /// Canonical TOML form; parsing it back yields an identical config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }
}

const TABLE_HEADER: [&str; 6] = ["p_l", "g", "omega_r", "delta", "f", "gamma"];

pub fn parse_table_csv(text: &str) -> Result<ParamTable, ConfigError> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header: Vec<&str> = lines.next().ok_or_else(|| ConfigError::Table("empty file".into()))?.split(',').map(str::trim).collect();
    if header != TABLE_HEADER {
        return Err(ConfigError::Table(format!("header must be {}", TABLE_HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let v: Vec<f64> = line
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| ConfigError::Table(format!("row {}: {e}", i + 1)))?;
        if v.len() != 6 {
            return Err(ConfigError::Table(format!("row {}: expected 6 columns, got {}", i + 1, v.len())));
        }
        rows.push(PhysParams::new(v[1], v[2], v[3], v[5], v[4], v[0])?);
    }
    Ok(ParamTable::new(rows)?)
}
