//! The spectrum and sweep commands and their output files.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use qwfluor_core::filter::MomentSet;
use qwfluor_core::observables::ObservableRow;
use qwfluor_core::pipeline::{evaluate_point, resolve_truncation, run_sweep, SweepCrossings, SweepVerdicts};
use qwfluor_core::spectra::{detector_convolve, emission_spectrum, qw_spectrum, OmegaGrid, Spectrum};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{Format, RunConfig};

pub fn config_hash(cfg: &RunConfig) -> String {
    let digest = Sha256::digest(cfg.to_toml().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<fs::File>> {
    let path = dir.join(name);
    let f = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn grid_json(g: &OmegaGrid) -> serde_json::Value {
    json!({ "start_meV": g.start, "step_meV": g.step, "len": g.len })
}

fn write_spectrum_csv(dir: &Path, name: &str, s: &Spectrum) -> Result<()> {
    let mut w = create(dir, name)?;
    writeln!(
        w,
        "# delta_weight={:.16e} start={:.16e} step={:.16e} len={}",
        s.delta_weight, s.grid.start, s.grid.step, s.grid.len
    )?;
    writeln!(w, "omega_meV,density")?;
    for (omega, d) in s.grid.iter().zip(&s.density) {
        writeln!(w, "{omega:.16e},{d:.16e}")?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(dir: &Path, value: &serde_json::Value) -> Result<()> {
    let mut w = create(dir, "report.json")?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn prepare_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.output.dir.clone();
    fs::create_dir_all(&dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    Ok(dir)
}

#[derive(Debug, Serialize)]
pub struct SpectrumSummary {
    pub truncation: usize,
    pub moments: MomentSet,
    pub row: ObservableRow,
    pub grid: OmegaGrid,
    pub spectrum_x_peak: f64,
    pub absorption_peak: f64,
    pub spectrum_q_peak: f64,
}

fn argmax(s: &Spectrum) -> f64 {
    let (i, _) = s.density.iter().enumerate().fold((0, f64::NEG_INFINITY), |best, (i, &d)| if d > best.1 { (i, d) } else { best });
    s.grid.omega(i)
}

/// Emits spectrum_x.csv, absorption.csv, spectrum_q.csv and report.json.
pub fn run_spectrum(cfg: &RunConfig) -> Result<SpectrumSummary> {
    let p = cfg.params()?;
    let numerics = cfg.numerics();
    let n = resolve_truncation(&p, &numerics).context("fock")?;
    log::info!("spectrum: N = {n}");
    let r = evaluate_point(&p, n, &numerics, &cfg.filter.absorption)?;

    let (lo, hi) = numerics.window(&p);
    let grid = OmegaGrid::commensurate_window(lo, hi, cfg.spectra.grid_points, r.c1.grid.step()).context("spectra")?;
    let sx = emission_spectrum(&r.c1, &grid).context("spectra")?;
    let sq = qw_spectrum(&sx, &r.absorption);
    let (width, shape) = (cfg.spectra.detector_width, cfg.spectra.detector_shape);
    let sx = detector_convolve(&sx, width, shape).context("spectra")?;
    let sq = detector_convolve(&sq, width, shape).context("spectra")?;
    let absorption = Spectrum { grid, density: grid.iter().map(|w| r.absorption.absorption(w)).collect(), delta_weight: 0.0, clipped: 0 };

    let summary = SpectrumSummary {
        truncation: n,
        moments: r.moments,
        row: r.row,
        grid,
        spectrum_x_peak: argmax(&sx),
        absorption_peak: argmax(&absorption),
        spectrum_q_peak: argmax(&sq),
    };

    let dir = prepare_dir(cfg)?;
    if cfg.wants(Format::Csv) {
        write_spectrum_csv(&dir, "spectrum_x.csv", &sx)?;
        let mut w = create(&dir, "absorption.csv")?;
        writeln!(w, "# start={:.16e} step={:.16e} len={}", grid.start, grid.step, grid.len)?;
        writeln!(w, "omega_meV,absorption")?;
        for (omega, a) in grid.iter().zip(&absorption.density) {
            writeln!(w, "{omega:.16e},{a:.16e}")?;
        }
        w.flush()?;
        write_spectrum_csv(&dir, "spectrum_q.csv", &sq)?;
    }
    if cfg.wants(Format::Json) {
        write_json(
            &dir,
            &json!({
                "command": "spectrum",
                "config_sha256": config_hash(cfg),
                "config": cfg,
                "params": p,
                "truncation": n,
                "tau_grid": { "step": r.c1.grid.step(), "len": r.c1.grid.len() },
                "omega_grid": grid_json(&grid),
                "absorption": r.absorption,
                "clipped_samples": r.spectrum_x.clipped,
                "moments": summary.moments,
                "observables": summary.row,
                "peaks_meV": {
                    "spectrum_x": summary.spectrum_x_peak,
                    "absorption": summary.absorption_peak,
                    "spectrum_q": summary.spectrum_q_peak,
                },
            }),
        )?;
    }
    Ok(summary)
}

#[derive(Debug, Serialize)]
pub struct SweepSummary {
    pub truncation: usize,
    pub points: usize,
    pub crossings: SweepCrossings,
    pub verdicts: SweepVerdicts,
}

const SWEEP_HEADER: &str = "p_l_uW,var_x,var_q,ncl_x,ncl_q,dcoh_x,dcoh_q,intensity_x,intensity_q,\
phase_mean_sq,phase_anom_x,phase_anom_q,gap_x,gap_q";

/// Emits sweep.csv and report.json.
pub fn run_sweep_cmd(cfg: &RunConfig) -> Result<SweepSummary> {
    let table = cfg.table()?;
    let spec = cfg.sweep_spec();
    let result = run_sweep(&table, &spec, &cfg.numerics(), &cfg.filter.absorption)?;
    log::info!("sweep: {} points at N = {}", result.rows.len(), result.truncation);

    let dir = prepare_dir(cfg)?;
    if cfg.wants(Format::Csv) {
        let mut w = create(&dir, "sweep.csv")?;
        writeln!(w, "{SWEEP_HEADER}")?;
        for (r, m) in result.rows.iter().zip(&result.moments) {
            let cols = [
                r.p_l, r.var_x, r.var_q, r.ncl_x, r.ncl_q, r.dcoh_x, r.dcoh_q, m.intensity_x, m.intensity_q,
                r.phase_mean_sq, r.phase_anom_x, r.phase_anom_q, r.gap_x, r.gap_q,
            ];
            let line: Vec<String> = cols.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        w.flush()?;
    }
    if cfg.wants(Format::Json) {
        write_json(
            &dir,
            &json!({
                "command": "sweep",
                "config_sha256": config_hash(cfg),
                "config": cfg,
                "table": table.rows(),
                "truncation": result.truncation,
                "points": result.rows.len(),
                "crossings_uW": result.crossings,
                "verdicts": result.verdicts,
                "all_claims_hold": result.verdicts.all_hold(),
            }),
        )?;
    }
    Ok(SweepSummary { truncation: result.truncation, points: result.rows.len(), crossings: result.crossings, verdicts: result.verdicts })
}
