//! Run orchestration: config in, data files and a manifest out.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::config::{MatsubaraSetting, Mode, RunConfig, ScanParameter};
use crate::error::{HeomError, Result};
use crate::hierarchy::{max_deviation, propagate, Diagnostics, FieldGrid, Heom, Trajectory};
use crate::oct::{self, ControlStats};
use crate::output::{self, Csv, OutputSet};
use crate::quadrature::correlation_by_quadrature;
use crate::units;
use crate::witness::{witness_suite, WitnessReport};

/// Relative tolerance of the reference quadrature for C(0).
const QUADRATURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Attach the witness suite to a propagation or control run.
    pub witness: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct StageDiagnostics {
    pub slots: usize,
    pub n_cor: usize,
    pub max_trace_defect: f64,
    pub max_hermiticity_defect: f64,
    /// Trace drift exceeded `tolerances.trace_monitor`.
    pub trace_monitor_exceeded: bool,
    pub rk_accepted: usize,
    pub rk_rejected: usize,
    pub control: Option<ControlStats>,
    pub cutoff_time_fs: Option<f64>,
    pub volume_identity_max_rel_error: Option<f64>,
    pub max_anti_hermitian: Option<f64>,
    /// `|C(0) - quadrature| / |quadrature|` for the bath expansion.
    pub c0_rel_error: Option<f64>,
    /// Wall time per scan value, seconds (kept out of `scan.csv`).
    pub scan_runtime_s: Vec<f64>,
}

impl StageDiagnostics {
    fn absorb(&mut self, d: &Diagnostics) {
        self.max_trace_defect = self.max_trace_defect.max(d.max_trace_defect);
        self.max_hermiticity_defect = self.max_hermiticity_defect.max(d.max_hermiticity_defect);
        self.rk_accepted += d.steps.accepted;
        self.rk_rejected += d.steps.rejected;
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub version: &'static str,
    pub mode: Mode,
    pub config: RunConfig,
    pub threads: usize,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub diagnostics: StageDiagnostics,
}

/// Executes `mode` and writes every output plus `manifest.json` into `out_dir`.
pub fn run(mode: Mode, cfg: &RunConfig, out_dir: &Path, opts: RunOptions) -> Result<RunManifest> {
    cfg.check_mode(mode)?;
    let start = Instant::now();
    let mut out = OutputSet::new(out_dir)?;
    let mut diag = StageDiagnostics::default();
    match mode {
        Mode::Propagate => run_propagate(cfg, &mut out, &mut diag, opts.witness)?,
        Mode::Witness => run_propagate(cfg, &mut out, &mut diag, true)?,
        Mode::Optimize => run_optimize(cfg, &mut out, &mut diag, opts.witness)?,
        Mode::Scan => run_scan(cfg, &mut out, &mut diag)?,
        Mode::Correlation => run_correlation(cfg, &mut out, &mut diag)?,
    }
    diag.trace_monitor_exceeded = diag.max_trace_defect > cfg.tolerances.trace_monitor;
    if diag.trace_monitor_exceeded {
        log::warn!(
            "trace drift {:.3e} exceeds the monitor threshold {:.1e}",
            diag.max_trace_defect,
            cfg.tolerances.trace_monitor
        );
    }
    let mut outputs = out.files.clone();
    outputs.push("manifest.json".into());
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION"),
        mode,
        config: cfg.clone(),
        threads: rayon::current_num_threads(),
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs,
        diagnostics: diag,
    };
    out.json("manifest.json", &manifest)?;
    Ok(manifest)
}

fn build(cfg: &RunConfig, diag: &mut StageDiagnostics) -> Result<Heom> {
    let heom = cfg.heom()?;
    diag.slots = heom.layout().len();
    diag.n_cor = heom.expansion().n_cor();
    log::info!("hierarchy: {} modes, level {}, {} slots", diag.n_cor, heom.layout().max_level(), diag.slots);
    Ok(heom)
}

fn propagate_cfg(cfg: &RunConfig, heom: &Heom, field: &FieldGrid) -> Result<Trajectory> {
    propagate(heom, heom.initial_state(cfg.initial_rho(), field.t0), field, cfg.tolerances())
}

fn attach_witness(
    cfg: &RunConfig,
    heom: &Heom,
    field: &FieldGrid,
    rho0: &crate::ops::Op2,
    out: &mut OutputSet,
    diag: &mut StageDiagnostics,
) -> Result<WitnessReport> {
    let report = witness_suite(heom, rho0, field, cfg.tolerances(), cfg.tolerances.rcond_cutoff)?;
    diag.absorb(&report.map.diagnostics);
    diag.cutoff_time_fs = report.decomposition.cutoff_time.map(units::au_to_fs);
    diag.volume_identity_max_rel_error = Some(report.identity.max_rel_error);
    diag.max_anti_hermitian = Some(report.decomposition.max_anti_hermitian);
    if report.identity.max_rel_error > 1e-3 {
        log::warn!("volume identity off by {:.3e} (relative)", report.identity.max_rel_error);
    }
    out.csv("witness.csv", &output::witness_csv(&report))?;
    out.json("decomposition.json", &output::decomposition_json(&report, cfg.witness.json_samples))?;
    Ok(report)
}

fn run_propagate(cfg: &RunConfig, out: &mut OutputSet, diag: &mut StageDiagnostics, witness: bool) -> Result<()> {
    let heom = build(cfg, diag)?;
    let field = cfg.field()?;
    let traj = propagate_cfg(cfg, &heom, &field)?;
    diag.absorb(&traj.diagnostics);
    out.csv("trajectory.csv", &output::trajectory_csv(&traj))?;
    if witness {
        attach_witness(cfg, &heom, &field, &cfg.initial_rho(), out, diag)?;
    }
    Ok(())
}

fn run_optimize(cfg: &RunConfig, out: &mut OutputSet, diag: &mut StageDiagnostics, witness: bool) -> Result<()> {
    let heom = build(cfg, diag)?;
    let problem = cfg.control_problem()?;
    let result = oct::optimize(&heom, &problem, cfg.tolerances())?;
    diag.absorb(&result.trajectory.diagnostics);
    diag.control = Some(result.stats);

    out.csv("field_optimal.csv", &output::field_csv(&result.field))?;
    let mut fid = Csv::new(&["iter", "fidelity", "max_amp_au"]);
    for (i, (f, a)) in result.fidelity.iter().zip(&result.max_amp).enumerate() {
        fid.indexed_row(i, &[*f, *a]);
    }
    out.csv("fidelity.csv", &fid)?;
    out.csv("trajectory.csv", &output::trajectory_csv(&result.trajectory))?;
    if witness {
        attach_witness(cfg, &heom, &result.field, &problem.rho_init, out, diag)?;
    }
    Ok(())
}

fn c0_rel_error(cfg: &RunConfig) -> Result<Option<f64>> {
    let Some(spec) = cfg.bath_spec()? else { return Ok(None) };
    let exp = cfg.expansion()?;
    let quad = correlation_by_quadrature(&spec, 0.0, QUADRATURE_TOL);
    if !quad.converged {
        log::warn!("C(0) quadrature did not reach its tolerance (error estimate {:.3e})", quad.error);
    }
    Ok(Some((exp.c0() - quad.value).norm() / quad.value.norm()))
}

fn run_correlation(cfg: &RunConfig, out: &mut OutputSet, diag: &mut StageDiagnostics) -> Result<()> {
    let exp = cfg.expansion()?;
    if exp.n_cor() == 0 {
        return Err(HeomError::Config("correlation export needs a [bath] section".into()));
    }
    diag.n_cor = exp.n_cor();
    diag.c0_rel_error = c0_rel_error(cfg)?;
    let grid = FieldGrid::zeros(cfg.t_final_au(), cfg.dt_au());
    let mut csv = Csv::new(&["t_fs", "Re_C_au", "Im_C_au", "Abs_C_au"]);
    for i in 0..=grid.len() {
        let t = grid.time(i);
        let c = crate::bath::correlation_function(t, &exp)?;
        csv.row(&[units::au_to_fs(t), c.re, c.im, c.norm()]);
    }
    out.csv("correlation.csv", &csv)
}

/// Copy of `cfg` with the scanned parameter set to `value`.
fn scan_variant(cfg: &RunConfig, parameter: ScanParameter, value: f64) -> Result<RunConfig> {
    let mut c = cfg.clone();
    c.scan = None;
    match parameter {
        ScanParameter::HeomLevel => c.system.heom_level = value as usize,
        ScanParameter::Matsubara => {
            let bath = c
                .bath
                .as_mut()
                .ok_or_else(|| HeomError::Config("scanning matsubara needs a [bath] section".into()))?;
            bath.matsubara = MatsubaraSetting::Count(value as usize);
        }
        ScanParameter::DipoleOffdiag => {
            c.system.dipole_au[0][1] = value;
            c.system.dipole_au[1][0] = value;
        }
        ScanParameter::AmpCap => {
            let oct = c
                .oct
                .as_mut()
                .ok_or_else(|| HeomError::Config("scanning amp_cap needs an [oct] section".into()))?;
            oct.amp_cap_au = value;
        }
    }
    c.validate()?;
    Ok(c)
}

/// One row per value: `value, rho11_final, fidelity, max_deviation,
/// c0_rel_error`. Deviations are against the run for the last value;
/// fidelity is `nan` without an `[oct]` section.
fn run_scan(cfg: &RunConfig, out: &mut OutputSet, diag: &mut StageDiagnostics) -> Result<()> {
    let scan = cfg.scan.as_ref().ok_or_else(|| HeomError::Config("scan needs a [scan] section".into()))?;
    let mut runs = Vec::with_capacity(scan.values.len());
    for &value in &scan.values {
        let started = Instant::now();
        let variant = scan_variant(cfg, scan.parameter, value)?;
        let heom = variant.heom()?;
        diag.slots = diag.slots.max(heom.layout().len());
        diag.n_cor = diag.n_cor.max(heom.expansion().n_cor());
        let (traj, fidelity) = if variant.oct.is_some() {
            let problem = variant.control_problem()?;
            let result = oct::optimize(&heom, &problem, variant.tolerances())?;
            let f = *result.fidelity.last().expect("history starts with the guess");
            let stats = diag.control.get_or_insert_with(ControlStats::default);
            stats.iterations += result.stats.iterations;
            stats.cap_events += result.stats.cap_events;
            stats.monotonicity_warnings += result.stats.monotonicity_warnings;
            (result.trajectory, f)
        } else {
            (propagate_cfg(&variant, &heom, &variant.field()?)?, f64::NAN)
        };
        diag.absorb(&traj.diagnostics);
        let c0 = c0_rel_error(&variant)?.unwrap_or(f64::NAN);
        diag.scan_runtime_s.push(started.elapsed().as_secs_f64());
        log::info!("scan value {value}: done in {:.2} s", started.elapsed().as_secs_f64());
        runs.push((value, traj, fidelity, c0));
    }
    let reference = &runs.last().expect("scan values are non-empty").1;
    let mut csv = Csv::new(&["value", "rho11_final", "fidelity", "max_deviation", "c0_rel_error"]);
    for (value, traj, fidelity, c0) in &runs {
        if traj.samples.len() != reference.samples.len() {
            return Err(HeomError::InvalidState("scan runs use different grids".into()));
        }
        csv.row(&[*value, traj.final_rho()[(0, 0)].re, *fidelity, max_deviation(traj, reference), *c0]);
    }
    out.csv("scan.csv", &csv)
}
