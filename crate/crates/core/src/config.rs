//! Run configuration files (TOML).
//!
//! Every dimensional key carries its unit as a suffix (`_ev`, `_fs`, `_au`,
//! `_k`, `_ev5`). Parsing is strict: unknown keys are rejected, and a known
//! quantity written without its suffix gets a dedicated error naming the
//! expected key.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bath::{correlation_expansion, BathSpec, CorrelationExpansion, LorentzianTerm, MatsubaraCount};
use crate::error::{HeomError, Result};
use crate::hierarchy::{FieldGrid, Heom, RkTolerances, SystemSpec, DEFAULT_MAX_SLOTS};
use crate::oct::{ControlProblem, DEFAULT_AMP_CAP};
use crate::ops::{self, Op2};
use crate::units;
use crate::witness::DEFAULT_RCOND_CUTOFF;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Propagate,
    Witness,
    Optimize,
    Scan,
    Correlation,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Propagate => "propagate",
            Mode::Witness => "witness",
            Mode::Optimize => "optimize",
            Mode::Scan => "scan",
            Mode::Correlation => "correlation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Optional; when present it must agree with the subcommand.
    pub mode: Option<Mode>,
    /// Default output directory when `--out` is not given.
    pub output_dir: Option<PathBuf>,
    /// Recorded in the manifest; seeds the randomized test helpers.
    #[serde(default)]
    pub seed: u64,
    pub system: SystemSection,
    /// Omitted for a closed system.
    pub bath: Option<BathSection>,
    #[serde(default)]
    pub field: FieldSection,
    #[serde(default)]
    pub witness: WitnessSection,
    pub oct: Option<OctSection>,
    pub scan: Option<ScanSection>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    #[serde(rename = "state_1")]
    State1,
    #[serde(rename = "state_2")]
    State2,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub delta_ev: f64,
    pub w_ev: f64,
    /// Real symmetric dipole matrix; defaults to sigma_z.
    #[serde(default = "sigma_z_rows")]
    pub dipole_au: [[f64; 2]; 2],
    pub t_final_fs: f64,
    #[serde(default = "default_dt_fs")]
    pub dt_fs: f64,
    #[serde(default = "default_level")]
    pub heom_level: usize,
    #[serde(default = "default_max_slots")]
    pub max_slots: usize,
    #[serde(default = "default_initial")]
    pub initial: InitialState,
    /// Real density matrix used with `initial = "custom"`.
    pub initial_rho: Option<[[f64; 2]; 2]>,
}

fn sigma_z_rows() -> [[f64; 2]; 2] {
    [[1.0, 0.0], [0.0, -1.0]]
}
fn default_dt_fs() -> f64 {
    0.05
}
fn default_level() -> usize {
    6
}
fn default_max_slots() -> usize {
    DEFAULT_MAX_SLOTS
}
fn default_initial() -> InitialState {
    InitialState::State1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatsubaraSetting {
    Count(usize),
    Keyword(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSection {
    #[serde(alias = "temperature_K")]
    pub temperature_k: f64,
    pub matsubara: MatsubaraSetting,
    #[serde(default = "default_auto_tol")]
    pub auto_rel_tol: f64,
    #[serde(default = "default_max_terms")]
    pub max_terms: usize,
    pub terms: Vec<TermSection>,
}

fn default_auto_tol() -> f64 {
    1e-6
}
fn default_max_terms() -> usize {
    64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSection {
    pub p_ev5: f64,
    pub omega1_ev: f64,
    pub gamma1_ev: f64,
    pub omega2_ev: f64,
    pub gamma2_ev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldShape {
    Zero,
    Constant,
    Sin2,
    /// Two-column CSV (`t_fs, E_au`) on the run's grid, e.g. a `field_optimal.csv`.
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    pub shape: FieldShape,
    #[serde(default)]
    pub amplitude_au: f64,
    /// Carrier frequency of `sin2`; defaults to the system eigen-gap.
    pub carrier_ev: Option<f64>,
    pub path: Option<PathBuf>,
}

impl Default for FieldSection {
    fn default() -> Self {
        Self { shape: FieldShape::Zero, amplitude_au: 0.0, carrier_ev: None, path: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessSection {
    /// Number of evenly spaced times written to `decomposition.json`.
    #[serde(default = "default_json_samples")]
    pub json_samples: usize,
}

fn default_json_samples() -> usize {
    21
}

impl Default for WitnessSection {
    fn default() -> Self {
        Self { json_samples: default_json_samples() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// Start in and return to state 1.
    #[serde(rename = "revive_1")]
    Revive1,
    #[serde(rename = "revive_2")]
    Revive2,
    /// Start in state 1, end in state 2.
    #[serde(rename = "swap_12")]
    Swap12,
    /// Start from the system's initial state, end in `target_rho`.
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuessSection {
    #[serde(default = "default_guess_shape")]
    pub shape: FieldShape,
    #[serde(default = "default_guess_amplitude")]
    pub amplitude_au: f64,
    pub carrier_ev: Option<f64>,
    pub path: Option<PathBuf>,
}

fn default_guess_shape() -> FieldShape {
    FieldShape::Sin2
}
fn default_guess_amplitude() -> f64 {
    1e-3
}

impl Default for GuessSection {
    fn default() -> Self {
        Self { shape: FieldShape::Sin2, amplitude_au: 1e-3, carrier_ev: None, path: None }
    }
}

impl GuessSection {
    fn as_field(&self) -> FieldSection {
        FieldSection {
            shape: self.shape.clone(),
            amplitude_au: self.amplitude_au,
            carrier_ev: self.carrier_ev,
            path: self.path.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OctSection {
    pub target: Target,
    pub target_rho: Option<[[f64; 2]; 2]>,
    #[serde(default = "default_alpha0")]
    pub alpha0_au: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_fidelity_tol")]
    pub fidelity_tol: f64,
    #[serde(default = "default_amp_cap")]
    pub amp_cap_au: f64,
    #[serde(default)]
    pub guess: GuessSection,
}

fn default_alpha0() -> f64 {
    50.0
}
fn default_max_iters() -> usize {
    50
}
fn default_fidelity_tol() -> f64 {
    1e-8
}
fn default_amp_cap() -> f64 {
    DEFAULT_AMP_CAP
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanParameter {
    HeomLevel,
    Matsubara,
    DipoleOffdiag,
    AmpCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub parameter: ScanParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_rk_rel")]
    pub rk_rel: f64,
    #[serde(default = "default_rk_abs")]
    pub rk_abs: f64,
    /// Trace drift above this is reported as a warning.
    #[serde(default = "default_trace_monitor")]
    pub trace_monitor: f64,
    #[serde(default = "default_rcond")]
    pub rcond_cutoff: f64,
}

fn default_rk_rel() -> f64 {
    1e-9
}
fn default_rk_abs() -> f64 {
    1e-12
}
fn default_trace_monitor() -> f64 {
    1e-8
}
fn default_rcond() -> f64 {
    DEFAULT_RCOND_CUTOFF
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rk_rel: default_rk_rel(),
            rk_abs: default_rk_abs(),
            trace_monitor: default_trace_monitor(),
            rcond_cutoff: default_rcond(),
        }
    }
}

/// Bare names that need a unit suffix, by table, with the key to use instead.
const SUFFIXED: &[(&str, &[(&str, &str)])] = &[
    (
        "system",
        &[
            ("delta", "delta_ev"),
            ("w", "w_ev"),
            ("dipole", "dipole_au"),
            ("t_final", "t_final_fs"),
            ("dt", "dt_fs"),
        ],
    ),
    ("bath", &[("temperature", "temperature_k")]),
    (
        "bath.terms",
        &[
            ("p", "p_ev5"),
            ("omega1", "omega1_ev"),
            ("gamma1", "gamma1_ev"),
            ("omega2", "omega2_ev"),
            ("gamma2", "gamma2_ev"),
        ],
    ),
    ("field", &[("amplitude", "amplitude_au"), ("carrier", "carrier_ev")]),
    ("oct", &[("alpha0", "alpha0_au"), ("amp_cap", "amp_cap_au")]),
    ("oct.guess", &[("amplitude", "amplitude_au"), ("carrier", "carrier_ev")]),
];

fn lookup<'a>(root: &'a toml::Table, path: &str) -> Vec<&'a toml::Table> {
    let mut current = vec![root];
    for part in path.split('.') {
        let mut next = Vec::new();
        for table in current {
            match table.get(part) {
                Some(toml::Value::Table(t)) => next.push(t),
                Some(toml::Value::Array(items)) => next.extend(items.iter().filter_map(|v| v.as_table())),
                _ => {}
            }
        }
        current = next;
    }
    current
}

fn check_unit_suffixes(root: &toml::Table) -> Result<()> {
    for (path, names) in SUFFIXED {
        for table in lookup(root, path) {
            for (bare, suffixed) in names.iter() {
                if table.contains_key(*bare) {
                    return Err(HeomError::Config(format!(
                        "`{path}.{bare}` is missing its unit suffix; write `{suffixed}`"
                    )));
                }
            }
        }
    }
    Ok(())
}

fn matrix(rows: &[[f64; 2]; 2]) -> Op2 {
    ops::real(*rows)
}

fn check_density(name: &str, rho: &Op2) -> Result<()> {
    let [lo, _] = ops::hermitian_eigenvalues(rho);
    if ops::hermiticity_defect(rho) > 1e-12 || (ops::trace(rho).re - 1.0).abs() > 1e-10 || lo < -1e-12 {
        return Err(HeomError::Config(format!("{name} is not a valid density matrix")));
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(HeomError::Config(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let root: toml::Table = text.parse().map_err(|e: toml::de::Error| HeomError::Config(e.to_string()))?;
        check_unit_suffixes(&root)?;
        let cfg: RunConfig = toml::from_str(text).map_err(|e| HeomError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| std::io::Error::new(e.kind(), format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        // Field files are resolved relative to the config file.
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut Option<PathBuf>| {
            if let Some(p) = p.as_mut() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        resolve(&mut cfg.field.path);
        if let Some(oct) = cfg.oct.as_mut() {
            resolve(&mut oct.guess.path);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.system;
        for (name, v) in [("system.delta_ev", s.delta_ev), ("system.w_ev", s.w_ev)] {
            if !v.is_finite() {
                return Err(HeomError::Config(format!("{name} must be finite")));
            }
        }
        positive("system.t_final_fs", s.t_final_fs)?;
        positive("system.dt_fs", s.dt_fs)?;
        if s.dt_fs > s.t_final_fs {
            return Err(HeomError::Config("system.dt_fs exceeds system.t_final_fs".into()));
        }
        let d = s.dipole_au;
        if d.iter().flatten().any(|v| !v.is_finite()) || d[0][1] != d[1][0] {
            return Err(HeomError::Config("system.dipole_au must be a finite symmetric matrix".into()));
        }
        match (s.initial, &s.initial_rho) {
            (InitialState::Custom, Some(rho)) => check_density("system.initial_rho", &matrix(rho))?,
            (InitialState::Custom, None) => {
                return Err(HeomError::Config("initial = \"custom\" needs system.initial_rho".into()))
            }
            (_, Some(_)) => return Err(HeomError::Config("system.initial_rho needs initial = \"custom\"".into())),
            _ => {}
        }
        if let Some(b) = &self.bath {
            self.bath_spec_from(b)?.validate().map_err(to_config)?;
        }
        check_field("field", &self.field)?;
        if let Some(o) = &self.oct {
            positive("oct.alpha0_au", o.alpha0_au)?;
            positive("oct.amp_cap_au", o.amp_cap_au)?;
            if !(o.fidelity_tol >= 0.0) {
                return Err(HeomError::Config("oct.fidelity_tol must be >= 0".into()));
            }
            match (o.target, &o.target_rho) {
                (Target::Custom, Some(rho)) => check_density("oct.target_rho", &matrix(rho))?,
                (Target::Custom, None) => {
                    return Err(HeomError::Config("target = \"custom\" needs oct.target_rho".into()))
                }
                (_, Some(_)) => return Err(HeomError::Config("oct.target_rho needs target = \"custom\"".into())),
                _ => {}
            }
            check_field("oct.guess", &o.guess.as_field())?;
        }
        if let Some(scan) = &self.scan {
            if scan.values.is_empty() {
                return Err(HeomError::Config("scan.values is empty".into()));
            }
            if scan.values.iter().any(|v| !v.is_finite()) {
                return Err(HeomError::Config("scan.values must be finite".into()));
            }
            let integral = matches!(scan.parameter, ScanParameter::HeomLevel | ScanParameter::Matsubara);
            if integral && scan.values.iter().any(|v| *v < 0.0 || v.fract() != 0.0) {
                return Err(HeomError::Config("scan values for this parameter must be non-negative integers".into()));
            }
        }
        let t = &self.tolerances;
        positive("tolerances.rk_rel", t.rk_rel)?;
        positive("tolerances.rk_abs", t.rk_abs)?;
        positive("tolerances.trace_monitor", t.trace_monitor)?;
        positive("tolerances.rcond_cutoff", t.rcond_cutoff)?;
        Ok(())
    }

    /// Errors if the config names a different mode than requested.
    pub fn check_mode(&self, requested: Mode) -> Result<()> {
        match self.mode {
            Some(m) if m != requested => Err(HeomError::Config(format!(
                "config is for `{}` but `{}` was requested",
                m.name(),
                requested.name()
            ))),
            _ => Ok(()),
        }
    }

    pub fn system_spec(&self) -> SystemSpec {
        let s = &self.system;
        let mut spec = SystemSpec::new(units::ev_to_au(s.delta_ev), units::ev_to_au(s.w_ev));
        spec.dipole = matrix(&s.dipole_au);
        if self.bath.is_none() {
            spec.coupling = Op2::zeros();
        }
        spec
    }

    fn bath_spec_from(&self, b: &BathSection) -> Result<BathSpec> {
        let matsubara = match &b.matsubara {
            MatsubaraSetting::Count(n) => MatsubaraCount::Fixed(*n),
            MatsubaraSetting::Keyword(k) if k == "auto" => MatsubaraCount::Auto,
            MatsubaraSetting::Keyword(k) => {
                return Err(HeomError::Config(format!("bath.matsubara must be a count or \"auto\", got {k:?}")))
            }
        };
        let ev5 = units::HARTREE_EV.powi(5);
        let terms = b
            .terms
            .iter()
            .map(|t| LorentzianTerm {
                p: t.p_ev5 / ev5,
                omega1: units::ev_to_au(t.omega1_ev),
                gamma1: units::ev_to_au(t.gamma1_ev),
                omega2: units::ev_to_au(t.omega2_ev),
                gamma2: units::ev_to_au(t.gamma2_ev),
            })
            .collect();
        let mut spec = BathSpec::new(terms, b.temperature_k, matsubara);
        spec.auto_rel_tol = b.auto_rel_tol;
        spec.max_terms = b.max_terms;
        Ok(spec)
    }

    pub fn bath_spec(&self) -> Result<Option<BathSpec>> {
        self.bath.as_ref().map(|b| self.bath_spec_from(b)).transpose()
    }

    /// Empty for a closed system.
    pub fn expansion(&self) -> Result<CorrelationExpansion> {
        match self.bath_spec()? {
            Some(spec) => correlation_expansion(&spec),
            None => Ok(CorrelationExpansion {
                alpha: Vec::new(),
                alpha_tilde: Vec::new(),
                gamma: Vec::new(),
                kinds: Vec::new(),
            }),
        }
    }

    pub fn heom(&self) -> Result<Heom> {
        Heom::with_level(self.system_spec(), self.expansion()?, self.system.heom_level, self.system.max_slots)
    }

    pub fn t_final_au(&self) -> f64 {
        units::fs_to_au(self.system.t_final_fs)
    }

    pub fn dt_au(&self) -> f64 {
        units::fs_to_au(self.system.dt_fs)
    }

    pub fn tolerances(&self) -> RkTolerances {
        RkTolerances { rel: self.tolerances.rk_rel, abs: self.tolerances.rk_abs, ..RkTolerances::default() }
    }

    pub fn initial_rho(&self) -> Op2 {
        match self.system.initial {
            InitialState::State1 => ops::projector(0),
            InitialState::State2 => ops::projector(1),
            InitialState::Custom => matrix(self.system.initial_rho.as_ref().expect("validated")),
        }
    }

    pub fn field(&self) -> Result<FieldGrid> {
        self.build_field(&self.field)
    }

    fn build_field(&self, f: &FieldSection) -> Result<FieldGrid> {
        let (t_final, dt) = (self.t_final_au(), self.dt_au());
        Ok(match f.shape {
            FieldShape::Zero => FieldGrid::zeros(t_final, dt),
            FieldShape::Constant => FieldGrid::from_fn(t_final, dt, |_| f.amplitude_au),
            FieldShape::Sin2 => {
                let carrier = f.carrier_ev.map_or_else(|| self.system_spec().eigen_gap(), units::ev_to_au);
                FieldGrid::sin2(t_final, dt, f.amplitude_au, carrier)
            }
            FieldShape::File => {
                let path = f.path.as_ref().expect("validated");
                read_field_csv(path, FieldGrid::zeros(t_final, dt))?
            }
        })
    }

    /// Initial state, target and guess for the `[oct]` section.
    pub fn control_problem(&self) -> Result<ControlProblem> {
        let o = self
            .oct
            .as_ref()
            .ok_or_else(|| HeomError::Config("optimization needs an [oct] section".into()))?;
        let (rho_init, rho_target) = match o.target {
            Target::Revive1 => (ops::projector(0), ops::projector(0)),
            Target::Revive2 => (ops::projector(1), ops::projector(1)),
            Target::Swap12 => (ops::projector(0), ops::projector(1)),
            Target::Custom => (self.initial_rho(), matrix(o.target_rho.as_ref().expect("validated"))),
        };
        Ok(ControlProblem {
            rho_init,
            rho_target,
            alpha0: o.alpha0_au,
            guess: self.build_field(&o.guess.as_field())?,
            max_iters: o.max_iters,
            fidelity_tol: o.fidelity_tol,
            amp_cap: o.amp_cap_au,
        })
    }
}

fn to_config(e: HeomError) -> HeomError {
    match e {
        HeomError::InvalidInput(msg) => HeomError::Config(msg),
        other => other,
    }
}

fn check_field(name: &str, f: &FieldSection) -> Result<()> {
    if !f.amplitude_au.is_finite() {
        return Err(HeomError::Config(format!("{name}.amplitude_au must be finite")));
    }
    if let Some(c) = f.carrier_ev {
        if !c.is_finite() {
            return Err(HeomError::Config(format!("{name}.carrier_ev must be finite")));
        }
    }
    if f.shape == FieldShape::File && f.path.is_none() {
        return Err(HeomError::Config(format!("{name}: shape = \"file\" needs a path")));
    }
    Ok(())
}

/// Reads `t_fs, E_au` rows onto `grid`, which fixes the expected times.
fn read_field_csv(path: &Path, mut grid: FieldGrid) -> Result<FieldGrid> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("cannot read field file {}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().unwrap_or_default();
    if header.replace(' ', "") != "t_fs,E_au" {
        return Err(HeomError::Config(format!("field file {} must start with `t_fs,E_au`", path.display())));
    }
    let mut values = Vec::new();
    for (row, line) in lines.enumerate() {
        let mut cols = line.split(',').map(|c| c.trim().parse::<f64>());
        let (Some(Ok(t_fs)), Some(Ok(e)), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(HeomError::Config(format!("field file {}: bad row {}", path.display(), row + 2)));
        };
        let expected = units::au_to_fs(grid.time(row));
        if row >= grid.len() || (t_fs - expected).abs() > 1e-9 * expected.abs().max(1.0) {
            return Err(HeomError::Config(format!(
                "field file {} does not match the run grid at row {}",
                path.display(),
                row + 2
            )));
        }
        values.push(e);
    }
    if values.len() != grid.len() {
        return Err(HeomError::Config(format!(
            "field file {} has {} samples, the run grid has {}",
            path.display(),
            values.len(),
            grid.len()
        )));
    }
    grid.values = values;
    grid.validate().map_err(to_config)?;
    Ok(grid)
}
