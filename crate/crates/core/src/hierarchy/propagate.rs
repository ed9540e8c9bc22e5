use serde::Serialize;

use super::integrator::{CashKarp, RkTolerances, StepStats};
use super::rhs::{Generator, Heom};
use super::state::{first_moment, HierarchyState};
use super::system::{FieldGrid, SystemSpec};
use crate::bath::CorrelationExpansion;
use crate::error::{HeomError, Result};

use crate::ops::{self, Op2};

/// Reduced quantities at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub rho: Op2,
    /// `d rho / dt` under the field that holds right after this point.
    pub rho_dot: Op2,
    /// `None` when the hierarchy has no level-one ADOs.
    pub first_moment: Option<Op2>,
    pub field: f64,
}

/// Running monitors over a propagation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// `max |Tr rho(t) - Tr rho(0)|`.
    pub max_trace_defect: f64,
    pub max_hermiticity_defect: f64,
    pub steps: StepStats,
}

impl Diagnostics {
    fn observe(&mut self, rho: &Op2, initial_trace: ops::C64) {
        self.max_trace_defect = self.max_trace_defect.max((ops::trace(rho) - initial_trace).norm());
        self.max_hermiticity_defect = self.max_hermiticity_defect.max(ops::hermiticity_defect(rho));
    }

    pub fn merge(&mut self, other: &Diagnostics) {
        self.max_trace_defect = self.max_trace_defect.max(other.max_trace_defect);
        self.max_hermiticity_defect = self.max_hermiticity_defect.max(other.max_hermiticity_defect);
        self.steps.accepted += other.steps.accepted;
        self.steps.rejected += other.steps.rejected;
    }
}

/// Reduced trajectory sampled on the field grid (`len + 1` points).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub diagnostics: Diagnostics,
}

impl Trajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.time)
    }

    pub fn final_rho(&self) -> &Op2 {
        &self.samples.last().expect("trajectory is never empty").rho
    }
}

fn sample(heom: &Heom, state: &HierarchyState, field: f64) -> Sample {
    Sample {
        time: state.time,
        rho: *state.rho(),
        rho_dot: heom.rho_dot(state.ados(), field),
        first_moment: first_moment(heom.layout(), state.ados()).ok(),
        field,
    }
}

fn check_start(heom: &Heom, state: &HierarchyState, field: &FieldGrid, at: f64) -> Result<()> {
    field.validate()?;
    if state.layout().len() != heom.layout().len() || state.layout().n_cor() != heom.expansion().n_cor() {
        return Err(HeomError::DimensionMismatch("state does not match the hierarchy".into()));
    }
    if (state.time - at).abs() > 1e-9 * field.dt {
        return Err(HeomError::InvalidInput(format!(
            "state time {} does not match the field grid start {at}",
            state.time
        )));
    }
    Ok(())
}

/// Forward propagation over the whole field grid. `observer` sees the full
/// hierarchy at every grid point `i` together with the field `value_after(i)`.
pub fn propagate_with(
    heom: &Heom,
    state: HierarchyState,
    field: &FieldGrid,
    tol: RkTolerances,
    mut observer: impl FnMut(usize, &HierarchyState, f64) -> Result<()>,
) -> Result<(HierarchyState, StepStats)> {
    check_start(heom, &state, field, field.t0)?;
    let gen = heom.forward();
    let mut rk = CashKarp::new(gen.slots(), tol);
    let layout = state.layout().clone();
    let mut ados = state.into_ados();
    for i in 0..field.len() {
        let snapshot = HierarchyState::from_ados(layout.clone(), ados, field.time(i))?;
        observer(i, &snapshot, field.value_after(i))?;
        ados = snapshot.into_ados();
        rk.advance(&gen, field.values[i], &mut ados, field.time(i), field.time(i + 1))
            .map_err(|e| at_time(e, field.time(i)))?;
    }
    let last = field.len();
    let end = HierarchyState::from_ados(layout, ados, field.time(last))?;
    observer(last, &end, field.value_after(last))?;
    Ok((end, rk.stats))
}

fn at_time(err: HeomError, fallback: f64) -> HeomError {
    match err {
        HeomError::NonFinite { time_au } if !time_au.is_finite() => HeomError::NonFinite { time_au: fallback },
        other => other,
    }
}

/// Forward propagation collecting the reduced trajectory.
pub fn propagate(heom: &Heom, state: HierarchyState, field: &FieldGrid, tol: RkTolerances) -> Result<Trajectory> {
    let initial_trace = ops::trace(state.rho());
    let mut samples = Vec::with_capacity(field.len() + 1);
    let mut diagnostics = Diagnostics::default();
    let (_, stats) = propagate_with(heom, state, field, tol, |_, s, e| {
        if !ops::is_finite(s.rho()) {
            return Err(HeomError::NonFinite { time_au: s.time });
        }
        diagnostics.observe(s.rho(), initial_trace);
        samples.push(sample(heom, s, e));
        Ok(())
    })?;
    diagnostics.steps = stats;
    Ok(Trajectory { samples, diagnostics })
}

/// Backward propagation of a multiplier hierarchy from the end of the grid
/// to its start, starting from `chi_final` in slot 0 and zero ADOs. Returns
/// the reduced slot at every grid point, in forward time order.
pub fn propagate_backward(
    heom: &Heom,
    chi_final: Op2,
    field: &FieldGrid,
    tol: RkTolerances,
) -> Result<(Vec<Op2>, StepStats)> {
    field.validate()?;
    let gen = heom.adjoint();
    let mut rk = CashKarp::new(gen.slots(), tol);
    let mut ados = vec![Op2::zeros(); heom.layout().len()];
    ados[0] = chi_final;
    let mut reduced = vec![Op2::zeros(); field.len() + 1];
    reduced[field.len()] = chi_final;
    for i in (0..field.len()).rev() {
        rk.advance(&gen, field.values[i], &mut ados, field.time(i + 1), field.time(i))
            .map_err(|e| at_time(e, field.time(i + 1)))?;
        if !ops::is_finite(&ados[0]) {
            return Err(HeomError::NonFinite { time_au: field.time(i) });
        }
        reduced[i] = ados[0];
    }
    Ok((reduced, rk.stats))
}

/// One entry of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelDeviation {
    pub level: usize,
    /// `max_t max_ij |rho_L(t) - rho_ref(t)|` against the largest level.
    pub deviation: f64,
    pub slots: usize,
}

/// Propagates at every level in `levels` (ascending) and compares each
/// reduced trajectory with the one at the largest level.
pub fn hierarchy_convergence(
    system: &SystemSpec,
    expansion: &CorrelationExpansion,
    rho0: Op2,
    field: &FieldGrid,
    levels: &[usize],
    tol: RkTolerances,
    max_slots: usize,
) -> Result<Vec<LevelDeviation>> {
    if levels.is_empty() {
        return Err(HeomError::InvalidInput("convergence study needs at least one level".into()));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HeomError::InvalidInput("hierarchy levels must be strictly ascending".into()));
    }
    let mut runs = Vec::with_capacity(levels.len());
    for &level in levels {
        let heom = Heom::with_level(system.clone(), expansion.clone(), level, max_slots)?;
        let slots = heom.layout().len();
        let traj = propagate(&heom, heom.initial_state(rho0, field.t0), field, tol)?;
        runs.push((level, slots, traj));
    }
    let reference = &runs.last().expect("levels is non-empty").2;
    Ok(runs
        .iter()
        .map(|(level, slots, traj)| LevelDeviation {
            level: *level,
            slots: *slots,
            deviation: max_deviation(traj, reference),
        })
        .collect())
}

/// Largest entrywise difference between two reduced trajectories on the same grid.
pub fn max_deviation(a: &Trajectory, b: &Trajectory) -> f64 {
    a.samples
        .iter()
        .zip(&b.samples)
        .map(|(x, y)| ops::max_abs(&(x.rho - y.rho)))
        .fold(0.0, f64::max)
}
