//! Monotonic optimal control of the driving field.
//!
//! Each iteration propagates the Lagrange-multiplier hierarchy backward from
//! the target under the current field, then propagates the density matrix
//! forward while correcting the field sample by sample from the stored
//! multiplier (immediate feedback).

use serde::Serialize;

use crate::error::{HeomError, Result};
use crate::hierarchy::{propagate, propagate_backward, CashKarp, FieldGrid, Generator, Heom, RkTolerances, Trajectory};
use crate::ops::{self, Op2};

/// Largest fidelity drop tolerated before a monotonicity warning.
pub const MONOTONICITY_SLACK: f64 = 1e-6;

/// Default bound on the field amplitude, a.u.
pub const DEFAULT_AMP_CAP: f64 = 1e-2;

#[derive(Debug, Clone)]
pub struct ControlProblem {
    pub rho_init: Op2,
    pub rho_target: Op2,
    /// Penalty weight on field changes, a.u.
    pub alpha0: f64,
    pub guess: FieldGrid,
    pub max_iters: usize,
    /// Stop once an iteration improves the fidelity by less than this.
    pub fidelity_tol: f64,
    pub amp_cap: f64,
}

fn check_density(name: &str, rho: &Op2) -> Result<()> {
    if !ops::is_finite(rho) || ops::hermiticity_defect(rho) > 1e-10 {
        return Err(HeomError::InvalidInput(format!("{name} must be a finite Hermitian matrix")));
    }
    if (ops::trace(rho).re - 1.0).abs() > 1e-10 {
        return Err(HeomError::InvalidInput(format!("{name} must have unit trace")));
    }
    if ops::hermitian_eigenvalues(rho)[0] < -1e-10 {
        return Err(HeomError::InvalidInput(format!("{name} must be positive semidefinite")));
    }
    Ok(())
}

impl ControlProblem {
    pub fn validate(&self) -> Result<()> {
        check_density("initial state", &self.rho_init)?;
        check_density("target state", &self.rho_target)?;
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return Err(HeomError::InvalidInput("alpha0 must be positive".into()));
        }
        if !(self.amp_cap > 0.0) {
            return Err(HeomError::InvalidInput("amplitude cap must be positive".into()));
        }
        if !(self.fidelity_tol >= 0.0) {
            return Err(HeomError::InvalidInput("fidelity tolerance must be >= 0".into()));
        }
        self.guess.validate()
    }
}

#[derive(Debug, Clone)]
pub struct ControlResult {
    pub field: FieldGrid,
    /// Entry 0 is the guess field; one entry per completed iteration after that.
    pub fidelity: Vec<f64>,
    /// Largest |E| of the field behind each fidelity entry.
    pub max_amp: Vec<f64>,
    /// Reduced trajectory under the final field.
    pub trajectory: Trajectory,
    pub stats: ControlStats,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ControlStats {
    pub iterations: usize,
    /// Field samples clipped at the amplitude cap, summed over iterations.
    pub cap_events: usize,
    pub monotonicity_warnings: usize,
}

/// Field correction from the reduced density matrix and multiplier at one
/// time: `(1/alpha0) Im{ Tr(rho chi) Tr(chi [rho, mu]) }`.
///
/// For `H = H0 - mu E` the derivative of `Re Tr(rho(t_f) rho_target)` with
/// respect to the field at time t is `Im Tr(chi [rho, mu])`, so this
/// correction points uphill whenever `Tr(rho chi) > 0`.
pub fn field_update(rho: &Op2, chi: &Op2, dipole: &Op2, alpha0: f64) -> f64 {
    let overlap = ops::trace(&(rho * chi));
    let sensitivity = ops::trace(&(chi * ops::commutator(rho, dipole)));
    (overlap * sensitivity).im / alpha0
}

/// `Re Tr(rho^dag rho_target)`.
pub fn fidelity(rho: &Op2, target: &Op2) -> f64 {
    ops::trace(&(rho.adjoint() * target)).re
}

/// Field corrections at every grid point for a fixed field (no feedback).
pub fn field_corrections(heom: &Heom, problem: &ControlProblem, field: &FieldGrid, tol: RkTolerances) -> Result<Vec<f64>> {
    let (chi, _) = propagate_backward(heom, problem.rho_target, field, tol)?;
    let traj = propagate(heom, heom.initial_state(problem.rho_init, field.t0), field, tol)?;
    let mu = heom.system().dipole;
    Ok(traj
        .samples
        .iter()
        .zip(&chi)
        .map(|(s, x)| field_update(&s.rho, x, &mu, problem.alpha0))
        .collect())
}

/// Runs the monotonic iteration.
pub fn optimize(heom: &Heom, problem: &ControlProblem, tol: RkTolerances) -> Result<ControlResult> {
    problem.validate()?;
    let mu = heom.system().dipole;
    let mut field = problem.guess.clone();
    let mut stats = ControlStats::default();
    let mut cap_events = clip(&mut field, problem.amp_cap);
    if cap_events > 0 {
        log::warn!("guess field clipped at {} a.u. in {cap_events} samples", problem.amp_cap);
        stats.cap_events += cap_events;
    }

    let mut trajectory = propagate(heom, heom.initial_state(problem.rho_init, field.t0), &field, tol)?;
    let mut fidelities = vec![fidelity(trajectory.final_rho(), &problem.rho_target)];
    let mut max_amp = vec![field.max_abs()];
    log::info!("iteration 0: fidelity {:.10}", fidelities[0]);

    let gen = heom.forward();
    for iter in 1..=problem.max_iters {
        let (chi, _) = propagate_backward(heom, problem.rho_target, &field, tol)?;

        let mut rk = CashKarp::new(gen.slots(), tol);
        let mut ados = heom.initial_state(problem.rho_init, field.t0).into_ados();
        let mut new_field = field.clone();
        cap_events = 0;
        for i in 0..field.len() {
            let delta = field_update(&ados[0], &chi[i], &mu, problem.alpha0);
            let mut e = field.values[i] + delta;
            if e.abs() > problem.amp_cap {
                e = e.signum() * problem.amp_cap;
                cap_events += 1;
            }
            new_field.values[i] = e;
            rk.advance(&gen, e, &mut ados, field.time(i), field.time(i + 1))?;
        }
        if cap_events > 0 {
            log::info!("iteration {iter}: {cap_events} field samples clipped at {} a.u.", problem.amp_cap);
            stats.cap_events += cap_events;
        }
        if !ados.iter().all(ops::is_finite) {
            return Err(HeomError::NonFinite { time_au: field.t1() });
        }

        let f = fidelity(&ados[0], &problem.rho_target);
        let previous = *fidelities.last().expect("history starts with the guess");
        if f < previous - MONOTONICITY_SLACK {
            log::warn!("iteration {iter}: fidelity dropped from {previous:.10} to {f:.10}");
            stats.monotonicity_warnings += 1;
        }
        field = new_field;
        fidelities.push(f);
        max_amp.push(field.max_abs());
        stats.iterations = iter;
        log::info!("iteration {iter}: fidelity {f:.10}, max |E| {:.3e} a.u.", field.max_abs());
        if f - previous < problem.fidelity_tol {
            break;
        }
    }

    if stats.iterations > 0 {
        trajectory = propagate(heom, heom.initial_state(problem.rho_init, field.t0), &field, tol)?;
    }
    Ok(ControlResult { field, fidelity: fidelities, max_amp, trajectory, stats })
}

fn clip(field: &mut FieldGrid, cap: f64) -> usize {
    let mut n = 0;
    for v in &mut field.values {
        if v.abs() > cap {
            *v = v.signum() * cap;
            n += 1;
        }
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{c, real, sigma_x, sigma_y, sigma_z};

    #[test]
    fn vanishes_when_dipole_commutes() {
        let rho = real([[0.7, 0.0], [0.0, 0.3]]);
        let chi = real([[0.2, 0.1], [0.1, 0.8]]);
        assert_eq!(field_update(&rho, &chi, &sigma_z(), 1.0), 0.0);
    }

    #[test]
    fn vanishes_when_multiplier_equals_a_pure_state() {
        // Tr(rho [rho, mu]) = 0 for any rho, so chi = rho gives no update.
        for (theta, phi) in [(0.3, 1.1), (1.2, -0.4), (2.5, 2.0)] {
            let psi = nalgebra::Vector2::new(c((theta / 2.0f64).cos(), 0.0), c(0.0, phi).exp() * (theta / 2.0f64).sin());
            let rho = psi * psi.adjoint();
            let mu = sigma_x() * c(0.4, 0.0) + sigma_z();
            assert!(field_update(&rho, &rho, &mu, 2.0).abs() < 1e-16);
        }
    }

    #[test]
    fn rejects_invalid_problems() {
        let guess = FieldGrid::zeros(10.0, 2.0);
        let ok = ControlProblem {
            rho_init: ops::projector(0),
            rho_target: ops::projector(1),
            alpha0: 1.0,
            guess,
            max_iters: 1,
            fidelity_tol: 0.0,
            amp_cap: 1e-2,
        };
        assert!(ok.validate().is_ok());
        let mut bad = ok.clone();
        bad.alpha0 = 0.0;
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.rho_target = sigma_y();
        assert!(bad.validate().is_err());
        let mut bad = ok;
        bad.rho_init = real([[1.5, 0.0], [0.0, -0.5]]);
        assert!(bad.validate().is_err());
    }
}
