use serde::{Deserialize, Serialize};

use crate::error::{HeomError, Result};
use crate::ops::{self, Op2};
use crate::units;

/// Driven two-level system, atomic units:
/// `H_S(t) = delta/2 sigma_z + W sigma_x - mu E(t)`, coupled to the bath through `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub delta: f64,
    pub w: f64,
    pub dipole: Op2,
    pub coupling: Op2,
}

impl SystemSpec {
    /// Dipole `sigma_z` (1 a.u.) and coupling `S = sigma_z`.
    pub fn new(delta: f64, w: f64) -> Self {
        Self { delta, w, dipole: ops::sigma_z(), coupling: ops::sigma_z() }
    }

    /// The heterojunction donor/acceptor parameters (delta = 0.21 eV, W = 0.13 eV).
    pub fn heterojunction() -> Self {
        Self::new(units::ev_to_au(0.21), units::ev_to_au(0.13))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.w.is_finite()) {
            return Err(HeomError::InvalidInput("system energies must be finite".into()));
        }
        if !ops::is_finite(&self.dipole) || ops::hermiticity_defect(&self.dipole) > 1e-14 {
            return Err(HeomError::InvalidInput("dipole matrix must be finite and Hermitian".into()));
        }
        if !ops::is_finite(&self.coupling) || ops::hermiticity_defect(&self.coupling) > 1e-14 {
            return Err(HeomError::InvalidInput("coupling operator must be finite and Hermitian".into()));
        }
        Ok(())
    }

    /// Field-free part of the Hamiltonian.
    pub fn bare_hamiltonian(&self) -> Op2 {
        ops::sigma_z() * ops::c(0.5 * self.delta, 0.0) + ops::sigma_x() * ops::c(self.w, 0.0)
    }

    pub fn hamiltonian(&self, field: f64) -> Op2 {
        self.bare_hamiltonian() - self.dipole * ops::c(field, 0.0)
    }

    /// `sqrt(delta^2 + 4 W^2)`.
    pub fn eigen_gap(&self) -> f64 {
        (self.delta * self.delta + 4.0 * self.w * self.w).sqrt()
    }

    /// Gap of the field-dressed Hamiltonian.
    pub fn dressed_gap(&self, field: f64) -> f64 {
        let [lo, hi] = ops::hermitian_eigenvalues(&self.hamiltonian(field));
        hi - lo
    }

    /// Period of the closed-system population oscillation, a.u.
    pub fn rabi_period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.eigen_gap()
    }
}

/// Piecewise-constant control field on a uniform grid, atomic units.
/// `values[i]` holds on `[t0 + i dt, t0 + (i + 1) dt)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
}

impl FieldGrid {
    /// Zero field on `[0, t_final]` with a step close to (not above) `dt_target`.
    pub fn zeros(t_final: f64, dt_target: f64) -> Self {
        let n = Self::interval_count(t_final, dt_target);
        Self { t0: 0.0, dt: t_final / n as f64, values: vec![0.0; n] }
    }

    /// Samples `f` at the start of every interval.
    pub fn from_fn(t_final: f64, dt_target: f64, f: impl Fn(f64) -> f64) -> Self {
        let mut grid = Self::zeros(t_final, dt_target);
        for i in 0..grid.values.len() {
            grid.values[i] = f(grid.t0 + i as f64 * grid.dt);
        }
        grid
    }

    /// `amplitude sin^2(pi t / t_final) cos(carrier t)`, sampled at interval midpoints.
    pub fn sin2(t_final: f64, dt_target: f64, amplitude: f64, carrier: f64) -> Self {
        let mut grid = Self::zeros(t_final, dt_target);
        let dt = grid.dt;
        for (i, v) in grid.values.iter_mut().enumerate() {
            let t = (i as f64 + 0.5) * dt;
            *v = amplitude * (std::f64::consts::PI * t / t_final).sin().powi(2) * (carrier * t).cos();
        }
        grid
    }

    fn interval_count(t_final: f64, dt_target: f64) -> usize {
        ((t_final / dt_target) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite() && self.t0.is_finite()) {
            return Err(HeomError::InvalidInput("field grid needs a positive finite step".into()));
        }
        if self.values.is_empty() {
            return Err(HeomError::InvalidInput("field grid has no intervals".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(HeomError::InvalidInput("field grid has non-finite values".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn t1(&self) -> f64 {
        self.t0 + self.values.len() as f64 * self.dt
    }

    /// Time of grid point `i` (0..=len).
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    /// Field value in effect right after grid point `i`; the last point
    /// carries the value of the last interval.
    pub fn value_after(&self, i: usize) -> f64 {
        self.values[i.min(self.values.len() - 1)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn negated(&self) -> Self {
        Self { values: self.values.iter().map(|v| -v).collect(), ..self.clone() }
    }
}
