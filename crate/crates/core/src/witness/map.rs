use nalgebra::Matrix4;
use rayon::prelude::*;

use super::basis::HermitianBasis;
use crate::error::{HeomError, Result};
use crate::hierarchy::{propagate, Diagnostics, FieldGrid, Heom, RkTolerances, Trajectory};
use crate::ops::{self, c, Op2, I};

/// Imaginary parts of map entries above this mean the propagation broke
/// Hermiticity.
const REAL_TOL: f64 = 1e-8;

/// Dynamical map `F_mn(t) = Tr(G_m phi_t[G_n])` and its exact time derivative
/// on a time grid.
#[derive(Debug, Clone)]
pub struct MapSeries {
    pub times: Vec<f64>,
    pub f: Vec<Matrix4<f64>>,
    pub fdot: Vec<Matrix4<f64>>,
    /// Largest discarded imaginary part of any entry.
    pub max_imag: f64,
    pub diagnostics: Diagnostics,
}

impl MapSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `rho(t)` for an arbitrary initial operator, by linearity.
    pub fn apply(&self, i: usize, rho0: &Op2) -> Op2 {
        let basis = HermitianBasis::new();
        let mut out = basis.operator(&(self.f[i] * basis.coords(rho0)));
        // coords() drops the anti-Hermitian part; put it back.
        let anti = (rho0 - rho0.adjoint()) * c(0.5, 0.0);
        if ops::max_abs(&anti) > 0.0 {
            let x = basis.coords(&(anti * (-I)));
            out += basis.operator(&(self.f[i] * x)) * I;
        }
        out
    }
}

/// Propagates the four basis operators as initial "densities" (with all
/// ADOs zero) and assembles `F` and `dF/dt` on the field grid. The four
/// propagations run concurrently.
pub fn reconstruct_map(heom: &Heom, field: &FieldGrid, tol: RkTolerances) -> Result<MapSeries> {
    let basis = HermitianBasis::new();
    let trajectories: Vec<Trajectory> = basis
        .g
        .par_iter()
        .map(|g| propagate(heom, heom.initial_state(*g, field.t0), field, tol))
        .collect::<Result<_>>()?;
    from_trajectories(&trajectories)
}

/// Builds the map from four reduced trajectories started at `G_0..G_3`.
pub fn from_trajectories(trajectories: &[Trajectory]) -> Result<MapSeries> {
    if trajectories.len() != 4 {
        return Err(HeomError::DimensionMismatch(format!(
            "need 4 basis trajectories, got {}",
            trajectories.len()
        )));
    }
    let basis = HermitianBasis::new();
    let n = trajectories[0].samples.len();
    if trajectories.iter().any(|t| t.samples.len() != n) {
        return Err(HeomError::DimensionMismatch("basis trajectories have different lengths".into()));
    }
    let mut max_imag: f64 = 0.0;
    let mut f = Vec::with_capacity(n);
    let mut fdot = Vec::with_capacity(n);
    let mut diagnostics = Diagnostics::default();
    for t in trajectories {
        diagnostics.merge(&t.diagnostics);
    }
    for i in 0..n {
        let mut fi = Matrix4::zeros();
        let mut di = Matrix4::zeros();
        for (col, traj) in trajectories.iter().enumerate() {
            let s = &traj.samples[i];
            let x = basis.coords(&s.rho);
            let dx = basis.coords(&s.rho_dot);
            max_imag = max_imag.max(basis.coords_imag(&s.rho)).max(basis.coords_imag(&s.rho_dot));
            fi.set_column(col, &x);
            di.set_column(col, &dx);
        }
        f.push(fi);
        fdot.push(di);
    }
    if max_imag > REAL_TOL {
        return Err(HeomError::InvalidState(format!(
            "dynamical map has imaginary entries up to {max_imag:e}; Hermiticity was lost"
        )));
    }
    let times = trajectories[0].samples.iter().map(|s| s.time).collect();
    Ok(MapSeries { times, f, fdot, max_imag, diagnostics })
}

/// Accessible-state volume `V(t) = det F(t)`.
pub fn volume(ms: &MapSeries) -> Vec<f64> {
    ms.f.iter().map(|f| f.determinant()).collect()
}

/// A time-independent Lindblad generator
/// `L(rho) = -i[H, rho] + sum_k r_k (L_k rho L_k^dag - {L_k^dag L_k, rho}/2)`,
/// used to synthesize maps with known rates.
#[derive(Debug, Clone)]
pub struct LindbladGenerator {
    pub hamiltonian: Op2,
    pub jumps: Vec<(f64, Op2)>,
}

impl LindbladGenerator {
    /// Jump operators `G_1..G_3` with the given rates; in the basis
    /// normalization these are exactly the canonical rates.
    pub fn canonical(hamiltonian: Op2, rates: [f64; 3]) -> Self {
        let basis = HermitianBasis::new();
        Self { hamiltonian, jumps: (0..3).map(|k| (rates[k], basis.g[k + 1])).collect() }
    }

    pub fn apply(&self, rho: &Op2) -> Op2 {
        let h = &self.hamiltonian;
        let mut out = (h * rho - rho * h) * (-I);
        for (rate, l) in &self.jumps {
            let ld = l.adjoint();
            let ldl = ld * l;
            out += (l * rho * ld - (ldl * rho + rho * ldl) * c(0.5, 0.0)) * c(*rate, 0.0);
        }
        out
    }

    /// Matrix of the generator in the Hermitian basis.
    pub fn matrix(&self) -> Matrix4<f64> {
        let basis = HermitianBasis::new();
        let mut m = Matrix4::zeros();
        for n in 0..4 {
            m.set_column(n, &basis.coords(&self.apply(&basis.g[n])));
        }
        m
    }

    /// `F(t) = exp(L t)`, `dF/dt = L F(t)` on the given times.
    pub fn map_series(&self, times: &[f64]) -> MapSeries {
        let l = self.matrix();
        let f: Vec<Matrix4<f64>> = times.iter().map(|&t| (l * t).exp()).collect();
        let fdot = f.iter().map(|fi| l * fi).collect();
        MapSeries { times: times.to_vec(), f, fdot, max_imag: 0.0, diagnostics: Diagnostics::default() }
    }
}
