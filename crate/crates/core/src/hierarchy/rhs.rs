use std::sync::Arc;

use rayon::prelude::*;

use super::layout::HierarchyLayout;
use super::state::HierarchyState;
use super::system::SystemSpec;
use crate::bath::CorrelationExpansion;
use crate::error::{HeomError, Result};
use crate::ops::{Op2, C64, I};

/// Hierarchies at least this large evaluate their slots in parallel.
const PARALLEL_SLOTS: usize = 256;

/// Linear generator `dy/dt = G(E) y` over a stack of 2x2 blocks.
pub trait Generator: Sync {
    fn slots(&self) -> usize;
    fn eval(&self, field: f64, y: &[Op2], dy: &mut [Op2]);
}

/// The truncated HEOM for one system and one bath expansion.
#[derive(Debug, Clone)]
pub struct Heom {
    layout: Arc<HierarchyLayout>,
    system: SystemSpec,
    expansion: CorrelationExpansion,
    /// `i sum_k n_k gamma_k` per slot.
    damping: Vec<C64>,
}

impl Heom {
    pub fn new(system: SystemSpec, expansion: CorrelationExpansion, layout: Arc<HierarchyLayout>) -> Result<Self> {
        system.validate()?;
        if layout.n_cor() != expansion.n_cor() {
            return Err(HeomError::DimensionMismatch(format!(
                "layout has {} modes but the expansion has {}",
                layout.n_cor(),
                expansion.n_cor()
            )));
        }
        let damping = (0..layout.len())
            .map(|slot| {
                layout
                    .occupation(slot)
                    .iter()
                    .zip(&expansion.gamma)
                    .map(|(&n, g)| I * g * n as f64)
                    .sum()
            })
            .collect();
        Ok(Self { layout, system, expansion, damping })
    }

    /// Builds the layout too.
    pub fn with_level(
        system: SystemSpec,
        expansion: CorrelationExpansion,
        max_level: usize,
        max_slots: usize,
    ) -> Result<Self> {
        let layout = HierarchyLayout::new(expansion.n_cor(), max_level, max_slots)?;
        Self::new(system, expansion, Arc::new(layout))
    }

    pub fn layout(&self) -> &Arc<HierarchyLayout> {
        &self.layout
    }

    pub fn system(&self) -> &SystemSpec {
        &self.system
    }

    pub fn expansion(&self) -> &CorrelationExpansion {
        &self.expansion
    }

    /// Factorized initial condition: `rho0` in slot 0, all ADOs zero.
    pub fn initial_state(&self, rho0: Op2, time: f64) -> HierarchyState {
        HierarchyState::factorized(self.layout.clone(), rho0, time)
    }

    fn check(&self, state: &HierarchyState) -> Result<()> {
        if state.layout().len() != self.layout.len() {
            return Err(HeomError::DimensionMismatch(format!(
                "state has {} slots, hierarchy has {}",
                state.layout().len(),
                self.layout.len()
            )));
        }
        if state.layout().n_cor() != self.expansion.n_cor() {
            return Err(HeomError::DimensionMismatch(format!(
                "state has {} modes, expansion has {}",
                state.layout().n_cor(),
                self.expansion.n_cor()
            )));
        }
        Ok(())
    }

    /// Time derivative of every ADO at field value `field`.
    pub fn rhs(&self, state: &HierarchyState, field: f64) -> Result<Vec<Op2>> {
        self.check(state)?;
        let mut out = vec![Op2::zeros(); self.layout.len()];
        self.forward().eval(field, state.ados(), &mut out);
        Ok(out)
    }

    /// Derivative of the reduced density matrix only.
    pub fn rho_dot(&self, ados: &[Op2], field: f64) -> Op2 {
        let h = self.system.hamiltonian(field);
        self.forward_slot(0, ados, &h)
    }

    /// Time derivative of a Lagrange-multiplier hierarchy (transpose of the
    /// forward generator, so `sum_n Tr(chi_n rho_n)` is conserved).
    pub fn backward_rhs(&self, chi: &HierarchyState, field: f64) -> Result<Vec<Op2>> {
        self.check(chi)?;
        let mut out = vec![Op2::zeros(); self.layout.len()];
        self.adjoint().eval(field, chi.ados(), &mut out);
        Ok(out)
    }

    pub fn forward(&self) -> Forward<'_> {
        Forward(self)
    }

    pub fn adjoint(&self) -> Adjoint<'_> {
        Adjoint(self)
    }

    fn forward_slot(&self, n: usize, y: &[Op2], h: &Op2) -> Op2 {
        let layout = &*self.layout;
        let s = &self.system.coupling;
        let rho = &y[n];
        let mut d = (h * rho - rho * h) * (-I) + rho * self.damping[n];

        let mut up_sum = Op2::zeros();
        for k in 0..layout.n_cor() {
            if let Some(u) = layout.up(n, k) {
                up_sum += y[u];
            }
        }
        d -= (s * up_sum - up_sum * s) * I;

        let occ = layout.occupation(n);
        for (k, &nk) in occ.iter().enumerate() {
            if let Some(m) = layout.down(n, k) {
                let x = &y[m];
                let term = s * x * self.expansion.alpha[k] - x * s * self.expansion.alpha_tilde[k];
                d -= term * (I * nk as f64);
            }
        }
        d
    }

    fn adjoint_slot(&self, n: usize, y: &[Op2], h: &Op2) -> Op2 {
        let layout = &*self.layout;
        let s = &self.system.coupling;
        let chi = &y[n];
        let mut d = (h * chi - chi * h) * (-I) - chi * self.damping[n];

        let mut down_sum = Op2::zeros();
        for k in 0..layout.n_cor() {
            if let Some(m) = layout.down(n, k) {
                down_sum += y[m];
            }
        }
        d -= (s * down_sum - down_sum * s) * I;

        let occ = layout.occupation(n);
        for (k, &nk) in occ.iter().enumerate() {
            if let Some(u) = layout.up(n, k) {
                let x = &y[u];
                let term = x * s * self.expansion.alpha[k] - s * x * self.expansion.alpha_tilde[k];
                d += term * (I * (nk as f64 + 1.0));
            }
        }
        d
    }
}

fn eval_slots(y: &[Op2], dy: &mut [Op2], slot: impl Fn(usize, &[Op2]) -> Op2 + Sync) {
    if dy.len() >= PARALLEL_SLOTS {
        dy.par_iter_mut().enumerate().for_each(|(n, d)| *d = slot(n, y));
    } else {
        dy.iter_mut().enumerate().for_each(|(n, d)| *d = slot(n, y));
    }
}

/// Forward HEOM generator.
pub struct Forward<'a>(&'a Heom);

impl Generator for Forward<'_> {
    fn slots(&self) -> usize {
        self.0.layout.len()
    }

    fn eval(&self, field: f64, y: &[Op2], dy: &mut [Op2]) {
        let h = self.0.system.hamiltonian(field);
        eval_slots(y, dy, |n, y| self.0.forward_slot(n, y, &h));
    }
}

/// Backward (adjoint) generator for the Lagrange multiplier hierarchy.
pub struct Adjoint<'a>(&'a Heom);

impl Generator for Adjoint<'_> {
    fn slots(&self) -> usize {
        self.0.layout.len()
    }

    fn eval(&self, field: f64, y: &[Op2], dy: &mut [Op2]) {
        let h = self.0.system.hamiltonian(field);
        eval_slots(y, dy, |n, y| self.0.adjoint_slot(n, y, &h));
    }
}
