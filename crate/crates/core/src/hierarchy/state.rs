use std::sync::Arc;

use super::layout::HierarchyLayout;
use crate::error::{HeomError, Result};
use crate::ops::{self, Op2};

/// The full stack of auxiliary density operators at one time.
#[derive(Debug, Clone)]
pub struct HierarchyState {
    layout: Arc<HierarchyLayout>,
    ados: Vec<Op2>,
    pub time: f64,
}

impl HierarchyState {
    /// `rho0` in slot 0 and every ADO zero.
    pub fn factorized(layout: Arc<HierarchyLayout>, rho0: Op2, time: f64) -> Self {
        let mut ados = vec![Op2::zeros(); layout.len()];
        ados[0] = rho0;
        Self { layout, ados, time }
    }

    pub fn from_ados(layout: Arc<HierarchyLayout>, ados: Vec<Op2>, time: f64) -> Result<Self> {
        if ados.len() != layout.len() {
            return Err(HeomError::DimensionMismatch(format!(
                "{} ADOs for a layout of {} slots",
                ados.len(),
                layout.len()
            )));
        }
        Ok(Self { layout, ados, time })
    }

    pub fn layout(&self) -> &Arc<HierarchyLayout> {
        &self.layout
    }

    pub fn ados(&self) -> &[Op2] {
        &self.ados
    }

    pub fn ados_mut(&mut self) -> &mut [Op2] {
        &mut self.ados
    }

    pub fn into_ados(self) -> Vec<Op2> {
        self.ados
    }

    /// Reduced density matrix (slot `{0, ..., 0}`).
    pub fn rho(&self) -> &Op2 {
        &self.ados[0]
    }

    pub fn is_finite(&self) -> bool {
        self.ados.iter().all(ops::is_finite)
    }

    /// First moment of the bath collective coordinate, minus the sum of all
    /// level-one ADOs.
    pub fn first_moment(&self) -> Result<Op2> {
        first_moment(&self.layout, &self.ados)
    }
}

pub fn first_moment(layout: &HierarchyLayout, ados: &[Op2]) -> Result<Op2> {
    if layout.max_level() == 0 {
        return Err(HeomError::Unsupported("first bath moment needs hierarchy level >= 1".into()));
    }
    Ok(-layout.level_range(1).map(|slot| ados[slot]).sum::<Op2>())
}
