//! HEOM stack for the driven two-level system.

pub mod integrator;
pub mod layout;
pub mod propagate;
pub mod rhs;
pub mod state;
pub mod system;

pub use integrator::{CashKarp, RkTolerances, StepStats};
pub use layout::{slot_count, HierarchyLayout, DEFAULT_MAX_SLOTS};
pub use propagate::{
    hierarchy_convergence, max_deviation, propagate, propagate_backward, propagate_with, Diagnostics,
    LevelDeviation, Sample, Trajectory,
};
pub use rhs::{Generator, Heom};
pub use state::{first_moment, HierarchyState};
pub use system::{FieldGrid, SystemSpec};
