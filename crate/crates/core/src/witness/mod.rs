//! Non-Markovianity witnesses from the reconstructed dynamical map.

pub mod basis;
pub mod canonical;
pub mod entropy;
pub mod map;

pub use basis::HermitianBasis;
pub use canonical::{
    canonical_decomposition, channel_weights, decompose_generator, gamma_sum, volume_identity, CanonicalDecomposition,
    CanonicalPoint, VolumeIdentity, DEFAULT_RCOND_CUTOFF,
};
pub use entropy::entropy;
pub use map::{reconstruct_map, volume, LindbladGenerator, MapSeries};

use crate::error::Result;
use crate::hierarchy::{FieldGrid, Heom, RkTolerances};
use crate::ops::{Op2, C64};

/// Every witness on one time grid, for one initial state.
#[derive(Debug, Clone)]
pub struct WitnessReport {
    pub map: MapSeries,
    pub volume: Vec<f64>,
    pub decomposition: CanonicalDecomposition,
    pub gamma: Vec<Option<f64>>,
    /// `rho(t)` from the map applied to the initial state.
    pub rho: Vec<Op2>,
    pub weights: Vec<Option<[C64; 3]>>,
    pub entropy: Vec<f64>,
    pub identity: VolumeIdentity,
}

/// Reconstructs the map under `field` and evaluates volume, canonical rates,
/// channel weights for `rho0` and its entropy.
pub fn witness_suite(
    heom: &Heom,
    rho0: &Op2,
    field: &FieldGrid,
    tol: RkTolerances,
    rcond_cutoff: f64,
) -> Result<WitnessReport> {
    let map = reconstruct_map(heom, field, tol)?;
    analyze(map, rho0, rcond_cutoff)
}

/// Witness post-processing of an existing map series.
pub fn analyze(map: MapSeries, rho0: &Op2, rcond_cutoff: f64) -> Result<WitnessReport> {
    let volume = volume(&map);
    let decomposition = canonical_decomposition(&map, rcond_cutoff);
    let gamma = gamma_sum(&decomposition);
    let rho: Vec<Op2> = (0..map.len()).map(|i| map.apply(i, rho0)).collect();
    let weights = channel_weights(&decomposition, &rho)?;
    let entropy = rho.iter().map(entropy).collect::<Result<Vec<_>>>()?;
    let identity = volume_identity(&map.times, &volume, &gamma);
    Ok(WitnessReport { map, volume, decomposition, gamma, rho, weights, entropy, identity })
}
