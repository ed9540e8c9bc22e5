use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::Serialize;

use super::basis::HermitianBasis;
use super::map::MapSeries;
use crate::error::{HeomError, Result};
use crate::ops::{self, c, Op2, C64};

/// Default reciprocal condition number of `F` below which the decomposition
/// is abandoned.
pub const DEFAULT_RCOND_CUTOFF: f64 = 1e-10;

/// Canonical Lindblad form of the map generator at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalPoint {
    pub time: f64,
    /// Ascending.
    pub rates: [f64; 3],
    /// Column k holds the coefficients of channel k on `G_1..G_3`.
    pub eigenvectors: Matrix3<C64>,
    pub channels: [Op2; 3],
    /// Hermitian correction to the system Hamiltonian.
    pub h_cor: Op2,
    /// Hermitized decoherence matrix on `G_1..G_3`.
    pub decoherence: Matrix3<C64>,
    /// `max |D - D^dag| / 2` before Hermitizing.
    pub anti_hermitian: f64,
    pub rcond: f64,
}

#[derive(Debug, Clone)]
pub struct CanonicalDecomposition {
    pub times: Vec<f64>,
    /// `None` from the first ill-conditioned time onward.
    pub points: Vec<Option<CanonicalPoint>>,
    pub rcond_cutoff: f64,
    /// First time at which `F` became too ill-conditioned to invert.
    pub cutoff_time: Option<f64>,
    pub max_anti_hermitian: f64,
}

impl CanonicalDecomposition {
    /// Number of leading valid points.
    pub fn valid_len(&self) -> usize {
        self.points.iter().take_while(|p| p.is_some()).count()
    }
}

/// `T[m][i][k][j] = Tr(G_m G_i G_k G_j)`.
fn four_traces(basis: &HermitianBasis) -> [[[[C64; 4]; 4]; 4]; 4] {
    let mut t = [[[[C64::new(0.0, 0.0); 4]; 4]; 4]; 4];
    for m in 0..4 {
        for i in 0..4 {
            let mi = basis.g[m] * basis.g[i];
            for k in 0..4 {
                let mik = mi * basis.g[k];
                for j in 0..4 {
                    t[m][i][k][j] = ops::trace(&(mik * basis.g[j]));
                }
            }
        }
    }
    t
}

fn rcond(f: &Matrix4<f64>) -> f64 {
    let sv = f.singular_values();
    let max = sv.max();
    if !(max > 0.0) {
        return 0.0;
    }
    sv.min() / max
}

/// Decomposes a generator given in the Hermitian basis (`dF/dt F^-1`).
pub fn decompose_generator(generator: &Matrix4<f64>, time: f64, rcond: f64) -> CanonicalPoint {
    let basis = HermitianBasis::new();
    let t = four_traces(&basis);
    // a_ij = sum_m Tr[G_m G_i L(G_m) G_j], with L(G_m) = sum_k generator_km G_k.
    let mut a = Matrix4::<C64>::zeros();
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = C64::new(0.0, 0.0);
            for m in 0..4 {
                for k in 0..4 {
                    let w = generator[(k, m)];
                    if w != 0.0 {
                        acc += t[m][i][k][j] * w;
                    }
                }
            }
            a[(i, j)] = acc;
        }
    }
    let raw_d: Matrix3<C64> = a.fixed_view::<3, 3>(1, 1).into_owned();
    let anti_hermitian = (raw_d - raw_d.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max) * 0.5;
    let a = (a + a.adjoint()) * c(0.5, 0.0);
    let d: Matrix3<C64> = a.fixed_view::<3, 3>(1, 1).into_owned();

    let sqrt2 = std::f64::consts::SQRT_2;
    let mut o = ops::identity() * (a[(0, 0)] / 4.0);
    for i in 1..4 {
        o += basis.g[i] * (a[(i, 0)] / sqrt2);
    }
    let h_cor = (o - o.adjoint()) * c(0.0, 0.5);

    let (rates, eigenvectors) = ordered_eigen(&d);
    let channels = [0, 1, 2].map(|k| (0..3).map(|i| basis.g[i + 1] * eigenvectors[(i, k)]).sum::<Op2>());
    CanonicalPoint { time, rates, eigenvectors, channels, h_cor, decoherence: d, anti_hermitian, rcond }
}

/// Eigen-decomposition of a Hermitian 3x3 matrix with a reproducible basis:
/// eigenvalues ascending, degenerate eigenspaces aligned with the x, y, z
/// axes in that order, and each eigenvector's largest component real positive.
fn ordered_eigen(d: &Matrix3<C64>) -> ([f64; 3], Matrix3<C64>) {
    let eig = d.symmetric_eigen();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let vals = order.map(|k| eig.eigenvalues[k]);
    let vecs: Vec<Vector3<C64>> = order.iter().map(|&k| eig.eigenvectors.column(k).into_owned()).collect();

    let scale = d.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tie = 1e-9 * scale + 1e-300;
    let mut out = vecs.clone();
    let mut start = 0;
    while start < 3 {
        let mut end = start + 1;
        while end < 3 && vals[end] - vals[start] <= tie {
            end += 1;
        }
        if end - start > 1 {
            align_with_axes(&vecs[start..end], &mut out[start..end]);
        }
        start = end;
    }

    let mut u = Matrix3::<C64>::zeros();
    for (k, v) in out.iter().enumerate() {
        u.set_column(k, &fix_phase(v));
    }
    (vals, u)
}

/// Replaces an orthonormal basis of a degenerate eigenspace by the Gram-Schmidt
/// orthonormalized projections of the coordinate axes, taken in order.
fn align_with_axes(space: &[Vector3<C64>], out: &mut [Vector3<C64>]) {
    let mut chosen: Vec<Vector3<C64>> = Vec::with_capacity(space.len());
    for axis in 0..3 {
        if chosen.len() == space.len() {
            break;
        }
        let mut v: Vector3<C64> = space.iter().map(|s| s * s[axis].conj()).sum();
        for u in &chosen {
            let overlap = u.dotc(&v);
            v -= u * overlap;
        }
        let norm = v.norm();
        if norm > 1e-6 {
            chosen.push(v / c(norm, 0.0));
        }
    }
    // A degenerate space always has full projection onto the three axes.
    for (o, v) in out.iter_mut().zip(chosen) {
        *o = v;
    }
}

fn fix_phase(v: &Vector3<C64>) -> Vector3<C64> {
    let big = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let lead = v.iter().find(|z| z.norm() >= big * (1.0 - 1e-12)).copied().unwrap_or(C64::new(1.0, 0.0));
    if lead.norm() == 0.0 {
        return *v;
    }
    v * (lead.conj() / lead.norm())
}

/// Canonical decomposition along a map series, `L_t = dF/dt F^-1`.
pub fn canonical_decomposition(ms: &MapSeries, rcond_cutoff: f64) -> CanonicalDecomposition {
    let mut points = Vec::with_capacity(ms.len());
    let mut cutoff_time = None;
    let mut max_anti_hermitian: f64 = 0.0;
    for i in 0..ms.len() {
        if cutoff_time.is_some() {
            points.push(None);
            continue;
        }
        let rc = rcond(&ms.f[i]);
        let inverse = if rc >= rcond_cutoff { ms.f[i].try_inverse() } else { None };
        match inverse {
            Some(inv) => {
                let point = decompose_generator(&(ms.fdot[i] * inv), ms.times[i], rc);
                max_anti_hermitian = max_anti_hermitian.max(point.anti_hermitian);
                points.push(Some(point));
            }
            None => {
                log::info!("map condition number cutoff reached at t = {} a.u. (rcond {rc:e})", ms.times[i]);
                cutoff_time = Some(ms.times[i]);
                points.push(None);
            }
        }
    }
    if max_anti_hermitian > 0.0 {
        log::debug!("largest anti-Hermitian part of the decoherence matrix: {max_anti_hermitian:e}");
    }
    CanonicalDecomposition { times: ms.times.clone(), points, rcond_cutoff, cutoff_time, max_anti_hermitian }
}

/// `Gamma(t) = g_1 + g_2 + g_3`, undefined past the cutoff.
pub fn gamma_sum(cd: &CanonicalDecomposition) -> Vec<Option<f64>> {
    cd.points.iter().map(|p| p.as_ref().map(|p| p.rates.iter().sum())).collect()
}

/// Channel weights `c_k = Tr(C_k^dag rho)` on the decomposition grid.
pub fn channel_weights(cd: &CanonicalDecomposition, rho: &[Op2]) -> Result<Vec<Option<[C64; 3]>>> {
    if rho.len() != cd.points.len() {
        return Err(HeomError::DimensionMismatch(format!(
            "{} density matrices for {} decomposition times",
            rho.len(),
            cd.points.len()
        )));
    }
    Ok(cd
        .points
        .iter()
        .zip(rho)
        .map(|(p, r)| p.as_ref().map(|p| p.channels.map(|ch| ops::trace(&(ch.adjoint() * r)))))
        .collect())
}

/// Summary of the volume identity `V(t) = V(0) exp(-2 int_0^t Gamma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeIdentity {
    /// Largest relative mismatch over the valid range.
    pub max_rel_error: f64,
    /// Number of grid points checked.
    pub checked: usize,
}

/// Compares `V` with `V(0) exp(-2 int Gamma)` using the trapezoidal rule on
/// `Gamma` over the leading valid range.
pub fn volume_identity(times: &[f64], volume: &[f64], gamma: &[Option<f64>]) -> VolumeIdentity {
    let mut integral = 0.0;
    let mut max_rel_error: f64 = 0.0;
    let mut checked = 0;
    for i in 0..times.len().min(volume.len()).min(gamma.len()) {
        let Some(g) = gamma[i] else { break };
        if i > 0 {
            let Some(prev) = gamma[i - 1] else { break };
            integral += 0.5 * (g + prev) * (times[i] - times[i - 1]);
        }
        let predicted = volume[0] * (-2.0 * integral).exp();
        max_rel_error = max_rel_error.max((volume[i] - predicted).abs() / predicted.abs());
        checked += 1;
    }
    VolumeIdentity { max_rel_error, checked }
}
