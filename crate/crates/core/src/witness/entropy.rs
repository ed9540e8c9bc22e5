use crate::error::{HeomError, Result};
use crate::ops::{self, c, Op2};

/// Eigenvalues may stray this far outside `[0, 1]` before the state is rejected.
const BAND: f64 = 1e-10;

/// Von Neumann entropy in bits. The input is Hermitized first; eigenvalues
/// within the tolerance band are clamped into `[0, 1]`.
pub fn entropy(rho: &Op2) -> Result<f64> {
    if !ops::is_finite(rho) {
        return Err(HeomError::InvalidState("density matrix has non-finite entries".into()));
    }
    let h = (rho + rho.adjoint()) * c(0.5, 0.0);
    let eig = ops::hermitian_eigenvalues(&h);
    let mut s = 0.0;
    for lambda in eig {
        if !(-BAND..=1.0 + BAND).contains(&lambda) {
            return Err(HeomError::InvalidState(format!(
                "eigenvalue {lambda} outside [0, 1]; not a density matrix"
            )));
        }
        let p = lambda.clamp(0.0, 1.0);
        if p > 0.0 {
            s -= p * p.log2();
        }
    }
    Ok(s)
}
