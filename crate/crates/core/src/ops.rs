//! 2x2 complex operators for the two-level system.

use nalgebra::Matrix2;
use num_complex::Complex64;

pub type C64 = Complex64;
/// A 2x2 complex operator (density matrix, ADO, Hamiltonian, ...).
pub type Op2 = Matrix2<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity() -> Op2 {
    Op2::identity()
}

pub fn sigma_x() -> Op2 {
    Op2::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0))
}

pub fn sigma_y() -> Op2 {
    Op2::new(c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0))
}

pub fn sigma_z() -> Op2 {
    Op2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0))
}

/// Build an operator from real entries, row-major.
pub fn real(m: [[f64; 2]; 2]) -> Op2 {
    Op2::new(
        c(m[0][0], 0.0),
        c(m[0][1], 0.0),
        c(m[1][0], 0.0),
        c(m[1][1], 0.0),
    )
}

/// Projector |k><k| on basis state `k` (0 or 1).
pub fn projector(k: usize) -> Op2 {
    let mut p = Op2::zeros();
    p[(k, k)] = c(1.0, 0.0);
    p
}

pub fn commutator(a: &Op2, b: &Op2) -> Op2 {
    a * b - b * a
}

pub fn trace(a: &Op2) -> C64 {
    a[(0, 0)] + a[(1, 1)]
}

/// Largest entry of |A - A^dagger|.
pub fn hermiticity_defect(a: &Op2) -> f64 {
    (a - a.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs(a: &Op2) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn is_finite(a: &Op2) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Eigenvalues of a Hermitian 2x2 matrix, ascending.
pub fn hermitian_eigenvalues(a: &Op2) -> [f64; 2] {
    let mean = 0.5 * (a[(0, 0)].re + a[(1, 1)].re);
    let half_diff = 0.5 * (a[(0, 0)].re - a[(1, 1)].re);
    let off = 0.5 * (a[(0, 1)] + a[(1, 0)].conj());
    let r = (half_diff * half_diff + off.norm_sqr()).sqrt();
    [mean - r, mean + r]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_algebra() {
        let xy = sigma_x() * sigma_y();
        assert!((xy - sigma_z() * I).norm() < 1e-15);
        assert!((commutator(&sigma_x(), &sigma_y()) - sigma_z() * c(0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn eigenvalues_of_mixed_state() {
        let rho = real([[0.7, 0.2], [0.2, 0.3]]);
        let [lo, hi] = hermitian_eigenvalues(&rho);
        assert!((lo + hi - 1.0).abs() < 1e-15);
        assert!((lo * hi - (0.21 - 0.04)).abs() < 1e-15);
    }
}
