use nalgebra::Vector4;

use crate::ops::{self, c, Op2};

/// Orthonormal Hermitian operator basis `G = (I, sx, sy, sz) / sqrt(2)`,
/// so that `Tr(G_m G_n) = delta_mn`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermitianBasis {
    pub g: [Op2; 4],
}

impl Default for HermitianBasis {
    fn default() -> Self {
        Self::new()
    }
}

impl HermitianBasis {
    pub fn new() -> Self {
        let s = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self { g: [ops::identity() * s, ops::sigma_x() * s, ops::sigma_y() * s, ops::sigma_z() * s] }
    }

    /// Coordinates `x_m = Tr(G_m A)`; real when `A` is Hermitian.
    pub fn coords(&self, a: &Op2) -> Vector4<f64> {
        Vector4::from_fn(|m, _| ops::trace(&(self.g[m] * a)).re)
    }

    /// Largest imaginary part among the coordinates of `a`.
    pub fn coords_imag(&self, a: &Op2) -> f64 {
        self.g.iter().map(|g| ops::trace(&(g * a)).im.abs()).fold(0.0, f64::max)
    }

    pub fn operator(&self, x: &Vector4<f64>) -> Op2 {
        (0..4).map(|m| self.g[m] * c(x[m], 0.0)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_and_hermitian() {
        let b = HermitianBasis::new();
        for m in 0..4 {
            assert_eq!(ops::hermiticity_defect(&b.g[m]), 0.0);
            for n in 0..4 {
                let overlap = ops::trace(&(b.g[m] * b.g[n]));
                let expected = if m == n { 1.0 } else { 0.0 };
                assert!((overlap - c(expected, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn coordinates_round_trip() {
        let b = HermitianBasis::new();
        let rho = ops::real([[0.7, 0.2], [0.2, 0.3]]) + ops::sigma_y() * c(0.1, 0.0);
        let back = b.operator(&b.coords(&rho));
        assert!(ops::max_abs(&(back - rho)) < 1e-15);
        assert!(b.coords_imag(&rho) < 1e-16);
    }
}
