mod common;

use common::*;
use heom_core::hierarchy::{propagate, FieldGrid, Heom, RkTolerances, SystemSpec, DEFAULT_MAX_SLOTS};
use heom_core::ops::{self, c, projector, Op2, C64};
use heom_core::units;
use heom_core::witness::*;
use nalgebra::{Matrix3, Matrix4};
use proptest::prelude::*;
use rand::Rng;

fn grid(t_final: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| t_final * i as f64 / n as f64).collect()
}

fn traceless_hermitian(rng: &mut rand::rngs::StdRng, scale: f64) -> Op2 {
    let b = HermitianBasis::new();
    (1..4).map(|k| b.g[k] * c(scale * rng.random_range(-1.0..1.0), 0.0)).sum()
}

/// Random unitary from the QR factor of a random complex matrix.
fn random_unitary(rng: &mut rand::rngs::StdRng) -> Matrix3<C64> {
    let m = Matrix3::from_fn(|_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    m.qr().q()
}

#[test]
fn heom_map_starts_at_identity_and_preserves_volume_when_closed() {
    let mut system = SystemSpec::heterojunction();
    system.coupling = Op2::zeros();
    let heom = Heom::with_level(system, reference_expansion(), 2, DEFAULT_MAX_SLOTS).unwrap();
    let field = FieldGrid::sin2(units::fs_to_au(20.0), 2.0, 5e-3, heom.system().eigen_gap());
    let map = reconstruct_map(&heom, &field, RkTolerances::default()).unwrap();
    assert!((map.f[0] - Matrix4::identity()).abs().max() < 1e-15);
    for v in volume(&map) {
        assert!((v - 1.0).abs() < 1e-10, "{v}");
    }
}

#[test]
fn depolarizing_volume_and_rate() {
    let gamma = 2e-3;
    let times = grid(1000.0, 100);
    let ms = LindbladGenerator::canonical(Op2::zeros(), [gamma; 3]).map_series(&times);
    let v = volume(&ms);
    for (t, v) in times.iter().zip(&v) {
        assert!((v / (-6.0 * gamma * t).exp() - 1.0).abs() < 1e-10);
    }
    let cd = canonical_decomposition(&ms, DEFAULT_RCOND_CUTOFF);
    for g in gamma_sum(&cd) {
        assert!((g.unwrap() - 3.0 * gamma).abs() < 1e-12);
    }
    assert!(volume_identity(&times, &v, &gamma_sum(&cd)).max_rel_error < 1e-6);
}

#[test]
fn sigma_z_dephasing_has_one_channel() {
    let gamma = 1e-3;
    let l = LindbladGenerator { hamiltonian: ops::sigma_z() * c(0.01, 0.0), jumps: vec![(gamma, ops::sigma_z())] };
    let point = decompose_generator(&l.matrix(), 0.0, 1.0);
    let expected = [0.0, 0.0, 2.0 * gamma];
    for (r, e) in point.rates.iter().zip(expected) {
        assert!((r - e).abs() < 1e-14, "{:?}", point.rates);
    }
    let overlap = ops::trace(&(point.channels[2].adjoint() * ops::sigma_z())).norm() / 2f64.sqrt();
    assert!((overlap - 1.0).abs() < 1e-12);
    assert!(ops::max_abs(&(point.h_cor - ops::sigma_z() * c(0.01, 0.0))) < 1e-14);
}

#[test]
fn map_reproduces_direct_propagation() {
    let heom = reference_heom(3);
    let field = FieldGrid::sin2(units::fs_to_au(15.0), 2.0, 5e-3, heom.system().eigen_gap());
    let tol = RkTolerances::default();
    let map = reconstruct_map(&heom, &field, tol).unwrap();
    let mut r = rng(5);
    for _ in 0..3 {
        let rho0 = random_density(&mut r);
        let direct = propagate(&heom, heom.initial_state(rho0, 0.0), &field, tol).unwrap();
        for (i, s) in direct.samples.iter().enumerate() {
            assert!(ops::max_abs(&(map.apply(i, &rho0) - s.rho)) < 1e-8);
        }
    }
    // Linear on non-Hermitian inputs as well.
    let (a, b) = (random_op(&mut r), random_op(&mut r));
    let (x, y) = (c(0.3, -1.2), c(-0.7, 0.4));
    for i in [0, 100, map.len() - 1] {
        let lhs = map.apply(i, &(a * x + b * y));
        let rhs = map.apply(i, &a) * x + map.apply(i, &b) * y;
        assert!(ops::max_abs(&(lhs - rhs)) < 1e-12);
    }
}

#[test]
fn random_lindblad_generators_round_trip() {
    let basis = HermitianBasis::new();
    let mut r = rng(19);
    for _ in 0..50 {
        let h = traceless_hermitian(&mut r, 0.05);
        let u = random_unitary(&mut r);
        let mut rates = [0.0; 3].map(|_: f64| r.random_range(0.0..1e-2));
        rates.sort_by(f64::total_cmp);
        let jumps: Vec<(f64, Op2)> = (0..3)
            .map(|k| (rates[k], (0..3).map(|j| basis.g[j + 1] * u[(j, k)]).sum()))
            .collect();
        let l = LindbladGenerator { hamiltonian: h, jumps: jumps.clone() };
        let p = decompose_generator(&l.matrix(), 0.0, 1.0);
        assert!(ops::max_abs(&(p.h_cor - h)) < 1e-10);
        assert!(p.anti_hermitian < 1e-10);
        for k in 0..3 {
            assert!((p.rates[k] - rates[k]).abs() < 1e-10);
            let overlap = ops::trace(&(p.channels[k].adjoint() * jumps[k].1)).norm();
            assert!((overlap - 1.0).abs() < 1e-6, "channel {k}: overlap {overlap}");
        }
        // Rebuilding the generator from the decomposition gives the same map generator.
        let rebuilt = LindbladGenerator { hamiltonian: p.h_cor, jumps: (0..3).map(|k| (p.rates[k], p.channels[k])).collect() };
        assert!((rebuilt.matrix() - l.matrix()).abs().max() < 1e-10);
    }
}

#[test]
fn markovian_maps_are_monotone() {
    let mut r = rng(23);
    let times = grid(2000.0, 200);
    for _ in 0..10 {
        let h = traceless_hermitian(&mut r, 0.05);
        let rates = [0.0; 3].map(|_: f64| r.random_range(0.0..2e-3));
        let ms = LindbladGenerator::canonical(h, rates).map_series(&times);
        let v = volume(&ms);
        assert!(v.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        let cd = canonical_decomposition(&ms, DEFAULT_RCOND_CUTOFF);
        for p in cd.points.iter().flatten() {
            assert!(p.rates.iter().all(|&g| g >= -1e-12), "{:?}", p.rates);
        }
    }
}

#[test]
fn channel_weights_of_mixed_and_pure_states() {
    let mut r = rng(29);
    let l = LindbladGenerator::canonical(traceless_hermitian(&mut r, 0.05), [1e-3, 2e-3, 4e-3]);
    let cd = canonical_decomposition(&l.map_series(&[0.0, 10.0]), DEFAULT_RCOND_CUTOFF);
    let mixed = ops::identity() * c(0.5, 0.0);
    let w = channel_weights(&cd, &[mixed, mixed]).unwrap();
    assert!(w.iter().flatten().flatten().all(|z| z.norm() < 1e-15));
    for _ in 0..20 {
        // Pure state from a unit Bloch vector.
        let rho = loop {
            let m = random_density(&mut r);
            let tr2 = (m * m).trace().re;
            if tr2 > 0.6 {
                let bloch = (2.0 * tr2 - 1.0).sqrt();
                let scale = c(1.0 / bloch, 0.0);
                break ops::identity() * c(0.5, 0.0) + (m - ops::identity() * c(0.5, 0.0)) * scale;
            }
        };
        let w = channel_weights(&cd, &[rho, rho]).unwrap();
        for weights in w.into_iter().flatten() {
            let total: f64 = weights.iter().map(|z| z.norm_sqr()).sum();
            assert!((total - 0.5).abs() < 1e-12, "{total}");
        }
    }
}

#[test]
fn entropy_of_basis_states() {
    assert_eq!(entropy(&projector(0)).unwrap(), 0.0);
    assert!((entropy(&(ops::identity() * c(0.5, 0.0))).unwrap() - 1.0).abs() < 1e-15);
}

proptest! {
    #[test]
    fn entropy_is_unitarily_invariant(seed in any::<u64>(), theta in 0.0f64..6.3, phi in 0.0f64..6.3) {
        let mut r = rng(seed);
        let rho = random_density(&mut r);
        let n = traceless_hermitian(&mut r, 1.0);
        // n = a.sigma squares to |a|^2, so exp(-i theta n/|a|) is elementary.
        let a = (0.5 * (n * n).trace().re).sqrt().max(1e-12);
        let u = ops::identity() * c(theta.cos(), 0.0) - n * c(0.0, theta.sin() / a);
        let u = u * c(phi.cos(), phi.sin());
        let rotated = u * rho * u.adjoint();
        prop_assert!((entropy(&rotated).unwrap() - entropy(&rho).unwrap()).abs() < 1e-10);
    }
}
