mod common;

use common::*;
use heom_core::hierarchy::{propagate, FieldGrid, Heom, RkTolerances, SystemSpec, DEFAULT_MAX_SLOTS};
use heom_core::oct::*;
use heom_core::ops::{self, projector, Op2};
use heom_core::units;
use proptest::prelude::*;

fn closed_heom() -> Heom {
    let mut system = SystemSpec::heterojunction();
    system.coupling = Op2::zeros();
    let exp = reference_expansion().scaled(0.0);
    Heom::with_level(system, exp.clone(), 0, DEFAULT_MAX_SLOTS).unwrap()
}

fn swap_problem(heom: &Heom, guess_sign: f64) -> ControlProblem {
    let guess = FieldGrid::sin2(units::fs_to_au(20.0), units::fs_to_au(0.05), guess_sign * 1e-3, heom.system().eigen_gap());
    ControlProblem {
        rho_init: projector(0),
        rho_target: projector(1),
        alpha0: 50.0,
        guess,
        max_iters: 50,
        fidelity_tol: 1e-8,
        amp_cap: DEFAULT_AMP_CAP,
    }
}

#[test]
fn zero_iterations_return_the_guess() {
    let heom = closed_heom();
    let mut p = swap_problem(&heom, 1.0);
    p.max_iters = 0;
    let r = optimize(&heom, &p, RkTolerances::default()).unwrap();
    assert_eq!(r.field, p.guess);
    assert_eq!(r.fidelity.len(), 1);
    assert_eq!(r.stats.iterations, 0);
    let direct = propagate(&heom, heom.initial_state(p.rho_init, 0.0), &p.guess, RkTolerances::default()).unwrap();
    assert_eq!(r.fidelity[0], fidelity(direct.final_rho(), &p.rho_target));
}

#[test]
fn corrections_point_uphill() {
    let heom = closed_heom();
    let p = swap_problem(&heom, 1.0);
    let tol = RkTolerances { rel: 1e-11, abs: 1e-14, ..RkTolerances::default() };
    let g = field_corrections(&heom, &p, &p.guess, tol).unwrap();
    let fid = |f: &FieldGrid| fidelity(propagate(&heom, heom.initial_state(p.rho_init, 0.0), f, tol).unwrap().final_rho(), &p.rho_target);
    let scale = g.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let mut checked = 0;
    for i in (0..p.guess.len()).step_by(23) {
        if g[i].abs() < 1e-3 * scale {
            continue;
        }
        let h = 1e-5;
        let (mut up, mut down) = (p.guess.clone(), p.guess.clone());
        up.values[i] += h;
        down.values[i] -= h;
        let fd = (fid(&up) - fid(&down)) / (2.0 * h);
        assert!(fd * g[i] > 0.0, "sample {i}: finite difference {fd:e}, correction {:e}", g[i]);
        checked += 1;
    }
    assert!(checked > 5);
}

#[test]
fn closed_swap_converges_monotonically_within_the_cap() {
    let heom = closed_heom();
    let p = swap_problem(&heom, 1.0);
    let r = optimize(&heom, &p, RkTolerances::default()).unwrap();
    assert!(*r.fidelity.last().unwrap() > 0.99, "{:?}", r.fidelity);
    assert!(r.fidelity.windows(2).all(|w| w[1] >= w[0] - MONOTONICITY_SLACK));
    assert_eq!(r.stats.monotonicity_warnings, 0);
    assert!(r.field.max_abs() <= p.amp_cap);
    // The reported trajectory uses the final field.
    assert!((fidelity(r.trajectory.final_rho(), &p.rho_target) - r.fidelity.last().unwrap()).abs() < 1e-8);
}

#[test]
fn flipping_the_guess_sign_reaches_the_same_fidelity() {
    let heom = closed_heom();
    let a = optimize(&heom, &swap_problem(&heom, 1.0), RkTolerances::default()).unwrap();
    let b = optimize(&heom, &swap_problem(&heom, -1.0), RkTolerances::default()).unwrap();
    assert!((a.fidelity.last().unwrap() - b.fidelity.last().unwrap()).abs() < 1e-2);
}

#[test]
fn tight_cap_is_respected() {
    let heom = closed_heom();
    let mut p = swap_problem(&heom, 1.0);
    p.amp_cap = 2e-3;
    p.max_iters = 5;
    let r = optimize(&heom, &p, RkTolerances::default()).unwrap();
    assert!(r.field.max_abs() <= 2e-3);
    assert!(r.stats.cap_events > 0);
    assert!(r.max_amp.iter().all(|&a| a <= 2e-3));
}

proptest! {
    #[test]
    fn update_matches_an_elementwise_evaluation(seed in any::<u64>(), alpha0 in 0.1f64..100.0) {
        let mut r = rng(seed);
        let (rho, chi, mu) = (random_density(&mut r), random_op(&mut r), random_density(&mut r));
        // Tr(AB) = sum_ij A_ij B_ji, spelled out.
        let tr = |a: &Op2, b: &Op2| {
            let mut s = num_complex::Complex64::new(0.0, 0.0);
            for i in 0..2 {
                for j in 0..2 {
                    s += a[(i, j)] * b[(j, i)];
                }
            }
            s
        };
        let comm = rho * mu - mu * rho;
        let expected = (tr(&rho, &chi) * tr(&chi, &comm)).im / alpha0;
        let got = field_update(&rho, &chi, &mu, alpha0);
        prop_assert!((got - expected).abs() <= 1e-12 * expected.abs().max(1e-12));
        prop_assert!(ops::is_finite(&chi));
    }
}
