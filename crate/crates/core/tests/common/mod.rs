#![allow(dead_code)]

use heom_core::bath::{correlation_expansion, reference_bath, CorrelationExpansion};
use heom_core::hierarchy::{Heom, SystemSpec, DEFAULT_MAX_SLOTS};
use heom_core::ops::{c, Op2};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_op(rng: &mut StdRng) -> Op2 {
    Op2::from_fn(|_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

pub fn random_stack(rng: &mut StdRng, slots: usize) -> Vec<Op2> {
    (0..slots).map(|_| random_op(rng)).collect()
}

/// Random density matrix from a random Bloch vector inside the ball.
pub fn random_density(rng: &mut StdRng) -> Op2 {
    let mut v = [0.0f64; 3];
    loop {
        for x in &mut v {
            *x = rng.random_range(-1.0..1.0);
        }
        if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            break;
        }
    }
    Op2::new(c(0.5 * (1.0 + v[2]), 0.0), c(0.5 * v[0], -0.5 * v[1]), c(0.5 * v[0], 0.5 * v[1]), c(0.5 * (1.0 - v[2]), 0.0))
}

pub fn reference_expansion() -> CorrelationExpansion {
    correlation_expansion(&reference_bath()).unwrap()
}

pub fn reference_heom(level: usize) -> Heom {
    Heom::with_level(SystemSpec::heterojunction(), reference_expansion(), level, DEFAULT_MAX_SLOTS).unwrap()
}

pub fn pairing(a: &[Op2], b: &[Op2]) -> num_complex::Complex64 {
    a.iter().zip(b).map(|(x, y)| (x * y).trace()).sum()
}

pub fn stack_norm(a: &[Op2]) -> f64 {
    a.iter().flat_map(|m| m.iter()).map(|z| z.norm()).fold(0.0, f64::max)
}
