//! Direct frequency-domain integrals over the spectral density, computed with
//! adaptive Gauss-Kronrod quadrature. These do not use the pole expansion and
//! serve as an independent reference for it.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::bath::{spectral_density, BathSpec};
use crate::ops::C64;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64) -> (C64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let k = kronrod * half;
    let g = gauss * half;
    (k, (k - g).norm())
}

struct Panel {
    a: f64,
    b: f64,
    value: C64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: C64,
    pub error: f64,
    pub converged: bool,
}

/// Globally adaptive Gauss-Kronrod (7/15) integration of a complex function
/// over `[a, b]`, starting from `initial_panels` equal panels.
pub fn integrate<F: Fn(f64) -> C64>(
    f: F,
    a: f64,
    b: f64,
    initial_panels: usize,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Integral {
    let n0 = initial_panels.max(1);
    let width = (b - a) / n0 as f64;
    let mut heap = BinaryHeap::with_capacity(2 * n0);
    let mut total = C64::new(0.0, 0.0);
    let mut total_err = 0.0;
    for i in 0..n0 {
        let pa = a + i as f64 * width;
        let pb = if i + 1 == n0 { b } else { pa + width };
        let (value, err) = gk15(&f, pa, pb);
        total += value;
        total_err += err;
        heap.push(Panel { a: pa, b: pb, value, err });
    }
    while total_err > abs_tol.max(rel_tol * total.norm()) {
        if heap.len() >= max_panels {
            return Integral { value: total, error: total_err, converged: false };
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        let (lv, le) = gk15(&f, worst.a, mid);
        let (rv, re) = gk15(&f, mid, worst.b);
        total += lv + rv - worst.value;
        total_err += le + re - worst.err;
        heap.push(Panel { a: worst.a, b: mid, value: lv, err: le });
        heap.push(Panel { a: mid, b: worst.b, value: rv, err: re });
    }
    // Re-sum to shed the drift of the running updates.
    let value = heap.iter().map(|p| p.value).sum();
    let error = heap.iter().map(|p| p.err).sum();
    Integral { value, error, converged: true }
}

/// J(w) / (e^{beta w} - 1), with the removable singularity at w = 0 handled.
fn thermal_weight(spec: &BathSpec, beta: f64, w: f64) -> f64 {
    if w == 0.0 {
        return 0.0;
    }
    spectral_density(w, spec) / (beta * w).exp_m1()
}

/// Integration window for the thermal weight `J(w) n(w)`.
struct Window {
    /// `|J n|` at `+-cutoff` is below `1e-12` of its peak.
    cutoff: f64,
    /// Rough size of `int |J n| dw`, for absolute tolerances.
    magnitude: f64,
}

fn window(spec: &BathSpec) -> Window {
    let beta = spec.beta();
    let scale = spec
        .terms
        .iter()
        .map(|t| (t.omega1 + t.gamma1).max(t.omega2 + t.gamma2))
        .fold(0.0, f64::max);
    let peak = (1..=2000)
        .map(|i| {
            let w = -4.0 * scale + 8.0 * scale * i as f64 / 2000.0;
            thermal_weight(spec, beta, w).abs()
        })
        .fold(0.0, f64::max);
    let mut cutoff = 4.0 * scale;
    while thermal_weight(spec, beta, -cutoff).abs() > 1e-12 * peak
        || thermal_weight(spec, beta, cutoff).abs() > 1e-12 * peak
    {
        cutoff *= 1.5;
    }
    Window { cutoff, magnitude: peak * scale }
}

/// `C(t) = 1/pi int dw J(w) e^{iwt} / (e^{beta w} - 1)` by direct quadrature.
pub fn correlation_by_quadrature(spec: &BathSpec, t: f64, rel_tol: f64) -> Integral {
    let beta = spec.beta();
    let Window { cutoff, magnitude } = window(spec);
    let oscillation = if t > 0.0 { std::f64::consts::PI / t } else { f64::INFINITY };
    let panels = ((2.0 * cutoff / oscillation).ceil() as usize).clamp(64, 1 << 16);
    let res = integrate(
        |w| {
            let weight = thermal_weight(spec, beta, w);
            C64::new((w * t).cos(), (w * t).sin()) * weight
        },
        -cutoff,
        cutoff,
        panels,
        1e-2 * rel_tol * magnitude,
        1e-2 * rel_tol,
        1 << 20,
    );
    Integral {
        value: res.value / std::f64::consts::PI,
        error: res.error / std::f64::consts::PI,
        converged: res.converged,
    }
}

/// Decoherence exponent for pure dephasing with `S = sigma_z`:
///
/// ```text
/// |rho_01(t)| = |rho_01(0)| exp(-Phi(t)),
/// Phi(t) = 4/pi int_0^inf dw J(w) coth(beta w / 2) (1 - cos wt) / w^2
/// ```
///
/// The factor 4 is `(s_0 - s_1)^2` for the eigenvalues `+-1` of `sigma_z`.
pub fn pure_dephasing_exponent(spec: &BathSpec, t: f64) -> f64 {
    let beta = spec.beta();
    let cutoff = window(spec).cutoff;
    let oscillation = if t > 0.0 { std::f64::consts::PI / t } else { f64::INFINITY };
    let panels = ((cutoff / oscillation).ceil() as usize).clamp(64, 1 << 16);
    let integrand = |w: f64| {
        if w == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let half_angle = 0.5 * w * t;
        let one_minus_cos = 2.0 * half_angle.sin().powi(2);
        let value = spectral_density(w, spec) / (0.5 * beta * w).tanh() * one_minus_cos / (w * w);
        C64::new(value, 0.0)
    };
    let res = integrate(integrand, 0.0, cutoff, panels, 1e-14, 1e-11, 1 << 20);
    4.0 / std::f64::consts::PI * res.value.re
}
