//! Bath description: four-pole Lorentzian spectral densities and the
//! exponential expansion of the bath correlation function.
//!
//! The spectral density is
//!
//! ```text
//! J(w) = sum_l p_l w^3 / (L_l1(w) L_l2(w))
//! L_li(w) = [(w + W_li)^2 + G_li^2] [(w - W_li)^2 + G_li^2]
//! ```
//!
//! and the correlation function `C(t) = 1/pi int dw J(w) e^{iwt} / (e^{bw} - 1)`
//! is evaluated by closing the contour in the upper half plane. Every
//! Lorentzian term contributes four simple poles `+-W_li + iG_li`; the Bose
//! factor contributes the Matsubara poles `i nu_j`, `nu_j = 2 pi j / b`.
//! The result is `C(t) = sum_k alpha_k e^{i gamma_k t}` with `Im gamma_k > 0`.

use serde::{Deserialize, Serialize};

use crate::error::{HeomError, Result};
use crate::ops::{C64, I};
use crate::units;

/// One four-pole term of the spectral density, atomic units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianTerm {
    pub p: f64,
    pub omega1: f64,
    pub gamma1: f64,
    pub omega2: f64,
    pub gamma2: f64,
}

impl LorentzianTerm {
    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.p, self.omega1, self.gamma1, self.omega2, self.gamma2]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(HeomError::InvalidInput("Lorentzian term has a non-finite parameter".into()));
        }
        if self.omega1 <= 0.0 || self.omega2 <= 0.0 {
            return Err(HeomError::InvalidInput("Lorentzian resonance frequencies must be > 0".into()));
        }
        if self.gamma1 <= 0.0 || self.gamma2 <= 0.0 {
            return Err(HeomError::InvalidInput("Lorentzian widths must be > 0".into()));
        }
        let scale = self.omega1.max(self.omega2);
        if (self.omega1 - self.omega2).abs() < 1e-12 * scale
            && (self.gamma1 - self.gamma2).abs() < 1e-12 * scale
        {
            return Err(HeomError::InvalidInput(
                "the two poles of a Lorentzian term coincide (double pole)".into(),
            ));
        }
        Ok(())
    }

    fn lambda(w: C64, omega: f64, gamma: f64) -> C64 {
        let g2 = gamma * gamma;
        ((w + omega) * (w + omega) + g2) * ((w - omega) * (w - omega) + g2)
    }

    /// J_l(w) for complex argument.
    pub fn eval(&self, w: C64) -> C64 {
        self.p * w * w * w
            / (Self::lambda(w, self.omega1, self.gamma1) * Self::lambda(w, self.omega2, self.gamma2))
    }

    /// The four upper-half-plane poles, ordered so that pole 2 is
    /// `-conj(pole 1)` and pole 4 is `-conj(pole 3)`.
    pub fn upper_poles(&self) -> [C64; 4] {
        [
            C64::new(self.omega1, self.gamma1),
            C64::new(-self.omega1, self.gamma1),
            C64::new(self.omega2, self.gamma2),
            C64::new(-self.omega2, self.gamma2),
        ]
    }

    fn all_poles(&self) -> [C64; 8] {
        let up = self.upper_poles();
        [
            up[0],
            up[1],
            up[2],
            up[3],
            up[0].conj(),
            up[1].conj(),
            up[2].conj(),
            up[3].conj(),
        ]
    }

    /// Residue of `J_l(w) * g(w)` at the upper pole `idx`, given `g(pole)`.
    fn residue(&self, idx: usize, g_at_pole: C64) -> C64 {
        let poles = self.all_poles();
        let z = poles[idx];
        let denom = poles
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != idx)
            .fold(C64::new(1.0, 0.0), |acc, (_, r)| acc * (z - r));
        self.p * z * z * z * g_at_pole / denom
    }
}

/// Number of Matsubara terms kept in the expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatsubaraCount {
    Fixed(usize),
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub terms: Vec<LorentzianTerm>,
    pub temperature_k: f64,
    pub matsubara: MatsubaraCount,
    /// Relative change of C(0) below which auto mode stops adding Matsubara terms.
    pub auto_rel_tol: f64,
    /// Hard cap on the total number of exponentials.
    pub max_terms: usize,
}

impl BathSpec {
    pub fn new(terms: Vec<LorentzianTerm>, temperature_k: f64, matsubara: MatsubaraCount) -> Self {
        Self { terms, temperature_k, matsubara, auto_rel_tol: 1e-6, max_terms: 64 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(HeomError::InvalidInput("bath needs at least one Lorentzian term".into()));
        }
        if !(self.temperature_k > 0.0 && self.temperature_k.is_finite()) {
            return Err(HeomError::InvalidInput(format!(
                "temperature must be > 0 K, got {}",
                self.temperature_k
            )));
        }
        if !(self.auto_rel_tol > 0.0) {
            return Err(HeomError::InvalidInput("auto_rel_tol must be > 0".into()));
        }
        self.terms.iter().try_for_each(LorentzianTerm::validate)
    }

    pub fn beta(&self) -> f64 {
        units::beta_au(self.temperature_k)
    }

    /// The j-th Matsubara frequency (j >= 1).
    pub fn matsubara_frequency(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * j as f64 / self.beta()
    }

    /// J(w) for complex argument, summed over all terms.
    pub fn eval_complex(&self, w: C64) -> C64 {
        self.terms.iter().map(|t| t.eval(w)).sum()
    }
}

/// J(w) in atomic units.
pub fn spectral_density(omega: f64, spec: &BathSpec) -> f64 {
    spec.terms
        .iter()
        .map(|t| {
            let w2 = omega * omega;
            let l1 = ((omega + t.omega1).powi(2) + t.gamma1 * t.gamma1)
                * ((omega - t.omega1).powi(2) + t.gamma1 * t.gamma1);
            let l2 = ((omega + t.omega2).powi(2) + t.gamma2 * t.gamma2)
                * ((omega - t.omega2).powi(2) + t.gamma2 * t.gamma2);
            t.p * w2 * omega / (l1 * l2)
        })
        .sum()
}

/// Bose function 1/(e^{beta z} - 1) for complex z away from the imaginary poles.
fn bose(beta: f64, z: C64) -> C64 {
    let one = C64::new(1.0, 0.0);
    if z.re >= 0.0 {
        let w = (-beta * z).exp();
        w / (one - w)
    } else {
        one / ((beta * z).exp() - one)
    }
}

/// Where an exponential of the expansion comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PoleKind {
    /// Pole `m` (0..4) of Lorentzian term `term`.
    Lorentzian { term: usize, pole: usize },
    Matsubara { j: usize },
}

/// `C(t) = sum_k alpha_k e^{i gamma_k t}`, `C*(t) = sum_k alpha_tilde_k e^{i gamma_k t}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationExpansion {
    pub alpha: Vec<C64>,
    pub alpha_tilde: Vec<C64>,
    pub gamma: Vec<C64>,
    pub kinds: Vec<PoleKind>,
}

impl CorrelationExpansion {
    pub fn n_cor(&self) -> usize {
        self.alpha.len()
    }

    /// Multiply every amplitude by `factor` (coupling strength scales as its square root).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            alpha: self.alpha.iter().map(|a| a * factor).collect(),
            alpha_tilde: self.alpha_tilde.iter().map(|a| a * factor).collect(),
            gamma: self.gamma.clone(),
            kinds: self.kinds.clone(),
        }
    }

    /// C(0) = sum_k alpha_k.
    pub fn c0(&self) -> C64 {
        self.alpha.iter().sum()
    }

    /// `sum_k alpha_tilde_k e^{i gamma_k t}`, which equals `conj(C(t))`.
    pub fn conj_correlation(&self, t: f64) -> C64 {
        self.alpha_tilde
            .iter()
            .zip(&self.gamma)
            .map(|(a, g)| a * (I * g * t).exp())
            .sum()
    }

    pub fn matsubara_count(&self) -> usize {
        self.kinds.iter().filter(|k| matches!(k, PoleKind::Matsubara { .. })).count()
    }
}

/// Residue expansion of the correlation function.
pub fn correlation_expansion(spec: &BathSpec) -> Result<CorrelationExpansion> {
    spec.validate()?;
    let beta = spec.beta();
    let mut alpha = Vec::new();
    let mut alpha_tilde = Vec::new();
    let mut gamma = Vec::new();
    let mut kinds = Vec::new();

    for (l, term) in spec.terms.iter().enumerate() {
        let poles = term.upper_poles();
        let a: Vec<C64> = (0..4)
            .map(|m| 2.0 * I * term.residue(m, bose(beta, poles[m])))
            .collect();
        // alpha_tilde pairs each pole with its mirror -conj(pole).
        let partner = [1, 0, 3, 2];
        for m in 0..4 {
            alpha.push(a[m]);
            alpha_tilde.push(a[partner[m]].conj());
            gamma.push(poles[m]);
            kinds.push(PoleKind::Lorentzian { term: l, pole: m });
        }
    }

    let lorentzian_count = alpha.len();
    if lorentzian_count > spec.max_terms {
        return Err(HeomError::Truncation { cap: spec.max_terms, last_change: f64::INFINITY });
    }

    let matsubara_term = |j: usize| -> (f64, f64) {
        let nu = spec.matsubara_frequency(j);
        // Residue of the Bose factor at i nu_j is 1/beta; the amplitude is real.
        let a = (2.0 * I * spec.eval_complex(C64::new(0.0, nu)) / beta).re;
        (a, nu)
    };

    let mut c0: C64 = alpha.iter().sum();
    let mut push_matsubara = |j: usize, a: f64, nu: f64| {
        alpha.push(C64::new(a, 0.0));
        alpha_tilde.push(C64::new(a, 0.0));
        gamma.push(C64::new(0.0, nu));
        kinds.push(PoleKind::Matsubara { j });
    };

    match spec.matsubara {
        MatsubaraCount::Fixed(count) => {
            if lorentzian_count + count > spec.max_terms {
                return Err(HeomError::Truncation { cap: spec.max_terms, last_change: f64::NAN });
            }
            for j in 1..=count {
                let (a, nu) = matsubara_term(j);
                push_matsubara(j, a, nu);
            }
        }
        MatsubaraCount::Auto => {
            // Below the bath resonances the amplitudes still grow with j, so a
            // small change there says nothing about the remaining tail.
            let tail_start = 2.0
                * spec
                    .terms
                    .iter()
                    .map(|t| (t.omega1 + t.gamma1).max(t.omega2 + t.gamma2))
                    .fold(0.0, f64::max);
            let mut j = 1;
            loop {
                let (a, nu) = matsubara_term(j);
                let change = a.abs() / (c0 + a).norm();
                if change < spec.auto_rel_tol && nu > tail_start {
                    break;
                }
                if lorentzian_count + j > spec.max_terms {
                    return Err(HeomError::Truncation { cap: spec.max_terms, last_change: change });
                }
                push_matsubara(j, a, nu);
                c0 += a;
                j += 1;
            }
        }
    }

    Ok(CorrelationExpansion { alpha, alpha_tilde, gamma, kinds })
}

/// C(t) from the expansion, t >= 0.
pub fn correlation_function(t: f64, exp: &CorrelationExpansion) -> Result<C64> {
    if !(t >= 0.0) {
        return Err(HeomError::InvalidInput(format!("correlation function needs t >= 0, got {t}")));
    }
    Ok(exp.alpha.iter().zip(&exp.gamma).map(|(a, g)| a * (I * g * t).exp()).sum())
}

/// Reference bath shipped with the examples: one four-pole term at 298 K with
/// two Matsubara terms. The lower resonance sits just below the 0.334 eV
/// system gap, so the bath relaxes the system strongly while the hierarchy
/// still converges by level 6; |C(t)| falls to about 9% of C(0) by 24 fs.
pub fn reference_bath() -> BathSpec {
    use units::ev_to_au;
    BathSpec::new(
        vec![LorentzianTerm {
            p: REFERENCE_P_EV5 / units::HARTREE_EV.powi(5),
            omega1: ev_to_au(0.30),
            gamma1: ev_to_au(0.06),
            omega2: ev_to_au(0.50),
            gamma2: ev_to_au(0.10),
        }],
        298.0,
        MatsubaraCount::Fixed(2),
    )
}

/// Amplitude of the reference bath term, eV^5.
pub const REFERENCE_P_EV5: f64 = 2.3e-6;
