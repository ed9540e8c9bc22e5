//! Unit conversions. Everything inside the crate is in atomic units
//! (hbar = 1, energies in hartree, times in atomic time units).

/// One atomic unit of time in femtoseconds.
pub const AU_TIME_FS: f64 = 0.024_188_84;
/// One hartree in electron-volts.
pub const HARTREE_EV: f64 = 27.211_386;
/// Boltzmann constant in eV/K.
pub const BOLTZMANN_EV_PER_K: f64 = 8.617_333_262e-5;

pub fn fs_to_au(t_fs: f64) -> f64 {
    t_fs / AU_TIME_FS
}

pub fn au_to_fs(t_au: f64) -> f64 {
    t_au * AU_TIME_FS
}

pub fn ev_to_au(e_ev: f64) -> f64 {
    e_ev / HARTREE_EV
}

pub fn au_to_ev(e_au: f64) -> f64 {
    e_au * HARTREE_EV
}

/// Thermal energy k_B T in hartree.
pub fn kelvin_to_au(t_k: f64) -> f64 {
    ev_to_au(BOLTZMANN_EV_PER_K * t_k)
}

/// Inverse temperature beta = 1/(k_B T) in 1/hartree.
pub fn beta_au(t_k: f64) -> f64 {
    1.0 / kelvin_to_au(t_k)
}
