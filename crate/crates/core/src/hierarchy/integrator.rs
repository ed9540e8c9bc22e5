//! Embedded Runge-Kutta 4(5) with the Cash-Karp coefficients.

use serde::{Deserialize, Serialize};

use super::rhs::Generator;
use crate::error::{HeomError, Result};
use crate::ops::{C64, Op2};

const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [3.0 / 10.0, -9.0 / 10.0, 6.0 / 5.0];
const A5: [f64; 4] = [-11.0 / 54.0, 5.0 / 2.0, -70.0 / 27.0, 35.0 / 27.0];
const A6: [f64; 5] = [1631.0 / 55296.0, 175.0 / 512.0, 575.0 / 13824.0, 44275.0 / 110592.0, 253.0 / 4096.0];
/// Fifth-order weights.
const B5: [f64; 6] = [37.0 / 378.0, 0.0, 250.0 / 621.0, 125.0 / 594.0, 0.0, 512.0 / 1771.0];
/// Fourth-order weights.
const B4: [f64; 6] = [2825.0 / 27648.0, 0.0, 18575.0 / 48384.0, 13525.0 / 55296.0, 277.0 / 14336.0, 1.0 / 4.0];

/// Step-size control settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RkTolerances {
    pub rel: f64,
    pub abs: f64,
    /// Smallest allowed step relative to the interval length.
    pub min_step_fraction: f64,
}

impl Default for RkTolerances {
    fn default() -> Self {
        Self { rel: 1e-9, abs: 1e-12, min_step_fraction: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Reusable stage buffers.
pub struct CashKarp {
    tol: RkTolerances,
    k: [Vec<Op2>; 6],
    stage: Vec<Op2>,
    trial: Vec<Op2>,
    /// Last accepted (or proposed) step, carried across intervals.
    step: Option<f64>,
    pub stats: StepStats,
}

fn combine(out: &mut [Op2], y: &[Op2], h: f64, k: &[Vec<Op2>], coeffs: &[f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = y[i];
        for (kj, &c) in k.iter().zip(coeffs) {
            if c != 0.0 {
                acc += kj[i] * C64::new(h * c, 0.0);
            }
        }
        *o = acc;
    }
}

impl CashKarp {
    pub fn new(slots: usize, tol: RkTolerances) -> Self {
        let zeros = || vec![Op2::zeros(); slots];
        Self {
            tol,
            k: [zeros(), zeros(), zeros(), zeros(), zeros(), zeros()],
            stage: zeros(),
            trial: zeros(),
            step: None,
            stats: StepStats::default(),
        }
    }

    /// Integrates `y` from `t_start` to `t_end` (either direction) under a
    /// constant field. Steps never cross `t_end`.
    pub fn advance<G: Generator>(
        &mut self,
        gen: &G,
        field: f64,
        y: &mut Vec<Op2>,
        t_start: f64,
        t_end: f64,
    ) -> Result<()> {
        let span = t_end - t_start;
        if span == 0.0 {
            return Ok(());
        }
        let dir = span.signum();
        let min_step = self.tol.min_step_fraction * span.abs();
        let mut t = t_start;
        let mut h = self.step.map_or(span.abs(), |s| s.abs().min(span.abs()));
        let mut fresh_k1 = false;

        while dir * (t_end - t) > 1e-12 * span.abs() {
            let remaining = (t_end - t).abs();
            let clipped = h >= remaining;
            let h_try = if clipped { remaining } else { h };
            if !fresh_k1 {
                gen.eval(field, y, &mut self.k[0]);
                fresh_k1 = true;
            }
            let err = self.try_step(gen, field, y, dir * h_try);
            if !err.is_finite() {
                return Err(HeomError::NonFinite { time_au: t });
            }
            if err <= 1.0 {
                std::mem::swap(y, &mut self.trial);
                t = if clipped { t_end } else { t + dir * h_try };
                fresh_k1 = false;
                self.stats.accepted += 1;
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // Keep the unclipped step as the proposal for the next interval.
                h = if clipped { h.max(h_try * grow) } else { h_try * grow };
            } else {
                self.stats.rejected += 1;
                h = h_try * (0.9 * err.powf(-0.25)).max(0.1);
                if h < min_step {
                    return Err(HeomError::StepUnderflow { time_au: t, step: h });
                }
            }
        }
        self.step = Some(h);
        Ok(())
    }

    /// One trial step of signed size `h` from `y` (with `k[0]` already set).
    /// Leaves the fifth-order result in `trial`, returns the scaled error.
    fn try_step<G: Generator>(&mut self, gen: &G, field: f64, y: &[Op2], h: f64) -> f64 {
        let (k_done, k_rest) = self.k.split_at_mut(1);
        combine(&mut self.stage, y, h, k_done, &A2);
        gen.eval(field, &self.stage, &mut k_rest[0]);

        let (k_done, k_rest) = self.k.split_at_mut(2);
        combine(&mut self.stage, y, h, k_done, &A3);
        gen.eval(field, &self.stage, &mut k_rest[0]);

        let (k_done, k_rest) = self.k.split_at_mut(3);
        combine(&mut self.stage, y, h, k_done, &A4);
        gen.eval(field, &self.stage, &mut k_rest[0]);

        let (k_done, k_rest) = self.k.split_at_mut(4);
        combine(&mut self.stage, y, h, k_done, &A5);
        gen.eval(field, &self.stage, &mut k_rest[0]);

        let (k_done, k_rest) = self.k.split_at_mut(5);
        combine(&mut self.stage, y, h, k_done, &A6);
        gen.eval(field, &self.stage, &mut k_rest[0]);

        combine(&mut self.trial, y, h, &self.k, &B5);

        let mut worst: f64 = 0.0;
        for i in 0..y.len() {
            let mut err = Op2::zeros();
            for (kj, (&b5, &b4)) in self.k.iter().zip(B5.iter().zip(&B4)) {
                err += kj[i] * C64::new(h * (b5 - b4), 0.0);
            }
            for (e, (a, b)) in err.iter().zip(y[i].iter().zip(self.trial[i].iter())) {
                let scale = self.tol.abs + self.tol.rel * a.norm().max(b.norm());
                let ratio = e.norm() / scale;
                if ratio.is_nan() {
                    return f64::NAN;
                }
                worst = worst.max(ratio);
            }
        }
        worst
    }
}
