//! Wigner-function CHSH test:
//! `B = (π²/4)[W(u⁰⁰) + W(u⁰¹) + W(u¹⁰) − W(u¹¹)]` with joint points
//! `u^{mn} = (q_I^m, p_I^m, q_S^n, p_S^n)`. Local realism bounds `|B| ≤ 2`.

use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, GaussianWigner};
use crate::optim::{nelder_mead, NelderMeadOptions};

/// Two phase-space points per party.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DisplacementSettings {
    /// `[(q⁰, p⁰), (q¹, p¹)]` for the idler.
    pub idler: [[f64; 2]; 2],
    /// `[(q⁰, p⁰), (q¹, p¹)]` for the signal.
    pub signal: [[f64; 2]; 2],
}

impl DisplacementSettings {
    /// Order `[q_I⁰, p_I⁰, q_I¹, p_I¹, q_S⁰, p_S⁰, q_S¹, p_S¹]`.
    pub fn from_array(x: [f64; 8]) -> Self {
        Self {
            idler: [[x[0], x[1]], [x[2], x[3]]],
            signal: [[x[4], x[5]], [x[6], x[7]]],
        }
    }

    pub fn to_array(&self) -> [f64; 8] {
        let (i, s) = (self.idler, self.signal);
        [i[0][0], i[0][1], i[1][0], i[1][1], s[0][0], s[0][1], s[1][0], s[1][1]]
    }

    pub fn point(&self, m: usize, n: usize) -> [f64; 4] {
        [self.idler[m][0], self.idler[m][1], self.signal[n][0], self.signal[n][1]]
    }

    /// Exchanges the two settings of the idler.
    pub fn swap_idler(&self) -> Self {
        Self { idler: [self.idler[1], self.idler[0]], ..*self }
    }

    /// Exchanges the two settings of the signal.
    pub fn swap_signal(&self) -> Self {
        Self { signal: [self.signal[1], self.signal[0]], ..*self }
    }
}

fn combine(w: &GaussianWigner, s: &DisplacementSettings) -> f64 {
    let sum = w.eval(&s.point(0, 0)) + w.eval(&s.point(0, 1)) + w.eval(&s.point(1, 0)) - w.eval(&s.point(1, 1));
    0.25 * PI * PI * sum
}

pub fn bell_value(v: &CovarianceMatrix, s: &DisplacementSettings) -> Result<f64> {
    if s.to_array().iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("displacement settings"));
    }
    Ok(combine(&GaussianWigner::new(v)?, s))
}

/// Which displacement settings the optimizer may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SettingsFamily {
    /// All eight coordinates.
    #[default]
    Full,
    /// First setting of each party pinned at the origin; four free coordinates.
    OriginDisplaced,
}

impl SettingsFamily {
    fn dim(self) -> usize {
        match self {
            Self::Full => 8,
            Self::OriginDisplaced => 4,
        }
    }

    /// Settings from whitened coordinates: each joint point
    /// `(idler, signal)` is `L·y` with `V = L Lᵀ`.
    fn settings(self, l: &Matrix4<f64>, y: &[f64]) -> DisplacementSettings {
        let joint = |k: usize| l * Vector4::new(y[k], y[k + 1], y[k + 2], y[k + 3]);
        match self {
            Self::Full => {
                let (a, b) = (joint(0), joint(4));
                DisplacementSettings { idler: [[a[0], a[1]], [b[0], b[1]]], signal: [[a[2], a[3]], [b[2], b[3]]] }
            }
            Self::OriginDisplaced => {
                let a = joint(0);
                DisplacementSettings { idler: [[0.0, 0.0], [a[0], a[1]]], signal: [[0.0, 0.0], [a[2], a[3]]] }
            }
        }
    }
}

impl std::str::FromStr for SettingsFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "origin" | "origin-displaced" => Ok(Self::OriginDisplaced),
            _ => Err(Error::InvalidConfig(format!("unknown settings family `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BellConfig {
    pub seed: u64,
    /// Total starts, including the all-zero one.
    pub restarts: usize,
    pub max_evals: usize,
    pub f_tol: f64,
    pub family: SettingsFamily,
}

impl Default for BellConfig {
    fn default() -> Self {
        Self { seed: 0, restarts: 64, max_evals: 2000, f_tol: 1e-10, family: SettingsFamily::Full }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BellResult {
    /// Largest `|B|` found.
    pub b_max: f64,
    pub settings: DisplacementSettings,
    pub n_restarts_used: usize,
    /// `false` when the best runs hit the evaluation budget and the two
    /// best restarts still disagree by more than the tolerance.
    pub converged: bool,
}

// Extra Nelder–Mead runs from the incumbent; a fresh simplex escapes the
// collapse that stalls a single long run.
const POLISH_ROUNDS: usize = 8;
// Two restarts landing this close are treated as the same maximum.
const AGREEMENT_TOL: f64 = 1e-6;

struct Run {
    x: Vec<f64>,
    value: f64,
    converged: bool,
}

/// Multistart Nelder–Mead maximization of `|B|`. Restarts are independent
/// and evaluated in parallel; the reduction picks the lowest restart index
/// among equal values, so the result does not depend on scheduling.
pub fn bell_max(v: &CovarianceMatrix, cfg: &BellConfig) -> Result<BellResult> {
    if cfg.restarts == 0 || cfg.max_evals == 0 {
        return Err(Error::InvalidConfig("bell optimizer needs at least one restart and evaluation".into()));
    }
    let w = GaussianWigner::new(v)?;
    // Whitening makes the Wigner function isotropic, so one step size
    // suits every squeezing strength.
    let l = v.matrix().cholesky().ok_or(Error::Singular)?.l();
    let family = cfg.family;
    let dim = family.dim();
    let objective = |y: &[f64]| -combine(&w, &family.settings(&l, y)).abs();
    let opts = NelderMeadOptions { initial_step: 0.5, f_tol: cfg.f_tol, max_evals: cfg.max_evals };

    let runs: Vec<Run> = (0..cfg.restarts)
        .into_par_iter()
        .map(|k| {
            let x0: Vec<f64> = if k == 0 {
                vec![0.0; dim]
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(k as u64);
                (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect()
            };
            let r = nelder_mead(objective, &x0, opts);
            Run { x: r.x, value: -r.fx, converged: r.converged }
        })
        .collect();

    let mut order: Vec<usize> = (0..runs.len()).collect();
    // Stable sort keeps the lower index first among ties.
    order.sort_by(|&a, &b| runs[b].value.total_cmp(&runs[a].value));
    let best = &runs[order[0]];
    let spread = order.get(1).map_or(0.0, |&j| best.value - runs[j].value);

    let mut x = best.x.clone();
    let mut value = best.value;
    let mut polish_converged = best.converged;
    for _ in 0..POLISH_ROUNDS {
        let r = nelder_mead(objective, &x, NelderMeadOptions { initial_step: 0.05, ..opts });
        let improved = -r.fx - value;
        if improved > 0.0 {
            x = r.x;
            value = -r.fx;
        }
        polish_converged |= r.converged;
        if improved <= cfg.f_tol {
            break;
        }
    }

    Ok(BellResult {
        b_max: value,
        settings: family.settings(&l, &x),
        n_restarts_used: runs.len(),
        converged: polish_converged || spread <= AGREEMENT_TOL,
    })
}
