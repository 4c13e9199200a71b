//! Effective cascaded gains, NOMA and OMA rates, and the lifted quadratic
//! forms consumed by the phase optimizer.
//!
//! With one active port per user and maximum-ratio reception across the BS
//! array, the gain of user `i` is `|| H_br diag(h_i) v ||^2` where `h_i` is the
//! chosen column of `H_ri`. This equals `v^H A_i v` with
//! `A_i = diag(h_i)^H H_br^H H_br diag(h_i)`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{complex_normal_matrix, CMat, CVec};
use crate::error::{Error, Result};
use crate::scenario::ScenarioConfig;

/// A fluid-antenna port: 1-based grid coordinates and linear index
/// `k = k1 + (k2 - 1) K1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PortIndex {
    pub k1: usize,
    pub k2: usize,
    pub k: usize,
}

impl PortIndex {
    pub fn from_grid(k1: usize, k2: usize, grid_k1: usize, grid_k2: usize) -> Result<Self> {
        if k1 == 0 || k2 == 0 || k1 > grid_k1 || k2 > grid_k2 {
            return Err(Error::Domain(format!(
                "port ({k1}, {k2}) outside {grid_k1}x{grid_k2} grid"
            )));
        }
        Ok(Self {
            k1,
            k2,
            k: k1 + (k2 - 1) * grid_k1,
        })
    }

    pub fn from_linear(k: usize, grid_k1: usize, grid_k2: usize) -> Result<Self> {
        if k == 0 || k > grid_k1 * grid_k2 {
            return Err(Error::Domain(format!("port {k} outside 1..={}", grid_k1 * grid_k2)));
        }
        Ok(Self {
            k1: (k - 1) % grid_k1 + 1,
            k2: (k - 1) / grid_k1 + 1,
            k,
        })
    }

    /// 0-based column of `H_ri`.
    pub fn column(&self) -> usize {
        self.k - 1
    }

    /// Physical position of the port on the aperture, in meters.
    pub fn position(&self, cfg: &ScenarioConfig) -> (f64, f64) {
        let step = |k: usize, w: f64| {
            if k > 1 {
                w * cfg.lambda / (k - 1) as f64
            } else {
                0.0
            }
        };
        (
            (self.k1 - 1) as f64 * step(cfg.k1, cfg.w1),
            (self.k2 - 1) as f64 * step(cfg.k2, cfg.w2),
        )
    }
}

/// Quadratic form `g(v) = v^H A v` of one user's gain, with the `L x M`
/// factor `B = H_br diag(h)` kept so that `A = B^H B` never needs to be
/// touched when only gains are wanted.
#[derive(Debug, Clone)]
pub struct LiftedForm {
    pub a: CMat,
    pub factor: CMat,
}

impl LiftedForm {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn gain(&self, v: &CVec) -> f64 {
        (&self.factor * v).norm_squared()
    }

    /// `Tr(A V)`, real part (the imaginary part vanishes for Hermitian `V`).
    pub fn trace_with(&self, v: &CMat) -> f64 {
        let m = self.dim();
        let mut s = 0.0;
        for j in 0..m {
            for i in 0..m {
                // Tr(A V) = sum_ij A_ij V_ji
                let a = self.a[(i, j)];
                let b = v[(j, i)];
                s += a.re * b.re - a.im * b.im;
            }
        }
        s
    }
}

fn check_chain(h_br: &CMat, h_port: &CVec) -> Result<()> {
    if h_br.ncols() != h_port.len() {
        return Err(Error::Shape(format!(
            "H_br is {}x{} but the port channel has {} entries",
            h_br.nrows(),
            h_br.ncols(),
            h_port.len()
        )));
    }
    Ok(())
}

/// `|| H_br diag(h_port) v ||^2`.
pub fn effective_gain(h_br: &CMat, v: &CVec, h_port: &CVec) -> Result<f64> {
    check_chain(h_br, h_port)?;
    if v.len() != h_port.len() {
        return Err(Error::Shape(format!(
            "phase vector has {} entries, expected {}",
            v.len(),
            h_port.len()
        )));
    }
    let x = h_port.component_mul(v);
    Ok((h_br * x).norm_squared())
}

pub fn lift_matrix(h_br: &CMat, h_port: &CVec) -> Result<LiftedForm> {
    check_chain(h_br, h_port)?;
    let factor = CMat::from_fn(h_br.nrows(), h_br.ncols(), |i, j| h_br[(i, j)] * h_port[j]);
    let mut a = factor.adjoint() * &factor;
    // exact Hermitian symmetry
    for i in 0..a.nrows() {
        a[(i, i)].im = 0.0;
        for j in i + 1..a.ncols() {
            a[(j, i)] = a[(i, j)].conj();
        }
    }
    Ok(LiftedForm { a, factor })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MultipleAccess {
    Noma,
    Oma,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub r_n: f64,
    pub r_m: f64,
    pub r_sum: f64,
    /// SINR of decoding the far user's signal at the near user (NOMA only).
    pub gamma_sic: Option<f64>,
    pub meets_rmin: bool,
    pub scheme: MultipleAccess,
}

fn check_gains(g_n: f64, g_m: f64) -> Result<()> {
    if !(g_n >= 0.0 && g_m >= 0.0) {
        return Err(Error::Domain(format!("gains must be non-negative, got ({g_n}, {g_m})")));
    }
    Ok(())
}

pub fn noma_rates(g_n: f64, g_m: f64, cfg: &ScenarioConfig) -> Result<RateReport> {
    check_gains(g_n, g_m)?;
    let (a_n, a_m, rho) = (cfg.a_n, cfg.a_m, cfg.rho);
    let r_n = (a_n * rho * g_n).ln_1p() / std::f64::consts::LN_2;
    let sinr_m = g_m * a_m * rho / (g_m * a_n * rho + 1.0);
    let r_m = sinr_m.ln_1p() / std::f64::consts::LN_2;
    let r_sum = r_n + r_m;
    Ok(RateReport {
        r_n,
        r_m,
        r_sum,
        gamma_sic: Some(g_n * a_m * rho / (g_n * a_n * rho + 1.0)),
        meets_rmin: r_sum >= cfg.r_min,
        scheme: MultipleAccess::Noma,
    })
}

/// Equal time sharing with full power in each slot.
pub fn oma_rates(g_n: f64, g_m: f64, cfg: &ScenarioConfig) -> Result<RateReport> {
    check_gains(g_n, g_m)?;
    let r_n = 0.5 * (cfg.rho * g_n).ln_1p() / std::f64::consts::LN_2;
    let r_m = 0.5 * (cfg.rho * g_m).ln_1p() / std::f64::consts::LN_2;
    let r_sum = r_n + r_m;
    Ok(RateReport {
        r_n,
        r_m,
        r_sum,
        gamma_sic: None,
        meets_rmin: r_sum >= cfg.r_min,
        scheme: MultipleAccess::Oma,
    })
}

pub fn rates(access: MultipleAccess, g_n: f64, g_m: f64, cfg: &ScenarioConfig) -> Result<RateReport> {
    match access {
        MultipleAccess::Noma => noma_rates(g_n, g_m, cfg),
        MultipleAccess::Oma => oma_rates(g_n, g_m, cfg),
    }
}

/// Sum rate without the report bookkeeping; gains are clamped at zero.
pub fn sum_rate(access: MultipleAccess, g_n: f64, g_m: f64, cfg: &ScenarioConfig) -> f64 {
    let (g_n, g_m) = (g_n.max(0.0), g_m.max(0.0));
    let lg = |x: f64| x.ln_1p() / std::f64::consts::LN_2;
    match access {
        MultipleAccess::Noma => {
            lg(cfg.a_n * cfg.rho * g_n) + lg(g_m * cfg.a_m * cfg.rho / (g_m * cfg.a_n * cfg.rho + 1.0))
        }
        MultipleAccess::Oma => 0.5 * (lg(cfg.rho * g_n) + lg(cfg.rho * g_m)),
    }
}

/// Imperfect channel estimate `sqrt(1 - sigma^2) H + sigma sqrt(path_gain) E`
/// with `E` i.i.d. `CN(0, 1)`. Variance preserving when
/// `E|H_ij|^2 = path_gain`.
pub fn apply_ipcsi<R: Rng + ?Sized>(h: &CMat, sigma_e: f64, path_gain: f64, rng: &mut R) -> Result<CMat> {
    if !(0.0..1.0).contains(&sigma_e) {
        return Err(Error::Domain(format!("sigma_e = {sigma_e} outside [0, 1)")));
    }
    if sigma_e == 0.0 {
        return Ok(h.clone());
    }
    let e = complex_normal_matrix(h.nrows(), h.ncols(), rng);
    let keep = Complex64::from((1.0 - sigma_e * sigma_e).sqrt());
    Ok(h * keep + e * Complex64::from(sigma_e * path_gain.sqrt()))
}

#[cfg(test)]
/// Smallest eigenvalue of a Hermitian matrix.
pub(crate) fn min_eigenvalue(a: &CMat) -> f64 {
    nalgebra::SymmetricEigen::new(a.clone()).eigenvalues.min()
}
