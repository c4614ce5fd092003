//! Describing-function analysis of the CSMC loop: harmonic-balance
//! limit-cycle (chattering) prediction and the amplitude-dependent
//! disturbance sensitivity map.
//!
//! The CSMC nonlinearity admits a closed first-harmonic describing function
//!
//! ```text
//! N(A, w) = 2 a1 k1 / (pi A^(2/3))
//!         + j 2 a2 k2 w^(1/2) / (pi A^(1/2))
//!         + (4 k3 / (pi A)) (1 / (j w))
//! ```
//!
//! Solutions of the harmonic balance equation `N(A, w) W(jw) = -1`, with
//! `W` the plant including its parasitic actuator lag, predict the residual
//! steady-state oscillation. Away from that locus the quasi-linear
//! disturbance sensitivity is `S = W / (1 + N W)`.

use crate::controllers::CsmcGains;
use crate::plant::RationalTF;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

/// First-harmonic coefficients of the fractional-power terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DfCoefficients {
    pub alpha1: f64,
    pub alpha2: f64,
}

impl Default for DfCoefficients {
    fn default() -> Self {
        Self { alpha1: 1.821, alpha2: 1.748 }
    }
}

const HB_RESIDUAL_TOL: f64 = 1e-9;
const NEAR_LIMIT_CYCLE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum HbError {
    /// Amplitude, frequency or the dimensionless `KK` outside its domain.
    DomainError(&'static str),
    /// The damped Newton iteration did not reach the residual tolerance.
    NoConvergence { residual: f64, amplitude: f64, omega: f64 },
    /// Nonpositive amplitude/frequency supplied as the initial guess.
    NonPhysicalSolution,
    /// The evaluation point sits on the predicted oscillation locus where
    /// `1 + N W` vanishes.
    NearLimitCycle { amplitude: f64, omega: f64 },
}

impl fmt::Display for HbError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HbError::DomainError(what) => write!(f, "argument outside domain: {what}"),
            HbError::NoConvergence { residual, amplitude, omega } => write!(
                f,
                "harmonic balance did not converge (residual {residual:.3e} at A={amplitude:.3e}, w={omega:.3e})"
            ),
            HbError::NonPhysicalSolution => {
                write!(f, "amplitude and frequency must be positive")
            }
            HbError::NearLimitCycle { amplitude, omega } => write!(
                f,
                "point (A={amplitude:.3e}, w={omega:.3e}) lies on the predicted limit-cycle locus"
            ),
        }
    }
}

impl std::error::Error for HbError {}

/// Describing function `N(A, w)` of the CSMC law for oscillation amplitude
/// `A > 0` at angular frequency `w > 0`.
pub fn describing_function(
    gains: &CsmcGains,
    amplitude: f64,
    omega: f64,
) -> Result<Complex64, HbError> {
    describing_function_with(&DfCoefficients::default(), gains, amplitude, omega)
}

/// [`describing_function`] with explicit first-harmonic coefficients.
pub fn describing_function_with(
    coeffs: &DfCoefficients,
    gains: &CsmcGains,
    amplitude: f64,
    omega: f64,
) -> Result<Complex64, HbError> {
    if !(amplitude > 0.0) {
        return Err(HbError::DomainError("amplitude"));
    }
    if !(omega > 0.0) {
        return Err(HbError::DomainError("omega"));
    }
    let re = 2.0 * coeffs.alpha1 * gains.k1 / (PI * amplitude.powf(2.0 / 3.0));
    let im_k2 = 2.0 * coeffs.alpha2 * gains.k2 * omega.sqrt() / (PI * amplitude.sqrt());
    // (4 k3 / (pi A)) * (1 / (j w)) = -j 4 k3 / (pi A w)
    let im_k3 = -4.0 * gains.k3 / (PI * amplitude * omega);
    Ok(Complex64::new(re, im_k2 + im_k3))
}

/// Predicted limit cycle: amplitude, angular frequency, achieved residual
/// `|N W + 1|` and the dimensionless product `KK = w * mu` when the
/// actuator time constant is known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HbSolution {
    #[serde(rename = "A")]
    pub amplitude: f64,
    pub omega: f64,
    pub residual: f64,
    #[serde(rename = "KK")]
    pub kk: Option<f64>,
}

fn hb_residual(gains: &CsmcGains, w: &RationalTF, amplitude: f64, omega: f64) -> Complex64 {
    let n = describing_function(gains, amplitude, omega).expect("positive by construction");
    let wjw = w.freq_response(omega).unwrap_or(Complex64::new(f64::INFINITY, 0.0));
    n * wjw + Complex64::new(1.0, 0.0)
}

/// Solves `N(A, w) W(jw) = -1` by damped Newton iteration in
/// `(ln A, ln w)` with a finite-difference Jacobian, falling back to a
/// log-grid scan around the guess when the iteration stalls.
///
/// The log-space parametrization keeps the iterates positive throughout;
/// a nonpositive initial guess is rejected as [`HbError::NonPhysicalSolution`].
pub fn hb_solve(
    gains: &CsmcGains,
    w: &RationalTF,
    guess: (f64, f64),
    mu: Option<f64>,
) -> Result<HbSolution, HbError> {
    let (a0, w0) = guess;
    if !(a0 > 0.0 && w0 > 0.0) || !a0.is_finite() || !w0.is_finite() {
        return Err(HbError::NonPhysicalSolution);
    }
    if let Some(sol) = newton_from(gains, w, a0, w0) {
        return Ok(finish(sol, mu));
    }
    // fallback: seed from a coarse log-grid scan around the guess
    let (mut best_a, mut best_w, mut best_r) = (a0, w0, f64::INFINITY);
    let (na, nw) = (160, 160);
    for i in 0..na {
        let a = a0 * 10f64.powf(-6.0 + 12.0 * i as f64 / (na - 1) as f64);
        for j in 0..nw {
            let om = w0 * 10f64.powf(-3.0 + 6.0 * j as f64 / (nw - 1) as f64);
            let r = hb_residual(gains, w, a, om).norm();
            if r < best_r {
                (best_a, best_w, best_r) = (a, om, r);
            }
        }
    }
    if let Some(sol) = newton_from(gains, w, best_a, best_w) {
        return Ok(finish(sol, mu));
    }
    Err(HbError::NoConvergence { residual: best_r, amplitude: best_a, omega: best_w })
}

fn finish(sol: (f64, f64, f64), mu: Option<f64>) -> HbSolution {
    let (amplitude, omega, residual) = sol;
    HbSolution { amplitude, omega, residual, kk: mu.map(|m| omega * m) }
}

fn newton_from(
    gains: &CsmcGains,
    w: &RationalTF,
    a0: f64,
    w0: f64,
) -> Option<(f64, f64, f64)> {
    let f = |x: [f64; 2]| -> [f64; 2] {
        let r = hb_residual(gains, w, x[0].exp(), x[1].exp());
        [r.re, r.im]
    };
    let norm2 = |v: [f64; 2]| (v[0] * v[0] + v[1] * v[1]).sqrt();
    let mut x = [a0.ln(), w0.ln()];
    let mut fx = f(x);
    for _ in 0..200 {
        if norm2(fx) <= HB_RESIDUAL_TOL {
            return Some((x[0].exp(), x[1].exp(), norm2(fx)));
        }
        // finite-difference Jacobian in log coordinates
        let h = 1e-7;
        let mut jac = [[0.0; 2]; 2];
        for col in 0..2 {
            let mut xp = x;
            xp[col] += h;
            let fp = f(xp);
            jac[0][col] = (fp[0] - fx[0]) / h;
            jac[1][col] = (fp[1] - fx[1]) / h;
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dx = [
            -(jac[1][1] * fx[0] - jac[0][1] * fx[1]) / det,
            -(-jac[1][0] * fx[0] + jac[0][0] * fx[1]) / det,
        ];
        // damped step: backtrack until the residual decreases
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let xt = [x[0] + lambda * dx[0], x[1] + lambda * dx[1]];
            let ft = f(xt);
            if norm2(ft) < norm2(fx) {
                x = xt;
                fx = ft;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    if norm2(fx) <= HB_RESIDUAL_TOL {
        return Some((x[0].exp(), x[1].exp(), norm2(fx)));
    }
    None
}

/// Closed-form chattering prediction for the normalized plant:
/// `A = L (2 a1 l1 / (pi KK^2 (1 - KK^2)))^(3/2) mu^3`, `w = KK / mu`,
/// valid for `0 < KK < 1`. Serves as analytic cross-check and initial
/// guess for [`hb_solve`].
pub fn predict_chattering(
    lipschitz: f64,
    lambda1: f64,
    mu: f64,
    kk: f64,
) -> Result<(f64, f64), HbError> {
    if !(kk > 0.0 && kk < 1.0) {
        return Err(HbError::DomainError("KK"));
    }
    if !(lipschitz > 0.0) {
        return Err(HbError::DomainError("L"));
    }
    if !(mu > 0.0) {
        return Err(HbError::DomainError("mu"));
    }
    if !(lambda1 > 0.0) {
        return Err(HbError::DomainError("lambda1"));
    }
    let a1 = DfCoefficients::default().alpha1;
    let amplitude = lipschitz
        * (2.0 * a1 * lambda1 / (PI * kk * kk * (1.0 - kk * kk))).powf(1.5)
        * mu.powi(3);
    Ok((amplitude, kk / mu))
}

/// Quasi-linear disturbance sensitivity `S = W / (1 + N(A, w) W)` of the
/// CSMC loop at oscillation amplitude `A`.
pub fn csmc_sensitivity(
    gains: &CsmcGains,
    w: &RationalTF,
    amplitude: f64,
    omega: f64,
) -> Result<Complex64, HbError> {
    let n = describing_function(gains, amplitude, omega)?;
    let wjw = w
        .freq_response(omega)
        .map_err(|_| HbError::DomainError("omega (pole on axis)"))?;
    let den = Complex64::new(1.0, 0.0) + n * wjw;
    if den.norm() < NEAR_LIMIT_CYCLE_TOL {
        return Err(HbError::NearLimitCycle { amplitude, omega });
    }
    Ok(wjw / den)
}

/// Frequency-amplitude magnitude map of the CSMC disturbance sensitivity.
/// `magnitude_db[i][j]` is `20 log10 |S|` at `a_grid[i]`, `omega_grid[j]`;
/// near-limit-cycle cells hold `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityMap {
    pub omega_grid: Vec<f64>,
    pub a_grid: Vec<f64>,
    pub magnitude_db: Vec<Vec<f64>>,
}

/// Default map grids bracketing the region of interest around the
/// identified plant: 60 log-spaced frequencies in [1, 2000] rad/s and
/// 40 log-spaced amplitudes in [1e-5, 1e-2] m.
pub fn default_grids() -> (Vec<f64>, Vec<f64>) {
    (log_grid(1.0, 2000.0, 60), log_grid(1e-5, 1e-2, 40))
}

/// Log-spaced grid helper.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let step = (hi / lo).powf(1.0 / (n as f64 - 1.0));
    (0..n).map(|i| lo * step.powi(i as i32)).collect()
}

/// Evaluates the sensitivity map elementwise over the supplied grids.
pub fn sensitivity_map(
    gains: &CsmcGains,
    w: &RationalTF,
    omega_grid: &[f64],
    a_grid: &[f64],
) -> SensitivityMap {
    let magnitude_db = a_grid
        .iter()
        .map(|&a| {
            omega_grid
                .iter()
                .map(|&om| match csmc_sensitivity(gains, w, a, om) {
                    Ok(s) => 20.0 * s.norm().log10(),
                    Err(_) => f64::NAN,
                })
                .collect()
        })
        .collect();
    SensitivityMap {
        omega_grid: omega_grid.to_vec(),
        a_grid: a_grid.to_vec(),
        magnitude_db,
    }
}
