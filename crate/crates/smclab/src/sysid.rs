//! Correlation-based frequency-response estimation and least-squares
//! fitting of the two-parameter plant model.
//!
//! At each excitation frequency the magnitude is the peak of the
//! cross-correlation over the autocorrelation at lag zero,
//! `|G| = R_uy,max / R_uu(0)`, and the phase follows from the lag between
//! the correlation peaks, `arg G = -w_d * dtau`.

use crate::plant::PhysicalParams;
use crate::solve::golden_section_min;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum SysidError {
    /// Record too short, unequal lengths, or under-sampled excitation.
    InsufficientData(String),
    /// Degenerate (constant) input excitation.
    NonPositiveAutocorrelation,
    /// The scalar least-squares search did not bracket an interior minimum.
    FitDiverged,
}

impl fmt::Display for SysidError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SysidError::InsufficientData(why) => write!(f, "insufficient data: {why}"),
            SysidError::NonPositiveAutocorrelation => {
                write!(f, "input autocorrelation at lag 0 is not positive")
            }
            SysidError::FitDiverged => write!(f, "least-squares fit did not bracket a minimum"),
        }
    }
}

impl std::error::Error for SysidError {}

/// One estimated frequency-response point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrfPoint {
    pub omega: f64,
    /// Gain magnitude `R_uy,max / R_uu(0)`.
    pub magnitude: f64,
    /// Phase `-omega * delta_tau`, wrapped to `(-2 pi, 0]` [rad].
    pub phase: f64,
    /// Input autocorrelation at lag zero.
    pub r_uu_zero: f64,
    /// Peak cross-correlation value.
    pub r_uy_max: f64,
    /// Lag of the cross-correlation peak relative to the autocorrelation
    /// peak (which sits at lag zero) [s].
    pub delta_tau: f64,
}

/// Fraction of each record discarded before correlating, as a steady-state
/// guard against the transient at the start of the experiment.
const TRANSIENT_DISCARD: f64 = 0.2;

/// Estimates magnitude and phase at the excitation frequency `omega` from
/// matched input/output records sampled at `sample_rate` Hz.
///
/// The records must retain at least `n_periods` full periods after the
/// leading 20% transient discard, with at least 8 samples per period.
/// Sample means are removed, and circular correlations over an integer
/// number of periods restrict lags to one period; the peak lag is refined
/// by parabolic interpolation.
pub fn estimate_frf_point(
    u: &[f64],
    y: &[f64],
    omega: f64,
    sample_rate: f64,
    n_periods: usize,
) -> Result<FrfPoint, SysidError> {
    if u.len() != y.len() {
        return Err(SysidError::InsufficientData(format!(
            "input and output lengths differ ({} vs {})",
            u.len(),
            y.len()
        )));
    }
    if !(omega > 0.0) || !(sample_rate > 0.0) || n_periods == 0 {
        return Err(SysidError::InsufficientData(
            "omega, sample_rate and n_periods must be positive".into(),
        ));
    }
    let samples_per_period = sample_rate * TAU / omega;
    if samples_per_period < 8.0 {
        return Err(SysidError::InsufficientData(format!(
            "only {samples_per_period:.1} samples per period (need >= 8)"
        )));
    }
    let n = (n_periods as f64 * samples_per_period).round() as usize;
    let keep = (u.len() as f64 * (1.0 - TRANSIENT_DISCARD)) as usize;
    if keep < n {
        return Err(SysidError::InsufficientData(format!(
            "need {n} steady-state samples, have {keep} after transient discard"
        )));
    }
    let u = &u[u.len() - n..];
    let y = &y[y.len() - n..];

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (u_mean, y_mean) = (mean(u), mean(y));
    let uc: Vec<f64> = u.iter().map(|v| v - u_mean).collect();
    let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();

    let r_uu_zero = uc.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let u_peak = uc.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(r_uu_zero > f64::EPSILON * u_peak * u_peak) || u_peak == 0.0 {
        return Err(SysidError::NonPositiveAutocorrelation);
    }

    // circular cross-correlation over lags within one period
    let period = samples_per_period.round() as usize;
    let r_uy = |lag: isize| -> f64 {
        let mut acc = 0.0;
        for k in 0..n {
            let idx = (k as isize + lag).rem_euclid(n as isize) as usize;
            acc += uc[k] * yc[idx];
        }
        acc / n as f64
    };
    // coarse scan with a stride, then exact refinement around the winner;
    // the cross-correlation of the near-sinusoidal steady state is a
    // single smooth lobe per period, so a 256-point scan cannot miss it
    let stride = (period / 256).max(1) as isize;
    let mut best_lag = 0isize;
    let mut best_val = f64::NEG_INFINITY;
    let mut lag = 0isize;
    while lag < period as isize {
        let v = r_uy(lag);
        if v > best_val {
            best_val = v;
            best_lag = lag;
        }
        lag += stride;
    }
    for l in (best_lag - stride)..=(best_lag + stride) {
        let v = r_uy(l);
        if v > best_val {
            best_val = v;
            best_lag = l;
        }
    }
    best_lag = best_lag.rem_euclid(period as isize);
    // parabolic refinement through the neighbors of the discrete peak
    let (rm, r0, rp) = (r_uy(best_lag - 1), best_val, r_uy(best_lag + 1));
    let denom = rm - 2.0 * r0 + rp;
    let (delta, r_max) = if denom < 0.0 {
        let d = 0.5 * (rm - rp) / denom;
        (d, r0 - 0.25 * (rm - rp) * d)
    } else {
        (0.0, r0)
    };
    let lag_refined = best_lag as f64 + delta;
    let delta_tau = lag_refined / sample_rate;
    let mut phase = -omega * delta_tau;
    while phase > 0.0 {
        phase -= TAU;
    }
    while phase <= -TAU {
        phase += TAU;
    }

    Ok(FrfPoint {
        omega,
        magnitude: r_max / r_uu_zero,
        phase,
        r_uu_zero,
        r_uy_max: r_max,
        delta_tau,
    })
}

/// Result of the magnitude-only least-squares fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantFit {
    pub sigma: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub tau: f64,
}

/// Model magnitude `|G(jw; sigma)|` with `K = Psi/(R sigma)`,
/// `tau = m/sigma`.
fn model_magnitude(params: &PhysicalParams, sigma: f64, omega: f64) -> f64 {
    let k = params.psi / (params.r * sigma);
    let tau = params.m / sigma;
    k / (omega * (omega * omega * tau * tau + 1.0).sqrt())
}

const SIGMA_LO: f64 = 1e-3;
const SIGMA_HI: f64 = 1e6;

/// Fits the damping `sigma` by scalar least squares over the magnitudes of
/// the points inside `fit_range` (only magnitude data enters the fit).
/// Searches `sigma` on a log grid over `(1e-3, 1e6)` and refines the
/// bracketed minimum by golden section.
pub fn fit_plant(
    points: &[FrfPoint],
    fit_range: (f64, f64),
    params: &PhysicalParams,
) -> Result<PlantFit, SysidError> {
    let selected: Vec<&FrfPoint> = points
        .iter()
        .filter(|p| p.omega >= fit_range.0 && p.omega <= fit_range.1)
        .collect();
    if selected.len() < 3 {
        return Err(SysidError::InsufficientData(format!(
            "{} points inside fit range (need >= 3)",
            selected.len()
        )));
    }
    let objective = |ln_sigma: f64| -> f64 {
        let sigma = ln_sigma.exp();
        selected
            .iter()
            .map(|p| {
                let m = model_magnitude(params, sigma, p.omega);
                (m - p.magnitude).powi(2)
            })
            .sum()
    };
    // coarse scan to bracket the interior minimum
    let n_scan = 400;
    let (lo, hi) = (SIGMA_LO.ln(), SIGMA_HI.ln());
    let step = (hi - lo) / (n_scan as f64 - 1.0);
    let mut best_i = 0;
    let mut best = f64::INFINITY;
    for i in 0..n_scan {
        let v = objective(lo + step * i as f64);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    if best_i == 0 || best_i == n_scan - 1 {
        return Err(SysidError::FitDiverged);
    }
    let a = lo + step * (best_i - 1) as f64;
    let b = lo + step * (best_i + 1) as f64;
    let sigma = golden_section_min(objective, a, b, 1e-14).exp();
    Ok(PlantFit {
        sigma,
        k: params.psi / (params.r * sigma),
        tau: params.m / sigma,
    })
}
