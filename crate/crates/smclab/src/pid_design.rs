//! Two-step robust PID synthesis with disturbance-sensitivity analysis.
//!
//! The cascade controller `C(s) = gamma (tau s + 1)(T_I s + 1) / (T_I s)`
//! cancels the stable plant pole at `-1/tau`. Step one picks the overall
//! gain from the worst-case disturbance amplification, `gamma = 1/S_max`;
//! step two picks the integration time constant from a prescribed phase
//! margin of the open loop `L(s) = K gamma (T_I s + 1) / (T_I s^2)`.

use crate::plant::{plant_tf, PlantModel, RationalTF};
use crate::solve::{bisect_root, golden_section_min};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum DesignError {
    InvalidInput(&'static str),
}

impl fmt::Display for DesignError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DesignError::InvalidInput(what) => write!(f, "invalid design input: {what}"),
        }
    }
}

impl std::error::Error for DesignError {}

/// Cascade-form PID design: gain, canceling time constant, integration
/// time constant, phase margin, worst-case sensitivity and crossover.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidDesign {
    pub gamma: f64,
    pub tau: f64,
    pub t_i: f64,
    /// Design phase margin [rad].
    pub phi: f64,
    /// Worst-case disturbance amplification `1/gamma` (linear magnitude).
    pub s_max: f64,
    /// Open-loop crossover frequency [rad/s].
    pub omega_s: f64,
}

/// Parallel-form gains `u = Kp e + Ki ∫e + Kd e'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParallelPidGains {
    #[serde(rename = "Kp")]
    pub kp: f64,
    #[serde(rename = "Ki")]
    pub ki: f64,
    #[serde(rename = "Kd")]
    pub kd: f64,
}

/// Two-step design from the worst-case amplification in dB (typically
/// negative) and the phase margin in degrees.
pub fn design_pid(
    k: f64,
    tau: f64,
    s_max_db: f64,
    phi_deg: f64,
) -> Result<PidDesign, DesignError> {
    if !s_max_db.is_finite() {
        return Err(DesignError::InvalidInput("s_max_db"));
    }
    let gamma = 10f64.powf(-s_max_db / 20.0);
    design_pid_with_gamma(k, tau, gamma, phi_deg)
}

/// Same design with the proportional gain pinned directly (used to
/// reproduce quantized published gains such as `gamma = 400`).
pub fn design_pid_with_gamma(
    k: f64,
    tau: f64,
    gamma: f64,
    phi_deg: f64,
) -> Result<PidDesign, DesignError> {
    if !(k.is_finite() && k > 0.0) {
        return Err(DesignError::InvalidInput("K"));
    }
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(DesignError::InvalidInput("tau"));
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(DesignError::InvalidInput("gamma"));
    }
    if !(phi_deg > 0.0 && phi_deg < 90.0) {
        return Err(DesignError::InvalidInput("phi_deg"));
    }
    let phi = phi_deg.to_radians();
    let tan_phi = phi.tan();
    let omega_s = k * gamma * (1.0 + tan_phi * tan_phi).sqrt() / tan_phi;
    let t_i = tan_phi / omega_s;
    Ok(PidDesign {
        gamma,
        tau,
        t_i,
        phi,
        s_max: 1.0 / gamma,
        omega_s,
    })
}

/// Exact algebraic conversion to parallel form:
/// `Kp = gamma (T_I + tau)/T_I`, `Ki = gamma/T_I`, `Kd = gamma tau`.
pub fn to_parallel(design: &PidDesign) -> ParallelPidGains {
    ParallelPidGains {
        kp: design.gamma * (design.t_i + design.tau) / design.t_i,
        ki: design.gamma / design.t_i,
        kd: design.gamma * design.tau,
    }
}

/// Magnitude of the input disturbance sensitivity under the canceling PD
/// controller: `K / (sqrt(w^2 tau^2 + 1) sqrt(w^2 + K^2 gamma^2))`.
/// Its supremum is `1/gamma`, attained at `w = 0`.
pub fn syd_pd_magnitude(k: f64, tau: f64, gamma: f64, omega: f64) -> f64 {
    k / ((omega * omega * tau * tau + 1.0).sqrt()
        * (omega * omega + k * k * gamma * gamma).sqrt())
}

/// Complex input disturbance sensitivity under the PID controller,
/// `S_yd = G / (1 + G C)` in factored form:
/// `K T_I s / ((tau s + 1)(T_I s^2 + K gamma T_I s + K gamma))` at `s = jw`.
pub fn syd_pid_response(k: f64, tau: f64, gamma: f64, t_i: f64, omega: f64) -> Complex64 {
    let s = Complex64::new(0.0, omega);
    let num = k * t_i * s;
    let den = (tau * s + 1.0) * (t_i * s * s + k * gamma * t_i * s + k * gamma);
    num / den
}

/// Linear magnitude of [`syd_pid_response`].
pub fn syd_pid_magnitude(k: f64, tau: f64, gamma: f64, t_i: f64, omega: f64) -> f64 {
    if omega == 0.0 {
        return 0.0;
    }
    syd_pid_response(k, tau, gamma, t_i, omega).norm()
}

/// Numerically maximizes `|S_yd,PID|`: coarse log grid over
/// `[1e-2, 1e4]` rad/s followed by golden-section refinement. Returns
/// `(omega_max, peak_dB)`.
pub fn syd_pid_peak(design: &PidDesign, k: f64, tau: f64) -> (f64, f64) {
    let (lo, hi, n) = (1e-2f64, 1e4f64, 1000usize);
    let step = (hi / lo).powf(1.0 / (n as f64 - 1.0));
    let mut best_i = 0usize;
    let mut best = f64::NEG_INFINITY;
    let mut w = lo;
    for i in 0..n {
        let m = syd_pid_magnitude(k, tau, design.gamma, design.t_i, w);
        if m > best {
            best = m;
            best_i = i;
        }
        w *= step;
    }
    let wa = lo * step.powi(best_i.saturating_sub(1) as i32);
    let wb = lo * step.powi((best_i + 1).min(n - 1) as i32);
    let neg_mag_log = |lw: f64| -syd_pid_magnitude(k, tau, design.gamma, design.t_i, lw.exp());
    let lw = golden_section_min(neg_mag_log, wa.ln(), wb.ln(), 1e-10);
    let omega_max = lw.exp();
    let peak = syd_pid_magnitude(k, tau, design.gamma, design.t_i, omega_max);
    (omega_max, 20.0 * peak.log10())
}

/// Open-loop transfer function `L(jw)` of the pole-canceled loop,
/// `K gamma (T_I jw + 1) / (T_I (jw)^2)`.
pub fn open_loop_response(design: &PidDesign, k: f64, omega: f64) -> Complex64 {
    let s = Complex64::new(0.0, omega);
    k * design.gamma * (design.t_i * s + 1.0) / (design.t_i * s * s)
}

/// Solves `|L(jw_s)| = 1` and returns `(omega_s, phase_margin)` with the
/// margin `pi + arg L(jw_s)`. For a design produced by the two-step
/// procedure the margin reproduces the design `phi`.
pub fn open_loop_margins(design: &PidDesign, k: f64) -> (f64, f64) {
    let mag = |w: f64| open_loop_response(design, k, w).norm();
    // |L| is strictly decreasing in w; bracket on a log scale
    let mut lo = design.omega_s.max(1e-12) * 1e-6;
    let mut hi = design.omega_s.max(1e-12) * 1e6;
    while mag(lo) < 1.0 {
        lo *= 1e-3;
    }
    while mag(hi) > 1.0 {
        hi *= 1e3;
    }
    let lw = bisect_root(|lw: f64| mag(lw.exp()).ln(), lo.ln(), hi.ln(), 1e-15);
    let omega_s = lw.exp();
    let margin = std::f64::consts::PI + open_loop_response(design, k, omega_s).arg();
    (omega_s, margin)
}

/// The cascade PID controller as a rational transfer function,
/// `gamma (tau s + 1)(T_I s + 1) / (T_I s)` (improper).
pub fn pid_controller_tf(design: &PidDesign) -> RationalTF {
    let num = [
        design.gamma,
        design.gamma * (design.tau + design.t_i),
        design.gamma * design.tau * design.t_i,
    ];
    RationalTF::new(num.to_vec(), vec![0.0, design.t_i]).expect("T_I > 0")
}

/// `S_yd = G / (1 + G C)` assembled from generic rational-function
/// arithmetic; the independent route used to cross-check
/// [`syd_pid_response`].
pub fn syd_via_rational(model: &PlantModel, design: &PidDesign) -> RationalTF {
    let g = plant_tf(model, false);
    let c = pid_controller_tf(design);
    let one_plus_gc = RationalTF::one().add(&g.series(&c));
    g.div(&one_plus_gc).expect("closed loop is well-posed")
}
