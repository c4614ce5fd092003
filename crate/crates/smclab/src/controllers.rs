//! Runtime control laws: the parallel-form PID and the PID-like continuous
//! sliding-mode controller (CSMC).
//!
//! The CSMC law is
//! `u = -k1 |y|^(1/3) sign(y) - k2 |y'|^(1/2) sign(y') - k3 ∫ sign(y) dt`,
//! with gains scaled from the disturbance Lipschitz bound `L`. Both
//! controllers consume an externally supplied derivative estimate; neither
//! differentiates internally.

use crate::pid_design::ParallelPidGains;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Gain scaling constants that minimize the predicted oscillation amplitude
/// for small actuator time constants.
pub const DEFAULT_LAMBDA: [f64; 3] = [2.7, 5.345, 1.1];

#[derive(Debug, Clone, PartialEq)]
pub enum ControllerError {
    InvalidGain(&'static str),
}

impl fmt::Display for ControllerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControllerError::InvalidGain(what) => write!(f, "invalid controller gain: {what}"),
        }
    }
}

impl std::error::Error for ControllerError {}

/// Signed power `|x|^p sign(x)`; `p = 0` yields `sign(x)` with the
/// selection `sign(0) = 0`.
pub fn signed_power(x: f64, p: f64) -> f64 {
    debug_assert!(p >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    x.abs().powf(p) * x.signum()
}

/// CSMC gains derived from a disturbance Lipschitz bound:
/// `k1 = l1 L^(2/3)`, `k2 = l2 L^(1/2)`, `k3 = l3 L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsmcGains {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    #[serde(rename = "L")]
    pub lipschitz: f64,
    pub lambda: [f64; 3],
}

/// Computes CSMC gains from the Lipschitz bound `L > 0` and scaling triple.
pub fn csmc_gains_from_lipschitz(
    lipschitz: f64,
    lambda: [f64; 3],
) -> Result<CsmcGains, ControllerError> {
    if !(lipschitz.is_finite() && lipschitz > 0.0) {
        return Err(ControllerError::InvalidGain("L"));
    }
    if lambda.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
        return Err(ControllerError::InvalidGain("lambda"));
    }
    Ok(CsmcGains {
        k1: lambda[0] * lipschitz.powf(2.0 / 3.0),
        k2: lambda[1] * lipschitz.sqrt(),
        k3: lambda[2] * lipschitz,
        lipschitz,
        lambda,
    })
}

/// Integral-of-sign state of the CSMC.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CsmcState {
    pub integral: f64,
}

/// One CSMC update at step `dt`: the sign integral advances by explicit
/// Euler, then the control value is assembled. The returned control is
/// continuous in `(y, y_dot)`; the discontinuity lives under the integral.
pub fn csmc_step(
    gains: &CsmcGains,
    y: f64,
    y_dot: f64,
    state: CsmcState,
    dt: f64,
) -> (f64, CsmcState) {
    debug_assert!(dt > 0.0);
    let integral = state.integral + signed_power(y, 0.0) * dt;
    let u = -gains.k1 * signed_power(y, 1.0 / 3.0)
        - gains.k2 * signed_power(y_dot, 0.5)
        - gains.k3 * integral;
    (u, CsmcState { integral })
}

/// Integrator state of the parallel-form PID.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PidState {
    pub integral: f64,
}

/// One parallel-PID update: `u = Kp e + Ki ∫e dt + Kd e_dot`, with the
/// error integral advanced by explicit Euler and `e_dot` supplied
/// externally (differentiator estimate).
pub fn pid_step(
    gains: &ParallelPidGains,
    e: f64,
    e_dot: f64,
    state: PidState,
    dt: f64,
) -> (f64, PidState) {
    debug_assert!(dt > 0.0);
    let integral = if gains.ki != 0.0 {
        state.integral + e * dt
    } else {
        state.integral
    };
    let u = gains.kp * e + gains.ki * integral + gains.kd * e_dot;
    (u, PidState { integral })
}
