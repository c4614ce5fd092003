//! Fixed-step closed-loop simulator.
//!
//! The continuous plant (position, velocity) and the first-order actuator
//! state integrate with classical fourth-order Runge-Kutta at `plant_step`;
//! the controller and the differentiator execute at `control_period` with
//! zero-order hold on the control value. The disturbance enters additively
//! at the plant input, measurement noise adds to the output fed back to the
//! differentiator and controller.

use crate::controllers::{
    csmc_gains_from_lipschitz, csmc_step, pid_step, CsmcGains, CsmcState, PidState,
};
use crate::pid_design::ParallelPidGains;
use crate::plant::{derive_plant, gravity_compensation, PhysicalParams, PlantModel};
use crate::red::{red_step, RedState};
use crate::signals::{SignalError, SignalSpec};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    ConfigError(String),
    /// The loop diverged: |y| exceeded 1000 m at the reported time.
    NumericBlowup { t: f64 },
    /// Metrics window outside the trace or shorter than three periods.
    WindowTooShort(String),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::ConfigError(why) => write!(f, "invalid simulation config: {why}"),
            SimError::NumericBlowup { t } => write!(f, "simulation diverged at t = {t:.6} s"),
            SimError::WindowTooShort(why) => write!(f, "metrics window too short: {why}"),
        }
    }
}

impl std::error::Error for SimError {}

impl From<SignalError> for SimError {
    fn from(e: SignalError) -> Self {
        SimError::ConfigError(e.to_string())
    }
}

/// Plant description: full physical parameters or the fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantConfig {
    Physical(PhysicalParams),
    Model(PlantModel),
}

/// Controller selection matching the JSON config schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ControllerConfig {
    Pid(ParallelPidGains),
    Csmc {
        #[serde(rename = "L")]
        lipschitz: f64,
        #[serde(default = "default_lambda")]
        lambda: [f64; 3],
    },
}

fn default_lambda() -> [f64; 3] {
    crate::controllers::DEFAULT_LAMBDA
}

fn default_reference() -> f64 {
    0.009
}

fn default_plant_step() -> f64 {
    1e-5
}

fn default_control_period() -> f64 {
    2e-4
}

fn default_red_scaling() -> f64 {
    8.0
}

/// Closed-loop simulation configuration.
///
/// Defaults: reference and initial position at the mid-range operating
/// point 9 mm, 5 kHz control rate, 10 us integration step, differentiator
/// scaling `r = 8`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub plant: PlantConfig,
    pub controller: ControllerConfig,
    pub disturbance: SignalSpec,
    #[serde(default)]
    pub noise: Option<SignalSpec>,
    #[serde(default = "default_reference")]
    pub reference: f64,
    pub t_end: f64,
    #[serde(default = "default_plant_step")]
    pub plant_step: f64,
    #[serde(default = "default_control_period")]
    pub control_period: f64,
    #[serde(default = "default_reference")]
    pub initial_y: f64,
    #[serde(default)]
    pub gravity_comp_enabled: bool,
    /// Symmetric actuation limit in volts; `None` leaves the control
    /// unsaturated (the comparison protocol requires unsaturated control).
    #[serde(default)]
    pub saturation: Option<f64>,
    /// Measurement clamp range mirroring the bounded position sensor;
    /// applied to the measured output only.
    #[serde(default)]
    pub sensor_range: Option<(f64, f64)>,
    #[serde(default = "default_red_scaling")]
    pub red_scaling: f64,
}

/// Uniformly sampled closed-loop record at the control rate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimTrace {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub y_dot_red: Vec<f64>,
    pub u: Vec<f64>,
    pub d: Vec<f64>,
    pub e: Vec<f64>,
    pub saturated: Vec<bool>,
}

enum ControllerState {
    Pid { gains: ParallelPidGains, state: PidState },
    Csmc { gains: CsmcGains, state: CsmcState },
}

struct PlantDynamics {
    /// Velocity derivative `v' = f(v, input_voltage)`.
    k_over_tau: f64,
    inv_tau: f64,
    /// Physical form: `v' = (psi/r * voltage - m g - sigma v) / m`.
    physical: Option<PhysicalParams>,
    mu: f64,
}

impl PlantDynamics {
    fn accel(&self, v: f64, voltage: f64) -> f64 {
        match &self.physical {
            Some(p) => (p.psi / p.r * voltage - p.m * p.g - p.sigma * v) / p.m,
            None => self.k_over_tau * voltage - self.inv_tau * v,
        }
    }
}

/// Runs the loop and returns the trace sampled at the control period.
pub fn simulate(config: &SimConfig) -> Result<SimTrace, SimError> {
    config_checks(config)?;
    let n_inner = (config.control_period / config.plant_step).round() as usize;

    let (model, physical) = match &config.plant {
        PlantConfig::Physical(p) => {
            p.validate().map_err(|e| SimError::ConfigError(e.to_string()))?;
            (derive_plant(p), Some(*p))
        }
        PlantConfig::Model(m) => {
            m.validate().map_err(|e| SimError::ConfigError(e.to_string()))?;
            (*m, None)
        }
    };
    if config.gravity_comp_enabled && physical.is_none() {
        return Err(SimError::ConfigError(
            "gravity compensation requires physical plant parameters".into(),
        ));
    }
    let u_gravity = physical
        .filter(|_| config.gravity_comp_enabled)
        .map(|p| gravity_compensation(&p))
        .unwrap_or(0.0);
    let dynamics = if model.tau > 0.0 {
        PlantDynamics {
            k_over_tau: model.k / model.tau,
            inv_tau: 1.0 / model.tau,
            physical,
            mu: model.mu,
        }
    } else {
        // pure integrator limit: v' = K * voltage
        PlantDynamics { k_over_tau: model.k, inv_tau: 0.0, physical, mu: model.mu }
    };

    let mut controller = match &config.controller {
        ControllerConfig::Pid(g) => ControllerState::Pid { gains: *g, state: PidState::default() },
        ControllerConfig::Csmc { lipschitz, lambda } => ControllerState::Csmc {
            gains: csmc_gains_from_lipschitz(*lipschitz, *lambda)
                .map_err(|e| SimError::ConfigError(e.to_string()))?,
            state: CsmcState::default(),
        },
    };

    let d_deterministic = config.disturbance.is_deterministic();
    let mut d_sampler = config.disturbance.sampler();
    let mut noise_sampler = config.noise.as_ref().map(|n| n.sampler());

    let n_ticks = (config.t_end / config.control_period).round() as usize;
    let mut trace = SimTrace::default();
    let reserve = n_ticks.min(1 << 24);
    trace.t.reserve(reserve);
    trace.y.reserve(reserve);
    trace.y_dot_red.reserve(reserve);
    trace.u.reserve(reserve);
    trace.d.reserve(reserve);
    trace.e.reserve(reserve);
    trace.saturated.reserve(reserve);

    let mut y = config.initial_y;
    let mut v = 0.0;
    let mut u_act: Option<f64> = None; // actuator state, set from the first command
    let mut red: Option<RedState> = None;
    let dt_c = config.control_period;
    let h = config.plant_step;

    for tick in 0..n_ticks {
        let t = tick as f64 * dt_c;

        // measurement: true output plus noise, clamped to the sensor range
        let mut y_meas = y + noise_sampler.as_mut().map_or(0.0, |s| s.sample(t));
        if let Some((lo, hi)) = config.sensor_range {
            y_meas = y_meas.clamp(lo, hi);
        }

        let red_state = {
            let prev = red.unwrap_or_else(|| RedState::from_measurement(y_meas));
            let next = red_step(prev, y_meas, config.red_scaling, dt_c);
            red = Some(next);
            next
        };

        // regulation coordinates: z -> 0 where z = y_meas - reference
        let z = y_meas - config.reference;
        let e = config.reference - y_meas;
        let u_ctl = match &mut controller {
            ControllerState::Pid { gains, state } => {
                let (u, s) = pid_step(gains, e, -red_state.x1, *state, dt_c);
                *state = s;
                u
            }
            ControllerState::Csmc { gains, state } => {
                let (u, s) = csmc_step(gains, z, red_state.x1, *state, dt_c);
                *state = s;
                u
            }
        };
        let mut u_cmd = u_ctl + u_gravity;
        let mut saturated = false;
        if let Some(limit) = config.saturation {
            if u_cmd.abs() > limit {
                u_cmd = u_cmd.clamp(-limit, limit);
                saturated = true;
            }
        }

        // disturbance value recorded at the tick; held over the period for
        // stochastic specs, evaluated continuously when deterministic
        let d_tick = d_sampler.sample(t);

        trace.t.push(t);
        trace.y.push(y);
        trace.y_dot_red.push(red_state.x1);
        trace.u.push(u_cmd);
        trace.d.push(d_tick);
        trace.e.push(e);
        trace.saturated.push(saturated);

        // inner integration over one control period with u_cmd held
        let mut ua = match u_act {
            Some(prev) => prev,
            None => u_cmd, // actuator starts settled on the first command
        };
        let d_at = |tt: f64| -> f64 {
            if d_deterministic {
                config.disturbance.value_at(tt).expect("deterministic")
            } else {
                d_tick
            }
        };
        for i in 0..n_inner {
            let ti = t + i as f64 * h;
            if dynamics.mu > 0.0 {
                // states (y, v, ua)
                let f = |yv: (f64, f64, f64), tt: f64| -> (f64, f64, f64) {
                    let (_, vv, aa) = yv;
                    (vv, dynamics.accel(vv, aa + d_at(tt)), (u_cmd - aa) / dynamics.mu)
                };
                let s0 = (y, v, ua);
                let k1 = f(s0, ti);
                let s1 = (y + 0.5 * h * k1.0, v + 0.5 * h * k1.1, ua + 0.5 * h * k1.2);
                let k2 = f(s1, ti + 0.5 * h);
                let s2 = (y + 0.5 * h * k2.0, v + 0.5 * h * k2.1, ua + 0.5 * h * k2.2);
                let k3 = f(s2, ti + 0.5 * h);
                let s3 = (y + h * k3.0, v + h * k3.1, ua + h * k3.2);
                let k4 = f(s3, ti + h);
                y += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
                v += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
                ua += h / 6.0 * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2);
            } else {
                // no actuator lag: states (y, v) with ua = u_cmd
                let f = |yv: (f64, f64), tt: f64| -> (f64, f64) {
                    let (_, vv) = yv;
                    (vv, dynamics.accel(vv, u_cmd + d_at(tt)))
                };
                let s0 = (y, v);
                let k1 = f(s0, ti);
                let k2 = f((y + 0.5 * h * k1.0, v + 0.5 * h * k1.1), ti + 0.5 * h);
                let k3 = f((y + 0.5 * h * k2.0, v + 0.5 * h * k2.1), ti + 0.5 * h);
                let k4 = f((y + h * k3.0, v + h * k3.1), ti + h);
                y += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
                v += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
                ua = u_cmd;
            }
        }
        u_act = Some(ua);

        if !y.is_finite() || y.abs() > 1e3 {
            return Err(SimError::NumericBlowup { t });
        }
    }
    Ok(trace)
}

fn config_checks(config: &SimConfig) -> Result<(), SimError> {
    if !(config.t_end > 0.0) {
        return Err(SimError::ConfigError("t_end must be positive".into()));
    }
    if !(config.plant_step > 0.0) || !(config.control_period > 0.0) {
        return Err(SimError::ConfigError("steps must be positive".into()));
    }
    if config.plant_step > config.control_period {
        return Err(SimError::ConfigError(
            "plant_step must not exceed control_period".into(),
        ));
    }
    let ratio = config.control_period / config.plant_step;
    if (ratio - ratio.round()).abs() > 1e-9 * ratio {
        return Err(SimError::ConfigError(
            "control_period must be an integer multiple of plant_step".into(),
        ));
    }
    if !(config.red_scaling > 0.0) {
        return Err(SimError::ConfigError("red_scaling must be positive".into()));
    }
    if let Some((lo, hi)) = config.sensor_range {
        if !(hi > lo) {
            return Err(SimError::ConfigError("sensor_range must be ordered".into()));
        }
    }
    config.disturbance.validate()?;
    if let Some(n) = &config.noise {
        n.validate()?;
    }
    Ok(())
}

/// Steady-state metrics over a trace window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateMetrics {
    /// Half peak-to-peak of the error in the window.
    pub error_amplitude: f64,
    /// `20 log10(error_amplitude / disturbance_amplitude)`, floored at
    /// -200 dB.
    pub attenuation_db: f64,
    /// Half peak-to-peak of the control value.
    pub control_amplitude: f64,
    /// Mean of `u^2` over the window.
    pub control_rms_power: f64,
}

const ATTENUATION_FLOOR_DB: f64 = -200.0;

/// Computes steady-state metrics over `[t1, t2]`. When the disturbance
/// frequency is supplied the window must span at least three periods.
pub fn steady_state_metrics(
    trace: &SimTrace,
    window: (f64, f64),
    disturbance_amplitude: f64,
    disturbance_omega: Option<f64>,
) -> Result<SteadyStateMetrics, SimError> {
    let (t1, t2) = window;
    if !(t2 > t1) {
        return Err(SimError::WindowTooShort("t2 must exceed t1".into()));
    }
    let t_last = *trace.t.last().ok_or_else(|| {
        SimError::WindowTooShort("trace is empty".into())
    })?;
    if t1 < trace.t[0] || t2 > t_last + 1e-12 {
        return Err(SimError::WindowTooShort(format!(
            "window [{t1}, {t2}] outside trace [{}, {t_last}]",
            trace.t[0]
        )));
    }
    if let Some(w) = disturbance_omega {
        let periods = (t2 - t1) * w / std::f64::consts::TAU;
        if periods < 3.0 {
            return Err(SimError::WindowTooShort(format!(
                "window spans {periods:.2} periods (need >= 3)"
            )));
        }
    }
    let idx: Vec<usize> = trace
        .t
        .iter()
        .enumerate()
        .filter(|(_, &t)| t >= t1 && t <= t2)
        .map(|(i, _)| i)
        .collect();
    if idx.len() < 2 {
        return Err(SimError::WindowTooShort("fewer than 2 samples in window".into()));
    }
    let minmax = |vals: &[f64]| {
        idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            (lo.min(vals[i]), hi.max(vals[i]))
        })
    };
    let (e_lo, e_hi) = minmax(&trace.e);
    let (u_lo, u_hi) = minmax(&trace.u);
    let error_amplitude = 0.5 * (e_hi - e_lo);
    let attenuation_db = if error_amplitude > 0.0 && disturbance_amplitude > 0.0 {
        (20.0 * (error_amplitude / disturbance_amplitude).log10()).max(ATTENUATION_FLOOR_DB)
    } else {
        ATTENUATION_FLOOR_DB
    };
    let control_rms_power =
        idx.iter().map(|&i| trace.u[i] * trace.u[i]).sum::<f64>() / idx.len() as f64;
    Ok(SteadyStateMetrics {
        error_amplitude,
        attenuation_db,
        control_amplitude: 0.5 * (u_hi - u_lo),
        control_rms_power,
    })
}

/// Metrics of one analysis window of a longer run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowMetrics {
    pub t_center: f64,
    pub error_amplitude: f64,
    pub control_amplitude: f64,
    pub control_rms_power: f64,
}

/// Splits the trace into consecutive windows of `window_len` seconds and
/// reports per-window envelope metrics.
pub fn windowed_metrics(trace: &SimTrace, window_len: f64) -> Vec<WindowMetrics> {
    let mut out = Vec::new();
    if trace.t.is_empty() || !(window_len > 0.0) {
        return out;
    }
    let t_end = *trace.t.last().unwrap();
    let dt = if trace.t.len() > 1 { trace.t[1] - trace.t[0] } else { 0.0 };
    let mut t0 = trace.t[0];
    while t0 + window_len <= t_end + dt + 1e-9 {
        let t1 = t0 + window_len;
        let mut e_lo = f64::INFINITY;
        let mut e_hi = f64::NEG_INFINITY;
        let mut u_lo = f64::INFINITY;
        let mut u_hi = f64::NEG_INFINITY;
        let mut pow = 0.0;
        let mut count = 0usize;
        for (i, &t) in trace.t.iter().enumerate() {
            if t >= t0 && t < t1 {
                e_lo = e_lo.min(trace.e[i]);
                e_hi = e_hi.max(trace.e[i]);
                u_lo = u_lo.min(trace.u[i]);
                u_hi = u_hi.max(trace.u[i]);
                pow += trace.u[i] * trace.u[i];
                count += 1;
            }
        }
        if count > 0 {
            out.push(WindowMetrics {
                t_center: t0 + 0.5 * window_len,
                error_amplitude: 0.5 * (e_hi - e_lo),
                control_amplitude: 0.5 * (u_hi - u_lo),
                control_rms_power: pow / count as f64,
            });
        }
        t0 = t1;
    }
    out
}
