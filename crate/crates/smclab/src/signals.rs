//! Disturbance and reference signal generators.
//!
//! Deterministic variants are pure functions of time; band-limited noise
//! carries generator state and is sampled through a [`SignalSampler`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum SignalError {
    /// A spec field violated its constraint (named in the payload).
    InvalidSpec(&'static str),
    /// The Lipschitz bound is undefined for stochastic variants.
    NoiseNotLipschitz,
    /// Pure time evaluation requested on a stochastic variant.
    NoiseNotDeterministic,
}

impl fmt::Display for SignalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignalError::InvalidSpec(what) => write!(f, "invalid signal spec: {what}"),
            SignalError::NoiseNotLipschitz => {
                write!(f, "band-limited noise has no Lipschitz bound")
            }
            SignalError::NoiseNotDeterministic => {
                write!(f, "stochastic signal requires a stateful sampler")
            }
        }
    }
}

impl std::error::Error for SignalError {}

/// Description of a disturbance or reference signal.
///
/// Angular frequencies are in rad/s. The chirp phase is
/// `(omega0 + rate * t) * t`, whose instantaneous frequency is
/// `omega0 + 2 * rate * t`; past `duration` the signal continues as a
/// fixed-frequency sinusoid with continuous phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SignalSpec {
    Sine {
        amplitude: f64,
        omega: f64,
    },
    Chirp {
        amplitude: f64,
        omega0: f64,
        rate: f64,
        duration: f64,
    },
    BandLimitedNoise {
        std_dev: f64,
        bandwidth: f64,
        seed: u64,
    },
    Constant {
        value: f64,
    },
    Sum {
        parts: Vec<SignalSpec>,
    },
}

impl SignalSpec {
    /// Sine with validated amplitude and angular frequency.
    pub fn sine(amplitude: f64, omega: f64) -> Result<Self, SignalError> {
        let s = SignalSpec::Sine { amplitude, omega };
        s.validate()?;
        Ok(s)
    }

    /// Chirp described by its start and end *instantaneous* frequencies:
    /// `rate = (omega_end - omega0) / (2 * duration)` so that
    /// `omega0 + 2 * rate * duration = omega_end`.
    pub fn chirp_spanning(
        amplitude: f64,
        omega0: f64,
        omega_end: f64,
        duration: f64,
    ) -> Result<Self, SignalError> {
        if !(duration > 0.0) {
            return Err(SignalError::InvalidSpec("duration"));
        }
        if omega_end < omega0 {
            return Err(SignalError::InvalidSpec("omega_end < omega0"));
        }
        let rate = (omega_end - omega0) / (2.0 * duration);
        let s = SignalSpec::Chirp { amplitude, omega0, rate, duration };
        s.validate()?;
        Ok(s)
    }

    pub fn band_limited_noise(std_dev: f64, bandwidth: f64, seed: u64) -> Result<Self, SignalError> {
        let s = SignalSpec::BandLimitedNoise { std_dev, bandwidth, seed };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        match self {
            SignalSpec::Sine { amplitude, omega } => {
                if !pos(*amplitude) {
                    return Err(SignalError::InvalidSpec("amplitude"));
                }
                if !pos(*omega) {
                    return Err(SignalError::InvalidSpec("omega"));
                }
            }
            SignalSpec::Chirp { amplitude, omega0, rate, duration } => {
                if !pos(*amplitude) {
                    return Err(SignalError::InvalidSpec("amplitude"));
                }
                if !pos(*omega0) {
                    return Err(SignalError::InvalidSpec("omega0"));
                }
                if !(rate.is_finite() && *rate >= 0.0) {
                    return Err(SignalError::InvalidSpec("rate"));
                }
                if !pos(*duration) {
                    return Err(SignalError::InvalidSpec("duration"));
                }
            }
            SignalSpec::BandLimitedNoise { std_dev, bandwidth, .. } => {
                if !(std_dev.is_finite() && *std_dev >= 0.0) {
                    return Err(SignalError::InvalidSpec("std_dev"));
                }
                if !pos(*bandwidth) {
                    return Err(SignalError::InvalidSpec("bandwidth"));
                }
            }
            SignalSpec::Constant { value } => {
                if !value.is_finite() {
                    return Err(SignalError::InvalidSpec("value"));
                }
            }
            SignalSpec::Sum { parts } => {
                for p in parts {
                    p.validate()?;
                }
            }
        }
        Ok(())
    }

    /// True when the signal contains no stochastic component.
    pub fn is_deterministic(&self) -> bool {
        match self {
            SignalSpec::BandLimitedNoise { .. } => false,
            SignalSpec::Sum { parts } => parts.iter().all(SignalSpec::is_deterministic),
            _ => true,
        }
    }

    /// Pure evaluation at time `t >= 0` for deterministic variants.
    pub fn value_at(&self, t: f64) -> Result<f64, SignalError> {
        match self {
            SignalSpec::Sine { amplitude, omega } => Ok(amplitude * (omega * t).sin()),
            SignalSpec::Chirp { amplitude, omega0, rate, duration } => {
                Ok(amplitude * chirp_phase(*omega0, *rate, *duration, t).sin())
            }
            SignalSpec::BandLimitedNoise { .. } => Err(SignalError::NoiseNotDeterministic),
            SignalSpec::Constant { value } => Ok(*value),
            SignalSpec::Sum { parts } => {
                let mut acc = 0.0;
                for p in parts {
                    acc += p.value_at(t)?;
                }
                Ok(acc)
            }
        }
    }

    /// Upper bound of `|d/dt|` over the signal's domain.
    ///
    /// Sine: `A * omega`. Chirp: `A * (omega0 + 2 * rate * duration)`, the
    /// maximal instantaneous frequency of the phase. Sums add member bounds.
    pub fn lipschitz_bound(&self) -> Result<f64, SignalError> {
        match self {
            SignalSpec::Sine { amplitude, omega } => Ok(amplitude * omega),
            SignalSpec::Chirp { amplitude, omega0, rate, duration } => {
                Ok(amplitude * (omega0 + 2.0 * rate * duration))
            }
            SignalSpec::BandLimitedNoise { .. } => Err(SignalError::NoiseNotLipschitz),
            SignalSpec::Constant { .. } => Ok(0.0),
            SignalSpec::Sum { parts } => {
                let mut acc = 0.0;
                for p in parts {
                    acc += p.lipschitz_bound()?;
                }
                Ok(acc)
            }
        }
    }

    /// Builds the stateful sampler for this spec.
    pub fn sampler(&self) -> SignalSampler {
        SignalSampler { node: SamplerNode::from_spec(self) }
    }
}

/// Chirp phase, continued past `duration` at the final instantaneous
/// frequency with continuous phase.
fn chirp_phase(omega0: f64, rate: f64, duration: f64, t: f64) -> f64 {
    if t <= duration {
        (omega0 + rate * t) * t
    } else {
        let phase_end = (omega0 + rate * duration) * duration;
        let omega_end = omega0 + 2.0 * rate * duration;
        phase_end + omega_end * (t - duration)
    }
}

/// Stateful signal sampler.
///
/// Deterministic sub-signals are evaluated purely; band-limited noise draws
/// Gaussian white samples from a seeded PRNG and passes them through a
/// discretized first-order low-pass at the stated bandwidth, scaled so the
/// stationary output standard deviation equals `std_dev`. Sampling times
/// must be non-decreasing; identical seeds and identical sampling instants
/// give bit-identical streams.
#[derive(Debug, Clone)]
pub struct SignalSampler {
    node: SamplerNode,
}

#[derive(Debug, Clone)]
enum SamplerNode {
    Pure(SignalSpec),
    Noise(NoiseState),
    Sum(Vec<SamplerNode>),
}

#[derive(Debug, Clone)]
struct NoiseState {
    std_dev: f64,
    bandwidth: f64,
    rng: ChaCha8Rng,
    last_t: Option<f64>,
    value: f64,
}

impl SamplerNode {
    fn from_spec(spec: &SignalSpec) -> Self {
        match spec {
            SignalSpec::BandLimitedNoise { std_dev, bandwidth, seed } => {
                SamplerNode::Noise(NoiseState {
                    std_dev: *std_dev,
                    bandwidth: *bandwidth,
                    rng: ChaCha8Rng::seed_from_u64(*seed),
                    last_t: None,
                    value: 0.0,
                })
            }
            SignalSpec::Sum { parts } => {
                SamplerNode::Sum(parts.iter().map(SamplerNode::from_spec).collect())
            }
            other => SamplerNode::Pure(other.clone()),
        }
    }

    fn sample(&mut self, t: f64) -> f64 {
        match self {
            SamplerNode::Pure(spec) => spec.value_at(t).expect("deterministic by construction"),
            SamplerNode::Noise(state) => state.sample(t),
            SamplerNode::Sum(parts) => parts.iter_mut().map(|p| p.sample(t)).sum(),
        }
    }
}

impl NoiseState {
    fn gauss(&mut self) -> f64 {
        // Box-Muller from two uniform draws
        let u1: f64 = self.rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = self.rng.gen::<f64>();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    fn sample(&mut self, t: f64) -> f64 {
        match self.last_t {
            None => {
                // start from the stationary distribution
                self.value = self.std_dev * self.gauss();
                self.last_t = Some(t);
            }
            Some(last) => {
                assert!(t >= last, "noise sampler requires non-decreasing time");
                if t > last {
                    let dt = t - last;
                    let alpha = 1.0 - (-self.bandwidth * dt).exp();
                    // white-input std that yields stationary output std_dev
                    let sigma_in = if alpha > 0.0 {
                        self.std_dev * ((2.0 - alpha) / alpha).sqrt()
                    } else {
                        0.0
                    };
                    let white = sigma_in * self.gauss();
                    self.value += alpha * (white - self.value);
                    self.last_t = Some(t);
                }
            }
        }
        self.value
    }
}

impl SignalSampler {
    /// Samples the signal at time `t`. Times must be non-decreasing when the
    /// spec contains noise.
    pub fn sample(&mut self, t: f64) -> f64 {
        self.node.sample(t)
    }
}
