//! Drive parameters, linear plant models and rational transfer functions.
//!
//! The plant is a voltage-driven mass with viscous damping and one free
//! integrator, `G(s) = K / (s (tau s + 1))`, optionally cascaded with a
//! fast first-order actuator lag `1 / (mu s + 1)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Relative tolerance below which `den(jw)` counts as a pole on the axis.
const POLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum PlantError {
    /// A parameter violated its positivity/validity constraint.
    InvalidParam(&'static str),
    /// The denominator polynomial vanishes (within tolerance) at `j*omega`.
    PoleOnAxis { omega: f64 },
    /// A denominator with no nonzero coefficient was supplied.
    ZeroDenominator,
}

impl fmt::Display for PlantError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlantError::InvalidParam(what) => write!(f, "invalid plant parameter: {what}"),
            PlantError::PoleOnAxis { omega } => {
                write!(f, "transfer function has a pole at j*{omega} rad/s")
            }
            PlantError::ZeroDenominator => write!(f, "denominator polynomial is identically zero"),
        }
    }
}

impl std::error::Error for PlantError {}

/// Physical parameters of the electro-mechanical drive.
///
/// Units: `m` kg, `sigma` N·s/m, `psi` V·s/m, `r` V/A, `g` m/s²,
/// `mu` s (actuator time constant).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub m: f64,
    pub sigma: f64,
    #[serde(rename = "Psi")]
    pub psi: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub g: f64,
    pub mu: f64,
}

impl PhysicalParams {
    pub fn new(m: f64, sigma: f64, psi: f64, r: f64, g: f64, mu: f64) -> Result<Self, PlantError> {
        let p = Self { m, sigma, psi, r, g, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !pos(self.m) {
            return Err(PlantError::InvalidParam("m"));
        }
        if !pos(self.sigma) {
            return Err(PlantError::InvalidParam("sigma"));
        }
        if !pos(self.psi) {
            return Err(PlantError::InvalidParam("Psi"));
        }
        if !pos(self.r) {
            return Err(PlantError::InvalidParam("R"));
        }
        // g = 0 and mu = 0 are meaningful degenerate cases (no gravity, no lag)
        if !nonneg(self.g) {
            return Err(PlantError::InvalidParam("g"));
        }
        if !nonneg(self.mu) {
            return Err(PlantError::InvalidParam("mu"));
        }
        Ok(())
    }
}

/// Two-parameter plant model `G(s) = K / (s (tau s + 1))` with an optional
/// actuator lag time constant `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantModel {
    #[serde(rename = "K")]
    pub k: f64,
    pub tau: f64,
    #[serde(default)]
    pub mu: f64,
}

impl PlantModel {
    pub fn new(k: f64, tau: f64, mu: f64) -> Result<Self, PlantError> {
        let m = Self { k, tau, mu };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        if !(self.k > 0.0) || !self.k.is_finite() {
            return Err(PlantError::InvalidParam("K"));
        }
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return Err(PlantError::InvalidParam("tau"));
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(PlantError::InvalidParam("mu"));
        }
        Ok(())
    }
}

/// Derives the normalized two-parameter model from physical data:
/// `K = Psi / (R sigma)`, `tau = m / sigma`; `mu` is copied through.
pub fn derive_plant(params: &PhysicalParams) -> PlantModel {
    PlantModel {
        k: params.psi / (params.r * params.sigma),
        tau: params.m / params.sigma,
        mu: params.mu,
    }
}

/// Constant input voltage compensating gravity: `u_g = m g R / Psi`.
pub fn gravity_compensation(params: &PhysicalParams) -> f64 {
    params.m * params.g * params.r / params.psi
}

/// Rational transfer function in `s`, stored as polynomial coefficients in
/// ascending powers (`num[k]` multiplies `s^k`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalTF {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

fn trim_trailing_zeros(mut p: Vec<f64>) -> Vec<f64> {
    while p.len() > 1 && *p.last().unwrap() == 0.0 {
        p.pop();
    }
    p
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        *o = a.get(i).copied().unwrap_or(0.0) + b.get(i).copied().unwrap_or(0.0);
    }
    out
}

fn poly_eval(p: &[f64], s: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in p.iter().rev() {
        acc = acc * s + c;
    }
    acc
}

impl RationalTF {
    /// Builds a transfer function; trailing zero coefficients are trimmed so
    /// the leading denominator coefficient is nonzero.
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self, PlantError> {
        let num = trim_trailing_zeros(num);
        let den = trim_trailing_zeros(den);
        if den.iter().all(|&c| c == 0.0) {
            return Err(PlantError::ZeroDenominator);
        }
        Ok(Self { num, den })
    }

    /// The identity transfer function `1`.
    pub fn one() -> Self {
        Self { num: vec![1.0], den: vec![1.0] }
    }

    /// Evaluates the transfer function at an arbitrary complex `s`.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        poly_eval(&self.num, s) / poly_eval(&self.den, s)
    }

    /// Frequency response `num(jw) / den(jw)`.
    ///
    /// Fails with [`PlantError::PoleOnAxis`] when `|den(jw)|` falls below
    /// `1e-12 * ||den||`, as happens for the free integrator at `w = 0`.
    pub fn freq_response(&self, omega: f64) -> Result<Complex64, PlantError> {
        let s = Complex64::new(0.0, omega);
        let d = poly_eval(&self.den, s);
        let norm = self.den.iter().map(|c| c * c).sum::<f64>().sqrt();
        if d.norm() < POLE_TOL * norm {
            return Err(PlantError::PoleOnAxis { omega });
        }
        Ok(poly_eval(&self.num, s) / d)
    }

    /// Series connection (product) of two transfer functions.
    pub fn series(&self, other: &Self) -> Self {
        Self {
            num: trim_trailing_zeros(poly_mul(&self.num, &other.num)),
            den: trim_trailing_zeros(poly_mul(&self.den, &other.den)),
        }
    }

    /// Sum of two transfer functions over the common denominator.
    pub fn add(&self, other: &Self) -> Self {
        let num = poly_add(
            &poly_mul(&self.num, &other.den),
            &poly_mul(&other.num, &self.den),
        );
        Self {
            num: trim_trailing_zeros(num),
            den: trim_trailing_zeros(poly_mul(&self.den, &other.den)),
        }
    }

    /// Quotient `self / other`.
    pub fn div(&self, other: &Self) -> Result<Self, PlantError> {
        Self::new(
            poly_mul(&self.num, &other.den),
            poly_mul(&self.den, &other.num),
        )
    }
}

/// The plant transfer function `K / (s (tau s + 1))`, multiplied by the
/// actuator lag `1 / (mu s + 1)` when requested and `mu > 0`.
pub fn plant_tf(model: &PlantModel, include_actuator: bool) -> RationalTF {
    let mut den = vec![0.0, 1.0, model.tau];
    if include_actuator && model.mu > 0.0 {
        den = poly_mul(&den, &[1.0, model.mu]);
    }
    RationalTF::new(vec![model.k], den).expect("plant denominator is never zero")
}
