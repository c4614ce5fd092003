//! Disturbance-rejection workbench for a second-order motion plant.
//!
//! The crate implements two competing controllers for rejecting matched,
//! Lipschitz-continuous input disturbances — a PID-like continuous
//! sliding-mode controller (CSMC) and a robust linear PID synthesized by a
//! two-step sensitivity-bound procedure — together with the analysis and
//! simulation machinery needed to compare them:
//!
//! - [`signals`]: disturbance/reference generators (sine, chirp,
//!   band-limited noise) with Lipschitz-bound queries,
//! - [`plant`]: physical drive parameters, rational transfer functions and
//!   frequency responses,
//! - [`sysid`]: correlation-based frequency-response estimation and
//!   least-squares plant fitting,
//! - [`pid_design`]: the two-step robust PID synthesis and its disturbance
//!   sensitivity functions,
//! - [`controllers`]: runtime PID and CSMC control laws,
//! - [`red`]: second-order robust exact differentiator,
//! - [`harmonic_balance`]: describing function, limit-cycle prediction and
//!   the amplitude-dependent CSMC sensitivity map,
//! - [`sim`]: fixed-step closed-loop simulator producing traces and
//!   steady-state metrics.

pub mod controllers;
pub mod harmonic_balance;
pub mod pid_design;
pub mod plant;
pub mod red;
pub mod signals;
pub mod sim;
pub mod sysid;

mod solve;

pub use controllers::{csmc_gains_from_lipschitz, CsmcGains, CsmcState, PidState, DEFAULT_LAMBDA};
pub use harmonic_balance::{HbSolution, SensitivityMap};
pub use pid_design::{ParallelPidGains, PidDesign};
pub use plant::{PhysicalParams, PlantModel, RationalTF};
pub use red::RedState;
pub use signals::{SignalSampler, SignalSpec};
pub use sim::{SimConfig, SimTrace};
pub use sysid::FrfPoint;
