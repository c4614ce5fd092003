//! CLI error carrying the exit code and a machine-readable rendering.

use smclab::controllers::ControllerError;
use smclab::harmonic_balance::HbError;
use smclab::pid_design::DesignError;
use smclab::plant::PlantError;
use smclab::signals::SignalError;
use smclab::sim::SimError;
use smclab::sysid::SysidError;

pub struct CliError {
    pub kind: String,
    pub message: String,
    pub code: i32,
}

impl CliError {
    pub fn domain(kind: &str, message: String) -> Self {
        Self { kind: kind.to_string(), message, code: 1 }
    }

    pub fn usage(message: String) -> Self {
        Self { kind: "usage".to_string(), message, code: 2 }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": { "kind": self.kind, "message": self.message }
        })
        .to_string()
    }
}

macro_rules! from_domain_error {
    ($ty:ty, $kind:literal) => {
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::domain($kind, e.to_string())
            }
        }
    };
}

from_domain_error!(PlantError, "plant");
from_domain_error!(SignalError, "signal");
from_domain_error!(ControllerError, "controller");
from_domain_error!(DesignError, "design");
from_domain_error!(HbError, "harmonic_balance");
from_domain_error!(SysidError, "sysid");
from_domain_error!(SimError, "sim");
