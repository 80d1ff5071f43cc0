use liouville_core::Error;
use serde_json::json;

/// A failure reported as `{"code", "message", "flag"}` on standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
    pub flag: Option<String>,
    pub exit: i32,
}

pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

impl CliError {
    pub fn domain(flag: &str, message: impl Into<String>) -> Self {
        CliError { code: "domain", message: message.into(), flag: Some(flag.to_string()), exit: EXIT_DOMAIN }
    }

    pub fn usage(message: impl Into<String>, flag: Option<String>) -> Self {
        CliError { code: "usage", message: message.into(), flag, exit: EXIT_DOMAIN }
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError { code: "io", message: message.into(), flag: Some("--output".into()), exit: EXIT_INTERNAL }
    }

    /// Attaches `flag` when none is set yet.
    pub fn at(mut self, flag: &str) -> Self {
        if self.flag.is_none() {
            self.flag = Some(flag.to_string());
        }
        self
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({"code": self.code, "message": self.message, "flag": self.flag})
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (code, exit) = match &e {
            Error::Domain(_) => ("domain", EXIT_DOMAIN),
            Error::DegenerateConfig(_) => ("degenerate_config", EXIT_DOMAIN),
            Error::StepTooLarge { .. } => ("step_too_large", EXIT_DOMAIN),
            Error::CollidingAngles(..) => ("colliding_angles", EXIT_DOMAIN),
            Error::SizeMismatch(..) => ("size_mismatch", EXIT_DOMAIN),
            Error::DegreeMismatch(..) => ("degree_mismatch", EXIT_DOMAIN),
            Error::NonMonic(_) => ("non_monic", EXIT_DOMAIN),
            Error::InconsistentPair { .. } => ("inconsistent_pair", EXIT_DOMAIN),
            Error::InternalInconsistency(_) => ("internal_inconsistency", EXIT_INTERNAL),
            Error::RootFindingFailure(_) => ("root_finding_failure", EXIT_INTERNAL),
            Error::BlowupInIntegration(_) => ("blowup_in_integration", EXIT_INTERNAL),
            Error::NewtonDiverged { .. } => ("newton_diverged", EXIT_INTERNAL),
            Error::SingularJacobian { .. } => ("singular_jacobian", EXIT_INTERNAL),
            Error::BranchLost(_) => ("branch_lost", EXIT_INTERNAL),
        };
        CliError { code, message: e.to_string(), flag: None, exit }
    }
}

pub trait AtFlag<T> {
    fn at(self, flag: &str) -> Result<T, CliError>;
}

impl<T> AtFlag<T> for liouville_core::Result<T> {
    fn at(self, flag: &str) -> Result<T, CliError> {
        self.map_err(|e| {
            let e = CliError::from(e);
            if e.exit == EXIT_DOMAIN {
                e.at(flag)
            } else {
                e
            }
        })
    }
}
