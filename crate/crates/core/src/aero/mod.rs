//! Lift coefficient of discretized airfoils.
//!
//! The default backend is an inviscid linear-strength vortex panel method.
//! An adapter drives an external XFoil binary when one is available.

pub(crate) mod intersect;
mod linalg;
mod panel;
mod xfoil;

pub use intersect::self_intersects;
pub use panel::{fit_slope, lift_curve_slope, panel_solve};
pub use xfoil::{xfoil_adapter, XfoilConfig, XFOIL_BIN_ENV};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::Airfoil;
use crate::{Error, Result};

/// Largest angle of attack accepted, in radians.
pub const MAX_ALPHA: f64 = 0.35;

/// Default labeling angle of attack in degrees.
pub const DEFAULT_ALPHA_DEG: f64 = 0.0;

/// Freestream at angle `alpha` (radians) with unit speed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowCondition {
    alpha: f64,
}

impl FlowCondition {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha.abs() >= MAX_ALPHA {
            return Err(Error::InvalidParameter(format!(
                "angle of attack {alpha} rad outside (-{MAX_ALPHA}, {MAX_ALPHA})"
            )));
        }
        Ok(Self { alpha })
    }

    pub fn from_degrees(deg: f64) -> Result<Self> {
        Self::new(deg.to_radians())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NotConvergedReason {
    SelfIntersection,
    SingularSystem,
    NonFinite,
    ExternalFailure,
}

impl NotConvergedReason {
    pub fn as_str(self) -> &'static str {
        match self {
            NotConvergedReason::SelfIntersection => "self-intersection",
            NotConvergedReason::SingularSystem => "singular-system",
            NotConvergedReason::NonFinite => "non-finite",
            NotConvergedReason::ExternalFailure => "external-failure",
        }
    }
}

impl fmt::Display for NotConvergedReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveOutcome {
    Converged { cl: f64 },
    NotConverged(NotConvergedReason),
}

impl SolveOutcome {
    pub fn cl(&self) -> Option<f64> {
        match self {
            SolveOutcome::Converged { cl } => Some(*cl),
            SolveOutcome::NotConverged(_) => None,
        }
    }

    pub fn is_converged(&self) -> bool {
        matches!(self, SolveOutcome::Converged { .. })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SolverBackend {
    #[default]
    Panel,
    Xfoil(XfoilConfig),
}

/// Which solver to run and at what flow condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSpec {
    pub alpha_deg: f64,
    pub backend: SolverBackend,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self::panel(DEFAULT_ALPHA_DEG)
    }
}

impl SolverSpec {
    pub fn panel(alpha_deg: f64) -> Self {
        Self {
            alpha_deg,
            backend: SolverBackend::Panel,
        }
    }

    pub fn flow(&self) -> Result<FlowCondition> {
        FlowCondition::from_degrees(self.alpha_deg)
    }

    /// Solve one shape. Only configuration problems are errors; solver
    /// failures come back as [`SolveOutcome::NotConverged`].
    pub fn solve(&self, airfoil: &Airfoil) -> Result<SolveOutcome> {
        let flow = self.flow()?;
        match &self.backend {
            SolverBackend::Panel => Ok(panel_solve(airfoil, &flow)),
            SolverBackend::Xfoil(cfg) => xfoil_adapter(airfoil, &flow, cfg),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flow_limits() {
        assert!(FlowCondition::new(0.34).is_ok());
        assert!(FlowCondition::new(-0.35).is_err());
        assert!(FlowCondition::from_degrees(25.0).is_err());
    }

    #[test]
    fn outcome_serialization() {
        let c = serde_json::to_string(&SolveOutcome::Converged { cl: 0.5 }).unwrap();
        assert_eq!(c, r#"{"converged":{"cl":0.5}}"#);
        let n = serde_json::to_string(&SolveOutcome::NotConverged(NotConvergedReason::SelfIntersection))
            .unwrap();
        assert_eq!(n, r#"{"not-converged":"self-intersection"}"#);
        let spec = serde_json::to_string(&SolverSpec::default()).unwrap();
        assert_eq!(spec, r#"{"alpha_deg":0.0,"backend":{"kind":"panel"}}"#);
    }
}
