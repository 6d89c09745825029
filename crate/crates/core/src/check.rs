//! Named inequality records shared by the pipeline reports.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Check {
    /// lhs ≤ rhs + tol.
    pub fn le(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Check {
        Check { name: name.into(), lhs, rhs, holds: lhs <= rhs + tol }
    }

    /// lhs ≥ rhs - tol.
    pub fn ge(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Check {
        Check { name: name.into(), lhs, rhs, holds: lhs >= rhs - tol }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Check {
        Check { name: name.into(), lhs: if ok { 1.0 } else { 0.0 }, rhs: 1.0, holds: ok }
    }

    /// rhs - lhs for ≤ checks.
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

pub fn first_failure(checks: &[Check]) -> Option<&Check> {
    checks.iter().find(|c| !c.holds)
}
