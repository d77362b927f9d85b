//! Spreading-speed formulas and the certificates deciding when they apply.

mod coupled;
mod hypotheses;
mod kpp;
mod minimize;
mod report;

pub use coupled::{check_linear_determinacy, coupled_eigenfunction, second_component, CoupledEigen, LinearDeterminacy};
pub use hypotheses::{
    check_condition_m, check_hypotheses, check_hypotheses_with, check_p1, check_p2, check_prop_c, HypothesisReport,
    Orbits,
};
pub use kpp::{invasion_potential, linear_speed, linear_speed_c0, scalar_kpp_speeds, KppSpeeds};
pub use minimize::{minimize_speed, SpeedMin, MU_HI, MU_LO};
pub use report::{analyze, analyze_with, SpeedReport};

use serde::Serialize;

use crate::eigen::EigenOptions;
use crate::exec::Exec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedOptions {
    pub eigen: EigenOptions,
    pub mu_lo: f64,
    pub mu_hi: f64,
    pub mu_rel_tol: f64,
    pub exec: Exec,
}

impl Default for SpeedOptions {
    fn default() -> Self {
        Self { eigen: EigenOptions::default(), mu_lo: MU_LO, mu_hi: MU_HI, mu_rel_tol: 1e-6, exec: Exec::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "pass")]
    Pass,
    /// A sufficient condition holds; the property itself is not decided.
    #[serde(rename = "pass(sufficient)")]
    PassSufficient,
    #[serde(rename = "fail")]
    Fail,
    #[serde(rename = "inconclusive")]
    Inconclusive,
    #[serde(rename = "not-applicable")]
    NotApplicable,
}

impl Verdict {
    pub fn passed(self) -> bool {
        matches!(self, Verdict::Pass | Verdict::PassSufficient)
    }

    fn from_margin(margin: f64) -> Self {
        if margin > 0.0 {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// One decided inequality with the number it was decided on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub verdict: Verdict,
    pub margin: Option<f64>,
    pub details: serde_json::Value,
}

impl Certificate {
    pub fn new(verdict: Verdict, margin: Option<f64>, details: serde_json::Value) -> Self {
        Self { verdict, margin, details }
    }

    pub fn not_applicable(reason: &str) -> Self {
        Self::new(Verdict::NotApplicable, None, serde_json::json!({ "reason": reason }))
    }

    pub fn from_error(err: &crate::Error) -> Self {
        Self::new(
            Verdict::Inconclusive,
            None,
            serde_json::json!({ "error": err.kind(), "message": err.to_string() }),
        )
    }
}
