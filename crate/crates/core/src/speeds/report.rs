//! One-shot evaluation of all speed formulas and certificates.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::json;

use super::coupled::{check_linear_determinacy, coupled_eigenfunction, second_potential};
use super::hypotheses::{check_hypotheses_with, HypothesisReport, Orbits};
use super::kpp::{invasion_potential, linear_speed_c0};
use super::{Certificate, SpeedOptions, Verdict};
use crate::eigen::lambda_of_mu_with;
use crate::error::{Error, Result};
use crate::orbits::OrbitOptions;
use crate::system::SystemSpec;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedReport {
    pub c0_plus: Option<f64>,
    pub mu0: Option<f64>,
    pub c1_plus: Option<f64>,
    pub c2_minus: Option<f64>,
    pub lambda0_at_mu0: Option<f64>,
    pub lambdabar_at_mu0: Option<f64>,
    pub lambda2_at_zero: Option<f64>,
    pub linearly_determinate: bool,
    pub certificates: BTreeMap<String, Certificate>,
    /// Outcomes that left a speed undefined, such as a boundary infimum.
    pub notes: Vec<String>,
}

/// Outcomes that are answers rather than failures of the numerics.
fn reportable(e: &Error) -> bool {
    matches!(e, Error::NotMonostable { .. } | Error::NoInteriorMinimum { .. })
}

pub fn analyze(sys: &SystemSpec, opts: &SpeedOptions) -> Result<SpeedReport> {
    let orbits = Orbits::compute(sys, &OrbitOptions::default(), opts)?;
    analyze_with(sys, &orbits, opts)
}

pub fn analyze_with(sys: &SystemSpec, orbits: &Orbits, opts: &SpeedOptions) -> Result<SpeedReport> {
    let (hyp, c0) = opts.exec.join(
        || check_hypotheses_with(sys, orbits, opts),
        || linear_speed_c0(sys, &orbits.u2, opts),
    );
    let hyp: HypothesisReport = hyp?;
    let mut notes = Vec::new();
    let c0 = match c0 {
        Ok(s) => Some(s),
        Err(e) if reportable(&e) => {
            notes.push(format!("c0_plus undefined: {e}"));
            None
        }
        Err(e) => return Err(e),
    };

    let mut certificates: BTreeMap<String, Certificate> = [
        ("H1", hyp.h1),
        ("H2", hyp.h2),
        ("H3", hyp.h3),
        ("H4", hyp.h4),
        ("H5", hyp.h5),
        ("PropC", hyp.prop_c),
        ("P1", hyp.p1),
        ("P2", hyp.p2),
        ("M", hyp.m),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();

    let mut lambda0_at_mu0 = None;
    let mut lambdabar_at_mu0 = None;
    let mut linearly_determinate = false;
    match c0 {
        None => {
            certificates.insert("D1".into(), Certificate::not_applicable("c0_plus undefined"));
            certificates.insert("D2".into(), Certificate::not_applicable("c0_plus undefined"));
        }
        Some(s) => match coupled_eigenfunction(sys, &orbits.u2, s.mu0, opts) {
            Ok(ce) => {
                lambda0_at_mu0 = Some(ce.lambda0);
                lambdabar_at_mu0 = Some(ce.lambdabar);
                let ld = check_linear_determinacy(sys, &ce);
                linearly_determinate = ld.linearly_determinate;
                certificates.insert("D1".into(), ld.d1);
                certificates.insert("D2".into(), ld.d2);
            }
            Err(e @ (Error::D1Violated { .. } | Error::DegenerateCoupling)) => {
                let m0 = invasion_potential(sys, &orbits.u2)?;
                let m2 = second_potential(sys, &orbits.u2.as_field());
                let l0 = lambda_of_mu_with(&sys.d1, &sys.g1, &m0, s.mu0, &opts.eigen)?.lambda;
                let lb = lambda_of_mu_with(&sys.d2, &sys.g2, &m2, s.mu0, &opts.eigen)?.lambda;
                lambda0_at_mu0 = Some(l0);
                lambdabar_at_mu0 = Some(lb);
                let m = l0 - lb;
                certificates.insert(
                    "D1".into(),
                    Certificate::new(
                        if m > 0.0 { Verdict::Pass } else { Verdict::Fail },
                        Some(m),
                        json!({ "lambda0_at_mu0": l0, "lambdabar_at_mu0": lb, "mu0": s.mu0 }),
                    ),
                );
                let reason = if matches!(e, Error::DegenerateCoupling) {
                    "a21 vanishes identically, the coupled eigenproblem degenerates"
                } else {
                    "D1 fails, the second component has no positive periodic solution"
                };
                certificates.insert("D2".into(), Certificate::not_applicable(reason));
            }
            Err(e) => return Err(e),
        },
    }

    Ok(SpeedReport {
        c0_plus: c0.map(|s| s.speed),
        mu0: c0.map(|s| s.mu0),
        c1_plus: hyp.c1_plus,
        c2_minus: hyp.c2_minus,
        lambda0_at_mu0,
        lambdabar_at_mu0,
        lambda2_at_zero: hyp.lambda2_at_zero,
        linearly_determinate,
        certificates,
        notes,
    })
}
