//! The positive eigenfunction of the system linearized at `(0, u2*)` and
//! the linear-determinacy margins built on it.

use serde::Serialize;
use serde_json::json;

use super::kpp::invasion_potential;
use super::{Certificate, SpeedOptions, Verdict};
use crate::coeffs::CoefficientField;
use crate::eigen::lambda_of_mu_with;
use crate::error::{Error, Result};
use crate::orbits::PeriodicOrbit;
use crate::pde::cell::tilt;
use crate::pde::LinearCellProblem;
use crate::system::SystemSpec;

const SERIES_TOL: f64 = 1e-12;
const SERIES_CAP: usize = 100_000;
/// Terms after which a non-shrinking series is declared non-contractive.
const SERIES_PATIENCE: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledEigen {
    pub mu0: f64,
    pub lambda0: f64,
    pub lambdabar: f64,
    /// `nt` snapshots of each component over one period.
    pub phi1: Vec<Vec<f64>>,
    pub phi2: Vec<Vec<f64>>,
    /// Relative closure gap of the reconstructed second component.
    pub residual: f64,
    pub series_terms: usize,
}

/// Potential `b2 - 2 a22 u2*` of the second linearized equation.
pub(crate) fn second_potential(sys: &SystemSpec, u2: &CoefficientField) -> CoefficientField {
    let a22u2 = sys.a22.zip_with(u2, |a, u| 2.0 * a * u);
    sys.b2.zip_with(&a22u2, |b, p| b - p)
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Solves for the periodic second component given the first one.
///
/// Works in the rescaled variable `phi2(t) = exp(-lambda0 t) u2(t)`. One
/// step integrates the reaction part `phi2' = (h - lambda0) phi2 + a21 u2* phi1`
/// exactly with `phi1` frozen, then applies the implicit transport solve.
/// The periodic start solves `(I - S) phi = F`, summed as a Neumann series
/// in the homogeneous period map `S = U2 / r1`.
pub fn second_component(
    sys: &SystemSpec,
    u2_star: &PeriodicOrbit,
    mu0: f64,
    lambda0: f64,
    phi1: &[Vec<f64>],
) -> Result<(Vec<Vec<f64>>, f64, usize)> {
    if sys.a21_vanishes() {
        return Err(Error::DegenerateCoupling);
    }
    let u2 = u2_star.as_field();
    let (drift, pot) = tilt(&sys.d2, &sys.g2, &second_potential(sys, &u2), mu0)?;
    let problem = LinearCellProblem::with_options(&sys.d2, &drift, &pot, 1, lambda0)?;
    let (nt, nx) = (problem.nt(), problem.nx());
    if phi1.len() != nt || phi1.iter().any(|r| r.len() != nx) {
        return Err(Error::Invalid("first component does not match the grid".into()));
    }
    let dt = problem.dt();
    let coupling: Vec<Vec<f64>> = (0..nt)
        .map(|j| {
            let (a, u, g) = (sys.a21.row(j), u2.row(j), problem.growth(j));
            (0..nx)
                .map(|k| {
                    // exact integrating factor over the step: (e^z - 1)/z * dt
                    let z = g[k].ln();
                    let w = if z.abs() < 1e-8 { dt * (1.0 + 0.5 * z) } else { dt * (g[k] - 1.0) / z };
                    w * a[k] * u[k]
                })
                .collect()
        })
        .collect();

    let forced_step = |j: usize, v: &mut [f64]| {
        let g = problem.growth(j);
        for k in 0..nx {
            v[k] = g[k] * v[k] + coupling[j][k] * phi1[j][k];
        }
        problem.transport(j, v);
    };

    let mut forcing = vec![0.0; nx];
    for j in 0..nt {
        forced_step(j, &mut forcing);
    }

    let mut sum = forcing.clone();
    let mut term = forcing;
    let mut prev_norm = sup(&term);
    let mut terms = 1;
    loop {
        problem.apply_period(&mut term);
        let norm = sup(&term);
        terms += 1;
        for (s, t) in sum.iter_mut().zip(&term) {
            *s += t;
        }
        let ratio = norm / prev_norm;
        if norm <= SERIES_TOL * sup(&sum) {
            break;
        }
        if !norm.is_finite() || (terms > SERIES_PATIENCE && ratio >= 1.0) {
            return Err(Error::D1Violated { ratio });
        }
        if terms >= SERIES_CAP {
            return Err(Error::NoConvergence { iterations: terms, last_change: ratio });
        }
        prev_norm = norm;
    }

    let mut snaps = Vec::with_capacity(nt);
    let mut v = sum.clone();
    for j in 0..nt {
        snaps.push(v.clone());
        forced_step(j, &mut v);
    }
    let scale = snaps.iter().map(|s| sup(s)).fold(0.0, f64::max);
    let gap = v.iter().zip(&sum).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok((snaps, gap / scale, terms))
}

/// First component from the tilted scalar eigenproblem at `mu0`, second
/// from [`second_component`].
pub fn coupled_eigenfunction(
    sys: &SystemSpec,
    u2_star: &PeriodicOrbit,
    mu0: f64,
    opts: &SpeedOptions,
) -> Result<CoupledEigen> {
    if sys.a21_vanishes() {
        return Err(Error::DegenerateCoupling);
    }
    let m0 = invasion_potential(sys, u2_star)?;
    let u2 = u2_star.as_field();
    let m2 = second_potential(sys, &u2);
    let (first, bar) = opts.exec.join(
        || lambda_of_mu_with(&sys.d1, &sys.g1, &m0, mu0, &opts.eigen),
        || lambda_of_mu_with(&sys.d2, &sys.g2, &m2, mu0, &opts.eigen),
    );
    let (first, bar) = (first?, bar?);
    if first.lambda <= bar.lambda {
        return Err(Error::D1Violated { ratio: ((bar.lambda - first.lambda) * sys.omega()).exp() });
    }
    let (phi2, closure, terms) = second_component(sys, u2_star, mu0, first.lambda, &first.eigenfunction)?;
    Ok(CoupledEigen {
        mu0,
        lambda0: first.lambda,
        lambdabar: bar.lambda,
        residual: closure.max(first.residual),
        phi1: first.eigenfunction,
        phi2,
        series_terms: terms,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearDeterminacy {
    pub d1: Certificate,
    pub d2: Certificate,
    /// Both sufficient conditions hold.
    pub linearly_determinate: bool,
}

/// `D1`: `lambda0(mu0) - lambdabar(mu0)`. `D2`: the smallest value over the
/// grid of `phi1/phi2 - max(a12/a11, a22/a21)`.
pub fn check_linear_determinacy(sys: &SystemSpec, ce: &CoupledEigen) -> LinearDeterminacy {
    let m1 = ce.lambda0 - ce.lambdabar;
    let d1 = Certificate::new(
        Verdict::from_margin(m1),
        Some(m1),
        json!({ "lambda0_at_mu0": ce.lambda0, "lambdabar_at_mu0": ce.lambdabar, "mu0": ce.mu0 }),
    );
    let mut worst = f64::INFINITY;
    let mut at = (0, 0);
    let mut ratio_min = f64::INFINITY;
    for (j, (r1, r2)) in ce.phi1.iter().zip(&ce.phi2).enumerate() {
        let (a11, a12, a21, a22) = (sys.a11.row(j), sys.a12.row(j), sys.a21.row(j), sys.a22.row(j));
        for k in 0..r1.len() {
            let ratio = r1[k] / r2[k];
            let need = (a12[k] / a11[k]).max(a22[k] / a21[k]);
            let m = ratio - need;
            ratio_min = ratio_min.min(ratio);
            if m < worst {
                worst = m;
                at = (j, k);
            }
        }
    }
    let d2 = Certificate::new(
        Verdict::from_margin(worst),
        Some(worst),
        json!({
            "min_ratio_phi1_phi2": ratio_min,
            "worst_node": [at.0, at.1],
            "eigenfunction_residual": ce.residual,
        }),
    );
    let linearly_determinate = d1.verdict.passed() && d2.verdict.passed();
    LinearDeterminacy { d1, d2, linearly_determinate }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbits::logistic_orbit;
    use crate::system::ModelExprs;

    fn setup(m: &ModelExprs, nt: usize, nx: usize) -> (SystemSpec, PeriodicOrbit) {
        let sys = SystemSpec::from_exprs(m, nt, nx).unwrap();
        let u2 = logistic_orbit(&sys.d2, &sys.g2, &sys.b2, &sys.a22).unwrap();
        (sys, u2)
    }

    #[test]
    fn constants_match_closed_form_ratio() {
        let (sys, u2) = setup(&ModelExprs::constants(1.0, 0.5, 2.0, 1.0, 1.0, 0.3, 1.2, 1.0), 40, 16);
        let mu0 = 1.7f64.sqrt();
        let ce = coupled_eigenfunction(&sys, &u2, mu0, &SpeedOptions::default()).unwrap();
        assert!((ce.lambda0 - 3.4).abs() < 1e-10);
        assert!((ce.lambdabar - -0.15).abs() < 1e-10);
        let expect = (ce.lambda0 - ce.lambdabar) / 1.2;
        for (r1, r2) in ce.phi1.iter().zip(&ce.phi2) {
            for (a, b) in r1.iter().zip(r2) {
                assert!((a / b - expect).abs() < 1e-6 * expect, "{} vs {expect}", a / b);
            }
        }
        let ld = check_linear_determinacy(&sys, &ce);
        assert!(ld.linearly_determinate);
        assert!((ld.d1.margin.unwrap() - 3.55).abs() < 1e-10);
    }

    #[test]
    fn seasonal_instance_closes() {
        let mut m = ModelExprs::constants(1.0, 0.5, 2.0, 1.0, 1.0, 0.3, 1.2, 1.0);
        m.b2 = "1 + 0.5*sin(2*pi*t)".into();
        let (sys, u2) = setup(&m, 100, 8);
        let ce = coupled_eigenfunction(&sys, &u2, 1.3, &SpeedOptions::default()).unwrap();
        assert!(ce.residual < 1e-6, "residual {}", ce.residual);
        assert!(ce.phi2.iter().flatten().all(|&v| v > 0.0));
    }

    #[test]
    fn decoupled_system_is_degenerate() {
        let (sys, u2) = setup(&ModelExprs::constants(1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0), 10, 8);
        let err = coupled_eigenfunction(&sys, &u2, 1.0, &SpeedOptions::default()).unwrap_err();
        assert_eq!(err, Error::DegenerateCoupling);
    }

    #[test]
    fn ratio_is_invariant_under_joint_scaling() {
        let mut m = ModelExprs::constants(1.0, 0.5, 2.0, 1.0, 1.0, 0.3, 1.2, 1.0);
        m.b1 = "2 + 0.3*cos(2*pi*x)".into();
        let (sys, u2) = setup(&m, 40, 16);
        let ce = coupled_eigenfunction(&sys, &u2, 1.2, &SpeedOptions::default()).unwrap();
        let doubled: Vec<Vec<f64>> = ce.phi1.iter().map(|r| r.iter().map(|v| 2.0 * v).collect()).collect();
        let (phi2b, _, _) = second_component(&sys, &u2, 1.2, ce.lambda0, &doubled).unwrap();
        for j in 0..ce.phi1.len() {
            for k in 0..ce.phi1[j].len() {
                let r = ce.phi1[j][k] / ce.phi2[j][k];
                let rb = doubled[j][k] / phi2b[j][k];
                assert!((r - rb).abs() <= 1e-10 * r);
                assert!((phi2b[j][k] - 2.0 * ce.phi2[j][k]).abs() <= 1e-12 * phi2b[j][k]);
            }
        }
    }

    #[test]
    fn weak_coupling_still_satisfies_d2() {
        // phi1/phi2 = (3.4 + 0.15)/(0.01) = 355 against a22/a21 = 100
        let (sys, u2) = setup(&ModelExprs::constants(1.0, 0.5, 2.0, 1.0, 1.0, 0.3, 0.01, 1.0), 20, 8);
        let ce = coupled_eigenfunction(&sys, &u2, 1.7f64.sqrt(), &SpeedOptions::default()).unwrap();
        let ld = check_linear_determinacy(&sys, &ce);
        assert!(ld.d2.verdict.passed());
        assert!((ld.d2.margin.unwrap() - 255.0).abs() < 1e-4);
    }

    #[test]
    fn fast_second_diffusion_breaks_d2() {
        // lambdabar = 2.5*1.7 - 1 = 3.25, ratio (3.4-3.25)/1.2 = 0.125 < 0.833
        let (sys, u2) = setup(&ModelExprs::constants(1.0, 2.5, 2.0, 1.0, 1.0, 0.3, 1.2, 1.0), 20, 8);
        let ce = coupled_eigenfunction(&sys, &u2, 1.7f64.sqrt(), &SpeedOptions::default()).unwrap();
        let ld = check_linear_determinacy(&sys, &ce);
        assert!(ld.d1.verdict.passed());
        assert_eq!(ld.d2.verdict, Verdict::Fail);
        assert!(!ld.linearly_determinate);
    }

    #[test]
    fn d1_failure_is_reported() {
        let (sys, u2) = setup(&ModelExprs::constants(1.0, 4.0, 2.0, 1.0, 1.0, 0.3, 1.2, 1.0), 20, 8);
        let err = coupled_eigenfunction(&sys, &u2, 1.7f64.sqrt(), &SpeedOptions::default()).unwrap_err();
        assert!(matches!(err, Error::D1Violated { .. }));
    }
}
