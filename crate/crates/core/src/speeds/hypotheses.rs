//! Checks of the standing hypotheses and of the explicit sufficient
//! conditions available for special coefficient classes.

use serde::Serialize;
use serde_json::json;

use super::kpp::{invasion_potential, scalar_kpp_speeds};
use super::{Certificate, SpeedOptions, Verdict};
use crate::coeffs::CoefficientField;
use crate::eigen::{lambda_of_mu_with, principal_eigen_with};
use crate::error::Result;
use crate::orbits::{logistic_orbit_with, OrbitOptions, PeriodicOrbit};
use crate::system::SystemSpec;

/// Tolerance for the identity `lambda(d2, g2, b2 - a22 u2*) = 0`.
pub const LAMBDA2_ZERO_TOL: f64 = 1e-6;
const H5_EPS: [f64; 2] = [1e-2, 1e-3];

/// The semi-trivial periodic states `u1*` and `u2*`.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbits {
    pub u1: PeriodicOrbit,
    pub u2: PeriodicOrbit,
}

impl Orbits {
    pub fn compute(sys: &SystemSpec, opts: &OrbitOptions, speed: &SpeedOptions) -> Result<Self> {
        let (u1, u2) = speed.exec.join(
            || logistic_orbit_with(&sys.d1, &sys.g1, &sys.b1, &sys.a11, opts),
            || logistic_orbit_with(&sys.d2, &sys.g2, &sys.b2, &sys.a22, opts),
        );
        Ok(Self { u1: u1?, u2: u2? })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub h1: Certificate,
    pub h2: Certificate,
    pub h3: Certificate,
    pub h4: Certificate,
    pub h5: Certificate,
    pub prop_c: Certificate,
    pub p1: Certificate,
    pub p2: Certificate,
    pub m: Certificate,
    pub c1_plus: Option<f64>,
    pub c2_minus: Option<f64>,
    pub lambda2_at_zero: Option<f64>,
}

pub fn check_hypotheses(sys: &SystemSpec, opts: &SpeedOptions) -> Result<HypothesisReport> {
    let orbits = Orbits::compute(sys, &OrbitOptions::default(), opts)?;
    check_hypotheses_with(sys, &orbits, opts)
}

fn is_constant(f: &CoefficientField) -> bool {
    let s = f.symmetry();
    s.x_independent.holds && s.t_independent.holds
}

fn is_zero(f: &CoefficientField) -> bool {
    f.max_abs() == 0.0
}

/// Every coefficient even in `x` and both drifts odd.
fn reflection_symmetric(sys: &SystemSpec) -> bool {
    let even = [&sys.d1, &sys.d2, &sys.b1, &sys.b2, &sys.a11, &sys.a12, &sys.a21, &sys.a22]
        .iter()
        .all(|f| f.symmetry().even_in_x.holds);
    even && sys.g1.symmetry().odd_in_x.holds && sys.g2.symmetry().odd_in_x.holds
}

fn b2_minus_a22u2(sys: &SystemSpec, u2: &PeriodicOrbit) -> CoefficientField {
    let a22u2 = sys.a22.zip_with(&u2.as_field(), |a, u| a * u);
    sys.b2.zip_with(&a22u2, |b, p| b - p)
}

pub fn check_hypotheses_with(sys: &SystemSpec, orbits: &Orbits, opts: &SpeedOptions) -> Result<HypothesisReport> {
    let eo = &opts.eigen;
    let (l1, l2) = opts.exec.join(
        || principal_eigen_with(&sys.d1, &sys.g1, &sys.b1, eo),
        || principal_eigen_with(&sys.d2, &sys.g2, &sys.b2, eo),
    );
    let (l1, l2) = (l1?.lambda, l2?.lambda);
    let m1 = l1.min(l2);
    let h1 = Certificate::new(
        Verdict::from_margin(m1),
        Some(m1),
        json!({ "lambda(d1,g1,b1)": l1, "lambda(d2,g2,b2)": l2 }),
    );

    let m0 = invasion_potential(sys, &orbits.u2)?;
    let lh2 = principal_eigen_with(&sys.d1, &sys.g1, &m0, eo)?.lambda;
    let h2 = Certificate::new(
        Verdict::from_margin(lh2),
        Some(lh2),
        json!({ "lambda(d1,g1,b1-a12*u2*)": lh2, "u2_extinct": orbits.u2.extinct }),
    );

    let prop_c = check_prop_c(sys);
    let h3 = Certificate::new(
        if prop_c.verdict.passed() { Verdict::PassSufficient } else { Verdict::Inconclusive },
        prop_c.margin,
        json!({ "criterion": "mean inequalities on min/max envelopes" }),
    );

    let (right, left) = opts.exec.join(
        || scalar_kpp_speeds(&sys.d1, &sys.g1, &sys.b1, opts).map(|s| s.right),
        || scalar_kpp_speeds(&sys.d2, &sys.g2, &sys.b2, opts).map(|s| s.left),
    );
    let c1_plus = right.as_ref().ok().map(|s| s.speed);
    let c2_minus = left.as_ref().ok().map(|s| s.speed);
    let h4 = match (&right, &left) {
        (Ok(r), Ok(l)) => {
            let m = r.speed + l.speed;
            Certificate::new(
                Verdict::from_margin(m),
                Some(m),
                json!({ "c1_plus": r.speed, "mu1": r.mu0, "c2_minus": l.speed, "mu2": l.mu0 }),
            )
        }
        (Err(e), _) | (_, Err(e)) => Certificate::from_error(e),
    };

    let (h5, lambda2_at_zero) = if orbits.u2.extinct {
        (Certificate::not_applicable("u2* is extinct"), None)
    } else {
        let m2 = b2_minus_a22u2(sys, &orbits.u2);
        let lz = principal_eigen_with(&sys.d2, &sys.g2, &m2, eo)?.lambda;
        let certified = lz.abs() <= LAMBDA2_ZERO_TOL;
        let cert = match c1_plus {
            None => Certificate::new(
                Verdict::Inconclusive,
                None,
                json!({ "lambda2_at_zero": lz, "reason": "c1_plus unavailable" }),
            ),
            Some(c1) if reflection_symmetric(sys) => Certificate::new(
                Verdict::Pass,
                Some(c1),
                json!({ "lambda2_at_zero": lz, "lambda2_zero_certified": certified, "slope": 0.0,
                        "method": "reflection symmetry" }),
            ),
            Some(c1) => {
                let slopes: Vec<f64> = H5_EPS
                    .iter()
                    .map(|&e| lambda_of_mu_with(&sys.d2, &sys.g2, &m2, e, eo).map(|r| (r.lambda - lz) / e))
                    .collect::<Result<_>>()?;
                let s0 = (10.0 * slopes[1] - slopes[0]) / 9.0;
                let m = c1 - s0;
                Certificate::new(
                    if m >= 0.0 { Verdict::Pass } else { Verdict::Fail },
                    Some(m),
                    json!({ "lambda2_at_zero": lz, "lambda2_zero_certified": certified, "slope": s0,
                            "slope_samples": slopes, "c1_plus": c1, "method": "richardson" }),
                )
            }
        };
        (cert, Some(lz))
    };

    Ok(HypothesisReport {
        h1,
        h2,
        h3,
        h4,
        h5,
        prop_c,
        p1: check_p1(sys),
        p2: check_p2(sys, orbits),
        m: check_condition_m(sys),
        c1_plus,
        c2_minus,
        lambda2_at_zero,
    })
}

fn row_stat(nt: usize, f: impl Fn(usize) -> f64) -> Vec<f64> {
    (0..nt).map(f).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Sufficient condition for the absence of a coexistence state:
/// `int min_x b1 > max_t (max_x a12 / min_x a22) int max_x b2` and
/// `int max_x b2 <= max_t (min_x a21 / max_x a11) int min_x b1`.
pub fn check_prop_c(sys: &SystemSpec) -> Certificate {
    let nt = sys.nt();
    let b1lo = mean(&row_stat(nt, |j| sys.b1.row_min(j)));
    let b2hi = mean(&row_stat(nt, |j| sys.b2.row_max(j)));
    let r12 = max(&row_stat(nt, |j| sys.a12.row_max(j) / sys.a22.row_min(j)));
    let r21 = max(&row_stat(nt, |j| sys.a21.row_min(j) / sys.a11.row_max(j)));
    let first = b1lo - r12 * b2hi;
    let second = r21 * b1lo - b2hi;
    let pass = first > 0.0 && second >= 0.0;
    Certificate::new(
        if pass { Verdict::Pass } else { Verdict::Fail },
        Some(first.min(second)),
        json!({ "mean_min_b1": b1lo, "mean_max_b2": b2hi, "max_ratio_a12_a22": r12, "max_ratio_a21_a11": r21,
                "first_margin": first, "second_margin": second }),
    )
}

/// `None` unless all coefficients are `x`-independent, drifts vanish and
/// diffusions are constant; otherwise the diffusion ratio `d2/d1`.
fn ode_class(sys: &SystemSpec) -> Option<f64> {
    let all_x_free = sys.all().iter().all(|f| f.symmetry().x_independent.holds);
    let ok = all_x_free && is_zero(&sys.g1) && is_zero(&sys.g2) && is_constant(&sys.d1) && is_constant(&sys.d2);
    ok.then(|| sys.d2.at(0, 0) / sys.d1.at(0, 0))
}

/// `mean b1 > max_t (a12/a22) mean b2 > 0` and
/// `0 < mean b2 <= max_t (a21/a11) mean b1`, for space-homogeneous data.
pub fn check_p1(sys: &SystemSpec) -> Certificate {
    if ode_class(sys).is_none() {
        return Certificate::not_applicable("needs x-independent coefficients, zero drift, constant diffusion");
    }
    let nt = sys.nt();
    let (b1, b2) = (sys.b1.mean(), sys.b2.mean());
    let r12 = max(&row_stat(nt, |j| sys.a12.at(j as isize, 0) / sys.a22.at(j as isize, 0)));
    let r21 = max(&row_stat(nt, |j| sys.a21.at(j as isize, 0) / sys.a11.at(j as isize, 0)));
    let m = (b1 - r12 * b2).min(r12 * b2).min(r21 * b1 - b2).min(b2);
    let pass = b1 > r12 * b2 && r12 * b2 > 0.0 && b2 > 0.0 && b2 <= r21 * b1;
    Certificate::new(
        if pass { Verdict::Pass } else { Verdict::Fail },
        Some(m),
        json!({ "mean_b1": b1, "mean_b2": b2, "max_ratio_a12_a22": r12, "max_ratio_a21_a11": r21 }),
    )
}

/// `0 < d <= 1` with `d = d2/d1`, and
/// `a11 u1* - a12 u2* >= a21 u1* - a22 u2* >= 0` at every time node.
pub fn check_p2(sys: &SystemSpec, orbits: &Orbits) -> Certificate {
    let Some(d) = ode_class(sys) else {
        return Certificate::not_applicable("needs x-independent coefficients, zero drift, constant diffusion");
    };
    if orbits.u1.extinct || orbits.u2.extinct {
        return Certificate::not_applicable("a semi-trivial state is extinct");
    }
    let mut gap = f64::INFINITY;
    let mut lower = f64::INFINITY;
    for j in 0..sys.nt() {
        let ji = j as isize;
        let (u1, u2) = (orbits.u1.snapshots[j][0], orbits.u2.snapshots[j][0]);
        let left = sys.a11.at(ji, 0) * u1 - sys.a12.at(ji, 0) * u2;
        let right = sys.a21.at(ji, 0) * u1 - sys.a22.at(ji, 0) * u2;
        gap = gap.min(left - right);
        lower = lower.min(right);
    }
    let slack = 1e-12;
    let m = (1.0 - d).min(gap).min(lower);
    let pass = d > 0.0 && d <= 1.0 && gap >= -slack && lower >= -slack;
    Certificate::new(
        if pass { Verdict::Pass } else { Verdict::Fail },
        Some(m),
        json!({ "diffusion_ratio": d, "min_order_gap": gap, "min_lower": lower }),
    )
}

/// For `b1 = b2 = a`, unit competition, zero drift and constant diffusion:
/// `a` is even and non-constant in `x` with nonnegative mean.
pub fn check_condition_m(sys: &SystemSpec) -> Certificate {
    let unit = [&sys.a11, &sys.a12, &sys.a21, &sys.a22]
        .iter()
        .all(|f| f.values().iter().all(|&v| v == 1.0));
    let structured = sys.b1 == sys.b2
        && unit
        && is_zero(&sys.g1)
        && is_zero(&sys.g2)
        && is_constant(&sys.d1)
        && is_constant(&sys.d2);
    if !structured {
        return Certificate::not_applicable("needs b1 = b2, unit competition, zero drift, constant diffusion");
    }
    let s = sys.b1.symmetry();
    let mean = sys.b1.mean();
    let even = s.even_in_x.holds;
    let nontrivial = !s.x_independent.holds;
    let pass = even && nontrivial && mean >= -1e-12 * sys.b1.max_abs();
    Certificate::new(
        if pass { Verdict::Pass } else { Verdict::Fail },
        Some(mean),
        json!({ "mean": mean, "even_in_x": even, "x_dependent": nontrivial,
                "even_deviation": s.even_in_x.deviation, "d1_below_d2": sys.d1.at(0, 0) < sys.d2.at(0, 0) }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::ModelExprs;

    fn sys(m: &ModelExprs) -> SystemSpec {
        SystemSpec::from_exprs(m, 40, 16).unwrap()
    }

    #[test]
    fn constants_instance() {
        let s = sys(&ModelExprs::constants(1.0, 1.0, 2.0, 1.0, 1.0, 0.3, 1.2, 1.0));
        let r = check_hypotheses(&s, &SpeedOptions::default()).unwrap();
        for c in [&r.h1, &r.h2, &r.h4, &r.h5] {
            assert_eq!(c.verdict, Verdict::Pass, "{c:?}");
        }
        assert_eq!(r.h3.verdict, Verdict::PassSufficient);
        assert!((r.prop_c.details["first_margin"].as_f64().unwrap() - 1.7).abs() < 1e-12);
        assert!((r.prop_c.details["second_margin"].as_f64().unwrap() - 1.4).abs() < 1e-12);
        assert!(r.lambda2_at_zero.unwrap().abs() <= LAMBDA2_ZERO_TOL);
        assert!((r.c1_plus.unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-8);
        assert_eq!(r.m.verdict, Verdict::NotApplicable);
    }

    #[test]
    fn extinct_second_species_fails_h1() {
        let s = sys(&ModelExprs::constants(1.0, 1.0, 2.0, -1.0, 1.0, 0.3, 1.2, 1.0));
        let r = check_hypotheses(&s, &SpeedOptions::default()).unwrap();
        assert_eq!(r.h1.verdict, Verdict::Fail);
        assert!((r.h1.margin.unwrap() - -1.0).abs() < 1e-12);
        assert_eq!(r.h5.verdict, Verdict::NotApplicable);
    }

    #[test]
    fn asymmetric_media_use_the_slope() {
        let mut m = ModelExprs::constants(1.0, 1.0, 2.0, 1.0, 1.0, 0.3, 1.2, 1.0);
        m.b2 = "1 + 0.5*sin(2*pi*x)".into();
        m.g2 = "0.3".into();
        let r = check_hypotheses(&sys(&m), &SpeedOptions::default()).unwrap();
        assert_eq!(r.h5.details["method"], "richardson");
        assert!(r.lambda2_at_zero.unwrap().abs() <= LAMBDA2_ZERO_TOL);
        // constant drift g shifts lambda2 by g*mu, so the slope is near 0.3
        let slope = r.h5.details["slope"].as_f64().unwrap();
        assert!((slope - 0.3).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn symmetric_media_take_the_shortcut() {
        let mut m = ModelExprs::constants(1.0, 1.0, 2.0, 1.0, 1.0, 0.3, 1.2, 1.0);
        m.b2 = "1 + 0.5*cos(2*pi*x)".into();
        m.g1 = "0.2*sin(2*pi*x)".into();
        let r = check_hypotheses(&sys(&m), &SpeedOptions::default()).unwrap();
        assert_eq!(r.h5.verdict, Verdict::Pass);
        assert_eq!(r.h5.details["method"], "reflection symmetry");
    }

    #[test]
    fn p1_p2_on_ode_data() {
        let s = sys(&ModelExprs::constants(1.0, 0.5, 2.0, 1.0, 1.0, 0.3, 1.2, 1.0));
        let orbits = Orbits::compute(&s, &OrbitOptions::default(), &SpeedOptions::default()).unwrap();
        assert_eq!(check_p1(&s).verdict, Verdict::Pass);
        let p2 = check_p2(&s, &orbits);
        assert_eq!(p2.verdict, Verdict::Pass);
        assert!((p2.details["min_order_gap"].as_f64().unwrap() - 0.3).abs() < 1e-9);
        assert!((p2.details["min_lower"].as_f64().unwrap() - 1.4).abs() < 1e-9);

        let fast = sys(&ModelExprs::constants(1.0, 1.5, 2.0, 1.0, 1.0, 0.3, 1.2, 1.0));
        let orbits = Orbits::compute(&fast, &OrbitOptions::default(), &SpeedOptions::default()).unwrap();
        assert_eq!(check_p2(&fast, &orbits).verdict, Verdict::Fail);

        let mut m = ModelExprs::constants(1.0, 0.5, 2.0, 1.0, 1.0, 0.3, 1.2, 1.0);
        m.b1 = "2 + 0.1*cos(2*pi*x)".into();
        assert_eq!(check_p1(&sys(&m)).verdict, Verdict::NotApplicable);
    }

    #[test]
    fn condition_m() {
        let mut m = ModelExprs::constants(0.5, 2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0);
        m.b1 = "cos(2*pi*x)".into();
        m.b2 = m.b1.clone();
        let c = check_condition_m(&sys(&m));
        assert_eq!(c.verdict, Verdict::Pass);
        assert!(c.margin.unwrap().abs() < 1e-12);

        m.b1 = "sin(2*pi*x)".into();
        m.b2 = m.b1.clone();
        assert_eq!(check_condition_m(&sys(&m)).verdict, Verdict::Fail);

        m.b1 = "1".into();
        m.b2 = "1".into();
        assert_eq!(check_condition_m(&sys(&m)).verdict, Verdict::Fail);
    }
}
