//! Linear spreading speeds from tilted principal eigenvalues.

use serde::Serialize;

use super::minimize::{minimize_speed, SpeedMin};
use super::SpeedOptions;
use crate::coeffs::CoefficientField;
use crate::eigen::{lambda_of_mu_with, principal_eigen_with};
use crate::error::{Error, Result};
use crate::orbits::PeriodicOrbit;
use crate::system::SystemSpec;

/// `inf_{mu > 0} lambda_m(mu) / mu` for `u_t = d u_xx - g u_x + m u`,
/// after checking `lambda_m(0) > 0`.
pub fn linear_speed(
    d: &CoefficientField,
    g: &CoefficientField,
    m: &CoefficientField,
    opts: &SpeedOptions,
) -> Result<SpeedMin> {
    let lambda0 = principal_eigen_with(d, g, m, &opts.eigen)?.lambda;
    if lambda0 <= 0.0 {
        return Err(Error::NotMonostable { lambda: lambda0 });
    }
    minimize_speed(
        |mu| lambda_of_mu_with(d, g, m, mu, &opts.eigen).map(|r| r.lambda),
        opts.mu_lo,
        opts.mu_hi,
        opts.mu_rel_tol,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KppSpeeds {
    pub right: SpeedMin,
    pub left: SpeedMin,
}

/// Rightward and leftward speeds of `u_t = d u_xx - g u_x + u (b - u)`.
/// The leftward speed is the rightward speed of the reflected equation,
/// whose drift is `-g(t, -x)`.
pub fn scalar_kpp_speeds(
    d: &CoefficientField,
    g: &CoefficientField,
    b: &CoefficientField,
    opts: &SpeedOptions,
) -> Result<KppSpeeds> {
    let (dr, gr, br) = (d.reflect_x(), g.reflect_x().map(|v| -v), b.reflect_x());
    let (right, left) = opts.exec.join(|| linear_speed(d, g, b, opts), || linear_speed(&dr, &gr, &br, opts));
    Ok(KppSpeeds { right: right?, left: left? })
}

/// The potential `b1 - a12 u2*` of the first equation linearized at
/// `(0, u2*)`.
pub fn invasion_potential(sys: &SystemSpec, u2_star: &PeriodicOrbit) -> Result<CoefficientField> {
    let u2 = u2_star.as_field();
    if !u2.same_grid(&sys.b1) {
        return Err(Error::Invalid("u2* and the system use different grids".into()));
    }
    let a12u2 = sys.a12.zip_with(&u2, |a, u| a * u);
    Ok(sys.b1.zip_with(&a12u2, |b, p| b - p))
}

/// `c0 = inf lambda_0(mu)/mu` with `lambda_0` built on `b1 - a12 u2*`.
pub fn linear_speed_c0(sys: &SystemSpec, u2_star: &PeriodicOrbit, opts: &SpeedOptions) -> Result<SpeedMin> {
    let m0 = invasion_potential(sys, u2_star)?;
    linear_speed(&sys.d1, &sys.g1, &m0, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbits::logistic_orbit;
    use crate::system::ModelExprs;

    fn f(expr: &str) -> CoefficientField {
        CoefficientField::build(expr, 1.0, 1.0, 40, 16).unwrap()
    }

    #[test]
    fn fisher_speeds() {
        let o = SpeedOptions::default();
        let s = scalar_kpp_speeds(&f("1"), &f("0"), &f("1"), &o).unwrap();
        assert!((s.right.speed - 2.0).abs() < 1e-9);
        assert!((s.left.speed - 2.0).abs() < 1e-9);
        let s = scalar_kpp_speeds(&f("2"), &f("0"), &f("3"), &o).unwrap();
        assert!((s.right.speed - 2.0 * 6f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn drift_shifts_the_speeds() {
        // inf (mu^2 + mu + 1)/mu = 3 and inf (mu^2 - mu + 1)/mu = 1
        let s = scalar_kpp_speeds(&f("1"), &f("1"), &f("1"), &SpeedOptions::default()).unwrap();
        assert!((s.right.speed - 3.0).abs() < 1e-9);
        assert!((s.left.speed - 1.0).abs() < 1e-9);
    }

    #[test]
    fn non_monostable_is_rejected() {
        let err = scalar_kpp_speeds(&f("1"), &f("0"), &f("-0.5"), &SpeedOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NotMonostable { .. }));
    }

    #[test]
    fn c0_for_constants() {
        let sys = SystemSpec::from_exprs(&ModelExprs::constants(1.0, 1.0, 2.0, 1.0, 1.0, 0.3, 1.2, 1.0), 40, 16).unwrap();
        let u2 = logistic_orbit(&sys.d2, &sys.g2, &sys.b2, &sys.a22).unwrap();
        let c0 = linear_speed_c0(&sys, &u2, &SpeedOptions::default()).unwrap();
        assert!((c0.speed - 2.0 * 1.7f64.sqrt()).abs() < 1e-8);
        assert!((c0.mu0 - 1.7f64.sqrt()).abs() < 1e-5);
    }

    #[test]
    fn c0_without_cross_competition_is_the_kpp_speed() {
        let sys = SystemSpec::from_exprs(&ModelExprs::constants(1.5, 1.0, 2.0, 1.0, 1.0, 0.0, 1.2, 1.0), 40, 16).unwrap();
        let u2 = logistic_orbit(&sys.d2, &sys.g2, &sys.b2, &sys.a22).unwrap();
        let o = SpeedOptions::default();
        let c0 = linear_speed_c0(&sys, &u2, &o).unwrap();
        let kpp = scalar_kpp_speeds(&sys.d1, &sys.g1, &sys.b1, &o).unwrap();
        assert_eq!(c0.speed, kpp.right.speed);
    }
}
