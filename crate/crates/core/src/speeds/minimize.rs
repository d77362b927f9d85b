//! Golden-section minimization of `mu -> lambda(mu) / mu`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Default search interval for the decay rate `mu`.
pub const MU_LO: f64 = 1e-3;
pub const MU_HI: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeedMin {
    /// `min lambda(mu)/mu` over the range.
    pub speed: f64,
    pub mu0: f64,
    pub lambda_at_mu0: f64,
    pub evaluations: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Minimizes `lambda(mu)/mu` on `[lo, hi]` to relative tolerance `rel_tol`
/// in `mu`. Fails with `NoInteriorMinimum` when the quotient is monotone
/// on the range, judged by one-sided slopes at both ends.
pub fn minimize_speed<F>(lambda: F, lo: f64, hi: f64, rel_tol: f64) -> Result<SpeedMin>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Invalid(format!("mu range must satisfy 0 < lo < hi, got [{lo}, {hi}]")));
    }
    let mut evaluations = 0usize;
    let mut quotient = |mu: f64| -> Result<(f64, f64)> {
        evaluations += 1;
        let l = lambda(mu)?;
        Ok((l / mu, l))
    };

    let h = 1e-3;
    let (q_lo, _) = quotient(lo)?;
    let (q_lo2, _) = quotient(lo * (1.0 + h))?;
    let (q_hi, _) = quotient(hi)?;
    let (q_hi2, _) = quotient(hi * (1.0 - h))?;
    let slope_lo = (q_lo2 - q_lo) / (lo * h);
    let slope_hi = (q_hi - q_hi2) / (hi * h);
    if slope_lo >= 0.0 || slope_hi <= 0.0 {
        return Err(Error::NoInteriorMinimum { lo, hi, slope_lo, slope_hi });
    }

    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = quotient(x1)?;
    let mut f2 = quotient(x2)?;
    while b - a > rel_tol * 0.5 * (a + b) {
        if f1.0 <= f2.0 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = quotient(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = quotient(x2)?;
        }
    }
    let (mu0, (speed, lambda_at_mu0)) = if f1.0 <= f2.0 { (x1, f1) } else { (x2, f2) };
    Ok(SpeedMin { speed, mu0, lambda_at_mu0, evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(f: impl Fn(f64) -> f64) -> SpeedMin {
        minimize_speed(|m| Ok(f(m)), MU_LO, MU_HI, 1e-6).unwrap()
    }

    #[test]
    fn am_gm_cases() {
        let r = run(|m| m * m + 1.0);
        assert!((r.speed - 2.0).abs() < 1e-10);
        assert!((r.mu0 - 1.0).abs() < 1e-5);

        let r = run(|m| 2.0 * m * m + 3.0);
        assert!((r.speed - 2.0 * 6f64.sqrt()).abs() < 1e-10);
        assert!((r.mu0 - 1.5f64.sqrt()).abs() < 1e-5);

        let r = run(|m| m * m + 1.7);
        assert!((r.speed - 2.607_681).abs() < 1e-6);
        assert!((r.mu0 - 1.303_840).abs() < 1e-5);
    }

    #[test]
    fn monotone_quotient_has_no_interior_minimum() {
        let err = minimize_speed(|m| Ok(m * m + 1e-8), MU_LO, MU_HI, 1e-6).unwrap_err();
        assert!(matches!(err, Error::NoInteriorMinimum { .. }));
        let err = minimize_speed(|m| Ok(1000.0 * m * m + 1e6), MU_LO, MU_HI, 1e-6).unwrap_err();
        assert!(matches!(err, Error::NoInteriorMinimum { .. }));
    }

    #[test]
    fn stable_under_tighter_tolerance() {
        let f = |m: f64| 0.7 * m * m + 0.3 * m + 1.1 + 0.05 * (3.0 * m).sin();
        let a = minimize_speed(|m| Ok(f(m)), MU_LO, MU_HI, 1e-6).unwrap();
        let b = minimize_speed(|m| Ok(f(m)), MU_LO, MU_HI, 1e-12).unwrap();
        assert!((a.speed - b.speed).abs() < 1e-5);
        assert!(b.evaluations > a.evaluations);
    }

    #[test]
    fn errors_propagate() {
        let err = minimize_speed(|_| Err(Error::NoConvergence { iterations: 1, last_change: 1.0 }), 0.1, 1.0, 1e-6);
        assert!(matches!(err, Err(Error::NoConvergence { .. })));
    }
}
