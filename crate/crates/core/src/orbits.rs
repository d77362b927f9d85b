//! Time-space periodic solutions of the scalar logistic equation
//! `u_t = d u_xx - g u_x + u (c - e u)`.

use std::io::Write;

use crate::coeffs::CoefficientField;
use crate::eigen::principal_eigen;
use crate::error::{Error, Result};
use crate::pde::cell::check_grids;
use crate::pde::LinearCellProblem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitOptions {
    /// Period-to-period sup change that counts as converged.
    pub tol: f64,
    pub max_periods: usize,
    /// Multiplier on the supersolution level `max c / min e` for the start.
    pub start_scale: f64,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_periods: 2000, start_scale: 1.0 }
    }
}

/// Fraction of nodes on which `e` must be bounded away from zero.
pub const MIN_E_COVERAGE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    /// `nt` rows of `nx` values, row `j` at time `j*omega/nt`.
    pub snapshots: Vec<Vec<f64>>,
    pub residual: f64,
    pub extinct: bool,
    /// Periods marched before the cycle closed.
    pub periods: usize,
    omega: f64,
    ell: f64,
}

impl PeriodicOrbit {
    pub fn nt(&self) -> usize {
        self.snapshots.len()
    }

    pub fn nx(&self) -> usize {
        self.snapshots.first().map_or(0, Vec::len)
    }

    pub fn min_value(&self) -> f64 {
        self.snapshots.iter().flatten().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max_value(&self) -> f64 {
        self.snapshots.iter().flatten().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    /// The orbit as a coefficient field on its grid.
    pub fn as_field(&self) -> CoefficientField {
        let values = self.snapshots.concat();
        CoefficientField::from_values(self.omega, self.ell, self.nt(), self.nx(), values)
            .expect("orbit values are finite")
    }

    /// Builds an orbit from explicit snapshots (no certification).
    pub fn from_snapshots(snapshots: Vec<Vec<f64>>, omega: f64, ell: f64) -> Self {
        let extinct = snapshots.iter().flatten().all(|&v| v == 0.0);
        Self { snapshots, residual: 0.0, extinct, periods: 0, omega, ell }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,x,u_star")?;
        let (dt, dx) = (self.omega / self.nt() as f64, self.ell / self.nx() as f64);
        for (j, row) in self.snapshots.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                writeln!(w, "{},{},{}", j as f64 * dt, k as f64 * dx, v)?;
            }
        }
        Ok(())
    }
}

struct Logistic<'a> {
    transport: LinearCellProblem,
    c: &'a CoefficientField,
    e: &'a CoefficientField,
    dt: f64,
}

impl<'a> Logistic<'a> {
    fn new(d: &CoefficientField, g: &CoefficientField, c: &'a CoefficientField, e: &'a CoefficientField) -> Result<Self> {
        check_grids(&[d, g, c, e])?;
        let zero = c.map(|_| 0.0);
        let transport = LinearCellProblem::new(d, g, &zero)?;
        Ok(Self { dt: transport.dt(), transport, c, e })
    }

    fn step(&self, j: usize, u: &mut [f64]) {
        let (c, e) = (self.c.row(j), self.e.row(j));
        for ((ui, ci), ei) in u.iter_mut().zip(c).zip(e) {
            *ui *= (self.dt * (ci - ei * *ui)).exp();
        }
        self.transport.transport(j, u);
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// The positive periodic orbit, or the zero orbit when `lambda(d, g, c) <= 0`.
pub fn logistic_orbit(
    d: &CoefficientField,
    g: &CoefficientField,
    c: &CoefficientField,
    e: &CoefficientField,
) -> Result<PeriodicOrbit> {
    logistic_orbit_with(d, g, c, e, &OrbitOptions::default())
}

pub fn logistic_orbit_with(
    d: &CoefficientField,
    g: &CoefficientField,
    c: &CoefficientField,
    e: &CoefficientField,
    opts: &OrbitOptions,
) -> Result<PeriodicOrbit> {
    let sys = Logistic::new(d, g, c, e)?;
    if e.min() < 0.0 {
        return Err(Error::Invalid(format!("self-limitation must be nonnegative (min {})", e.min())));
    }
    let eps = 1e-12 * e.max_abs();
    let positive: Vec<f64> = e.values().iter().copied().filter(|&v| v > eps).collect();
    if (positive.len() as f64) < MIN_E_COVERAGE * e.values().len() as f64 {
        return Err(Error::Invalid(format!(
            "self-limitation is positive on only {} of {} nodes",
            positive.len(),
            e.values().len()
        )));
    }
    let (nt, nx) = (c.nt(), c.nx());
    let (omega, ell) = (c.omega(), c.ell());

    let lambda = principal_eigen(d, g, c)?.lambda;
    if lambda <= 0.0 {
        return Ok(PeriodicOrbit {
            snapshots: vec![vec![0.0; nx]; nt],
            residual: 0.0,
            extinct: true,
            periods: 0,
            omega,
            ell,
        });
    }

    let e_min = positive.iter().copied().fold(f64::INFINITY, f64::min);
    let start = opts.start_scale * c.max().max(0.0) / e_min;
    let mut u = vec![start; nx];
    let mut prev = u.clone();
    let mut change = f64::INFINITY;
    for period in 1..=opts.max_periods {
        prev.copy_from_slice(&u);
        for j in 0..nt {
            sys.step(j, &mut u);
        }
        change = sup_diff(&u, &prev);
        if !change.is_finite() {
            break;
        }
        if change < opts.tol {
            let mut snapshots = Vec::with_capacity(nt);
            let mut w = u.clone();
            for j in 0..nt {
                snapshots.push(w.clone());
                sys.step(j, &mut w);
            }
            let mut orbit = PeriodicOrbit { snapshots, residual: 0.0, extinct: false, periods: period, omega, ell };
            orbit.residual = residual_of(&sys, &orbit);
            return Ok(orbit);
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_periods, last_change: change })
}

fn residual_of(sys: &Logistic<'_>, orbit: &PeriodicOrbit) -> f64 {
    let nt = orbit.nt();
    let mut worst = 0.0f64;
    let mut w = vec![0.0; orbit.nx()];
    for j in 0..nt - 1 {
        w.copy_from_slice(&orbit.snapshots[j]);
        sys.step(j, &mut w);
        worst = worst.max(sup_diff(&w, &orbit.snapshots[j + 1]) / sys.dt);
    }
    w.copy_from_slice(&orbit.snapshots[nt - 1]);
    sys.step(nt - 1, &mut w);
    worst + sup_diff(&w, &orbit.snapshots[0])
}

/// Largest per-unit-time mismatch between one scheme step and the next
/// snapshot, plus the gap closing the period.
pub fn orbit_residual(
    orbit: &PeriodicOrbit,
    d: &CoefficientField,
    g: &CoefficientField,
    c: &CoefficientField,
    e: &CoefficientField,
) -> Result<f64> {
    if orbit.extinct {
        return Err(Error::Invalid("residual is only defined for a positive orbit".into()));
    }
    let sys = Logistic::new(d, g, c, e)?;
    if orbit.nt() != c.nt() || orbit.nx() != c.nx() {
        return Err(Error::Invalid("orbit and coefficients use different grids".into()));
    }
    Ok(residual_of(&sys, orbit))
}
