//! Principal eigenvalues of periodic parabolic operators by power iteration
//! on the discrete period map.

use std::io::Write;

use serde::Serialize;

use crate::coeffs::CoefficientField;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::pde::cell::tilt;
use crate::pde::LinearCellProblem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Time steps per coefficient row.
    pub substeps: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 10_000, substeps: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub lambda: f64,
    /// `nt` snapshots over one period, scaled so the overall maximum is 1.
    pub eigenfunction: Vec<Vec<f64>>,
    pub iterations: usize,
    /// `|P psi - rho psi|_inf / (rho |psi|_inf)` at the returned vector.
    pub residual: f64,
}

impl EigenResult {
    pub fn min_value(&self) -> f64 {
        self.eigenfunction
            .iter()
            .flatten()
            .fold(f64::INFINITY, |m, &v| m.min(v))
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Power iteration on an already assembled problem. The returned `lambda`
/// accounts for the problem's potential shift.
pub fn power_iteration(problem: &LinearCellProblem, opts: &EigenOptions) -> Result<EigenResult> {
    let nx = problem.nx();
    let omega = problem.omega();
    let mut psi = vec![1.0; nx];
    let mut w = vec![0.0; nx];
    let mut ratios: [f64; 3] = [f64::NAN; 3];
    let mut last_est = f64::NAN;
    let mut last_change = f64::INFINITY;
    for it in 1..=opts.max_iter {
        w.copy_from_slice(&psi);
        problem.apply_period(&mut w);
        let rho = sup(&w);
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::NoConvergence { iterations: it, last_change: rho });
        }
        let residual = psi
            .iter()
            .zip(&w)
            .fold(0.0f64, |m, (p, q)| m.max((q - rho * p).abs()))
            / rho;
        ratios = [ratios[1], ratios[2], rho];
        let est = aitken(&ratios).unwrap_or(rho);
        let change = ((est - last_est) / est).abs();
        last_est = est;
        if change.is_finite() {
            last_change = change;
        }
        for (p, q) in psi.iter_mut().zip(&w) {
            *p = q / rho;
        }
        if residual <= opts.tol && change <= opts.tol {
            let lambda = rho.ln() / omega + problem.shift();
            let eigenfunction = periodic_eigenfunction(problem, &psi, lambda);
            return Ok(EigenResult { lambda, eigenfunction, iterations: it, residual });
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, last_change })
}

fn aitken(r: &[f64; 3]) -> Option<f64> {
    let den = r[2] - 2.0 * r[1] + r[0];
    if !den.is_finite() || den.abs() < 1e-300 {
        return None;
    }
    let est = r[2] - (r[2] - r[1]).powi(2) / den;
    est.is_finite().then_some(est)
}

/// `phi(t_j) = exp(-lambda t_j) U(t_j, 0) psi`, normalized to max 1.
fn periodic_eigenfunction(problem: &LinearCellProblem, psi: &[f64], lambda: f64) -> Vec<Vec<f64>> {
    let (mut snaps, _) = problem.trajectory(psi);
    let row = problem.omega() / problem.nt() as f64;
    for (j, s) in snaps.iter_mut().enumerate() {
        let f = (-(lambda - problem.shift()) * j as f64 * row).exp();
        s.iter_mut().for_each(|v| *v *= f);
    }
    let top = snaps.iter().map(|s| sup(s)).fold(0.0, f64::max);
    for s in &mut snaps {
        s.iter_mut().for_each(|v| *v /= top);
    }
    snaps
}

/// Principal eigenvalue of `-v_t + d v_xx - g v_x + h v = lambda v`.
pub fn principal_eigen(d: &CoefficientField, g: &CoefficientField, h: &CoefficientField) -> Result<EigenResult> {
    principal_eigen_with(d, g, h, &EigenOptions::default())
}

pub fn principal_eigen_with(
    d: &CoefficientField,
    g: &CoefficientField,
    h: &CoefficientField,
    opts: &EigenOptions,
) -> Result<EigenResult> {
    let problem = LinearCellProblem::with_options(d, g, h, opts.substeps, h.max())?;
    power_iteration(&problem, opts)
}

/// Principal eigenvalue of the problem tilted by `exp(-mu x)`.
pub fn lambda_of_mu(d: &CoefficientField, g: &CoefficientField, m: &CoefficientField, mu: f64) -> Result<EigenResult> {
    lambda_of_mu_with(d, g, m, mu, &EigenOptions::default())
}

pub fn lambda_of_mu_with(
    d: &CoefficientField,
    g: &CoefficientField,
    m: &CoefficientField,
    mu: f64,
    opts: &EigenOptions,
) -> Result<EigenResult> {
    let (drift, pot) = tilt(d, g, m, mu)?;
    principal_eigen_with(d, &drift, &pot, opts)
}

/// First-order Richardson extrapolation from a run and one with both grid
/// spacings halved. Returns `(extrapolated, error estimate)`.
pub fn richardson(coarse: f64, fine: f64) -> (f64, f64) {
    (2.0 * fine - coarse, (fine - coarse).abs())
}

/// One row of a lambda-curve table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub mu: f64,
    pub lambda: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Evaluates `lambda(mu)` over `mus`, concurrently when `exec` allows.
pub fn lambda_curve(
    d: &CoefficientField,
    g: &CoefficientField,
    m: &CoefficientField,
    mus: &[f64],
    opts: &EigenOptions,
    exec: Exec,
) -> Result<Vec<CurvePoint>> {
    exec.map(mus, |&mu| {
        lambda_of_mu_with(d, g, m, mu, opts).map(|r| CurvePoint {
            mu,
            lambda: r.lambda,
            residual: r.residual,
            iterations: r.iterations,
        })
    })
    .into_iter()
    .collect()
}

pub fn write_curve_csv<W: Write>(mut w: W, points: &[CurvePoint]) -> std::io::Result<()> {
    writeln!(w, "mu,lambda,residual,iterations")?;
    for p in points {
        writeln!(w, "{},{},{:e},{}", p.mu, p.lambda, p.residual, p.iterations)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub holds: bool,
    pub worst: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub curve: Vec<CurvePoint>,
    /// Smallest second difference (scaled by spacing) must be `>= -tol`.
    pub convexity: Check,
    /// `max |lambda(mu) - lambda(-mu)|` over the positive grid points;
    /// `None` when `d`, `m` are not even or `g` is not odd in `x`.
    pub evenness: Option<Check>,
    /// `min (lambda_m(mu) - lambda_m2(mu))`, present when a second
    /// potential was supplied; must be `>= -tol` when `m >= m2`.
    pub monotonicity: Option<Check>,
    /// `lambda_m(mu) - lambda_m2(mu)` per grid point.
    pub potential_gap: Option<Vec<f64>>,
}

/// Tabulates `lambda(mu)` and checks convexity, evenness (when the symmetry
/// preconditions hold) and ordering against a second potential.
pub fn lambda_diagnostics(
    d: &CoefficientField,
    g: &CoefficientField,
    m: &CoefficientField,
    mu_grid: &[f64],
    other: Option<&CoefficientField>,
    tol: f64,
    exec: Exec,
) -> Result<DiagnosticsReport> {
    if mu_grid.len() < 3 || mu_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Invalid("mu grid must be strictly increasing with at least 3 points".into()));
    }
    let opts = EigenOptions::default();
    let curve = lambda_curve(d, g, m, mu_grid, &opts, exec)?;

    let mut worst = f64::INFINITY;
    for w in curve.windows(3) {
        let (h0, h1) = (w[1].mu - w[0].mu, w[2].mu - w[1].mu);
        // divided second difference scaled back to the uniform-grid form
        let s = 2.0 * ((w[2].lambda - w[1].lambda) / h1 - (w[1].lambda - w[0].lambda) / h0) / (h0 + h1);
        worst = worst.min(s * h0 * h1);
    }
    let convexity = Check { holds: worst >= -tol, worst };

    let symmetric = d.symmetry().even_in_x.holds && m.symmetry().even_in_x.holds && g.symmetry().odd_in_x.holds;
    let evenness = if symmetric {
        let pos: Vec<f64> = mu_grid.iter().copied().filter(|&x| x > 0.0).collect();
        let neg: Vec<f64> = pos.iter().map(|x| -x).collect();
        let left = lambda_curve(d, g, m, &neg, &opts, exec)?;
        let mut dev = 0.0f64;
        for (p, l) in pos.iter().zip(&left) {
            let r = curve.iter().find(|c| c.mu == *p).expect("grid point");
            dev = dev.max((r.lambda - l.lambda).abs());
        }
        Some(Check { holds: dev <= tol, worst: dev })
    } else {
        None
    };

    let (monotonicity, potential_gap) = match other {
        Some(m2) => {
            let c2 = lambda_curve(d, g, m2, mu_grid, &opts, exec)?;
            let gap: Vec<f64> = curve.iter().zip(&c2).map(|(a, b)| a.lambda - b.lambda).collect();
            let dominates = m.zip_with(m2, |a, b| a - b).min() >= 0.0;
            let w = gap.iter().copied().fold(f64::INFINITY, f64::min);
            let check = dominates.then_some(Check { holds: w >= -tol, worst: w });
            (check, Some(gap))
        }
        None => (None, None),
    };

    Ok(DiagnosticsReport { curve, convexity, evenness, monotonicity, potential_gap })
}
