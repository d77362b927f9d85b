//! Linear periodic problems on one period cell `[0, L)`.

use super::tridiag::{Factored, Tridiag};
use super::{assemble_transport, Boundary};
use crate::coeffs::CoefficientField;
use crate::error::{Error, Result};

/// Node values on the periodic cell at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub t: f64,
    pub values: Vec<f64>,
}

impl CellState {
    pub fn new(t: f64, values: Vec<f64>) -> Self {
        Self { t, values }
    }

    pub fn constant(t: f64, value: f64, nx: usize) -> Self {
        Self { t, values: vec![value; nx] }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `u_t = d u_xx - g u_x + h u` on the periodic cell, with step `n` of a
/// period using coefficient row `n` (optionally split into `substeps`).
///
/// The potential is stored shifted by `shift`, so the realized period map
/// equals the true one times `exp(-shift*omega)`. Eigenvalue solvers use
/// this to keep iterates bounded.
#[derive(Debug, Clone)]
pub struct LinearCellProblem {
    omega: f64,
    ell: f64,
    nt: usize,
    nx: usize,
    substeps: usize,
    shift: f64,
    growth: Vec<f64>,
    solvers: Vec<Factored>,
}

pub(crate) fn check_grids(fields: &[&CoefficientField]) -> Result<()> {
    let first = fields[0];
    for f in &fields[1..] {
        if !first.same_grid(f) {
            return Err(Error::Invalid("coefficient fields live on different grids".into()));
        }
    }
    Ok(())
}

pub(crate) fn check_elliptic(d: &CoefficientField) -> Result<()> {
    for j in 0..d.nt() {
        for (k, &v) in d.row(j).iter().enumerate() {
            if !(v > 0.0) {
                return Err(Error::NonElliptic { j, k, value: v });
            }
        }
    }
    Ok(())
}

impl LinearCellProblem {
    pub fn new(d: &CoefficientField, g: &CoefficientField, h: &CoefficientField) -> Result<Self> {
        Self::with_options(d, g, h, 1, 0.0)
    }

    /// Tilted operator for `v = exp(-mu x) psi`: drift `2 mu d + g`,
    /// potential `d mu^2 + g mu + m`.
    pub fn tilted(d: &CoefficientField, g: &CoefficientField, m: &CoefficientField, mu: f64) -> Result<Self> {
        let (drift, pot) = tilt(d, g, m, mu)?;
        Self::new(d, &drift, &pot)
    }

    pub fn with_options(
        d: &CoefficientField,
        g: &CoefficientField,
        h: &CoefficientField,
        substeps: usize,
        shift: f64,
    ) -> Result<Self> {
        check_grids(&[d, g, h])?;
        check_elliptic(d)?;
        if substeps == 0 {
            return Err(Error::Invalid("substeps must be at least 1".into()));
        }
        let (nt, nx) = (d.nt(), d.nx());
        if nx < 3 {
            return Err(Error::Invalid(format!("periodic cell needs nx >= 3, got {nx}")));
        }
        let dt = d.dt() / substeps as f64;
        let dx = d.dx();
        let mut growth = Vec::with_capacity(nt * nx);
        let mut solvers = Vec::with_capacity(nt);
        let mut m = Tridiag::with_len(nx);
        for j in 0..nt {
            let (dr, gr, hr) = (d.row(j), g.row(j), h.row(j));
            growth.extend(hr.iter().map(|&v| (dt * (v - shift)).exp()));
            assemble_transport(&mut m, |k| dr[k], |k| gr[k], dt, dx, Boundary::Periodic)?;
            solvers.push(Factored::new(&m, true)?);
        }
        Ok(Self { omega: d.omega(), ell: d.ell(), nt, nx, substeps, shift, growth, solvers })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Time step of a single (sub)step.
    pub fn dt(&self) -> f64 {
        self.omega / (self.nt * self.substeps) as f64
    }

    /// Advances `u` across row interval `j` (all its substeps).
    pub fn advance_row(&self, j: usize, u: &mut [f64]) {
        let j = j % self.nt;
        let g = &self.growth[j * self.nx..(j + 1) * self.nx];
        for _ in 0..self.substeps {
            for (ui, gi) in u.iter_mut().zip(g) {
                *ui *= gi;
            }
            self.solvers[j].solve(u);
        }
    }

    /// Per-node growth factors `exp(dt*(h - shift))` of row `j`.
    pub fn growth(&self, j: usize) -> &[f64] {
        let j = j % self.nt;
        &self.growth[j * self.nx..(j + 1) * self.nx]
    }

    /// Implicit transport solve alone for row `j` (one substep).
    pub fn transport(&self, j: usize, u: &mut [f64]) {
        self.solvers[j % self.nt].solve(u);
    }

    /// Applies the (shifted) period map in place.
    pub fn apply_period(&self, u: &mut [f64]) {
        for j in 0..self.nt {
            self.advance_row(j, u);
        }
    }

    /// States at `t_0, ..., t_{nt-1}` and the state at `omega`.
    pub fn trajectory(&self, u0: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut snaps = Vec::with_capacity(self.nt);
        let mut u = u0.to_vec();
        for j in 0..self.nt {
            snaps.push(u.clone());
            self.advance_row(j, &mut u);
        }
        (snaps, u)
    }
}

pub(crate) fn tilt(
    d: &CoefficientField,
    g: &CoefficientField,
    m: &CoefficientField,
    mu: f64,
) -> Result<(CoefficientField, CoefficientField)> {
    check_grids(&[d, g, m])?;
    let drift = d.zip_with(g, |dv, gv| 2.0 * mu * dv + gv);
    let dg = d.zip_with(g, |dv, gv| dv * mu * mu + gv * mu);
    let pot = dg.zip_with(m, |a, b| a + b);
    Ok((drift, pot))
}

/// One period of the linear problem applied to `u0`.
pub fn period_map(u0: &CellState, problem: &LinearCellProblem) -> Result<CellState> {
    if u0.values.len() != problem.nx() {
        return Err(Error::Invalid(format!(
            "state has {} nodes, problem has {}",
            u0.values.len(),
            problem.nx()
        )));
    }
    let mut u = u0.values.clone();
    problem.apply_period(&mut u);
    if problem.shift() != 0.0 {
        let f = (problem.shift() * problem.omega()).exp();
        u.iter_mut().for_each(|v| *v *= f);
    }
    Ok(CellState::new(u0.t + problem.omega(), u))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(expr: &str, nt: usize, nx: usize) -> CoefficientField {
        CoefficientField::build(expr, 1.0, 1.0, nt, nx).unwrap()
    }

    #[test]
    fn constants_survive_pure_transport() {
        let p = LinearCellProblem::new(&field("1", 8, 16), &field("sin(2*pi*x)", 8, 16), &field("0", 8, 16)).unwrap();
        let out = period_map(&CellState::constant(0.0, 1.0, 16), &p).unwrap();
        assert!(out.values.iter().all(|v| (v - 1.0).abs() < 1e-13));
        assert_eq!(out.t, 1.0);
    }

    #[test]
    fn uniform_mode_grows_by_exp_of_integral() {
        for nt in [4, 50] {
            let p = LinearCellProblem::new(&field("1", nt, 8), &field("0", nt, 8), &field("2", nt, 8)).unwrap();
            let out = period_map(&CellState::constant(0.0, 1.0, 8), &p).unwrap();
            for v in out.values {
                assert!((v / 2f64.exp() - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn period_map_is_linear() {
        let nt = 20;
        let nx = 24;
        let p = LinearCellProblem::new(
            &field("1 + 0.3*cos(2*pi*x)", nt, nx),
            &field("sin(2*pi*(x - t))", nt, nx),
            &field("cos(2*pi*x) + 0.5*sin(2*pi*t)", nt, nx),
        )
        .unwrap();
        let u: Vec<f64> = (0..nx).map(|k| (k as f64 * 0.37).sin()).collect();
        let v: Vec<f64> = (0..nx).map(|k| (k as f64 * 0.11).cos() + 0.2).collect();
        let (a, b) = (1.7, -0.4);
        let comb: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
        let pu = period_map(&CellState::new(0.0, u), &p).unwrap().values;
        let pv = period_map(&CellState::new(0.0, v), &p).unwrap().values;
        let pc = period_map(&CellState::new(0.0, comb), &p).unwrap().values;
        for k in 0..nx {
            assert!((pc[k] - (a * pu[k] + b * pv[k])).abs() < 1e-12);
        }
    }

    #[test]
    fn shift_is_undone_by_period_map() {
        let (d, g, h) = (field("1", 10, 12), field("0.5", 10, 12), field("cos(2*pi*x)", 10, 12));
        let plain = LinearCellProblem::new(&d, &g, &h).unwrap();
        let shifted = LinearCellProblem::with_options(&d, &g, &h, 1, 1.0).unwrap();
        let u0 = CellState::constant(0.0, 1.0, 12);
        let a = period_map(&u0, &plain).unwrap().values;
        let b = period_map(&u0, &shifted).unwrap().values;
        for (x, y) in a.iter().zip(&b) {
            assert!((x / y - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_nonpositive_diffusion_with_location() {
        let d = field("cos(2*pi*x)", 4, 8);
        let err = LinearCellProblem::new(&d, &field("0", 4, 8), &field("0", 4, 8)).unwrap_err();
        assert!(matches!(err, Error::NonElliptic { j: 0, k: 3, .. }));
    }
}
