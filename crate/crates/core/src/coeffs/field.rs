use serde::Serialize;

use super::expr::Expr;
use crate::error::{Error, Result};

/// Default relative tolerance for structural symmetry checks.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// An (omega, L)-periodic scalar field sampled on a uniform space-time grid.
///
/// Row `j` holds the samples at `t_j = j*omega/nt`, column `k` the samples at
/// `x_k = k*L/nx`. Indices wrap in both directions.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    omega: f64,
    ell: f64,
    nt: usize,
    nx: usize,
    values: Vec<f64>,
}

impl CoefficientField {
    pub fn from_values(omega: f64, ell: f64, nt: usize, nx: usize, values: Vec<f64>) -> Result<Self> {
        check_grid(omega, ell, nt, nx)?;
        if values.len() != nt * nx {
            return Err(Error::Invalid(format!(
                "expected {} samples, got {}",
                nt * nx,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Eval {
                t: (i / nx) as f64 * omega / nt as f64,
                x: (i % nx) as f64 * ell / nx as f64,
                value: values[i],
            });
        }
        Ok(Self { omega, ell, nt, nx, values })
    }

    pub fn from_fn(
        omega: f64,
        ell: f64,
        nt: usize,
        nx: usize,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        check_grid(omega, ell, nt, nx)?;
        let mut values = Vec::with_capacity(nt * nx);
        for j in 0..nt {
            let t = j as f64 * omega / nt as f64;
            for k in 0..nx {
                let x = k as f64 * ell / nx as f64;
                let v = f(t, x);
                if !v.is_finite() {
                    return Err(Error::Eval { t, x, value: v });
                }
                values.push(v);
            }
        }
        Ok(Self { omega, ell, nt, nx, values })
    }

    /// Parses `expr` and samples it at every grid node.
    pub fn build(expr: &str, omega: f64, ell: f64, nt: usize, nx: usize) -> Result<Self> {
        let e = Expr::parse(expr)?;
        Self::from_expr(&e, omega, ell, nt, nx)
    }

    pub fn from_expr(e: &Expr, omega: f64, ell: f64, nt: usize, nx: usize) -> Result<Self> {
        Self::from_fn(omega, ell, nt, nx, |t, x| e.eval(t, x))
    }

    pub fn constant(c: f64, omega: f64, ell: f64, nt: usize, nx: usize) -> Result<Self> {
        Self::from_fn(omega, ell, nt, nx, |_, _| c)
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
    pub fn dt(&self) -> f64 {
        self.omega / self.nt as f64
    }
    pub fn dx(&self) -> f64 {
        self.ell / self.nx as f64
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Samples of time row `j` (wrapped).
    pub fn row(&self, j: usize) -> &[f64] {
        let j = j % self.nt;
        &self.values[j * self.nx..(j + 1) * self.nx]
    }

    /// Value at node `(j, k)` with periodic wrapping of both indices.
    pub fn at(&self, j: isize, k: isize) -> f64 {
        let j = j.rem_euclid(self.nt as isize) as usize;
        let k = k.rem_euclid(self.nx as isize) as usize;
        self.values[j * self.nx + k]
    }

    /// Bilinear periodic interpolation; exact at grid nodes.
    pub fn sample(&self, t: f64, x: f64) -> f64 {
        let (j0, j1, wt) = bracket(t / self.dt(), self.nt);
        let (k0, k1, wx) = bracket(x / self.dx(), self.nx);
        let v = |j: usize, k: usize| self.values[j * self.nx + k];
        let a = v(j0, k0) * (1.0 - wx) + v(j0, k1) * wx;
        let b = v(j1, k0) * (1.0 - wx) + v(j1, k1) * wx;
        a * (1.0 - wt) + b * wt
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.nt == other.nt
            && self.nx == other.nx
            && (self.omega - other.omega).abs() <= 1e-12 * self.omega
            && (self.ell - other.ell).abs() <= 1e-12 * self.ell
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { values: self.values.iter().map(|&v| f(v)).collect(), ..self.clone() }
    }

    /// Pointwise combination; panics if the grids differ.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert!(self.same_grid(other), "fields live on different grids");
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self { values, ..self.clone() }
    }

    /// `x -> -x` using periodic indexing.
    pub fn reflect_x(&self) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for j in 0..self.nt {
            for k in 0..self.nx {
                values.push(self.values[j * self.nx + (self.nx - k) % self.nx]);
            }
        }
        Self { values, ..self.clone() }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Space-time average. The plain node average is the periodic trapezoid
    /// rule, exact for trigonometric polynomials below the Nyquist limit.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Spatial average of each time row.
    pub fn row_means(&self) -> Vec<f64> {
        (0..self.nt).map(|j| self.row(j).iter().sum::<f64>() / self.nx as f64).collect()
    }

    pub fn row_min(&self, j: usize) -> f64 {
        self.row(j).iter().copied().fold(f64::INFINITY, f64::min)
    }
    pub fn row_max(&self, j: usize) -> f64 {
        self.row(j).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn symmetry(&self) -> SymmetryReport {
        self.symmetry_with_tol(SYMMETRY_TOL)
    }

    pub fn symmetry_with_tol(&self, rel_tol: f64) -> SymmetryReport {
        let tol = rel_tol * self.max_abs();
        let (nt, nx) = (self.nt, self.nx);
        let v = |j: usize, k: usize| self.values[j * nx + k];
        let mut even_x = 0.0f64;
        let mut odd_x = 0.0f64;
        let mut even_t = 0.0f64;
        let mut x_dep = 0.0f64;
        let mut t_dep = 0.0f64;
        for j in 0..nt {
            for k in 0..nx {
                let here = v(j, k);
                let mirror = v(j, (nx - k) % nx);
                even_x = even_x.max((here - mirror).abs());
                odd_x = odd_x.max((here + mirror).abs());
                even_t = even_t.max((here - v((nt - j) % nt, k)).abs());
                x_dep = x_dep.max((here - v(j, 0)).abs());
                t_dep = t_dep.max((here - v(0, k)).abs());
            }
        }
        let check = |d: f64| SymmetryCheck { holds: d <= tol, deviation: d };
        SymmetryReport {
            even_in_x: check(even_x),
            odd_in_x: check(odd_x),
            even_in_t: check(even_t),
            x_independent: check(x_dep),
            t_independent: check(t_dep),
        }
    }
}

fn check_grid(omega: f64, ell: f64, nt: usize, nx: usize) -> Result<()> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::Invalid(format!("time period must be positive, got {omega}")));
    }
    if !(ell > 0.0 && ell.is_finite()) {
        return Err(Error::Invalid(format!("space period must be positive, got {ell}")));
    }
    if nt < 2 || nx < 2 {
        return Err(Error::Invalid(format!("need at least 2 samples per period, got nt={nt}, nx={nx}")));
    }
    Ok(())
}

fn bracket(s: f64, n: usize) -> (usize, usize, f64) {
    let fl = s.floor();
    let w = s - fl;
    let i0 = (fl as i64).rem_euclid(n as i64) as usize;
    (i0, (i0 + 1) % n, w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetryCheck {
    pub holds: bool,
    pub deviation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub even_in_x: SymmetryCheck,
    pub odd_in_x: SymmetryCheck,
    pub even_in_t: SymmetryCheck,
    pub x_independent: SymmetryCheck,
    pub t_independent: SymmetryCheck,
}

/// Mean of the field together with its symmetry flags.
pub fn mean_and_symmetry(f: &CoefficientField) -> (f64, SymmetryReport) {
    (f.mean(), f.symmetry())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_expression() {
        let f = CoefficientField::build("1", 1.0, 1.0, 4, 4).unwrap();
        assert!(f.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn time_sine_peak() {
        let f = CoefficientField::build("1 + 0.5*sin(2*pi*t)", 1.0, 1.0, 64, 2).unwrap();
        assert!((f.at(16, 0) - 1.5).abs() < 1e-15);
        assert!((f.sample(0.25, 0.3) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn cosine_mean_vanishes() {
        let f = CoefficientField::build("cos(2*pi*x)", 1.0, 1.0, 2, 64).unwrap();
        assert!(f.mean().abs() < 1e-15);
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(CoefficientField::build("1/x", 1.0, 1.0, 4, 4), Err(Error::Eval { .. })));
        assert!(matches!(CoefficientField::build("1 +", 1.0, 1.0, 4, 4), Err(Error::Parse { .. })));
        assert!(CoefficientField::build("1", 0.0, 1.0, 4, 4).is_err());
        assert!(CoefficientField::build("1", 1.0, 1.0, 1, 4).is_err());
    }

    #[test]
    fn periodic_indexing() {
        let f = CoefficientField::build("t + 10*x", 1.0, 1.0, 4, 5).unwrap();
        assert_eq!(f.at(5, 7), f.at(1, 2));
        assert_eq!(f.at(-1, -1), f.at(3, 4));
    }

    #[test]
    fn reflections() {
        let c = CoefficientField::build("2.5", 1.0, 1.0, 3, 8).unwrap();
        assert_eq!(c.reflect_x(), c);
        let even = CoefficientField::build("cos(2*pi*x)", 1.0, 1.0, 3, 16).unwrap();
        for (a, b) in even.reflect_x().values().iter().zip(even.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        let odd = CoefficientField::build("sin(2*pi*x)", 1.0, 1.0, 3, 16).unwrap();
        for (a, b) in odd.reflect_x().values().iter().zip(odd.values()) {
            assert!((a + b).abs() < 1e-14);
        }
    }

    #[test]
    fn symmetry_reports() {
        let c = CoefficientField::build("3", 1.0, 1.0, 8, 8).unwrap();
        let (m, s) = mean_and_symmetry(&c);
        assert_eq!(m, 3.0);
        assert!(s.even_in_x.holds && s.even_in_t.holds && s.x_independent.holds && s.t_independent.holds);

        let f = CoefficientField::build("1 + 0.5*sin(2*pi*t)", 1.0, 1.0, 32, 8).unwrap();
        let (m, s) = mean_and_symmetry(&f);
        assert!((m - 1.0).abs() < 1e-15);
        assert!(s.even_in_x.holds);
        assert!(!s.even_in_t.holds);
        assert!((s.even_in_t.deviation - 1.0).abs() < 1e-12);

        let g = CoefficientField::build("cos(2*pi*x)", 1.0, 1.0, 4, 32).unwrap();
        let (m, s) = mean_and_symmetry(&g);
        assert!(m.abs() < 1e-15);
        assert!(s.even_in_x.holds && !s.odd_in_x.holds);
    }

    proptest! {
        #[test]
        fn reflect_twice_is_identity(nt in 2usize..9, nx in 2usize..17, a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let f = CoefficientField::from_fn(1.3, 2.1, nt, nx, |t, x| a * (x * 3.0).sin() + b * t * x).unwrap();
            prop_assert_eq!(f.reflect_x().reflect_x(), f.clone());
            // node average is a permutation-invariant sum
            prop_assert!((f.reflect_x().mean() - f.mean()).abs() <= 1e-15 * (1.0 + f.max_abs()));
        }

        #[test]
        fn fourier_modes_average_to_zero(n in 3usize..64, k_sel in 0usize..1000, use_sin: bool, in_time: bool) {
            let k = 1 + k_sel % ((n - 1) / 2);
            let (omega, ell) = (1.7, 2.3);
            let (nt, nx) = if in_time { (n, 2) } else { (2, n) };
            let f = CoefficientField::from_fn(omega, ell, nt, nx, |t, x| {
                let arg = if in_time { 2.0 * std::f64::consts::PI * k as f64 * t / omega }
                          else { 2.0 * std::f64::consts::PI * k as f64 * x / ell };
                if use_sin { arg.sin() } else { arg.cos() }
            }).unwrap();
            prop_assert!(f.mean().abs() < 1e-13);
        }
    }
}
