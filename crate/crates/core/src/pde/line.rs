//! The two-species system on a truncated line `[x_lo, x_hi]` with
//! zero-flux ends.
//!
//! Stepping is always done in the competitive variables `(u1, u2)`: an
//! exact-exponential reaction update per node followed by one implicit
//! transport solve per species. The cooperative variables
//! `v1 = u1, v2 = u2* - u2` are converted at whole coefficient-row times,
//! so both forms are related exactly on the shared time grid.

use std::io::Write;
use std::sync::OnceLock;

use super::tridiag::{Factored, Tridiag};
use super::{assemble_transport, Boundary};
use crate::coeffs::CoefficientField;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::system::SystemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    Competitive,
    Cooperative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineState {
    pub x_lo: f64,
    pub x_hi: f64,
    pub t: f64,
    pub form: Form,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl LineState {
    pub fn len(&self) -> usize {
        self.first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }

    pub fn dx(&self) -> f64 {
        (self.x_hi - self.x_lo) / (self.len() - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_lo + i as f64 * self.dx()
    }

    /// CSV with a header `t,x,u1,u2` (or `v1,v2`), one row per node.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let (a, b) = match self.form {
            Form::Competitive => ("u1", "u2"),
            Form::Cooperative => ("v1", "v2"),
        };
        writeln!(w, "t,x,{a},{b}")?;
        for i in 0..self.len() {
            writeln!(w, "{},{},{},{}", self.t, self.x(i), self.first[i], self.second[i])?;
        }
        Ok(())
    }
}

/// Where a line node falls in the periodic coefficient cell.
#[derive(Debug, Clone, Copy)]
struct Tap {
    k0: usize,
    k1: usize,
    w: f64,
}

/// A system bound to a truncated-line grid.
#[derive(Debug, Clone)]
pub struct LineModel {
    sys: SystemSpec,
    u2_star: Option<CoefficientField>,
    x_lo: f64,
    x_hi: f64,
    taps: Vec<Tap>,
    substeps: usize,
    bound: f64,
    exec: Exec,
    cache: OnceLock<Option<Vec<RowData>>>,
}

const CHUNK: usize = 2048;

impl LineModel {
    /// `n_cells` intervals on `[x_lo, x_hi]`.
    pub fn new(sys: &SystemSpec, x_lo: f64, x_hi: f64, n_cells: usize) -> Result<Self> {
        if !(x_hi > x_lo) || n_cells < 2 {
            return Err(Error::Invalid(format!(
                "line needs x_lo < x_hi and at least 2 cells, got [{x_lo}, {x_hi}] with {n_cells}"
            )));
        }
        let ell = sys.ell();
        let nx = sys.nx();
        let dx = (x_hi - x_lo) / n_cells as f64;
        let taps = (0..=n_cells)
            .map(|i| {
                let x = x_lo + i as f64 * dx;
                let s = (x / ell).rem_euclid(1.0) * nx as f64;
                let mut k0 = s.floor() as usize;
                let mut w = s - k0 as f64;
                if w < 1e-9 {
                    w = 0.0;
                } else if w > 1.0 - 1e-9 {
                    w = 0.0;
                    k0 += 1;
                }
                k0 %= nx;
                Tap { k0, k1: (k0 + 1) % nx, w }
            })
            .collect();
        Ok(Self {
            sys: sys.clone(),
            u2_star: None,
            x_lo,
            x_hi,
            taps,
            substeps: 1,
            bound: sys.blowup_bound(),
            exec: Exec::default(),
            cache: OnceLock::new(),
        })
    }

    /// Grid whose spacing equals the coefficient cell spacing `L/nx`, so
    /// every line node sits on a cell node.
    pub fn aligned(sys: &SystemSpec, x_lo: f64, x_hi: f64) -> Result<Self> {
        let dx = sys.ell() / sys.nx() as f64;
        let n = ((x_hi - x_lo) / dx).round() as usize;
        Self::new(sys, x_lo, x_lo + n as f64 * dx, n)
    }

    /// Supplies `u2*` over one period (same grid as the system), needed
    /// for the cooperative form.
    pub fn with_u2_star(mut self, u2_star: CoefficientField) -> Result<Self> {
        if !u2_star.same_grid(&self.sys.d1) {
            return Err(Error::Invalid("u2* must live on the coefficient grid".into()));
        }
        self.u2_star = Some(u2_star);
        Ok(self)
    }

    pub fn with_substeps(mut self, substeps: usize) -> Self {
        self.substeps = substeps.max(1);
        self.cache = OnceLock::new();
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn system(&self) -> &SystemSpec {
        &self.sys
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn dx(&self) -> f64 {
        (self.x_hi - self.x_lo) / (self.len() - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_lo + i as f64 * self.dx()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i)).collect()
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Duration of one coefficient row.
    pub fn row_dt(&self) -> f64 {
        self.sys.omega() / self.sys.nt() as f64
    }

    /// Samples row `j` of a cell field at every line node.
    pub fn sample_row(&self, f: &CoefficientField, j: usize, out: &mut [f64]) {
        let row = f.row(j);
        for (o, tap) in out.iter_mut().zip(&self.taps) {
            *o = if tap.w == 0.0 {
                row[tap.k0]
            } else {
                (1.0 - tap.w) * row[tap.k0] + tap.w * row[tap.k1]
            };
        }
    }

    /// Samples a cell field at time row `j` on the line.
    pub fn sample(&self, f: &CoefficientField, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.sample_row(f, j, &mut out);
        out
    }

    pub fn zero_state(&self, t: f64, form: Form) -> LineState {
        LineState {
            x_lo: self.x_lo,
            x_hi: self.x_hi,
            t,
            form,
            first: vec![0.0; self.len()],
            second: vec![0.0; self.len()],
        }
    }

    fn row_index(&self, t: f64) -> Result<usize> {
        let r = t / self.row_dt();
        let ri = r.round();
        if (r - ri).abs() > 1e-6 {
            return Err(Error::Invalid(format!("time {t} is not on the coefficient time grid")));
        }
        Ok((ri as i64).rem_euclid(self.sys.nt() as i64) as usize)
    }

    fn u2_star_row(&self, j: usize) -> Result<Vec<f64>> {
        let f = self
            .u2_star
            .as_ref()
            .ok_or_else(|| Error::Invalid("cooperative form needs u2*".into()))?;
        Ok(self.sample(f, j))
    }

    /// Converts the state to `form` in place (at a grid time).
    pub fn convert(&self, state: &mut LineState, form: Form) -> Result<()> {
        if state.form == form {
            return Ok(());
        }
        let star = self.u2_star_row(self.row_index(state.t)?)?;
        for (v, s) in state.second.iter_mut().zip(&star) {
            *v = s - *v;
        }
        state.form = form;
        Ok(())
    }

    /// Evolves `state` to `t1` in its own form.
    pub fn evolve(&self, state: &mut LineState, t1: f64) -> Result<()> {
        if state.len() != self.len() || state.second.len() != self.len() {
            return Err(Error::Invalid("state does not match the line grid".into()));
        }
        let steps = (t1 - state.t) / self.row_dt();
        let n = steps.round();
        if !(n >= 1.0) || (steps - n).abs() > 1e-6 {
            return Err(Error::Invalid(format!(
                "evolution from {} to {t1} is not a positive whole number of steps",
                state.t
            )));
        }
        let form = state.form;
        self.convert(state, Form::Competitive)?;
        let j0 = self.row_index(state.t)?;
        let t0 = state.t;
        for s in 0..n as usize {
            let j = (j0 + s) % self.sys.nt();
            self.advance_row(j, &mut state.first, &mut state.second)?;
            let t = t0 + (s + 1) as f64 * self.row_dt();
            let peak = state
                .first
                .iter()
                .chain(&state.second)
                .fold(0.0f64, |m, &v| if v.is_finite() { m.max(v.abs()) } else { f64::INFINITY });
            if peak > self.bound {
                state.t = t;
                return Err(Error::Blowup { bound: self.bound, value: peak, t });
            }
        }
        state.t = t0 + n * self.row_dt();
        self.convert(state, form)
    }

    /// Reaction coefficients and factored transport matrices of row `j`.
    fn build_row(&self, j: usize) -> Result<RowData> {
        let s = &self.sys;
        let n = self.len();
        let dt = self.row_dt() / self.substeps as f64;
        let dx = self.dx();
        let (d1, d2, g1, g2) = (self.sample(&s.d1, j), self.sample(&s.d2, j), self.sample(&s.g1, j), self.sample(&s.g2, j));
        let mut t = Tridiag::with_len(n);
        assemble_transport(&mut t, |k| d1[k], |k| g1[k], dt, dx, Boundary::Neumann)?;
        let m1 = Factored::new(&t, false)?;
        assemble_transport(&mut t, |k| d2[k], |k| g2[k], dt, dx, Boundary::Neumann)?;
        let m2 = Factored::new(&t, false)?;
        Ok(RowData {
            b1: self.sample(&s.b1, j),
            b2: self.sample(&s.b2, j),
            a11: self.sample(&s.a11, j),
            a12: self.sample(&s.a12, j),
            a21: self.sample(&s.a21, j),
            a22: self.sample(&s.a22, j),
            m1,
            m2,
        })
    }

    /// Rows kept in memory when the data is small enough; a single row
    /// when nothing depends on time.
    fn cached_rows(&self) -> Result<Option<&[RowData]>> {
        if let Some(rows) = self.cache.get() {
            return Ok(rows.as_deref());
        }
        let s = &self.sys;
        let steady = s.all().iter().all(|f| f.symmetry().t_independent.holds);
        let count = if steady { 1 } else { s.nt() };
        let rows = if count * self.len() * ROW_FLOATS <= CACHE_FLOATS {
            Some((0..count).map(|j| self.build_row(j)).collect::<Result<Vec<_>>>()?)
        } else {
            None
        };
        Ok(self.cache.get_or_init(|| rows).as_deref())
    }

    fn advance_row(&self, j: usize, u1: &mut [f64], u2: &mut [f64]) -> Result<()> {
        let owned;
        let r = match self.cached_rows()? {
            Some(rows) => &rows[j % rows.len()],
            None => {
                owned = self.build_row(j)?;
                &owned
            }
        };
        let dt = self.row_dt() / self.substeps as f64;
        for _ in 0..self.substeps {
            self.exec.for_each_chunk_pair(u1, u2, CHUNK, |start, c1, c2| {
                for (i, (x, y)) in c1.iter_mut().zip(c2.iter_mut()).enumerate() {
                    let k = start + i;
                    let (p, q) = (*x, *y);
                    *x = p * (dt * (r.b1[k] - r.a11[k] * p - r.a12[k] * q)).exp();
                    *y = q * (dt * (r.b2[k] - r.a21[k] * p - r.a22[k] * q)).exp();
                }
            });
            r.m1.solve(u1);
            r.m2.solve(u2);
        }
        Ok(())
    }
}

/// Floats held per node by one cached row.
const ROW_FLOATS: usize = 12;
const CACHE_FLOATS: usize = 1 << 23;

#[derive(Debug, Clone)]
struct RowData {
    b1: Vec<f64>,
    b2: Vec<f64>,
    a11: Vec<f64>,
    a12: Vec<f64>,
    a21: Vec<f64>,
    a22: Vec<f64>,
    m1: Factored,
    m2: Factored,
}

/// Free-function form of [`LineModel::evolve`].
pub fn evolve_system(state: &LineState, model: &LineModel, form: Form, t1: f64) -> Result<LineState> {
    let mut s = state.clone();
    model.convert(&mut s, form)?;
    model.evolve(&mut s, t1)?;
    Ok(s)
}
