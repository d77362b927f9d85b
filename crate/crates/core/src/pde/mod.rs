//! Finite-difference time stepping.
//!
//! One step of `u_t = d u_xx - g u_x + h u` over `dt` is split into an exact
//! multiplication by `exp(dt*h)` followed by a backward-Euler solve of the
//! transport part with upwinded advection. The transport matrix is an
//! M-matrix with unit row sums, so the step is positivity preserving,
//! leaves constants untouched, and a constant shift of `h` multiplies the
//! period map by exactly `exp(shift*omega)`.

pub(crate) mod cell;
mod line;
mod tridiag;

pub use cell::{period_map, CellState, LinearCellProblem};
pub use line::{evolve_system, Form, LineModel, LineState};
pub use tridiag::{Factored, Tridiag};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    /// Zero normal derivative at both ends (mirror ghost nodes).
    Neumann,
}

/// Fills `m` with `I - dt*(d D2 - g D1)` where `D1` is upwinded.
pub fn assemble_transport(
    m: &mut Tridiag,
    d: impl Fn(usize) -> f64,
    g: impl Fn(usize) -> f64,
    dt: f64,
    dx: f64,
    boundary: Boundary,
) -> Result<()> {
    let n = m.len();
    let inv_dx2 = dt / (dx * dx);
    let inv_dx = dt / dx;
    for k in 0..n {
        let dk = d(k);
        if !(dk > 0.0) {
            return Err(Error::NonElliptic { j: 0, k, value: dk });
        }
        let gk = g(k);
        let a = dk * inv_dx2;
        let gp = gk.max(0.0) * inv_dx;
        let gm = (-gk).max(0.0) * inv_dx;
        m.lower[k] = -(a + gp);
        m.upper[k] = -(a + gm);
        m.diag[k] = 1.0 + 2.0 * a + gp + gm;
    }
    if boundary == Boundary::Neumann && n >= 2 {
        // ghost u[-1] = u[1], u[n] = u[n-2]
        m.upper[0] += m.lower[0];
        m.lower[0] = 0.0;
        m.lower[n - 1] += m.upper[n - 1];
        m.upper[n - 1] = 0.0;
    }
    Ok(())
}

/// One split step of the scalar linear equation on `u` (in place).
///
/// `d`, `g`, `h` are the coefficient samples at the nodes for this step.
#[allow(clippy::too_many_arguments)]
pub fn step_scalar_linear(
    u: &mut [f64],
    d: &[f64],
    g: &[f64],
    h: &[f64],
    dt: f64,
    dx: f64,
    boundary: Boundary,
    work: &mut Tridiag,
) -> Result<()> {
    if !(dt > 0.0) {
        return Err(Error::Invalid(format!("time step must be positive, got {dt}")));
    }
    for (ui, hi) in u.iter_mut().zip(h) {
        *ui *= (dt * hi).exp();
    }
    solve_transport(u, d, g, dt, dx, boundary, work)
}

/// Backward-Euler transport solve only.
pub fn solve_transport(
    u: &mut [f64],
    d: &[f64],
    g: &[f64],
    dt: f64,
    dx: f64,
    boundary: Boundary,
    work: &mut Tridiag,
) -> Result<()> {
    if work.len() != u.len() {
        *work = Tridiag::with_len(u.len());
    }
    assemble_transport(work, |k| d[k], |k| g[k], dt, dx, boundary)?;
    match boundary {
        Boundary::Periodic => work.solve_cyclic(u),
        Boundary::Neumann => work.solve(u),
    }
}
