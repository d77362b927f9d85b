//! Tridiagonal and cyclic tridiagonal solves for the implicit transport step.

use crate::error::{Error, Result};

/// Row `k` of the system reads `lower[k]*u[k-1] + diag[k]*u[k] + upper[k]*u[k+1] = rhs[k]`.
/// For the cyclic solver `lower[0]` couples to `u[n-1]` and `upper[n-1]` to `u[0]`.
#[derive(Debug, Clone, Default)]
pub struct Tridiag {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    scratch_c: Vec<f64>,
    scratch_z: Vec<f64>,
}

impl Tridiag {
    pub fn with_len(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
            scratch_c: vec![0.0; n],
            scratch_z: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Thomas algorithm, ignoring the corner entries. Overwrites `rhs`.
    pub fn solve(&mut self, rhs: &mut [f64]) -> Result<()> {
        thomas(&self.lower, &self.diag, &self.upper, rhs, &mut self.scratch_c)
    }

    /// Periodic system via Sherman-Morrison on top of two Thomas solves.
    pub fn solve_cyclic(&mut self, rhs: &mut [f64]) -> Result<()> {
        let n = self.len();
        if n < 3 {
            return Err(Error::SingularSolve(format!("cyclic system needs n >= 3, got {n}")));
        }
        let alpha = self.upper[n - 1]; // couples row n-1 to u[0]
        let beta = self.lower[0]; // couples row 0 to u[n-1]
        let gamma = -self.diag[0];
        let d0 = self.diag[0];
        let dn = self.diag[n - 1];
        self.diag[0] = d0 - gamma;
        self.diag[n - 1] = dn - alpha * beta / gamma;

        let res = (|| {
            thomas(&self.lower, &self.diag, &self.upper, rhs, &mut self.scratch_c)?;
            let z = &mut self.scratch_z;
            z.iter_mut().for_each(|v| *v = 0.0);
            z[0] = gamma;
            z[n - 1] = alpha;
            thomas(&self.lower, &self.diag, &self.upper, z, &mut self.scratch_c)?;
            let num = rhs[0] + beta * rhs[n - 1] / gamma;
            let den = 1.0 + z[0] + beta * z[n - 1] / gamma;
            if den == 0.0 || !den.is_finite() {
                return Err(Error::SingularSolve("Sherman-Morrison denominator vanished".into()));
            }
            let fact = num / den;
            for (r, zi) in rhs.iter_mut().zip(z.iter()) {
                *r -= fact * zi;
            }
            Ok(())
        })();

        self.diag[0] = d0;
        self.diag[n - 1] = dn;
        res
    }
}

/// A tridiagonal (optionally cyclic) matrix with its elimination factors
/// precomputed, so repeated solves need no scratch space.
#[derive(Debug, Clone)]
pub struct Factored {
    lower: Vec<f64>,
    cp: Vec<f64>,
    inv_denom: Vec<f64>,
    corner: Option<Corner>,
}

#[derive(Debug, Clone)]
struct Corner {
    z: Vec<f64>,
    beta_over_gamma: f64,
    den: f64,
}

impl Factored {
    pub fn new(t: &Tridiag, cyclic: bool) -> Result<Self> {
        let n = t.len();
        let mut diag = t.diag.clone();
        let mut sm = None;
        if cyclic {
            if n < 3 {
                return Err(Error::SingularSolve(format!("cyclic system needs n >= 3, got {n}")));
            }
            let alpha = t.upper[n - 1];
            let beta = t.lower[0];
            let gamma = -t.diag[0];
            diag[0] -= gamma;
            diag[n - 1] -= alpha * beta / gamma;
            sm = Some((alpha, beta, gamma));
        }
        let mut cp = vec![0.0; n];
        let mut inv_denom = vec![0.0; n];
        for k in 0..n {
            let denom = if k == 0 { diag[0] } else { diag[k] - t.lower[k] * cp[k - 1] };
            if denom == 0.0 || !denom.is_finite() {
                return Err(Error::SingularSolve(format!("zero pivot in row {k}")));
            }
            inv_denom[k] = 1.0 / denom;
            cp[k] = if k + 1 < n { t.upper[k] * inv_denom[k] } else { 0.0 };
        }
        let mut f = Self { lower: t.lower.clone(), cp, inv_denom, corner: None };
        if let Some((alpha, beta, gamma)) = sm {
            let mut z = vec![0.0; n];
            z[0] = gamma;
            z[n - 1] = alpha;
            f.sweep(&mut z);
            let beta_over_gamma = beta / gamma;
            let den = 1.0 + z[0] + beta_over_gamma * z[n - 1];
            if den == 0.0 || !den.is_finite() {
                return Err(Error::SingularSolve("Sherman-Morrison denominator vanished".into()));
            }
            f.corner = Some(Corner { z, beta_over_gamma, den });
        }
        Ok(f)
    }

    pub fn len(&self) -> usize {
        self.cp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cp.is_empty()
    }

    fn sweep(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        if n == 0 {
            return;
        }
        rhs[0] *= self.inv_denom[0];
        for k in 1..n {
            rhs[k] = (rhs[k] - self.lower[k] * rhs[k - 1]) * self.inv_denom[k];
        }
        for k in (0..n - 1).rev() {
            rhs[k] -= self.cp[k] * rhs[k + 1];
        }
    }

    /// Overwrites `rhs` with the solution.
    pub fn solve(&self, rhs: &mut [f64]) {
        debug_assert_eq!(rhs.len(), self.len());
        self.sweep(rhs);
        if let Some(c) = &self.corner {
            let n = rhs.len();
            let fact = (rhs[0] + c.beta_over_gamma * rhs[n - 1]) / c.den;
            for (r, zi) in rhs.iter_mut().zip(&c.z) {
                *r -= fact * zi;
            }
        }
    }
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64], c: &mut [f64]) -> Result<()> {
    let n = diag.len();
    if n == 0 {
        return Ok(());
    }
    let mut denom = diag[0];
    if denom == 0.0 {
        return Err(Error::SingularSolve("zero pivot in row 0".into()));
    }
    c[0] = upper[0] / denom;
    rhs[0] /= denom;
    for k in 1..n {
        denom = diag[k] - lower[k] * c[k - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::SingularSolve(format!("zero pivot in row {k}")));
        }
        c[k] = if k + 1 < n { upper[k] / denom } else { 0.0 };
        rhs[k] = (rhs[k] - lower[k] * rhs[k - 1]) / denom;
    }
    for k in (0..n - 1).rev() {
        rhs[k] -= c[k] * rhs[k + 1];
    }
    Ok(())
}
