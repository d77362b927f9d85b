//! The two-species competition model.

use serde::{Deserialize, Serialize};

use crate::coeffs::CoefficientField;
use crate::error::{Error, Result};
use crate::pde::cell::{check_elliptic, check_grids};

/// Expressions for the ten coefficients plus the periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelExprs {
    pub d1: String,
    pub d2: String,
    #[serde(default = "zero_expr")]
    pub g1: String,
    #[serde(default = "zero_expr")]
    pub g2: String,
    pub b1: String,
    pub b2: String,
    pub a11: String,
    pub a12: String,
    pub a21: String,
    pub a22: String,
    #[serde(default = "unit")]
    pub omega: f64,
    #[serde(default = "unit")]
    pub ell: f64,
}

fn zero_expr() -> String {
    "0".into()
}

fn unit() -> f64 {
    1.0
}

impl ModelExprs {
    /// Constant coefficients with zero drift.
    #[allow(clippy::too_many_arguments)]
    pub fn constants(d1: f64, d2: f64, b1: f64, b2: f64, a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        let s = |v: f64| format!("{v}");
        Self {
            d1: s(d1),
            d2: s(d2),
            g1: "0".into(),
            g2: "0".into(),
            b1: s(b1),
            b2: s(b2),
            a11: s(a11),
            a12: s(a12),
            a21: s(a21),
            a22: s(a22),
            omega: 1.0,
            ell: 1.0,
        }
    }

    pub fn named(&self) -> [(&'static str, &str); 10] {
        [
            ("d1", &self.d1),
            ("d2", &self.d2),
            ("g1", &self.g1),
            ("g2", &self.g2),
            ("b1", &self.b1),
            ("b2", &self.b2),
            ("a11", &self.a11),
            ("a12", &self.a12),
            ("a21", &self.a21),
            ("a22", &self.a22),
        ]
    }
}

/// Coefficients of
/// `u1_t = L1 u1 + u1 (b1 - a11 u1 - a12 u2)`,
/// `u2_t = L2 u2 + u2 (b2 - a21 u1 - a22 u2)`,
/// with `Li u = di u_xx - gi u_x`, all on one shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub d1: CoefficientField,
    pub d2: CoefficientField,
    pub g1: CoefficientField,
    pub g2: CoefficientField,
    pub b1: CoefficientField,
    pub b2: CoefficientField,
    pub a11: CoefficientField,
    pub a12: CoefficientField,
    pub a21: CoefficientField,
    pub a22: CoefficientField,
}

impl SystemSpec {
    /// Validates grids, ellipticity, positive self-limitation and
    /// nonnegative cross-competition. Zero cross terms are accepted so that
    /// decoupled reference problems can be expressed.
    pub fn new(fields: [CoefficientField; 10]) -> Result<Self> {
        let [d1, d2, g1, g2, b1, b2, a11, a12, a21, a22] = fields;
        let s = Self { d1, d2, g1, g2, b1, b2, a11, a12, a21, a22 };
        check_grids(&s.all())?;
        check_elliptic(&s.d1)?;
        check_elliptic(&s.d2)?;
        for (name, f) in [("a11", &s.a11), ("a22", &s.a22)] {
            if !(f.min() > 0.0) {
                return Err(Error::Invalid(format!("{name} must be positive everywhere (min {})", f.min())));
            }
        }
        for (name, f) in [("a12", &s.a12), ("a21", &s.a21)] {
            if f.min() < 0.0 {
                return Err(Error::Invalid(format!("{name} must be nonnegative (min {})", f.min())));
            }
        }
        Ok(s)
    }

    pub fn from_exprs(m: &ModelExprs, nt: usize, nx: usize) -> Result<Self> {
        let mut out = Vec::with_capacity(10);
        for (name, e) in m.named() {
            let f = CoefficientField::build(e, m.omega, m.ell, nt, nx)
                .map_err(|err| match err {
                    Error::Parse { position, message } => Error::Parse {
                        position,
                        message: format!("{name}: {message}"),
                    },
                    other => other,
                })?;
            out.push(f);
        }
        let fields: [CoefficientField; 10] = out.try_into().expect("ten fields");
        Self::new(fields)
    }

    pub fn all(&self) -> [&CoefficientField; 10] {
        [
            &self.d1, &self.d2, &self.g1, &self.g2, &self.b1, &self.b2, &self.a11, &self.a12, &self.a21, &self.a22,
        ]
    }

    pub fn omega(&self) -> f64 {
        self.d1.omega()
    }

    pub fn ell(&self) -> f64 {
        self.d1.ell()
    }

    pub fn nt(&self) -> usize {
        self.d1.nt()
    }

    pub fn nx(&self) -> usize {
        self.d1.nx()
    }

    /// Ten times the invariant-region bound `max(b_i) / min(a_ii)`.
    pub fn blowup_bound(&self) -> f64 {
        let b = self.b1.max().max(self.b2.max()).max(0.0);
        let a = self.a11.min().min(self.a22.min());
        10.0 * b / a
    }

    /// The system seen through `x -> -x`: every field is reflected and the
    /// drifts change sign.
    pub fn reflect_x(&self) -> Self {
        let neg = |f: &CoefficientField| f.reflect_x().map(|v| -v);
        Self {
            d1: self.d1.reflect_x(),
            d2: self.d2.reflect_x(),
            g1: neg(&self.g1),
            g2: neg(&self.g2),
            b1: self.b1.reflect_x(),
            b2: self.b2.reflect_x(),
            a11: self.a11.reflect_x(),
            a12: self.a12.reflect_x(),
            a21: self.a21.reflect_x(),
            a22: self.a22.reflect_x(),
        }
    }

    /// True when `a21` vanishes identically, so species 1 never feels the
    /// second equation's coupling.
    pub fn a21_vanishes(&self) -> bool {
        self.a21.max_abs() == 0.0
    }
}
