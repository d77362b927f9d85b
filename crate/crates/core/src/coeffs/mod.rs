//! Periodic coefficient fields and the expression language that defines them.

mod expr;
mod field;

pub use expr::{BinOp, Expr, Func};
pub use field::{mean_and_symmetry, CoefficientField, SymmetryCheck, SymmetryReport, SYMMETRY_TOL};
