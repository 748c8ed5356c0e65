// Negated comparisons are used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod expr;
pub mod integrator;
pub mod problem;
pub mod shooting;
pub mod solver;
pub mod spectrum;
