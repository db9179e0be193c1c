//! Lexicographic optimisation of linear programs whose coefficients and
//! variables are LR-type interval-valued intuitionistic fuzzy numbers.

pub mod cli;
pub mod ivifn;
pub mod lp;
pub mod model;
pub mod ranking;
pub mod solver;
pub mod transform;
