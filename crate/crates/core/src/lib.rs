//! Numerical toolkit for trace and operator inequalities involving the matrix
//! logarithm, the auxiliary function of the quantum reliability function, and
//! randomized counter-example search.

pub mod ensembles;
pub mod error;
pub mod inequalities;
pub mod matcore;
pub mod oracle;
pub mod reliability;
pub mod search;

pub use error::{Error, Result};
