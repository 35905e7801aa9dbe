//! Sparse inverse covariance selection.
//!
//! Given a (possibly noisy, possibly singular) sample covariance `S` and a
//! penalty `rho`, estimate a sparse precision matrix by solving
//!
//! ```text
//! maximize  log det X - <S, X> - rho * sum_ij |X_ij|   over  alpha I <= X <= beta I
//! ```
//!
//! together with its dual `minimize -log det(S + U) - n` over `|U|_inf <= rho`.
//! Every solver returns a [`Solution`] carrying both a primal and a dual point,
//! so the reported duality gap certifies suboptimality.
//!
//! Solvers:
//! - [`bcd`]: block-coordinate descent over column/row pairs of the dual.
//! - [`nesterov`]: smooth first-order methods on the primal (spectral box,
//!   log-det prox) and on the dual (entrywise box, matrix-entropy smoothing).

pub mod bcd;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod nesterov;
pub mod solver;
pub mod synth;

pub use error::{Error, Result};
pub use linalg::SymMatrix;
pub use model::{Problem, Solution, TracePoint};
pub use solver::{solve, SolverConfig, SolverKind};
