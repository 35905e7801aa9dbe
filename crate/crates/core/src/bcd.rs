//! Block-coordinate descent on the dual problem.
//!
//! The dual iterate `S_hat = S + U` starts at `S + rho I` and is updated one
//! column/row pair at a time. With `S_hat` partitioned around column `j` as
//! `[[Q, y], [y^T, s_jj]]`, the Schur-complement identity
//! `log det S_hat = log det Q + log(s_jj - y^T Q^-1 y)` turns the column
//! update into the box-constrained quadratic program
//!
//! ```text
//! minimize  y^T Q^-1 y   subject to  |y - S_col|_inf <= rho
//! ```
//!
//! which is solved by cyclic exact coordinate minimization. The diagonal of
//! `S_hat` is never touched. Spectral bounds on the problem are ignored.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{chol_logdet, inverse_spd, SymMatrix};
use crate::model::{certify, Problem, Solution, TracePoint};

#[derive(Debug, Clone, PartialEq)]
pub struct BcdConfig {
    pub max_sweeps: usize,
    /// Stop once the duality gap falls to this value.
    pub gap_tol: f64,
    /// Per-coordinate relative change below which the column QP is converged.
    pub qp_tol: f64,
    pub qp_max_iters: usize,
}

impl Default for BcdConfig {
    fn default() -> Self {
        Self {
            max_sweeps: 4,
            gap_tol: 0.1,
            qp_tol: 1e-8,
            qp_max_iters: 1000,
        }
    }
}

impl BcdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_sweeps == 0 || self.qp_max_iters == 0 {
            return Err(Error::InvalidConfig(
                "max_sweeps and qp_max_iters must be positive".into(),
            ));
        }
        if !(self.gap_tol > 0.0) || !(self.qp_tol > 0.0) {
            return Err(Error::InvalidConfig(
                "gap_tol and qp_tol must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BcdState {
    pub sigma_hat: SymMatrix,
    pub sweep: usize,
    pub trace: Vec<TracePoint>,
}

/// Reported after every column update by [`bcd_sweep_observed`].
#[derive(Debug)]
pub struct ColumnUpdate<'a> {
    pub sweep: usize,
    pub column: usize,
    pub sigma_hat: &'a SymMatrix,
    /// `s_jj - y^T Q^-1 y` after the update.
    pub schur: f64,
}

/// Starts from `S + rho I`, which carries the optimal dual diagonal.
pub fn bcd_init(p: &Problem) -> Result<BcdState> {
    let mut sigma_hat = p.sigma().clone();
    sigma_hat.add_to_diagonal(p.rho());
    chol_logdet(&sigma_hat)?;
    Ok(BcdState {
        sigma_hat,
        sweep: 0,
        trace: Vec::new(),
    })
}

/// Minimizes `y^T Q^-1 y` over the box `|y - sigma_col|_inf <= rho`, starting
/// from the box point nearest the origin.
pub fn column_qp(
    q11: &SymMatrix,
    sigma_col: &[f64],
    rho: f64,
    cfg: &BcdConfig,
) -> Result<Vec<f64>> {
    if sigma_col.len() != q11.n() {
        return Err(Error::DimensionMismatch {
            expected: q11.n(),
            got: sigma_col.len(),
        });
    }
    let precision = inverse_spd(q11)?.into_dmatrix();
    let start: Vec<f64> = sigma_col.iter().map(|&s| 0f64.clamp(s - rho, s + rho)).collect();
    Ok(box_qp(&precision, sigma_col, rho, start, cfg).0)
}

/// Cyclic coordinate minimization of `y^T P y` over `|y - center| <= rho`.
/// Returns the minimizer and `y^T P y`.
fn box_qp(
    precision: &DMatrix<f64>,
    center: &[f64],
    rho: f64,
    mut y: Vec<f64>,
    cfg: &BcdConfig,
) -> (Vec<f64>, f64) {
    let m = y.len();
    let mut py = precision * DVector::from_column_slice(&y);
    for _ in 0..cfg.qp_max_iters {
        let mut converged = true;
        for i in 0..m {
            let pii = precision[(i, i)];
            let unconstrained = y[i] - py[i] / pii;
            let target = unconstrained.clamp(center[i] - rho, center[i] + rho);
            let delta = target - y[i];
            if delta != 0.0 {
                py.axpy(delta, &precision.column(i), 1.0);
                y[i] = target;
            }
            if delta.abs() > cfg.qp_tol * y[i].abs().max(1.0) {
                converged = false;
            }
        }
        if converged {
            break;
        }
    }
    let objective = y.iter().zip(py.iter()).map(|(a, b)| a * b).sum();
    (y, objective)
}

/// One pass over columns `0..n` in natural order.
pub fn bcd_sweep(state: &mut BcdState, p: &Problem, cfg: &BcdConfig) -> Result<()> {
    bcd_sweep_observed(state, p, cfg, |_| {})
}

/// [`bcd_sweep`] with a callback after each column update.
pub fn bcd_sweep_observed(
    state: &mut BcdState,
    p: &Problem,
    cfg: &BcdConfig,
    mut observe: impl FnMut(&ColumnUpdate<'_>),
) -> Result<()> {
    let n = p.n();
    let sigma = p.sigma();
    let rho = p.rho();
    state.sweep += 1;
    for j in 0..n {
        // Indices of the remaining block, i.e. column j permuted to the end.
        let rest: Vec<usize> = (0..n).filter(|&k| k != j).collect();
        let q11 = SymMatrix::symmetrized(DMatrix::from_fn(n - 1, n - 1, |a, b| {
            state.sigma_hat.get(rest[a], rest[b])
        }));
        let precision = inverse_spd(&q11)?.into_dmatrix();
        let center: Vec<f64> = rest.iter().map(|&k| sigma.get(k, j)).collect();
        let current: Vec<f64> = rest.iter().map(|&k| state.sigma_hat.get(k, j)).collect();
        let (y, quad) = box_qp(&precision, &center, rho, current, cfg);
        let schur = state.sigma_hat.get(j, j) - quad;
        if !(schur > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        for (&k, &v) in rest.iter().zip(&y) {
            state.sigma_hat.set_pair(k, j, v);
        }
        observe(&ColumnUpdate {
            sweep: state.sweep,
            column: j,
            sigma_hat: &state.sigma_hat,
            schur,
        });
    }
    Ok(())
}

/// Sweeps until the duality gap reaches `cfg.gap_tol` or `cfg.max_sweeps`
/// sweeps have run. Exhausting the sweep budget is not an error; the
/// achieved gap is reported.
pub fn bcd_solve(p: &Problem, cfg: &BcdConfig) -> Result<Solution> {
    bcd_solve_observed(p, cfg, |_| {})
}

pub fn bcd_solve_observed(
    p: &Problem,
    cfg: &BcdConfig,
    mut observe: impl FnMut(&ColumnUpdate<'_>),
) -> Result<Solution> {
    cfg.validate()?;
    let start = Instant::now();
    let mut state = bcd_init(p)?;
    loop {
        bcd_sweep_observed(&mut state, p, cfg, &mut observe)?;
        let cert = certify(p, &state.sigma_hat)?;
        state.trace.push(TracePoint {
            iteration: state.sweep,
            seconds: start.elapsed().as_secs_f64(),
            gap: cert.gap,
        });
        let converged = cert.gap <= cfg.gap_tol;
        if converged || state.sweep >= cfg.max_sweeps {
            return Ok(Solution {
                x: cert.x,
                sigma_hat: state.sigma_hat,
                primal_obj: cert.primal_obj,
                dual_obj: cert.dual_obj,
                gap: cert.gap,
                iterations: state.sweep,
                converged,
                trace: state.trace,
                warnings: Vec::new(),
            });
        }
    }
}
