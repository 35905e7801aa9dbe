//! The penalized log-likelihood problem, its dual, and the duality-gap
//! certificate shared by every solver.
//!
//! Primal: maximize `log det X - <S, X> - rho |X|_1` over `alpha I <= X <= beta I`.
//! Dual (no bounds): minimize `-log det(S + U) - n` over `|U|_inf <= rho`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{chol_logdet, logdet_and_inverse, spectral_norm, SymMatrix};

/// Absolute slack allowed on the dual box constraint.
pub const DUAL_FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct Problem {
    sigma: SymMatrix,
    rho: f64,
    alpha: f64,
    beta: f64,
}

impl Problem {
    /// Problem without a priori spectral bounds (`alpha = 0`, `beta = +inf`).
    pub fn new(sigma: SymMatrix, rho: f64) -> Result<Self> {
        Self::with_bounds(sigma, rho, 0.0, f64::INFINITY)
    }

    pub fn with_bounds(sigma: SymMatrix, rho: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !rho.is_finite() || rho < 0.0 {
            return Err(Error::InvalidPenalty(rho));
        }
        if alpha.is_nan() || beta.is_nan() || !alpha.is_finite() || alpha < 0.0 || alpha >= beta
        {
            return Err(Error::InvalidBounds { alpha, beta });
        }
        Ok(Self {
            sigma,
            rho,
            alpha,
            beta,
        })
    }

    pub fn sigma(&self) -> &SymMatrix {
        &self.sigma
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n(&self) -> usize {
        self.sigma.n()
    }

    pub fn has_finite_bounds(&self) -> bool {
        self.alpha > 0.0 && self.beta.is_finite()
    }

    /// Copy of the problem with unset bounds (`alpha = 0`, `beta = inf`)
    /// replaced by [`default_bounds`]. Bounds that are already set are kept.
    pub fn with_default_bounds(&self) -> Result<Problem> {
        if self.has_finite_bounds() {
            return Ok(self.clone());
        }
        let (a, b) = default_bounds(&self.sigma, self.rho)?;
        let alpha = if self.alpha > 0.0 { self.alpha } else { a };
        let beta = if self.beta.is_finite() { self.beta } else { b };
        Problem::with_bounds(self.sigma.clone(), self.rho, alpha, beta)
    }
}

/// One convergence checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub seconds: f64,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// Primal estimate of the inverse covariance.
    pub x: SymMatrix,
    /// Dual point `S + U`, the robust covariance estimate.
    pub sigma_hat: SymMatrix,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub gap: f64,
    /// Sweeps for block-coordinate descent, gradient steps for the smoothing methods.
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TracePoint>,
    /// Non-fatal numerical events worth surfacing to the caller.
    pub warnings: Vec<String>,
}

/// `log det X - <S, X> - rho * sum_ij |X_ij|`.
pub fn primal_objective(p: &Problem, x: &SymMatrix) -> Result<f64> {
    check_dim(p, x)?;
    let logdet = chol_logdet(x)?;
    Ok(logdet - p.sigma.dot(x) - p.rho * x.l1_norm())
}

/// `-log det(sigma_hat) - n`, requiring `|sigma_hat - S|_inf <= rho`.
pub fn dual_objective(p: &Problem, sigma_hat: &SymMatrix) -> Result<f64> {
    check_dim(p, sigma_hat)?;
    check_dual_feasible(p, sigma_hat)?;
    Ok(-chol_logdet(sigma_hat)? - p.n() as f64)
}

/// Worst case of `<X, S + U> - <X, S>` over `|U|_inf <= rho`.
///
/// Returns `-rho |X|_1` and the minimizing perturbation `-rho sign(X)`.
pub fn robust_inner_min(x: &SymMatrix, rho: f64) -> (f64, SymMatrix) {
    let u = x.map(|v| {
        if v > 0.0 {
            -rho
        } else if v < 0.0 {
            rho
        } else {
            0.0
        }
    });
    (-rho * x.l1_norm(), u)
}

/// Duality gap at the dual point `sigma_hat`, paired with `X = sigma_hat^-1`:
/// `<S, X> + rho |X|_1 - n`.
pub fn duality_gap(p: &Problem, sigma_hat: &SymMatrix) -> Result<f64> {
    Ok(certify(p, sigma_hat)?.gap)
}

/// Primal/dual evaluation at a dual-feasible point and its inverse.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub x: SymMatrix,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub gap: f64,
}

/// Evaluates both objectives at `sigma_hat` and `X = sigma_hat^-1` from a
/// single factorization.
pub fn certify(p: &Problem, sigma_hat: &SymMatrix) -> Result<Certificate> {
    check_dim(p, sigma_hat)?;
    check_dual_feasible(p, sigma_hat)?;
    let n = p.n() as f64;
    let (logdet_hat, x) = logdet_and_inverse(sigma_hat)?;
    let linear = p.sigma.dot(&x) + p.rho * x.l1_norm();
    Ok(Certificate {
        primal_obj: -logdet_hat - linear,
        dual_obj: -logdet_hat - n,
        gap: linear - n,
        x,
    })
}

/// A priori spectral bounds `alpha = 1 / (|S|_2 + n rho)`, `beta = n / rho`.
pub fn default_bounds(sigma: &SymMatrix, rho: f64) -> Result<(f64, f64)> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::DegeneratePenalty);
    }
    let n = sigma.n() as f64;
    let alpha = 1.0 / (spectral_norm(sigma)? + n * rho);
    Ok((alpha, n / rho))
}

/// Largest amount by which `|sigma_hat - S|_inf` exceeds `rho`.
pub fn dual_violation(p: &Problem, sigma_hat: &SymMatrix) -> f64 {
    (sigma_hat.max_abs_diff(&p.sigma) - p.rho).max(0.0)
}

fn check_dual_feasible(p: &Problem, sigma_hat: &SymMatrix) -> Result<()> {
    let violation = dual_violation(p, sigma_hat);
    if violation > DUAL_FEASIBILITY_TOL {
        return Err(Error::InfeasibleDualPoint { violation });
    }
    Ok(())
}

fn check_dim(p: &Problem, m: &SymMatrix) -> Result<()> {
    if m.n() != p.n() {
        return Err(Error::DimensionMismatch {
            expected: p.n(),
            got: m.n(),
        });
    }
    Ok(())
}
