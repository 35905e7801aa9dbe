//! Nesterov's smoothing method for non-smooth convex minimization, in two
//! variants sharing the same two-sequence scheme.
//!
//! Each step `k` computes the gradient `g_k` of a smoothed objective at `x_k`,
//! then
//!
//! ```text
//! y_k     = argmin_y <g_k, y - x_k> + L/2 |y - x_k|^2            over Q1
//! z_k     = argmin_z L/sigma1 d1(z) + sum_i (i+1)/2 <g_i, z - x_i>  over Q1
//! x_{k+1} = 2/(k+3) z_k + (k+1)/(k+3) y_k
//! ```
//!
//! The weighted gradient sum is accumulated in place.
//!
//! **Primal variant.** Minimizes `-log det X + <S, X> + rho |X|_1` over the
//! spectral box `alpha I <= X <= beta I` with prox `-log det X + log beta`.
//! The l1 term is smoothed with the Frobenius prox on `|U|_inf <= 1`.
//!
//! **Dual variant.** Minimizes `-log det(S + U) - n` over `|U|_inf <= rho`
//! with prox `|U|_F^2 / 2`. The log-det is written as a maximum over
//! `{W >= 0, tr W <= n / rho}` and smoothed with the matrix entropy
//! `tr(W log W) + log n`.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::{
    chol_logdet, inverse_spd, logdet_linear_min, proj_spectral_box, sym_eig, SymMatrix,
};
use crate::model::{certify, primal_objective, Certificate, Problem, Solution, TracePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Primal,
    Dual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NesterovConfig {
    /// Target accuracy: sets the smoothing level and the gap stopping rule.
    pub epsilon: f64,
    pub variant: Variant,
    /// Iteration budget; `None` uses the bound `N(epsilon)`.
    pub max_iters: Option<usize>,
    /// Duality gap is evaluated every `trace_every` iterations.
    pub trace_every: usize,
}

impl Default for NesterovConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            variant: Variant::Primal,
            max_iters: None,
            trace_every: 10,
        }
    }
}

impl NesterovConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive and finite, got {}",
                self.epsilon
            )));
        }
        if self.trace_every == 0 {
            return Err(Error::InvalidConfig("trace_every must be positive".into()));
        }
        Ok(())
    }
}

/// Constants of the smoothing scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingParams {
    /// `D1`: range of the prox-function on the feasible set.
    pub d1_max: f64,
    /// `sigma1`: strong convexity of `d1`.
    pub sigma1: f64,
    /// `D2`: range of the smoothing prox-function.
    pub d2_max: f64,
    pub sigma2: f64,
    /// `M`: Lipschitz constant of the smooth part's gradient.
    pub lipschitz_m: f64,
    /// `|A|`: norm of the linear operator coupling the two sets.
    pub op_norm: f64,
    /// Smoothing coefficient `epsilon / (2 D2)`.
    pub mu: f64,
    /// `L(epsilon) = M + D2 |A|^2 / (2 sigma2 epsilon)`.
    pub lipschitz_l: f64,
}

impl SmoothingParams {
    fn assemble(
        d1_max: f64,
        sigma1: f64,
        d2_max: f64,
        sigma2: f64,
        lipschitz_m: f64,
        op_norm: f64,
        eps: f64,
    ) -> Self {
        Self {
            d1_max,
            sigma1,
            d2_max,
            sigma2,
            lipschitz_m,
            op_norm,
            mu: eps / (2.0 * d2_max),
            lipschitz_l: lipschitz_m + d2_max * op_norm * op_norm / (2.0 * sigma2 * eps),
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidConfig(format!("epsilon must be positive, got {eps}")));
    }
    Ok(())
}

/// Constants for the primal variant. The problem's bounds must be finite
/// (see [`Problem::with_default_bounds`]).
pub fn smoothing_params(p: &Problem, eps: f64) -> Result<SmoothingParams> {
    check_eps(eps)?;
    if !p.has_finite_bounds() {
        return Err(Error::InfiniteBounds { beta: p.beta() });
    }
    let n = p.n() as f64;
    let (alpha, beta) = (p.alpha(), p.beta());
    Ok(SmoothingParams::assemble(
        n * (beta / alpha).ln(),
        1.0 / (beta * beta),
        n * n / 2.0,
        1.0,
        1.0 / (alpha * alpha),
        p.rho(),
        eps,
    ))
}

/// Range used for the entropy prox. `log n` vanishes at `n = 1`, so it is
/// floored at one.
fn entropy_range(n: usize) -> f64 {
    (n as f64).ln().max(1.0)
}

/// Constants for the dual variant: box radius `rho`, entropy smoothing.
pub fn smoothing_params_dual(p: &Problem, eps: f64) -> Result<SmoothingParams> {
    check_eps(eps)?;
    if !(p.rho() > 0.0) {
        return Err(Error::DegeneratePenalty);
    }
    let n = p.n() as f64;
    let rho = p.rho();
    Ok(SmoothingParams::assemble(
        rho * rho * n * n / 2.0,
        1.0,
        entropy_range(p.n()),
        0.5,
        0.0,
        1.0,
        eps,
    ))
}

/// `N(eps) = 4 |A| sqrt(D1 D2 / (sigma1 sigma2)) / eps + sqrt(M D1 / (sigma1 eps))`, rounded up.
pub fn iteration_bound(sp: &SmoothingParams, eps: f64) -> usize {
    let nonsmooth = 4.0 * sp.op_norm * (sp.d1_max * sp.d2_max / (sp.sigma1 * sp.sigma2)).sqrt() / eps;
    let smooth = (sp.lipschitz_m * sp.d1_max / (sp.sigma1 * eps)).sqrt();
    let total = (nonsmooth + smooth).ceil();
    if total >= usize::MAX as f64 {
        usize::MAX
    } else {
        total as usize
    }
}

/// Entrywise maximizer of `<rho X, U> - mu |U|_F^2 / 2` over `|U|_inf <= 1`.
pub fn u_star_primal(x: &SymMatrix, rho: f64, mu: f64) -> SymMatrix {
    x.map(|v| (rho * v / mu).clamp(-1.0, 1.0))
}

/// Smoothed primal objective `-log det X + <S, X> + max_U {<rho X, U> - mu |U|^2 / 2}`.
pub fn f_eps(x: &SymMatrix, p: &Problem, sp: &SmoothingParams) -> Result<f64> {
    let u = u_star_primal(x, p.rho(), sp.mu);
    let smoothed = p.rho() * x.dot(&u) - 0.5 * sp.mu * u.dot(&u);
    Ok(-chol_logdet(x)? + p.sigma().dot(x) + smoothed)
}

/// Gradient of [`f_eps`]: `-X^-1 + S + rho U*(X)`.
pub fn grad_f_eps(x: &SymMatrix, p: &Problem, sp: &SmoothingParams) -> Result<SymMatrix> {
    let inv = inverse_spd(x)?;
    let u = u_star_primal(x, p.rho(), sp.mu);
    Ok(&(p.sigma() - &inv) + &(&u * p.rho()))
}

#[derive(Debug, Clone)]
pub struct StepOutput {
    pub y: SymMatrix,
    pub z: SymMatrix,
    pub x_next: SymMatrix,
}

/// One primal step. `weighted_sum` holds `sum_{i<k} (i+1)/2 g_i` on entry and
/// is advanced to include `g_k`.
pub fn nesterov_step(
    k: usize,
    x: &SymMatrix,
    grad: &SymMatrix,
    weighted_sum: &mut SymMatrix,
    sp: &SmoothingParams,
    alpha: f64,
    beta: f64,
) -> Result<StepOutput> {
    let l = sp.lipschitz_l;
    let y = proj_spectral_box(&SymMatrix::lin_comb(1.0, x, -1.0 / l, grad), alpha, beta)?;
    *weighted_sum = SymMatrix::lin_comb(1.0, weighted_sum, 0.5 * (k as f64 + 1.0), grad);
    let z = logdet_linear_min(weighted_sum, l / sp.sigma1, alpha, beta)?;
    let x_next = combine(k, &z, &y);
    Ok(StepOutput { y, z, x_next })
}

fn combine(k: usize, z: &SymMatrix, y: &SymMatrix) -> SymMatrix {
    let kf = k as f64;
    SymMatrix::lin_comb(2.0 / (kf + 3.0), z, (kf + 1.0) / (kf + 3.0), y)
}

fn iteration_budget(sp: &SmoothingParams, cfg: &NesterovConfig) -> usize {
    cfg.max_iters
        .unwrap_or_else(|| iteration_bound(sp, cfg.epsilon))
        .max(1)
}

/// Dispatches on `cfg.variant`.
pub fn nesterov_solve(p: &Problem, cfg: &NesterovConfig) -> Result<Solution> {
    match cfg.variant {
        Variant::Primal => nesterov_primal_solve(p, cfg),
        Variant::Dual => nesterov_dual_solve(p, cfg),
    }
}

/// Best primal and dual values seen so far, possibly from different
/// checkpoints. Their difference is a valid gap by weak duality.
struct PrimalTracker {
    x: Option<(SymMatrix, f64)>,
    hat: Option<(SymMatrix, f64)>,
}

impl PrimalTracker {
    fn gap(&self) -> f64 {
        match (&self.x, &self.hat) {
            (Some((_, primal)), Some((_, dual))) => dual - primal,
            _ => f64::INFINITY,
        }
    }

    fn offer_primal(&mut self, p: &Problem, candidate: SymMatrix) -> Result<bool> {
        let primal = primal_objective(p, &candidate)?;
        if self.x.as_ref().map_or(true, |(_, best)| primal > *best) {
            self.x = Some((candidate, primal));
            return Ok(true);
        }
        Ok(false)
    }

    /// A dual point that improves the best dual value also yields the primal
    /// candidate `proj(S_hat^-1)`.
    fn offer_dual(&mut self, p: &Problem, candidate: SymMatrix) -> Result<()> {
        // Candidates are built inside the box, so only definiteness can fail.
        let Ok(logdet) = chol_logdet(&candidate) else {
            return Ok(());
        };
        let dual = -logdet - p.n() as f64;
        if self.hat.as_ref().map_or(false, |(_, best)| dual >= *best) {
            return Ok(());
        }
        let x = proj_spectral_box(&inverse_spd(&candidate)?, p.alpha(), p.beta())?;
        self.hat = Some((candidate, dual));
        self.offer_primal(p, x)?;
        Ok(())
    }
}

/// Projects `M - S` onto `|U|_inf <= rho` and returns `S + U`.
fn clamp_to_dual_box(p: &Problem, m: &SymMatrix) -> SymMatrix {
    let rho = p.rho();
    let d = (m - p.sigma()).map(|v| v.clamp(-rho, rho));
    p.sigma() + &d
}

/// Primal variant, started at `X0 = beta I`.
///
/// Unset bounds are replaced by [`crate::model::default_bounds`]. At each
/// checkpoint the current `y_k` is scored by the primal objective and two
/// dual candidates are derived from it (`S + rho U*(y_k)` and the box
/// projection of `y_k^-1`). Any improving dual candidate contributes its
/// inverse, projected onto the spectral box, as a primal candidate. The
/// returned `x` is the best primal candidate seen. The solve stops once the best dual value minus
/// the best primal value is at most `epsilon`, or after
/// `max_iters` steps (default `N(epsilon)`).
pub fn nesterov_primal_solve(p: &Problem, cfg: &NesterovConfig) -> Result<Solution> {
    cfg.validate()?;
    let q = if p.has_finite_bounds() {
        p.clone()
    } else {
        p.with_default_bounds()?
    };
    let (alpha, beta) = (q.alpha(), q.beta());
    let sp = smoothing_params(&q, cfg.epsilon)?;
    let budget = iteration_budget(&sp, cfg);
    let n = q.n();
    let start = Instant::now();

    let mut x = SymMatrix::scaled_identity(n, beta);
    let mut weighted_sum = SymMatrix::zeros(n);
    let mut tracker = PrimalTracker { x: None, hat: None };
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    for k in 0..budget {
        let grad = grad_f_eps(&x, &q, &sp)?;
        let step = nesterov_step(k, &x, &grad, &mut weighted_sum, &sp, alpha, beta)?;
        iterations = k + 1;
        if iterations % cfg.trace_every == 0 || iterations == budget {
            let y = step.y;
            let u_star = &u_star_primal(&y, q.rho(), sp.mu) * q.rho();
            tracker.offer_dual(&q, p.sigma() + &u_star)?;
            let y_inv = inverse_spd(&y)?;
            tracker.offer_dual(&q, clamp_to_dual_box(&q, &y_inv))?;
            tracker.offer_primal(&q, y)?;
            let gap = tracker.gap();
            trace.push(TracePoint {
                iteration: iterations,
                seconds: start.elapsed().as_secs_f64(),
                gap,
            });
            if gap <= cfg.epsilon {
                converged = true;
                break;
            }
        }
        x = step.x_next;
    }

    let (x, primal_obj) = tracker.x.take().ok_or_else(|| {
        Error::NumericalFailure("no primal checkpoint was evaluated".into())
    })?;
    let mut warnings = Vec::new();
    let (sigma_hat, dual_obj) = match tracker.hat.take() {
        Some(best) => best,
        None => {
            warnings.push("no positive definite dual point found; gap is infinite".into());
            (clamp_to_dual_box(&q, &x), f64::INFINITY)
        }
    };
    Ok(Solution {
        x,
        sigma_hat,
        primal_obj,
        dual_obj,
        gap: dual_obj - primal_obj,
        iterations,
        converged,
        trace,
        warnings,
    })
}

// ---------------------------------------------------------------------------
// Dual variant
// ---------------------------------------------------------------------------

const ROOT_MAX_ITERS: usize = 200;
const ROOT_LOWER: f64 = 1e-300;

/// Root in `u` of `1/u - mu log u - b = 0`, searched in `log u` over
/// `[log 1e-300, log cap]`. Returns `cap` when the root lies beyond it.
fn entropy_scalar_root(b: f64, mu: f64, cap: f64) -> Result<f64> {
    let g = |t: f64| (-t).exp() - mu * t - b;
    let (mut lo, mut hi) = (ROOT_LOWER.ln(), cap.ln());
    if g(hi) >= 0.0 {
        return Ok(cap);
    }
    if g(lo) <= 0.0 {
        return Ok(ROOT_LOWER);
    }
    // Without smoothing the root is 1 / b.
    let mut t = if b > 0.0 { (-b.ln()).clamp(lo, hi) } else { hi };
    for _ in 0..ROOT_MAX_ITERS {
        let gt = g(t);
        if gt == 0.0 {
            return Ok(t.exp());
        }
        if gt > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let slope = -(-t).exp() - mu;
        let mut next = t - gt / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 4.0 * f64::EPSILON * t.abs().max(1.0) || hi - lo <= f64::EPSILON * t.abs().max(1.0) {
            return Ok(next.exp());
        }
        t = next;
    }
    Err(Error::NumericalFailure(format!(
        "entropy root did not converge (b={b:e}, mu={mu:e}, bracket=[{lo}, {hi}])"
    )))
}

fn entropy_spectrum(eigs: &[f64], mu: f64, lambda: f64, cap: f64) -> Result<Vec<f64>> {
    eigs.iter()
        .map(|&c| entropy_scalar_root(c + mu + lambda, mu, cap))
        .collect()
}

/// Maximizer of `-<C, W> + log det W - mu (tr(W log W) + log n)` over
/// `{W >= 0, tr W <= trace_cap}`.
///
/// The maximizer shares eigenvectors with `C`. Each eigenvalue `w_i` solves
/// `-c_i + 1/w_i - mu (log w_i + 1) - lambda = 0`, where the trace multiplier
/// `lambda >= 0` is zero when the constraint is slack and found by bisection
/// otherwise.
pub fn entropy_inner_max(c: &SymMatrix, mu: f64, trace_cap: f64) -> Result<SymMatrix> {
    let (eig, values, _) = entropy_inner_max_spectral(c, mu, trace_cap)?;
    Ok(eig.recompose_from(&values))
}

/// Spectral form of [`entropy_inner_max`]: decomposition of `C`, eigenvalues
/// of the maximizer, and the trace multiplier.
pub fn entropy_inner_max_spectral(
    c: &SymMatrix,
    mu: f64,
    trace_cap: f64,
) -> Result<(crate::linalg::EigenDecomposition, Vec<f64>, f64)> {
    if !(mu > 0.0) || !(trace_cap > 0.0) || !mu.is_finite() || !trace_cap.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "entropy smoothing needs mu > 0 and trace_cap > 0 (mu={mu}, cap={trace_cap})"
        )));
    }
    let eig = sym_eig(c)?;
    let unconstrained = entropy_spectrum(&eig.eigenvalues, mu, 0.0, trace_cap)?;
    if unconstrained.iter().sum::<f64>() <= trace_cap {
        return Ok((eig, unconstrained, 0.0));
    }
    let total = |lambda: f64| -> Result<(f64, Vec<f64>)> {
        let w = entropy_spectrum(&eig.eigenvalues, mu, lambda, trace_cap)?;
        Ok((w.iter().sum(), w))
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut at_hi = total(hi)?;
    let mut doublings = 0;
    while at_hi.0 > trace_cap {
        lo = hi;
        hi *= 2.0;
        at_hi = total(hi)?;
        doublings += 1;
        if doublings > 2000 {
            return Err(Error::NumericalFailure(
                "could not bracket the trace multiplier".into(),
            ));
        }
    }
    for _ in 0..ROOT_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let at_mid = total(mid)?;
        if at_mid.0 > trace_cap {
            lo = mid;
        } else {
            hi = mid;
            at_hi = at_mid;
        }
    }
    Ok((eig, at_hi.1, hi))
}

/// Smoothed dual objective `max_W {log det W - <C, W> - mu d2(W)}` evaluated
/// at `C = S + U`, together with its gradient `-W*`.
pub fn dual_smoothed(
    u: &SymMatrix,
    p: &Problem,
    sp: &SmoothingParams,
) -> Result<(f64, SymMatrix)> {
    let c = p.sigma() + u;
    let n = p.n();
    let cap = n as f64 / p.rho();
    let (eig, w, _) = entropy_inner_max_spectral(&c, sp.mu, cap)?;
    let value = eig
        .eigenvalues
        .iter()
        .zip(&w)
        .map(|(&ci, &wi)| wi.ln() - ci * wi - sp.mu * wi * wi.ln())
        .sum::<f64>()
        - sp.mu * (n as f64).ln();
    let grad = &eig.recompose_from(&w) * -1.0;
    Ok((value, grad))
}

/// Dual variant over `|U|_inf <= rho`, started at the prox center `U = 0`.
///
/// Checkpoints certify `S + y_k` through [`certify`] whenever it is positive
/// definite; checkpoints where it is not are skipped with a warning rather
/// than aborting. The certificate with the smallest gap is returned.
pub fn nesterov_dual_solve(p: &Problem, cfg: &NesterovConfig) -> Result<Solution> {
    nesterov_dual_solve_observed(p, cfg, |_, _| {})
}

/// [`nesterov_dual_solve`] with a callback on every certified checkpoint,
/// receiving the certificate and the dual point `S + y_k`.
pub fn nesterov_dual_solve_observed(
    p: &Problem,
    cfg: &NesterovConfig,
    mut observe: impl FnMut(&Certificate, &SymMatrix),
) -> Result<Solution> {
    cfg.validate()?;
    let sp = smoothing_params_dual(p, cfg.epsilon)?;
    let budget = iteration_budget(&sp, cfg);
    let n = p.n();
    let rho = p.rho();
    let l = sp.lipschitz_l;
    let start = Instant::now();

    let mut u = SymMatrix::zeros(n);
    let mut weighted_sum = SymMatrix::zeros(n);
    let mut best: Option<(Certificate, SymMatrix)> = None;
    let mut trace = Vec::new();
    let mut skipped = 0usize;
    let mut iterations = 0;
    let mut converged = false;

    for k in 0..budget {
        let (_, grad) = dual_smoothed(&u, p, &sp)?;
        let y = SymMatrix::lin_comb(1.0, &u, -1.0 / l, &grad).map(|v| v.clamp(-rho, rho));
        weighted_sum = SymMatrix::lin_comb(1.0, &weighted_sum, 0.5 * (k as f64 + 1.0), &grad);
        let z = weighted_sum.map(|v| (-v * sp.sigma1 / l).clamp(-rho, rho));
        let next = combine(k, &z, &y);
        iterations = k + 1;

        if iterations % cfg.trace_every == 0 || iterations == budget {
            let hat = p.sigma() + &y;
            match certify(p, &hat) {
                Ok(cert) => {
                    observe(&cert, &hat);
                    trace.push(TracePoint {
                        iteration: iterations,
                        seconds: start.elapsed().as_secs_f64(),
                        gap: cert.gap,
                    });
                    let done = cert.gap <= cfg.epsilon;
                    if best.as_ref().map_or(true, |(b, _)| cert.gap < b.gap) {
                        best = Some((cert, hat));
                    }
                    if done {
                        converged = true;
                        break;
                    }
                }
                Err(Error::NotPositiveDefinite) => skipped += 1,
                Err(e) => return Err(e),
            }
        }
        u = next;
    }

    let mut warnings = Vec::new();
    if skipped > 0 {
        warnings.push(format!(
            "S + U was not positive definite at {skipped} checkpoint(s); gap evaluation skipped there"
        ));
    }
    let Some((cert, sigma_hat)) = best else {
        // No certificate: report the smoothed maximizer at the last iterate,
        // which is positive definite, with an infinite gap.
        let (_, grad) = dual_smoothed(&u, p, &sp)?;
        let x = &grad * -1.0;
        let primal_obj = primal_objective(p, &x)?;
        warnings.push("no checkpoint produced a positive definite dual point; gap is infinite".into());
        return Ok(Solution {
            x,
            sigma_hat: p.sigma() + &u,
            primal_obj,
            dual_obj: f64::INFINITY,
            gap: f64::INFINITY,
            iterations,
            converged,
            trace,
            warnings,
        });
    };
    Ok(Solution {
        x: cert.x,
        sigma_hat,
        primal_obj: cert.primal_obj,
        dual_obj: cert.dual_obj,
        gap: cert.gap,
        iterations,
        converged,
        trace,
        warnings,
    })
}
