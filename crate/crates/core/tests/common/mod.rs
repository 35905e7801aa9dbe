#![allow(dead_code)]

use covsel::{Problem, SymMatrix};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sample covariance of `2n` uniform draws plus a small ridge, so it is
/// comfortably positive definite.
pub fn random_cov(rng: &mut impl Rng, n: usize) -> SymMatrix {
    let m = 2 * n;
    let data = DMatrix::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0));
    let mut cov = &data * data.transpose() / m as f64;
    for i in 0..n {
        cov[(i, i)] += 0.05;
    }
    let sym = (&cov + cov.transpose()) * 0.5;
    SymMatrix::from_dmatrix(sym).unwrap()
}

pub fn random_problem(rng: &mut impl Rng, n: usize) -> Problem {
    let sigma = random_cov(rng, n);
    let rho = rng.gen_range(0.05..0.3);
    Problem::new(sigma, rho).unwrap()
}

#[derive(Debug, Clone)]
pub struct Reference {
    pub sigma_hat: DMatrix<f64>,
    pub dual_obj: f64,
    pub gap: f64,
    pub iterations: usize,
}

fn logdet(m: &DMatrix<f64>) -> Option<f64> {
    let chol = m.clone().cholesky()?;
    Some(2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

fn gap_at(s: &DMatrix<f64>, rho: f64, hat: &DMatrix<f64>) -> f64 {
    let x = hat.clone().cholesky().unwrap().inverse();
    let x = (&x + x.transpose()) * 0.5;
    s.dot(&x) + rho * x.iter().map(|v| v.abs()).sum::<f64>() - s.nrows() as f64
}

/// Projected gradient with backtracking on `min -log det(S + U)` over
/// `|U|_inf <= rho`, started from `U = rho I`. Written directly against
/// nalgebra so it shares no code with the solvers under test.
pub fn reference_solve(p: &Problem, gap_tol: f64) -> Reference {
    let s = p.sigma().as_dmatrix().clone();
    let rho = p.rho();
    let n = s.nrows();
    let mut u = DMatrix::identity(n, n) * rho;
    let mut value = -logdet(&(&s + &u)).expect("S + rho I must be positive definite");
    let mut step = 1.0;
    for iterations in 0..2_000_000 {
        let hat = &s + &u;
        let gap = gap_at(&s, rho, &hat);
        if gap <= gap_tol {
            return Reference {
                sigma_hat: hat,
                dual_obj: value - n as f64,
                gap,
                iterations,
            };
        }
        let inv = hat.cholesky().unwrap().inverse();
        let grad = -(&inv + inv.transpose()) * 0.5;
        loop {
            let trial = (&u - &grad * step).map(|v| v.clamp(-rho, rho));
            let trial = (&trial + trial.transpose()) * 0.5;
            let d = &trial - &u;
            if let Some(ld) = logdet(&(&s + &trial)) {
                let next = -ld;
                if next <= value + grad.dot(&d) + d.norm_squared() / (2.0 * step) {
                    u = trial;
                    value = next;
                    step *= 2.0;
                    break;
                }
            }
            step *= 0.5;
            assert!(step > 1e-30, "reference line search stalled");
        }
    }
    panic!("reference solver did not reach gap {gap_tol}");
}
