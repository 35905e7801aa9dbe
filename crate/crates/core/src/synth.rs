//! Synthetic instances with a known sparse precision matrix, and support
//! recovery scoring.
//!
//! An instance is a random sparse positive definite `A` plus a noisy
//! covariance `S = A^-1 + E`, with `E` symmetric and entries uniform on
//! `[-sigma, sigma]`.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::linalg::{inverse_spd, sym_eig, SymMatrix};
use crate::model::Problem;
use crate::solver::{solve, SolverConfig};

/// Stream offset separating the noise draws from the pattern draws of the
/// same seed.
const NOISE_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub a: SymMatrix,
    /// Off-diagonal `(i, j)` with `A_ij != 0`, both orders included.
    pub support: BTreeSet<(usize, usize)>,
    pub density: f64,
    pub seed: u64,
}

impl GroundTruth {
    pub fn n(&self) -> usize {
        self.a.n()
    }

    /// Number of unordered off-diagonal edges.
    pub fn edges(&self) -> usize {
        self.support.len() / 2
    }
}

/// Random sparse precision matrix.
///
/// Each off-diagonal pair is nonzero with probability `density`, with
/// magnitude uniform on `[0.5, 1]` and a random sign. The diagonal is set to
/// `|lambda_min(offdiag)| + 1`, so `A` is positive definite with smallest
/// eigenvalue at least one.
pub fn gen_sparse_precision(n: usize, density: f64, seed: u64) -> Result<GroundTruth> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = SymMatrix::zeros(n);
    let mut support = BTreeSet::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < density {
                let magnitude = rng.gen_range(0.5..=1.0);
                let v = if rng.gen::<bool>() { magnitude } else { -magnitude };
                a.set_pair(i, j, v);
                support.insert((i, j));
                support.insert((j, i));
            }
        }
    }
    let lambda_min = if n > 0 { sym_eig(&a)?.eigenvalues[0] } else { 0.0 };
    a.add_to_diagonal(lambda_min.abs() + 1.0);
    Ok(GroundTruth {
        a,
        support,
        density,
        seed,
    })
}

/// `A^-1 + E` with `E` drawn on the upper triangle (diagonal included) and
/// mirrored. The result is not forced to be positive definite.
pub fn make_noisy_cov(gt: &GroundTruth, sigma: f64, seed: u64) -> Result<SymMatrix> {
    let clean = inverse_spd(&gt.a)?;
    Ok(add_uniform_noise(&clean, sigma, seed))
}

fn add_uniform_noise(m: &SymMatrix, sigma: f64, seed: u64) -> SymMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ NOISE_STREAM);
    let mut out = m.clone();
    if sigma == 0.0 {
        return out;
    }
    let n = m.n();
    for i in 0..n {
        for j in i..n {
            let e = rng.gen_range(-sigma..=sigma);
            out.set_pair(i, j, m.get(i, j) + e);
        }
    }
    out
}

/// A ground truth together with one noisy covariance drawn from it.
#[derive(Debug, Clone)]
pub struct Instance {
    pub truth: GroundTruth,
    pub sigma: SymMatrix,
    pub noise: f64,
    pub seed: u64,
}

/// Generates `A` and the noise from the same seed on separate streams.
pub fn make_instance(n: usize, density: f64, noise: f64, seed: u64) -> Result<Instance> {
    let truth = gen_sparse_precision(n, density, seed)?;
    let sigma = make_noisy_cov(&truth, noise, seed)?;
    Ok(Instance {
        truth,
        sigma,
        noise,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryReport {
    /// Smallest `|X_ij|` over the true support (`+inf` if the support is empty).
    pub min_on_support: f64,
    pub mean_on_support: Option<f64>,
    /// Largest `|X_ij|` off the true support (`0` if there is none).
    pub max_off_support: f64,
    pub mean_off_support: Option<f64>,
    /// Support entries at or below the threshold.
    pub false_zeros: usize,
    /// Non-support entries above the threshold.
    pub false_nonzeros: usize,
    /// `100 (false_zeros + false_nonzeros) / n^2`.
    pub error_percent: f64,
    /// `(max_off_support, min_on_support)` when non-empty: any threshold
    /// strictly inside recovers the support exactly.
    pub threshold_interval: Option<(f64, f64)>,
}

impl RecoveryReport {
    pub fn exact_recovery_possible(&self) -> bool {
        self.threshold_interval.is_some()
    }
}

/// Scores the off-diagonal entries of `x` against the true support. An entry
/// counts as nonzero iff `|x_ij| > threshold`. Both triangles are counted.
pub fn recovery_report(gt: &GroundTruth, x: &SymMatrix, threshold: f64) -> RecoveryReport {
    let n = gt.n();
    debug_assert_eq!(x.n(), n);
    let mut on = Vec::new();
    let mut off = Vec::new();
    let mut false_zeros = 0;
    let mut false_nonzeros = 0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mag = x.get(i, j).abs();
            let nonzero = mag > threshold;
            if gt.support.contains(&(i, j)) {
                on.push(mag);
                if !nonzero {
                    false_zeros += 1;
                }
            } else {
                off.push(mag);
                if nonzero {
                    false_nonzeros += 1;
                }
            }
        }
    }
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let min_on_support = on.iter().copied().fold(f64::INFINITY, f64::min);
    let max_off_support = off.iter().copied().fold(0.0, f64::max);
    let error_percent = if n == 0 {
        0.0
    } else {
        100.0 * (false_zeros + false_nonzeros) as f64 / (n * n) as f64
    };
    RecoveryReport {
        min_on_support,
        mean_on_support: mean(&on),
        max_off_support,
        mean_off_support: mean(&off),
        false_zeros,
        false_nonzeros,
        error_percent,
        threshold_interval: (min_on_support > max_off_support)
            .then_some((max_off_support, min_on_support)),
    }
}

/// One `(rho, instance)` cell of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub rho: f64,
    pub seed: u64,
    pub report: Option<RecoveryReport>,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub gap: f64,
    pub wall_seconds: f64,
    pub error: Option<String>,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str =
        "rho,seed,error_percent,false_zeros,false_nonzeros,min_on_support,max_off_support,gap,wall_seconds";

    /// Row in the [`Self::CSV_HEADER`] column order. Failed solves leave the
    /// metric columns empty.
    pub fn csv_line(&self) -> String {
        match &self.report {
            Some(r) => format!(
                "{:?},{},{:?},{},{},{:?},{:?},{:?},{:?}",
                self.rho,
                self.seed,
                r.error_percent,
                r.false_zeros,
                r.false_nonzeros,
                r.min_on_support,
                r.max_off_support,
                self.gap,
                self.wall_seconds
            ),
            None => format!("{:?},{},,,,,,,{:?}", self.rho, self.seed, self.wall_seconds),
        }
    }
}

/// Solves one instance at one penalty and scores it.
pub fn sweep_cell(inst: &Instance, rho: f64, solver: &SolverConfig, threshold: f64) -> SweepRow {
    let start = Instant::now();
    let outcome = Problem::new(inst.sigma.clone(), rho).and_then(|p| solve(&p, solver));
    let wall_seconds = start.elapsed().as_secs_f64();
    match outcome {
        Ok(sol) => SweepRow {
            rho,
            seed: inst.seed,
            report: Some(recovery_report(&inst.truth, &sol.x, threshold)),
            primal_obj: sol.primal_obj,
            dual_obj: sol.dual_obj,
            gap: sol.gap,
            wall_seconds,
            error: None,
        },
        Err(e) => SweepRow {
            rho,
            seed: inst.seed,
            report: None,
            primal_obj: f64::NAN,
            dual_obj: f64::NAN,
            gap: f64::NAN,
            wall_seconds,
            error: Some(e.to_string()),
        },
    }
}

/// Solves every instance at every penalty. Solver failures are recorded in
/// the row and the sweep continues.
pub fn rho_sweep(
    instances: &[Instance],
    rho_values: &[f64],
    solver: &SolverConfig,
    threshold: f64,
) -> Vec<SweepRow> {
    rho_values
        .iter()
        .flat_map(|&rho| {
            instances
                .iter()
                .map(move |inst| sweep_cell(inst, rho, solver, threshold))
        })
        .collect()
}

/// Per-penalty aggregate over instances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub rho: f64,
    pub runs: usize,
    pub failures: usize,
    pub mean_error_percent: f64,
    /// Sample standard deviation (zero for a single run).
    pub std_error_percent: f64,
    pub mean_min_on_support: f64,
    pub mean_max_off_support: f64,
    pub exact_recoveries: usize,
}

impl SweepSummary {
    pub const CSV_HEADER: &'static str = "rho,runs,failures,mean_error_percent,std_error_percent,mean_min_on_support,mean_max_off_support,exact_recoveries";

    pub fn csv_line(&self) -> String {
        format!(
            "{:?},{},{},{:?},{:?},{:?},{:?},{}",
            self.rho,
            self.runs,
            self.failures,
            self.mean_error_percent,
            self.std_error_percent,
            self.mean_min_on_support,
            self.mean_max_off_support,
            self.exact_recoveries
        )
    }
}

/// Groups rows by penalty, in first-seen order.
pub fn summarize(rows: &[SweepRow]) -> Vec<SweepSummary> {
    let mut rhos: Vec<f64> = Vec::new();
    for r in rows {
        if !rhos.iter().any(|&x| x == r.rho) {
            rhos.push(r.rho);
        }
    }
    rhos.into_iter()
        .map(|rho| {
            let group: Vec<&SweepRow> = rows.iter().filter(|r| r.rho == rho).collect();
            let reports: Vec<&RecoveryReport> =
                group.iter().filter_map(|r| r.report.as_ref()).collect();
            let k = reports.len() as f64;
            let errors: Vec<f64> = reports.iter().map(|r| r.error_percent).collect();
            let mean = if reports.is_empty() { f64::NAN } else { errors.iter().sum::<f64>() / k };
            let std = if reports.len() > 1 {
                (errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
            } else if reports.len() == 1 {
                0.0
            } else {
                f64::NAN
            };
            let avg = |f: fn(&RecoveryReport) -> f64| {
                if reports.is_empty() {
                    f64::NAN
                } else {
                    reports.iter().map(|r| f(r)).sum::<f64>() / k
                }
            };
            SweepSummary {
                rho,
                runs: group.len(),
                failures: group.len() - reports.len(),
                mean_error_percent: mean,
                std_error_percent: std,
                mean_min_on_support: avg(|r| r.min_on_support),
                mean_max_off_support: avg(|r| r.max_off_support),
                exact_recoveries: reports.iter().filter(|r| r.exact_recovery_possible()).count(),
            }
        })
        .collect()
}
