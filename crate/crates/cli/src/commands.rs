use std::fmt::Write as _;
use std::process::ExitCode;
use std::time::Instant;

use covsel::io::{format_dense, format_support, support_of};
use covsel::linalg::inverse_spd;
use covsel::synth::{make_instance, summarize, sweep_cell, SweepRow, SweepSummary};
use covsel::{solve as run_solver, Problem, Solution, SolverConfig, SolverKind};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::files::{read_matrix, write_json, write_text, CliError, CliResult};
use crate::{BenchArgs, BudgetArgs, GenArgs, RecoverArgs, SolveArgs};

/// Exit status when the iteration or sweep budget ran out before the gap
/// reached epsilon.
const EXIT_BUDGET: u8 = 2;

fn solver_config(kind: SolverKind, epsilon: f64, budget: &BudgetArgs) -> SolverConfig {
    SolverConfig {
        max_sweeps: budget.max_sweeps,
        max_iters: budget.max_iters,
        trace_every: budget.trace_every,
        ..SolverConfig::new(kind, epsilon)
    }
}

fn warn_all(sol: &Solution) {
    for w in &sol.warnings {
        eprintln!("warning: {w}");
    }
}

/// JSON has no infinities; write them as "inf"/"-inf"/"nan" instead of null.
fn real<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&v.to_string().to_lowercase())
    }
}

#[derive(Serialize)]
struct SolveReport<'a> {
    n: usize,
    rho: f64,
    solver: &'a str,
    #[serde(serialize_with = "real")]
    primal_obj: f64,
    #[serde(serialize_with = "real")]
    dual_obj: f64,
    #[serde(serialize_with = "real")]
    gap: f64,
    iterations: usize,
    wall_seconds: f64,
}

pub fn solve(args: &SolveArgs) -> CliResult<ExitCode> {
    if !(args.threshold >= 0.0) {
        return Err(CliError::Usage(format!("--threshold must be >= 0, got {}", args.threshold)));
    }
    let sigma = read_matrix(&args.input)?;
    let p = Problem::with_bounds(
        sigma,
        args.rho,
        args.alpha.unwrap_or(0.0),
        args.beta.unwrap_or(f64::INFINITY),
    )?;
    let cfg = solver_config(args.solver, args.epsilon, &args.budget);
    let start = Instant::now();
    let sol = run_solver(&p, &cfg)?;
    let wall_seconds = start.elapsed().as_secs_f64();
    warn_all(&sol);

    write_text(&args.out_dir.join("X.txt"), &format_dense(&sol.x))?;
    write_text(&args.out_dir.join("sigma_hat.txt"), &format_dense(&sol.sigma_hat))?;
    write_text(
        &args.out_dir.join("support.mtx"),
        &format_support(p.n(), &support_of(&sol.x, args.threshold)),
    )?;
    let report = SolveReport {
        n: p.n(),
        rho: p.rho(),
        solver: args.solver.name(),
        primal_obj: sol.primal_obj,
        dual_obj: sol.dual_obj,
        gap: sol.gap,
        iterations: sol.iterations,
        wall_seconds,
    };
    write_json(&args.out_dir.join("report.json"), &report)?;
    if let Some(path) = &args.trace {
        let mut csv = String::from("iteration,seconds,gap\n");
        for t in &sol.trace {
            let _ = writeln!(csv, "{},{:?},{:?}", t.iteration, t.seconds, t.gap);
        }
        write_text(path, &csv)?;
    }

    if sol.gap <= args.epsilon {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "budget exhausted after {} iterations: gap {:e} > epsilon {:e}",
            sol.iterations, sol.gap, args.epsilon
        );
        Ok(ExitCode::from(EXIT_BUDGET))
    }
}

fn check_generator(n: usize, density: f64, sigma: f64) -> CliResult<()> {
    if n < 2 {
        return Err(CliError::Usage(format!("--n must be at least 2, got {n}")));
    }
    if !(density > 0.0 && density < 1.0) {
        return Err(CliError::Usage(format!("--density must lie in (0, 1), got {density}")));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(CliError::Usage(format!("--sigma must be finite and >= 0, got {sigma}")));
    }
    Ok(())
}

pub fn gen(args: &GenArgs) -> CliResult<()> {
    check_generator(args.n, args.density, args.sigma)?;
    let inst = make_instance(args.n, args.density, args.sigma, args.seed)?;
    let a_inv = inverse_spd(&inst.truth.a)?;
    let dir = &args.out_dir;
    write_text(&dir.join("A.txt"), &format_dense(&inst.truth.a))?;
    write_text(&dir.join("A_inv.txt"), &format_dense(&a_inv))?;
    write_text(&dir.join("sigma.txt"), &format_dense(&inst.sigma))?;
    write_text(
        &dir.join("support.mtx"),
        &format_support(args.n, &inst.truth.support),
    )?;
    Ok(())
}

#[derive(Serialize)]
struct RecoverSummary<'a> {
    n: usize,
    density: f64,
    sigma: f64,
    threshold: f64,
    solver: &'a str,
    epsilon: f64,
    seeds: Vec<u64>,
    summary: &'a [SweepSummary],
    /// Penalty with the lowest mean error.
    best_rho: Option<f64>,
}

pub fn recover(args: &RecoverArgs) -> CliResult<()> {
    check_generator(args.n, args.density, args.sigma)?;
    let rhos = if args.rho.is_empty() {
        vec![args.sigma / 10.0, args.sigma, 10.0 * args.sigma]
    } else {
        args.rho.clone()
    };
    if let Some(bad) = rhos.iter().find(|r| !(**r >= 0.0) || !r.is_finite()) {
        return Err(CliError::Usage(format!("penalties must be finite and >= 0, got {bad}")));
    }
    let threshold = args.threshold.unwrap_or(args.sigma);
    let cfg = solver_config(args.solver, args.epsilon, &args.budget);
    let seeds: Vec<u64> = (args.first_seed..args.first_seed + args.seeds).collect();
    let instances = seeds
        .iter()
        .map(|&s| make_instance(args.n, args.density, args.sigma, s))
        .collect::<covsel::Result<Vec<_>>>()?;

    let cells: Vec<(f64, usize)> = rhos
        .iter()
        .flat_map(|&r| (0..instances.len()).map(move |i| (r, i)))
        .collect();
    let rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|&(rho, i)| sweep_cell(&instances[i], rho, &cfg, threshold))
        .collect();
    for r in &rows {
        if let Some(e) = &r.error {
            eprintln!("warning: rho={} seed={}: {e}", r.rho, r.seed);
        }
    }
    let summary = summarize(&rows);

    let mut rows_csv = format!("{}\n", SweepRow::CSV_HEADER);
    for r in &rows {
        rows_csv.push_str(&r.csv_line());
        rows_csv.push('\n');
    }
    let mut summary_csv = format!("{}\n", SweepSummary::CSV_HEADER);
    for s in &summary {
        summary_csv.push_str(&s.csv_line());
        summary_csv.push('\n');
    }
    let best_rho = summary
        .iter()
        .filter(|s| s.mean_error_percent.is_finite())
        .min_by(|a, b| a.mean_error_percent.total_cmp(&b.mean_error_percent))
        .map(|s| s.rho);

    let dir = &args.out_dir;
    write_text(&dir.join("rows.csv"), &rows_csv)?;
    write_text(&dir.join("summary.csv"), &summary_csv)?;
    write_json(
        &dir.join("summary.json"),
        &RecoverSummary {
            n: args.n,
            density: args.density,
            sigma: args.sigma,
            threshold,
            solver: args.solver.name(),
            epsilon: args.epsilon,
            seeds,
            summary: &summary,
            best_rho,
        },
    )
}

/// Cells run one after another so timings are not distorted by contention.
pub fn bench(args: &BenchArgs) -> CliResult<()> {
    let mut csv = String::from("n,solver,seconds,gap\n");
    for &n in &args.sizes {
        check_generator(n, args.density, args.sigma)?;
        let inst = make_instance(n, args.density, args.sigma, args.seed)?;
        let p = Problem::new(inst.sigma, args.rho)?;
        for &kind in &args.solvers {
            let cfg = solver_config(kind, args.epsilon, &args.budget);
            let start = Instant::now();
            let sol = run_solver(&p, &cfg)?;
            let seconds = start.elapsed().as_secs_f64();
            warn_all(&sol);
            if sol.gap > args.epsilon {
                eprintln!("warning: n={n} {kind}: gap {:e} above epsilon", sol.gap);
            }
            let _ = writeln!(csv, "{n},{kind},{seconds:?},{:?}", sol.gap);
        }
    }
    write_text(&args.out, &csv)
}
