mod common;

use common::*;
use covsel::io::{format_dense, parse_matrix, support_of};
use covsel::synth::{make_instance, recovery_report, rho_sweep, summarize};
use covsel::{solve, Problem, SolverConfig, SolverKind, SymMatrix};

#[test]
fn all_solvers_agree_on_small_instances() {
    let mut rng = rng(41);
    for n in [2, 4, 6] {
        let p = random_problem(&mut rng, n);
        let r = reference_solve(&p, 1e-7);
        for kind in SolverKind::ALL {
            let mut cfg = SolverConfig::new(kind, 1e-4);
            cfg.max_sweeps = 500;
            cfg.max_iters = Some(2_000_000);
            let sol = solve(&p, &cfg).unwrap();
            assert!(sol.converged, "{kind} n={n}");
            assert!(sol.gap <= 1e-4 && sol.gap >= -1e-7, "{kind} gap {}", sol.gap);
            assert!((sol.dual_obj - r.dual_obj).abs() <= 1e-4 + r.gap, "{kind} n={n}");
            assert!(sol.sigma_hat.max_abs_diff(p.sigma()) <= p.rho() + 1e-9);
        }
    }
}

#[test]
fn diagonal_input_is_solved_exactly_by_bcd() {
    let p = Problem::new(SymMatrix::identity(5), 0.1).unwrap();
    let sol = solve(&p, &SolverConfig::new(SolverKind::Bcd, 1e-8)).unwrap();
    assert!(sol.x.max_abs_diff(&SymMatrix::scaled_identity(5, 1.0 / 1.1)) < 1e-12);
    assert_eq!(sol.iterations, 1);
}

#[test]
fn trace_is_monotone_in_time_and_iteration() {
    let mut rng = rng(42);
    let p = random_problem(&mut rng, 8);
    for kind in SolverKind::ALL {
        let mut cfg = SolverConfig::new(kind, 1e-3);
        cfg.max_iters = Some(200_000);
        let sol = solve(&p, &cfg).unwrap();
        assert!(!sol.trace.is_empty());
        for w in sol.trace.windows(2) {
            assert!(w[1].iteration > w[0].iteration);
            assert!(w[1].seconds >= w[0].seconds);
        }
        assert_eq!(sol.trace.last().unwrap().gap, sol.gap, "{kind}");
    }
}

#[test]
fn noise_free_instance_is_recovered() {
    let inst = make_instance(20, 0.1, 0.0, 3).unwrap();
    let p = Problem::new(inst.sigma.clone(), 0.01).unwrap();
    let sol = solve(&p, &SolverConfig::new(SolverKind::Bcd, 1e-6)).unwrap();
    let report = recovery_report(&inst.truth, &sol.x, 0.05);
    assert!(report.threshold_interval.is_some(), "{report:?}");
    assert_eq!(report.false_zeros + report.false_nonzeros, 0);
    let support = support_of(&sol.x, 0.05);
    assert_eq!(support, inst.truth.support);
}

#[test]
fn sweep_rows_and_summary_line_up() {
    let instances: Vec<_> = (0..3).map(|s| make_instance(8, 0.2, 0.0, s).unwrap()).collect();
    let cfg = SolverConfig::new(SolverKind::Bcd, 1e-3);
    let rows = rho_sweep(&instances, &[0.01, 0.1], &cfg, 0.05);
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.error.is_none()));
    let summary = summarize(&rows);
    assert_eq!(summary.len(), 2);
    assert_eq!(summary[0].rho, 0.01);
    assert!(summary.iter().all(|s| s.runs == 3 && s.failures == 0));
}

#[test]
fn sweep_records_failures_and_continues() {
    // rho = 0 on an indefinite input cannot be initialized.
    let mut inst = make_instance(6, 0.3, 0.0, 1).unwrap();
    inst.sigma = SymMatrix::from_diagonal(&[1.0, -1.0, 1.0, 1.0, 1.0, 1.0]);
    let rows = rho_sweep(&[inst], &[0.0, 2.0], &SolverConfig::new(SolverKind::Bcd, 1e-3), 0.1);
    assert!(rows[0].error.is_some());
    assert!(rows[0].csv_line().contains(",,"));
    assert!(rows[1].error.is_none());
    assert_eq!(summarize(&rows)[0].failures, 1);
}

#[test]
fn generated_instance_survives_a_text_round_trip() {
    let inst = make_instance(30, 0.1, 0.13, 7).unwrap();
    let back = parse_matrix(&format_dense(&inst.sigma)).unwrap();
    assert_eq!(back, inst.sigma);
}
