//! Uniform entry point over the three solvers.

use std::fmt;
use std::str::FromStr;

use crate::bcd::{bcd_solve, BcdConfig};
use crate::error::{Error, Result};
use crate::model::{Problem, Solution};
use crate::nesterov::{nesterov_solve, NesterovConfig, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Bcd,
    NesterovPrimal,
    NesterovDual,
}

impl SolverKind {
    pub const ALL: [SolverKind; 3] = [
        SolverKind::Bcd,
        SolverKind::NesterovPrimal,
        SolverKind::NesterovDual,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Bcd => "bcd",
            SolverKind::NesterovPrimal => "nesterov-primal",
            SolverKind::NesterovDual => "nesterov-dual",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown solver '{s}'")))
    }
}

/// Settings shared across solvers. `epsilon` is the gap target for every
/// solver and also the smoothing accuracy of the Nesterov variants.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub kind: SolverKind,
    pub epsilon: f64,
    pub max_sweeps: usize,
    pub qp_tol: f64,
    pub qp_max_iters: usize,
    pub max_iters: Option<usize>,
    pub trace_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let bcd = BcdConfig::default();
        let nesterov = NesterovConfig::default();
        Self {
            kind: SolverKind::Bcd,
            epsilon: bcd.gap_tol,
            max_sweeps: bcd.max_sweeps,
            qp_tol: bcd.qp_tol,
            qp_max_iters: bcd.qp_max_iters,
            max_iters: nesterov.max_iters,
            trace_every: nesterov.trace_every,
        }
    }
}

impl SolverConfig {
    pub fn new(kind: SolverKind, epsilon: f64) -> Self {
        Self {
            kind,
            epsilon,
            ..Self::default()
        }
    }

    pub fn bcd(&self) -> BcdConfig {
        BcdConfig {
            max_sweeps: self.max_sweeps,
            gap_tol: self.epsilon,
            qp_tol: self.qp_tol,
            qp_max_iters: self.qp_max_iters,
        }
    }

    pub fn nesterov(&self, variant: Variant) -> NesterovConfig {
        NesterovConfig {
            epsilon: self.epsilon,
            variant,
            max_iters: self.max_iters,
            trace_every: self.trace_every,
        }
    }
}

pub fn solve(p: &Problem, cfg: &SolverConfig) -> Result<Solution> {
    match cfg.kind {
        SolverKind::Bcd => bcd_solve(p, &cfg.bcd()),
        SolverKind::NesterovPrimal => nesterov_solve(p, &cfg.nesterov(Variant::Primal)),
        SolverKind::NesterovDual => nesterov_solve(p, &cfg.nesterov(Variant::Dual)),
    }
}
