//! Solver front end: arc elimination, exact search or multi-start LNS,
//! wall-clock limits and thread control.

use std::time::Instant;

use esbrp_core::budget::{Budget, Unlimited};
use esbrp_core::eval::ChargePolicy;
use esbrp_core::exact::{solve_exact, SolveError, SolveResult};
use esbrp_core::instance::Instance;
use esbrp_core::lns::{solve_lns_with, LnsConfig, LnsError};
use esbrp_core::preprocess::{eliminate_arcs, ArcMask};
use rayon::prelude::*;
use thiserror::Error;

use crate::budget::Deadline;

#[derive(Debug, Clone, PartialEq)]
pub enum Solver {
    Exact {
        time_limit: Option<f64>,
    },
    /// `starts` independent runs with seeds `cfg.seed + i`; the best wins,
    /// ties going to the lowest start index.
    Lns {
        cfg: LnsConfig,
        starts: usize,
        time_limit: Option<f64>,
    },
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Exact(#[from] SolveError),
    #[error(transparent)]
    Lns(#[from] LnsError),
}

impl RunError {
    /// True when the instance (not the configuration) admits no solution
    /// the solver could find.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            RunError::Exact(SolveError::Infeasible { .. } | SolveError::NoIncumbent)
                | RunError::Lns(LnsError::InfeasibleStart { .. })
        )
    }
}

fn budget(time_limit: Option<f64>) -> Box<dyn Budget + Sync> {
    match time_limit {
        Some(s) => Box::new(Deadline::seconds(s)),
        None => Box::new(Unlimited),
    }
}

/// Runs `solver` on `mask` under `policy` (the LNS configuration's own
/// policy is overridden).
pub fn run_with_mask(inst: &Instance, mask: &ArcMask, policy: ChargePolicy, solver: &Solver) -> Result<SolveResult, RunError> {
    let start = Instant::now();
    let mut res = match solver {
        Solver::Exact { time_limit } => solve_exact(inst, mask, policy, budget(*time_limit).as_ref())?,
        Solver::Lns { cfg, starts, time_limit } => {
            let deadline = budget(*time_limit);
            let runs: Vec<Result<SolveResult, LnsError>> = (0..(*starts).max(1))
                .into_par_iter()
                .map(|i| {
                    let cfg = LnsConfig {
                        seed: cfg.seed.wrapping_add(i as u64),
                        policy,
                        ..cfg.clone()
                    };
                    solve_lns_with(inst, mask, &cfg, deadline.as_ref(), None)
                })
                .collect();
            let mut best: Option<SolveResult> = None;
            let mut first_err = None;
            for r in runs {
                match r {
                    Ok(r) => {
                        if best.as_ref().is_none_or(|b| r.objective.total < b.objective.total) {
                            best = Some(r);
                        }
                    }
                    Err(e) => {
                        first_err.get_or_insert(e);
                    }
                }
            }
            match best {
                Some(b) => b,
                None => return Err(first_err.expect("at least one start ran").into()),
            }
        }
    };
    res.wall_time = start.elapsed().as_secs_f64();
    Ok(res)
}

/// Eliminates arcs with every rule, then solves.
pub fn run(inst: &Instance, policy: ChargePolicy, solver: &Solver) -> Result<SolveResult, RunError> {
    run_with_mask(inst, &eliminate_arcs(inst), policy, solver)
}

/// Sizes the global thread pool from `ESBRP_THREADS` when set. Safe to
/// call more than once.
pub fn init_threads() {
    if let Some(n) = std::env::var("ESBRP_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}
