//! Solvers for the latency-constrained selection problem
//! `max ACC(zeta)  s.t.  LAT(zeta) <= T` over discrete architectures:
//! block-coordinate Frank-Wolfe on the continuous relaxation followed by
//! rounding, evolutionary search, and exact branch-and-bound.

mod bcfw;
mod compare;
mod evolution;
mod exact;
mod lp;
mod rounding;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::estimator::BilinearEstimator;
use crate::oracle::LatencyModel;
use crate::scalar::Scalar;
use crate::space::{Architecture, SearchSpace};

pub use bcfw::{bcfw_search, min_latency_arch, BcfwParams, BcfwRun};
pub use compare::{compare_solvers, run_solver, BestOfThree, CellFailure, CellOutcome, CompareParams, CompareReport, SolverSummary};
pub use evolution::{evolutionary_search, EvoParams};
pub use exact::{exact_search, DEFAULT_EXACT_CAP};
pub use lp::{lp_solve, lp_solve_priced, LpSubproblem};
pub use rounding::{fractional_groups, round_solution, Rounded};

/// One instance of the selection problem: maximize the estimator's
/// accuracy subject to `latency <= target`.
#[derive(Clone, Copy, Debug)]
pub struct Problem<'a, T> {
    pub space: &'a SearchSpace,
    pub est: &'a BilinearEstimator<T>,
    pub lat: &'a LatencyModel<T>,
    pub target: T,
}

impl<T: Scalar> Problem<'_, T> {
    pub fn acc(&self, arch: &Architecture) -> T {
        self.est.of_arch(self.space, arch)
    }

    pub fn latency(&self, arch: &Architecture) -> T {
        self.lat.of_arch(self.space, arch)
    }

    pub fn feasible(&self, arch: &Architecture) -> bool {
        self.latency(arch) <= self.target
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Bcfw,
    Evo,
    Exact,
}

impl SolverKind {
    pub const ALL: [SolverKind; 3] = [SolverKind::Bcfw, SolverKind::Evo, SolverKind::Exact];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Bcfw => "bcfw",
            SolverKind::Evo => "evo",
            SolverKind::Exact => "exact",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iter: usize,
    pub obj: f64,
    pub lat: f64,
}

/// One stage of a serialized architecture: its depth and the 1-based config
/// ids of its active blocks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageChoice {
    pub depth: usize,
    pub configs: Vec<usize>,
}

/// Serializes only the active part of an architecture.
pub fn stage_choices(space: &SearchSpace, arch: &Architecture) -> Vec<StageChoice> {
    (0..space.num_stages())
        .map(|s| {
            let d = arch.depth(space, s);
            StageChoice { depth: d, configs: arch.config[s][..d].iter().map(|c| c + 1).collect() }
        })
        .collect()
}

/// Inverse of [`stage_choices`]; inactive blocks get config 0.
pub fn arch_from_choices(space: &SearchSpace, choices: &[StageChoice]) -> crate::Result<Architecture> {
    use crate::error::Error;
    if choices.len() != space.num_stages() {
        return Err(Error::Dimension { what: "stages", expected: space.num_stages(), got: choices.len() });
    }
    let mut arch = Architecture::first(space);
    for (s, ch) in choices.iter().enumerate() {
        let j = space
            .depth_choices(s)
            .iter()
            .position(|&d| d == ch.depth)
            .ok_or_else(|| Error::InvalidIndex(format!("depth {} not allowed in stage {}", ch.depth, s + 1)))?;
        if ch.configs.len() != ch.depth {
            return Err(Error::Dimension { what: "stage configs", expected: ch.depth, got: ch.configs.len() });
        }
        arch.depth_choice[s] = j;
        for (b, &c) in ch.configs.iter().enumerate() {
            if c == 0 || c > space.num_configs() {
                return Err(Error::InvalidIndex(format!("config id {c}")));
            }
            arch.config[s][b] = c - 1;
        }
    }
    Ok(arch)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ResultFile {
    arch: Vec<StageChoice>,
    predicted_acc: f64,
    latency_ms: f64,
    deviation: f64,
    solver: SolverKind,
    seed: u64,
    trace: Vec<TraceEntry>,
}

/// Outcome of one solver run.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    /// Canonical architecture (inactive blocks at config 0).
    pub arch: Architecture,
    pub predicted_acc: f64,
    pub latency_ms: f64,
    /// `(latency - T) / T`; positive only for over-budget rounded results.
    pub deviation: f64,
    pub solver: SolverKind,
    pub seed: u64,
    pub trace: Vec<TraceEntry>,
    /// Not serialized, so result files stay reproducible.
    pub wall_time: Duration,
}

impl SearchResult {
    pub(crate) fn new<T: Scalar>(problem: &Problem<'_, T>, arch: Architecture, solver: SolverKind, seed: u64) -> Self {
        let arch = arch.canonical(problem.space);
        let latency = problem.latency(&arch).to_f();
        let t = problem.target.to_f();
        SearchResult {
            predicted_acc: problem.acc(&arch).to_f(),
            latency_ms: latency,
            deviation: (latency - t) / t,
            arch,
            solver,
            seed,
            trace: Vec::new(),
            wall_time: Duration::ZERO,
        }
    }

    pub fn to_json(&self, space: &SearchSpace) -> crate::Result<String> {
        crate::io::to_canonical_json(&ResultFile {
            arch: stage_choices(space, &self.arch),
            predicted_acc: self.predicted_acc,
            latency_ms: self.latency_ms,
            deviation: self.deviation,
            solver: self.solver,
            seed: self.seed,
            trace: self.trace.clone(),
        })
    }

    pub fn from_json(space: &SearchSpace, text: &str) -> crate::Result<Self> {
        let f: ResultFile = serde_json::from_str(text)?;
        Ok(SearchResult {
            arch: arch_from_choices(space, &f.arch)?,
            predicted_acc: f.predicted_acc,
            latency_ms: f.latency_ms,
            deviation: f.deviation,
            solver: f.solver,
            seed: f.seed,
            trace: f.trace,
            wall_time: Duration::ZERO,
        })
    }

    /// Whether the latency respects the target.
    pub fn feasible(&self) -> bool {
        self.deviation <= 0.0
    }
}

/// Strict preference between two evaluated architectures: higher accuracy,
/// then lower latency, then lexicographically smaller.
pub(crate) fn better<T: Scalar>(a: (T, T, &Architecture), b: (T, T, &Architecture)) -> bool {
    if a.0 != b.0 {
        return a.0 > b.0;
    }
    if a.1 != b.1 {
        return a.1 < b.1;
    }
    a.2 < b.2
}
