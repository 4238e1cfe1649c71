//! Runs every solver over a grid of latency targets and seeds and
//! summarizes the outcomes per solver and target.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::BilinearEstimator;
use crate::oracle::LatencyModel;
use crate::space::SearchSpace;

use super::{
    better, bcfw_search, evolutionary_search, exact_search, stage_choices, BcfwParams, EvoParams, Problem, SearchResult,
    SolverKind, StageChoice, DEFAULT_EXACT_CAP,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompareParams {
    pub bcfw: BcfwParams,
    pub evo: EvoParams,
    pub exact_cap: u128,
}

impl Default for CompareParams {
    fn default() -> Self {
        CompareParams { bcfw: BcfwParams::default(), evo: EvoParams::default(), exact_cap: DEFAULT_EXACT_CAP }
    }
}

/// One (target, seed, solver) run; errors are kept rather than propagated.
#[derive(Clone, Debug)]
pub struct CellOutcome {
    pub target: f64,
    pub seed: u64,
    pub solver: SolverKind,
    pub outcome: std::result::Result<SearchResult, CellFailure>,
}

/// Why a cell produced no result.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellFailure {
    pub message: String,
    /// The latency target could not be met (as opposed to invalid input).
    pub infeasible: bool,
}

impl From<Error> for CellFailure {
    fn from(e: Error) -> Self {
        CellFailure {
            infeasible: matches!(e, Error::Infeasible { .. } | Error::FeasibilitySampling { .. }),
            message: e.to_string(),
        }
    }
}

/// Mean and population standard deviation over the successful runs of one
/// solver at one target.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverSummary {
    pub target: f64,
    pub solver: SolverKind,
    pub runs: usize,
    pub failures: usize,
    pub acc_mean: f64,
    pub acc_std: f64,
    pub latency_mean: f64,
    pub latency_std: f64,
}

/// The best feasible result among the three solvers for one (target, seed).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BestOfThree {
    pub target: f64,
    pub seed: u64,
    /// `None` when no solver returned a feasible architecture.
    pub solver: Option<SolverKind>,
    pub predicted_acc: Option<f64>,
    pub latency_ms: Option<f64>,
    pub arch: Option<Vec<StageChoice>>,
}

#[derive(Clone, Debug)]
pub struct CompareReport {
    pub cells: Vec<CellOutcome>,
    pub summaries: Vec<SolverSummary>,
    pub best: Vec<BestOfThree>,
}

/// Runs one solver the way [`compare_solvers`] runs the cell of target
/// index `t_idx`: the rng is `seed` on stream `3 t_idx + solver id`.
pub fn run_solver(pr: &Problem<'_, f64>, solver: SolverKind, params: &CompareParams, t_idx: usize, seed: u64) -> Result<SearchResult> {
    let solver_id = SolverKind::ALL.iter().position(|&k| k == solver).unwrap_or(0) as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t_idx as u64 * SolverKind::ALL.len() as u64 + solver_id);
    match solver {
        SolverKind::Bcfw => bcfw_search(pr, &params.bcfw, &mut rng, None, seed).map(|r| r.result),
        SolverKind::Evo => evolutionary_search(pr, &params.evo, &mut rng, seed),
        SolverKind::Exact => exact_search(pr, params.exact_cap, seed),
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, v.sqrt())
}

/// Runs all three solvers on every (target, seed) cell concurrently. Each
/// cell draws from its own stream of the seed, so the report does not depend
/// on scheduling.
pub fn compare_solvers(
    space: &SearchSpace,
    est: &BilinearEstimator<f64>,
    lat: &LatencyModel<f64>,
    targets: &[f64],
    seeds: &[u64],
    params: &CompareParams,
) -> Result<CompareReport> {
    if targets.is_empty() || seeds.is_empty() {
        return Err(Error::arg("compare needs at least one target and one seed"));
    }
    if let Some(t) = targets.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::arg(format!("latency target must be positive, got {t}")));
    }
    let jobs: Vec<(usize, u64, SolverKind)> = (0..targets.len())
        .flat_map(|ti| seeds.iter().flat_map(move |&s| SolverKind::ALL.into_iter().map(move |k| (ti, s, k))))
        .collect();
    let cells: Vec<CellOutcome> = jobs
        .par_iter()
        .map(|&(ti, seed, solver)| CellOutcome {
            target: targets[ti],
            seed,
            solver,
            outcome: run_solver(&Problem { space, est, lat, target: targets[ti] }, solver, params, ti, seed).map_err(CellFailure::from),
        })
        .collect();

    let mut summaries = Vec::new();
    for &t in targets {
        for solver in SolverKind::ALL {
            let ok: Vec<&SearchResult> = cells
                .iter()
                .filter(|c| c.target == t && c.solver == solver)
                .filter_map(|c| c.outcome.as_ref().ok())
                .collect();
            let total = cells.iter().filter(|c| c.target == t && c.solver == solver).count();
            let accs: Vec<f64> = ok.iter().map(|r| r.predicted_acc).collect();
            let lats: Vec<f64> = ok.iter().map(|r| r.latency_ms).collect();
            let (acc_mean, acc_std) = mean_std(&accs);
            let (latency_mean, latency_std) = mean_std(&lats);
            summaries.push(SolverSummary {
                target: t,
                solver,
                runs: ok.len(),
                failures: total - ok.len(),
                acc_mean,
                acc_std,
                latency_mean,
                latency_std,
            });
        }
    }

    let mut best = Vec::new();
    for &t in targets {
        for &seed in seeds {
            let mut pick: Option<&SearchResult> = None;
            for c in cells.iter().filter(|c| c.target == t && c.seed == seed) {
                let Ok(r) = &c.outcome else { continue };
                if !r.feasible() {
                    continue;
                }
                let wins = match pick {
                    None => true,
                    Some(p) => better((r.predicted_acc, r.latency_ms, &r.arch), (p.predicted_acc, p.latency_ms, &p.arch)),
                };
                if wins {
                    pick = Some(r);
                }
            }
            best.push(BestOfThree {
                target: t,
                seed,
                solver: pick.map(|r| r.solver),
                predicted_acc: pick.map(|r| r.predicted_acc),
                latency_ms: pick.map(|r| r.latency_ms),
                arch: pick.map(|r| stage_choices(space, &r.arch)),
            });
        }
    }
    Ok(CompareReport { cells, summaries, best })
}
