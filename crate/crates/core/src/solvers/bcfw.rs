//! Block-coordinate Frank-Wolfe on the continuous relaxation.
//!
//! Accuracy and latency are both affine in `alpha` for fixed `beta` and vice
//! versa, so each iteration linearizes in one randomly chosen block, solves
//! the resulting relaxed multiple-choice knapsack LP exactly, and replaces
//! the block with the LP optimum: on a bilinear objective the exact line
//! search always returns step size 1.

use std::ops::Range;
use std::time::Instant;

use rand::Rng;

use crate::error::{Error, Result};
use crate::oracle::LatencyModel;
use crate::scalar::Scalar;
use crate::space::{argmax, discretize, ArchPoint, Architecture, Group, PointMode, SearchSpace};
use crate::{bilinear, scalar};

use super::lp::{lp_solve, lp_solve_priced, LpSubproblem};
use super::rounding::{fractional_groups, round_solution, Rounded};
use super::{better, Problem, SearchResult, SolverKind, TraceEntry};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BcfwParams {
    pub iterations: usize,
    /// Probability of updating the `alpha` block in an iteration.
    pub p_block: f64,
    /// After the final iteration, fix `beta` to each candidate of its
    /// rounding, re-solve the `alpha` block there and round that instead;
    /// the best feasible outcome (or the plain rounding) is kept.
    pub resolve_alpha: bool,
}

impl Default for BcfwParams {
    fn default() -> Self {
        BcfwParams { iterations: 2000, p_block: 0.5, resolve_alpha: true }
    }
}

#[derive(Clone, Debug)]
pub struct BcfwRun<T> {
    /// Rounded discrete result.
    pub result: SearchResult,
    /// The continuous iterate before rounding.
    pub relaxed: ArchPoint<T>,
    pub rounding: Rounded,
}

/// Cheapest config of every block and the shallowest depth of every stage.
pub fn min_latency_arch<T: Scalar>(space: &SearchSpace, lat: &LatencyModel<T>) -> Architecture {
    let mut arch = Architecture::first(space);
    for s in 0..space.num_stages() {
        for b in 0..space.max_depth() {
            let g = space.alpha_group(s, b);
            let neg: Vec<T> = lat.block_latency[g].iter().map(|&t| -t).collect();
            arch.config[s][b] = argmax(&neg);
        }
    }
    arch
}

/// Budget for replacing a block whose current value is feasible: partial
/// sums taken in another order may exceed the budget by rounding, so it is
/// floored at the current cost and at the cheapest choice (never above the
/// current cost in exact arithmetic).
fn floored_budget<T: Scalar>(budget: T, groups: &[Range<usize>], costs: &[T], block: &[T]) -> T {
    let current = scalar::sum(costs.iter().zip(block).map(|(c, a)| *c * *a));
    let cheapest = scalar::sum(groups.iter().map(|g| {
        costs[g.clone()].iter().copied().fold(costs[g.start], |m, c| if c < m { c } else { m })
    }));
    [current, cheapest].into_iter().fold(budget, |b, x| if x > b { x } else { b })
}

/// Replaces `alpha` by the LP optimum at the current `beta`. With `floor`
/// the current block is known feasible (see [`floored_budget`]); without
/// it an unreachable budget is reported as infeasible.
fn alpha_step<T: Scalar>(pr: &Problem<'_, T>, budget: T, z: &mut ArchPoint<T>, floor: bool) -> Result<()> {
    let (space, est, lat) = (pr.space, pr.est, pr.lat);
    let gains = est.grad_alpha(space, &z.beta);
    let costs = bilinear::alpha_row(space, &lat.block_latency, &z.beta);
    let groups: Vec<_> = (0..space.num_stages())
        .flat_map(|s| (0..space.max_depth()).map(move |b| (s, b)))
        .map(|(s, b)| space.alpha_group(s, b))
        .collect();
    let budget = if floor { floored_budget(budget, &groups, &costs, &z.alpha) } else { budget };
    let (mut alpha, price) = lp_solve_priced(&LpSubproblem { groups, gains, costs, budget })?;
    // Blocks that no depth choice currently reaches have zero rows, so the
    // LP is indifferent to them. Pick the config the LP would choose for an
    // infinitesimal activation: the best gain net of latency at the budget's
    // dual price, so that a later depth increase is priced sensibly.
    for s in 0..space.num_stages() {
        let bs = &z.beta[space.beta_group(s)];
        for b in 0..space.max_depth() {
            if bilinear::active_mass(space, s, b, bs) == T::zero() {
                let g = space.alpha_group(s, b);
                let net: Vec<T> = g.clone().map(|i| est.config[i] - price * lat.block_latency[i]).collect();
                let best = argmax(&net);
                for (k, i) in g.enumerate() {
                    alpha[i] = if k == best { T::one() } else { T::zero() };
                }
            }
        }
    }
    z.alpha = alpha;
    Ok(())
}

fn beta_step<T: Scalar>(pr: &Problem<'_, T>, budget: T, z: &mut ArchPoint<T>) -> Result<()> {
    let (space, est, lat) = (pr.space, pr.est, pr.lat);
    let gains = est.grad_beta(space, &z.alpha);
    let costs = bilinear::beta_row(space, None, &lat.block_latency, &z.alpha);
    let groups: Vec<_> = (0..space.num_stages()).map(|s| space.beta_group(s)).collect();
    let budget = floored_budget(budget, &groups, &costs, &z.beta);
    z.beta = lp_solve(&LpSubproblem { groups, gains, costs, budget })?;
    Ok(())
}

/// Rounds `beta` first: for each candidate entry of its fractional group
/// (or the discrete `beta` itself) the `alpha` LP is re-solved at the
/// one-hot `beta` and the result rounded. Returns the best feasible
/// outcome when it beats `plain`, the rounding of the final iterate.
fn resolve_alpha<T: Scalar>(pr: &Problem<'_, T>, budget: T, z: &ArchPoint<T>, plain: &Rounded) -> Result<Option<Rounded>> {
    let space = pr.space;
    let mut betas = Vec::new();
    let frac = fractional_groups(space, z)?;
    let beta_frac = frac.iter().find_map(|(g, nz)| match g {
        Group::Beta { stage } => Some((*stage, nz)),
        Group::Alpha { .. } => None,
    });
    let discrete = discretize(z, space)?.beta;
    match beta_frac {
        Some((stage, nz)) => {
            let g = space.beta_group(stage);
            for &(i, _) in nz {
                let mut beta = discrete.clone();
                for k in g.clone() {
                    beta[k] = if k == g.start + i { T::one() } else { T::zero() };
                }
                betas.push(beta);
            }
        }
        None => betas.push(discrete),
    }
    let score = |r: &Rounded| (pr.acc(&r.arch), pr.latency(&r.arch));
    let mut best: Option<Rounded> = None;
    for beta in betas {
        let mut zc = ArchPoint { alpha: z.alpha.clone(), beta, mode: PointMode::Continuous };
        match alpha_step(pr, budget, &mut zc, false) {
            Ok(()) => {}
            Err(Error::Infeasible { .. }) => continue,
            Err(e) => return Err(e),
        }
        let r = round_solution(pr, &zc)?;
        if !r.feasible {
            continue;
        }
        let wins = match &best {
            None => true,
            Some(b) => {
                let ((ra, rl), (ba, bl)) = (score(&r), score(b));
                better((ra, rl, &r.arch), (ba, bl, &b.arch))
            }
        };
        if wins {
            best = Some(r);
        }
    }
    Ok(best.filter(|r| {
        if !plain.feasible {
            return true;
        }
        let ((ra, rl), (pa, pl)) = (score(r), score(plain));
        better((ra, rl, &r.arch), (pa, pl, &plain.arch))
    }))
}

/// Runs the block-coordinate Frank-Wolfe iterations from `start` (default:
/// the minimum-latency architecture) and rounds the final iterate (see
/// [`BcfwParams::resolve_alpha`]). The fixed
/// latency overhead is subtracted from the target before solving.
pub fn bcfw_search<T: Scalar, R: Rng + ?Sized>(
    pr: &Problem<'_, T>,
    params: &BcfwParams,
    rng: &mut R,
    start: Option<ArchPoint<T>>,
    seed: u64,
) -> Result<BcfwRun<T>> {
    let clock = Instant::now();
    let (space, est, lat, target) = (pr.space, pr.est, pr.lat, pr.target);
    if !(0.0..=1.0).contains(&params.p_block) {
        return Err(Error::arg(format!("p_block must lie in [0, 1], got {}", params.p_block)));
    }
    let mut z = match start {
        Some(p) => p,
        None => ArchPoint::from_arch(space, &min_latency_arch(space, lat)),
    };
    z.check_dims(space)?;
    let start_lat = lat.eval(space, &z)?;
    if start_lat > target {
        let min = lat.of_arch(space, &min_latency_arch(space, lat));
        return Err(Error::Infeasible { budget: target.to_f(), min_cost: min.to_f() });
    }
    z.mode = PointMode::Continuous;
    let budget = target - lat.fixed_overhead;
    let mut trace = Vec::with_capacity(params.iterations + 1);
    trace.push(TraceEntry { iter: 0, obj: est.eval_acc(space, &z)?.to_f(), lat: start_lat.to_f() });
    for k in 1..=params.iterations {
        if rng.random_bool(params.p_block) {
            alpha_step(pr, budget, &mut z, true)?;
        } else {
            beta_step(pr, budget, &mut z)?;
        }
        trace.push(TraceEntry { iter: k, obj: est.eval_acc(space, &z)?.to_f(), lat: lat.eval(space, &z)?.to_f() });
    }
    let mut rounding = round_solution(pr, &z)?;
    if params.resolve_alpha {
        if let Some(r) = resolve_alpha(pr, budget, &z, &rounding)? {
            rounding = r;
        }
    }
    let mut result = SearchResult::new(pr, rounding.arch.clone(), SolverKind::Bcfw, seed);
    result.trace = trace;
    result.wall_time = clock.elapsed();
    Ok(BcfwRun { result, relaxed: z, rounding })
}
