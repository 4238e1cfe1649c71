//! Provably optimal search by branch-and-bound over per-stage options.
//!
//! Accuracy and latency of a discrete architecture are sums of per-stage
//! terms, so each stage contributes one option (depth plus active configs)
//! with an accuracy gain and a latency. Options dominated within their stage
//! are dropped, and the depth-first search prunes with the optimistic
//! completion `sum of the best remaining stage gains` and the cheapest
//! remaining latency.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::space::{stage_options, Architecture, StageOption};

use super::{Problem, SearchResult, SolverKind, TraceEntry};

/// Default limit on the number of effective architectures.
pub const DEFAULT_EXACT_CAP: u128 = 1_000_000;

struct Opt<T> {
    gain: T,
    lat: T,
    opt: StageOption,
}

/// `a` beats `b` within a stage: no worse in both terms and better in one,
/// or identical in both and lexicographically smaller.
fn dominates<T: Scalar>(a: &Opt<T>, b: &Opt<T>) -> bool {
    if a.gain >= b.gain && a.lat <= b.lat {
        if a.gain > b.gain || a.lat < b.lat {
            return true;
        }
        return (a.opt.depth_choice, &a.opt.config) < (b.opt.depth_choice, &b.opt.config);
    }
    false
}

struct Search<'p, 'a, T> {
    pr: &'p Problem<'a, T>,
    stages: Vec<Vec<Opt<T>>>,
    /// `best_rest[s]`: sum of the best gains of stages `s..`.
    best_rest: Vec<T>,
    /// `min_rest[s]`: sum of the cheapest latencies of stages `s..`.
    min_rest: Vec<T>,
    pick: Vec<usize>,
    incumbent: Option<(T, T, Vec<usize>)>,
    trace: Vec<TraceEntry>,
    nodes: usize,
    /// Rounding allowance for the pruning test; leaves are checked exactly.
    slack: T,
}

impl<T: Scalar> Search<'_, '_, T> {
    fn arch(&self, pick: &[usize]) -> Architecture {
        let mut a = Architecture::first(self.pr.space);
        for (s, &i) in pick.iter().enumerate() {
            a.depth_choice[s] = self.stages[s][i].opt.depth_choice;
            a.config[s].clone_from(&self.stages[s][i].opt.config);
        }
        a
    }

    fn visit(&mut self, s: usize, gain: T, lat: T) {
        self.nodes += 1;
        let budget = self.pr.target - self.pr.lat.fixed_overhead + self.slack;
        if s == self.stages.len() {
            // partial sums may differ from the canonical latency by rounding
            if !self.pr.feasible(&self.arch(&self.pick)) {
                return;
            }
            let wins = match &self.incumbent {
                None => true,
                Some((g, l, p)) => {
                    gain > *g || (gain == *g && (lat < *l || (lat == *l && self.arch(&self.pick) < self.arch(p))))
                }
            };
            if wins {
                self.incumbent = Some((gain, lat, self.pick.clone()));
                self.trace.push(TraceEntry {
                    iter: self.nodes,
                    obj: (self.pr.est.base + gain).to_f(),
                    lat: lat.to_f(),
                });
            }
            return;
        }
        for i in 0..self.stages[s].len() {
            let (g, l) = (self.stages[s][i].gain, self.stages[s][i].lat);
            let (ng, nl) = (gain + g, lat + l);
            if nl + self.min_rest[s + 1] > budget {
                continue;
            }
            if let Some((inc, _, _)) = &self.incumbent {
                if ng + self.best_rest[s + 1] < *inc {
                    // options are sorted by gain, so no later one can do better
                    break;
                }
            }
            self.pick[s] = i;
            self.visit(s + 1, ng, nl);
        }
    }
}

/// The optimal feasible architecture; ties go to lower latency, then to the
/// lexicographically smaller architecture. Refuses spaces with more than
/// `cap` effective architectures.
pub fn exact_search<T: Scalar>(pr: &Problem<'_, T>, cap: u128, seed: u64) -> Result<SearchResult> {
    let clock = Instant::now();
    let space = pr.space;
    let count = space.arch_count();
    if count > cap {
        return Err(Error::CapExceeded { count, cap });
    }
    let mut stages = Vec::with_capacity(space.num_stages());
    for s in 0..space.num_stages() {
        let mut opts: Vec<Opt<T>> = stage_options(space, s)
            .into_iter()
            .map(|opt| {
                let d = space.depth(s, opt.depth_choice);
                let mut gain = pr.est.depth[space.beta_group(s).start + opt.depth_choice];
                let mut lat = T::zero();
                for b in 0..d {
                    gain += pr.est.config[space.alpha_index(s, b, opt.config[b])];
                    lat += pr.lat.get(space, s, b, opt.config[b]);
                }
                Opt { gain, lat, opt }
            })
            .collect();
        // gain descending, then latency ascending, then lexicographic
        opts.sort_by(|a, b| {
            b.gain
                .partial_cmp(&a.gain)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.lat.partial_cmp(&b.lat).unwrap_or(std::cmp::Ordering::Equal))
                .then((a.opt.depth_choice, &a.opt.config).cmp(&(b.opt.depth_choice, &b.opt.config)))
        });
        // in this order a dominating option always precedes the ones it dominates
        let mut kept: Vec<Opt<T>> = Vec::new();
        for o in opts {
            if !kept.iter().any(|k| dominates(k, &o)) {
                kept.push(o);
            }
        }
        stages.push(kept);
    }
    let n = stages.len();
    let mut best_rest = vec![T::zero(); n + 1];
    let mut min_rest = vec![T::zero(); n + 1];
    for s in (0..n).rev() {
        best_rest[s] = best_rest[s + 1] + stages[s][0].gain;
        let mut m = stages[s][0].lat;
        for o in &stages[s] {
            if o.lat < m {
                m = o.lat;
            }
        }
        min_rest[s] = min_rest[s + 1] + m;
    }
    let slack = T::simplex_tol() * (T::one() + pr.target.abs());
    if min_rest[0] + pr.lat.fixed_overhead > pr.target + slack {
        return Err(Error::Infeasible { budget: pr.target.to_f(), min_cost: (min_rest[0] + pr.lat.fixed_overhead).to_f() });
    }
    let mut search = Search {
        pr,
        slack,
        stages,
        best_rest,
        min_rest,
        pick: vec![0; n],
        incumbent: None,
        trace: Vec::new(),
        nodes: 0,
    };
    search.visit(0, T::zero(), T::zero());
    let (_, _, pick) = search.incumbent.clone().ok_or_else(|| Error::Infeasible {
        budget: pr.target.to_f(),
        min_cost: (search.min_rest[0] + pr.lat.fixed_overhead).to_f(),
    })?;
    let arch = search.arch(&pick);
    let mut result = SearchResult::new(pr, arch, SolverKind::Exact, seed);
    result.trace = std::mem::take(&mut search.trace);
    result.wall_time = clock.elapsed();
    Ok(result)
}
