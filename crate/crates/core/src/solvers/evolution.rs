//! Evolutionary search over discrete architectures with hard latency
//! feasibility: every individual meets the target.

use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::space::Architecture;

use super::{better, Problem, SearchResult, SolverKind, TraceEntry};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvoParams {
    pub population: usize,
    /// Per-group probability of resampling during mutation.
    pub mutation_prob: f64,
    /// Fraction of the population kept as parents.
    pub parent_ratio: f64,
    /// Fraction of the population produced by mutation; the rest beyond the
    /// parents comes from crossover.
    pub mutation_ratio: f64,
    pub iterations: usize,
}

impl Default for EvoParams {
    fn default() -> Self {
        EvoParams { population: 100, mutation_prob: 0.1, parent_ratio: 0.25, mutation_ratio: 0.5, iterations: 500 }
    }
}

impl EvoParams {
    fn check(&self) -> Result<()> {
        let ok = self.population >= 1
            && (0.0..=1.0).contains(&self.mutation_prob)
            && self.parent_ratio > 0.0
            && self.mutation_ratio >= 0.0
            && self.parent_ratio + self.mutation_ratio <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::arg(format!("invalid evolution parameters {self:?}")))
        }
    }
}

fn mutate<R: Rng + ?Sized>(pr: &Problem<'_, impl Scalar>, parent: &Architecture, prob: f64, rng: &mut R) -> Architecture {
    let space = pr.space;
    let mut child = parent.clone();
    for s in 0..space.num_stages() {
        for b in 0..space.max_depth() {
            if rng.random_bool(prob) {
                child.config[s][b] = rng.random_range(0..space.num_configs());
            }
        }
        if rng.random_bool(prob) {
            child.depth_choice[s] = rng.random_range(0..space.depth_choices(s).len());
        }
    }
    child
}

fn crossover<R: Rng + ?Sized>(pr: &Problem<'_, impl Scalar>, a: &Architecture, b: &Architecture, rng: &mut R) -> Architecture {
    let space = pr.space;
    let mut child = a.clone();
    for s in 0..space.num_stages() {
        for blk in 0..space.max_depth() {
            if rng.random_bool(0.5) {
                child.config[s][blk] = b.config[s][blk];
            }
        }
        if rng.random_bool(0.5) {
            child.depth_choice[s] = b.depth_choice[s];
        }
    }
    child
}

/// A population member. Configs of inactive blocks are kept in `genome` so
/// that a later depth increase inherits them; ranking uses the canonical form.
#[derive(Clone)]
struct Member<T> {
    acc: T,
    lat: T,
    canonical: Architecture,
    genome: Architecture,
}

impl<T: Scalar> Member<T> {
    fn key(&self) -> (T, T, &Architecture) {
        (self.acc, self.lat, &self.canonical)
    }
}

/// Sorts best first: accuracy, then latency, then lexicographic order.
fn rank<T: Scalar>(pop: &mut [Member<T>]) {
    pop.sort_by(|x, y| {
        if better(x.key(), y.key()) {
            std::cmp::Ordering::Less
        } else if better(y.key(), x.key()) {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        }
    });
}

/// Evolutionary search: the population is rejection-sampled from feasible
/// uniform architectures; each generation keeps the best parents and refills
/// with feasible mutants and uniform crossovers. Children failing the
/// target are redrawn up to `10 x population` times per generation, after
/// which the remaining slots are filled with copies of the best parent.
pub fn evolutionary_search<T: Scalar, R: Rng + ?Sized>(
    pr: &Problem<'_, T>,
    params: &EvoParams,
    rng: &mut R,
    seed: u64,
) -> Result<SearchResult> {
    params.check()?;
    let clock = Instant::now();
    let space = pr.space;
    let budget = 10 * params.population;
    let eval = |genome: Architecture| {
        let canonical = genome.clone().canonical(space);
        Member { acc: pr.acc(&canonical), lat: pr.latency(&canonical), canonical, genome }
    };
    let mut pop = Vec::with_capacity(params.population);
    let mut attempts = 0;
    while pop.len() < params.population && attempts < budget {
        attempts += 1;
        let a = Architecture::sample(space, rng);
        if pr.feasible(&a) {
            pop.push(eval(a));
        }
    }
    if pop.is_empty() {
        return Err(Error::FeasibilitySampling { attempts });
    }
    rank(&mut pop);
    let n_parents = ((params.parent_ratio * params.population as f64).round() as usize).clamp(1, params.population);
    let n_mut = ((params.mutation_ratio * params.population as f64).round() as usize).min(params.population - n_parents);
    let n_cross = params.population - n_parents - n_mut;
    let mut best = pop[0].clone();
    let mut trace = vec![TraceEntry { iter: 0, obj: best.acc.to_f(), lat: best.lat.to_f() }];
    for it in 1..=params.iterations {
        pop.truncate(n_parents);
        let parents: Vec<Architecture> = pop.iter().map(|p| p.genome.clone()).collect();
        let mut attempts = 0;
        let mut children = Vec::with_capacity(n_mut + n_cross);
        for k in 0..n_mut + n_cross {
            let mut child = None;
            while attempts < budget {
                attempts += 1;
                let c = if k < n_mut {
                    let p = parents.choose(rng).expect("parents nonempty");
                    mutate(pr, p, params.mutation_prob, rng)
                } else {
                    let a = parents.choose(rng).expect("parents nonempty");
                    let b = parents.choose(rng).expect("parents nonempty");
                    crossover(pr, a, b, rng)
                };
                if pr.feasible(&c) {
                    child = Some(c);
                    break;
                }
            }
            children.push(eval(child.unwrap_or_else(|| parents[0].clone())));
        }
        pop.extend(children);
        rank(&mut pop);
        if better(pop[0].key(), best.key()) {
            best = pop[0].clone();
        }
        trace.push(TraceEntry { iter: it, obj: best.acc.to_f(), lat: best.lat.to_f() });
    }
    let mut result = SearchResult::new(pr, best.canonical, SolverKind::Evo, seed);
    result.trace = trace;
    result.wall_time = clock.elapsed();
    Ok(result)
}
