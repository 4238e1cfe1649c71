//! Brute-force reference computations shared by the integration tests.
#![allow(dead_code)]

use bilinas::bilinear;
use bilinas::solvers::{lp_solve, LpSubproblem, Problem};
use bilinas::space::PointMode;
use bilinas::{ArchPoint, Architecture, SearchSpace, SyntheticSupernet};

/// Every full assignment of the space, including configs of inactive
/// blocks, so that each one carries equal probability under uniform sampling.
pub fn raw_archs(space: &SearchSpace) -> Vec<Architecture> {
    let mut out = vec![Architecture::first(space)];
    for s in 0..space.num_stages() {
        let mut next = Vec::new();
        for a in &out {
            for j in 0..space.depth_choices(s).len() {
                let mut b = a.clone();
                b.depth_choice[s] = j;
                next.push(b);
            }
        }
        out = next;
        for blk in 0..space.max_depth() {
            let mut next = Vec::new();
            for a in &out {
                for c in 0..space.num_configs() {
                    let mut b = a.clone();
                    b.config[s][blk] = c;
                    next.push(b);
                }
            }
            out = next;
        }
    }
    out
}

/// Mean true accuracy over the uniformly weighted assignments accepted by `keep`.
pub fn brute_mean(net: &SyntheticSupernet, keep: impl Fn(&Architecture) -> bool) -> f64 {
    let archs: Vec<_> = raw_archs(net.space()).into_iter().filter(|a| keep(a)).collect();
    assert!(!archs.is_empty());
    archs.iter().map(|a| net.true_accuracy(a)).sum::<f64>() / archs.len() as f64
}

/// S=2, depth choices {1,2}, three configs: 324 raw assignments.
pub fn mid_space() -> SearchSpace {
    SearchSpace::uniform(2, &[1, 2], SearchSpace::standard_configs()[..3].to_vec()).unwrap()
}

/// Kendall tau-b by direct pair counting.
pub fn brute_tau_b(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let (mut conc, mut disc, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                continue;
            } else if dx == 0.0 {
                tx += 1;
            } else if dy == 0.0 {
                ty += 1;
            } else if (dx > 0.0) == (dy > 0.0) {
                conc += 1;
            } else {
                disc += 1;
            }
        }
    }
    let num = (conc - disc) as f64;
    let den = (((conc + disc + tx) as f64) * ((conc + disc + ty) as f64)).sqrt();
    num / den
}

/// Best value of the continuous relaxation of `max ACC s.t. LAT <= T`.
///
/// For a fixed `beta` the problem in `alpha` is the LP solved exactly by
/// `lp_solve`, and for the optimal `alpha` some optimal `beta` is a basic LP
/// solution: one-hot in every stage except at most one, which mixes two
/// depth choices. So the search covers every such `beta` pattern; the mixing
/// weight of the fractional stage is scanned on a fine grid and refined by
/// golden-section search around the best grid point.
pub fn continuous_optimum(pr: &Problem<'_, f64>) -> f64 {
    let space = pr.space;
    let budget = pr.target - pr.lat.fixed_overhead;
    let groups: Vec<_> = (0..space.num_stages())
        .flat_map(|s| (0..space.max_depth()).map(move |b| space.alpha_group(s, b)))
        .collect();
    let value = |beta: &[f64]| -> f64 {
        let gains = pr.est.grad_alpha(space, beta);
        let costs = bilinear::alpha_row(space, &pr.lat.block_latency, beta);
        match lp_solve(&LpSubproblem { groups: groups.clone(), gains, costs, budget }) {
            Ok(alpha) => {
                let z = ArchPoint { alpha, beta: beta.to_vec(), mode: PointMode::Continuous };
                pr.est.eval_acc(space, &z).unwrap()
            }
            Err(_) => f64::NEG_INFINITY,
        }
    };
    // every one-hot depth assignment
    let mut patterns: Vec<Vec<usize>> = vec![vec![]];
    for s in 0..space.num_stages() {
        patterns = patterns
            .into_iter()
            .flat_map(|p| (0..space.depth_choices(s).len()).map(move |j| [p.clone(), vec![j]].concat()))
            .collect();
    }
    let one_hot = |choice: &[usize]| {
        let mut beta = vec![0.0; space.beta_len()];
        for (s, &j) in choice.iter().enumerate() {
            beta[space.beta_group(s).start + j] = 1.0;
        }
        beta
    };
    let mut best = f64::NEG_INFINITY;
    for p in &patterns {
        best = best.max(value(&one_hot(p)));
    }
    let n = 4000;
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for p in &patterns {
        for s in 0..space.num_stages() {
            let k = space.depth_choices(s).len();
            for j2 in 0..k {
                // mix the pattern's choice in stage s with j2 > it
                let j1 = p[s];
                if j2 <= j1 {
                    continue;
                }
                let (i1, i2) = (space.beta_group(s).start + j1, space.beta_group(s).start + j2);
                let base = one_hot(p);
                let at = |t: f64| {
                    let mut beta = base.clone();
                    beta[i1] = 1.0 - t;
                    beta[i2] = t;
                    value(&beta)
                };
                let (mut best_t, mut local) = (0.0, at(0.0));
                for i in 1..=n {
                    let t = i as f64 / n as f64;
                    let v = at(t);
                    if v > local {
                        local = v;
                        best_t = t;
                    }
                }
                let (mut lo, mut hi) = ((best_t - 1.0 / n as f64).max(0.0), (best_t + 1.0 / n as f64).min(1.0));
                for _ in 0..80 {
                    let (a, b) = (hi - g * (hi - lo), lo + g * (hi - lo));
                    let (va, vb) = (at(a), at(b));
                    local = local.max(va).max(vb);
                    if va > vb {
                        hi = b;
                    } else {
                        lo = a;
                    }
                }
                best = best.max(local);
            }
        }
    }
    best
}
