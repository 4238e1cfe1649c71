mod common;

use bilinas::bilinear;
use bilinas::estimator::{ConfigBaseline, EstimatorMeta};
use bilinas::solvers::{
    bcfw_search, compare_solvers, evolutionary_search, exact_search, fractional_groups, lp_solve, min_latency_arch,
    round_solution, BcfwParams, CompareParams, EvoParams, LpSubproblem, Problem, SolverKind, DEFAULT_EXACT_CAP,
};
use bilinas::space::{enumerate, PointMode};
use bilinas::{ArchPoint, Architecture, BilinearEstimator, Error, LatencyModel, SearchSpace};
use num_rational::{Ratio, Rational64};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn meta() -> EstimatorMeta {
    EstimatorMeta { n_per_probe: 0, n_repeats: 0, seed: 0, probes: 0, exact: true, baseline: ConfigBaseline::default() }
}

/// Random estimator and latency table; `integral` draws small integers so
/// that ties are common and sums are exact.
fn random_instance(space: &SearchSpace, rng: &mut ChaCha8Rng, integral: bool) -> (BilinearEstimator<f64>, LatencyModel<f64>) {
    let mut draw = |lo: f64, hi: f64| {
        if integral {
            rng.random_range(lo as i64..=hi as i64) as f64
        } else {
            rng.random_range(lo..hi)
        }
    };
    let depth: Vec<f64> = (0..space.beta_len()).map(|_| draw(-1.0, 3.0)).collect();
    let config: Vec<f64> = (0..space.alpha_len()).map(|_| draw(-2.0, 2.0)).collect();
    let lat: Vec<f64> = (0..space.alpha_len()).map(|_| draw(1.0, 4.0)).collect();
    let est = BilinearEstimator { base: 70.0, depth, config, meta: meta() };
    let lat = LatencyModel::new(space, lat, 2.0).unwrap();
    (est, lat)
}

/// Largest achievable latency: deepest choice, slowest config everywhere.
fn max_latency(space: &SearchSpace, lat: &LatencyModel<f64>) -> f64 {
    let mut total = lat.fixed_overhead;
    for s in 0..space.num_stages() {
        let d = *space.depth_choices(s).iter().max().unwrap();
        for b in 0..d {
            total += (0..space.num_configs()).map(|c| lat.get(space, s, b, c)).fold(f64::MIN, f64::max);
        }
    }
    total
}

fn first_argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

fn mid_target(space: &SearchSpace, lat: &LatencyModel<f64>, rng: &mut ChaCha8Rng) -> f64 {
    let lo = lat.of_arch(space, &min_latency_arch(space, lat));
    let hi = max_latency(space, lat);
    lo + rng.random_range(0.2..0.8) * (hi - lo)
}

/// 1 stage, depths {1,2}, 2 configs: 6 architectures.
fn six() -> SearchSpace {
    SearchSpace::tiny()
}

/// 2 stages, depths {1,2}, 2 configs: 36 architectures.
fn thirty_six() -> SearchSpace {
    SearchSpace::uniform(2, &[1, 2], SearchSpace::standard_configs()[..2].to_vec()).unwrap()
}

/// 2 stages, depths {1,2,3}, 3 configs: 1521 architectures.
fn fifteen_twenty_one() -> SearchSpace {
    SearchSpace::uniform(2, &[1, 2, 3], SearchSpace::standard_configs()[..3].to_vec()).unwrap()
}

/// Best feasible architecture by plain scan: accuracy, then latency, then
/// lexicographic order.
fn brute_optimum(pr: &Problem<'_, f64>) -> Option<Architecture> {
    let mut best: Option<(f64, f64, Architecture)> = None;
    for a in enumerate(pr.space, u128::MAX).unwrap() {
        if !pr.feasible(&a) {
            continue;
        }
        let (acc, l) = (pr.acc(&a), pr.latency(&a));
        let wins = match &best {
            None => true,
            Some((ba, bl, barch)) => acc > *ba || (acc == *ba && (l < *bl || (l == *bl && a < *barch))),
        };
        if wins {
            best = Some((acc, l, a));
        }
    }
    best.map(|b| b.2)
}

// ---------------------------------------------------------------- LP oracle

type Q = Ratio<i128>;

/// Solves the square system `a x = rhs`; `None` when singular.
fn solve(mut a: Vec<Vec<Q>>, mut rhs: Vec<Q>) -> Option<Vec<Q>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        rhs.swap(col, piv);
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col] / a[col][col];
                for k in col..n {
                    let v = a[col][k];
                    a[r][k] -= f * v;
                }
                let v = rhs[col];
                rhs[r] -= f * v;
            }
        }
    }
    Some((0..n).map(|i| rhs[i] / a[i][i]).collect())
}

/// Maximum of the LP over all basic feasible solutions of its standard form
/// (group equalities plus the budget row with a slack column).
fn vertex_optimum(groups: &[std::ops::Range<usize>], gains: &[i64], costs: &[i64], budget: i64) -> Q {
    let n = gains.len();
    let m = groups.len() + 1;
    let column = |j: usize| -> Vec<Q> {
        let mut c = vec![Q::zero(); m];
        if j == n {
            c[m - 1] = Q::one();
        } else {
            let g = groups.iter().position(|g| g.contains(&j)).unwrap();
            c[g] = Q::one();
            c[m - 1] = Q::from_integer(costs[j] as i128);
        }
        c
    };
    let mut rhs = vec![Q::one(); m];
    rhs[m - 1] = Q::from_integer(budget as i128);
    let mut best: Option<Q> = None;
    for mask in 0u32..(1 << (n + 1)) {
        if mask.count_ones() as usize != m {
            continue;
        }
        let cols: Vec<usize> = (0..=n).filter(|j| mask >> j & 1 == 1).collect();
        let a: Vec<Vec<Q>> = (0..m).map(|r| cols.iter().map(|&j| column(j)[r]).collect()).collect();
        let Some(x) = solve(a, rhs.clone()) else { continue };
        if x.iter().any(|v| *v < Q::zero()) {
            continue;
        }
        let obj = cols.iter().zip(&x).filter(|(j, _)| **j < n).fold(Q::zero(), |acc, (&j, v)| {
            acc + Q::from_integer(gains[j] as i128) * v
        });
        if best.is_none_or(|b| obj > b) {
            best = Some(obj);
        }
    }
    best.expect("feasible LP has a vertex")
}

#[test]
fn lp_matches_vertex_enumeration_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let n = rng.random_range(2..=12usize);
        let m = rng.random_range(1..=n.min(4));
        // m nonempty contiguous groups
        let mut cuts: Vec<usize> = (1..n).collect();
        for i in (1..cuts.len()).rev() {
            cuts.swap(i, rng.random_range(0..=i));
        }
        let mut cuts: Vec<usize> = cuts[..m - 1].to_vec();
        cuts.sort();
        let bounds: Vec<usize> = std::iter::once(0).chain(cuts).chain(std::iter::once(n)).collect();
        let groups: Vec<_> = bounds.windows(2).map(|w| w[0]..w[1]).collect();
        let gains: Vec<i64> = (0..n).map(|_| rng.random_range(-6..=6)).collect();
        let costs: Vec<i64> = (0..n).map(|_| rng.random_range(0..=6)).collect();
        let min: i64 = groups.iter().map(|g| costs[g.clone()].iter().min().unwrap()).sum();
        let max: i64 = groups.iter().map(|g| costs[g.clone()].iter().max().unwrap()).sum();
        let budget = min + rng.random_range(0..=max - min + 2);

        let p = LpSubproblem {
            groups: groups.clone(),
            gains: gains.iter().map(|&g| Rational64::from_integer(g)).collect(),
            costs: costs.iter().map(|&c| Rational64::from_integer(c)).collect(),
            budget: Rational64::from_integer(budget),
        };
        let u = lp_solve(&p).unwrap();
        let zero = Rational64::zero();
        assert!(u.iter().all(|v| *v >= zero));
        let mut fractional = 0;
        for g in &groups {
            assert_eq!(u[g.clone()].iter().copied().fold(zero, |a, b| a + b), Rational64::one());
            let nz = u[g.clone()].iter().filter(|v| **v != zero).count();
            assert!(nz == 1 || nz == 2, "group with {nz} nonzeros");
            fractional += (nz == 2) as usize;
        }
        assert!(fractional <= 1);
        let cost = u.iter().zip(&p.costs).fold(zero, |a, (x, c)| a + *x * *c);
        assert!(cost <= p.budget);
        let obj = u.iter().zip(&p.gains).fold(zero, |a, (x, g)| a + *x * *g);
        let want = vertex_optimum(&groups, &gains, &costs, budget);
        let got = Q::new(*obj.numer() as i128, *obj.denom() as i128);
        assert_eq!(got, want, "gains {gains:?} costs {costs:?} groups {groups:?} budget {budget}");
    }
}

#[test]
fn lp_at_minimal_budget_picks_the_cheapest_entries() {
    let p = LpSubproblem { groups: vec![0..3, 3..5], gains: vec![5.0, 1.0, 9.0, 2.0, 3.0], costs: vec![2.0, 1.0, 3.0, 4.0, 6.0], budget: 5.0 };
    assert_eq!(lp_solve(&p).unwrap(), vec![0.0, 1.0, 0.0, 1.0, 0.0]);
}

// ------------------------------------------------------------------- BCFW

fn sparsity_ok(space: &SearchSpace, z: &ArchPoint<f64>) -> bool {
    let frac = fractional_groups(space, z).unwrap();
    let alpha = frac.iter().filter(|(g, _)| matches!(g, bilinas::space::Group::Alpha { .. })).count();
    alpha <= 1 && frac.len() - alpha <= 1 && frac.iter().all(|(_, nz)| nz.len() == 2)
}

#[test]
fn bcfw_iterates_stay_sparse_and_rounding_stays_close() {
    let space = SearchSpace::paper();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst = f64::MIN;
    for run in 0..100u64 {
        let (est, lat) = random_instance(&space, &mut rng, false);
        let target = mid_target(&space, &lat, &mut rng);
        let pr = Problem { space: &space, est: &est, lat: &lat, target };
        let mut r = ChaCha8Rng::seed_from_u64(run);
        let out = bcfw_search(&pr, &BcfwParams::default(), &mut r, None, run).unwrap();
        assert!(sparsity_ok(&space, &out.relaxed), "run {run}");
        assert_eq!(out.result.trace.len(), BcfwParams::default().iterations + 1);
        let relaxed_lat = lat.eval(&space, &out.relaxed).unwrap();
        assert!(relaxed_lat <= target + 1e-9);
        assert_eq!(out.result.latency_ms, lat.of_arch(&space, &out.result.arch));
        assert_eq!(out.result.predicted_acc, est.of_arch(&space, &out.result.arch));
        worst = worst.max(out.result.deviation);
    }
    assert!(worst < 0.10, "largest rounding deviation {worst}");
}

#[test]
fn bcfw_objective_never_decreases() {
    let space = SearchSpace::small();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for run in 0..30u64 {
        let (est, lat) = random_instance(&space, &mut rng, false);
        let target = mid_target(&space, &lat, &mut rng);
        let pr = Problem { space: &space, est: &est, lat: &lat, target };
        let out = bcfw_search(&pr, &BcfwParams { iterations: 200, p_block: 0.5, ..Default::default() }, &mut ChaCha8Rng::seed_from_u64(run), None, run).unwrap();
        for w in out.result.trace.windows(2) {
            assert!(w[1].obj >= w[0].obj - 1e-9, "objective dropped {} -> {}", w[0].obj, w[1].obj);
        }
    }
}

#[test]
fn bcfw_without_binding_budget_reaches_the_argmax() {
    let space = SearchSpace::small();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for run in 0..20u64 {
        let (est, lat) = random_instance(&space, &mut rng, false);
        let pr = Problem { space: &space, est: &est, lat: &lat, target: 1e6 };
        let mut want = Architecture::first(&space);
        for s in 0..space.num_stages() {
            for b in 0..space.max_depth() {
                let g = space.alpha_group(s, b);
                want.config[s][b] = first_argmax(&est.config[g]);
            }
            let value = |j: usize| {
                let d = space.depth(s, j);
                est.depth[space.beta_group(s).start + j]
                    + (0..d).map(|b| est.config[space.alpha_index(s, b, want.config[s][b])]).sum::<f64>()
            };
            want.depth_choice[s] = (0..space.depth_choices(s).len()).max_by(|&a, &b| value(a).total_cmp(&value(b))).unwrap();
        }
        let want = want.canonical(&space);
        // one alpha update followed by one beta update suffices
        let p_block = 0.5;
        let mut r = ChaCha8Rng::seed_from_u64(run);
        let out = bcfw_search(&pr, &BcfwParams { iterations: 40, p_block, ..Default::default() }, &mut r, None, run).unwrap();
        assert_eq!(out.result.arch, want);
        assert_eq!(out.rounding.fractional, 0);
        let exact = exact_search(&pr, DEFAULT_EXACT_CAP, run).unwrap();
        assert_eq!(exact.arch, want);
    }
}

#[test]
fn bcfw_rejects_targets_below_the_fastest_architecture() {
    let space = six();
    let (est, lat) = random_instance(&space, &mut ChaCha8Rng::seed_from_u64(1), false);
    let min = lat.of_arch(&space, &min_latency_arch(&space, &lat));
    let pr = Problem { space: &space, est: &est, lat: &lat, target: min - 0.1 };
    match bcfw_search(&pr, &BcfwParams::default(), &mut ChaCha8Rng::seed_from_u64(0), None, 0) {
        Err(Error::Infeasible { min_cost, .. }) => assert!((min_cost - min).abs() < 1e-12),
        other => panic!("expected infeasibility, got {other:?}"),
    }
}

/// Value of the best `alpha` for a fixed `beta`, or `None` if no `alpha` fits.
fn best_response_value(pr: &Problem<'_, f64>, beta: &[f64]) -> Option<f64> {
    let space = pr.space;
    let gains = pr.est.grad_alpha(space, beta);
    let costs = bilinear::alpha_row(space, &pr.lat.block_latency, beta);
    let groups = (0..space.num_stages()).flat_map(|s| (0..space.max_depth()).map(move |b| space.alpha_group(s, b))).collect();
    let budget = pr.target - pr.lat.fixed_overhead;
    let alpha = lp_solve(&LpSubproblem { groups, gains, costs, budget }).ok()?;
    let z = ArchPoint { alpha, beta: beta.to_vec(), mode: PointMode::Continuous };
    Some(pr.est.eval_acc(space, &z).unwrap())
}

#[test]
fn bcfw_converges_to_block_stationary_points() {
    let space = SearchSpace::uniform(2, &[1, 2], SearchSpace::standard_configs()[..3].to_vec()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for inst in 0..20u64 {
        let (est, lat) = random_instance(&space, &mut rng, false);
        let target = mid_target(&space, &lat, &mut rng);
        let pr = Problem { space: &space, est: &est, lat: &lat, target };
        let opt = common::continuous_optimum(&pr);
        let mut mean_gap = [0.0; 4];
        for run in 0..50u64 {
            let mut r = ChaCha8Rng::seed_from_u64(inst * 1000 + run);
            let out = bcfw_search(&pr, &BcfwParams { iterations: 64, ..Default::default() }, &mut r, None, run).unwrap();
            for (i, k) in [4usize, 8, 16, 32].into_iter().enumerate() {
                mean_gap[i] += (opt - out.result.trace[k].obj) / 50.0;
            }
            let z = &out.relaxed;
            let obj = est.eval_acc(&space, z).unwrap();
            assert!(obj <= opt + 1e-6, "iterate {obj} beats the computed optimum {opt}");
            // no single-block update can improve the final iterate
            let alpha_best = best_response_value(&pr, &z.beta).unwrap();
            assert!(alpha_best <= obj + 1e-9, "alpha block not optimal: {alpha_best} > {obj}");
            let gains = est.grad_beta(&space, &z.alpha);
            let costs = bilinear::beta_row(&space, None, &lat.block_latency, &z.alpha);
            let groups = (0..space.num_stages()).map(|s| space.beta_group(s)).collect();
            let beta = lp_solve(&LpSubproblem { groups, gains, costs, budget: target - lat.fixed_overhead }).unwrap();
            let beta_best = est.eval_acc(&space, &ArchPoint { alpha: z.alpha.clone(), beta, mode: PointMode::Continuous }).unwrap();
            assert!(beta_best <= obj + 1e-9, "beta block not optimal: {beta_best} > {obj}");
        }
        for w in mean_gap.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }
}

// --------------------------------------------------------------- rounding

fn rounding_fixture() -> (SearchSpace, BilinearEstimator<f64>, LatencyModel<f64>) {
    // one stage, depths {1,2}, two configs
    let space = six();
    let est = BilinearEstimator { base: 70.0, depth: vec![0.0, 1.0], config: vec![0.0, 2.0, 0.0, 0.5], meta: meta() };
    let lat = LatencyModel::new(&space, vec![1.0, 3.0, 1.0, 2.0], 0.0).unwrap();
    (space, est, lat)
}

#[test]
fn rounding_keeps_discrete_points() {
    let (space, est, lat) = rounding_fixture();
    let arch = Architecture { depth_choice: vec![1], config: vec![vec![1, 0]] };
    let pr = Problem { space: &space, est: &est, lat: &lat, target: 5.0 };
    let r = round_solution(&pr, &ArchPoint::from_arch(&space, &arch)).unwrap();
    assert_eq!(r.arch, arch);
    assert_eq!(r.fractional, 0);
    assert!((r.deviation - (4.0 - 5.0) / 5.0).abs() < 1e-12);
    assert!(r.feasible);
}

fn fractional_point(space: &SearchSpace, first: f64) -> ArchPoint<f64> {
    let arch = Architecture { depth_choice: vec![0], config: vec![vec![0, 0]] };
    let mut z = ArchPoint::from_arch(space, &arch);
    z.alpha[0] = first;
    z.alpha[1] = 1.0 - first;
    z.mode = PointMode::Continuous;
    z
}

#[test]
fn rounding_takes_the_argmax_when_it_fits() {
    let (space, est, lat) = rounding_fixture();
    let pr = Problem { space: &space, est: &est, lat: &lat, target: 10.0 };
    let r = round_solution(&pr, &fractional_point(&space, 0.3)).unwrap();
    assert_eq!(r.arch.config[0][0], 1);
    assert_eq!(r.fractional, 1);
    let r = round_solution(&pr, &fractional_point(&space, 0.7)).unwrap();
    assert_eq!(r.arch.config[0][0], 0);
}

#[test]
fn rounding_falls_back_to_the_alternative() {
    let (space, est, lat) = rounding_fixture();
    // argmax entry (config 1, 3 ms) misses a 2 ms target, the other fits
    let pr = Problem { space: &space, est: &est, lat: &lat, target: 2.0 };
    let r = round_solution(&pr, &fractional_point(&space, 0.3)).unwrap();
    assert_eq!(r.arch.config[0][0], 0);
    assert!(r.feasible);
    assert!((r.deviation - (1.0 - 2.0) / 2.0).abs() < 1e-12);
}

#[test]
fn rounding_reports_deviation_when_nothing_fits() {
    let (space, est, lat) = rounding_fixture();
    let pr = Problem { space: &space, est: &est, lat: &lat, target: 0.5 };
    let r = round_solution(&pr, &fractional_point(&space, 0.3)).unwrap();
    assert_eq!(r.arch.config[0][0], 0);
    assert!(!r.feasible);
    assert!((r.deviation - 1.0).abs() < 1e-12);
}

#[test]
fn rounding_rejects_non_sparse_points() {
    let space = SearchSpace::uniform(2, &[1, 2], SearchSpace::standard_configs()[..3].to_vec()).unwrap();
    let (est, lat) = random_instance(&space, &mut ChaCha8Rng::seed_from_u64(3), false);
    let pr = Problem { space: &space, est: &est, lat: &lat, target: 100.0 };
    let z: ArchPoint<f64> = ArchPoint::uniform(&space);
    assert!(matches!(round_solution(&pr, &z), Err(Error::Sparsity(_))));
    // two fractional alpha groups
    let mut z = ArchPoint::from_arch(&space, &Architecture::first(&space));
    for g in [space.alpha_group(0, 0), space.alpha_group(1, 0)] {
        z.alpha[g.start] = 0.5;
        z.alpha[g.start + 1] = 0.5;
    }
    z.mode = PointMode::Continuous;
    assert!(matches!(round_solution(&pr, &z), Err(Error::Sparsity(_))));
    // three nonzeros in one group
    let mut z = ArchPoint::from_arch(&space, &Architecture::first(&space));
    let g = space.alpha_group(0, 0);
    for i in g {
        z.alpha[i] = 1.0 / 3.0;
    }
    z.mode = PointMode::Continuous;
    assert!(matches!(round_solution(&pr, &z), Err(Error::Sparsity(_))));
}

// ------------------------------------------------------------------ exact

#[test]
fn exact_matches_exhaustive_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for space in [six(), thirty_six(), fifteen_twenty_one()] {
        for i in 0..200 {
            let (est, lat) = random_instance(&space, &mut rng, i % 2 == 0);
            let target = mid_target(&space, &lat, &mut rng);
            let pr = Problem { space: &space, est: &est, lat: &lat, target };
            let want = brute_optimum(&pr).unwrap();
            let got = exact_search(&pr, DEFAULT_EXACT_CAP, 0).unwrap();
            assert_eq!(got.arch, want, "instance {i}");
            assert!(got.latency_ms <= target);
            assert_eq!(got.solver, SolverKind::Exact);
        }
    }
}

#[test]
fn exact_reports_infeasibility_and_cap() {
    let space = thirty_six();
    let (est, lat) = random_instance(&space, &mut ChaCha8Rng::seed_from_u64(4), false);
    let min = lat.of_arch(&space, &min_latency_arch(&space, &lat));
    let pr = Problem { space: &space, est: &est, lat: &lat, target: min - 1e-6 };
    assert!(matches!(exact_search(&pr, DEFAULT_EXACT_CAP, 0), Err(Error::Infeasible { .. })));
    let pr = Problem { target: min + 100.0, ..pr };
    assert!(matches!(exact_search(&pr, 35, 0), Err(Error::CapExceeded { count: 36, cap: 35 })));

    let paper = SearchSpace::paper();
    let (est, lat) = random_instance(&paper, &mut ChaCha8Rng::seed_from_u64(4), false);
    let pr = Problem { space: &paper, est: &est, lat: &lat, target: 1e6 };
    assert!(matches!(exact_search(&pr, DEFAULT_EXACT_CAP, 0), Err(Error::CapExceeded { .. })));
}

// -------------------------------------------------------------- evolution

#[test]
fn evolution_on_a_single_architecture_space() {
    let space = SearchSpace::uniform(1, &[1], SearchSpace::standard_configs()[..1].to_vec()).unwrap();
    let (est, lat) = random_instance(&space, &mut ChaCha8Rng::seed_from_u64(0), false);
    let pr = Problem { space: &space, est: &est, lat: &lat, target: 100.0 };
    let params = EvoParams { iterations: 5, ..Default::default() };
    let r = evolutionary_search(&pr, &params, &mut ChaCha8Rng::seed_from_u64(0), 0).unwrap();
    assert_eq!(r.arch, Architecture::first(&space));
    assert_eq!(r.trace.len(), 6);
}

#[test]
fn evolution_finds_the_exact_optimum_on_enumerable_spaces() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for space in [thirty_six(), fifteen_twenty_one()] {
        let (est, lat) = random_instance(&space, &mut rng, false);
        let target = mid_target(&space, &lat, &mut rng);
        let pr = Problem { space: &space, est: &est, lat: &lat, target };
        let want = exact_search(&pr, DEFAULT_EXACT_CAP, 0).unwrap();
        let mut hits = 0;
        for seed in 0..20u64 {
            let r = evolutionary_search(&pr, &EvoParams::default(), &mut ChaCha8Rng::seed_from_u64(seed), seed).unwrap();
            assert!(r.latency_ms <= target);
            for w in r.trace.windows(2) {
                assert!(w[1].obj >= w[0].obj);
            }
            hits += (r.arch == want.arch) as usize;
        }
        assert!(hits >= 19, "evolution hit the optimum in {hits} of 20 seeds");
    }
}

#[test]
fn evolution_reports_unreachable_targets() {
    let space = thirty_six();
    let (est, lat) = random_instance(&space, &mut ChaCha8Rng::seed_from_u64(4), false);
    let pr = Problem { space: &space, est: &est, lat: &lat, target: 0.1 };
    assert!(matches!(
        evolutionary_search(&pr, &EvoParams::default(), &mut ChaCha8Rng::seed_from_u64(0), 0),
        Err(Error::FeasibilitySampling { attempts: 1000 })
    ));
}

// ---------------------------------------------------------------- compare

#[test]
fn best_of_three_dominates_each_solver() {
    let space = fifteen_twenty_one();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (est, lat) = random_instance(&space, &mut rng, false);
    let targets: Vec<f64> = (0..3).map(|_| mid_target(&space, &lat, &mut rng)).collect();
    let seeds: Vec<u64> = (0..8).collect();
    let params = CompareParams { evo: EvoParams { iterations: 50, ..Default::default() }, ..Default::default() };
    let report = compare_solvers(&space, &est, &lat, &targets, &seeds, &params).unwrap();
    assert_eq!(report.cells.len(), targets.len() * seeds.len() * 3);
    assert_eq!(report.summaries.len(), targets.len() * 3);
    let mut matches_exact = 0;
    for b in &report.best {
        let acc = b.predicted_acc.unwrap();
        for c in report.cells.iter().filter(|c| c.target == b.target && c.seed == b.seed) {
            let r = c.outcome.as_ref().unwrap();
            if r.feasible() {
                assert!(acc >= r.predicted_acc);
            }
            if c.solver == SolverKind::Exact && (r.predicted_acc - acc).abs() == 0.0 {
                matches_exact += 1;
            }
        }
    }
    assert!(matches_exact * 100 >= 95 * report.best.len());
    // reruns are identical regardless of scheduling
    let again = compare_solvers(&space, &est, &lat, &targets, &seeds, &params).unwrap();
    assert_eq!(again.best, report.best);
    assert_eq!(again.summaries, report.summaries);
}

#[test]
fn single_architecture_space_gives_identical_rows() {
    let space = SearchSpace::uniform(1, &[1], SearchSpace::standard_configs()[..1].to_vec()).unwrap();
    let (est, lat) = random_instance(&space, &mut ChaCha8Rng::seed_from_u64(0), false);
    let params = CompareParams { evo: EvoParams { iterations: 3, ..Default::default() }, bcfw: BcfwParams { iterations: 10, ..Default::default() }, ..Default::default() };
    let report = compare_solvers(&space, &est, &lat, &[50.0], &[1, 2], &params).unwrap();
    let first = &report.summaries[0];
    for s in &report.summaries {
        assert_eq!((s.acc_mean, s.latency_mean, s.acc_std), (first.acc_mean, first.latency_mean, 0.0));
    }
}

#[test]
fn compare_records_errors_per_cell() {
    let space = thirty_six();
    let (est, lat) = random_instance(&space, &mut ChaCha8Rng::seed_from_u64(0), false);
    let report = compare_solvers(&space, &est, &lat, &[0.5], &[0], &CompareParams::default()).unwrap();
    assert!(report.cells.iter().all(|c| c.outcome.is_err()));
    assert_eq!(report.best[0].solver, None);
    assert!(report.summaries.iter().all(|s| s.failures == 1 && s.runs == 0));
}

#[test]
fn resolving_alpha_never_loses_to_plain_rounding() {
    let space = fifteen_twenty_one();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut improved = 0;
    for run in 0..100u64 {
        let (est, lat) = random_instance(&space, &mut rng, false);
        let target = mid_target(&space, &lat, &mut rng);
        let pr = Problem { space: &space, est: &est, lat: &lat, target };
        let plain_params = BcfwParams { resolve_alpha: false, ..Default::default() };
        let plain = bcfw_search(&pr, &plain_params, &mut ChaCha8Rng::seed_from_u64(run), None, run).unwrap();
        assert_eq!(plain.rounding, round_solution(&pr, &plain.relaxed).unwrap());
        let out = bcfw_search(&pr, &BcfwParams::default(), &mut ChaCha8Rng::seed_from_u64(run), None, run).unwrap();
        // same iterates, only the final rounding differs
        assert_eq!(out.relaxed, plain.relaxed);
        if plain.rounding.feasible {
            assert!(out.rounding.feasible);
            assert!(out.result.predicted_acc >= plain.result.predicted_acc, "run {run}");
        }
        if out.rounding.feasible {
            assert!(out.result.latency_ms <= target);
        }
        improved += (out.result.predicted_acc > plain.result.predicted_acc) as usize;
    }
    assert!(improved > 0);
}
