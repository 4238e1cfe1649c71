use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::BilinearEstimator;
use crate::oracle::SyntheticSupernet;
use crate::space::{Architecture, SearchSpace};

/// Anything that assigns a predicted accuracy to a discrete architecture.
pub trait ArchScorer {
    fn score(&self, space: &SearchSpace, arch: &Architecture) -> f64;
}

impl ArchScorer for BilinearEstimator<f64> {
    fn score(&self, space: &SearchSpace, arch: &Architecture) -> f64 {
        self.of_arch(space, arch)
    }
}

impl ArchScorer for SyntheticSupernet {
    fn score(&self, _space: &SearchSpace, arch: &Architecture) -> f64 {
        self.true_accuracy(arch)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub kendall_tau: f64,
    pub spearman_rho: f64,
    pub mse: f64,
    pub n: usize,
}

/// Which oracle value predictions are compared against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Targets {
    /// Noiseless ground truth.
    #[default]
    True,
    /// One noisy observation per architecture.
    Sampled,
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Dimension { what: "correlation inputs", expected: x.len(), got: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::arg("correlations need at least two observations"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::arg("correlation inputs must be finite"));
    }
    Ok(())
}

/// `sum t(t-1)/2` over runs of equal values in a sorted sequence.
fn tied_pairs<T: PartialEq>(sorted: &[T]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Stable merge sort of `v` that returns the number of inversions.
fn sort_count_inversions(v: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = sort_count_inversions(&mut v[..mid]) + sort_count_inversions(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            merged.push(v[j]);
            inv += (mid - i) as u64;
            j += 1;
        } else {
            merged.push(v[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..n]);
    v.copy_from_slice(&merged);
    inv
}

/// Kendall's tau-b (tie-corrected), computed in `O(n log n)` with Knight's
/// algorithm. Errors when either input is constant.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len() as u64;
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let n0 = n * (n - 1) / 2;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let n1 = tied_pairs(&xs);
    let n3 = tied_pairs(&pairs);
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let swaps = sort_count_inversions(&mut ys);
    let n2 = tied_pairs(&ys);
    let (dx, dy) = (n0 - n1, n0 - n2);
    if dx == 0 || dy == 0 {
        return Err(Error::UndefinedCorrelation("kendall tau of a constant sequence"));
    }
    // concordant - discordant
    let num = n0 as i64 - n1 as i64 - n2 as i64 + n3 as i64 - 2 * swaps as i64;
    Ok(num as f64 / (dx as f64 * dy as f64).sqrt())
}

/// 1-based ranks with ties assigned their average rank.
pub fn mid_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && x[order[j]] == x[order[i]] {
            j += 1;
        }
        // positions i..j share ranks i+1..=j
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("correlation of a constant sequence"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho: Pearson correlation of mid-ranks.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    pearson(&mid_ranks(x), &mid_ranks(y))
}

/// Lower bound on `corr(P, S)` given `corr(P, O)` and `corr(O, S)`:
/// `rho_po * rho_os - sqrt((1 - rho_po^2) (1 - rho_os^2))`.
pub fn transitivity_lower_bound(rho_po: f64, rho_os: f64) -> Result<f64> {
    for r in [rho_po, rho_os] {
        if !(-1.0..=1.0).contains(&r) {
            return Err(Error::arg(format!("correlation {r} outside [-1, 1]")));
        }
    }
    Ok(rho_po * rho_os - ((1.0 - rho_po * rho_po) * (1.0 - rho_os * rho_os)).sqrt())
}

/// Scores `n_test` uniformly sampled architectures against the oracle.
pub fn rank_predictor<P: ArchScorer + ?Sized, R: Rng + ?Sized>(
    predictor: &P,
    oracle: &SyntheticSupernet,
    n_test: usize,
    targets: Targets,
    rng: &mut R,
) -> Result<RankReport> {
    let space = oracle.space();
    let mut pred = Vec::with_capacity(n_test);
    let mut truth = Vec::with_capacity(n_test);
    for _ in 0..n_test {
        let arch = Architecture::sample(space, rng);
        pred.push(predictor.score(space, &arch));
        truth.push(match targets {
            Targets::True => oracle.true_accuracy(&arch),
            Targets::Sampled => oracle.sample_accuracy(&arch, rng),
        });
    }
    report(&pred, &truth)
}

/// Rank metrics and mean squared error of `pred` against `truth`.
pub fn report(pred: &[f64], truth: &[f64]) -> Result<RankReport> {
    let kendall_tau = kendall_tau(pred, truth)?;
    let spearman_rho = spearman_rho(pred, truth)?;
    let mse = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / pred.len() as f64;
    Ok(RankReport { kendall_tau, spearman_rho, mse, n: pred.len() })
}
