//! Rounding of a sparse continuous iterate to an architecture.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::space::{discretize, ArchPoint, Architecture, Group, SearchSpace};

use super::{better, Problem};

/// A group with more than one nonzero entry: `(group, [(offset, value)])`.
pub type FractionalGroup = (Group, Vec<(usize, f64)>);

#[derive(Clone, Debug, PartialEq)]
pub struct Rounded {
    pub arch: Architecture,
    /// `(latency - T) / T` of the rounded architecture.
    pub deviation: f64,
    /// Whether the rounded architecture meets the target.
    pub feasible: bool,
    /// Number of fractional groups that had to be resolved.
    pub fractional: usize,
}

fn nonzeros<T: Scalar>(xs: &[T]) -> Vec<(usize, f64)> {
    xs.iter()
        .enumerate()
        .filter(|(_, v)| **v > T::simplex_tol())
        .map(|(i, v)| (i, v.to_f()))
        .collect()
}

/// Every group of `z` with more than one nonzero entry.
pub fn fractional_groups<T: Scalar>(space: &SearchSpace, z: &ArchPoint<T>) -> Result<Vec<FractionalGroup>> {
    z.check_dims(space)?;
    let mut out = Vec::new();
    for s in 0..space.num_stages() {
        for b in 0..space.max_depth() {
            let nz = nonzeros(&z.alpha[space.alpha_group(s, b)]);
            if nz.len() > 1 {
                out.push((Group::Alpha { stage: s, block: b }, nz));
            }
        }
    }
    for s in 0..space.num_stages() {
        let nz = nonzeros(&z.beta[space.beta_group(s)]);
        if nz.len() > 1 {
            out.push((Group::Beta { stage: s }, nz));
        }
    }
    Ok(out)
}

/// Resolves the (at most one per block) fractional groups of `z` by argmax.
/// When that misses the target, the feasible alternative combination with
/// the best accuracy is used; when none is feasible, the fastest one is
/// returned with `feasible = false`.
pub fn round_solution<T: Scalar>(pr: &Problem<'_, T>, z: &ArchPoint<T>) -> Result<Rounded> {
    let space = pr.space;
    let frac = fractional_groups(space, z)?;
    let alpha_frac = frac.iter().filter(|(g, _)| matches!(g, Group::Alpha { .. })).count();
    if alpha_frac > 1 || frac.len() - alpha_frac > 1 {
        return Err(Error::Sparsity(format!(
            "{alpha_frac} fractional alpha groups and {} fractional beta groups; at most one each is allowed",
            frac.len() - alpha_frac
        )));
    }
    if let Some((g, nz)) = frac.iter().find(|(_, nz)| nz.len() != 2) {
        return Err(Error::Sparsity(format!("group {g:?} has {} nonzeros", nz.len())));
    }
    let base = discretize(z, space)?.to_arch(space).ok_or_else(|| Error::Numerical("discretized point is not one-hot".into()))?;
    // per fractional group: argmax entry first, then the alternative
    let options: Vec<(Group, [usize; 2])> = frac
        .iter()
        .map(|(g, nz)| {
            let (a, b) = (nz[0], nz[1]);
            let order = if b.1 > a.1 { [b.0, a.0] } else { [a.0, b.0] };
            (*g, order)
        })
        .collect();
    let mut candidates = Vec::new();
    for mask in 0..(1usize << options.len()) {
        let mut arch = base.clone();
        for (k, (g, order)) in options.iter().enumerate() {
            let pick = order[(mask >> k) & 1];
            match *g {
                Group::Alpha { stage, block } => arch.config[stage][block] = pick,
                Group::Beta { stage } => arch.depth_choice[stage] = pick,
            }
        }
        candidates.push(arch);
    }
    let eval = |a: &Architecture| (pr.acc(a), pr.latency(a));
    let chosen = if pr.feasible(&candidates[0]) {
        candidates[0].clone()
    } else {
        let mut best: Option<(T, T, &Architecture)> = None;
        for a in candidates[1..].iter().filter(|a| pr.feasible(a)) {
            let (acc, l) = eval(a);
            if best.is_none_or(|b| better((acc, l, a), b)) {
                best = Some((acc, l, a));
            }
        }
        match best {
            Some((_, _, a)) => a.clone(),
            None => {
                // fastest, then most accurate
                let mut pick = &candidates[0];
                for a in &candidates[1..] {
                    let (acc, l) = eval(a);
                    let (pacc, pl) = eval(pick);
                    if l < pl || (l == pl && acc > pacc) {
                        pick = a;
                    }
                }
                pick.clone()
            }
        }
    };
    let l = pr.latency(&chosen).to_f();
    let t = pr.target.to_f();
    Ok(Rounded { feasible: pr.feasible(&chosen), deviation: (l - t) / t, arch: chosen.canonical(space), fractional: frac.len() })
}
