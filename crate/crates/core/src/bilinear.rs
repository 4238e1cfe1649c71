//! The shared bilinear structure of accuracy and latency:
//!
//! `F(alpha, beta) = c + sum_s sum_j beta[s][j] * q[s][j]
//!     + sum_s sum_b sum_c alpha[s][b][c] * w[s][b][c] * sum_{j : depth_j > b} beta[s][j]`
//!
//! Accuracy uses `q = depth deltas`, `w = config deltas`; latency uses
//! `q = 0`, `w = block latencies`.

use crate::scalar::Scalar;
use crate::space::SearchSpace;

/// `sum_{j : depth_j > block} beta_j`: mass of depth choices that keep `block` active.
pub fn active_mass<T: Scalar>(space: &SearchSpace, stage: usize, block: usize, beta: &[T]) -> T {
    let mut m = T::zero();
    for (j, &w) in beta.iter().enumerate() {
        if space.block_active(stage, j, block) {
            m += w;
        }
    }
    m
}

pub fn eval<T: Scalar>(space: &SearchSpace, constant: T, depth: Option<&[T]>, block: &[T], alpha: &[T], beta: &[T]) -> T {
    let mut total = constant;
    if let Some(q) = depth {
        for (x, w) in beta.iter().zip(q) {
            total += *x * *w;
        }
    }
    for s in 0..space.num_stages() {
        let bs = &beta[space.beta_group(s)];
        for b in 0..space.max_depth() {
            let mask = active_mass(space, s, b, bs);
            if mask == T::zero() {
                continue;
            }
            let g = space.alpha_group(s, b);
            let mut blk = T::zero();
            for (a, w) in alpha[g.clone()].iter().zip(&block[g]) {
                blk += *a * *w;
            }
            total += blk * mask;
        }
    }
    total
}

/// Linear coefficients of `F` in `alpha` with `beta` fixed.
pub fn alpha_row<T: Scalar>(space: &SearchSpace, block: &[T], beta: &[T]) -> Vec<T> {
    let mut row = vec![T::zero(); space.alpha_len()];
    for s in 0..space.num_stages() {
        let bs = &beta[space.beta_group(s)];
        for b in 0..space.max_depth() {
            let mask = active_mass(space, s, b, bs);
            for i in space.alpha_group(s, b) {
                row[i] = block[i] * mask;
            }
        }
    }
    row
}

/// Linear coefficients of `F` in `beta` with `alpha` fixed.
pub fn beta_row<T: Scalar>(space: &SearchSpace, depth: Option<&[T]>, block: &[T], alpha: &[T]) -> Vec<T> {
    let mut row = match depth {
        Some(q) => q.to_vec(),
        None => vec![T::zero(); space.beta_len()],
    };
    for s in 0..space.num_stages() {
        // running sum of the expected contribution of blocks 0..b
        let mut prefix = vec![T::zero(); space.max_depth() + 1];
        for b in 0..space.max_depth() {
            let g = space.alpha_group(s, b);
            let mut blk = T::zero();
            for (a, w) in alpha[g.clone()].iter().zip(&block[g]) {
                blk += *a * *w;
            }
            prefix[b + 1] = prefix[b] + blk;
        }
        let off = space.beta_group(s).start;
        for (j, &d) in space.depth_choices(s).iter().enumerate() {
            row[off + j] += prefix[d];
        }
    }
    row
}
