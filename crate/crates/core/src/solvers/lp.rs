//! Linear relaxation of the multiple-choice knapsack problem:
//!
//! `max gains . u  s.t.  costs . u <= budget,  sum_{i in g} u_i = 1 for every group g,  u >= 0`.
//!
//! Solved exactly by dominance filtering, an upper convex hull per group and
//! a greedy pass over hull steps in order of decreasing incremental
//! efficiency. The returned basic solution is one-hot in every group except
//! at most one, which has exactly two nonzeros.

use std::cmp::Ordering;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct LpSubproblem<T> {
    /// Contiguous, disjoint, nonempty index ranges covering `gains`.
    pub groups: Vec<Range<usize>>,
    pub gains: Vec<T>,
    pub costs: Vec<T>,
    pub budget: T,
}

impl<T: Scalar> LpSubproblem<T> {
    fn check(&self) -> Result<()> {
        if self.gains.len() != self.costs.len() {
            return Err(Error::Dimension { what: "LP costs", expected: self.gains.len(), got: self.costs.len() });
        }
        let mut next = 0;
        for g in &self.groups {
            if g.start != next || g.is_empty() {
                return Err(Error::arg("LP groups must be nonempty and contiguous"));
            }
            next = g.end;
        }
        if next != self.gains.len() {
            return Err(Error::Dimension { what: "LP groups", expected: self.gains.len(), got: next });
        }
        Ok(())
    }

    /// Sum over groups of the cheapest entry.
    pub fn min_cost(&self) -> T {
        let mut total = T::zero();
        for g in &self.groups {
            let mut m = self.costs[g.start];
            for &c in &self.costs[g.clone()] {
                if c < m {
                    m = c;
                }
            }
            total += m;
        }
        total
    }
}

/// Entries of a group on its upper convex hull in (cost, gain), cheapest first.
/// Every step strictly increases both cost and gain, with strictly
/// decreasing slope.
fn hull<T: Scalar>(p: &LpSubproblem<T>, g: &Range<usize>) -> Vec<usize> {
    let mut idx: Vec<usize> = g.clone().collect();
    // cost ascending, gain descending, index ascending
    idx.sort_by(|&a, &b| {
        p.costs[a]
            .partial_cmp(&p.costs[b])
            .unwrap_or(Ordering::Equal)
            .then(p.gains[b].partial_cmp(&p.gains[a]).unwrap_or(Ordering::Equal))
            .then(a.cmp(&b))
    });
    let mut out: Vec<usize> = Vec::new();
    for i in idx {
        if let Some(&last) = out.last() {
            // dominated: no cheaper-or-equal entry with a higher gain may precede it
            if p.gains[i] <= p.gains[last] {
                continue;
            }
        }
        // drop the middle point while the slope does not decrease
        while out.len() >= 2 {
            let (a, b) = (out[out.len() - 2], out[out.len() - 1]);
            let lhs = (p.gains[b] - p.gains[a]) * (p.costs[i] - p.costs[b]);
            let rhs = (p.gains[i] - p.gains[b]) * (p.costs[b] - p.costs[a]);
            if lhs <= rhs {
                out.pop();
            } else {
                break;
            }
        }
        out.push(i);
    }
    out
}

/// Exact optimum of the relaxed problem (see the module docs).
pub fn lp_solve<T: Scalar>(p: &LpSubproblem<T>) -> Result<Vec<T>> {
    lp_solve_priced(p).map(|(u, _)| u)
}

/// Like [`lp_solve`], also returning an optimal dual price of the budget:
/// the efficiency of the first hull step that did not fit, or zero when
/// every step fits.
pub fn lp_solve_priced<T: Scalar>(p: &LpSubproblem<T>) -> Result<(Vec<T>, T)> {
    p.check()?;
    let min_cost = p.min_cost();
    if min_cost > p.budget {
        return Err(Error::Infeasible { budget: p.budget.to_f(), min_cost: min_cost.to_f() });
    }
    let hulls: Vec<Vec<usize>> = p.groups.iter().map(|g| hull(p, g)).collect();
    let mut u = vec![T::zero(); p.gains.len()];
    let mut residual = p.budget;
    for h in &hulls {
        u[h[0]] = T::one();
        residual -= p.costs[h[0]];
    }
    // (group, step): move from hull[step] to hull[step + 1]
    let mut steps: Vec<(usize, usize)> = Vec::new();
    for (gi, h) in hulls.iter().enumerate() {
        for t in 0..h.len().saturating_sub(1) {
            steps.push((gi, t));
        }
    }
    let delta = |&(gi, t): &(usize, usize)| {
        let (a, b) = (hulls[gi][t], hulls[gi][t + 1]);
        (p.gains[b] - p.gains[a], p.costs[b] - p.costs[a])
    };
    // decreasing efficiency dg / dc, compared by cross-multiplication
    steps.sort_by(|x, y| {
        let (gx, cx) = delta(x);
        let (gy, cy) = delta(y);
        (gy * cx).partial_cmp(&(gx * cy)).unwrap_or(Ordering::Equal).then(x.cmp(y))
    });
    let mut price = T::zero();
    for s in &steps {
        let (gi, t) = *s;
        if t > 0 && u[hulls[gi][t]] != T::one() {
            // an earlier step of this group was not taken
            continue;
        }
        let (dg, dc) = delta(s);
        let (a, b) = (hulls[gi][t], hulls[gi][t + 1]);
        if dc <= residual {
            u[a] = T::zero();
            u[b] = T::one();
            residual -= dc;
        } else {
            if residual > T::zero() {
                let theta = residual / dc;
                u[a] = T::one() - theta;
                u[b] = theta;
            }
            price = dg / dc;
            break;
        }
    }
    Ok((u, price))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    fn r(n: i64) -> Rational64 {
        Rational64::from_integer(n)
    }

    #[test]
    fn slack_budget_picks_group_argmax() {
        let p = LpSubproblem {
            groups: vec![0..3, 3..5],
            gains: vec![1.0, 5.0, 2.0, -1.0, -3.0],
            costs: vec![1.0, 2.0, 3.0, 5.0, 1.0],
            budget: 100.0,
        };
        assert_eq!(lp_solve(&p).unwrap(), vec![0.0, 1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn budget_at_min_cost_gives_min_cost_assignment() {
        let p = LpSubproblem {
            groups: vec![0..3, 3..5],
            gains: vec![r(1), r(5), r(2), r(-1), r(-3)],
            costs: vec![r(2), r(3), r(1), r(5), r(1)],
            budget: r(2),
        };
        assert_eq!(lp_solve(&p).unwrap(), vec![r(0), r(0), r(1), r(0), r(1)]);
        let tight = LpSubproblem { budget: r(1), ..p };
        assert!(matches!(lp_solve(&tight), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn binding_budget_has_one_fractional_group() {
        let p = LpSubproblem {
            groups: vec![0..2, 2..4],
            gains: vec![r(0), r(4), r(0), r(3)],
            costs: vec![r(1), r(3), r(1), r(2)],
            budget: r(4),
        };
        // efficiencies: group 0: 4/2 = 2, group 1: 3/1 = 3 -> take group 1, then half of group 0
        let u = lp_solve(&p).unwrap();
        assert_eq!(u, vec![Rational64::new(1, 2), Rational64::new(1, 2), r(0), r(1)]);
    }

    #[test]
    fn malformed_groups_are_rejected() {
        let p = LpSubproblem { groups: vec![0..1, 2..3], gains: vec![0.0; 3], costs: vec![1.0; 3], budget: 9.0 };
        assert!(lp_solve(&p).is_err());
    }
}
