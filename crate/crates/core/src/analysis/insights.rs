use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::BilinearEstimator;
use crate::io::fmt_num;
use crate::oracle::LatencyModel;
use crate::space::{ConfigDescriptor, SearchSpace};

/// Averaged contributions of individual design choices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InsightReport {
    /// `[stage][k]`: gain of moving from depth choice `k` to `k + 1`.
    pub depth_increments: Vec<Vec<f64>>,
    /// Contrast name -> per-stage value averaged over the blocks.
    pub per_stage_averages: BTreeMap<String, Vec<f64>>,
    /// Contrast name -> per-block value averaged over the stages.
    pub per_block_averages: BTreeMap<String, Vec<f64>>,
    /// Mean block latency of every stage.
    pub latency_cost_per_block: Vec<f64>,
}

type Selector = fn(&ConfigDescriptor) -> bool;

/// (name, treated subset, reference subset).
const CONTRASTS: [(&str, Selector, Selector); 4] = [
    ("se_on_vs_off", |c| c.squeeze_excite, |c| !c.squeeze_excite),
    ("kernel_5_vs_3", |c| c.kernel_size == 5, |c| c.kernel_size == 3),
    ("er_3_vs_2", |c| c.expansion_ratio == 3, |c| c.expansion_ratio == 2),
    ("er_6_vs_3", |c| c.expansion_ratio == 6, |c| c.expansion_ratio == 3),
];

/// Difference of subset means of the config deltas of every (stage, block),
/// for every contrast whose two subsets are nonempty in the config table.
/// Errors when no contrast is defined.
pub fn insights(space: &SearchSpace, est: &BilinearEstimator<f64>, lat: &LatencyModel<f64>) -> Result<InsightReport> {
    if est.config.len() != space.alpha_len() || est.depth.len() != space.beta_len() {
        return Err(Error::Dimension { what: "estimator tables", expected: space.len(), got: est.config.len() + est.depth.len() });
    }
    if lat.block_latency.len() != space.alpha_len() {
        return Err(Error::Dimension { what: "latency table", expected: space.alpha_len(), got: lat.block_latency.len() });
    }
    let (s_n, d_n) = (space.num_stages(), space.max_depth());
    let mut per_stage = BTreeMap::new();
    let mut per_block = BTreeMap::new();
    for (name, treated, reference) in CONTRASTS {
        let a: Vec<usize> = (0..space.num_configs()).filter(|&c| treated(&space.configs()[c])).collect();
        let b: Vec<usize> = (0..space.num_configs()).filter(|&c| reference(&space.configs()[c])).collect();
        if a.is_empty() || b.is_empty() {
            continue;
        }
        let mean = |s: usize, blk: usize, set: &[usize]| {
            set.iter().map(|&c| est.config[space.alpha_index(s, blk, c)]).sum::<f64>() / set.len() as f64
        };
        let gap: Vec<Vec<f64>> =
            (0..s_n).map(|s| (0..d_n).map(|blk| mean(s, blk, &a) - mean(s, blk, &b)).collect()).collect();
        per_stage.insert(name.to_string(), gap.iter().map(|row| row.iter().sum::<f64>() / d_n as f64).collect());
        per_block.insert(
            name.to_string(),
            (0..d_n).map(|blk| gap.iter().map(|row| row[blk]).sum::<f64>() / s_n as f64).collect(),
        );
    }
    if per_stage.is_empty() {
        return Err(Error::arg("the config table has no attribute contrast (se, kernel 3/5, er 2/3/6)"));
    }
    let depth_increments = (0..s_n)
        .map(|s| est.depth[space.beta_group(s)].windows(2).map(|w| w[1] - w[0]).collect())
        .collect();
    let per = (d_n * space.num_configs()) as f64;
    let latency_cost_per_block = (0..s_n)
        .map(|s| {
            let start = space.alpha_group(s, 0).start;
            lat.block_latency[start..start + d_n * space.num_configs()].iter().sum::<f64>() / per
        })
        .collect();
    Ok(InsightReport {
        depth_increments,
        per_stage_averages: per_stage,
        per_block_averages: per_block,
        latency_cost_per_block,
    })
}

impl InsightReport {
    /// Long-format CSV: `kind,name,index,value` with 1-based indices.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "kind,name,index,value")?;
        for (s, row) in self.depth_increments.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                writeln!(out, "depth_increment,stage_{},{},{}", s + 1, k + 1, fmt_num(*v))?;
            }
        }
        for (name, vals) in &self.per_stage_averages {
            for (i, v) in vals.iter().enumerate() {
                writeln!(out, "per_stage,{name},{},{}", i + 1, fmt_num(*v))?;
            }
        }
        for (name, vals) in &self.per_block_averages {
            for (i, v) in vals.iter().enumerate() {
                writeln!(out, "per_block,{name},{},{}", i + 1, fmt_num(*v))?;
            }
        }
        for (s, v) in self.latency_cost_per_block.iter().enumerate() {
            writeln!(out, "latency_per_block,stage,{},{}", s + 1, fmt_num(*v))?;
        }
        Ok(())
    }
}
