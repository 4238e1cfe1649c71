use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bilinear;
use crate::error::{Error, Result};
use crate::io::fmt_num;
use crate::scalar::Scalar;
use crate::space::{ArchPoint, Architecture, SearchSpace};

/// Per-block latency table `t[s][b][c]` (laid out like `alpha`) plus the
/// latency of the non-searchable part of the network.
#[derive(Clone, Debug, PartialEq)]
pub struct LatencyModel<T> {
    pub block_latency: Vec<T>,
    pub fixed_overhead: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatencyRanges {
    pub min_ms: f64,
    pub max_ms: f64,
    pub overhead_ms: f64,
}

impl Default for LatencyRanges {
    fn default() -> Self {
        LatencyRanges { min_ms: 1.0, max_ms: 5.0, overhead_ms: 10.0 }
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    fixed_overhead_ms: f64,
}

#[derive(Serialize, Deserialize)]
struct Row {
    stage: usize,
    block: usize,
    config_id: usize,
    latency_ms: f64,
}

impl<T: Scalar> LatencyModel<T> {
    pub fn new(space: &SearchSpace, block_latency: Vec<T>, fixed_overhead: T) -> Result<Self> {
        if block_latency.len() != space.alpha_len() {
            return Err(Error::Dimension {
                what: "latency table",
                expected: space.alpha_len(),
                got: block_latency.len(),
            });
        }
        if let Some(bad) = block_latency.iter().find(|t| **t <= T::zero()) {
            return Err(Error::arg(format!("block latencies must be positive, found {bad}")));
        }
        if fixed_overhead < T::zero() {
            return Err(Error::arg("fixed overhead must be nonnegative"));
        }
        Ok(LatencyModel { block_latency, fixed_overhead })
    }

    pub fn get(&self, space: &SearchSpace, stage: usize, block: usize, config: usize) -> T {
        self.block_latency[space.alpha_index(stage, block, config)]
    }

    /// Bilinear latency `alpha^T Theta beta` plus the fixed overhead.
    pub fn eval(&self, space: &SearchSpace, point: &ArchPoint<T>) -> Result<T> {
        point.check_dims(space)?;
        Ok(bilinear::eval(space, self.fixed_overhead, None, &self.block_latency, &point.alpha, &point.beta))
    }

    /// Latency of a discrete architecture.
    pub fn of_arch(&self, space: &SearchSpace, arch: &Architecture) -> T {
        let mut total = self.fixed_overhead;
        for s in 0..space.num_stages() {
            for b in 0..arch.depth(space, s) {
                total += self.get(space, s, b, arch.config[s][b]);
            }
        }
        total
    }

    pub fn to_f64(&self) -> LatencyModel<f64> {
        LatencyModel {
            block_latency: self.block_latency.iter().map(|t| t.to_f()).collect(),
            fixed_overhead: self.fixed_overhead.to_f(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> LatencyModel<U> {
        LatencyModel {
            block_latency: self.block_latency.iter().map(|t| U::of(t.to_f())).collect(),
            fixed_overhead: U::of(self.fixed_overhead.to_f()),
        }
    }
}

/// Draws `t[s][b][c]` log-uniformly in `[min_ms, max_ms]`, then assigns the
/// sorted draws of each (stage, block) to configs ordered by
/// (expansion ratio, kernel size, squeeze-excite, id), so latency is
/// nondecreasing in each attribute with the others held fixed.
pub fn gen_latency<R: Rng + ?Sized>(space: &SearchSpace, rng: &mut R, ranges: LatencyRanges) -> Result<LatencyModel<f64>> {
    let LatencyRanges { min_ms, max_ms, overhead_ms } = ranges;
    if !(min_ms > 0.0 && max_ms >= min_ms && max_ms.is_finite()) {
        return Err(Error::arg(format!("invalid latency range [{min_ms}, {max_ms}]")));
    }
    if !(overhead_ms >= 0.0 && overhead_ms.is_finite()) {
        return Err(Error::arg(format!("invalid overhead {overhead_ms}")));
    }
    let mut order: Vec<usize> = (0..space.num_configs()).collect();
    let cfg = space.configs();
    order.sort_by_key(|&c| (cfg[c].expansion_ratio, cfg[c].kernel_size, cfg[c].squeeze_excite, c));
    let (lo, hi) = (min_ms.ln(), max_ms.ln());
    let mut table = vec![0.0; space.alpha_len()];
    for s in 0..space.num_stages() {
        for b in 0..space.max_depth() {
            let mut draws: Vec<f64> = (0..space.num_configs())
                .map(|_| {
                    if min_ms == max_ms {
                        min_ms
                    } else {
                        rng.random_range(lo..hi).exp()
                    }
                })
                .collect();
            draws.sort_by(f64::total_cmp);
            for (rank, &c) in order.iter().enumerate() {
                table[space.alpha_index(s, b, c)] = draws[rank];
            }
        }
    }
    LatencyModel::new(space, table, overhead_ms)
}

impl LatencyModel<f64> {
    /// CSV with columns `stage,block,config_id,latency_ms` (all 1-based),
    /// preceded by a `# {"fixed_overhead_ms": ...}` header line.
    pub fn write_csv<W: Write>(&self, space: &SearchSpace, mut out: W) -> Result<()> {
        writeln!(out, "# {{\"fixed_overhead_ms\":{}}}", fmt_num(self.fixed_overhead))?;
        writeln!(out, "stage,block,config_id,latency_ms")?;
        for s in 0..space.num_stages() {
            for b in 0..space.max_depth() {
                for c in 0..space.num_configs() {
                    writeln!(out, "{},{},{},{}", s + 1, b + 1, c + 1, fmt_num(self.get(space, s, b, c)))?;
                }
            }
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(space: &SearchSpace, mut input: R) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
        let header: Header = match first.trim().strip_prefix('#') {
            Some(js) => serde_json::from_str(js.trim())?,
            None => return Err(Error::arg("latency CSV must start with a '# {\"fixed_overhead_ms\": ...}' line")),
        };
        let mut table = vec![f64::NAN; space.alpha_len()];
        let mut rdr = csv::Reader::from_reader(rest.as_bytes());
        for row in rdr.deserialize() {
            let row: Row = row?;
            if row.stage == 0
                || row.stage > space.num_stages()
                || row.block == 0
                || row.block > space.max_depth()
                || row.config_id == 0
                || row.config_id > space.num_configs()
            {
                return Err(Error::InvalidIndex(format!(
                    "latency row ({}, {}, {}) outside the search space",
                    row.stage, row.block, row.config_id
                )));
            }
            table[space.alpha_index(row.stage - 1, row.block - 1, row.config_id - 1)] = row.latency_ms;
        }
        if table.iter().any(|t| t.is_nan()) {
            return Err(Error::arg("latency CSV does not cover every (stage, block, config)"));
        }
        LatencyModel::new(space, table, header.fixed_overhead_ms)
    }
}
