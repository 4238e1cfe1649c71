//! The bilinear accuracy estimator: a base accuracy plus one contribution per
//! depth choice and per (stage, block, config), each measured by probing the
//! oracle with that decision pinned and everything else sampled uniformly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bilinear;
use crate::error::{Error, Result};
use crate::oracle::{LatencyModel, SyntheticSupernet};
use crate::scalar::Scalar;
use crate::space::{stage_options, ArchPoint, Architecture, Pin, SearchSpace};

/// What a configuration probe is compared against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfigBaseline {
    /// `E[Acc | c at b, depth = d*] - E[Acc | depth = d*]`, where `d*` is the
    /// pinned depth of the probe. Exact for additively separable oracles.
    #[default]
    DepthConditioned,
    /// `E[Acc | c at b, depth = d*] - E[Acc]`. Also credits every config
    /// with the gap of the pinned depth, so discrete predictions are offset.
    Global,
}

/// How each conditional expectation is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbePlan {
    /// Mean of `n_per_probe * n_repeats` noisy oracle queries.
    Sampled { n_per_probe: usize, n_repeats: usize },
    /// Exact expectation of the noiseless accuracy by weighted enumeration;
    /// refuses spaces with more than `cap` architectures.
    Exact { cap: u128 },
}

impl Default for ProbePlan {
    fn default() -> Self {
        ProbePlan::Sampled { n_per_probe: 100, n_repeats: 10 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BuildOptions {
    pub plan: ProbePlan,
    pub baseline: ConfigBaseline,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorMeta {
    pub n_per_probe: usize,
    pub n_repeats: usize,
    pub seed: u64,
    /// Number of probes run: one base probe plus one per decision variable.
    pub probes: usize,
    pub exact: bool,
    pub baseline: ConfigBaseline,
}

/// Which contribution table [`BilinearEstimator::ablate`] zeroes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Term {
    DepthDeltas,
    ConfigDeltas,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BilinearEstimator<T> {
    pub base: T,
    /// Laid out like `beta`.
    pub depth: Vec<T>,
    /// Laid out like `alpha`.
    pub config: Vec<T>,
    pub meta: EstimatorMeta,
}

#[derive(Serialize, Deserialize)]
struct EstimatorFile {
    base: f64,
    depth_deltas: Vec<Vec<f64>>,
    config_deltas: Vec<Vec<Vec<f64>>>,
    meta: EstimatorMeta,
}

/// Mean accuracy of `n` uniformly sampled architectures with `pins` applied.
pub fn probe_mean<R: Rng + ?Sized>(oracle: &SyntheticSupernet, pins: &[Pin], n: usize, rng: &mut R) -> Result<f64> {
    if n == 0 {
        return Err(Error::arg("a probe needs at least one sample"));
    }
    let space = oracle.space();
    let mut total = 0.0;
    for _ in 0..n {
        let arch = Architecture::sample_pinned(space, pins, rng);
        total += oracle.sample_accuracy(&arch, rng);
    }
    Ok(total / n as f64)
}

/// Exact `E[true_accuracy | pins]` under uniform sampling of the unpinned groups.
pub fn conditional_expectation(oracle: &SyntheticSupernet, pins: &[Pin], cap: u128) -> Result<f64> {
    let space = oracle.space();
    let count = space.arch_count();
    if count > cap {
        return Err(Error::CapExceeded { count, cap });
    }
    check_pins(space, pins)?;
    let c = space.num_configs() as f64;
    // per stage: (option, probability) restricted to the pinned decisions
    let mut stages = Vec::with_capacity(space.num_stages());
    for s in 0..space.num_stages() {
        let depth_pin = pins.iter().find_map(|p| match *p {
            Pin::Depth { stage, choice } if stage == s => Some(choice),
            _ => None,
        });
        let n_choices = space.depth_choices(s).len() as f64;
        let mut opts = Vec::new();
        for opt in stage_options(space, s) {
            let p_depth = match depth_pin {
                Some(j) if j != opt.depth_choice => continue,
                Some(_) => 1.0,
                None => 1.0 / n_choices,
            };
            let d = space.depth(s, opt.depth_choice);
            let mut p = p_depth;
            let mut excluded = false;
            for b in 0..d {
                let cfg_pin = pins.iter().find_map(|pin| match *pin {
                    Pin::Config { stage, block, config } if stage == s && block == b => Some(config),
                    _ => None,
                });
                match cfg_pin {
                    Some(cp) if cp != opt.config[b] => excluded = true,
                    Some(_) => {}
                    None => p /= c,
                }
            }
            if !excluded {
                opts.push((opt, p));
            }
        }
        stages.push(opts);
    }
    let mut cursor = vec![0usize; stages.len()];
    let mut total = 0.0;
    if stages.iter().any(|o| o.is_empty()) {
        return Err(Error::arg("pins exclude every architecture"));
    }
    loop {
        let mut w = 1.0;
        let mut arch = Architecture::first(space);
        for (s, (&i, opts)) in cursor.iter().zip(&stages).enumerate() {
            let (opt, p) = &opts[i];
            w *= p;
            arch.depth_choice[s] = opt.depth_choice;
            arch.config[s].clone_from(&opt.config);
        }
        // pinned configs on inactive blocks are carried for completeness
        arch.apply(&pins.iter().copied().filter(|p| matches!(p, Pin::Config { .. })).collect::<Vec<_>>());
        total += w * oracle.true_accuracy(&arch);
        let mut s = cursor.len();
        loop {
            if s == 0 {
                return Ok(total);
            }
            s -= 1;
            cursor[s] += 1;
            if cursor[s] < stages[s].len() {
                break;
            }
            cursor[s] = 0;
        }
    }
}

fn check_pins(space: &SearchSpace, pins: &[Pin]) -> Result<()> {
    for pin in pins {
        match *pin {
            Pin::Depth { stage, choice } => {
                if stage >= space.num_stages() || choice >= space.depth_choices(stage).len() {
                    return Err(Error::InvalidIndex(format!("depth pin (stage {stage}, choice {choice})")));
                }
            }
            Pin::Config { stage, block, config } => {
                if stage >= space.num_stages() || block >= space.max_depth() || config >= space.num_configs() {
                    return Err(Error::InvalidIndex(format!(
                        "config pin (stage {stage}, block {block}, config {config})"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Depth choice pinned by the probe of block `block`: the block is the last
/// active one when its depth is allowed, otherwise the shallowest allowed
/// depth that still activates it.
pub fn probe_depth_choice(space: &SearchSpace, stage: usize, block: usize) -> Result<usize> {
    if stage >= space.num_stages() || block >= space.max_depth() {
        return Err(Error::InvalidIndex(format!("(stage {stage}, block {block})")));
    }
    space
        .min_choice_covering(stage, block)
        .ok_or_else(|| Error::InvalidIndex(format!("no depth choice of stage {stage} reaches block {block}")))
}

fn config_pins(space: &SearchSpace, stage: usize, block: usize, config: usize) -> Result<[Pin; 2]> {
    if config >= space.num_configs() {
        return Err(Error::InvalidIndex(format!("config {config}")));
    }
    let choice = probe_depth_choice(space, stage, block)?;
    Ok([Pin::Depth { stage, choice }, Pin::Config { stage, block, config }])
}

/// Mean accuracy of `n` uniform architectures.
pub fn estimate_base<R: Rng + ?Sized>(oracle: &SyntheticSupernet, n: usize, rng: &mut R) -> Result<f64> {
    probe_mean(oracle, &[], n, rng)
}

/// Mean accuracy with stage `stage` at depth choice `choice`, minus `base`.
pub fn estimate_depth_delta<R: Rng + ?Sized>(
    oracle: &SyntheticSupernet,
    base: f64,
    stage: usize,
    choice: usize,
    n: usize,
    rng: &mut R,
) -> Result<f64> {
    let pins = [Pin::Depth { stage, choice }];
    check_pins(oracle.space(), &pins)?;
    Ok(probe_mean(oracle, &pins, n, rng)? - base)
}

/// Mean accuracy with config `config` at `block` and the stage depth pinned
/// to end at that block, minus `reference` (the base, or the mean accuracy
/// at the pinned depth, see [`ConfigBaseline`]).
pub fn estimate_config_delta<R: Rng + ?Sized>(
    oracle: &SyntheticSupernet,
    reference: f64,
    stage: usize,
    block: usize,
    config: usize,
    n: usize,
    rng: &mut R,
) -> Result<f64> {
    let pins = config_pins(oracle.space(), stage, block, config)?;
    Ok(probe_mean(oracle, &pins, n, rng)? - reference)
}

/// The rng of probe `index` (0 = base, then depth probes, then config probes).
pub fn probe_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

impl BilinearEstimator<f64> {
    /// Runs one base probe and one probe per decision variable. Probes run in
    /// parallel, each on its own rng stream, so the result does not depend on
    /// scheduling.
    pub fn build(oracle: &SyntheticSupernet, opts: &BuildOptions) -> Result<Self> {
        let space = oracle.space();
        let mut pin_sets: Vec<Vec<Pin>> = vec![Vec::new()];
        for s in 0..space.num_stages() {
            for choice in 0..space.depth_choices(s).len() {
                pin_sets.push(vec![Pin::Depth { stage: s, choice }]);
            }
        }
        for s in 0..space.num_stages() {
            for b in 0..space.max_depth() {
                for c in 0..space.num_configs() {
                    pin_sets.push(config_pins(space, s, b, c)?.to_vec());
                }
            }
        }
        let means: Vec<f64> = match opts.plan {
            ProbePlan::Sampled { n_per_probe, n_repeats } => {
                let n = n_per_probe
                    .checked_mul(n_repeats)
                    .filter(|&n| n > 0)
                    .ok_or_else(|| Error::arg("probe sizes must be positive"))?;
                pin_sets
                    .par_iter()
                    .enumerate()
                    .map(|(i, pins)| probe_mean(oracle, pins, n, &mut probe_rng(opts.seed, i)))
                    .collect::<Result<_>>()?
            }
            ProbePlan::Exact { cap } => {
                let count = space.arch_count();
                if count > cap {
                    return Err(Error::CapExceeded { count, cap });
                }
                pin_sets
                    .par_iter()
                    .map(|pins| conditional_expectation(oracle, pins, cap))
                    .collect::<Result<_>>()?
            }
        };
        let base = means[0];
        let depth: Vec<f64> = means[1..=space.beta_len()].iter().map(|m| m - base).collect();
        let mut config = vec![0.0; space.alpha_len()];
        let off = 1 + space.beta_len();
        for s in 0..space.num_stages() {
            for b in 0..space.max_depth() {
                let reference = match opts.baseline {
                    ConfigBaseline::Global => base,
                    ConfigBaseline::DepthConditioned => {
                        base + depth[space.beta_index(s, probe_depth_choice(space, s, b)?) - space.alpha_len()]
                    }
                };
                for c in 0..space.num_configs() {
                    let i = space.alpha_index(s, b, c);
                    config[i] = means[off + i] - reference;
                }
            }
        }
        let (n_per_probe, n_repeats, exact) = match opts.plan {
            ProbePlan::Sampled { n_per_probe, n_repeats } => (n_per_probe, n_repeats, false),
            ProbePlan::Exact { .. } => (0, 0, true),
        };
        Ok(BilinearEstimator {
            base,
            depth,
            config,
            meta: EstimatorMeta {
                n_per_probe,
                n_repeats,
                seed: opts.seed,
                probes: pin_sets.len(),
                exact,
                baseline: opts.baseline,
            },
        })
    }

    pub fn to_json(&self, space: &SearchSpace) -> Result<String> {
        let file = EstimatorFile {
            base: self.base,
            depth_deltas: (0..space.num_stages()).map(|s| self.depth[space.beta_group(s)].to_vec()).collect(),
            config_deltas: (0..space.num_stages())
                .map(|s| (0..space.max_depth()).map(|b| self.config[space.alpha_group(s, b)].to_vec()).collect())
                .collect(),
            meta: self.meta.clone(),
        };
        crate::io::to_canonical_json(&file)
    }

    pub fn from_json(space: &SearchSpace, text: &str) -> Result<Self> {
        let file: EstimatorFile = serde_json::from_str(text)?;
        let shape_err = |what| Error::arg(format!("estimator {what} do not match the search space"));
        if file.depth_deltas.len() != space.num_stages()
            || (0..space.num_stages()).any(|s| file.depth_deltas[s].len() != space.depth_choices(s).len())
        {
            return Err(shape_err("depth deltas"));
        }
        if file.config_deltas.len() != space.num_stages()
            || file.config_deltas.iter().any(|st| {
                st.len() != space.max_depth() || st.iter().any(|bl| bl.len() != space.num_configs())
            })
        {
            return Err(shape_err("config deltas"));
        }
        Ok(BilinearEstimator {
            base: file.base,
            depth: file.depth_deltas.concat(),
            config: file.config_deltas.concat().concat(),
            meta: file.meta,
        })
    }
}

impl<T: Scalar> BilinearEstimator<T> {
    fn check(&self, space: &SearchSpace) -> Result<()> {
        if self.depth.len() != space.beta_len() {
            return Err(Error::Dimension { what: "depth deltas", expected: space.beta_len(), got: self.depth.len() });
        }
        if self.config.len() != space.alpha_len() {
            return Err(Error::Dimension { what: "config deltas", expected: space.alpha_len(), got: self.config.len() });
        }
        Ok(())
    }

    /// Predicted accuracy of a (possibly continuous) point.
    pub fn eval_acc(&self, space: &SearchSpace, point: &ArchPoint<T>) -> Result<T> {
        self.check(space)?;
        point.check_dims(space)?;
        Ok(bilinear::eval(space, self.base, Some(&self.depth), &self.config, &point.alpha, &point.beta))
    }

    /// Predicted accuracy of a discrete architecture by direct lookup.
    pub fn of_arch(&self, space: &SearchSpace, arch: &Architecture) -> T {
        let mut total = self.base;
        for s in 0..space.num_stages() {
            total += self.depth[space.beta_index(s, arch.depth_choice[s]) - space.alpha_len()];
            for b in 0..arch.depth(space, s) {
                total += self.config[space.alpha_index(s, b, arch.config[s][b])];
            }
        }
        total
    }

    /// Copy with one contribution table set to zero.
    pub fn ablate(&self, term: Term) -> Self {
        let mut out = self.clone();
        match term {
            Term::DepthDeltas => out.depth.iter_mut().for_each(|x| *x = T::zero()),
            Term::ConfigDeltas => out.config.iter_mut().for_each(|x| *x = T::zero()),
        }
        out
    }

    /// Gradient of the predicted accuracy with respect to `alpha`.
    pub fn grad_alpha(&self, space: &SearchSpace, beta: &[T]) -> Vec<T> {
        bilinear::alpha_row(space, &self.config, beta)
    }

    /// Gradient of the predicted accuracy with respect to `beta`.
    pub fn grad_beta(&self, space: &SearchSpace, alpha: &[T]) -> Vec<T> {
        bilinear::beta_row(space, Some(&self.depth), &self.config, alpha)
    }

    pub fn cast<U: Scalar>(&self) -> BilinearEstimator<U> {
        BilinearEstimator {
            base: U::of(self.base.to_f()),
            depth: self.depth.iter().map(|x| U::of(x.to_f())).collect(),
            config: self.config.iter().map(|x| U::of(x.to_f())).collect(),
            meta: self.meta.clone(),
        }
    }
}

/// Predicted latency of a point; see [`LatencyModel::eval`].
pub fn eval_lat<T: Scalar>(lat: &LatencyModel<T>, space: &SearchSpace, point: &ArchPoint<T>) -> Result<T> {
    lat.eval(space, point)
}
