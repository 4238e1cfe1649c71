use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{Architecture, SearchSpace};

/// Parameters for [`SyntheticSupernet::generate`].
#[derive(Clone, Debug, PartialEq)]
pub struct OracleParams {
    pub base: f64,
    /// Std of the zero-mean depth effects, percent.
    pub depth_scale: f64,
    /// Std of the zero-mean config effects, percent.
    pub config_scale: f64,
    pub epsilon: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for OracleParams {
    fn default() -> Self {
        OracleParams {
            base: 70.0,
            depth_scale: 0.5,
            config_scale: 0.2,
            epsilon: 0.0,
            noise_std: 0.0,
            seed: 0,
        }
    }
}

/// On-disk layout of an oracle model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleFile {
    pub base: f64,
    /// `[stage][depth choice]`
    pub depth_effects: Vec<Vec<f64>>,
    /// `[stage][block][config]`
    pub config_effects: Vec<Vec<Vec<f64>>>,
    pub epsilon: f64,
    pub noise_std: f64,
    pub seed: u64,
}

/// Parametric ground-truth accuracy model standing in for a trained supernetwork.
///
/// `true_accuracy = base + sum_s e[s][d_s] + sum_s sum_{b < d_s} f[s][b][c_b] + pairs`,
/// where `pairs` sums a frozen coefficient over every unordered pair of
/// active decisions (see [`Architecture::active_indices`]). The coefficient of
/// pair `(i, j)`, `i < j`, is `u * epsilon * base / N` with `u ~ U(-1, 1)`
/// drawn from `ChaCha8Rng::seed_from_u64(seed)` on stream 1, iterating `i`
/// then `j` in increasing order. With `epsilon = 0` the model is additively
/// separable over decisions.
#[derive(Clone, Debug)]
pub struct SyntheticSupernet {
    space: SearchSpace,
    base: f64,
    depth_effects: Vec<Vec<f64>>,
    config_effects: Vec<Vec<Vec<f64>>>,
    epsilon: f64,
    noise_std: f64,
    seed: u64,
    pair_coef: Vec<f64>,
    noise: Option<Normal<f64>>,
}

/// Position of pair `(i, j)`, `i < j < n`, in a row-major strict upper triangle.
pub(crate) fn pair_slot(i: usize, j: usize, n: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl SyntheticSupernet {
    pub fn new(
        space: SearchSpace,
        base: f64,
        depth_effects: Vec<Vec<f64>>,
        config_effects: Vec<Vec<Vec<f64>>>,
        epsilon: f64,
        noise_std: f64,
        seed: u64,
    ) -> Result<Self> {
        if depth_effects.len() != space.num_stages() || config_effects.len() != space.num_stages() {
            return Err(Error::Dimension {
                what: "oracle stages",
                expected: space.num_stages(),
                got: depth_effects.len().min(config_effects.len()),
            });
        }
        for s in 0..space.num_stages() {
            if depth_effects[s].len() != space.depth_choices(s).len() {
                return Err(Error::Dimension {
                    what: "depth effects",
                    expected: space.depth_choices(s).len(),
                    got: depth_effects[s].len(),
                });
            }
            if config_effects[s].len() != space.max_depth()
                || config_effects[s].iter().any(|r| r.len() != space.num_configs())
            {
                return Err(Error::Dimension {
                    what: "config effects",
                    expected: space.max_depth() * space.num_configs(),
                    got: config_effects[s].iter().map(Vec::len).sum(),
                });
            }
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::arg(format!("epsilon must be finite and >= 0, got {epsilon}")));
        }
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(Error::arg(format!("noise_std must be finite and >= 0, got {noise_std}")));
        }
        let n = space.len();
        let mut pair_coef = Vec::new();
        if epsilon > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1);
            let scale = epsilon * base / n as f64;
            pair_coef.reserve(n * (n - 1) / 2);
            for i in 0..n {
                for _j in (i + 1)..n {
                    pair_coef.push(rng.random_range(-1.0..1.0) * scale);
                }
            }
        }
        let noise = if noise_std > 0.0 {
            Some(Normal::new(0.0, noise_std).map_err(|e| Error::arg(e.to_string()))?)
        } else {
            None
        };
        Ok(SyntheticSupernet {
            space,
            base,
            depth_effects,
            config_effects,
            epsilon,
            noise_std,
            seed,
            pair_coef,
            noise,
        })
    }

    /// Draws zero-mean Gaussian effects from `ChaCha8Rng::seed_from_u64(seed)`, stream 0.
    pub fn generate(space: &SearchSpace, params: &OracleParams) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let draw = |scale: f64, rng: &mut ChaCha8Rng| -> Result<f64> {
            if scale == 0.0 {
                return Ok(0.0);
            }
            let d = Normal::new(0.0, scale).map_err(|e| Error::arg(e.to_string()))?;
            Ok(d.sample(rng))
        };
        let mut depth_effects = Vec::new();
        let mut config_effects = Vec::new();
        for s in 0..space.num_stages() {
            let mut row = Vec::new();
            for _ in space.depth_choices(s) {
                row.push(draw(params.depth_scale, &mut rng)?);
            }
            depth_effects.push(row);
            let mut blocks = Vec::new();
            for _ in 0..space.max_depth() {
                let mut cfg = Vec::new();
                for _ in 0..space.num_configs() {
                    cfg.push(draw(params.config_scale, &mut rng)?);
                }
                blocks.push(cfg);
            }
            config_effects.push(blocks);
        }
        SyntheticSupernet::new(
            space.clone(),
            params.base,
            depth_effects,
            config_effects,
            params.epsilon,
            params.noise_std,
            params.seed,
        )
    }

    pub fn from_file(space: SearchSpace, file: OracleFile) -> Result<Self> {
        SyntheticSupernet::new(
            space,
            file.base,
            file.depth_effects,
            file.config_effects,
            file.epsilon,
            file.noise_std,
            file.seed,
        )
    }

    pub fn to_file(&self) -> OracleFile {
        OracleFile {
            base: self.base,
            depth_effects: self.depth_effects.clone(),
            config_effects: self.config_effects.clone(),
            epsilon: self.epsilon,
            noise_std: self.noise_std,
            seed: self.seed,
        }
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn depth_effects(&self) -> &[Vec<f64>] {
        &self.depth_effects
    }

    pub fn config_effects(&self) -> &[Vec<Vec<f64>>] {
        &self.config_effects
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sum of frozen pair coefficients over the active decisions of `arch`.
    pub fn interaction(&self, arch: &Architecture) -> f64 {
        if self.pair_coef.is_empty() {
            return 0.0;
        }
        let n = self.space.len();
        let idx = arch.active_indices(&self.space);
        let mut acc = 0.0;
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                acc += self.pair_coef[pair_slot(i, j, n)];
            }
        }
        acc
    }

    pub fn true_accuracy(&self, arch: &Architecture) -> f64 {
        let mut acc = self.base;
        for s in 0..self.space.num_stages() {
            let j = arch.depth_choice[s];
            acc += self.depth_effects[s][j];
            for b in 0..self.space.depth(s, j) {
                acc += self.config_effects[s][b][arch.config[s][b]];
            }
        }
        acc + self.interaction(arch)
    }

    /// One noisy observation: `true_accuracy + N(0, noise_std)`.
    /// Consumes no randomness when `noise_std == 0`.
    pub fn sample_accuracy<R: Rng + ?Sized>(&self, arch: &Architecture, rng: &mut R) -> f64 {
        let t = self.true_accuracy(arch);
        match &self.noise {
            Some(d) => t + d.sample(rng),
            None => t,
        }
    }
}
