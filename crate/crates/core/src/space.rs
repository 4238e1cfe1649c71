//! Search-space parametrization: stages, blocks, configurations and the
//! `(alpha, beta)` index layout.
//!
//! A point `zeta = (alpha, beta)` stores one simplex group per (stage, block)
//! over the configurations and one simplex group per stage over the allowed
//! depths. Layout is stage-major, then block, then config for `alpha`,
//! followed by the stage-major depth entries for `beta`.

use std::fmt;
use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{sum, Scalar};

/// The bundled 5-stage, 12-configuration space (depths 2..=4 per stage).
pub const PAPER_SPACE_JSON: &str = include_str!("../data/paper_space.json");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigDescriptor {
    /// 1-based, contiguous.
    #[serde(rename = "id")]
    pub config_id: usize,
    #[serde(rename = "er")]
    pub expansion_ratio: u32,
    #[serde(rename = "k")]
    pub kernel_size: u32,
    #[serde(rename = "se")]
    pub squeeze_excite: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawSpace {
    num_stages: usize,
    max_depth: usize,
    depth_choices: Vec<Vec<usize>>,
    configs: Vec<ConfigDescriptor>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSpace", into = "RawSpace")]
pub struct SearchSpace {
    num_stages: usize,
    max_depth: usize,
    depth_choices: Vec<Vec<usize>>,
    configs: Vec<ConfigDescriptor>,
    beta_offsets: Vec<usize>,
}

impl TryFrom<RawSpace> for SearchSpace {
    type Error = Error;

    fn try_from(raw: RawSpace) -> Result<Self> {
        SearchSpace::new(raw.num_stages, raw.max_depth, raw.depth_choices, raw.configs)
    }
}

impl From<SearchSpace> for RawSpace {
    fn from(s: SearchSpace) -> Self {
        RawSpace {
            num_stages: s.num_stages,
            max_depth: s.max_depth,
            depth_choices: s.depth_choices,
            configs: s.configs,
        }
    }
}

impl SearchSpace {
    pub fn new(
        num_stages: usize,
        max_depth: usize,
        depth_choices: Vec<Vec<usize>>,
        configs: Vec<ConfigDescriptor>,
    ) -> Result<Self> {
        if num_stages == 0 {
            return Err(Error::InvalidSpace("num_stages must be positive".into()));
        }
        if depth_choices.len() != num_stages {
            return Err(Error::InvalidSpace(format!(
                "depth_choices has {} stages, expected {num_stages}",
                depth_choices.len()
            )));
        }
        if configs.is_empty() {
            return Err(Error::InvalidSpace("config table is empty".into()));
        }
        for (i, c) in configs.iter().enumerate() {
            if c.config_id != i + 1 {
                return Err(Error::InvalidSpace(format!(
                    "config ids must be contiguous from 1; position {} has id {}",
                    i + 1,
                    c.config_id
                )));
            }
        }
        let mut observed_max = 0;
        for (s, choices) in depth_choices.iter().enumerate() {
            if choices.is_empty() {
                return Err(Error::InvalidSpace(format!("stage {s} has no depth choices")));
            }
            if choices.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidSpace(format!(
                    "stage {s} depth choices are not strictly increasing"
                )));
            }
            if choices[0] < 1 || *choices.last().unwrap() > max_depth {
                return Err(Error::InvalidSpace(format!(
                    "stage {s} depth choices must lie in [1, {max_depth}]"
                )));
            }
            observed_max = observed_max.max(*choices.last().unwrap());
        }
        if observed_max != max_depth {
            return Err(Error::InvalidSpace(format!(
                "max_depth {max_depth} differs from the largest allowed depth {observed_max}"
            )));
        }
        let alpha_len = num_stages * max_depth * configs.len();
        let mut beta_offsets = Vec::with_capacity(num_stages);
        let mut off = alpha_len;
        for choices in &depth_choices {
            beta_offsets.push(off);
            off += choices.len();
        }
        Ok(SearchSpace {
            num_stages,
            max_depth,
            depth_choices,
            configs,
            beta_offsets,
        })
    }

    /// Same depth choices for every stage.
    pub fn uniform(
        num_stages: usize,
        depths: &[usize],
        configs: Vec<ConfigDescriptor>,
    ) -> Result<Self> {
        let max_depth = depths.iter().copied().max().unwrap_or(0);
        SearchSpace::new(num_stages, max_depth, vec![depths.to_vec(); num_stages], configs)
    }

    /// The 12-row (er, k, se) configuration table, indexed by expected latency.
    pub fn standard_configs() -> Vec<ConfigDescriptor> {
        let mut out = Vec::with_capacity(12);
        for er in [2, 3, 6] {
            for k in [3, 5] {
                for se in [false, true] {
                    out.push(ConfigDescriptor {
                        config_id: out.len() + 1,
                        expansion_ratio: er,
                        kernel_size: k,
                        squeeze_excite: se,
                    });
                }
            }
        }
        out
    }

    pub fn paper() -> Self {
        serde_json::from_str(PAPER_SPACE_JSON).expect("bundled space is valid")
    }

    /// One stage, depths {1, 2}, two configs: 6 effective architectures.
    pub fn tiny() -> Self {
        let configs = Self::standard_configs().into_iter().take(2).collect();
        SearchSpace::uniform(1, &[1, 2], configs).expect("valid preset")
    }

    /// Three stages, depths {1, 2, 3}, four configs: 84^3 architectures.
    pub fn small() -> Self {
        let configs = Self::standard_configs().into_iter().take(4).collect();
        SearchSpace::uniform(3, &[1, 2, 3], configs).expect("valid preset")
    }

    pub fn num_stages(&self) -> usize {
        self.num_stages
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn num_configs(&self) -> usize {
        self.configs.len()
    }

    pub fn configs(&self) -> &[ConfigDescriptor] {
        &self.configs
    }

    pub fn depth_choices(&self, stage: usize) -> &[usize] {
        &self.depth_choices[stage]
    }

    /// Depth value of choice `j` in `stage`.
    pub fn depth(&self, stage: usize, j: usize) -> usize {
        self.depth_choices[stage][j]
    }

    pub fn alpha_len(&self) -> usize {
        self.num_stages * self.max_depth * self.configs.len()
    }

    pub fn beta_len(&self) -> usize {
        self.depth_choices.iter().map(Vec::len).sum()
    }

    /// Total length `N` of `zeta`.
    pub fn len(&self) -> usize {
        self.alpha_len() + self.beta_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Index of `alpha[s][b][c]` in `zeta` (all 0-based).
    pub fn alpha_index(&self, stage: usize, block: usize, config: usize) -> usize {
        (stage * self.max_depth + block) * self.configs.len() + config
    }

    /// Index of `beta[s][j]` in `zeta`.
    pub fn beta_index(&self, stage: usize, j: usize) -> usize {
        self.beta_offsets[stage] + j
    }

    /// Range of `alpha` entries (within the alpha vector) for one (stage, block) group.
    pub fn alpha_group(&self, stage: usize, block: usize) -> Range<usize> {
        let start = self.alpha_index(stage, block, 0);
        start..start + self.configs.len()
    }

    /// Range of `beta` entries (within the beta vector) for one stage.
    pub fn beta_group(&self, stage: usize) -> Range<usize> {
        let start = self.beta_offsets[stage] - self.alpha_len();
        start..start + self.depth_choices[stage].len()
    }

    /// Whether block `block` (0-based) is active under depth choice `j`.
    pub fn block_active(&self, stage: usize, j: usize, block: usize) -> bool {
        self.depth_choices[stage][j] > block
    }

    /// Smallest depth choice index whose depth keeps `block` (0-based) active.
    pub fn min_choice_covering(&self, stage: usize, block: usize) -> Option<usize> {
        self.depth_choices[stage].iter().position(|&d| d > block)
    }

    /// Effective architectures of one stage: `sum_d |C|^d`.
    pub fn stage_arch_count(&self, stage: usize) -> u128 {
        let c = self.configs.len() as u128;
        self.depth_choices[stage]
            .iter()
            .map(|&d| c.checked_pow(d as u32).unwrap_or(u128::MAX))
            .fold(0u128, |a, x| a.saturating_add(x))
    }

    /// Number of distinct effective architectures (saturating).
    pub fn arch_count(&self) -> u128 {
        (0..self.num_stages)
            .map(|s| self.stage_arch_count(s))
            .fold(1u128, |a, x| a.saturating_mul(x))
    }
}

/// Continuous (simplex groups) or discrete (one-hot groups).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointMode {
    Continuous,
    Discrete,
}

/// A point `zeta = (alpha, beta)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ArchPoint<T> {
    pub alpha: Vec<T>,
    pub beta: Vec<T>,
    pub mode: PointMode,
}

/// One discrete architecture: a depth choice per stage and a config per block.
///
/// Configs of blocks beyond the chosen depth are carried but never affect
/// accuracy or latency.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Architecture {
    /// Index into `depth_choices(s)` for every stage.
    pub depth_choice: Vec<usize>,
    /// `config[s][b]`, 0-based config index for every block `b < max_depth`.
    pub config: Vec<Vec<usize>>,
}

impl Architecture {
    /// Every stage at its first depth choice, every block at config 0.
    pub fn first(space: &SearchSpace) -> Self {
        Architecture {
            depth_choice: vec![0; space.num_stages()],
            config: vec![vec![0; space.max_depth()]; space.num_stages()],
        }
    }

    pub fn depth(&self, space: &SearchSpace, stage: usize) -> usize {
        space.depth(stage, self.depth_choice[stage])
    }

    /// Uniform draw over every group independently.
    pub fn sample<R: Rng + ?Sized>(space: &SearchSpace, rng: &mut R) -> Self {
        let c = space.num_configs();
        let mut depth_choice = Vec::with_capacity(space.num_stages());
        let mut config = Vec::with_capacity(space.num_stages());
        for s in 0..space.num_stages() {
            let blocks: Vec<usize> = (0..space.max_depth()).map(|_| rng.random_range(0..c)).collect();
            config.push(blocks);
            depth_choice.push(rng.random_range(0..space.depth_choices(s).len()));
        }
        Architecture { depth_choice, config }
    }

    /// Uniform draw with the pinned decisions overwritten afterwards, so the
    /// rng consumption does not depend on the pins.
    pub fn sample_pinned<R: Rng + ?Sized>(space: &SearchSpace, pins: &[Pin], rng: &mut R) -> Self {
        let mut a = Self::sample(space, rng);
        a.apply(pins);
        a
    }

    pub fn apply(&mut self, pins: &[Pin]) {
        for pin in pins {
            match *pin {
                Pin::Depth { stage, choice } => self.depth_choice[stage] = choice,
                Pin::Config { stage, block, config } => self.config[stage][block] = config,
            }
        }
    }

    /// Sets the configs of inactive blocks to 0.
    pub fn canonical(mut self, space: &SearchSpace) -> Self {
        for s in 0..space.num_stages() {
            let d = self.depth(space, s);
            for b in d..space.max_depth() {
                self.config[s][b] = 0;
            }
        }
        self
    }

    /// Indices into `zeta` of every decision that affects the network:
    /// the chosen depth of each stage and the configs of its active blocks.
    pub fn active_indices(&self, space: &SearchSpace) -> Vec<usize> {
        let mut out = Vec::new();
        for s in 0..space.num_stages() {
            let d = self.depth(space, s);
            for b in 0..d {
                out.push(space.alpha_index(s, b, self.config[s][b]));
            }
            out.push(space.beta_index(s, self.depth_choice[s]));
        }
        out.sort_unstable();
        out
    }

    /// All one-hot indices, including configs of inactive blocks.
    pub fn hot_indices(&self, space: &SearchSpace) -> Vec<usize> {
        let mut out = Vec::new();
        for s in 0..space.num_stages() {
            for b in 0..space.max_depth() {
                out.push(space.alpha_index(s, b, self.config[s][b]));
            }
        }
        for s in 0..space.num_stages() {
            out.push(space.beta_index(s, self.depth_choice[s]));
        }
        out
    }

    pub fn validate(&self, space: &SearchSpace) -> Result<()> {
        if self.depth_choice.len() != space.num_stages() || self.config.len() != space.num_stages() {
            return Err(Error::Dimension {
                what: "architecture stages",
                expected: space.num_stages(),
                got: self.depth_choice.len().min(self.config.len()),
            });
        }
        for s in 0..space.num_stages() {
            if self.depth_choice[s] >= space.depth_choices(s).len() {
                return Err(Error::InvalidIndex(format!("stage {s} depth choice {}", self.depth_choice[s])));
            }
            if self.config[s].len() != space.max_depth() {
                return Err(Error::Dimension {
                    what: "architecture blocks",
                    expected: space.max_depth(),
                    got: self.config[s].len(),
                });
            }
            if let Some(&c) = self.config[s].iter().find(|&&c| c >= space.num_configs()) {
                return Err(Error::InvalidIndex(format!("stage {s} config {c}")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (s, (j, cfg)) in self.depth_choice.iter().zip(&self.config).enumerate() {
            if s > 0 {
                write!(f, " | ")?;
            }
            write!(f, "d#{j}:")?;
            for c in cfg {
                write!(f, " {}", c + 1)?;
            }
        }
        Ok(())
    }
}

/// A decision fixed while the rest of the space is sampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pin {
    Depth { stage: usize, choice: usize },
    Config { stage: usize, block: usize, config: usize },
}

/// Identifies one simplex group.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Group {
    Alpha { stage: usize, block: usize },
    Beta { stage: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Negative { group: Group, offset: usize, value: f64 },
    /// `residual = 1 - sum`.
    SimplexSum { group: Group, residual: f64 },
    NotOneHot { group: Group },
}

impl<T: Scalar> ArchPoint<T> {
    pub fn from_arch(space: &SearchSpace, arch: &Architecture) -> Self {
        let mut alpha = vec![T::zero(); space.alpha_len()];
        let mut beta = vec![T::zero(); space.beta_len()];
        for s in 0..space.num_stages() {
            for b in 0..space.max_depth() {
                alpha[space.alpha_index(s, b, arch.config[s][b])] = T::one();
            }
            beta[space.beta_group(s).start + arch.depth_choice[s]] = T::one();
        }
        ArchPoint { alpha, beta, mode: PointMode::Discrete }
    }

    /// Every group at its barycentre.
    pub fn uniform(space: &SearchSpace) -> Self {
        let a = T::one() / T::of(space.num_configs() as f64);
        let mut beta = Vec::with_capacity(space.beta_len());
        for s in 0..space.num_stages() {
            let n = space.depth_choices(s).len();
            beta.extend(std::iter::repeat_n(T::one() / T::of(n as f64), n));
        }
        ArchPoint {
            alpha: vec![a; space.alpha_len()],
            beta,
            mode: PointMode::Continuous,
        }
    }

    pub fn check_dims(&self, space: &SearchSpace) -> Result<()> {
        if self.alpha.len() != space.alpha_len() {
            return Err(Error::Dimension {
                what: "alpha",
                expected: space.alpha_len(),
                got: self.alpha.len(),
            });
        }
        if self.beta.len() != space.beta_len() {
            return Err(Error::Dimension {
                what: "beta",
                expected: space.beta_len(),
                got: self.beta.len(),
            });
        }
        Ok(())
    }

    /// Concatenated `zeta`.
    pub fn zeta(&self) -> Vec<T> {
        let mut z = self.alpha.clone();
        z.extend_from_slice(&self.beta);
        z
    }

    /// Back to a discrete architecture; `None` unless every group is one-hot.
    pub fn to_arch(&self, space: &SearchSpace) -> Option<Architecture> {
        let one_hot = |xs: &[T]| -> Option<usize> {
            let mut hot = None;
            for (i, x) in xs.iter().enumerate() {
                if *x == T::one() {
                    if hot.is_some() {
                        return None;
                    }
                    hot = Some(i);
                } else if *x != T::zero() {
                    return None;
                }
            }
            hot
        };
        let mut arch = Architecture::first(space);
        for s in 0..space.num_stages() {
            for b in 0..space.max_depth() {
                arch.config[s][b] = one_hot(&self.alpha[space.alpha_group(s, b)])?;
            }
            arch.depth_choice[s] = one_hot(&self.beta[space.beta_group(s)])?;
        }
        Some(arch)
    }
}

fn check_group<T: Scalar>(xs: &[T], group: Group, discrete: bool, out: &mut Vec<Violation>) {
    for (offset, x) in xs.iter().enumerate() {
        if *x < T::zero() {
            out.push(Violation::Negative { group, offset, value: x.to_f() });
        }
    }
    let total = sum(xs.iter().copied());
    if (total - T::one()).abs() > T::simplex_tol() {
        out.push(Violation::SimplexSum {
            group,
            residual: (T::one() - total).to_f(),
        });
    }
    if discrete {
        let ones = xs.iter().filter(|&&x| x == T::one()).count();
        let zeros = xs.iter().filter(|&&x| x == T::zero()).count();
        if ones != 1 || ones + zeros != xs.len() {
            out.push(Violation::NotOneHot { group });
        }
    }
}

/// Lists every violated nonnegativity, simplex-sum or one-hot condition.
/// An empty list means the point is valid.
pub fn validate<T: Scalar>(point: &ArchPoint<T>, space: &SearchSpace) -> Result<Vec<Violation>> {
    point.check_dims(space)?;
    let discrete = point.mode == PointMode::Discrete;
    let mut out = Vec::new();
    for s in 0..space.num_stages() {
        for b in 0..space.max_depth() {
            check_group(
                &point.alpha[space.alpha_group(s, b)],
                Group::Alpha { stage: s, block: b },
                discrete,
                &mut out,
            );
        }
    }
    for s in 0..space.num_stages() {
        check_group(&point.beta[space.beta_group(s)], Group::Beta { stage: s }, discrete, &mut out);
    }
    Ok(out)
}

pub fn sample_uniform<T: Scalar, R: Rng + ?Sized>(space: &SearchSpace, rng: &mut R) -> ArchPoint<T> {
    ArchPoint::from_arch(space, &Architecture::sample(space, rng))
}

/// Index of the largest entry; ties go to the lowest index.
pub(crate) fn argmax<T: Scalar>(xs: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate().skip(1) {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

/// Per-group argmax one-hot rounding; ties go to the lowest index.
pub fn discretize<T: Scalar>(point: &ArchPoint<T>, space: &SearchSpace) -> Result<ArchPoint<T>> {
    point.check_dims(space)?;
    let mut arch = Architecture::first(space);
    for s in 0..space.num_stages() {
        for b in 0..space.max_depth() {
            arch.config[s][b] = argmax(&point.alpha[space.alpha_group(s, b)]);
        }
        arch.depth_choice[s] = argmax(&point.beta[space.beta_group(s)]);
    }
    Ok(ArchPoint::from_arch(space, &arch))
}

/// One effective configuration of a single stage: a depth choice plus the
/// configs of its active blocks (inactive blocks canonicalized to 0).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageOption {
    pub depth_choice: usize,
    pub config: Vec<usize>,
}

/// Every effective option of `stage`, depth-major then lexicographic in configs.
pub fn stage_options(space: &SearchSpace, stage: usize) -> Vec<StageOption> {
    let c = space.num_configs();
    let mut out = Vec::new();
    for (j, &d) in space.depth_choices(stage).iter().enumerate() {
        let total = c.pow(d as u32);
        for mut code in 0..total {
            let mut config = vec![0usize; space.max_depth()];
            // last active block varies fastest
            for b in (0..d).rev() {
                config[b] = code % c;
                code /= c;
            }
            out.push(StageOption { depth_choice: j, config });
        }
    }
    out
}

/// Iterator over every distinct effective architecture.
pub struct Enumerate {
    options: Vec<Vec<StageOption>>,
    cursor: Vec<usize>,
    done: bool,
}

impl Iterator for Enumerate {
    type Item = Architecture;

    fn next(&mut self) -> Option<Architecture> {
        if self.done {
            return None;
        }
        let arch = Architecture {
            depth_choice: self.cursor.iter().zip(&self.options).map(|(&i, o)| o[i].depth_choice).collect(),
            config: self.cursor.iter().zip(&self.options).map(|(&i, o)| o[i].config.clone()).collect(),
        };
        let mut s = self.cursor.len();
        loop {
            if s == 0 {
                self.done = true;
                break;
            }
            s -= 1;
            self.cursor[s] += 1;
            if self.cursor[s] < self.options[s].len() {
                break;
            }
            self.cursor[s] = 0;
        }
        Some(arch)
    }
}

/// Enumerates every effective architecture exactly once, refusing when the
/// count exceeds `cap`.
pub fn enumerate(space: &SearchSpace, cap: u128) -> Result<Enumerate> {
    let count = space.arch_count();
    if count > cap {
        return Err(Error::CapExceeded { count, cap });
    }
    let options: Vec<_> = (0..space.num_stages()).map(|s| stage_options(space, s)).collect();
    Ok(Enumerate {
        cursor: vec![0; options.len()],
        options,
        done: false,
    })
}
