//! Learned quadratic accuracy predictors fitted in closed form: the
//! centered least-squares problem is solved through a k-truncated SVD of the
//! expanded design matrix, and k is picked on a validation split.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{kendall_tau, ArchScorer};
use crate::error::{Error, Result};
use crate::oracle::SyntheticSupernet;
use crate::space::{ArchPoint, Architecture, SearchSpace};

/// Singular values below this fraction of the largest are not inverted.
pub const RELATIVE_RANK_TOL: f64 = 1e-12;

/// Which second-order terms of `zeta` the predictor may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Only `alpha[s][b][c] * beta[s][j]` with `depth_j > b`: the terms the
    /// bilinear accuracy form can use.
    Bilinear,
    /// Bilinear terms plus every `alpha x alpha` and `beta x beta` pair
    /// `i < j` from different groups (same-group products and squares are
    /// redundant on one-hot points).
    FullQuadratic,
}

/// Index pairs `(i, j)`, `i < j`, into `zeta` of the family's cross terms.
pub fn feature_pairs(space: &SearchSpace, family: Family) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    if family == Family::FullQuadratic {
        for i in 0..space.alpha_len() {
            for j in i + 1..space.alpha_len() {
                if !same_alpha_group(space, i, j) {
                    out.push((i, j));
                }
            }
        }
    }
    for s in 0..space.num_stages() {
        for b in 0..space.max_depth() {
            for c in 0..space.num_configs() {
                for j in 0..space.depth_choices(s).len() {
                    if space.block_active(s, j, b) {
                        out.push((space.alpha_index(s, b, c), space.beta_index(s, j)));
                    }
                }
            }
        }
    }
    if family == Family::FullQuadratic {
        for s in 0..space.num_stages() {
            for t in s + 1..space.num_stages() {
                for j in 0..space.depth_choices(s).len() {
                    for l in 0..space.depth_choices(t).len() {
                        out.push((space.beta_index(s, j), space.beta_index(t, l)));
                    }
                }
            }
        }
    }
    out.sort_unstable();
    out
}

fn same_alpha_group(space: &SearchSpace, i: usize, j: usize) -> bool {
    i / space.num_configs() == j / space.num_configs()
}

/// Expanded feature row `(zeta, zeta_i * zeta_j for every pair)`.
fn expand(zeta: &[f64], pairs: &[(usize, usize)]) -> Vec<f64> {
    let mut row = Vec::with_capacity(zeta.len() + pairs.len());
    row.extend_from_slice(zeta);
    row.extend(pairs.iter().map(|&(i, j)| zeta[i] * zeta[j]));
    row
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadEntry {
    pub i: usize,
    pub j: usize,
    pub v: f64,
}

/// `intercept + linear . zeta + sum_{(i, j, v)} v * zeta_i * zeta_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticPredictor {
    pub family: Family,
    pub intercept: f64,
    pub linear: Vec<f64>,
    pub quad_entries: Vec<QuadEntry>,
    pub k: usize,
}

impl QuadraticPredictor {
    pub fn zero(space: &SearchSpace, family: Family) -> Self {
        QuadraticPredictor {
            family,
            intercept: 0.0,
            linear: vec![0.0; space.len()],
            quad_entries: feature_pairs(space, family).into_iter().map(|(i, j)| QuadEntry { i, j, v: 0.0 }).collect(),
            k: 0,
        }
    }

    fn check(&self, space: &SearchSpace) -> Result<()> {
        if self.linear.len() != space.len() {
            return Err(Error::Dimension { what: "predictor linear terms", expected: space.len(), got: self.linear.len() });
        }
        if let Some(e) = self.quad_entries.iter().find(|e| e.i >= e.j || e.j >= space.len()) {
            return Err(Error::InvalidIndex(format!("quadratic entry ({}, {})", e.i, e.j)));
        }
        Ok(())
    }

    pub fn predict(&self, space: &SearchSpace, point: &ArchPoint<f64>) -> Result<f64> {
        self.check(space)?;
        point.check_dims(space)?;
        Ok(self.predict_zeta(&point.zeta()))
    }

    fn predict_zeta(&self, z: &[f64]) -> f64 {
        let mut total = self.intercept;
        for (w, x) in self.linear.iter().zip(z) {
            total += w * x;
        }
        for e in &self.quad_entries {
            total += e.v * z[e.i] * z[e.j];
        }
        total
    }

    pub fn predict_arch(&self, space: &SearchSpace, arch: &Architecture) -> f64 {
        let hot = arch.hot_indices(space);
        let mut on = vec![false; space.len()];
        for &h in &hot {
            on[h] = true;
        }
        let mut total = self.intercept + hot.iter().map(|&h| self.linear[h]).sum::<f64>();
        for e in &self.quad_entries {
            if on[e.i] && on[e.j] {
                total += e.v;
            }
        }
        total
    }
}

impl ArchScorer for QuadraticPredictor {
    fn score(&self, space: &SearchSpace, arch: &Architecture) -> f64 {
        self.predict_arch(space, arch)
    }
}

/// Sampled architectures with measured accuracies and a train/validation/test split.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionDataset {
    pub archs: Vec<Architecture>,
    pub targets: Vec<f64>,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Split manifest stored next to the dataset CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Collection sizes for [`collect_dataset`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DatasetSizes {
    /// Architectures split into train and validation.
    pub n: usize,
    /// Fraction of `n` used for validation.
    pub val_fraction: f64,
    /// Additional held-out draws.
    pub n_test: usize,
}

impl Default for DatasetSizes {
    fn default() -> Self {
        DatasetSizes { n: 2000, val_fraction: 0.2, n_test: 500 }
    }
}

/// Draws `n + n_test` uniform architectures with one noisy measurement each.
/// The first `(1 - val_fraction) n` are training data, the rest of the first
/// `n` validation, and the final `n_test` the test split.
pub fn collect_dataset<R: Rng + ?Sized>(oracle: &SyntheticSupernet, sizes: DatasetSizes, rng: &mut R) -> Result<RegressionDataset> {
    if sizes.n == 0 || !(0.0..1.0).contains(&sizes.val_fraction) {
        return Err(Error::arg("dataset needs n >= 1 and a validation fraction in [0, 1)"));
    }
    let total = sizes.n + sizes.n_test;
    let mut archs = Vec::with_capacity(total);
    let mut targets = Vec::with_capacity(total);
    for _ in 0..total {
        let a = Architecture::sample(oracle.space(), rng);
        targets.push(oracle.sample_accuracy(&a, rng));
        archs.push(a);
    }
    let n_val = (sizes.n as f64 * sizes.val_fraction).round() as usize;
    let n_train = (sizes.n - n_val).max(1);
    Ok(RegressionDataset {
        archs,
        targets,
        train: (0..n_train).collect(),
        val: (n_train..sizes.n).collect(),
        test: (sizes.n..total).collect(),
    })
}

impl RegressionDataset {
    pub fn new(archs: Vec<Architecture>, targets: Vec<f64>, split: SplitManifest) -> Result<Self> {
        if archs.len() != targets.len() {
            return Err(Error::Dimension { what: "dataset targets", expected: archs.len(), got: targets.len() });
        }
        let mut seen = vec![false; archs.len()];
        for &i in split.train.iter().chain(&split.val).chain(&split.test) {
            if i >= archs.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidIndex(format!("split index {i} out of range or repeated")));
            }
        }
        Ok(RegressionDataset { archs, targets, train: split.train, val: split.val, test: split.test })
    }

    pub fn manifest(&self) -> SplitManifest {
        SplitManifest { train: self.train.clone(), val: self.val.clone(), test: self.test.clone() }
    }

    fn subset(&self, idx: &[usize]) -> (Vec<&Architecture>, Vec<f64>) {
        (idx.iter().map(|&i| &self.archs[i]).collect(), idx.iter().map(|&i| self.targets[i]).collect())
    }

    /// CSV with columns `zeta_indices,accuracy`; `zeta_indices` lists the
    /// hot entries of `zeta` (0-based, one per group) separated by spaces.
    pub fn write_csv<W: Write>(&self, space: &SearchSpace, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["zeta_indices", "accuracy"])?;
        for (a, t) in self.archs.iter().zip(&self.targets) {
            let idx: Vec<String> = a.hot_indices(space).iter().map(|i| i.to_string()).collect();
            w.write_record([idx.join(" "), crate::io::fmt_num(*t)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(space: &SearchSpace, input: R, split: SplitManifest) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut archs = Vec::new();
        let mut targets = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::arg("dataset rows need zeta_indices and accuracy"));
            }
            let idx: Vec<usize> = rec[0]
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::arg(format!("bad zeta index '{t}'"))))
                .collect::<Result<_>>()?;
            let mut zeta = vec![0.0; space.len()];
            for &i in &idx {
                if i >= space.len() {
                    return Err(Error::InvalidIndex(format!("zeta index {i}")));
                }
                zeta[i] = 1.0;
            }
            let n = space.alpha_len();
            let point = ArchPoint { alpha: zeta[..n].to_vec(), beta: zeta[n..].to_vec(), mode: crate::space::PointMode::Discrete };
            let arch = point
                .to_arch(space)
                .ok_or_else(|| Error::arg(format!("row '{}' is not one architecture", &rec[0])))?;
            archs.push(arch);
            targets.push(rec[1].trim().parse().map_err(|_| Error::arg(format!("bad accuracy '{}'", &rec[1])))?);
        }
        Self::new(archs, targets, split)
    }
}

/// Centered design matrix and its SVD; yields the regression weights for any
/// number of components without refactoring.
pub struct ClosedFormFit {
    family: Family,
    pairs: Vec<(usize, usize)>,
    n_zeta: usize,
    col_mean: Vec<f64>,
    y_mean: f64,
    /// `U^T yhat`, one entry per singular value.
    uty: Vec<f64>,
    singular: Vec<f64>,
    v: DMatrix<f64>,
}

impl ClosedFormFit {
    pub fn new(space: &SearchSpace, family: Family, zetas: &[Vec<f64>], targets: &[f64]) -> Result<Self> {
        if zetas.len() != targets.len() {
            return Err(Error::Dimension { what: "regression targets", expected: zetas.len(), got: targets.len() });
        }
        if zetas.is_empty() {
            return Err(Error::arg("regression needs at least one observation"));
        }
        if let Some(z) = zetas.iter().find(|z| z.len() != space.len()) {
            return Err(Error::Dimension { what: "zeta", expected: space.len(), got: z.len() });
        }
        let pairs = feature_pairs(space, family);
        let n = zetas.len();
        let p = space.len() + pairs.len();
        let mut x = DMatrix::<f64>::zeros(n, p);
        for (r, z) in zetas.iter().enumerate() {
            for (c, v) in expand(z, &pairs).into_iter().enumerate() {
                x[(r, c)] = v;
            }
        }
        let col_mean: Vec<f64> = (0..p).map(|c| x.column(c).sum() / n as f64).collect();
        for c in 0..p {
            let m = col_mean[c];
            x.column_mut(c).add_scalar_mut(-m);
        }
        let y_mean = targets.iter().sum::<f64>() / n as f64;
        let yhat = DVector::from_iterator(n, targets.iter().map(|y| y - y_mean));
        let svd = nalgebra::SVD::new(x, true, true);
        let u = svd.u.ok_or_else(|| Error::Numerical("SVD did not return U".into()))?;
        let v_t = svd.v_t.ok_or_else(|| Error::Numerical("SVD did not return V".into()))?;
        let uty = (u.transpose() * &yhat).iter().copied().collect();
        Ok(ClosedFormFit {
            family,
            pairs,
            n_zeta: space.len(),
            col_mean,
            y_mean,
            uty,
            singular: svd.singular_values.iter().copied().collect(),
            v: v_t.transpose(),
        })
    }

    /// Number of singular values available for truncation.
    pub fn max_components(&self) -> usize {
        self.singular.len()
    }

    /// Number of singular values above the relative rank threshold.
    pub fn numerical_rank(&self) -> usize {
        let top = self.singular.first().copied().unwrap_or(0.0);
        self.singular.iter().filter(|&&s| s > RELATIVE_RANK_TOL * top && s > 0.0).count()
    }

    /// Predictor from the top `k` components: `W = V_k diag(1/s_k) U_k^T yhat`,
    /// intercept `mean(y - X W)`.
    pub fn predictor(&self, k: usize) -> Result<QuadraticPredictor> {
        if k == 0 {
            return Err(Error::arg("the number of components must be at least 1"));
        }
        if k > self.max_components() {
            return Err(Error::arg(format!("k = {k} exceeds the {} available singular values", self.max_components())));
        }
        let used = k.min(self.numerical_rank());
        let p = self.v.nrows();
        let mut w = vec![0.0; p];
        for t in 0..used {
            let coef = self.uty[t] / self.singular[t];
            for (r, wr) in w.iter_mut().enumerate() {
                *wr += self.v[(r, t)] * coef;
            }
        }
        // mean(y - X W) = mean(y) - mean(X) W
        let intercept = self.y_mean - self.col_mean.iter().zip(&w).map(|(m, x)| m * x).sum::<f64>();
        Ok(QuadraticPredictor {
            family: self.family,
            intercept,
            linear: w[..self.n_zeta].to_vec(),
            quad_entries: self
                .pairs
                .iter()
                .zip(&w[self.n_zeta..])
                .map(|(&(i, j), &v)| QuadEntry { i, j, v })
                .collect(),
            k,
        })
    }
}

fn zetas(space: &SearchSpace, archs: &[&Architecture]) -> Vec<Vec<f64>> {
    archs.iter().map(|a| ArchPoint::<f64>::from_arch(space, a).zeta()).collect()
}

/// Fits on the training split with `k` components.
pub fn fit_closed_form(space: &SearchSpace, data: &RegressionDataset, family: Family, k: usize) -> Result<QuadraticPredictor> {
    let (archs, y) = data.subset(&data.train);
    ClosedFormFit::new(space, family, &zetas(space, &archs), &y)?.predictor(k)
}

/// The `k` in `k_grid` with the best validation Kendall tau; ties and
/// undefined correlations go to the smaller `k`. Grid entries beyond the
/// available singular values are skipped.
pub fn select_components(space: &SearchSpace, data: &RegressionDataset, family: Family, k_grid: &[usize]) -> Result<usize> {
    if k_grid.is_empty() {
        return Err(Error::arg("empty component grid"));
    }
    let mut grid = k_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    if grid.len() == 1 {
        return Ok(grid[0]);
    }
    let (archs, y) = data.subset(&data.train);
    let fit = ClosedFormFit::new(space, family, &zetas(space, &archs), &y)?;
    let (val_archs, val_y) = data.subset(&data.val);
    let mut best: Option<(usize, f64)> = None;
    for &k in &grid {
        if k == 0 || k > fit.max_components() {
            continue;
        }
        let pred = fit.predictor(k)?;
        let p: Vec<f64> = val_archs.iter().map(|a| pred.predict_arch(space, a)).collect();
        let kt = kendall_tau(&p, &val_y).unwrap_or(f64::NEG_INFINITY);
        if best.is_none_or(|(_, b)| kt > b) {
            best = Some((k, kt));
        }
    }
    best.map(|(k, _)| k).ok_or_else(|| Error::arg("no grid entry is a valid component count"))
}
