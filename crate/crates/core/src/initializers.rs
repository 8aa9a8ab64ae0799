//! Initial estimates for the LLA algorithm: generalized thresholding and
//! cross-validated threshold and Lasso initializers.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::graph::{edge_pairs, EdgeVector};
use crate::linalg::max_abs;
use crate::scalar::Scalar;
use crate::solvers::{LinearModel, LogisticModel, LossModel, SolverOptions};

pub const DEFAULT_CV_FOLDS: usize = 10;
const DEFAULT_GRID_POINTS: usize = 30;
const DEFAULT_GRID_RATIO: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    Hard,
    Soft,
}

/// Entrywise hard or soft thresholding at level `gamma`.
pub fn generalized_threshold<T: Scalar>(
    beta: ArrayView1<'_, T>,
    gamma: T,
    kind: ThresholdKind,
) -> Array1<T> {
    match kind {
        ThresholdKind::Hard => beta.mapv(|z| if z.abs() > gamma { z } else { T::zero() }),
        ThresholdKind::Soft => beta.mapv(|z| crate::solvers::soft_threshold(z, gamma)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Zero,
    Raw,
    HardThreshold,
    SoftThreshold,
    LassoCv,
}

impl std::str::FromStr for InitKind {
    type Err = crate::error::FclsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Self::Zero),
            "raw" | "empirical" => Ok(Self::Raw),
            "hard" | "hard-cv" | "hard_threshold" => Ok(Self::HardThreshold),
            "soft" | "soft-cv" | "soft_threshold" => Ok(Self::SoftThreshold),
            "lasso" | "lasso-cv" | "lasso_cv" => Ok(Self::LassoCv),
            other => Err(invalid(format!("unknown initializer '{other}'"))),
        }
    }
}

/// How to build the LLA initializer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitSpec {
    pub kind: InitKind,
    /// Fixed threshold or Lasso level; when absent it is chosen by CV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default = "default_folds")]
    pub cv_folds: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
}

fn default_folds() -> usize {
    DEFAULT_CV_FOLDS
}

impl InitSpec {
    pub fn new(kind: InitKind) -> Self {
        Self {
            kind,
            gamma: None,
            cv_folds: DEFAULT_CV_FOLDS,
            grid: None,
            seed: 0,
        }
    }

    pub fn threshold_kind(&self) -> Option<ThresholdKind> {
        match self.kind {
            InitKind::HardThreshold => Some(ThresholdKind::Hard),
            InitKind::SoftThreshold => Some(ThresholdKind::Soft),
            _ => None,
        }
    }
}

/// Seeded permutation split of `0..n` into `folds` near-equal parts.
pub fn cv_folds(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(invalid("cross-validation needs at least two folds"));
    }
    if n < folds {
        return Err(invalid(format!("{n} samples cannot fill {folds} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = vec![Vec::with_capacity(n / folds + 1); folds];
    for (pos, idx) in order.into_iter().enumerate() {
        out[pos % folds].push(idx);
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

fn complement(n: usize, fold: &[usize]) -> Vec<usize> {
    let mut held = vec![false; n];
    for &i in fold {
        held[i] = true;
    }
    (0..n).filter(|&i| !held[i]).collect()
}

/// `n_points` log-spaced values from `top` down to `top · ratio`.
pub fn log_grid<T: Scalar>(top: T, n_points: usize, ratio: T) -> Vec<T> {
    if n_points == 1 {
        return vec![top];
    }
    let last = T::from_usize(n_points - 1).unwrap();
    (0..n_points)
        .map(|k| top * ratio.powf(T::from_usize(k).unwrap() / last))
        .collect()
}

/// 30 log-spaced thresholds from `‖b‖_max` to `‖b‖_max · 1e-3`, plus 0.
pub fn default_threshold_grid<T: Scalar>(estimate: ArrayView1<'_, T>) -> Vec<T> {
    let top = max_abs(estimate.iter().copied());
    let mut grid = if top > T::zero() {
        log_grid(top, DEFAULT_GRID_POINTS, T::lit(DEFAULT_GRID_RATIO))
    } else {
        Vec::new()
    };
    grid.push(T::zero());
    grid
}

/// 30 log-spaced Lasso levels from the killer bound down three decades.
pub fn default_lasso_grid<T: Scalar>(killer_bound: T) -> Vec<T> {
    if killer_bound > T::zero() {
        log_grid(killer_bound, DEFAULT_GRID_POINTS, T::lit(DEFAULT_GRID_RATIO))
    } else {
        vec![T::zero()]
    }
}

/// Sorted descending, duplicates removed.
fn normalize_grid<T: Scalar>(grid: &[T]) -> Result<Vec<T>> {
    if grid.is_empty() {
        return Err(invalid("tuning grid is empty"));
    }
    if grid.iter().any(|g| !(*g >= T::zero()) || !g.is_finite()) {
        return Err(invalid("tuning grid values must be finite and nonnegative"));
    }
    let mut g = grid.to_vec();
    g.sort_by(|a, b| b.partial_cmp(a).unwrap());
    g.dedup();
    Ok(g)
}

/// Index of the smallest error; ties go to the earliest (largest) grid value.
fn argmin_first<T: Scalar>(errors: &[T]) -> usize {
    let mut best = 0;
    for (k, e) in errors.iter().enumerate() {
        if *e < errors[best] || (errors[best].is_nan() && !e.is_nan()) {
            best = k;
        }
    }
    best
}

/// Outcome of a cross-validated selection.
#[derive(Clone, Debug, PartialEq)]
pub struct CvChoice<T> {
    pub gamma: T,
    pub init: Array1<T>,
    /// Descending grid that was searched.
    pub grid: Vec<T>,
    /// Fold-averaged error for each grid value.
    pub cv_errors: Vec<T>,
}

/// Raw observations from which an edge-vector estimate is formed.
pub trait SampleEstimator<T: Scalar>: Sync {
    fn n_samples(&self) -> usize;

    /// The estimate computed from the given observation rows.
    fn estimate(&self, rows: &[usize]) -> Array1<T>;

    fn full_estimate(&self) -> Array1<T> {
        let all: Vec<usize> = (0..self.n_samples()).collect();
        self.estimate(&all)
    }
}

/// Observations `xᵢ ∈ R^D` of the parameter itself; the estimate is their mean.
#[derive(Clone, Debug)]
pub struct MeanSamples<T> {
    samples: Array2<T>,
}

impl<T: Scalar> MeanSamples<T> {
    pub fn new(samples: Array2<T>) -> Self {
        Self { samples }
    }

    pub fn samples(&self) -> &Array2<T> {
        &self.samples
    }
}

impl<T: Scalar> SampleEstimator<T> for MeanSamples<T> {
    fn n_samples(&self) -> usize {
        self.samples.nrows()
    }

    fn estimate(&self, rows: &[usize]) -> Array1<T> {
        let mut acc = Array1::zeros(self.samples.ncols());
        for &r in rows {
            acc += &self.samples.row(r);
        }
        acc / T::from_usize(rows.len().max(1)).unwrap()
    }
}

/// Observations `xᵢ ∈ R^d`; the estimate is the upper triangle of the
/// (mean-centred, `1/n`) empirical covariance.
#[derive(Clone, Debug)]
pub struct CovarianceSamples<T> {
    samples: Array2<T>,
}

impl<T: Scalar> CovarianceSamples<T> {
    pub fn new(samples: Array2<T>) -> Self {
        Self { samples }
    }

    pub fn samples(&self) -> &Array2<T> {
        &self.samples
    }

    /// Full empirical covariance matrix of the given rows.
    pub fn covariance(&self, rows: &[usize]) -> Array2<T> {
        let sub = self.samples.select(Axis(0), rows);
        let m = T::from_usize(rows.len().max(1)).unwrap();
        let mean = sub.sum_axis(Axis(0)) / m;
        let centred = &sub - &mean;
        centred.t().dot(&centred) / m
    }
}

impl<T: Scalar> SampleEstimator<T> for CovarianceSamples<T> {
    fn n_samples(&self) -> usize {
        self.samples.nrows()
    }

    fn estimate(&self, rows: &[usize]) -> Array1<T> {
        let cov = self.covariance(rows);
        let d = cov.nrows();
        Array1::from_iter(edge_pairs(d).map(|(i, j)| cov[[i, j]]))
    }
}

/// Picks the threshold minimizing the fold-averaged squared error between the
/// thresholded training estimate and the held-out estimate.
pub fn cv_select_threshold<T: Scalar, S: SampleEstimator<T> + ?Sized>(
    data: &S,
    kind: ThresholdKind,
    folds: usize,
    grid: Option<&[T]>,
    seed: u64,
) -> Result<CvChoice<T>> {
    let n = data.n_samples();
    let split = cv_folds(n, folds, seed)?;
    let full = data.full_estimate();
    let grid = match grid {
        Some(g) => normalize_grid(g)?,
        None => normalize_grid(&default_threshold_grid(full.view()))?,
    };

    let per_fold: Vec<Vec<T>> = split
        .par_iter()
        .map(|held| {
            let train = data.estimate(&complement(n, held));
            let test = data.estimate(held);
            grid.iter()
                .map(|&g| {
                    let fit = generalized_threshold(train.view(), g, kind);
                    fit.iter()
                        .zip(test.iter())
                        .map(|(a, b)| (*a - *b) * (*a - *b))
                        .sum::<T>()
                })
                .collect()
        })
        .collect();
    let cv_errors = average_columns(&per_fold, grid.len());
    let best = argmin_first(&cv_errors);
    let gamma = grid[best];
    Ok(CvChoice {
        gamma,
        init: generalized_threshold(full.view(), gamma, kind),
        grid,
        cv_errors,
    })
}

fn average_columns<T: Scalar>(rows: &[Vec<T>], width: usize) -> Vec<T> {
    let k = T::from_usize(rows.len()).unwrap();
    (0..width)
        .map(|j| rows.iter().map(|r| r[j]).sum::<T>() / k)
        .collect()
}

/// Loss models that can be split by observation for cross-validation.
pub trait CvModel<T: Scalar>: LossModel<T> + Sized {
    fn n_obs(&self) -> usize;
    fn subset(&self, rows: &[usize]) -> Result<Self>;
    /// Predictive loss on this model's observations (no penalty terms).
    fn held_out_loss(&self, beta: ArrayView1<'_, T>) -> T;
}

impl<T: Scalar> CvModel<T> for LinearModel<T> {
    fn n_obs(&self) -> usize {
        self.n()
    }

    fn subset(&self, rows: &[usize]) -> Result<Self> {
        LinearModel::subset(self, rows)
    }

    fn held_out_loss(&self, beta: ArrayView1<'_, T>) -> T {
        self.value(beta)
    }
}

impl<T: Scalar> CvModel<T> for LogisticModel<T> {
    fn n_obs(&self) -> usize {
        self.n()
    }

    fn subset(&self, rows: &[usize]) -> Result<Self> {
        LogisticModel::subset(self, rows)
    }

    fn held_out_loss(&self, beta: ArrayView1<'_, T>) -> T {
        self.deviance(beta)
    }
}

/// Lasso solutions along a descending grid of levels `γ` (weights `M = 2γ`),
/// warm-started from the previous grid point.
pub fn lasso_path<T: Scalar, L: LossModel<T> + ?Sized>(
    model: &L,
    grid: &[T],
    opts: &SolverOptions<T>,
) -> Result<Vec<Array1<T>>> {
    let dim = model.dim();
    let mut warm: Option<Array1<T>> = None;
    let mut out = Vec::with_capacity(grid.len());
    for &g in grid {
        let w = Array1::from_elem(dim, g + g);
        let beta = model.weighted_lasso(w.view(), warm.as_ref().map(|b| b.view()), opts)?;
        warm = Some(beta.clone());
        out.push(beta);
    }
    Ok(out)
}

/// Picks the Lasso level minimizing fold-averaged held-out loss, then refits
/// on all observations.
pub fn cv_select_lasso<T: Scalar, M: CvModel<T>>(
    model: &M,
    folds: usize,
    grid: Option<&[T]>,
    seed: u64,
    opts: &SolverOptions<T>,
) -> Result<CvChoice<T>> {
    let n = model.n_obs();
    let split = cv_folds(n, folds, seed)?;
    let grid = match grid {
        Some(g) => normalize_grid(g)?,
        None => normalize_grid(&default_lasso_grid(model.killer_lasso_bound()))?,
    };

    let per_fold: Vec<Vec<T>> = split
        .par_iter()
        .map(|held| -> Result<Vec<T>> {
            let train = model.subset(&complement(n, held))?;
            let test = model.subset(held)?;
            let path = lasso_path(&train, &grid, opts)?;
            Ok(path.iter().map(|b| test.held_out_loss(b.view())).collect())
        })
        .collect::<Result<_>>()?;
    let cv_errors = average_columns(&per_fold, grid.len());
    let best = argmin_first(&cv_errors);
    let gamma = grid[best];
    // Refit along the grid so the full-data solution is warm-started as in CV.
    let init = lasso_path(model, &grid[..=best], opts)?.pop().expect("nonempty grid prefix");
    Ok(CvChoice {
        gamma,
        init,
        grid,
        cv_errors,
    })
}

/// Wraps an initializer vector as an edge vector over `d` nodes.
pub fn as_edge_vector<T: Scalar>(d: usize, init: Array1<T>) -> Result<EdgeVector<T>> {
    EdgeVector::new(d, init)
}
