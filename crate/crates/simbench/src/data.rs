//! Block-structured targets and the four data-generating families.

use fcls_core::graph::{block_support, edge_index, BlockSupport, EdgeVector};
use fcls_core::initializers::{CovarianceSamples, MeanSamples, SampleEstimator};
use fcls_core::linalg::cholesky;
use fcls_core::solvers::{block_oracle, LinearModel, LogisticModel, LossModel, ShrinkageModel, SolverOptions};
use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SimError};
use crate::scenario::{Family, Signal, SimScenario};

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `(n, rep)` cell of a scenario.
pub fn cell_seed(seed: u64, n: usize, rep: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ n as u64) ^ rep as u64)
}

/// Independent stream `k` derived from a cell seed.
pub fn stream_seed(cell: u64, k: u64) -> u64 {
    splitmix64(cell ^ k.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

const TARGET_STREAM: u64 = 1;
const DATA_STREAM: u64 = 2;
pub(crate) const CV_STREAM: u64 = 3;

/// Fully connected blocks on consecutive nodes followed by `n_isolated`
/// isolated nodes; within-block edges carry the signal.
pub fn make_block_target(
    block_sizes: &[usize],
    n_isolated: usize,
    signal: Signal,
    seed: u64,
) -> Result<(EdgeVector<f64>, BlockSupport)> {
    if block_sizes.is_empty() || block_sizes.contains(&0) {
        return Err(SimError::Invalid("block sizes must be positive".into()));
    }
    let d = block_sizes.iter().sum::<usize>() + n_isolated;
    if d < 2 {
        return Err(SimError::Invalid("target needs at least 2 nodes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut beta = EdgeVector::zeros(d);
    let mut start = 0;
    for &size in block_sizes {
        for i in start..start + size {
            for j in (i + 1)..start + size {
                let v = match signal {
                    Signal::Constant(c) => c,
                    Signal::RandomSign(_) => {
                        if rng.random::<bool>() {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                };
                beta.values_mut()[edge_index(i, j, d)?] = v;
            }
        }
        start += size;
    }
    let support = block_support(&beta, 0.0);
    Ok((beta, support))
}

/// Observations of one data set.
#[derive(Clone, Debug)]
pub enum Observations {
    /// `n × D` noisy copies of the target.
    Sequence(MeanSamples<f64>),
    /// `n × d` Gaussian vectors with covariance `I + A(β*)`.
    Covariance(CovarianceSamples<f64>),
    Linear(LinearModel<f64>),
    Logistic(LogisticModel<f64>),
}

/// The loss a family's estimators minimize.
#[derive(Clone, Debug)]
pub enum Model {
    Shrinkage(ShrinkageModel<f64>),
    Linear(LinearModel<f64>),
    Logistic(LogisticModel<f64>),
}

macro_rules! delegate {
    ($self:ident, $m:ident => $e:expr) => {
        match $self {
            Model::Shrinkage($m) => $e,
            Model::Linear($m) => $e,
            Model::Logistic($m) => $e,
        }
    };
}

impl LossModel<f64> for Model {
    fn dim(&self) -> usize {
        delegate!(self, m => m.dim())
    }

    fn value(&self, beta: ArrayView1<'_, f64>) -> f64 {
        delegate!(self, m => m.value(beta))
    }

    fn gradient(&self, beta: ArrayView1<'_, f64>) -> Array1<f64> {
        delegate!(self, m => m.gradient(beta))
    }

    fn weighted_lasso_masked(
        &self,
        weights: ArrayView1<'_, f64>,
        mask: Option<&[bool]>,
        warm: Option<ArrayView1<'_, f64>>,
        opts: &SolverOptions<f64>,
    ) -> fcls_core::Result<Array1<f64>> {
        delegate!(self, m => m.weighted_lasso_masked(weights, mask, warm, opts))
    }

    fn restricted_unpenalized(&self, mask: &[bool], opts: &SolverOptions<f64>) -> fcls_core::Result<Array1<f64>> {
        delegate!(self, m => m.restricted_unpenalized(mask, opts))
    }
}

/// One simulated data set with its target and block oracle.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub family: Family,
    pub d: usize,
    pub n: usize,
    pub observations: Observations,
    pub model: Model,
    pub beta_star: EdgeVector<f64>,
    pub support: BlockSupport,
    /// Loss minimizer over the true block support (absent for CV subsets).
    pub oracle: Option<EdgeVector<f64>>,
    /// Seed for cross-validation fold splits.
    pub cv_seed: u64,
}

impl Dataset {
    fn assemble(
        cv_seed: u64,
        family: Family,
        d: usize,
        observations: Observations,
        beta_star: EdgeVector<f64>,
        support: BlockSupport,
    ) -> Self {
        let n = match &observations {
            Observations::Sequence(s) => s.n_samples(),
            Observations::Covariance(s) => s.n_samples(),
            Observations::Linear(m) => m.n(),
            Observations::Logistic(m) => m.n(),
        };
        let model = match &observations {
            Observations::Sequence(s) => Model::Shrinkage(ShrinkageModel::new(s.full_estimate())),
            Observations::Covariance(s) => Model::Shrinkage(ShrinkageModel::new(s.full_estimate())),
            Observations::Linear(m) => Model::Linear(m.clone()),
            Observations::Logistic(m) => Model::Logistic(m.clone()),
        };
        Self {
            family,
            d,
            n,
            observations,
            model,
            beta_star,
            support,
            oracle: None,
            cv_seed,
        }
    }

    /// `b_ok` for shrinkage families.
    pub fn b_ok(&self) -> Option<&Array1<f64>> {
        match &self.model {
            Model::Shrinkage(m) => Some(m.b_ok()),
            _ => None,
        }
    }

    pub fn oracle(&self) -> Result<&EdgeVector<f64>> {
        self.oracle
            .as_ref()
            .ok_or_else(|| SimError::Invalid("data set has no oracle".into()))
    }

    /// The same target with only the given observations.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        let obs = match &self.observations {
            Observations::Sequence(s) => Observations::Sequence(MeanSamples::new(s.samples().select(ndarray::Axis(0), rows))),
            Observations::Covariance(s) => {
                Observations::Covariance(CovarianceSamples::new(s.samples().select(ndarray::Axis(0), rows)))
            }
            Observations::Linear(m) => Observations::Linear(m.subset(rows)?),
            Observations::Logistic(m) => Observations::Logistic(m.subset(rows)?),
        };
        Ok(Self::assemble(self.cv_seed, self.family, self.d, obs, self.beta_star.clone(), self.support.clone()))
    }

    /// Predictive loss of `beta` on this data set's observations.
    pub fn held_out_loss(&self, beta: ArrayView1<'_, f64>) -> f64 {
        match &self.model {
            Model::Shrinkage(m) => m.value(beta),
            Model::Linear(m) => m.value(beta),
            Model::Logistic(m) => m.deviance(beta),
        }
    }
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample(StandardNormal))
}

/// Draws the `(n, rep)` data set of a scenario; deterministic in
/// `(scenario.seed, n, rep)`.
pub fn generate_dataset(scenario: &SimScenario, n: usize, rep: usize) -> Result<Dataset> {
    if n == 0 {
        return Err(SimError::Invalid("sample size must be at least 1".into()));
    }
    let cell = cell_seed(scenario.seed, n, rep);
    let (beta_star, support) = make_block_target(
        &scenario.block_sizes,
        scenario.n_isolated,
        scenario.signal(),
        stream_seed(cell, TARGET_STREAM),
    )?;
    let d = beta_star.d();
    let dim = beta_star.len();
    let sigma = scenario.sigma();
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(cell, DATA_STREAM));
    let observations = match scenario.family {
        Family::GaussianSeq => {
            let noise = normal_matrix(&mut rng, n, dim) * sigma;
            Observations::Sequence(MeanSamples::new(noise + beta_star.values()))
        }
        Family::Covariance => {
            let sigma_star = beta_star.adjacency() + Array2::<f64>::eye(d);
            let l = cholesky(sigma_star.view())?;
            let z = normal_matrix(&mut rng, n, d);
            Observations::Covariance(CovarianceSamples::new(z.dot(&l.t())))
        }
        Family::Linear => {
            let x = normal_matrix(&mut rng, n, dim);
            let eps: Array1<f64> = Array1::from_shape_simple_fn(n, || rng.sample(StandardNormal));
            let y = x.dot(beta_star.values()) + eps * sigma;
            Observations::Linear(LinearModel::new(x, y)?)
        }
        Family::Logistic => {
            let x = normal_matrix(&mut rng, n, dim);
            let eta = x.dot(beta_star.values());
            let y = eta.mapv(|e| if rng.random::<f64>() < 1.0 / (1.0 + (-e).exp()) { 1.0 } else { 0.0 });
            Observations::Logistic(LogisticModel::new(x, y, scenario.ridge)?)
        }
    };
    let mut ds = Dataset::assemble(stream_seed(cell, CV_STREAM), scenario.family, d, observations, beta_star, support);
    ds.oracle = Some(block_oracle(&ds.model, &ds.support)?);
    Ok(ds)
}

/// `‖β̂ - β_oracle‖₂ / ‖β_oracle‖₂`.
pub fn relative_l2_to_oracle(beta: ArrayView1<'_, f64>, oracle: ArrayView1<'_, f64>) -> Result<f64> {
    if beta.len() != oracle.len() {
        return Err(SimError::Invalid(format!(
            "estimate has {} entries, oracle {}",
            beta.len(),
            oracle.len()
        )));
    }
    let norm = oracle.dot(&oracle).sqrt();
    if !(norm > 0.0) {
        return Err(SimError::Invalid("oracle has zero norm".into()));
    }
    let diff: f64 = beta.iter().zip(oracle.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(diff.sqrt() / norm)
}
