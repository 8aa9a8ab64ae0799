//! Estimators compared in the simulations and their tuning-parameter
//! selection (oracle-distance "cheat" or cross-validation).

use fcls_core::graph::EdgeVector;
use fcls_core::initializers::{
    cv_folds, cv_select_lasso, cv_select_threshold, generalized_threshold, lasso_path, InitKind, InitSpec,
    ThresholdKind, DEFAULT_CV_FOLDS,
};
use fcls_core::lla::{entrywise_tau_max, entrywise_weights, lla_run, tau_grid, tau_max, LlaOptions};
use fcls_core::penalty::Penalty;
use fcls_core::solvers::{LossModel, SolverOptions};
use ndarray::{Array1, ArrayView1};
use rayon::prelude::*;

use crate::data::{relative_l2_to_oracle, splitmix64, Dataset, Model, Observations};
use crate::error::{Result, SimError};
use crate::scenario::{MethodKind, MethodSpec};

const METHOD_CV_SALT: u64 = 0x6d65_7468_6f64_4356;

/// A fitted estimate at one tuning parameter.
#[derive(Clone, Debug)]
pub struct Fit {
    pub beta: Array1<f64>,
    pub steps: usize,
}

/// The selected estimate of one method on one data set.
#[derive(Clone, Debug)]
pub struct MethodOutcome {
    pub beta: EdgeVector<f64>,
    pub metric: f64,
    /// Chosen `τ` or `γ`; `None` for untuned methods.
    pub param: Option<f64>,
    pub steps: usize,
    /// Grid points whose fit failed.
    pub grid_failures: usize,
}

fn solver() -> SolverOptions<f64> {
    SolverOptions::default()
}

/// Unpenalized full-model estimate (`b_ok` for shrinkage families).
pub fn raw_estimate(ds: &Dataset) -> Result<Array1<f64>> {
    match ds.b_ok() {
        Some(b) => Ok(b.clone()),
        None => {
            let mask = vec![true; ds.model.dim()];
            Ok(ds.model.restricted_unpenalized(&mask, &solver())?)
        }
    }
}

/// Initializer used when a method does not name one.
pub fn default_init(method: &MethodSpec, ds: &Dataset) -> InitSpec {
    match (&method.init, method.kind) {
        (Some(spec), _) => spec.clone(),
        (None, MethodKind::FclsLla) if ds.family.is_shrinkage() => InitSpec::new(InitKind::HardThreshold),
        _ => InitSpec::new(InitKind::LassoCv),
    }
}

/// Builds an initializer; tuning inside it is always cross-validated.
pub fn build_init(spec: &InitSpec, ds: &Dataset) -> Result<EdgeVector<f64>> {
    let seed = splitmix64(ds.cv_seed ^ spec.seed);
    let folds = spec.cv_folds;
    let grid = spec.grid.as_deref();
    let values = match spec.kind {
        InitKind::Zero => Array1::zeros(ds.model.dim()),
        InitKind::Raw => raw_estimate(ds)?,
        InitKind::HardThreshold | InitKind::SoftThreshold => {
            let kind = spec.threshold_kind().expect("threshold initializer");
            threshold_init(ds, kind, spec.gamma, folds, grid, seed)?
        }
        InitKind::LassoCv => match &ds.model {
            // Lasso on ½‖b_ok − β‖² is soft thresholding.
            Model::Shrinkage(_) => threshold_init(ds, ThresholdKind::Soft, spec.gamma, folds, grid, seed)?,
            model => match spec.gamma {
                Some(g) => lasso_path(model, &[g], &solver())?.pop().expect("one grid point"),
                None => match &ds.observations {
                    Observations::Linear(m) => cv_select_lasso(m, folds, grid, seed, &solver())?.init,
                    Observations::Logistic(m) => cv_select_lasso(m, folds, grid, seed, &solver())?.init,
                    _ => unreachable!("regression models carry regression observations"),
                },
            },
        },
    };
    Ok(EdgeVector::new(ds.d, values)?)
}

fn threshold_init(
    ds: &Dataset,
    kind: ThresholdKind,
    gamma: Option<f64>,
    folds: usize,
    grid: Option<&[f64]>,
    seed: u64,
) -> Result<Array1<f64>> {
    if let Some(g) = gamma {
        return Ok(generalized_threshold(raw_estimate(ds)?.view(), g, kind));
    }
    let choice = match &ds.observations {
        Observations::Sequence(s) => cv_select_threshold(s, kind, folds, grid, seed)?,
        Observations::Covariance(s) => cv_select_threshold(s, kind, folds, grid, seed)?,
        _ => {
            return Err(SimError::Invalid(
                "cross-validated thresholding needs a shrinkage family".into(),
            ))
        }
    };
    Ok(choice.init)
}

fn with_unpenalized_limit(mut grid: Vec<f64>, ds: &Dataset) -> Vec<f64> {
    if ds.family.is_shrinkage() {
        grid.push(0.0);
    }
    grid
}

/// Default tuning grid: `grid_points` log-spaced values over `grid_decades`
/// below the level at which the method returns zero. Shrinkage families also
/// get the `0` endpoint, where every method reduces to the raw estimate.
pub fn default_grid(method: &MethodSpec, ds: &Dataset, init: &EdgeVector<f64>) -> Result<Vec<f64>> {
    let top = match method.kind {
        MethodKind::Raw => return Ok(vec![0.0]),
        MethodKind::HardThreshold => raw_estimate(ds)?.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        MethodKind::Lasso => ds.model.killer_lasso_bound(),
        MethodKind::FclsLla => tau_max(&ds.model, &Penalty::scad(1.0, method.shape())?, init)?,
        MethodKind::EntrywiseScad => {
            entrywise_tau_max(&ds.model, &Penalty::scad(1.0, method.shape())?, init.values().view())?
        }
    };
    if !(top > 0.0) {
        return Ok(vec![0.0]);
    }
    let grid = tau_grid(top, method.grid_points, method.grid_decades)?;
    Ok(with_unpenalized_limit(grid, ds))
}

/// `steps` entrywise LLA steps with weights `2 g'(|β_ℓ|)`.
pub fn entrywise_lla<L: LossModel<f64> + ?Sized>(
    model: &L,
    penalty: &Penalty<f64>,
    init: ArrayView1<'_, f64>,
    steps: usize,
) -> Result<Array1<f64>> {
    let mut beta = init.to_owned();
    for _ in 0..steps {
        let w = entrywise_weights(penalty, beta.view());
        beta = model.weighted_lasso(w.view(), Some(beta.view()), &solver())?;
    }
    Ok(beta)
}

fn fit_one(method: &MethodSpec, ds: &Dataset, init: &EdgeVector<f64>, param: f64) -> Result<Fit> {
    let unpenalized = || -> Result<Fit> {
        let mask = vec![true; ds.model.dim()];
        Ok(Fit {
            beta: ds.model.restricted_unpenalized(&mask, &solver())?,
            steps: 0,
        })
    };
    match method.kind {
        MethodKind::Raw => Ok(Fit {
            beta: raw_estimate(ds)?,
            steps: 0,
        }),
        MethodKind::HardThreshold => Ok(Fit {
            beta: generalized_threshold(raw_estimate(ds)?.view(), param, ThresholdKind::Hard),
            steps: 0,
        }),
        MethodKind::Lasso => Ok(Fit {
            beta: lasso_path(&ds.model, &[param], &solver())?.pop().expect("one grid point"),
            steps: 0,
        }),
        MethodKind::FclsLla if param == 0.0 => unpenalized(),
        MethodKind::FclsLla => {
            let penalty = Penalty::scad(param, method.shape())?;
            let mut opts = LlaOptions::new(method.lla_mode());
            if let Some(s) = method.max_steps {
                opts = opts.with_max_steps(s);
            }
            let trace = lla_run(&ds.model, &penalty, init, &opts)?;
            Ok(Fit {
                beta: trace.last().values().clone(),
                steps: trace.steps_taken,
            })
        }
        MethodKind::EntrywiseScad if param == 0.0 => unpenalized(),
        MethodKind::EntrywiseScad => {
            let penalty = Penalty::scad(param, method.shape())?;
            let steps = method.max_steps.unwrap_or(1);
            Ok(Fit {
                beta: entrywise_lla(&ds.model, &penalty, init.values().view(), steps)?,
                steps,
            })
        }
    }
}

/// Fits along a descending grid. Lasso paths are warm-started in order;
/// other methods fit grid points independently in parallel.
pub fn fit_path(method: &MethodSpec, ds: &Dataset, init: &EdgeVector<f64>, grid: &[f64]) -> Vec<Result<Fit>> {
    if method.kind == MethodKind::Lasso {
        let mut warm: Option<Array1<f64>> = None;
        return grid
            .iter()
            .map(|&g| {
                let w = Array1::from_elem(ds.model.dim(), 2.0 * g);
                let beta = ds.model.weighted_lasso(w.view(), warm.as_ref().map(|b| b.view()), &solver())?;
                warm = Some(beta.clone());
                Ok(Fit { beta, steps: 0 })
            })
            .collect();
    }
    grid.par_iter().map(|&g| fit_one(method, ds, init, g)).collect()
}

fn descending(grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(SimError::Invalid("tuning grid is empty".into()));
    }
    if grid.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) {
        return Err(SimError::Invalid("tuning grid values must be finite and nonnegative".into()));
    }
    let mut g = grid.to_vec();
    g.sort_by(|a, b| b.partial_cmp(a).unwrap());
    g.dedup();
    Ok(g)
}

/// Index of the smallest finite score; ties go to the earlier (larger) value.
fn argmin(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, s) in scores.iter().enumerate() {
        if s.is_finite() && best.is_none_or(|b| *s < scores[b]) {
            best = Some(k);
        }
    }
    best
}

fn cv_scores(method: &MethodSpec, ds: &Dataset, grid: &[f64]) -> Result<Vec<f64>> {
    let folds = method.init.as_ref().map_or(DEFAULT_CV_FOLDS, |i| i.cv_folds);
    let split = cv_folds(ds.n, folds, splitmix64(ds.cv_seed ^ METHOD_CV_SALT))?;
    let init_spec = default_init(method, ds);
    let mut totals = vec![0.0; grid.len()];
    for held in &split {
        let train_rows: Vec<usize> = (0..ds.n).filter(|i| held.binary_search(i).is_err()).collect();
        let train = ds.subset(&train_rows)?;
        let test = ds.subset(held)?;
        let init = match method.kind {
            MethodKind::FclsLla | MethodKind::EntrywiseScad => build_init(&init_spec, &train)?,
            _ => EdgeVector::zeros(ds.d),
        };
        for (t, fit) in totals.iter_mut().zip(fit_path(method, &train, &init, grid)) {
            *t += match fit {
                Ok(f) => test.held_out_loss(f.beta.view()),
                Err(_) => f64::INFINITY,
            };
        }
    }
    Ok(totals.into_iter().map(|t| t / split.len() as f64).collect())
}

/// Runs one method on one data set and selects its tuning parameter.
///
/// `grid` overrides the method's grid; with `cheat` the grid point closest to
/// the oracle wins, otherwise the one with the smallest cross-validated
/// held-out loss. Failed grid points are counted, and the call fails only
/// when every grid point fails.
pub fn run_method(method: &MethodSpec, ds: &Dataset, grid: Option<&[f64]>, cheat: bool) -> Result<MethodOutcome> {
    let oracle = ds.oracle()?;
    let init = match method.kind {
        MethodKind::FclsLla | MethodKind::EntrywiseScad => build_init(&default_init(method, ds), ds)?,
        _ => EdgeVector::zeros(ds.d),
    };
    let grid = match (grid, method.grid.as_deref()) {
        (Some(g), _) | (None, Some(g)) => descending(g)?,
        (None, None) => descending(&default_grid(method, ds, &init)?)?,
    };
    let grid = if method.kind == MethodKind::Raw { vec![0.0] } else { grid };

    let fits = fit_path(method, ds, &init, &grid);
    let grid_failures = fits.iter().filter(|f| f.is_err()).count();
    if grid_failures == fits.len() {
        let first = fits.into_iter().find_map(|f| f.err()).expect("all failed");
        return Err(first);
    }
    let metrics: Vec<f64> = fits
        .iter()
        .map(|f| match f {
            Ok(f) => relative_l2_to_oracle(f.beta.view(), oracle.values().view()).unwrap_or(f64::NAN),
            Err(_) => f64::NAN,
        })
        .collect();
    let best = if cheat || grid.len() == 1 {
        argmin(&metrics)
    } else {
        let scores = cv_scores(method, ds, &grid)?;
        let masked: Vec<f64> = scores
            .iter()
            .zip(&fits)
            .map(|(s, f)| if f.is_ok() { *s } else { f64::NAN })
            .collect();
        argmin(&masked)
    }
    .ok_or_else(|| SimError::Invalid("no grid point produced a finite score".into()))?;

    let fit = fits.into_iter().nth(best).expect("index in range")?;
    Ok(MethodOutcome {
        beta: EdgeVector::new(ds.d, fit.beta)?,
        metric: metrics[best],
        param: (method.kind != MethodKind::Raw).then_some(grid[best]),
        steps: fit.steps,
        grid_failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::generate_dataset;
    use crate::scenario::{Family, SimScenario};
    use fcls_core::solvers::ShrinkageModel;
    use ndarray::array;

    fn seq_data(n: usize) -> Dataset {
        let s = SimScenario::new(Family::GaussianSeq, vec![4, 4]);
        generate_dataset(&s, n, 0).unwrap()
    }

    #[test]
    fn raw_method_returns_b_ok() {
        let ds = seq_data(16);
        let out = run_method(&MethodSpec::new("raw", MethodKind::Raw), &ds, Some(&[5.0, 1.0]), true).unwrap();
        assert_eq!(out.beta.values(), ds.b_ok().unwrap());
        assert_eq!(out.param, None);
        let want = relative_l2_to_oracle(ds.b_ok().unwrap().view(), ds.oracle().unwrap().values().view()).unwrap();
        assert_eq!(out.metric, want);
    }

    #[test]
    fn hard_threshold_cheat_is_grid_minimum() {
        let ds = seq_data(16);
        let grid = [3.0, 2.0, 1.5, 1.0, 0.5, 0.0];
        let out = run_method(&MethodSpec::new("ht", MethodKind::HardThreshold), &ds, Some(&grid), true).unwrap();
        let oracle = ds.oracle().unwrap().values();
        let best = grid
            .iter()
            .map(|g| {
                let b = generalized_threshold(ds.b_ok().unwrap().view(), *g, ThresholdKind::Hard);
                relative_l2_to_oracle(b.view(), oracle.view()).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        assert_eq!(out.metric, best);
    }

    #[test]
    fn fcls_never_worse_than_raw_on_shrinkage() {
        for n in [8, 64] {
            let ds = seq_data(n);
            let raw = run_method(&MethodSpec::new("raw", MethodKind::Raw), &ds, None, true).unwrap();
            let fcls = run_method(
                &MethodSpec::new("fcls", MethodKind::FclsLla).with_init(InitKind::Raw),
                &ds,
                None,
                true,
            )
            .unwrap();
            assert!(fcls.metric <= raw.metric, "n={n}: {} > {}", fcls.metric, raw.metric);
        }
    }

    #[test]
    fn entrywise_uniform_step_is_soft_threshold() {
        let b = array![3.0, -0.4, 1.2, -2.5];
        let model = ShrinkageModel::new(b.clone());
        let p = Penalty::scad(0.8, 3.7).unwrap();
        let out = entrywise_lla(&model, &p, Array1::zeros(4).view(), 1).unwrap();
        // g'(0) = τ, so each coordinate is soft-thresholded at τ.
        assert_eq!(out, generalized_threshold(b.view(), 0.8, ThresholdKind::Soft));

        let init = array![5.0, 5.0, 5.0, 5.0];
        let level = p.g_prime(5.0).unwrap();
        let out = entrywise_lla(&model, &p, init.view(), 1).unwrap();
        assert_eq!(out, generalized_threshold(b.view(), level, ThresholdKind::Soft));
    }

    #[test]
    fn cv_selection_runs_and_is_deterministic() {
        let ds = seq_data(20);
        let mut m = MethodSpec::new("ht", MethodKind::HardThreshold);
        m.cheat = false;
        let a = run_method(&m, &ds, None, false).unwrap();
        let b = run_method(&m, &ds, None, false).unwrap();
        assert_eq!(a.param, b.param);
        assert!(a.metric.is_finite());
        let cheat = run_method(&m, &ds, None, true).unwrap();
        assert!(cheat.metric <= a.metric);
    }

    #[test]
    fn failures_are_counted_not_fatal() {
        let s = SimScenario::new(Family::Linear, vec![3, 3]);
        let ds = generate_dataset(&s, 40, 0).unwrap();
        // A negative level makes the penalty constructor fail for that point only.
        let m = MethodSpec::new("fcls", MethodKind::FclsLla).with_init(InitKind::LassoCv);
        let init = build_init(&default_init(&m, &ds), &ds).unwrap();
        let fits = fit_path(&m, &ds, &init, &[1.0, -1.0]);
        assert!(fits[0].is_ok() && fits[1].is_err());
        assert!(run_method(&m, &ds, Some(&[-1.0]), true).is_err());
    }
}
