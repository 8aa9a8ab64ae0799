//! Laplacian-coefficient surrogate weights and the local linear approximation
//! (LLA) majorization-minimization driver.
//!
//! At a current point `b`, the FCLS penalty is majorized by the weighted Lasso
//! `½ Mᵀ|β| + const`, where `M_(ij) = ‖V(i,:) - V(j,:)‖²_{2,w}` is built from
//! the eigenvectors `V` of `L(|b|)` and the weights `w = g'(λ)`. Each LLA step
//! minimizes `ℓ(β) + ½ Mᵀ|β|`.

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, FclsError, Result};
use crate::graph::{edge_count, edge_pairs, spectral_summary, EdgeVector};
use crate::penalty::Penalty;
use crate::scalar::Scalar;
use crate::solvers::{LossModel, SolverOptions};

/// Eigenpairs whose weight `g'(λ)` is at or below this are skipped.
pub const WEIGHT_DROP_TOL: f64 = 1e-14;

/// Default number of points in a tuning grid below `tau_max`.
pub const DEFAULT_GRID_POINTS: usize = 50;
/// Default number of decades spanned by a tuning grid.
pub const DEFAULT_GRID_DECADES: f64 = 3.0;

/// Nonnegative weights `M` of the weighted-Lasso majorizer, one per edge.
#[derive(Clone, Debug, PartialEq)]
pub struct SurrogateWeights<T> {
    d: usize,
    values: Array1<T>,
}

impl<T: Scalar> SurrogateWeights<T> {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &Array1<T> {
        &self.values
    }

    pub fn into_values(self) -> Array1<T> {
        self.values
    }

    /// `½ Mᵀ|x|`.
    pub fn surrogate_penalty(&self, x: ArrayView1<'_, T>) -> T {
        crate::graph::weighted_abs_sum(x, self.values.view()) * T::lit(0.5)
    }
}

/// `M_(ij) = Σ_k w_k (V_ik - V_jk)²` for each edge `(i, j)`.
pub fn laplacian_coefficient<T: Scalar>(
    v: ArrayView2<'_, T>,
    w: ArrayView1<'_, T>,
) -> Result<SurrogateWeights<T>> {
    let (d, k) = v.dim();
    if w.len() != k {
        return Err(FclsError::DimensionMismatch {
            expected: k,
            found: w.len(),
        });
    }
    if k > d {
        return Err(invalid(format!("{k} eigenvectors exceed node count {d}")));
    }
    if w.iter().any(|x| !(*x >= T::zero())) {
        return Err(invalid("Laplacian coefficient weights must be nonnegative"));
    }
    let mut values = Array1::zeros(edge_count(d));
    for (slot, (i, j)) in values.iter_mut().zip(edge_pairs(d)) {
        let vi = v.row(i);
        let vj = v.row(j);
        let mut acc = T::zero();
        for c in 0..k {
            let diff = vi[c] - vj[c];
            acc += w[c] * diff * diff;
        }
        *slot = acc;
    }
    Ok(SurrogateWeights { d, values })
}

/// Weights together with the Laplacian spectrum they were computed from.
#[derive(Clone, Debug)]
pub struct Surrogate<T> {
    pub weights: SurrogateWeights<T>,
    pub eigenvalues: Array1<T>,
}

/// Surrogate weights `M = 𝓜(V, g'(λ))` at `β`, eigenpairs of `L(|β|)`.
pub fn surrogate<T: Scalar>(beta: &EdgeVector<T>, penalty: &Penalty<T>) -> Result<Surrogate<T>> {
    let spectrum = spectral_summary(beta)?;
    let drop = T::lit(WEIGHT_DROP_TOL);
    let kept: Vec<usize> = spectrum
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| penalty.derivative(l.max(T::zero())) > drop)
        .map(|(k, _)| k)
        .collect();
    let w = Array1::from_iter(
        kept.iter()
            .map(|&k| penalty.derivative(spectrum.eigenvalues[k].max(T::zero()))),
    );
    let v = spectrum.eigenvectors.select(ndarray::Axis(1), &kept);
    let weights = laplacian_coefficient(v.view(), w.view())?;
    Ok(Surrogate {
        weights,
        eigenvalues: spectrum.eigenvalues,
    })
}

pub fn surrogate_weights<T: Scalar>(
    beta: &EdgeVector<T>,
    penalty: &Penalty<T>,
) -> Result<SurrogateWeights<T>> {
    Ok(surrogate(beta, penalty)?.weights)
}

/// Entrywise LLA weights `2 g'(|β_ℓ|)` (threshold `g'(|β_ℓ|)`).
pub fn entrywise_weights<T: Scalar>(penalty: &Penalty<T>, beta: ArrayView1<'_, T>) -> Array1<T> {
    let two = T::lit(2.0);
    beta.mapv(|b| two * penalty.derivative(b.abs()))
}

/// Result of one LLA step.
#[derive(Clone, Debug)]
pub struct LlaStep<T> {
    pub next: EdgeVector<T>,
    pub weights: SurrogateWeights<T>,
    pub eigenvalues: Array1<T>,
}

/// One majorization-minimization step from `beta`, warm-started at `beta`.
pub fn lla_step<T: Scalar, L: LossModel<T> + ?Sized>(
    loss: &L,
    penalty: &Penalty<T>,
    beta: &EdgeVector<T>,
    solver: &SolverOptions<T>,
) -> Result<LlaStep<T>> {
    if loss.dim() != beta.len() {
        return Err(FclsError::DimensionMismatch {
            expected: loss.dim(),
            found: beta.len(),
        });
    }
    let Surrogate {
        weights,
        eigenvalues,
    } = surrogate(beta, penalty)?;
    let next = loss.weighted_lasso(weights.values().view(), Some(beta.values().view()), solver)?;
    Ok(LlaStep {
        next: EdgeVector::new(beta.d(), next)?,
        weights,
        eigenvalues,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LlaMode {
    /// Two steps, or three from an all-zero initializer.
    TwoStep,
    /// Until successive iterates agree within the fixed-point tolerance.
    ToConvergence,
}

impl std::str::FromStr for LlaMode {
    type Err = FclsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_step" | "two-step" => Ok(Self::TwoStep),
            "to_convergence" | "to-convergence" | "converge" => Ok(Self::ToConvergence),
            other => Err(invalid(format!("unknown LLA mode '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LlaOptions<T> {
    pub max_steps: usize,
    pub fixed_point_tol: T,
    pub mode: LlaMode,
    pub solver: SolverOptions<T>,
}

impl<T: Scalar> LlaOptions<T> {
    pub fn new(mode: LlaMode) -> Self {
        Self {
            max_steps: 100,
            fixed_point_tol: T::default_tol(),
            mode,
            solver: SolverOptions::default(),
        }
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }
}

/// Iterates of an LLA run.
#[derive(Clone, Debug)]
pub struct LlaTrace<T> {
    /// `β⁽⁰⁾, β⁽¹⁾, …`
    pub iterates: Vec<EdgeVector<T>>,
    /// `M⁽ˢ⁾` used to produce iterate `s + 1`.
    pub weights_per_step: Vec<SurrogateWeights<T>>,
    /// Spectrum of `L(|β⁽ˢ⁾|)` for each step.
    pub eigenvalues_per_step: Vec<Array1<T>>,
    pub converged: bool,
    pub steps_taken: usize,
    pub fixed_point_tol: T,
}

impl<T: Scalar> LlaTrace<T> {
    pub fn last(&self) -> &EdgeVector<T> {
        self.iterates.last().expect("trace holds the initializer")
    }

    pub fn iterate(&self, step: usize) -> Option<&EdgeVector<T>> {
        self.iterates.get(step)
    }
}

fn max_diff<T: Scalar>(a: &EdgeVector<T>, b: &EdgeVector<T>) -> T {
    a.values()
        .iter()
        .zip(b.values().iter())
        .fold(T::zero(), |m, (x, y)| m.max((*x - *y).abs()))
}

/// Runs the LLA algorithm from `init`.
///
/// `TwoStep` takes exactly two steps (three when `init` is identically zero),
/// capped at `max_steps`. `ToConvergence` stops at the first step whose
/// iterate moves by at most `fixed_point_tol` in max-norm, or at `max_steps`.
pub fn lla_run<T: Scalar, L: LossModel<T> + ?Sized>(
    loss: &L,
    penalty: &Penalty<T>,
    init: &EdgeVector<T>,
    opts: &LlaOptions<T>,
) -> Result<LlaTrace<T>> {
    if opts.max_steps == 0 {
        return Err(invalid("max_steps must be at least 1"));
    }
    let planned = match opts.mode {
        LlaMode::TwoStep if init.is_zero() => 3,
        LlaMode::TwoStep => 2,
        LlaMode::ToConvergence => opts.max_steps,
    }
    .min(opts.max_steps);

    let mut trace = LlaTrace {
        iterates: vec![init.clone()],
        weights_per_step: Vec::with_capacity(planned),
        eigenvalues_per_step: Vec::with_capacity(planned),
        converged: false,
        steps_taken: 0,
        fixed_point_tol: opts.fixed_point_tol,
    };
    for step in 0..planned {
        let current = trace.last();
        let out = lla_step(loss, penalty, current, &opts.solver).map_err(|e| {
            FclsError::StepFailed {
                step: step + 1,
                source: Box::new(e),
            }
        })?;
        let moved = max_diff(current, &out.next);
        trace.iterates.push(out.next);
        trace.weights_per_step.push(out.weights);
        trace.eigenvalues_per_step.push(out.eigenvalues);
        trace.steps_taken += 1;
        trace.converged = moved <= opts.fixed_point_tol;
        if trace.converged && opts.mode == LlaMode::ToConvergence {
            break;
        }
    }
    Ok(trace)
}

/// Smallest `τ` for which one LLA step from `init` is guaranteed to return 0:
/// `max(λ_max(L(|init|)) / b1, ‖∇ℓ(0)‖_max / a1)`.
pub fn tau_max<T: Scalar, L: LossModel<T> + ?Sized>(
    loss: &L,
    penalty: &Penalty<T>,
    init: &EdgeVector<T>,
) -> Result<T> {
    let b1 = penalty
        .b1
        .ok_or_else(|| invalid("tau_max needs a SCAD-like penalty (finite b1)"))?;
    let lambda_max = spectral_summary(init)?.largest();
    Ok((lambda_max / b1).max(loss.killer_lasso_bound() / penalty.a1))
}

/// Entrywise analogue of [`tau_max`]: `max(‖init‖_max / b1, ‖∇ℓ(0)‖_max / a1)`.
pub fn entrywise_tau_max<T: Scalar, L: LossModel<T> + ?Sized>(
    loss: &L,
    penalty: &Penalty<T>,
    init: ArrayView1<'_, T>,
) -> Result<T> {
    let b1 = penalty
        .b1
        .ok_or_else(|| invalid("tau_max needs a SCAD-like penalty (finite b1)"))?;
    let init_max = crate::linalg::max_abs(init.iter().copied());
    Ok((init_max / b1).max(loss.killer_lasso_bound() / penalty.a1))
}

/// `n_points` log-spaced values from `tau_max` down to `tau_max · 10^(-decades)`.
pub fn tau_grid<T: Scalar>(tau_max: T, n_points: usize, decades: T) -> Result<Vec<T>> {
    if !(tau_max > T::zero()) || !tau_max.is_finite() {
        return Err(invalid(format!("tau_max must be positive, got {tau_max}")));
    }
    if n_points < 2 {
        return Err(invalid("a tuning grid needs at least two points"));
    }
    if !(decades > T::zero()) {
        return Err(invalid("grid must span a positive number of decades"));
    }
    let ten = T::lit(10.0);
    let last = T::from_usize(n_points - 1).unwrap();
    Ok((0..n_points)
        .map(|k| {
            if k == 0 {
                tau_max
            } else {
                tau_max * ten.powf(-decades * T::from_usize(k).unwrap() / last)
            }
        })
        .collect())
}
