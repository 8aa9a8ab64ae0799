//! Convex losses and their weighted-Lasso, killer-Lasso and restricted solvers.
//!
//! Every weighted-Lasso problem here has the form
//! `minimize ℓ(β) + ½ Σ_ℓ M_ℓ |β_ℓ|`, so the per-coordinate threshold is
//! `M_ℓ / 2`.

mod linear;
mod logistic;
pub mod quadratic;
mod shrinkage;

use ndarray::{Array1, ArrayView1};

pub use linear::LinearModel;
pub use logistic::LogisticModel;
pub use quadratic::{coordinate_descent, CdOutcome};
pub use shrinkage::ShrinkageModel;

use crate::error::{FclsError, Result};
use crate::graph::{BlockSupport, EdgeVector};
use crate::linalg::max_abs;
use crate::scalar::Scalar;

/// Iteration caps and tolerance shared by the iterative solvers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions<T> {
    /// Target KKT residual.
    pub tol: T,
    /// Cap on coordinate-descent sweeps per quadratic subproblem.
    pub max_sweeps: usize,
    /// Cap on (proximal) Newton iterations.
    pub max_newton: usize,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::default_tol(),
            max_sweeps: 10_000,
            max_newton: 100,
        }
    }
}

/// A convex loss over `R^D`.
pub trait LossModel<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, beta: ArrayView1<'_, T>) -> T;

    fn gradient(&self, beta: ArrayView1<'_, T>) -> Array1<T>;

    fn value_and_gradient(&self, beta: ArrayView1<'_, T>) -> (T, Array1<T>) {
        (self.value(beta), self.gradient(beta))
    }

    /// Minimizes `ℓ(β) + ½ Σ M_ℓ |β_ℓ|`, optionally keeping coordinates
    /// outside `mask` at zero.
    fn weighted_lasso_masked(
        &self,
        weights: ArrayView1<'_, T>,
        mask: Option<&[bool]>,
        warm: Option<ArrayView1<'_, T>>,
        opts: &SolverOptions<T>,
    ) -> Result<Array1<T>>;

    /// Unpenalized minimizer over the coordinates in `mask`, zero elsewhere.
    fn restricted_unpenalized(&self, mask: &[bool], opts: &SolverOptions<T>) -> Result<Array1<T>>;

    fn weighted_lasso(
        &self,
        weights: ArrayView1<'_, T>,
        warm: Option<ArrayView1<'_, T>>,
        opts: &SolverOptions<T>,
    ) -> Result<Array1<T>> {
        self.weighted_lasso_masked(weights, None, warm, opts)
    }

    /// `‖∇ℓ(0)‖_max`: any uniform threshold at or above it yields `β = 0`.
    fn killer_lasso_bound(&self) -> T {
        let zero = Array1::zeros(self.dim());
        max_abs(self.gradient(zero.view()).iter().copied())
    }

    /// Minimizes the loss over the coordinates in `mask`, with an optional
    /// weighted-Lasso penalty on those coordinates.
    fn restricted_minimize(
        &self,
        mask: &[bool],
        weights: Option<ArrayView1<'_, T>>,
        opts: &SolverOptions<T>,
    ) -> Result<Array1<T>> {
        check_len(self.dim(), mask.len())?;
        match weights {
            None => self.restricted_unpenalized(mask, opts),
            Some(w) => self.weighted_lasso_masked(w, Some(mask), None, opts),
        }
    }
}

/// Minimizer of the loss restricted to a block support.
pub fn block_oracle<T: Scalar, L: LossModel<T> + ?Sized>(
    model: &L,
    support: &BlockSupport,
) -> Result<EdgeVector<T>> {
    let beta = model.restricted_unpenalized(support.mask(), &SolverOptions::default())?;
    EdgeVector::new(support.d(), beta)
}

/// Largest violation of the weighted-Lasso optimality conditions at `beta`.
pub fn kkt_residual<T: Scalar, L: LossModel<T> + ?Sized>(
    model: &L,
    weights: ArrayView1<'_, T>,
    beta: ArrayView1<'_, T>,
) -> T {
    let grad = model.gradient(beta);
    kkt_from_gradient(grad.view(), weights, beta, None)
}

/// KKT residual given a gradient; `M/2` is the threshold. Coordinates outside
/// `mask` are constrained to zero and ignored.
pub(crate) fn kkt_from_gradient<T: Scalar>(
    grad: ArrayView1<'_, T>,
    weights: ArrayView1<'_, T>,
    beta: ArrayView1<'_, T>,
    mask: Option<&[bool]>,
) -> T {
    let half = T::lit(0.5);
    let mut worst = T::zero();
    for l in 0..beta.len() {
        if mask.is_some_and(|m| !m[l]) {
            continue;
        }
        let thresh = half * weights[l];
        let g = grad[l];
        let b = beta[l];
        let viol = if b > T::zero() {
            (g + thresh).abs()
        } else if b < T::zero() {
            (g - thresh).abs()
        } else {
            (g.abs() - thresh).max(T::zero())
        };
        worst = worst.max(viol);
    }
    worst
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(FclsError::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub(crate) fn check_weights<T: Scalar>(dim: usize, weights: ArrayView1<'_, T>) -> Result<()> {
    check_len(dim, weights.len())?;
    if weights.iter().any(|w| !(*w >= T::zero())) {
        return Err(FclsError::InvalidArgument(
            "weighted-Lasso weights must be nonnegative".into(),
        ));
    }
    Ok(())
}

/// `sign(z) max(|z| - t, 0)`.
#[inline]
pub fn soft_threshold<T: Scalar>(z: T, t: T) -> T {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        T::zero()
    }
}

/// Returns the zero vector if it already satisfies the KKT conditions.
pub(crate) fn zero_if_killed<T: Scalar>(
    grad_at_zero: ArrayView1<'_, T>,
    weights: ArrayView1<'_, T>,
) -> bool {
    let half = T::lit(0.5);
    grad_at_zero
        .iter()
        .zip(weights.iter())
        .all(|(g, w)| g.abs() <= half * *w)
}
