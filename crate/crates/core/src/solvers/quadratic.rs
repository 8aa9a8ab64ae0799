//! Cyclic coordinate descent for weighted-Lasso penalized quadratics
//! `½ βᵀHβ - cᵀβ + Σ_ℓ λ_ℓ |β_ℓ|` with `λ = M/2`.

use ndarray::{Array1, ArrayView1, ArrayView2};

use super::{kkt_from_gradient, soft_threshold, SolverOptions};
use crate::error::{FclsError, Result};
use crate::scalar::Scalar;

const MAX_ACTIVE_PASSES: usize = 200;

#[derive(Clone, Debug)]
pub struct CdOutcome<T> {
    pub beta: Array1<T>,
    pub sweeps: usize,
    pub kkt_residual: T,
}

/// Solves the penalized quadratic with covariance updates and active-set cycling.
///
/// `weights` are the `M` weights (threshold `M/2`). Coordinates outside `mask`
/// stay at zero. Converges when the KKT residual is at most `opts.tol`.
pub fn coordinate_descent<T: Scalar>(
    h: ArrayView2<'_, T>,
    c: ArrayView1<'_, T>,
    weights: ArrayView1<'_, T>,
    mask: Option<&[bool]>,
    warm: Option<ArrayView1<'_, T>>,
    opts: &SolverOptions<T>,
) -> Result<CdOutcome<T>> {
    let dim = c.len();
    let free = |j: usize| mask.is_none_or(|m| m[j]);
    let half = T::lit(0.5);
    let mut beta = match warm {
        Some(w) => w.to_owned(),
        None => Array1::zeros(dim),
    };
    for j in 0..dim {
        if !free(j) {
            beta[j] = T::zero();
        }
    }

    let mut sweeps = 0;
    let mut kkt;
    loop {
        // Fresh gradient each full pass so covariance updates cannot drift.
        let mut grad = h.dot(&beta) - c;
        for j in 0..dim {
            if free(j) {
                update(h, &mut beta, &mut grad, j, half * weights[j]);
            }
        }
        sweeps += 1;
        let exact = h.dot(&beta) - c;
        kkt = kkt_from_gradient(exact.view(), weights, beta.view(), mask);
        if kkt <= opts.tol {
            break;
        }
        if sweeps >= opts.max_sweeps {
            return Err(FclsError::NonConvergence {
                iterations: sweeps,
                kkt_residual: kkt.as_f64(),
            });
        }

        grad = exact;
        let active: Vec<usize> = (0..dim)
            .filter(|&j| free(j) && beta[j] != T::zero())
            .collect();
        for _ in 0..MAX_ACTIVE_PASSES {
            let mut biggest = T::zero();
            for &j in &active {
                let step = update(h, &mut beta, &mut grad, j, half * weights[j]);
                biggest = biggest.max(step.abs() * h[[j, j]]);
            }
            sweeps += 1;
            if biggest <= opts.tol * T::lit(0.1) || sweeps >= opts.max_sweeps {
                break;
            }
        }
    }
    Ok(CdOutcome {
        beta,
        sweeps,
        kkt_residual: kkt,
    })
}

#[inline]
fn update<T: Scalar>(
    h: ArrayView2<'_, T>,
    beta: &mut Array1<T>,
    grad: &mut Array1<T>,
    j: usize,
    threshold: T,
) -> T {
    let hjj = h[[j, j]];
    let old = beta[j];
    let new = if hjj > T::zero() {
        soft_threshold(old - grad[j] / hjj, threshold / hjj)
    } else {
        T::zero()
    };
    let delta = new - old;
    if delta != T::zero() {
        beta[j] = new;
        grad.scaled_add(delta, &h.column(j));
    }
    delta
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn identity_hessian_is_soft_thresholding() {
        let h = Array2::<f64>::eye(3);
        let c: Array1<f64> = array![2.0, -0.3, -1.5];
        let w: Array1<f64> = array![2.0, 2.0, 1.0];
        let out = coordinate_descent(h.view(), c.view(), w.view(), None, None, &SolverOptions::default()).unwrap();
        assert_eq!(out.beta, array![1.0, 0.0, -1.0]);
        assert!(out.kkt_residual <= 1e-12);
    }

    #[test]
    fn correlated_quadratic_reaches_tolerance() {
        let h: Array2<f64> = array![[2.0, 0.9, 0.3], [0.9, 1.5, -0.4], [0.3, -0.4, 1.0]];
        let c: Array1<f64> = array![1.0, -2.0, 0.5];
        let w: Array1<f64> = array![0.2, 0.1, 3.0];
        let opts = SolverOptions::default();
        let out = coordinate_descent(h.view(), c.view(), w.view(), None, None, &opts).unwrap();
        assert!(out.kkt_residual <= opts.tol);
        assert_eq!(out.beta[2], 0.0);
    }

    #[test]
    fn mask_pins_coordinates() {
        let h = Array2::<f64>::eye(2);
        let c: Array1<f64> = array![3.0, 3.0];
        let w: Array1<f64> = array![0.0, 0.0];
        let mask = [true, false];
        let out = coordinate_descent(h.view(), c.view(), w.view(), Some(&mask), None, &SolverOptions::default()).unwrap();
        assert_eq!(out.beta, array![3.0, 0.0]);
    }

    #[test]
    fn sweep_cap_reports_residual() {
        let h: Array2<f64> = array![[1.0, 0.999], [0.999, 1.0]];
        let c: Array1<f64> = array![1.0, -1.0];
        let w: Array1<f64> = array![0.0, 0.0];
        let opts = SolverOptions { tol: 1e-14, max_sweeps: 2, max_newton: 1 };
        let err = coordinate_descent(h.view(), c.view(), w.view(), None, None, &opts).unwrap_err();
        assert!(matches!(err, FclsError::NonConvergence { .. }));
    }
}
