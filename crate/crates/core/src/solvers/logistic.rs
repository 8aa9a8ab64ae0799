use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::{
    check_len, check_weights, coordinate_descent, kkt_from_gradient, zero_if_killed, LossModel,
    SolverOptions,
};
use crate::error::{invalid, FclsError, Result};
use crate::linalg::{max_abs, spd_solve};
use crate::scalar::Scalar;

const MAX_HALVINGS: usize = 60;

/// Logistic loss `(1/n) Σ (-yᵢ xᵢᵀβ + log(1 + exp(xᵢᵀβ))) + (ridge/2) ‖β‖²`.
#[derive(Clone, Debug)]
pub struct LogisticModel<T> {
    x: Array2<T>,
    y: Array1<T>,
    ridge: T,
}

/// `log(1 + exp(t))` without overflow.
#[inline]
pub(crate) fn softplus<T: Scalar>(t: T) -> T {
    t.max(T::zero()) + (-t.abs()).exp().ln_1p()
}

#[inline]
pub(crate) fn sigmoid<T: Scalar>(t: T) -> T {
    if t >= T::zero() {
        T::one() / (T::one() + (-t).exp())
    } else {
        let e = t.exp();
        e / (T::one() + e)
    }
}

impl<T: Scalar> LogisticModel<T> {
    pub fn new(x: Array2<T>, y: Array1<T>, ridge: T) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(invalid("logistic model needs at least one observation"));
        }
        check_len(x.nrows(), y.len())?;
        if y.iter().any(|&v| v != T::zero() && v != T::one()) {
            return Err(invalid("logistic responses must be 0 or 1"));
        }
        if !(ridge >= T::zero()) {
            return Err(invalid("ridge must be nonnegative"));
        }
        Ok(Self { x, y, ridge })
    }

    pub fn x(&self) -> ArrayView2<'_, T> {
        self.x.view()
    }

    pub fn y(&self) -> ArrayView1<'_, T> {
        self.y.view()
    }

    pub fn ridge(&self) -> T {
        self.ridge
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        Self::new(self.x.select(Axis(0), rows), self.y.select(Axis(0), rows), self.ridge)
    }

    /// Mean negative log-likelihood, without the ridge term.
    pub fn deviance(&self, beta: ArrayView1<'_, T>) -> T {
        let eta = self.x.dot(&beta);
        let n = T::from_usize(self.n()).unwrap();
        eta.iter()
            .zip(self.y.iter())
            .map(|(&e, &y)| softplus(e) - y * e)
            .sum::<T>()
            / n
    }

    /// `Xᵀ diag(w) X / n + ridge I` with `w = p(1-p)`.
    fn hessian(&self, beta: ArrayView1<'_, T>) -> Array2<T> {
        let eta = self.x.dot(&beta);
        let n = T::from_usize(self.n()).unwrap();
        let mut xw = self.x.clone();
        for (mut row, &e) in xw.axis_iter_mut(Axis(0)).zip(eta.iter()) {
            let p = sigmoid(e);
            let s = (p * (T::one() - p)).sqrt();
            row.mapv_inplace(|v| v * s);
        }
        let mut h = xw.t().dot(&xw) / n;
        for j in 0..h.nrows() {
            h[[j, j]] += self.ridge;
        }
        h
    }

    fn penalized(&self, beta: ArrayView1<'_, T>, weights: ArrayView1<'_, T>) -> T {
        let half = T::lit(0.5);
        self.value(beta)
            + beta
                .iter()
                .zip(weights.iter())
                .map(|(b, w)| half * *w * b.abs())
                .sum::<T>()
    }
}

impl<T: Scalar> LossModel<T> for LogisticModel<T> {
    fn dim(&self) -> usize {
        self.x.ncols()
    }

    fn value(&self, beta: ArrayView1<'_, T>) -> T {
        let half = T::lit(0.5);
        self.deviance(beta) + half * self.ridge * beta.iter().map(|&b| b * b).sum::<T>()
    }

    fn gradient(&self, beta: ArrayView1<'_, T>) -> Array1<T> {
        let eta = self.x.dot(&beta);
        let n = T::from_usize(self.n()).unwrap();
        let resid = Array1::from_iter(
            eta.iter()
                .zip(self.y.iter())
                .map(|(&e, &y)| sigmoid(e) - y),
        );
        self.x.t().dot(&resid) / n + &beta * self.ridge
    }

    /// Proximal Newton: each outer step solves the weighted-Lasso penalized
    /// quadratic model by coordinate descent, then backtracks by halving.
    fn weighted_lasso_masked(
        &self,
        weights: ArrayView1<'_, T>,
        mask: Option<&[bool]>,
        warm: Option<ArrayView1<'_, T>>,
        opts: &SolverOptions<T>,
    ) -> Result<Array1<T>> {
        let dim = self.dim();
        check_weights(dim, weights)?;
        if let Some(m) = mask {
            check_len(dim, m.len())?;
        }
        let zero = Array1::zeros(dim);
        if mask.is_none() && zero_if_killed(self.gradient(zero.view()).view(), weights) {
            return Ok(zero);
        }

        let mut beta = match warm {
            Some(w) => {
                check_len(dim, w.len())?;
                w.to_owned()
            }
            None => zero,
        };
        if let Some(m) = mask {
            for j in 0..dim {
                if !m[j] {
                    beta[j] = T::zero();
                }
            }
        }

        let half = T::lit(0.5);
        let mut kkt = T::infinity();
        for _ in 0..opts.max_newton {
            let grad = self.gradient(beta.view());
            kkt = kkt_from_gradient(grad.view(), weights, beta.view(), mask);
            if kkt <= opts.tol {
                return Ok(beta);
            }
            let h = self.hessian(beta.view());
            let c = h.dot(&beta) - &grad;
            let inner = SolverOptions {
                tol: (kkt * T::lit(0.01)).max(opts.tol * T::lit(0.01)),
                ..*opts
            };
            let target = coordinate_descent(h.view(), c.view(), weights, mask, Some(beta.view()), &inner)?.beta;
            let direction = &target - &beta;

            let f0 = self.penalized(beta.view(), weights);
            let predicted = grad.dot(&direction)
                + (0..dim)
                    .map(|j| half * weights[j] * (target[j].abs() - beta[j].abs()))
                    .sum::<T>();
            let slack = T::lit(16.0) * T::epsilon() * f0.abs().max(T::one());
            let mut step = T::one();
            let mut accepted = false;
            for _ in 0..MAX_HALVINGS {
                let trial = &beta + &(&direction * step);
                let f = self.penalized(trial.view(), weights);
                if f <= f0 + T::lit(1e-4) * step * predicted.min(T::zero()) + slack {
                    beta = trial;
                    accepted = true;
                    break;
                }
                step *= half;
            }
            if !accepted {
                break;
            }
        }
        let grad = self.gradient(beta.view());
        kkt = kkt.min(kkt_from_gradient(grad.view(), weights, beta.view(), mask));
        if kkt <= opts.tol {
            return Ok(beta);
        }
        Err(FclsError::NonConvergence {
            iterations: opts.max_newton,
            kkt_residual: kkt.as_f64(),
        })
    }

    /// Damped Newton on the coordinates in `mask`.
    fn restricted_unpenalized(&self, mask: &[bool], opts: &SolverOptions<T>) -> Result<Array1<T>> {
        check_len(self.dim(), mask.len())?;
        let idx: Vec<usize> = (0..self.dim()).filter(|&j| mask[j]).collect();
        let mut beta = Array1::zeros(self.dim());
        if idx.is_empty() {
            return Ok(beta);
        }
        let half = T::lit(0.5);
        let target = opts.tol * T::lit(1e-3);
        let mut last_grad = T::infinity();
        for _ in 0..opts.max_newton {
            let grad = self.gradient(beta.view()).select(Axis(0), &idx);
            last_grad = max_abs(grad.iter().copied());
            if last_grad <= target {
                return Ok(beta);
            }
            let h = self.hessian(beta.view()).select(Axis(0), &idx).select(Axis(1), &idx);
            let step_s = spd_solve(h.view(), &grad)?;
            let f0 = self.value(beta.view());
            let decrease = grad.dot(&step_s);
            let slack = T::lit(16.0) * T::epsilon() * f0.abs().max(T::one());
            let mut t = T::one();
            let mut moved = false;
            for _ in 0..MAX_HALVINGS {
                let mut trial = beta.clone();
                for (k, &j) in idx.iter().enumerate() {
                    trial[j] -= t * step_s[k];
                }
                if self.value(trial.view()) <= f0 - T::lit(1e-4) * t * decrease + slack {
                    beta = trial;
                    moved = true;
                    break;
                }
                t *= half;
            }
            if !moved {
                break;
            }
        }
        if last_grad <= opts.tol {
            return Ok(beta);
        }
        Err(FclsError::NonConvergence {
            iterations: opts.max_newton,
            kkt_residual: last_grad.as_f64(),
        })
    }
}
