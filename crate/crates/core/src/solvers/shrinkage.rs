use ndarray::{Array1, Array2, ArrayView1};

use super::{check_len, check_weights, coordinate_descent, soft_threshold, LossModel, SolverOptions};
use crate::error::Result;
use crate::linalg::max_abs;
use crate::scalar::Scalar;

/// `ℓ(β) = ½ ‖b_ok - β‖²`: shrinks an existing estimate `b_ok`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShrinkageModel<T> {
    b_ok: Array1<T>,
}

impl<T: Scalar> ShrinkageModel<T> {
    pub fn new(b_ok: Array1<T>) -> Self {
        Self { b_ok }
    }

    pub fn b_ok(&self) -> &Array1<T> {
        &self.b_ok
    }

    /// Same problem routed through the generic coordinate-descent solver.
    pub fn weighted_lasso_cd(
        &self,
        weights: ArrayView1<'_, T>,
        opts: &SolverOptions<T>,
    ) -> Result<Array1<T>> {
        check_weights(self.dim(), weights)?;
        let h = Array2::<T>::eye(self.dim());
        Ok(coordinate_descent(h.view(), self.b_ok.view(), weights, None, None, opts)?.beta)
    }
}

impl<T: Scalar> LossModel<T> for ShrinkageModel<T> {
    fn dim(&self) -> usize {
        self.b_ok.len()
    }

    fn value(&self, beta: ArrayView1<'_, T>) -> T {
        let half = T::lit(0.5);
        self.b_ok
            .iter()
            .zip(beta.iter())
            .map(|(&b, &x)| (b - x) * (b - x))
            .sum::<T>()
            * half
    }

    fn gradient(&self, beta: ArrayView1<'_, T>) -> Array1<T> {
        &beta - &self.b_ok
    }

    fn weighted_lasso_masked(
        &self,
        weights: ArrayView1<'_, T>,
        mask: Option<&[bool]>,
        _warm: Option<ArrayView1<'_, T>>,
        _opts: &SolverOptions<T>,
    ) -> Result<Array1<T>> {
        check_weights(self.dim(), weights)?;
        if let Some(m) = mask {
            check_len(self.dim(), m.len())?;
        }
        let half = T::lit(0.5);
        Ok(Array1::from_iter((0..self.dim()).map(|l| {
            if mask.is_some_and(|m| !m[l]) {
                T::zero()
            } else {
                soft_threshold(self.b_ok[l], half * weights[l])
            }
        })))
    }

    fn restricted_unpenalized(&self, mask: &[bool], _opts: &SolverOptions<T>) -> Result<Array1<T>> {
        check_len(self.dim(), mask.len())?;
        Ok(Array1::from_iter(
            self.b_ok
                .iter()
                .zip(mask)
                .map(|(&b, &m)| if m { b } else { T::zero() }),
        ))
    }

    fn killer_lasso_bound(&self) -> T {
        max_abs(self.b_ok.iter().copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::kkt_residual;
    use ndarray::array;

    #[test]
    fn soft_threshold_example() {
        let m = ShrinkageModel::<f64>::new(array![2.0]);
        let out = m.weighted_lasso(array![2.0].view(), None, &SolverOptions::default()).unwrap();
        assert_eq!(out, array![1.0]);
    }

    #[test]
    fn value_gradient_at_minimizer() {
        let b: Array1<f64> = array![1.0, -2.0, 0.5];
        let m = ShrinkageModel::new(b.clone());
        let (v, g) = m.value_and_gradient(b.view());
        assert_eq!(v, 0.0);
        assert!(g.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn killer_bound_is_max_norm() {
        let m = ShrinkageModel::<f64>::new(array![3.0, -5.0, 1.0]);
        assert_eq!(m.killer_lasso_bound(), 5.0);
        let w = Array1::from_elem(3, 2.0 * 5.0);
        let out = m.weighted_lasso(w.view(), None, &SolverOptions::default()).unwrap();
        assert!(out.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn zero_weights_return_b_ok() {
        let b: Array1<f64> = array![1.5, -0.25];
        let m = ShrinkageModel::new(b.clone());
        let out = m.weighted_lasso(Array1::zeros(2).view(), None, &SolverOptions::default()).unwrap();
        assert_eq!(out, b);
    }

    #[test]
    fn kkt_residual_properties() {
        let m = ShrinkageModel::<f64>::new(array![2.0, -1.0, 0.3]);
        let w: Array1<f64> = array![1.0, 0.5, 1.0];
        let sol = m.weighted_lasso(w.view(), None, &SolverOptions::default()).unwrap();
        assert!(kkt_residual(&m, w.view(), sol.view()) <= 1e-12);

        let mut bumped = sol.clone();
        bumped[0] += 1e-3;
        assert!(kkt_residual(&m, w.view(), bumped.view()) >= 1e-4);

        let big = Array1::from_elem(3, 4.0);
        assert_eq!(kkt_residual(&m, big.view(), Array1::zeros(3).view()), 0.0);
    }

    #[test]
    fn restricted_copies_support() {
        let m = ShrinkageModel::<f64>::new(array![1.0, 2.0, 3.0]);
        let r = m.restricted_minimize(&[true, false, true], None, &SolverOptions::default()).unwrap();
        assert_eq!(r, array![1.0, 0.0, 3.0]);
        let rw = m
            .restricted_minimize(&[true, false, true], Some(array![2.0, 0.0, 2.0].view()), &SolverOptions::default())
            .unwrap();
        assert_eq!(rw, array![0.0, 0.0, 2.0]);
    }

    #[test]
    fn rejects_negative_weights() {
        let m = ShrinkageModel::<f64>::new(array![1.0]);
        assert!(m.weighted_lasso(array![-1.0].view(), None, &SolverOptions::default()).is_err());
    }
}
