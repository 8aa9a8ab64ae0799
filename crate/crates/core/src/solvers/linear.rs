use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::{
    check_len, check_weights, coordinate_descent, zero_if_killed, LossModel, SolverOptions,
};
use crate::error::{invalid, Result};
use crate::linalg::spd_solve;
use crate::scalar::Scalar;

/// Least squares loss `(1/2n) ‖y - Xβ‖²` without intercept.
#[derive(Clone, Debug)]
pub struct LinearModel<T> {
    x: Array2<T>,
    y: Array1<T>,
    /// `XᵀX / n`
    gram: Array2<T>,
    /// `Xᵀy / n`
    xty: Array1<T>,
}

impl<T: Scalar> LinearModel<T> {
    pub fn new(x: Array2<T>, y: Array1<T>) -> Result<Self> {
        let n = x.nrows();
        if n == 0 {
            return Err(invalid("linear model needs at least one observation"));
        }
        check_len(n, y.len())?;
        let inv_n = T::one() / T::from_usize(n).unwrap();
        let gram = x.t().dot(&x) * inv_n;
        let xty = x.t().dot(&y) * inv_n;
        Ok(Self { x, y, gram, xty })
    }

    pub fn x(&self) -> ArrayView2<'_, T> {
        self.x.view()
    }

    pub fn y(&self) -> ArrayView1<'_, T> {
        self.y.view()
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn gram(&self) -> ArrayView2<'_, T> {
        self.gram.view()
    }

    /// `max_j ‖X_j‖² / n`.
    pub fn max_column_norm(&self) -> T {
        self.gram.diag().iter().copied().fold(T::zero(), T::max)
    }

    /// Model over a subset of the observations.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        Self::new(self.x.select(Axis(0), rows), self.y.select(Axis(0), rows))
    }
}

impl<T: Scalar> LossModel<T> for LinearModel<T> {
    fn dim(&self) -> usize {
        self.x.ncols()
    }

    fn value(&self, beta: ArrayView1<'_, T>) -> T {
        let r = &self.y - &self.x.dot(&beta);
        let n = T::from_usize(self.n()).unwrap();
        r.iter().map(|&v| v * v).sum::<T>() / (n + n)
    }

    fn gradient(&self, beta: ArrayView1<'_, T>) -> Array1<T> {
        self.gram.dot(&beta) - &self.xty
    }

    fn weighted_lasso_masked(
        &self,
        weights: ArrayView1<'_, T>,
        mask: Option<&[bool]>,
        warm: Option<ArrayView1<'_, T>>,
        opts: &SolverOptions<T>,
    ) -> Result<Array1<T>> {
        check_weights(self.dim(), weights)?;
        if let Some(m) = mask {
            check_len(self.dim(), m.len())?;
        }
        if let Some(w) = warm {
            check_len(self.dim(), w.len())?;
        }
        let grad0 = self.xty.mapv(|v| -v);
        if mask.is_none() && zero_if_killed(grad0.view(), weights) {
            return Ok(Array1::zeros(self.dim()));
        }
        let out = coordinate_descent(self.gram.view(), self.xty.view(), weights, mask, warm, opts)?;
        Ok(out.beta)
    }

    fn restricted_unpenalized(&self, mask: &[bool], _opts: &SolverOptions<T>) -> Result<Array1<T>> {
        check_len(self.dim(), mask.len())?;
        let idx: Vec<usize> = (0..self.dim()).filter(|&j| mask[j]).collect();
        let mut beta = Array1::zeros(self.dim());
        if idx.is_empty() {
            return Ok(beta);
        }
        let g_ss = self.gram.select(Axis(0), &idx).select(Axis(1), &idx);
        let c_s = self.xty.select(Axis(0), &idx);
        let sol = spd_solve(g_ss.view(), &c_s)?;
        for (k, &j) in idx.iter().enumerate() {
            beta[j] = sol[k];
        }
        Ok(beta)
    }

    fn killer_lasso_bound(&self) -> T {
        self.xty.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::FclsError;
    use crate::solvers::kkt_residual;
    use ndarray::array;

    fn toy() -> LinearModel<f64> {
        let x: Array2<f64> = array![
            [1.0, 0.5, -0.2],
            [0.3, -1.0, 0.7],
            [-0.8, 0.2, 1.1],
            [0.4, 0.9, -0.5],
            [1.2, -0.3, 0.1]
        ];
        let y: Array1<f64> = array![1.0, -0.5, 0.7, 0.2, 1.4];
        LinearModel::new(x, y).unwrap()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = toy();
        let b: Array1<f64> = array![0.3, -0.2, 0.5];
        let g = m.gradient(b.view());
        for j in 0..3 {
            let h = 1e-6;
            let mut p = b.clone();
            p[j] += h;
            let mut q = b.clone();
            q[j] -= h;
            let fd = (m.value(p.view()) - m.value(q.view())) / (2.0 * h);
            assert!((fd - g[j]).abs() <= 1e-6 * g[j].abs().max(1.0));
        }
    }

    #[test]
    fn lasso_meets_kkt_tolerance() {
        let m = toy();
        let w: Array1<f64> = array![0.1, 0.4, 0.05];
        let b = m.weighted_lasso(w.view(), None, &SolverOptions::default()).unwrap();
        assert!(kkt_residual(&m, w.view(), b.view()) <= 1e-8);
    }

    #[test]
    fn killer_bound_zeroes_solution() {
        let m = toy();
        let k = m.killer_lasso_bound();
        let w = Array1::from_elem(3, 2.0 * k);
        let b = m.weighted_lasso(w.view(), None, &SolverOptions::default()).unwrap();
        assert!(b.iter().all(|v| *v == 0.0));

        let zero_y = LinearModel::new(m.x().to_owned(), Array1::zeros(5)).unwrap();
        assert_eq!(zero_y.killer_lasso_bound(), 0.0);
    }

    #[test]
    fn oracle_with_orthogonal_design() {
        // Columns orthogonal with XᵀX = n I.
        let x: Array2<f64> = array![[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]];
        let y: Array1<f64> = array![2.0, 0.5, -1.0, 0.25];
        let m = LinearModel::new(x.clone(), y.clone()).unwrap();
        let b = m.restricted_unpenalized(&[true, true], &SolverOptions::default()).unwrap();
        let expected = x.t().dot(&y) / 4.0;
        for j in 0..2 {
            assert!((b[j] - expected[j]).abs() < 1e-14);
        }
    }

    #[test]
    fn oracle_rank_deficiency_is_reported() {
        let x: Array2<f64> = array![[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]];
        let m = LinearModel::new(x, array![1.0, 2.0, 3.0]).unwrap();
        let err = m.restricted_unpenalized(&[true, true], &SolverOptions::default()).unwrap_err();
        assert!(matches!(err, FclsError::RankDeficient { .. }));
    }

    #[test]
    fn dimension_checks() {
        assert!(LinearModel::new(Array2::<f64>::zeros((3, 2)), Array1::zeros(4)).is_err());
        let m = toy();
        assert!(m.weighted_lasso(array![1.0].view(), None, &SolverOptions::default()).is_err());
    }
}
