mod common;

use common::{normal_mat, normal_vec, rng};
use fcls_core::initializers::{
    cv_folds, cv_select_lasso, cv_select_threshold, generalized_threshold, CovarianceSamples, MeanSamples,
    ThresholdKind,
};
use fcls_core::solvers::{LinearModel, SolverOptions};
use ndarray::Array1;
use proptest::prelude::*;
use rand::seq::SliceRandom;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn thresholding_satisfies_generalized_clauses(z in -10.0f64..10.0, gamma in 0.0f64..5.0) {
        for kind in [ThresholdKind::Hard, ThresholdKind::Soft] {
            let t = generalized_threshold(Array1::from(vec![z]).view(), gamma, kind)[0];
            prop_assert!(t.abs() <= z.abs());
            if z.abs() <= gamma {
                prop_assert_eq!(t, 0.0);
            }
            prop_assert!((t - z).abs() <= gamma + 1e-15);
        }
    }

    #[test]
    fn folds_partition_the_index_set(n in 2usize..200, k in 2usize..12, seed in any::<u64>()) {
        prop_assume!(n >= k);
        let folds = cv_folds(n, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut seen = vec![false; n];
        for f in &folds {
            prop_assert!(f.len() == n / k || f.len() == n / k + 1);
            for &i in f {
                prop_assert!(!seen[i]);
                seen[i] = true;
            }
        }
        prop_assert!(seen.iter().all(|s| *s));
    }
}

#[test]
fn cv_choices_ignore_grid_order() {
    let mut r = rng(9);
    for _ in 0..10 {
        let mean = MeanSamples::new(normal_mat(&mut r, 40, 10) + &normal_vec(&mut r, 10));
        let cov = CovarianceSamples::new(normal_mat(&mut r, 40, 5));
        let mut grid: Vec<f64> = (0..15).map(|k| 0.1 * k as f64).collect();
        let a = cv_select_threshold(&mean, ThresholdKind::Hard, 10, Some(&grid), 3).unwrap();
        let c = cv_select_threshold(&cov, ThresholdKind::Soft, 10, Some(&grid), 3).unwrap();
        grid.shuffle(&mut r);
        let b = cv_select_threshold(&mean, ThresholdKind::Hard, 10, Some(&grid), 3).unwrap();
        let d = cv_select_threshold(&cov, ThresholdKind::Soft, 10, Some(&grid), 3).unwrap();
        assert_eq!((a.gamma, &a.init), (b.gamma, &b.init));
        assert_eq!((c.gamma, &c.init), (d.gamma, &d.init));

        let x = normal_mat(&mut r, 50, 6);
        let y = x.dot(&normal_vec(&mut r, 6)) + normal_vec(&mut r, 50);
        let m = LinearModel::new(x, y).unwrap();
        let mut lgrid = vec![0.5, 0.05, 0.2, 0.01, 1.0];
        let e = cv_select_lasso(&m, 5, Some(&lgrid), 1, &SolverOptions::default()).unwrap();
        lgrid.reverse();
        let f = cv_select_lasso(&m, 5, Some(&lgrid), 1, &SolverOptions::default()).unwrap();
        assert_eq!(e.gamma, f.gamma);
        assert_eq!(e.init, f.init);
    }
}

#[test]
fn cv_needs_enough_samples() {
    let few = MeanSamples::new(ndarray::Array2::<f64>::zeros((5, 3)));
    assert!(cv_select_threshold(&few, ThresholdKind::Hard, 10, None, 0).is_err());
}
