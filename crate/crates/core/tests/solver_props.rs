mod common;

use common::{normal_mat, normal_vec, rng, sparse_edges};
use fcls_core::graph::{block_support, BlockSupport};
use fcls_core::solvers::{
    block_oracle, kkt_residual, soft_threshold, LinearModel, LogisticModel, LossModel, ShrinkageModel, SolverOptions,
};
use ndarray::{Array1, Array2};
use rand::Rng;

fn opts() -> SolverOptions<f64> {
    SolverOptions::default()
}

fn random_weights(r: &mut rand_chacha::ChaCha8Rng, n: usize, scale: f64) -> Array1<f64> {
    Array1::from_iter((0..n).map(|_| if r.random::<f64>() < 0.2 { 0.0 } else { r.random_range(0.0..scale) }))
}

fn logistic_data(r: &mut rand_chacha::ChaCha8Rng, n: usize, dim: usize) -> (Array2<f64>, Array1<f64>) {
    let x = normal_mat(r, n, dim);
    let beta = normal_vec(r, dim) * 0.5;
    let eta = x.dot(&beta);
    let y = eta.mapv(|e| 1.0 / (1.0 + (-e).exp())).mapv(|p| if r.random::<f64>() < p { 1.0 } else { 0.0 });
    (x, y)
}

#[test]
fn zero_weights_give_unpenalized_minimizer() {
    let mut r = rng(1);
    for _ in 0..20 {
        let dim = r.random_range(1..=15);
        let b_ok = normal_vec(&mut r, dim);
        let m = ShrinkageModel::new(b_ok.clone());
        assert_eq!(m.weighted_lasso(Array1::zeros(dim).view(), None, &opts()).unwrap(), b_ok);

        let x = normal_mat(&mut r, 3 * dim + 5, dim);
        let y = normal_vec(&mut r, 3 * dim + 5);
        let lin = LinearModel::new(x, y).unwrap();
        let full = lin.restricted_unpenalized(&vec![true; dim], &opts()).unwrap();
        let lasso = lin.weighted_lasso(Array1::zeros(dim).view(), None, &opts()).unwrap();
        assert!((&full - &lasso).iter().all(|v| v.abs() < 1e-7));
    }
}

#[test]
fn shrinkage_closed_form_matches_coordinate_descent() {
    let mut r = rng(2);
    for _ in 0..100 {
        let dim = r.random_range(1..=45);
        let b_ok = normal_vec(&mut r, dim);
        let w = random_weights(&mut r, dim, 3.0);
        let m = ShrinkageModel::new(b_ok.clone());
        let cf = m.weighted_lasso(w.view(), None, &opts()).unwrap();
        let cd = m.weighted_lasso_cd(w.view(), &opts()).unwrap();
        for l in 0..dim {
            assert!((cf[l] - cd[l]).abs() <= 1e-10);
            assert_eq!(cf[l], soft_threshold(b_ok[l], 0.5 * w[l]));
        }
    }
}

#[test]
fn kkt_residuals_are_small() {
    let mut r = rng(3);
    for _ in 0..50 {
        let d = r.random_range(2..=10);
        let dim = d * (d - 1) / 2;
        let n = r.random_range(10..=200);
        let w = random_weights(&mut r, dim, 0.5);

        let x = normal_mat(&mut r, n, dim);
        let y = normal_vec(&mut r, n);
        let lin = LinearModel::new(x, y).unwrap();
        let b = lin.weighted_lasso(w.view(), None, &opts()).unwrap();
        assert!(kkt_residual(&lin, w.view(), b.view()) <= 1e-8);

        let (x, y) = logistic_data(&mut r, n, dim);
        let log = LogisticModel::new(x, y, 1e-3).unwrap();
        let b = log.weighted_lasso(w.view(), None, &opts()).unwrap();
        assert!(kkt_residual(&log, w.view(), b.view()) <= 1e-8);
    }
}

/// Proximal-gradient iterations with a fixed step `1/L`, run far past
/// convergence.
fn proximal_gradient_oracle(m: &LinearModel<f64>, w: &Array1<f64>) -> Array1<f64> {
    let g = m.gram();
    let lip = g.iter().map(|v| v.abs()).sum::<f64>();
    let step = 1.0 / lip;
    let mut beta = Array1::zeros(m.dim());
    for _ in 0..200_000 {
        let grad = m.gradient(beta.view());
        beta = Array1::from_iter(
            beta.iter().zip(grad.iter()).zip(w.iter()).map(|((b, g), wl)| soft_threshold(b - step * g, step * 0.5 * wl)),
        );
    }
    beta
}

fn penalized(m: &LinearModel<f64>, w: &Array1<f64>, b: &Array1<f64>) -> f64 {
    m.value(b.view()) + 0.5 * w.iter().zip(b.iter()).map(|(w, b)| w * b.abs()).sum::<f64>()
}

#[test]
fn linear_lasso_matches_slow_oracle() {
    let mut r = rng(4);
    for _ in 0..20 {
        let dim = 6;
        let n = r.random_range(4..=30);
        let x = normal_mat(&mut r, n, dim);
        let y = normal_vec(&mut r, n);
        let m = LinearModel::new(x, y).unwrap();
        let w = random_weights(&mut r, dim, 1.0);
        let fast = m.weighted_lasso(w.view(), None, &opts()).unwrap();
        let slow = proximal_gradient_oracle(&m, &w);
        assert!((penalized(&m, &w, &fast) - penalized(&m, &w, &slow)).abs() <= 1e-5);
        assert!(penalized(&m, &w, &fast) <= penalized(&m, &w, &slow) + 1e-10);
    }
}

#[test]
fn linear_block_oracle_solves_normal_equations() {
    let mut r = rng(5);
    for _ in 0..30 {
        let d = r.random_range(3..=8);
        let dim = d * (d - 1) / 2;
        let support: BlockSupport = block_support(&sparse_edges(&mut r, d, 0.2), 0.0);
        let n = dim + 20;
        let x = normal_mat(&mut r, n, dim);
        let y = normal_vec(&mut r, n);
        let m = LinearModel::new(x.clone(), y.clone()).unwrap();
        let b = block_oracle(&m, &support).unwrap();
        let resid = x.dot(b.values()) - &y;
        let xtr = x.t().dot(&resid);
        let xty = x.t().dot(&y);
        let scale = support.mask().iter().zip(xty.iter()).filter(|(s, _)| **s).fold(0.0f64, |a, (_, v)| a.max(v.abs()));
        for (l, inside) in support.mask().iter().enumerate() {
            if *inside {
                assert!(xtr[l].abs() <= 1e-8 * scale.max(1.0));
            } else {
                assert_eq!(b.values()[l], 0.0);
            }
        }
    }
}

fn check_gradient<L: LossModel<f64>>(m: &L, b: &Array1<f64>) {
    let g = m.gradient(b.view());
    let scale = b.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let h = 1e-6 * scale;
    for l in 0..b.len() {
        let mut up = b.clone();
        let mut dn = b.clone();
        up[l] += h;
        dn[l] -= h;
        let fd = (m.value(up.view()) - m.value(dn.view())) / (2.0 * h);
        assert!((fd - g[l]).abs() <= 1e-5 * g[l].abs().max(1.0), "coordinate {l}: {fd} vs {}", g[l]);
    }
}

#[test]
fn gradients_match_finite_differences() {
    let mut r = rng(6);
    for _ in 0..50 {
        let dim = r.random_range(1..=10);
        let n = r.random_range(5..=50);
        let b = normal_vec(&mut r, dim);
        let (x, y) = logistic_data(&mut r, n, dim);
        check_gradient(&LogisticModel::new(x.clone(), y.clone(), 0.01).unwrap(), &b);
        check_gradient(&LinearModel::new(x, normal_vec(&mut r, n)).unwrap(), &b);
        check_gradient(&ShrinkageModel::new(normal_vec(&mut r, dim)), &b);
    }
}

#[test]
fn losses_are_midpoint_convex() {
    let mut r = rng(7);
    for _ in 0..100 {
        let dim = r.random_range(1..=10);
        let n = r.random_range(5..=40);
        let (x, y) = logistic_data(&mut r, n, dim);
        let models: Vec<Box<dyn LossModel<f64>>> = vec![
            Box::new(LogisticModel::new(x.clone(), y, 0.0).unwrap()),
            Box::new(LinearModel::new(x, normal_vec(&mut r, n)).unwrap()),
            Box::new(ShrinkageModel::new(normal_vec(&mut r, dim))),
        ];
        let a = normal_vec(&mut r, dim) * 2.0;
        let b = normal_vec(&mut r, dim) * 2.0;
        let mid = (&a + &b) * 0.5;
        for m in &models {
            assert!(m.value(mid.view()) <= 0.5 * (m.value(a.view()) + m.value(b.view())) + 1e-10);
        }
    }
}
