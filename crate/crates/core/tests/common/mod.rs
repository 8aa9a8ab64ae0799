#![allow(dead_code)]

use fcls_core::graph::{edge_index, EdgeVector};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Array1<f64> {
    Array1::from_iter((0..n).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

pub fn normal_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Array2<f64> {
    Array2::from_shape_fn((r, c), |_| rng.sample::<f64, _>(StandardNormal))
}

/// Random signed edge vector with roughly `density` nonzeros.
pub fn sparse_edges(rng: &mut ChaCha8Rng, d: usize, density: f64) -> EdgeVector<f64> {
    let len = d * (d - 1) / 2;
    let v = Array1::from_iter((0..len).map(|_| {
        if rng.random::<f64>() < density {
            rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        }
    }));
    EdgeVector::new(d, v).unwrap()
}

/// Random partition of `0..d` into blocks with random positive edges inside
/// each block (which may leave a block internally disconnected).
pub fn block_graph(rng: &mut ChaCha8Rng, d: usize) -> EdgeVector<f64> {
    let n_blocks = rng.random_range(1..=d.min(6));
    let block: Vec<usize> = (0..d).map(|_| rng.random_range(0..n_blocks)).collect();
    let p = rng.random_range(0.2..1.0);
    let mut beta = EdgeVector::zeros(d);
    for i in 0..d {
        for j in (i + 1)..d {
            if block[i] == block[j] && rng.random::<f64>() < p {
                beta.values_mut()[edge_index(i, j, d).unwrap()] = rng.random_range(0.1..2.0);
            }
        }
    }
    beta
}

/// Two or more dense blocks of given sizes with weights `signal`, nodes in order.
pub fn block_target(sizes: &[usize], signal: f64) -> EdgeVector<f64> {
    let d: usize = sizes.iter().sum();
    let mut beta = EdgeVector::zeros(d);
    let mut start = 0;
    for &s in sizes {
        for i in start..start + s {
            for j in (i + 1)..start + s {
                beta.values_mut()[edge_index(i, j, d).unwrap()] = signal;
            }
        }
        start += s;
    }
    beta
}
