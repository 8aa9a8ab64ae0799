//! Self-check suite: randomized invariant checks run by `fcls check`.

use fcls_core::graph::{connected_components, edge_count, edge_index, laplacian_norms, spectral_summary, EdgeVector};
use fcls_core::lla::{lla_step, surrogate_weights, tau_max};
use fcls_core::multiarray::{multiarray_blocks, MultiArrayParam};
use fcls_core::penalty::{fcls_value, Penalty};
use fcls_core::solvers::{kkt_residual, LinearModel, LogisticModel, LossModel, ShrinkageModel, SolverOptions};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const FAMILIES: [&str; 7] = [
    "majorization",
    "spectral-cc",
    "kkt",
    "laplacian-bounds",
    "hypergraph",
    "gradients",
    "tau-kill",
];

/// Outcome of one named check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub family: &'static str,
    pub name: &'static str,
    /// Worst observed value over all random instances.
    pub observed: f64,
    pub tolerance: f64,
    /// `observed >= tolerance` when true, else `observed <= tolerance`.
    pub lower_bound: bool,
    pub passed: bool,
    pub instances: usize,
}

impl CheckResult {
    fn at_most(family: &'static str, name: &'static str, observed: f64, tolerance: f64, instances: usize) -> Self {
        Self {
            family,
            name,
            observed,
            tolerance,
            lower_bound: false,
            passed: observed <= tolerance,
            instances,
        }
    }

    fn at_least(family: &'static str, name: &'static str, observed: f64, tolerance: f64, instances: usize) -> Self {
        Self {
            family,
            name,
            observed,
            tolerance,
            lower_bound: true,
            passed: observed >= tolerance,
            instances,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl CheckReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let rel = if c.lower_bound { ">=" } else { "<=" };
            out.push_str(&format!(
                "{} {}/{}: observed {:.3e} {rel} {:.1e} over {} instances\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.family,
                c.name,
                c.observed,
                c.tolerance,
                c.instances
            ));
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        out.push_str(&format!("{} checks, {failed} failed\n", self.checks.len()));
        out
    }
}

fn uniform_edges(rng: &mut ChaCha8Rng, d: usize, density: f64) -> EdgeVector<f64> {
    let v = Array1::from_shape_fn(edge_count(d), |_| {
        if rng.random::<f64>() < density {
            rng.random_range(-2.0..2.0)
        } else {
            0.0
        }
    });
    EdgeVector::new(d, v).expect("length matches")
}

fn uniform_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Array2<f64> {
    Array2::from_shape_fn((r, c), |_| rng.random_range(-1.5..1.5))
}

fn majorization(rng: &mut ChaCha8Rng, fault: bool) -> Vec<CheckResult> {
    let (mut worst_slack, mut worst_gap) = (f64::INFINITY, 0.0f64);
    let cases = 200;
    for case in 0..cases {
        let d = rng.random_range(2..=8);
        let a = if case % 2 == 0 { 2.1 } else { 3.7 };
        let p = Penalty::scad(rng.random_range(0.1..2.0), a).unwrap();
        let (db, dx) = (rng.random_range(0.2..1.0), rng.random_range(0.2..1.0));
        let b = uniform_edges(rng, d, db);
        let x = uniform_edges(rng, d, dx);
        let w = surrogate_weights(&b, &p).unwrap();
        let sign = if fault { -1.0 } else { 1.0 };
        let q = |v: &EdgeVector<f64>| sign * w.surrogate_penalty(v.values().view());
        let fb = fcls_value(&p, &b).unwrap();
        let offset = fb - q(&b);
        worst_slack = worst_slack.min(q(&x) + offset - fcls_value(&p, &x).unwrap());
        worst_gap = worst_gap.max((q(&b) + offset - fb).abs());
    }
    vec![
        CheckResult::at_least("majorization", "surrogate_minus_penalty", worst_slack, -1e-8, cases),
        CheckResult::at_most("majorization", "touches_at_current_point", worst_gap, 1e-8, cases),
    ]
}

fn random_block_graph(rng: &mut ChaCha8Rng, d: usize) -> EdgeVector<f64> {
    let k = rng.random_range(1..=d.min(6));
    let block: Vec<usize> = (0..d).map(|_| rng.random_range(0..k)).collect();
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

fn spectral_cc(rng: &mut ChaCha8Rng) -> Vec<CheckResult> {
    let cases = 200;
    let mut mismatches = 0;
    for _ in 0..cases {
        let d = rng.random_range(2..=30);
        let beta = random_block_graph(rng, d);
        let zeros = spectral_summary(&beta).unwrap().zero_count(1e-8);
        let cc = connected_components(&beta, 0.0).members().len();
        if zeros != cc {
            mismatches += 1;
        }
    }
    vec![CheckResult::at_most("spectral-cc", "zero_eigenvalues_vs_components", mismatches as f64, 0.0, cases)]
}

fn random_weights(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| if rng.random::<f64>() < 0.2 { 0.0 } else { rng.random_range(0.0..scale) })
}

fn kkt(rng: &mut ChaCha8Rng) -> Vec<CheckResult> {
    let opts = SolverOptions::default();
    let cases = 50;
    let (mut cf, mut lin, mut logit) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..cases {
        let d = rng.random_range(2..=10);
        let dim = edge_count(d);
        let b = Array1::from_shape_fn(dim, |_| rng.random_range(-3.0..3.0));
        let w = random_weights(rng, dim, 4.0);
        let m = ShrinkageModel::new(b);
        let closed = m.weighted_lasso(w.view(), None, &opts).unwrap();
        let generic = m.weighted_lasso_cd(w.view(), &opts).unwrap();
        cf = cf.max((&closed - &generic).iter().fold(0.0, |a: f64, v| a.max(v.abs())));

        let n = rng.random_range(dim.max(10)..=200);
        let x = uniform_matrix(rng, n, dim);
        let truth = Array1::from_shape_fn(dim, |_| if rng.random::<f64>() < 0.3 { 1.0 } else { 0.0 });
        let y = x.dot(&truth) + Array1::from_shape_fn(n, |_| rng.random_range(-0.5..0.5));
        let w = random_weights(rng, dim, 0.5);
        let model = LinearModel::new(x.clone(), y).unwrap();
        let sol = model.weighted_lasso(w.view(), None, &opts).unwrap();
        lin = lin.max(kkt_residual(&model, w.view(), sol.view()));

        let eta = x.dot(&truth);
        let yb = eta.mapv(|e| if rng.random::<f64>() < 1.0 / (1.0 + (-e).exp()) { 1.0 } else { 0.0 });
        let model = LogisticModel::new(x, yb, 0.01).unwrap();
        let sol = model.weighted_lasso(w.view(), None, &opts).unwrap();
        logit = logit.max(kkt_residual(&model, w.view(), sol.view()));
    }
    vec![
        CheckResult::at_most("kkt", "shrinkage_closed_form_vs_cd", cf, 1e-10, cases),
        CheckResult::at_most("kkt", "linear_kkt_residual", lin, 1e-8, cases),
        CheckResult::at_most("kkt", "logistic_kkt_residual", logit, 1e-8, cases),
    ]
}

fn laplacian_bounds(rng: &mut ChaCha8Rng) -> Vec<CheckResult> {
    let cases = 500;
    let mut worst = f64::INFINITY;
    for _ in 0..cases {
        let d = rng.random_range(2..=12);
        let density = rng.random_range(0.1..1.0);
        let r = uniform_edges(rng, d, density);
        let norms = laplacian_norms(&r).unwrap();
        for b in norms.bounds() {
            worst = worst.min(b.slack());
        }
    }
    let mut table = 0.0f64;
    for d in 3..=10 {
        let complete = EdgeVector::from_vec(d, vec![1.0; edge_count(d)]).unwrap();
        let s = spectral_summary(&complete).unwrap();
        table = table.max((s.gap(1).unwrap() - d as f64).abs()).max((s.largest() - d as f64).abs());
        let mut star = EdgeVector::zeros(d);
        for j in 1..d {
            star.values_mut()[edge_index(0, j, d).unwrap()] = 1.0;
        }
        let s = spectral_summary(&star).unwrap();
        table = table.max((s.gap(1).unwrap() - 1.0f64).abs());
    }
    vec![
        CheckResult::at_least("laplacian-bounds", "min_slack", worst, -1e-10, cases),
        CheckResult::at_most("laplacian-bounds", "example_graph_spectra", table, 1e-10, 16),
    ]
}

/// Components of the hypergraph whose hyperedges are the nonzero entries.
fn brute_force_hyper_components(a: &MultiArrayParam<f64>) -> Vec<usize> {
    let s = a.vertex_count();
    let mut parent: Vec<usize> = (0..s).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (idx, v) in a.values().indexed_iter() {
        if *v == 0.0 {
            continue;
        }
        let first = a.vertex(0, idx[0]);
        for axis in 1..a.order() {
            let (r1, r2) = (find(&mut parent, first), find(&mut parent, a.vertex(axis, idx[axis])));
            parent[r1] = r2;
        }
    }
    (0..s).map(|x| find(&mut parent, x)).collect()
}

fn hypergraph(rng: &mut ChaCha8Rng) -> Vec<CheckResult> {
    let cases = 100;
    let mut mismatches = 0;
    for _ in 0..cases {
        let order = rng.random_range(2..=3);
        let dims: Vec<usize> = (0..order).map(|_| rng.random_range(1..=3)).collect();
        let len: usize = dims.iter().product();
        let density = rng.random_range(0.1..0.6);
        let values = (0..len)
            .map(|_| if rng.random::<f64>() < density { rng.random_range(-1.0..1.0) } else { 0.0 })
            .collect();
        let a = MultiArrayParam::from_flat(dims, values).unwrap();
        let roots = brute_force_hyper_components(&a);
        let labels = multiarray_blocks(&a, 0.0);
        let s = a.vertex_count();
        let agree = (0..s).all(|i| (0..s).all(|j| (roots[i] == roots[j]) == labels.same_component(i, j)));
        if !agree {
            mismatches += 1;
        }
    }
    vec![CheckResult::at_most("hypergraph", "blocks_vs_brute_force", mismatches as f64, 0.0, cases)]
}

fn fd_relative_error<L: LossModel<f64>>(model: &L, beta: &Array1<f64>) -> f64 {
    let g = model.gradient(beta.view());
    let h = 1e-6;
    let mut fd = Array1::zeros(beta.len());
    for k in 0..beta.len() {
        let mut up = beta.clone();
        let mut down = beta.clone();
        up[k] += h;
        down[k] -= h;
        fd[k] = (model.value(up.view()) - model.value(down.view())) / (2.0 * h);
    }
    let num = (&g - &fd).mapv(|v| v * v).sum().sqrt();
    let den = g.mapv(|v| v * v).sum().sqrt().max(1e-8);
    num / den
}

fn gradients(rng: &mut ChaCha8Rng) -> Vec<CheckResult> {
    let cases = 50;
    let (mut lin, mut logit) = (0.0f64, 0.0f64);
    for _ in 0..cases {
        let dim = edge_count(rng.random_range(2..=6));
        let n = rng.random_range(5..=60);
        let x = uniform_matrix(rng, n, dim);
        let y = Array1::from_shape_fn(n, |_| rng.random_range(-2.0..2.0));
        let yb = y.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
        let beta = Array1::from_shape_fn(dim, |_| rng.random_range(-1.0..1.0));
        lin = lin.max(fd_relative_error(&LinearModel::new(x.clone(), y).unwrap(), &beta));
        logit = logit.max(fd_relative_error(&LogisticModel::new(x, yb, 0.01).unwrap(), &beta));
    }
    vec![
        CheckResult::at_most("gradients", "linear_vs_central_differences", lin, 1e-5, cases),
        CheckResult::at_most("gradients", "logistic_vs_central_differences", logit, 1e-5, cases),
    ]
}

fn tau_kill(rng: &mut ChaCha8Rng) -> Vec<CheckResult> {
    let cases = 51;
    let opts = SolverOptions::default();
    let mut nonzero = 0usize;
    for case in 0..cases {
        let d = rng.random_range(2..=7);
        let dim = edge_count(d);
        let init = uniform_edges(rng, d, 0.7);
        let p = Penalty::scad(1.0, 2.1).unwrap();
        let n = rng.random_range(dim + 5..=80);
        let x = uniform_matrix(rng, n, dim);
        let y = Array1::from_shape_fn(n, |_| rng.random_range(-2.0..2.0));
        let next = match case % 3 {
            0 => {
                let m = ShrinkageModel::new(Array1::from_shape_fn(dim, |_| rng.random_range(-3.0..3.0)));
                step_at_kill(&m, &p, &init, &opts)
            }
            1 => step_at_kill(&LinearModel::new(x, y).unwrap(), &p, &init, &opts),
            _ => {
                let yb = y.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
                step_at_kill(&LogisticModel::new(x, yb, 0.01).unwrap(), &p, &init, &opts)
            }
        };
        nonzero += next.iter().filter(|v| **v != 0.0).count();
    }
    vec![CheckResult::at_most("tau-kill", "nonzeros_after_one_step", nonzero as f64, 0.0, cases)]
}

fn step_at_kill<L: LossModel<f64>>(
    model: &L,
    unit: &Penalty<f64>,
    init: &EdgeVector<f64>,
    opts: &SolverOptions<f64>,
) -> Array1<f64> {
    let t = tau_max(model, unit, init).unwrap() * 1.01;
    let p = unit.with_tau(t).unwrap();
    lla_step(model, &p, init, opts).unwrap().next.into_values()
}

/// Runs every family (or only `only`); `fault` flips a sign inside the
/// majorization check so that the suite must fail.
pub fn run_checks(only: Option<&str>, seed: u64, fault: bool) -> Result<CheckReport, String> {
    if let Some(f) = only {
        if !FAMILIES.contains(&f) {
            return Err(format!("unknown check family '{f}' (expected one of {})", FAMILIES.join(", ")));
        }
    }
    let mut checks = Vec::new();
    for (k, family) in FAMILIES.iter().enumerate() {
        if only.is_some_and(|f| f != *family) {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        checks.extend(match *family {
            "majorization" => majorization(&mut rng, fault),
            "spectral-cc" => spectral_cc(&mut rng),
            "kkt" => kkt(&mut rng),
            "laplacian-bounds" => laplacian_bounds(&mut rng),
            "hypergraph" => hypergraph(&mut rng),
            "gradients" => gradients(&mut rng),
            "tau-kill" => tau_kill(&mut rng),
            _ => unreachable!(),
        });
    }
    Ok(CheckReport {
        seed,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}
