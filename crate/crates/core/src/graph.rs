//! Edge vectors, adjacency and Laplacian constructions, connected components,
//! block supports and spectral summaries.
//!
//! A parameter `β ∈ R^D` with `D = d(d-1)/2` is read as the upper triangle of a
//! hollow symmetric `d × d` adjacency matrix. Nodes and edges are 0-based and
//! edges are ordered lexicographically over pairs `(i, j)` with `i < j`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{invalid, FclsError, Result};
use crate::linalg::{max_abs, symmetric_eigen};
use crate::scalar::Scalar;
use crate::union_find::DisjointSet;

/// Magnitude at or below which an edge is treated as absent.
pub const DEFAULT_ZERO_TOL: f64 = 1e-10;

/// Relative tolerance (times the Laplacian operator norm) for a zero eigenvalue.
pub const EIGEN_ZERO_TOL: f64 = 1e-8;

/// Number of edges `d(d-1)/2` of the complete graph on `d` nodes.
pub fn edge_count(d: usize) -> usize {
    d * d.saturating_sub(1) / 2
}

/// Position of the pair `(i, j)`, `i < j < d`, in lexicographic edge order.
pub fn edge_index(i: usize, j: usize, d: usize) -> Result<usize> {
    if i >= j || j >= d {
        return Err(invalid(format!(
            "edge ({i}, {j}) is not a valid pair i < j < d = {d}"
        )));
    }
    Ok(edge_index_unchecked(i, j, d))
}

#[inline]
pub(crate) fn edge_index_unchecked(i: usize, j: usize, d: usize) -> usize {
    i * d - i * (i + 1) / 2 + (j - i - 1)
}

/// Inverse of [`edge_index`].
pub fn edge_pair(l: usize, d: usize) -> Result<(usize, usize)> {
    if l >= edge_count(d) {
        return Err(invalid(format!(
            "edge id {l} out of range for d = {d} ({} edges)",
            edge_count(d)
        )));
    }
    let mut start = 0;
    for i in 0..d {
        let row = d - i - 1;
        if l < start + row {
            return Ok((i, i + 1 + (l - start)));
        }
        start += row;
    }
    unreachable!("edge id checked against edge_count")
}

/// Iterator over all pairs `(i, j)`, `i < j < d`, in edge order.
pub fn edge_pairs(d: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..d).flat_map(move |i| ((i + 1)..d).map(move |j| (i, j)))
}

/// Edge weights of a graph on `d` nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeVector<T> {
    d: usize,
    values: Array1<T>,
}

impl<T: Scalar> EdgeVector<T> {
    pub fn new(d: usize, values: Array1<T>) -> Result<Self> {
        if d == 0 {
            return Err(invalid("node count must be at least 1"));
        }
        if values.len() != edge_count(d) {
            return Err(FclsError::DimensionMismatch {
                expected: edge_count(d),
                found: values.len(),
            });
        }
        Ok(Self { d, values })
    }

    pub fn from_vec(d: usize, values: Vec<T>) -> Result<Self> {
        Self::new(d, Array1::from(values))
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            d: d.max(1),
            values: Array1::zeros(edge_count(d.max(1))),
        }
    }

    /// Recovers the node count from an edge count, if it is triangular.
    pub fn nodes_for_len(len: usize) -> Option<usize> {
        let mut d = 1;
        while edge_count(d) < len {
            d += 1;
        }
        (edge_count(d) == len).then_some(d)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &Array1<T> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array1<T> {
        &mut self.values
    }

    pub fn into_values(self) -> Array1<T> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if i == j {
            return T::zero();
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.values[edge_index_unchecked(a, b, self.d)]
    }

    pub fn abs(&self) -> Self {
        Self {
            d: self.d,
            values: self.values.mapv(T::abs),
        }
    }

    pub fn max_norm(&self) -> T {
        max_abs(self.values.iter().copied())
    }

    pub fn l1_norm(&self) -> T {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn l2_norm(&self) -> T {
        self.values.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == T::zero())
    }

    /// The hollow symmetric matrix whose upper triangle is this vector.
    pub fn adjacency(&self) -> Array2<T> {
        let d = self.d;
        let mut a = Array2::zeros((d, d));
        for ((i, j), &v) in edge_pairs(d).zip(self.values.iter()) {
            a[[i, j]] = v;
            a[[j, i]] = v;
        }
        a
    }

    /// Reads the strict upper triangle of a square matrix.
    pub fn from_upper_triangle(a: ArrayView2<'_, T>) -> Result<Self> {
        let d = a.nrows();
        if a.ncols() != d {
            return Err(FclsError::DimensionMismatch {
                expected: d,
                found: a.ncols(),
            });
        }
        let values = edge_pairs(d).map(|(i, j)| a[[i, j]]).collect::<Vec<_>>();
        Self::from_vec(d, values)
    }
}

/// A validated hollow symmetric matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjacencyMatrix<T> {
    entries: Array2<T>,
}

impl<T: Scalar> AdjacencyMatrix<T> {
    pub fn new(entries: Array2<T>) -> Result<Self> {
        let d = entries.nrows();
        if entries.ncols() != d {
            return Err(FclsError::DimensionMismatch {
                expected: d,
                found: entries.ncols(),
            });
        }
        for i in 0..d {
            if entries[[i, i]] != T::zero() {
                return Err(invalid(format!("adjacency diagonal entry {i} is nonzero")));
            }
            for j in (i + 1)..d {
                if entries[[i, j]] != entries[[j, i]] {
                    return Err(invalid(format!("adjacency is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &Array2<T> {
        &self.entries
    }

    pub fn d(&self) -> usize {
        self.entries.nrows()
    }

    pub fn edge_vector(&self) -> EdgeVector<T> {
        EdgeVector::from_upper_triangle(self.entries.view())
            .expect("validated square matrix")
    }

    pub fn laplacian(&self) -> Array2<T> {
        laplacian_of_adjacency(self.entries.view())
    }
}

impl<T: Scalar> From<&EdgeVector<T>> for AdjacencyMatrix<T> {
    fn from(beta: &EdgeVector<T>) -> Self {
        Self {
            entries: beta.adjacency(),
        }
    }
}

/// `diag(A 1) - A`.
pub fn laplacian_of_adjacency<T: Scalar>(a: ArrayView2<'_, T>) -> Array2<T> {
    let d = a.nrows();
    let mut l = a.mapv(|v| -v);
    for i in 0..d {
        l[[i, i]] = T::zero();
        let degree: T = (0..d).filter(|&j| j != i).map(|j| a[[i, j]]).sum();
        l[[i, i]] = degree;
    }
    l
}

/// Laplacian of the graph with edge weights `β` (or `|β|` when `absolute`).
pub fn laplacian<T: Scalar>(beta: &EdgeVector<T>, absolute: bool) -> Array2<T> {
    let d = beta.d();
    let mut l = Array2::zeros((d, d));
    for ((i, j), &v) in edge_pairs(d).zip(beta.values().iter()) {
        let w = if absolute { v.abs() } else { v };
        l[[i, j]] = -w;
        l[[j, i]] = -w;
        l[[i, i]] += w;
        l[[j, j]] += w;
    }
    l
}

/// Connected-component structure of a support graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentLabeling {
    /// Component id of each node, assigned in order of first appearance.
    pub labels: Vec<usize>,
    /// Node count of each component.
    pub sizes: Vec<usize>,
    /// Number of components (isolated nodes included).
    pub k: usize,
    /// Largest component size.
    pub d_max: usize,
    /// Smallest size among components with at least two nodes.
    pub d_min: Option<usize>,
    /// Number of components with at least two nodes.
    pub k_nonzero: usize,
    /// Number of nodes with at least one incident edge.
    pub n_noniso: usize,
    /// Largest node degree of the binary support graph.
    pub max_degree: usize,
}

impl ComponentLabeling {
    /// Builds the labeling of a `d`-node graph from its (binary) edge list.
    pub fn from_edges(d: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut ds = DisjointSet::new(d);
        let mut degree = vec![0usize; d];
        for (i, j) in edges {
            degree[i] += 1;
            degree[j] += 1;
            ds.union(i, j);
        }
        let labels = ds.labels();
        let k = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut sizes = vec![0usize; k];
        for &l in &labels {
            sizes[l] += 1;
        }
        Self {
            d_max: sizes.iter().copied().max().unwrap_or(0),
            d_min: sizes.iter().copied().filter(|&s| s >= 2).min(),
            k_nonzero: sizes.iter().filter(|&&s| s >= 2).count(),
            n_noniso: degree.iter().filter(|&&g| g > 0).count(),
            max_degree: degree.iter().copied().max().unwrap_or(0),
            labels,
            sizes,
            k,
        }
    }

    pub fn d(&self) -> usize {
        self.labels.len()
    }

    pub fn same_component(&self, i: usize, j: usize) -> bool {
        self.labels[i] == self.labels[j]
    }

    /// Nodes of each component, in ascending node order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (node, &l) in self.labels.iter().enumerate() {
            out[l].push(node);
        }
        out
    }

    /// Size of the component containing `node`.
    pub fn size_of(&self, node: usize) -> usize {
        self.sizes[self.labels[node]]
    }
}

/// Components of the binary graph `{ℓ : |β_ℓ| > zero_tol}`.
pub fn connected_components<T: Scalar>(beta: &EdgeVector<T>, zero_tol: T) -> ComponentLabeling {
    let edges = edge_pairs(beta.d())
        .zip(beta.values().iter())
        .filter(|(_, v)| v.abs() > zero_tol)
        .map(|(e, _)| e);
    ComponentLabeling::from_edges(beta.d(), edges)
}

/// Components of a dense adjacency matrix (entries with magnitude above `zero_tol`).
pub fn adjacency_components<T: Scalar>(a: ArrayView2<'_, T>, zero_tol: T) -> ComponentLabeling {
    let d = a.nrows();
    let edges = edge_pairs(d).filter(|&(i, j)| a[[i, j]].abs() > zero_tol);
    ComponentLabeling::from_edges(d, edges)
}

/// Edge mask of all within-component pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockSupport {
    d: usize,
    membership: Vec<bool>,
}

impl BlockSupport {
    pub fn from_labeling(labeling: &ComponentLabeling) -> Self {
        let d = labeling.d();
        let membership = edge_pairs(d)
            .map(|(i, j)| labeling.same_component(i, j))
            .collect();
        Self { d, membership }
    }

    /// Builds a support from an explicit mask; the mask must be transitively closed.
    pub fn from_mask(d: usize, membership: Vec<bool>) -> Result<Self> {
        if membership.len() != edge_count(d) {
            return Err(FclsError::DimensionMismatch {
                expected: edge_count(d),
                found: membership.len(),
            });
        }
        let support = Self { d, membership };
        if !support.is_transitively_closed() {
            return Err(invalid("block support mask is not transitively closed"));
        }
        Ok(support)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn mask(&self) -> &[bool] {
        &self.membership
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        if i == j {
            return true;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.membership[edge_index_unchecked(a, b, self.d)]
    }

    pub fn count(&self) -> usize {
        self.membership.iter().filter(|&&m| m).count()
    }

    pub fn is_transitively_closed(&self) -> bool {
        let d = self.d;
        for i in 0..d {
            for j in 0..d {
                if i == j || !self.contains(i, j) {
                    continue;
                }
                for k in 0..d {
                    if k != i && k != j && self.contains(j, k) && !self.contains(i, k) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Block support of `β`: every pair of nodes in a common component.
pub fn block_support<T: Scalar>(beta: &EdgeVector<T>, zero_tol: T) -> BlockSupport {
    BlockSupport::from_labeling(&connected_components(beta, zero_tol))
}

/// Ascending eigenpairs of the Laplacian `L(|β|)`.
#[derive(Clone, Debug)]
pub struct SpectralSummary<T> {
    pub eigenvalues: Array1<T>,
    /// Column `k` pairs with `eigenvalues[k]`.
    pub eigenvectors: Array2<T>,
}

impl<T: Scalar> SpectralSummary<T> {
    pub fn largest(&self) -> T {
        self.eigenvalues
            .iter()
            .copied()
            .fold(T::zero(), T::max)
    }

    /// Count of eigenvalues at most `rel_tol` times the operator norm.
    pub fn zero_count(&self, rel_tol: T) -> usize {
        let scale = self.eigenvalues.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let tol = rel_tol * scale;
        self.eigenvalues.iter().filter(|&&v| v <= tol).count()
    }

    /// The eigenvalue of ascending rank `k + 1`.
    pub fn gap(&self, k: usize) -> Result<T> {
        if k == 0 || k >= self.eigenvalues.len() {
            return Err(invalid(format!(
                "spectral gap rank {} out of range for {} eigenvalues",
                k + 1,
                self.eigenvalues.len()
            )));
        }
        Ok(self.eigenvalues[k])
    }
}

pub fn spectral_summary<T: Scalar>(beta: &EdgeVector<T>) -> Result<SpectralSummary<T>> {
    let l = laplacian(beta, true);
    let (eigenvalues, eigenvectors) = symmetric_eigen(l.view())?;
    Ok(SpectralSummary {
        eigenvalues,
        eigenvectors,
    })
}

/// `λ_(K+1)(L(|β|))`, the spectral gap above `K` components.
pub fn spectral_gap<T: Scalar>(beta: &EdgeVector<T>, k: usize) -> Result<T> {
    spectral_summary(beta)?.gap(k)
}

/// Norms of `L(r)` and `A(r)` used to check the Laplacian comparison bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct LaplacianNorms<T> {
    pub d: usize,
    pub r_l1: T,
    pub r_l2: T,
    pub r_max: T,
    pub lap_entry_l1: T,
    pub lap_frobenius: T,
    pub lap_operator: T,
    pub lap_operator_one: T,
    pub adj_entry_l1: T,
    pub adj_frobenius: T,
    pub adj_operator: T,
    pub adj_operator_one: T,
    /// `‖A(r) 1‖_max`.
    pub max_row_sum: T,
    /// Largest degree of the binary support graph of `r`.
    pub max_degree: usize,
}

/// One inequality `lhs ≤ rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormBound<T> {
    pub name: &'static str,
    pub lhs: T,
    pub rhs: T,
}

impl<T: Scalar> NormBound<T> {
    pub fn slack(&self) -> T {
        self.rhs - self.lhs
    }
}

impl<T: Scalar> LaplacianNorms<T> {
    /// The upper bounds relating Laplacian and edge-vector norms, then the
    /// lower bound `‖A(r) 1‖_max ≤ ‖L(r)‖_op`.
    pub fn bounds(&self) -> Vec<NormBound<T>> {
        let d = T::from_usize(self.d).unwrap();
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        let b = |name, lhs, rhs| NormBound { name, lhs, rhs };
        vec![
            b("lap_l1 <= 4 r_l1", self.lap_entry_l1, four * self.r_l1),
            b("lap_fro <= sqrt(2d) r_l2", self.lap_frobenius, (two * d).sqrt() * self.r_l2),
            b(
                "lap_fro <= sqrt(d^3+d^2-d) r_max",
                self.lap_frobenius,
                (d * d * d + d * d - d).sqrt() * self.r_max,
            ),
            b("lap_fro <= sqrt(2d) adj_op", self.lap_frobenius, (two * d).sqrt() * self.adj_operator),
            b("lap_op <= 2 adj_op1", self.lap_operator, two * self.adj_operator_one),
            b("2 adj_op1 <= 2d r_max", two * self.adj_operator_one, two * d * self.r_max),
            b(
                "lap_op <= max_row_sum + adj_op",
                self.lap_operator,
                self.max_row_sum + self.adj_operator,
            ),
            b("max_row_sum <= lap_op", self.max_row_sum, self.lap_operator),
        ]
    }
}

fn operator_one<T: Scalar>(m: ArrayView2<'_, T>) -> T {
    m.rows()
        .into_iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<T>())
        .fold(T::zero(), T::max)
}

fn frobenius<T: Scalar>(m: ArrayView2<'_, T>) -> T {
    m.iter().map(|&v| v * v).sum::<T>().sqrt()
}

fn spectral_norm_symmetric<T: Scalar>(m: ArrayView2<'_, T>) -> Result<T> {
    let (vals, _) = symmetric_eigen(m)?;
    Ok(max_abs(vals.iter().copied()))
}

pub fn laplacian_norms<T: Scalar>(r: &EdgeVector<T>) -> Result<LaplacianNorms<T>> {
    let a = r.adjacency();
    let l = laplacian(r, false);
    let row_sums: Array1<T> = a.sum_axis(ndarray::Axis(1));
    let degree = connected_components(r, T::zero()).max_degree;
    Ok(LaplacianNorms {
        d: r.d(),
        r_l1: r.l1_norm(),
        r_l2: r.l2_norm(),
        r_max: r.max_norm(),
        lap_entry_l1: l.iter().map(|v| v.abs()).sum(),
        lap_frobenius: frobenius(l.view()),
        lap_operator: spectral_norm_symmetric(l.view())?,
        lap_operator_one: operator_one(l.view()),
        adj_entry_l1: a.iter().map(|v| v.abs()).sum(),
        adj_frobenius: frobenius(a.view()),
        adj_operator: spectral_norm_symmetric(a.view())?,
        adj_operator_one: operator_one(a.view()),
        max_row_sum: max_abs(row_sums.iter().copied()),
        max_degree: degree,
    })
}

/// `βᵀ M` helper used by several modules.
pub(crate) fn weighted_abs_sum<T: Scalar>(x: ArrayView1<'_, T>, w: ArrayView1<'_, T>) -> T {
    x.iter().zip(w.iter()).map(|(a, b)| a.abs() * *b).sum()
}
