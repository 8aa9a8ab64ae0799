//! Block structure for rectangular matrices and multi-arrays via graph
//! embeddings: the bipartite adjacency of a matrix and the hypergraph
//! adjacency of a multi-array.

use ndarray::{Array2, ArrayD, IxDyn};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, FclsError, Result};
use crate::graph::{adjacency_components, edge_index_unchecked, laplacian_of_adjacency, ComponentLabeling, EdgeVector};
use crate::linalg::symmetric_eigen;
use crate::lla::surrogate_weights;
use crate::penalty::{spectral_sum, Penalty};
use crate::scalar::Scalar;
use crate::solvers::soft_threshold;

/// A rectangular `R × C` parameter matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct RectParam<T> {
    values: Array2<T>,
}

impl<T: Scalar> RectParam<T> {
    pub fn new(values: Array2<T>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(invalid("rectangular parameter needs at least one row and one column"));
        }
        Ok(Self { values })
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<T> {
        &self.values
    }

    pub fn into_values(self) -> Array2<T> {
        self.values
    }
}

/// Bipartite graph over `R + C` nodes: rows are nodes `0..R`, columns are
/// nodes `R..R+C`, and edge `(i, R + j)` carries `m[i, j]`.
pub fn bipartite_embed<T: Scalar>(m: &RectParam<T>) -> EdgeVector<T> {
    let (r, c) = (m.rows(), m.cols());
    let d = r + c;
    let mut out = EdgeVector::zeros(d);
    let vals = out.values_mut();
    for i in 0..r {
        for j in 0..c {
            vals[edge_index_unchecked(i, r + j, d)] = m.values[[i, j]];
        }
    }
    out
}

/// Connected components of the bipartite embedding.
pub fn rect_blocks<T: Scalar>(m: &RectParam<T>, zero_tol: T) -> ComponentLabeling {
    crate::graph::connected_components(&bipartite_embed(m), zero_tol)
}

/// A dense multi-array with `V ≥ 2` axes, stored in row-major order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMultiArray<T>", into = "RawMultiArray<T>")]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct MultiArrayParam<T: Scalar> {
    values: ArrayD<T>,
}

#[derive(Serialize, Deserialize)]
struct RawMultiArray<T> {
    dims: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> TryFrom<RawMultiArray<T>> for MultiArrayParam<T> {
    type Error = FclsError;

    fn try_from(raw: RawMultiArray<T>) -> Result<Self> {
        Self::from_flat(raw.dims, raw.values)
    }
}

impl<T: Scalar> From<MultiArrayParam<T>> for RawMultiArray<T> {
    fn from(a: MultiArrayParam<T>) -> Self {
        let dims = a.dims().to_vec();
        let values = a.values.iter().copied().collect();
        RawMultiArray { dims, values }
    }
}

impl<T: Scalar> MultiArrayParam<T> {
    pub fn new(values: ArrayD<T>) -> Result<Self> {
        if values.ndim() < 2 {
            return Err(invalid(format!("multi-array needs at least 2 axes, got {}", values.ndim())));
        }
        if values.shape().contains(&0) {
            return Err(invalid("multi-array axes must be nonempty"));
        }
        Ok(Self { values })
    }

    pub fn from_flat(dims: Vec<usize>, values: Vec<T>) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if expected != values.len() {
            return Err(FclsError::DimensionMismatch {
                expected,
                found: values.len(),
            });
        }
        let arr = ArrayD::from_shape_vec(IxDyn(&dims), values).map_err(|e| invalid(e.to_string()))?;
        Self::new(arr)
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        Self::new(ArrayD::zeros(IxDyn(dims)))
    }

    pub fn dims(&self) -> &[usize] {
        self.values.shape()
    }

    pub fn order(&self) -> usize {
        self.values.ndim()
    }

    /// Number of axis-index vertices `s = Σ dims`.
    pub fn vertex_count(&self) -> usize {
        self.dims().iter().sum()
    }

    /// Vertex id of `(axis, index)`.
    pub fn vertex(&self, axis: usize, index: usize) -> usize {
        self.dims()[..axis].iter().sum::<usize>() + index
    }

    pub fn values(&self) -> &ArrayD<T> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut ArrayD<T> {
        &mut self.values
    }

    fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.dims()
            .iter()
            .map(|d| {
                let o = acc;
                acc += d;
                o
            })
            .collect()
    }
}

impl<T: Scalar> From<&RectParam<T>> for MultiArrayParam<T> {
    fn from(m: &RectParam<T>) -> Self {
        Self {
            values: m.values.clone().into_dyn(),
        }
    }
}

/// `s × s` hypergraph adjacency: for vertices on distinct axes `a, b`, the
/// sum of `|A|` over all entries whose `a` and `b` indices match them.
pub fn hypergraph_adjacency<T: Scalar>(a: &MultiArrayParam<T>) -> Array2<T> {
    let s = a.vertex_count();
    let off = a.offsets();
    let v = a.order();
    let mut out = Array2::zeros((s, s));
    for (idx, val) in a.values.indexed_iter() {
        let w = val.abs();
        if w == T::zero() {
            continue;
        }
        for p in 0..v {
            for q in (p + 1)..v {
                let (x, y) = (off[p] + idx[p], off[q] + idx[q]);
                out[[x, y]] += w;
                out[[y, x]] += w;
            }
        }
    }
    out
}

/// Components of the hypergraph adjacency over the `s` axis-index vertices.
pub fn multiarray_blocks<T: Scalar>(a: &MultiArrayParam<T>, zero_tol: T) -> ComponentLabeling {
    adjacency_components(hypergraph_adjacency(a).view(), zero_tol)
}

fn adjacency_fcls<T: Scalar>(penalty: &Penalty<T>, adj: Array2<T>) -> Result<T> {
    let (eigenvalues, _) = symmetric_eigen(laplacian_of_adjacency(adj.view()).view())?;
    Ok(spectral_sum(penalty, eigenvalues.iter().copied()) * T::lit(0.5))
}

/// FCLS penalty of the bipartite embedding of `|m|`.
pub fn bipartite_fcls_value<T: Scalar>(penalty: &Penalty<T>, m: &RectParam<T>) -> Result<T> {
    crate::penalty::fcls_value(penalty, &bipartite_embed(m).abs())
}

/// FCLS penalty of the hypergraph adjacency of `|a|`.
pub fn hypergraph_fcls_value<T: Scalar>(penalty: &Penalty<T>, a: &MultiArrayParam<T>) -> Result<T> {
    adjacency_fcls(penalty, hypergraph_adjacency(a))
}

/// Surrogate weights of the bipartite embedding, one per matrix entry.
pub fn rect_surrogate_weights<T: Scalar>(m: &RectParam<T>, penalty: &Penalty<T>) -> Result<Array2<T>> {
    let (r, c) = (m.rows(), m.cols());
    let d = r + c;
    let w = surrogate_weights(&bipartite_embed(m), penalty)?;
    Ok(Array2::from_shape_fn((r, c), |(i, j)| w.values()[edge_index_unchecked(i, r + j, d)]))
}

/// Surrogate weights mapped onto multi-array entries: each entry collects the
/// weights of every vertex pair its hyperedge touches.
pub fn multiarray_surrogate_weights<T: Scalar>(
    a: &MultiArrayParam<T>,
    penalty: &Penalty<T>,
) -> Result<ArrayD<T>> {
    let s = a.vertex_count();
    let adj = crate::graph::AdjacencyMatrix::new(hypergraph_adjacency(a))?;
    let w = surrogate_weights(&adj.edge_vector(), penalty)?;
    let off = a.offsets();
    let v = a.order();
    let mut out = ArrayD::zeros(IxDyn(a.dims()));
    for (idx, slot) in out.indexed_iter_mut() {
        let mut acc = T::zero();
        for p in 0..v {
            for q in (p + 1)..v {
                acc += w.values()[edge_index_unchecked(off[p] + idx[p], off[q] + idx[q], s)];
            }
        }
        *slot = acc;
    }
    Ok(out)
}

/// Either kind of embedded parameter.
#[derive(Clone, Debug)]
pub enum EmbeddedParam<T: Scalar> {
    Rect(RectParam<T>),
    Multi(MultiArrayParam<T>),
}

/// Entry-shaped surrogate weights for either embedding.
pub fn embedded_surrogate_weights<T: Scalar>(
    param: &EmbeddedParam<T>,
    penalty: &Penalty<T>,
) -> Result<ArrayD<T>> {
    match param {
        EmbeddedParam::Rect(m) => Ok(rect_surrogate_weights(m, penalty)?.into_dyn()),
        EmbeddedParam::Multi(a) => multiarray_surrogate_weights(a, penalty),
    }
}

/// LLA for the matrix shrinkage problem `½‖B - B_ok‖²_F + bipartite FCLS`:
/// each step soft-thresholds `B_ok` at half the current surrogate weights.
pub fn rect_shrinkage_lla<T: Scalar>(
    b_ok: &RectParam<T>,
    penalty: &Penalty<T>,
    init: &RectParam<T>,
    steps: usize,
) -> Result<Vec<RectParam<T>>> {
    if init.values.dim() != b_ok.values.dim() {
        return Err(invalid("initializer and observation shapes differ"));
    }
    let half = T::lit(0.5);
    let mut iterates = vec![init.clone()];
    for _ in 0..steps {
        let w = rect_surrogate_weights(iterates.last().unwrap(), penalty)?;
        let mut next = b_ok.values.clone();
        next.zip_mut_with(&w, |b, m| *b = soft_threshold(*b, *m * half));
        iterates.push(RectParam::new(next)?);
    }
    Ok(iterates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn bipartite_examples() {
        let eye = RectParam::<f64>::new(array![[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let lab = rect_blocks(&eye, 1e-12);
        assert_eq!(lab.k, 2);
        assert!(lab.same_component(0, 2));
        assert!(lab.same_component(1, 3));

        let ones = RectParam::new(Array2::<f64>::ones((2, 3))).unwrap();
        let lab = rect_blocks(&ones, 1e-12);
        assert_eq!((lab.k, lab.sizes.clone()), (1, vec![5]));
    }

    #[test]
    fn two_block_rectangle() {
        let mut m = Array2::<f64>::zeros((5, 4));
        for i in 0..3 {
            for j in 0..2 {
                m[[i, j]] = 1.0 + i as f64;
            }
        }
        for i in 3..5 {
            for j in 2..4 {
                m[[i, j]] = -0.5;
            }
        }
        let lab = rect_blocks(&RectParam::new(m).unwrap(), 1e-12);
        assert_eq!(lab.k, 2);
        let members = lab.members();
        assert_eq!(members[0], vec![0, 1, 2, 5, 6]);
        assert_eq!(members[1], vec![3, 4, 7, 8]);
    }

    #[test]
    fn single_entry_hypergraph() {
        let mut a = MultiArrayParam::<f64>::zeros(&[2, 2, 2]).unwrap();
        a.values_mut()[IxDyn(&[0, 0, 0])] = 1.0;
        let h = hypergraph_adjacency(&a);
        let (v10, v20, v30) = (a.vertex(0, 0), a.vertex(1, 0), a.vertex(2, 0));
        assert_eq!(h[[v10, v20]], 1.0);
        assert_eq!(h[[v10, v30]], 1.0);
        assert_eq!(h[[v20, v30]], 1.0);
        assert_eq!(h.sum(), 6.0);
        let lab = multiarray_blocks(&a, 1e-12);
        assert_eq!(lab.k, 4);
        assert_eq!(lab.d_max, 3);
    }

    #[test]
    fn matrix_hypergraph_is_bipartite() {
        let m = RectParam::<f64>::new(array![[1.0, -2.0, 0.0], [0.0, 0.0, 3.0]]).unwrap();
        let h = hypergraph_adjacency(&MultiArrayParam::from(&m));
        assert_eq!(h, bipartite_embed(&m).abs().adjacency());
    }

    #[test]
    fn four_component_array() {
        let mut a = MultiArrayParam::<f64>::zeros(&[6, 5, 5]).unwrap();
        a.values_mut()[IxDyn(&[0, 0, 0])] = 1.0;
        for i in 1..3 {
            for j in 1..3 {
                for k in 1..3 {
                    a.values_mut()[IxDyn(&[i, j, k])] = 2.0;
                }
            }
        }
        for i in 3..5 {
            for j in 3..5 {
                for k in 3..5 {
                    a.values_mut()[IxDyn(&[i, j, k])] = -1.0;
                }
            }
        }
        let lab = multiarray_blocks(&a, 1e-12);
        assert_eq!(lab.k, 4);
        assert_eq!(lab.size_of(a.vertex(0, 5)), 1);
    }

    #[test]
    fn zero_array_weights() {
        let tau = 0.8;
        let p = Penalty::<f64>::scad(tau, 3.7).unwrap();
        let a = MultiArrayParam::<f64>::zeros(&[2, 3, 2]).unwrap();
        let w = multiarray_surrogate_weights(&a, &p).unwrap();
        assert!(w.iter().all(|x| (x - 2.0 * tau * 3.0).abs() < 1e-12));
        let m = RectParam::new(Array2::<f64>::zeros((3, 2))).unwrap();
        let w = rect_surrogate_weights(&m, &p).unwrap();
        assert!(w.iter().all(|x| (x - 2.0 * tau).abs() < 1e-12));
    }

    #[test]
    fn two_paths_agree_for_matrices() {
        let p = Penalty::<f64>::scad(0.5, 2.1).unwrap();
        let m = RectParam::<f64>::new(array![[1.0, 0.2, 0.0], [0.0, 0.0, 1.5], [0.3, 0.9, 0.0]]).unwrap();
        let rect = rect_surrogate_weights(&m, &p).unwrap().into_dyn();
        let multi = multiarray_surrogate_weights(&MultiArrayParam::from(&m), &p).unwrap();
        for (x, y) in rect.iter().zip(multi.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn clean_blocks_get_zero_inner_weights() {
        let p = Penalty::<f64>::scad(0.2, 2.1).unwrap();
        let m = RectParam::<f64>::new(array![[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 2.0]]).unwrap();
        let w = rect_surrogate_weights(&m, &p).unwrap();
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1), (2, 2)] {
            assert!(w[[i, j]].abs() < 1e-12, "({i},{j}) = {}", w[[i, j]]);
        }
        for (i, j) in [(0, 2), (1, 2), (2, 0), (2, 1)] {
            assert!(w[[i, j]] > 0.1);
        }
    }

    #[test]
    fn json_round_trip() {
        let a: MultiArrayParam<f64> =
            serde_json::from_str(r#"{"dims":[2,2,2],"values":[1,0,0,0,0,0,0,2]}"#).unwrap();
        assert_eq!(a.values()[IxDyn(&[1, 1, 1])], 2.0);
        let back = serde_json::to_string(&a).unwrap();
        assert_eq!(serde_json::from_str::<MultiArrayParam<f64>>(&back).unwrap(), a);
        assert!(serde_json::from_str::<MultiArrayParam<f64>>(r#"{"dims":[2,2],"values":[1,2,3]}"#).is_err());
        assert!(serde_json::from_str::<MultiArrayParam<f64>>(r#"{"dims":[4],"values":[1,2,3,4]}"#).is_err());
    }

    #[test]
    fn rect_lla_keeps_blocks() {
        let p = Penalty::<f64>::scad(0.3, 2.1).unwrap();
        let b = RectParam::<f64>::new(array![[1.0, 1.1, 0.05], [0.9, 1.0, -0.04], [0.03, 0.0, 1.2]]).unwrap();
        let path = rect_shrinkage_lla(&b, &p, &b, 2).unwrap();
        let last = path.last().unwrap().values();
        assert_eq!(last[[0, 2]], 0.0);
        assert_eq!(last[[1, 2]], 0.0);
        assert_eq!(last[[2, 0]], 0.0);
        assert_eq!(last[[0, 0]], 1.0);
    }
}
