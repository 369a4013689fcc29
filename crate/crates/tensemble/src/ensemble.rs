//! Pairwise evidence matrices built from a pool of base clusterings.
//!
//! A pool is stored as a [`LabelMatrix`]: one row per sample, one column per
//! base clustering. Labels are opaque ids — they carry no order and need not
//! be contiguous, and no label in one column relates to any label in another.
//!
//! Three matrices summarise the pool:
//!
//! | matrix | entry (i, j) |
//! |--------|--------------|
//! | connective | 1 if one clustering puts i and j together, else 0 |
//! | co-association | fraction of clusterings that put i and j together |
//! | coherent link | 1 if *every* clustering puts i and j together, else 0 |
//!
//! Coherent links are detected on integer agreement counts, never by
//! floating-point comparison against 1.0.

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};

/// A pool of base clusterings: `n` samples by `m` clusterings, entry
/// `(i, k)` is the cluster id sample `i` received from clustering `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMatrix {
    labels: Array2<u32>,
}

impl LabelMatrix {
    /// Wraps an `n x m` array of cluster ids. Fails on an empty axis.
    pub fn new(labels: Array2<u32>) -> Result<Self> {
        if labels.nrows() == 0 {
            return Err(Error::EmptyInput("label matrix has no samples"));
        }
        if labels.ncols() == 0 {
            return Err(Error::EmptyInput("label matrix has no clusterings"));
        }
        Ok(Self { labels })
    }

    /// Builds a pool from per-clustering label vectors (one vector per column).
    pub fn from_columns(columns: &[Vec<u32>]) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::EmptyInput("label matrix has no clusterings"));
        }
        let n = columns[0].len();
        for (k, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "pool column length",
                    expected: n,
                    actual: columns[k].len(),
                });
            }
        }
        let mut labels = Array2::zeros((n, columns.len()));
        for (k, col) in columns.iter().enumerate() {
            for (i, &id) in col.iter().enumerate() {
                labels[[i, k]] = id;
            }
        }
        Self::new(labels)
    }

    /// Number of samples (rows).
    pub fn n_samples(&self) -> usize {
        self.labels.nrows()
    }

    /// Number of base clusterings (columns).
    pub fn n_clusterings(&self) -> usize {
        self.labels.ncols()
    }

    /// Labels assigned by clustering `k`.
    pub fn column(&self, k: usize) -> ArrayView1<'_, u32> {
        self.labels.column(k)
    }

    /// The underlying `n x m` id array.
    pub fn as_array(&self) -> &Array2<u32> {
        &self.labels
    }

    /// A new pool containing only the given columns, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyInput("column selection is empty"));
        }
        for &k in indices {
            if k >= self.n_clusterings() {
                return Err(Error::InvalidParameter {
                    name: "column index",
                    reason: format!("{k} out of range for pool of {}", self.n_clusterings()),
                });
            }
        }
        let mut labels = Array2::zeros((self.n_samples(), indices.len()));
        for (dst, &src) in indices.iter().enumerate() {
            labels.column_mut(dst).assign(&self.labels.column(src));
        }
        Self::new(labels)
    }
}

/// What a [`SimilarityMatrix`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    /// 0/1 agreement of a single clustering.
    Connective,
    /// Mean of `m` connective matrices; every entry is an exact multiple of `1/m`.
    CoAssociation { m: usize },
    /// 0/1 mask of pairs on which the whole pool agrees.
    CoherentLink,
    /// Output of the low-rank refinement.
    Refined,
}

/// A symmetric `n x n` matrix of pairwise similarities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    values: Array2<f64>,
    kind: MatrixKind,
}

impl SimilarityMatrix {
    /// Wraps a square symmetric matrix with entries in `[0, 1]`.
    ///
    /// Symmetry is enforced to within `1e-12`; kinds other than
    /// [`MatrixKind::Refined`] must additionally have a unit diagonal.
    pub fn new(values: Array2<f64>, kind: MatrixKind) -> Result<Self> {
        let (rows, cols) = values.dim();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(Error::EmptyInput("similarity matrix is 0x0"));
        }
        let mut max_dev: f64 = 0.0;
        for i in 0..rows {
            for j in 0..cols {
                let v = values[[i, j]];
                if !v.is_finite() {
                    return Err(Error::NonFinite("similarity matrix"));
                }
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidParameter {
                        name: "similarity entry",
                        reason: format!("({i},{j}) = {v} lies outside [0, 1]"),
                    });
                }
                max_dev = max_dev.max((v - values[[j, i]]).abs());
            }
        }
        const SYM_TOL: f64 = 1e-12;
        if max_dev > SYM_TOL {
            return Err(Error::NotSymmetric {
                max_dev,
                tol: SYM_TOL,
            });
        }
        if !matches!(kind, MatrixKind::Refined) {
            for i in 0..rows {
                if values[[i, i]] != 1.0 {
                    return Err(Error::InvalidParameter {
                        name: "similarity diagonal",
                        reason: format!("({i},{i}) = {} but this kind requires 1", values[[i, i]]),
                    });
                }
            }
        }
        Ok(Self { values, kind })
    }

    /// Matrix entries.
    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// Side length `n`.
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// What the matrix holds.
    pub fn kind(&self) -> MatrixKind {
        self.kind
    }
}

/// 0/1 agreement matrix of a single clustering: entry `(i, j)` is 1 exactly
/// when `labels[i] == labels[j]`. The diagonal is always 1.
pub fn connective_matrix(labels: &[u32]) -> Result<SimilarityMatrix> {
    if labels.is_empty() {
        return Err(Error::EmptyInput("label vector"));
    }
    let n = labels.len();
    let mut values = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            values[[i, j]] = if labels[i] == labels[j] { 1.0 } else { 0.0 };
        }
    }
    SimilarityMatrix::new(values, MatrixKind::Connective)
}

/// Mean of the pool's connective matrices.
///
/// Entry `(i, j)` is `c / m` where `c` counts the clusterings that put `i`
/// and `j` in the same cluster, so every entry is an exact multiple of `1/m`
/// and the diagonal is exactly 1.
pub fn co_association(pool: &LabelMatrix) -> Result<SimilarityMatrix> {
    let counts = agreement_counts(pool);
    let m = pool.n_clusterings();
    let values = counts.mapv(|c| c as f64 / m as f64);
    SimilarityMatrix::new(values, MatrixKind::CoAssociation { m })
}

/// 0/1 mask of pairs every clustering in the pool agrees on.
///
/// The input must be a co-association matrix; its entries are exact multiples
/// of `1/m`, so the integer agreement count is recovered by rounding and a
/// pair is linked exactly when that count equals `m`. The diagonal is all 1.
pub fn coherent_link(coassoc: &SimilarityMatrix) -> Result<SimilarityMatrix> {
    let MatrixKind::CoAssociation { m } = coassoc.kind() else {
        return Err(Error::InvalidParameter {
            name: "coassoc",
            reason: format!("expected a co-association matrix, got {:?}", coassoc.kind()),
        });
    };
    let values = coassoc.values().mapv(|v| {
        let count = (v * m as f64).round() as usize;
        if count == m {
            1.0
        } else {
            0.0
        }
    });
    SimilarityMatrix::new(values, MatrixKind::CoherentLink)
}

/// Integer agreement counts: entry `(i, j)` is the number of pool columns
/// assigning `i` and `j` the same id.
fn agreement_counts(pool: &LabelMatrix) -> Array2<u32> {
    let n = pool.n_samples();
    let mut counts = Array2::zeros((n, n));
    for k in 0..pool.n_clusterings() {
        let col = pool.column(k);
        for i in 0..n {
            for j in 0..n {
                if col[i] == col[j] {
                    counts[[i, j]] += 1;
                }
            }
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn connective_uses_opaque_ids() {
        let a = connective_matrix(&[7, 7, 42]).unwrap();
        assert_eq!(
            a.values(),
            &array![[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
        );
        assert_eq!(a.kind(), MatrixKind::Connective);
    }

    #[test]
    fn co_association_averages_agreements() {
        let pool = LabelMatrix::from_columns(&[vec![0, 0, 1, 1], vec![0, 1, 1, 0]]).unwrap();
        let a = co_association(&pool).unwrap();
        let expected = array![
            [1.0, 0.5, 0.0, 0.5],
            [0.5, 1.0, 0.5, 0.0],
            [0.0, 0.5, 1.0, 0.5],
            [0.5, 0.0, 0.5, 1.0]
        ];
        assert_eq!(a.values(), &expected);

        let m = coherent_link(&a).unwrap();
        assert_eq!(m.values(), &Array2::from_diag_elem(4, 1.0));
    }

    #[test]
    fn identical_columns_make_every_agreement_coherent() {
        let pool = LabelMatrix::from_columns(&[vec![0, 0, 1, 1], vec![5, 5, 9, 9]]).unwrap();
        let a = co_association(&pool).unwrap();
        let expected = array![
            [1.0, 1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 1.0],
            [0.0, 0.0, 1.0, 1.0]
        ];
        assert_eq!(a.values(), &expected);
        let m = coherent_link(&a).unwrap();
        assert_eq!(m.values(), &expected);
    }

    #[test]
    fn single_clustering_pool_links_its_own_blocks() {
        let pool = LabelMatrix::from_columns(&[vec![3, 3, 8]]).unwrap();
        let a = co_association(&pool).unwrap();
        let connective = connective_matrix(&[3, 3, 8]).unwrap();
        assert_eq!(a.values(), connective.values());
        let m = coherent_link(&a).unwrap();
        assert_eq!(m.values(), connective.values());
    }

    #[test]
    fn single_sample_pool_is_all_ones() {
        let pool = LabelMatrix::from_columns(&[vec![0], vec![4], vec![1]]).unwrap();
        let a = co_association(&pool).unwrap();
        assert_eq!(a.values(), &array![[1.0]]);
        let m = coherent_link(&a).unwrap();
        assert_eq!(m.values(), &array![[1.0]]);
    }

    #[test]
    fn link_detection_counts_agreements_not_float_equality() {
        // Seven columns agree on the pair (0, 1) only six times; 6/7 must not
        // round its way into a coherent link.
        let mut columns = vec![vec![1, 1, 2]; 6];
        columns.push(vec![1, 2, 2]);
        let pool = LabelMatrix::from_columns(&columns).unwrap();
        let a = co_association(&pool).unwrap();
        assert!((a.values()[[0, 1]] - 6.0 / 7.0).abs() < 1e-15);
        let m = coherent_link(&a).unwrap();
        assert_eq!(m.values()[[0, 1]], 0.0);
        assert_eq!(m.values()[[0, 0]], 1.0);
    }

    #[test]
    fn coherent_link_rejects_other_kinds() {
        let c = connective_matrix(&[0, 1]).unwrap();
        assert!(coherent_link(&c).is_err());
    }

    #[test]
    fn ragged_columns_are_rejected() {
        let err = LabelMatrix::from_columns(&[vec![0, 1], vec![0]]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn asymmetric_or_out_of_range_values_are_rejected() {
        let bad = array![[1.0, 0.2], [0.3, 1.0]];
        assert!(SimilarityMatrix::new(bad, MatrixKind::Refined).is_err());
        let out = array![[1.0, 1.2], [1.2, 1.0]];
        assert!(SimilarityMatrix::new(out, MatrixKind::Refined).is_err());
    }

    #[test]
    fn column_selection_preserves_order() {
        let pool =
            LabelMatrix::from_columns(&[vec![0, 0], vec![1, 0], vec![2, 2], vec![3, 0]]).unwrap();
        let picked = pool.select_columns(&[2, 0]).unwrap();
        assert_eq!(picked.n_clusterings(), 2);
        assert_eq!(picked.column(0).to_vec(), vec![2, 2]);
        assert_eq!(picked.column(1).to_vec(), vec![0, 0]);
    }
}
