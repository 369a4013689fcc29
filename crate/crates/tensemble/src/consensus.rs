//! Final-partition extraction from a refined similarity matrix.
//!
//! Two interchangeable backends:
//!
//! | backend | route |
//! |---|---|
//! | [`spectral_consensus`] | symmetric-normalized Laplacian → k smallest eigenvectors → row-normalize → k-means |
//! | [`hierarchical_consensus`] | `1 - S` dissimilarity → agglomerative linkage → cut at k clusters |
//!
//! The spectral backend is randomized only through its seed (k-means
//! restarts); the hierarchical backend is fully deterministic, with ties
//! broken towards the lexicographically smallest cluster-id pair.

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ensemble::SimilarityMatrix;
use crate::error::{Error, Result};
use crate::kmeans;

/// Floor applied to row degrees before the inverse square root, so samples
/// with no similarity mass cannot produce infinities.
const DEGREE_FLOOR: f64 = 1e-12;

/// Restarts of the embedded k-means inside [`spectral_consensus`].
const SPECTRAL_RESTARTS: usize = 20;

/// Iteration cap of the embedded k-means.
const KMEANS_ITERS: usize = 300;

/// A hard clustering of `n` samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<u32>,
    k: usize,
}

impl Partition {
    /// Wraps a label vector; `k` is the number of distinct labels present.
    pub fn new(labels: Vec<u32>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyInput("partition labels"));
        }
        let distinct: std::collections::BTreeSet<u32> = labels.iter().copied().collect();
        Ok(Self {
            labels,
            k: distinct.len(),
        })
    }

    /// Cluster label per sample.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Number of distinct clusters.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    /// Always false: construction rejects empty label vectors.
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

fn validate_k(n: usize, k: usize) -> Result<()> {
    if k < 1 || k > n {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: format!("must be in 1..={n}, got {k}"),
        });
    }
    Ok(())
}

/// Spectral clustering of a similarity matrix.
///
/// Builds `L = I - D^{-1/2} S D^{-1/2}`, takes the eigenvectors of the `k`
/// smallest eigenvalues, normalizes each embedding row to unit length, and
/// clusters the rows with seeded, restarted k-means.
pub fn spectral_consensus(s: &SimilarityMatrix, k: usize, seed: u64) -> Result<Partition> {
    let n = s.n();
    validate_k(n, k)?;
    let values = s.values();

    let inv_sqrt_degree: Vec<f64> = (0..n)
        .map(|i| values.row(i).sum().max(DEGREE_FLOOR).powf(-0.5))
        .collect();
    let mut laplacian = Array2::zeros((n, n));
    for ((i, j), out) in laplacian.indexed_iter_mut() {
        let normalized = inv_sqrt_degree[i] * values[[i, j]] * inv_sqrt_degree[j];
        *out = f64::from(u8::from(i == j)) - normalized;
    }
    // eigh assumes exact symmetry; rounding in the scaling is harmless but
    // folded away regardless.
    let symmetric = (&laplacian + &laplacian.t()) * 0.5;

    let (_, vectors) = symmetric.eigh(UPLO::Lower)?;
    let mut embedding = vectors.slice(ndarray::s![.., ..k]).to_owned();
    for mut row in embedding.rows_mut() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row /= norm;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fit = kmeans::fit_best(
        embedding.view(),
        k,
        KMEANS_ITERS,
        SPECTRAL_RESTARTS,
        &mut rng,
    )?;
    Partition::new(fit.labels)
}

/// Linkage rule for the agglomerative backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Linkage {
    /// Distance between clusters = minimum pairwise distance.
    Single,
    /// Distance = mean pairwise distance.
    #[default]
    Average,
    /// Distance = maximum pairwise distance.
    Complete,
}

/// One agglomeration step. Leaves carry ids `0..n`; the merge at step `s`
/// creates cluster id `n + s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    /// Smaller id of the merged pair.
    pub first: usize,
    /// Larger id of the merged pair.
    pub second: usize,
    /// Linkage distance at which the pair merged.
    pub distance: f64,
}

/// The full merge history of an agglomerative run. Cutting it reproduces the
/// partition at any cluster count without re-running the linkage.
#[derive(Debug, Clone)]
pub struct Dendrogram {
    n: usize,
    merges: Vec<Merge>,
}

impl Dendrogram {
    /// The recorded merges, in order.
    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// Number of leaves.
    pub fn len(&self) -> usize {
        self.n
    }

    /// Always false: linkage requires at least one sample.
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Partition obtained by undoing all but the first `n - k` merges.
    /// Clusters are labelled `0..k` in order of their smallest member.
    pub fn cut(&self, k: usize) -> Result<Partition> {
        validate_k(self.n, k)?;
        let mut component: Vec<usize> = (0..self.n).collect();
        let mut members: std::collections::HashMap<usize, Vec<usize>> =
            (0..self.n).map(|i| (i, vec![i])).collect();
        for (step, merge) in self.merges.iter().take(self.n - k).enumerate() {
            let a = members.remove(&merge.first).expect("live cluster id");
            let b = members.remove(&merge.second).expect("live cluster id");
            let mut joined = a;
            joined.extend(b);
            for &i in &joined {
                component[i] = self.n + step;
            }
            members.insert(self.n + step, joined);
        }
        let mut labels = vec![u32::MAX; self.n];
        let mut next = 0u32;
        let mut seen: std::collections::HashMap<usize, u32> = std::collections::HashMap::new();
        for i in 0..self.n {
            let label = *seen.entry(component[i]).or_insert_with(|| {
                let l = next;
                next += 1;
                l
            });
            labels[i] = label;
        }
        Partition::new(labels)
    }
}

/// Agglomerates `1 - S` from singletons all the way to one cluster and
/// records every merge.
pub fn linkage(s: &SimilarityMatrix, rule: Linkage) -> Result<Dendrogram> {
    let n = s.n();
    let values = s.values();
    let mut dist = Array2::zeros((n, n));
    for ((i, j), out) in dist.indexed_iter_mut() {
        *out = 1.0 - values[[i, j]];
    }

    let mut active: Vec<bool> = vec![true; n];
    let mut cluster_id: Vec<usize> = (0..n).collect();
    let mut size: Vec<f64> = vec![1.0; n];
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    for step in 0..n.saturating_sub(1) {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if !active[j] {
                    continue;
                }
                let d = dist[[i, j]];
                let ids = (
                    cluster_id[i].min(cluster_id[j]),
                    cluster_id[i].max(cluster_id[j]),
                );
                let better = match best {
                    None => true,
                    Some((bd, bi, bj, _, _)) => d < bd || (d == bd && ids < (bi, bj)),
                };
                if better {
                    best = Some((d, ids.0, ids.1, i, j));
                }
            }
        }
        let (d, id_a, id_b, slot_a, slot_b) =
            best.expect("two active clusters remain before the last merge");
        merges.push(Merge {
            first: id_a,
            second: id_b,
            distance: d,
        });

        let (sa, sb) = (size[slot_a], size[slot_b]);
        for other in 0..n {
            if !active[other] || other == slot_a || other == slot_b {
                continue;
            }
            let da = dist[[slot_a, other]];
            let db = dist[[slot_b, other]];
            let merged = match rule {
                Linkage::Single => da.min(db),
                Linkage::Average => (sa * da + sb * db) / (sa + sb),
                Linkage::Complete => da.max(db),
            };
            dist[[slot_a, other]] = merged;
            dist[[other, slot_a]] = merged;
        }
        active[slot_b] = false;
        size[slot_a] = sa + sb;
        cluster_id[slot_a] = n + step;
    }

    Ok(Dendrogram { n, merges })
}

/// Agglomerative consensus with the given linkage rule.
pub fn hierarchical_consensus_with(
    s: &SimilarityMatrix,
    k: usize,
    rule: Linkage,
) -> Result<Partition> {
    validate_k(s.n(), k)?;
    linkage(s, rule)?.cut(k)
}

/// Agglomerative consensus with average linkage.
pub fn hierarchical_consensus(s: &SimilarityMatrix, k: usize) -> Result<Partition> {
    hierarchical_consensus_with(s, k, Linkage::Average)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::MatrixKind;
    use ndarray::array;

    fn block_matrix(sizes: &[usize]) -> SimilarityMatrix {
        let n: usize = sizes.iter().sum();
        let mut block = vec![0usize; n];
        let mut start = 0;
        for (b, &len) in sizes.iter().enumerate() {
            block[start..start + len].fill(b);
            start += len;
        }
        let values =
            Array2::from_shape_fn((n, n), |(i, j)| f64::from(u8::from(block[i] == block[j])));
        SimilarityMatrix::new(values, MatrixKind::Refined).unwrap()
    }

    fn assert_same_partition(a: &[u32], b: &[u32]) {
        assert_eq!(a.len(), b.len());
        let mut forward = std::collections::HashMap::new();
        let mut backward = std::collections::HashMap::new();
        for (&x, &y) in a.iter().zip(b.iter()) {
            assert_eq!(*forward.entry(x).or_insert(y), y, "labels {a:?} vs {b:?}");
            assert_eq!(*backward.entry(y).or_insert(x), x, "labels {a:?} vs {b:?}");
        }
    }

    #[test]
    fn spectral_recovers_disconnected_blocks() {
        let s = block_matrix(&[3, 2]);
        let p = spectral_consensus(&s, 2, 9).unwrap();
        assert_eq!(p.k(), 2);
        assert_same_partition(p.labels(), &[0, 0, 0, 1, 1]);
    }

    #[test]
    fn spectral_identity_gives_singletons() {
        let n = 5;
        let eye = Array2::from_shape_fn((n, n), |(i, j)| f64::from(u8::from(i == j)));
        let s = SimilarityMatrix::new(eye, MatrixKind::Refined).unwrap();
        let p = spectral_consensus(&s, n, 3).unwrap();
        assert_eq!(p.k(), n);
    }

    #[test]
    fn spectral_is_deterministic_given_seed() {
        let s = block_matrix(&[4, 3, 2]);
        let a = spectral_consensus(&s, 3, 123).unwrap();
        let b = spectral_consensus(&s, 3, 123).unwrap();
        assert_eq!(a.labels(), b.labels());
    }

    #[test]
    fn hierarchical_recovers_blocks() {
        let s = block_matrix(&[3, 4]);
        let p = hierarchical_consensus(&s, 2).unwrap();
        assert_same_partition(p.labels(), &[0, 0, 0, 1, 1, 1, 1]);
    }

    #[test]
    fn hierarchical_k1_is_one_cluster() {
        let s = block_matrix(&[2, 2]);
        let p = hierarchical_consensus(&s, 1).unwrap();
        assert_eq!(p.k(), 1);
        assert!(p.labels().iter().all(|&l| l == 0));
    }

    #[test]
    fn all_linkage_rules_agree_on_clean_blocks() {
        let s = block_matrix(&[3, 3, 2]);
        for rule in [Linkage::Single, Linkage::Average, Linkage::Complete] {
            let p = hierarchical_consensus_with(&s, 3, rule).unwrap();
            assert_same_partition(p.labels(), &[0, 0, 0, 1, 1, 1, 2, 2]);
        }
    }

    #[test]
    fn dendrogram_cut_is_consistent_across_k() {
        let values = array![
            [1.0, 0.9, 0.1, 0.2],
            [0.9, 1.0, 0.2, 0.1],
            [0.1, 0.2, 1.0, 0.7],
            [0.2, 0.1, 0.7, 1.0]
        ];
        let s = SimilarityMatrix::new(values, MatrixKind::Refined).unwrap();
        let tree = linkage(&s, Linkage::Average).unwrap();
        assert_eq!(tree.merges().len(), 3);
        let p4 = tree.cut(4).unwrap();
        assert_eq!(p4.labels(), &[0, 1, 2, 3]);
        let p2 = tree.cut(2).unwrap();
        assert_same_partition(p2.labels(), &[0, 0, 1, 1]);
        let p1 = tree.cut(1).unwrap();
        assert_eq!(p1.k(), 1);
    }

    #[test]
    fn both_backends_reject_bad_k() {
        let s = block_matrix(&[2, 2]);
        assert!(spectral_consensus(&s, 0, 1).is_err());
        assert!(spectral_consensus(&s, 5, 1).is_err());
        assert!(hierarchical_consensus(&s, 0).is_err());
        assert!(hierarchical_consensus(&s, 5).is_err());
    }

    #[test]
    fn permuting_samples_permutes_the_partition() {
        let values = array![
            [1.0, 0.8, 0.1, 0.0, 0.1],
            [0.8, 1.0, 0.2, 0.1, 0.0],
            [0.1, 0.2, 1.0, 0.9, 0.7],
            [0.0, 0.1, 0.9, 1.0, 0.8],
            [0.1, 0.0, 0.7, 0.8, 1.0]
        ];
        let s = SimilarityMatrix::new(values.clone(), MatrixKind::Refined).unwrap();
        let perm = [3usize, 0, 4, 1, 2];
        let permuted = Array2::from_shape_fn((5, 5), |(i, j)| values[[perm[i], perm[j]]]);
        let sp = SimilarityMatrix::new(permuted, MatrixKind::Refined).unwrap();

        for (orig, shuffled) in [
            (
                hierarchical_consensus(&s, 2).unwrap(),
                hierarchical_consensus(&sp, 2).unwrap(),
            ),
            (
                spectral_consensus(&s, 2, 5).unwrap(),
                spectral_consensus(&sp, 2, 5).unwrap(),
            ),
        ] {
            let pushed: Vec<u32> = perm.iter().map(|&p| orig.labels()[p]).collect();
            assert_same_partition(&pushed, shuffled.labels());
        }
    }

    #[test]
    fn partition_counts_distinct_labels() {
        let p = Partition::new(vec![4, 4, 7, 9, 7]).unwrap();
        assert_eq!(p.k(), 3);
        assert_eq!(p.len(), 5);
        assert!(Partition::new(vec![]).is_err());
    }
}
