//! Generation of the base-clustering pool.
//!
//! A pool is built by running k-means on the raw features many times, each
//! run with its own derived seed and a cluster count drawn uniformly from
//! `[k_min, k_max]` (default `[2, floor(sqrt(n))]`). Ensembles then sample
//! `m` distinct columns from the pool per repetition.
//!
//! Every column's randomness derives only from `(seed, column index)`, so a
//! pool is reproducible as a whole or column by column, serially or in
//! parallel.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::consensus::Partition;
use crate::ensemble::LabelMatrix;
use crate::error::{Error, Result};
use crate::kmeans;
use crate::seeds;

/// Tag mixed into pool-column seed derivation.
const POOL_STREAM: u64 = 0x706f_6f6c;
/// Tag mixed into column-sampling seed derivation.
const SAMPLE_STREAM: u64 = 0x7361_6d70;

/// Feature matrix: one row per sample.
#[derive(Debug, Clone)]
pub struct DataMatrix {
    features: Array2<f64>,
}

impl DataMatrix {
    /// Validates shape (at least two samples, one feature) and finiteness.
    pub fn new(features: Array2<f64>) -> Result<Self> {
        if features.nrows() < 2 {
            return Err(Error::InvalidParameter {
                name: "features",
                reason: format!("need at least 2 samples, got {}", features.nrows()),
            });
        }
        if features.ncols() == 0 {
            return Err(Error::EmptyInput("feature columns"));
        }
        if !features.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("feature matrix"));
        }
        Ok(Self { features })
    }

    /// Number of samples.
    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    /// Number of features.
    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    /// The raw feature matrix.
    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    /// Column-wise z-scored copy; constant columns are centered only.
    pub fn zscored(&self) -> Self {
        let mut features = self.features.clone();
        for mut col in features.columns_mut() {
            let n = col.len() as f64;
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let std = var.sqrt();
            for v in col.iter_mut() {
                *v -= mean;
                if std > 0.0 {
                    *v /= std;
                }
            }
        }
        Self { features }
    }
}

/// Pool-generation settings.
#[derive(Debug, Clone)]
pub struct PoolConfig {
    /// Number of base clusterings to generate.
    pub pool_size: usize,
    /// Smallest cluster count drawn.
    pub k_min: usize,
    /// Largest cluster count drawn; `None` means `max(2, floor(sqrt(n)))`.
    pub k_max: Option<usize>,
    /// Lloyd-iteration cap per k-means run.
    pub kmeans_iters: usize,
    /// Base seed; everything else derives from it.
    pub seed: u64,
}

impl Default for PoolConfig {
    fn default() -> Self {
        Self {
            pool_size: 100,
            k_min: 2,
            k_max: None,
            kmeans_iters: 300,
            seed: 0,
        }
    }
}

fn integer_sqrt(n: usize) -> usize {
    let mut root = (n as f64).sqrt() as usize;
    while (root + 1) * (root + 1) <= n {
        root += 1;
    }
    while root * root > n {
        root -= 1;
    }
    root
}

impl PoolConfig {
    /// The effective cluster-count range for `n` samples.
    pub fn k_range(&self, n: usize) -> Result<(usize, usize)> {
        let k_max = self.k_max.unwrap_or_else(|| integer_sqrt(n).max(2));
        if self.k_min < 2 || self.k_min > k_max || k_max > n {
            return Err(Error::InvalidParameter {
                name: "k_min/k_max",
                reason: format!(
                    "need 2 <= k_min <= k_max <= {n}, got [{}, {k_max}]",
                    self.k_min
                ),
            });
        }
        Ok((self.k_min, k_max))
    }

    fn validate(&self, n: usize) -> Result<(usize, usize)> {
        if self.pool_size == 0 {
            return Err(Error::InvalidParameter {
                name: "pool_size",
                reason: "must be at least 1".into(),
            });
        }
        if self.kmeans_iters == 0 {
            return Err(Error::InvalidParameter {
                name: "kmeans_iters",
                reason: "must be at least 1".into(),
            });
        }
        self.k_range(n)
    }
}

/// A generated pool plus the per-column provenance needed to reproduce it.
#[derive(Debug, Clone)]
pub struct GeneratedPool {
    /// The base clusterings, one column per pool member.
    pub labels: LabelMatrix,
    /// Cluster count drawn for each column.
    pub ks: Vec<usize>,
    /// Derived seed of each column.
    pub seeds: Vec<u64>,
}

/// One k-means base clustering from a bare seed.
pub fn kmeans_partition(x: &DataMatrix, k: usize, seed: u64) -> Result<Partition> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fit = kmeans::fit(x.features().view(), k, 300, &mut rng)?;
    Partition::new(fit.labels)
}

/// Builds the candidate pool described in the module docs.
pub fn generate_pool(x: &DataMatrix, cfg: &PoolConfig) -> Result<GeneratedPool> {
    let (k_min, k_max) = cfg.validate(x.n())?;
    let mut columns = Vec::with_capacity(cfg.pool_size);
    let mut ks = Vec::with_capacity(cfg.pool_size);
    let mut column_seeds = Vec::with_capacity(cfg.pool_size);
    for column in 0..cfg.pool_size {
        let seed = seeds::derive(cfg.seed, &[POOL_STREAM, column as u64]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.random_range(k_min..=k_max);
        let fit = kmeans::fit(x.features().view(), k, cfg.kmeans_iters, &mut rng)?;
        columns.push(fit.labels);
        ks.push(k);
        column_seeds.push(seed);
    }
    Ok(GeneratedPool {
        labels: LabelMatrix::from_columns(&columns)?,
        ks,
        seeds: column_seeds,
    })
}

/// Chooses `m` distinct column indices uniformly without replacement, in
/// draw order.
pub fn sample_indices(pool_columns: usize, m: usize, seed: u64) -> Result<Vec<usize>> {
    if m == 0 {
        return Err(Error::InvalidParameter {
            name: "m",
            reason: "must be at least 1".into(),
        });
    }
    if m > pool_columns {
        return Err(Error::InvalidParameter {
            name: "m",
            reason: format!("cannot sample {m} of {pool_columns} pool columns"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, &[SAMPLE_STREAM]));
    let mut indices: Vec<usize> = (0..pool_columns).collect();
    for i in 0..m {
        let j = rng.random_range(i..pool_columns);
        indices.swap(i, j);
    }
    indices.truncate(m);
    Ok(indices)
}

/// Samples `m` distinct pool columns into a new label matrix.
pub fn sample_pool(pool: &LabelMatrix, m: usize, seed: u64) -> Result<LabelMatrix> {
    let indices = sample_indices(pool.n_clusterings(), m, seed)?;
    pool.select_columns(&indices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics;
    use ndarray::{array, Array2};

    fn blob_data() -> DataMatrix {
        let mut rows = Vec::new();
        for c in 0..3 {
            let center = 10.0 * c as f64;
            for i in 0..8 {
                rows.push([center + 0.01 * i as f64, center - 0.02 * i as f64]);
            }
        }
        DataMatrix::new(Array2::from(rows)).unwrap()
    }

    fn truth_labels() -> Vec<u32> {
        (0..24).map(|i| i / 8).collect()
    }

    #[test]
    fn well_separated_blobs_are_recovered() {
        let x = blob_data();
        let p = kmeans_partition(&x, 3, 11).unwrap();
        let acc = metrics::accuracy(p.labels(), &truth_labels()).unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn pool_has_requested_shape_and_k_range() {
        let x = blob_data();
        let cfg = PoolConfig {
            pool_size: 12,
            seed: 3,
            ..PoolConfig::default()
        };
        let pool = generate_pool(&x, &cfg).unwrap();
        assert_eq!(pool.labels.n_samples(), 24);
        assert_eq!(pool.labels.n_clusterings(), 12);
        // floor(sqrt(24)) = 4.
        assert!(pool.ks.iter().all(|&k| (2..=4).contains(&k)));
        let distinct_seeds: std::collections::BTreeSet<_> = pool.seeds.iter().collect();
        assert_eq!(distinct_seeds.len(), 12);
    }

    #[test]
    fn same_seed_same_pool() {
        let x = blob_data();
        let cfg = PoolConfig {
            pool_size: 6,
            seed: 99,
            ..PoolConfig::default()
        };
        let a = generate_pool(&x, &cfg).unwrap();
        let b = generate_pool(&x, &cfg).unwrap();
        assert_eq!(a.labels.as_array(), b.labels.as_array());
        assert_eq!(a.ks, b.ks);
    }

    #[test]
    fn single_column_pool() {
        let x = blob_data();
        let cfg = PoolConfig {
            pool_size: 1,
            seed: 5,
            ..PoolConfig::default()
        };
        let pool = generate_pool(&x, &cfg).unwrap();
        assert_eq!(pool.labels.n_clusterings(), 1);
    }

    #[test]
    fn sampling_is_without_replacement_and_seeded() {
        let x = blob_data();
        let cfg = PoolConfig {
            pool_size: 10,
            seed: 1,
            ..PoolConfig::default()
        };
        let pool = generate_pool(&x, &cfg).unwrap();

        let full = sample_indices(10, 10, 4).unwrap();
        let mut sorted = full.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..10).collect::<Vec<_>>());

        let one = sample_pool(&pool.labels, 1, 4).unwrap();
        assert_eq!(one.n_clusterings(), 1);

        assert_eq!(
            sample_indices(10, 4, 7).unwrap(),
            sample_indices(10, 4, 7).unwrap()
        );
        assert!(sample_indices(10, 11, 0).is_err());
        assert!(sample_indices(10, 0, 0).is_err());
    }

    #[test]
    fn config_bounds_are_enforced() {
        let x = blob_data();
        for cfg in [
            PoolConfig {
                pool_size: 0,
                ..PoolConfig::default()
            },
            PoolConfig {
                k_min: 1,
                ..PoolConfig::default()
            },
            PoolConfig {
                k_min: 5,
                k_max: Some(4),
                ..PoolConfig::default()
            },
            PoolConfig {
                k_max: Some(25),
                ..PoolConfig::default()
            },
            PoolConfig {
                kmeans_iters: 0,
                ..PoolConfig::default()
            },
        ] {
            assert!(generate_pool(&x, &cfg).is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn data_matrix_validation_and_zscore() {
        assert!(DataMatrix::new(array![[1.0, 2.0]]).is_err());
        assert!(DataMatrix::new(array![[1.0], [f64::NAN]]).is_err());

        let x = DataMatrix::new(array![[1.0, 5.0], [3.0, 5.0], [5.0, 5.0]]).unwrap();
        let z = x.zscored();
        let col0: Vec<f64> = z.features().column(0).to_vec();
        assert!((col0[0] + col0[2]).abs() < 1e-12);
        assert!(col0[1].abs() < 1e-12);
        // Constant column: centered to zero, not divided.
        assert!(z.features().column(1).iter().all(|v| v.abs() < 1e-12));
    }
}
