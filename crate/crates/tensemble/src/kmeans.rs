//! Lloyd's algorithm with k-means++ seeding.
//!
//! This is the shared clustering substrate: base-clustering generation runs
//! it on raw features, spectral consensus on Laplacian embeddings. Both need
//! bit-for-bit reproducibility, so every data-dependent choice is made in
//! index order and all randomness comes from the caller's generator.
//!
//! | guarantee | mechanism |
//! |---|---|
//! | determinism | caller-supplied RNG; fixed iteration order; ties to the lowest index |
//! | no empty clusters where avoidable | farthest-point reseeding after each update |
//! | bounded runtime | assignment-fixpoint exit under an iteration cap |

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;

use crate::error::{Error, Result};

/// Outcome of one k-means run.
#[derive(Debug, Clone)]
pub struct KMeansFit {
    /// Cluster index per sample, in `0..k`.
    pub labels: Vec<u32>,
    /// Final cluster centers, one row per cluster.
    pub centers: Array2<f64>,
    /// Sum of squared distances from each sample to its center.
    pub inertia: f64,
    /// Assignment passes performed.
    pub iterations: usize,
    /// Whether the assignments reached a fixpoint before the cap.
    pub converged: bool,
}

fn squared_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn validate(data: &ArrayView2<'_, f64>, k: usize) -> Result<()> {
    let n = data.nrows();
    if n == 0 || data.ncols() == 0 {
        return Err(Error::EmptyInput("k-means data"));
    }
    if k < 1 || k > n {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: format!("must be in 1..={n}, got {k}"),
        });
    }
    Ok(())
}

/// k-means++ seeding: the first center is uniform, each further center is
/// drawn with probability proportional to the squared distance from the
/// centers chosen so far.
fn seed_centers<R: Rng + ?Sized>(data: &ArrayView2<'_, f64>, k: usize, rng: &mut R) -> Array2<f64> {
    let n = data.nrows();
    let d = data.ncols();
    let mut centers = Array2::zeros((k, d));
    let first = rng.random_range(0..n);
    centers.row_mut(0).assign(&data.row(first));

    let mut dist2: Vec<f64> = (0..n)
        .map(|i| squared_distance(data.row(i), data.row(first)))
        .collect();
    for c in 1..k {
        let total: f64 = dist2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in dist2.iter().enumerate() {
                u -= w;
                if u <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // Every sample coincides with an existing center; any choice is
            // as good as any other.
            rng.random_range(0..n)
        };
        centers.row_mut(c).assign(&data.row(pick));
        for (i, slot) in dist2.iter_mut().enumerate() {
            *slot = slot.min(squared_distance(data.row(i), data.row(pick)));
        }
    }
    centers
}

/// Runs Lloyd's algorithm once from a k-means++ seeding.
///
/// Empty clusters are repaired after each center update by reseeding them at
/// the sample currently farthest from its own center (skipping clusters that
/// would become empty themselves); with fully degenerate data a cluster can
/// stay empty, which shows up as fewer distinct labels.
pub fn fit<R: Rng + ?Sized>(
    data: ArrayView2<'_, f64>,
    k: usize,
    max_iter: usize,
    rng: &mut R,
) -> Result<KMeansFit> {
    validate(&data, k)?;
    let n = data.nrows();
    let d = data.ncols();
    let mut centers = seed_centers(&data, k, rng);
    let mut labels = vec![u32::MAX; n];
    let mut inertia = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    for _ in 0..max_iter.max(1) {
        iterations += 1;
        let mut changed = false;
        inertia = 0.0;
        for (i, label) in labels.iter_mut().enumerate() {
            let mut best = 0u32;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let dist = squared_distance(data.row(i), centers.row(c));
                if dist < best_d {
                    best_d = dist;
                    best = c as u32;
                }
            }
            inertia += best_d;
            if *label != best {
                *label = best;
                changed = true;
            }
        }
        if !changed {
            converged = true;
            break;
        }

        let mut sums = Array2::<f64>::zeros((k, d));
        let mut counts = vec![0usize; k];
        for (i, &label) in labels.iter().enumerate() {
            let c = label as usize;
            counts[c] += 1;
            let mut row = sums.row_mut(c);
            row += &data.row(i);
        }
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                let mut row = centers.row_mut(c);
                row.assign(&(&sums.row(c) / count as f64));
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let mut far = None;
            let mut far_d = 0.0;
            for (i, &label) in labels.iter().enumerate() {
                let owner = label as usize;
                if counts[owner] < 2 {
                    continue;
                }
                let dist = squared_distance(data.row(i), centers.row(owner));
                if dist > far_d {
                    far_d = dist;
                    far = Some(i);
                }
            }
            if let Some(i) = far {
                centers.row_mut(c).assign(&data.row(i));
                counts[labels[i] as usize] -= 1;
                labels[i] = c as u32;
                counts[c] = 1;
            }
        }
    }

    Ok(KMeansFit {
        labels,
        centers,
        inertia,
        iterations,
        converged,
    })
}

/// Runs [`fit`] `restarts` times on the same generator stream and keeps the
/// fit with the lowest inertia (first winner on ties).
pub fn fit_best<R: Rng + ?Sized>(
    data: ArrayView2<'_, f64>,
    k: usize,
    max_iter: usize,
    restarts: usize,
    rng: &mut R,
) -> Result<KMeansFit> {
    if restarts == 0 {
        return Err(Error::InvalidParameter {
            name: "restarts",
            reason: "must be at least 1".into(),
        });
    }
    let mut best: Option<KMeansFit> = None;
    for _ in 0..restarts {
        let fit = fit(data, k, max_iter, rng)?;
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart ran"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn separated_pairs_are_grouped() {
        let data = array![[0.0, 0.0], [0.1, 0.0], [10.0, 10.0], [10.1, 10.0]];
        let fit = fit(data.view(), 2, 300, &mut rng(7)).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.labels[0], fit.labels[1]);
        assert_eq!(fit.labels[2], fit.labels[3]);
        assert_ne!(fit.labels[0], fit.labels[2]);
        assert!(fit.inertia < 0.02);
    }

    #[test]
    fn identical_points_converge() {
        let data = Array2::from_elem((5, 3), 1.5);
        let fit = fit(data.view(), 2, 300, &mut rng(3)).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.inertia, 0.0);
        let distinct: std::collections::BTreeSet<_> = fit.labels.iter().collect();
        assert!(distinct.len() <= 2);
    }

    #[test]
    fn k_equal_n_yields_singletons() {
        let data = array![[0.0], [1.0], [2.0], [5.0]];
        let fit = fit(data.view(), 4, 300, &mut rng(1)).unwrap();
        let distinct: std::collections::BTreeSet<_> = fit.labels.iter().collect();
        assert_eq!(distinct.len(), 4);
        assert_eq!(fit.inertia, 0.0);
    }

    #[test]
    fn restarts_never_worsen_inertia() {
        let data = array![
            [0.0, 0.0],
            [0.2, 0.1],
            [4.0, 4.0],
            [4.1, 3.9],
            [8.0, 0.0],
            [8.2, 0.1]
        ];
        let single = fit(data.view(), 3, 300, &mut rng(11)).unwrap();
        let multi = fit_best(data.view(), 3, 300, 10, &mut rng(11)).unwrap();
        assert!(multi.inertia <= single.inertia + 1e-12);
    }

    #[test]
    fn deterministic_given_rng_seed() {
        let data = array![[0.0, 1.0], [2.0, 3.0], [9.0, 9.0], [8.5, 9.5], [0.5, 1.5]];
        let a = fit_best(data.view(), 2, 300, 5, &mut rng(42)).unwrap();
        let b = fit_best(data.view(), 2, 300, 5, &mut rng(42)).unwrap();
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.inertia, b.inertia);
    }

    #[test]
    fn invalid_k_is_rejected() {
        let data = array![[0.0], [1.0]];
        assert!(fit(data.view(), 0, 300, &mut rng(0)).is_err());
        assert!(fit(data.view(), 3, 300, &mut rng(0)).is_err());
        assert!(fit_best(data.view(), 1, 300, 0, &mut rng(0)).is_err());
    }
}
