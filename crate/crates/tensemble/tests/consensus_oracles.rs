//! Consensus extraction checked against brute force: spectral clustering
//! against an exhaustive two-way split, the linkage builder against a
//! quadratic recompute-everything agglomeration.

mod common;

use ndarray::Array2;
use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};

use tensemble::consensus::{linkage, spectral_consensus, Linkage};
use tensemble::ensemble::{
    co_association, coherent_link, LabelMatrix, MatrixKind, SimilarityMatrix,
};
use tensemble::solver::{solve, LtaConfig};

/// Two noisy blocks with cross-block similarity kept below a quarter of the
/// within-block floor: beyond that, maximizing summed within-cluster
/// similarity starts to favour peeling off single samples, and the
/// exhaustive objective no longer agrees with the spectral cut.
fn planted_two_blocks(rng: &mut SmallRng, split: usize, n: usize) -> SimilarityMatrix {
    let mut s = Array2::zeros((n, n));
    for i in 0..n {
        s[[i, i]] = 1.0;
        for j in (i + 1)..n {
            let same = (i < split) == (j < split);
            let v = if same {
                rng.random_range(0.7..1.0)
            } else {
                rng.random_range(0.0..0.05)
            };
            s[[i, j]] = v;
            s[[j, i]] = v;
        }
    }
    SimilarityMatrix::new(s, MatrixKind::Refined).unwrap()
}

#[test]
fn spectral_split_matches_the_exhaustive_optimum() {
    let mut rng = SmallRng::seed_from_u64(41);
    for trial in 0..10 {
        let n = rng.random_range(6..=12);
        let split = rng.random_range(2..=(n - 2));
        let s = planted_two_blocks(&mut rng, split, n);
        let partition = spectral_consensus(&s, 2, 1000 + trial).unwrap();
        let oracle = common::best_two_partition(s.values());
        assert!(
            common::same_partition(partition.labels(), &oracle),
            "trial {trial}: spectral {:?} vs exhaustive {oracle:?}",
            partition.labels(),
        );
    }
}

#[test]
fn refined_ensemble_recovers_the_planted_split_found_by_brute_force() {
    // Five base clusterings over eight samples; four see the planted split
    // {0..3} | {4..7}, one dissents on two samples.
    let columns: Vec<Vec<u32>> = vec![
        vec![0, 0, 0, 0, 1, 1, 1, 1],
        vec![0, 0, 0, 0, 1, 1, 1, 1],
        vec![0, 0, 0, 1, 1, 1, 1, 0],
        vec![1, 1, 1, 1, 0, 0, 0, 0],
        vec![0, 0, 1, 0, 1, 1, 0, 1],
    ];
    let pool = LabelMatrix::from_columns(&columns).unwrap();
    let coassoc = co_association(&pool).unwrap();
    let links = coherent_link(&coassoc).unwrap();
    let cfg = LtaConfig {
        lambda: 2.0,
        ..LtaConfig::default()
    };
    let solved = solve(&coassoc, &links, cfg).unwrap();
    assert!(solved.converged);

    let partition = spectral_consensus(&solved.refined, 2, 7).unwrap();
    let oracle = common::best_two_partition(solved.refined.values());
    assert!(common::same_partition(partition.labels(), &oracle));
    assert!(common::same_partition(
        partition.labels(),
        &[0, 0, 0, 0, 1, 1, 1, 1]
    ));
}

fn random_similarity(rng: &mut SmallRng, n: usize) -> SimilarityMatrix {
    let mut s = Array2::zeros((n, n));
    for i in 0..n {
        s[[i, i]] = 1.0;
        for j in (i + 1)..n {
            let v = rng.random_range(0.0..1.0);
            s[[i, j]] = v;
            s[[j, i]] = v;
        }
    }
    SimilarityMatrix::new(s, MatrixKind::Refined).unwrap()
}

#[test]
fn linkage_merges_match_the_quadratic_oracle_step_for_step() {
    let mut rng = SmallRng::seed_from_u64(42);
    for trial in 0..20 {
        let n = rng.random_range(4..=10);
        let s = random_similarity(&mut rng, n);
        let dendrogram = linkage(&s, Linkage::Average).unwrap();

        let mut dist = Array2::zeros((n, n));
        for ((i, j), out) in dist.indexed_iter_mut() {
            *out = 1.0 - s.values()[[i, j]];
        }
        for k in (1..=n.min(4)).rev() {
            let (trace, oracle_labels) = common::average_linkage_trace(&dist, k);
            for (step, &(id_a, id_b, d)) in trace.iter().enumerate() {
                let merge = &dendrogram.merges()[step];
                assert_eq!(
                    (merge.first, merge.second),
                    (id_a, id_b),
                    "trial {trial}, k = {k}, step {step}"
                );
                assert!(
                    (merge.distance - d).abs() < 1e-12,
                    "trial {trial}, k = {k}, step {step}: {} vs {d}",
                    merge.distance
                );
            }
            let cut = dendrogram.cut(k).unwrap();
            assert_eq!(
                cut.labels(),
                oracle_labels.as_slice(),
                "trial {trial}, k = {k}"
            );
        }
    }
}
