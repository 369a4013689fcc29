//! External evaluation of a predicted partition against ground truth.
//!
//! All seven scores are derived from one contingency table:
//!
//! | metric | definition |
//! |---|---|
//! | [`accuracy`] | best label bijection via optimal assignment, matched fraction |
//! | [`nmi`] | mutual information over the geometric mean of entropies |
//! | [`purity`] | dominant-class fraction per predicted cluster |
//! | [`ari`] | Rand index adjusted for chance agreement |
//! | [`precision_recall_f1`] | pairwise same-cluster decisions |
//!
//! Degenerate inputs stay finite: zero-entropy partitions give NMI 0 (or 1
//! when both sides are the same single cluster), a zero ARI denominator means
//! the partitions agree exactly and scores 1, and empty pairwise fractions
//! score 0.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Joint label-count table between a predicted and a true partition.
#[derive(Debug, Clone)]
pub struct ContingencyTable {
    counts: Array2<u64>,
    pred_sizes: Vec<u64>,
    truth_sizes: Vec<u64>,
    n: u64,
}

fn index_of_first_appearance(labels: &[u32]) -> (Vec<usize>, usize) {
    let mut map = std::collections::HashMap::new();
    let mut indexed = Vec::with_capacity(labels.len());
    for &label in labels {
        let next = map.len();
        indexed.push(*map.entry(label).or_insert(next));
    }
    (indexed, map.len())
}

impl ContingencyTable {
    /// Tabulates two label vectors of equal length.
    pub fn new(pred: &[u32], truth: &[u32]) -> Result<Self> {
        if pred.is_empty() {
            return Err(Error::EmptyInput("partition labels"));
        }
        if pred.len() != truth.len() {
            return Err(Error::DimensionMismatch {
                context: "partition lengths",
                expected: truth.len(),
                actual: pred.len(),
            });
        }
        let (pred_idx, k_pred) = index_of_first_appearance(pred);
        let (truth_idx, k_truth) = index_of_first_appearance(truth);
        let mut counts = Array2::zeros((k_pred, k_truth));
        for (&i, &j) in pred_idx.iter().zip(truth_idx.iter()) {
            counts[[i, j]] += 1u64;
        }
        let pred_sizes = counts.rows().into_iter().map(|r| r.sum()).collect();
        let truth_sizes = counts.columns().into_iter().map(|c| c.sum()).collect();
        Ok(Self {
            counts,
            pred_sizes,
            truth_sizes,
            n: pred.len() as u64,
        })
    }

    /// Joint counts, predicted clusters as rows.
    pub fn counts(&self) -> &Array2<u64> {
        &self.counts
    }

    /// Row sums (predicted cluster sizes).
    pub fn pred_sizes(&self) -> &[u64] {
        &self.pred_sizes
    }

    /// Column sums (true cluster sizes).
    pub fn truth_sizes(&self) -> &[u64] {
        &self.truth_sizes
    }

    /// Total sample count.
    pub fn total(&self) -> u64 {
        self.n
    }
}

/// Exact minimum-cost assignment on a square cost matrix via shortest
/// augmenting paths with potentials. Returns the column matched to each row.
fn min_cost_assignment(cost: &Array2<i64>) -> Vec<usize> {
    let n = cost.nrows();
    let virt = n;
    let mut row_potential = vec![0i64; n];
    let mut col_potential = vec![0i64; n + 1];
    let mut matched_row = vec![usize::MAX; n + 1];

    for row in 0..n {
        matched_row[virt] = row;
        let mut col = virt;
        let mut min_to = vec![i64::MAX; n + 1];
        let mut previous = vec![virt; n + 1];
        let mut used = vec![false; n + 1];
        while matched_row[col] != usize::MAX {
            used[col] = true;
            let i = matched_row[col];
            let mut delta = i64::MAX;
            let mut next_col = virt;
            for j in 0..n {
                if used[j] {
                    continue;
                }
                let reduced = cost[[i, j]] - row_potential[i] - col_potential[j];
                if reduced < min_to[j] {
                    min_to[j] = reduced;
                    previous[j] = col;
                }
                if min_to[j] < delta {
                    delta = min_to[j];
                    next_col = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    row_potential[matched_row[j]] += delta;
                    col_potential[j] -= delta;
                } else if min_to[j] != i64::MAX {
                    min_to[j] -= delta;
                }
            }
            col = next_col;
        }
        while col != virt {
            let prev = previous[col];
            matched_row[col] = matched_row[prev];
            col = prev;
        }
    }

    let mut assignment = vec![usize::MAX; n];
    for j in 0..n {
        if matched_row[j] != usize::MAX {
            assignment[matched_row[j]] = j;
        }
    }
    assignment
}

/// Fraction of samples matched under the best one-to-one relabeling of
/// predicted clusters onto true clusters.
pub fn accuracy(pred: &[u32], truth: &[u32]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    Ok(accuracy_from(&table))
}

fn accuracy_from(table: &ContingencyTable) -> f64 {
    let (kp, kt) = table.counts.dim();
    let side = kp.max(kt);
    let cost = Array2::from_shape_fn((side, side), |(i, j)| {
        if i < kp && j < kt {
            -(table.counts[[i, j]] as i64)
        } else {
            0
        }
    });
    let assignment = min_cost_assignment(&cost);
    let matched: u64 = assignment
        .iter()
        .enumerate()
        .filter(|&(i, &j)| i < kp && j < kt)
        .map(|(i, &j)| table.counts[[i, j]])
        .sum();
    matched as f64 / table.n as f64
}

/// Normalized mutual information with geometric-mean normalization.
pub fn nmi(pred: &[u32], truth: &[u32]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    Ok(nmi_from(&table))
}

fn entropy(sizes: &[u64], n: u64) -> f64 {
    sizes
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n as f64;
            -p * p.ln()
        })
        .sum()
}

fn nmi_from(table: &ContingencyTable) -> f64 {
    let n = table.n as f64;
    let h_pred = entropy(&table.pred_sizes, table.n);
    let h_truth = entropy(&table.truth_sizes, table.n);
    if h_pred == 0.0 && h_truth == 0.0 {
        return 1.0;
    }
    if h_pred == 0.0 || h_truth == 0.0 {
        return 0.0;
    }
    let mut information = 0.0;
    for ((i, j), &count) in table.counts.indexed_iter() {
        if count == 0 {
            continue;
        }
        let joint = count as f64 / n;
        let marginal = (table.pred_sizes[i] as f64 / n) * (table.truth_sizes[j] as f64 / n);
        information += joint * (joint / marginal).ln();
    }
    (information / (h_pred * h_truth).sqrt()).clamp(0.0, 1.0)
}

/// Mean dominant-class fraction across predicted clusters.
pub fn purity(pred: &[u32], truth: &[u32]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    Ok(purity_from(&table))
}

fn purity_from(table: &ContingencyTable) -> f64 {
    let dominant: u64 = table
        .counts
        .rows()
        .into_iter()
        .map(|row| row.iter().copied().max().unwrap_or(0))
        .sum();
    dominant as f64 / table.n as f64
}

/// Confusion counts over all unordered sample pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    /// Pairs co-clustered in both partitions.
    pub true_positive: u128,
    /// Pairs co-clustered only in the prediction.
    pub false_positive: u128,
    /// Pairs co-clustered only in the truth.
    pub false_negative: u128,
    /// Pairs separated in both.
    pub true_negative: u128,
}

fn choose2(x: u64) -> u128 {
    let x = x as u128;
    x * x.saturating_sub(1) / 2
}

/// Tallies every unordered pair into the four agreement classes.
pub fn pair_counts(pred: &[u32], truth: &[u32]) -> Result<PairCounts> {
    let table = ContingencyTable::new(pred, truth)?;
    Ok(pair_counts_from(&table))
}

fn pair_counts_from(table: &ContingencyTable) -> PairCounts {
    let tp: u128 = table.counts.iter().map(|&c| choose2(c)).sum();
    let same_pred: u128 = table.pred_sizes.iter().map(|&c| choose2(c)).sum();
    let same_truth: u128 = table.truth_sizes.iter().map(|&c| choose2(c)).sum();
    let total = choose2(table.n);
    let fp = same_pred - tp;
    let fn_ = same_truth - tp;
    PairCounts {
        true_positive: tp,
        false_positive: fp,
        false_negative: fn_,
        true_negative: total - tp - fp - fn_,
    }
}

/// Rand index adjusted for chance. A zero denominator only occurs when both
/// partitions are all-singletons or both are a single cluster; that is exact
/// agreement and scores 1.
pub fn ari(pred: &[u32], truth: &[u32]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    Ok(ari_from(&table))
}

fn ari_from(table: &ContingencyTable) -> f64 {
    let tp: u128 = table.counts.iter().map(|&c| choose2(c)).sum();
    let same_pred: u128 = table.pred_sizes.iter().map(|&c| choose2(c)).sum();
    let same_truth: u128 = table.truth_sizes.iter().map(|&c| choose2(c)).sum();
    let total = choose2(table.n);
    if total == 0 {
        return 1.0;
    }
    let expected = same_pred as f64 * same_truth as f64 / total as f64;
    let maximum = 0.5 * (same_pred + same_truth) as f64;
    let denominator = maximum - expected;
    if denominator == 0.0 {
        return 1.0;
    }
    (tp as f64 - expected) / denominator
}

/// Pairwise precision, recall, and their harmonic mean; `0/0` fractions
/// score 0.
pub fn precision_recall_f1(pred: &[u32], truth: &[u32]) -> Result<(f64, f64, f64)> {
    let table = ContingencyTable::new(pred, truth)?;
    Ok(precision_recall_f1_from(&table))
}

fn precision_recall_f1_from(table: &ContingencyTable) -> (f64, f64, f64) {
    let pairs = pair_counts_from(table);
    let ratio = |num: u128, den: u128| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(
        pairs.true_positive,
        pairs.true_positive + pairs.false_positive,
    );
    let recall = ratio(
        pairs.true_positive,
        pairs.true_positive + pairs.false_negative,
    );
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (precision, recall, f1)
}

/// The seven scores of one evaluation, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Optimal-assignment clustering accuracy.
    pub acc: f64,
    /// Normalized mutual information.
    pub nmi: f64,
    /// Purity.
    pub purity: f64,
    /// Adjusted Rand index.
    pub ari: f64,
    /// Pairwise F1.
    pub f1: f64,
    /// Pairwise precision.
    pub precision: f64,
    /// Pairwise recall.
    pub recall: f64,
}

impl MetricReport {
    /// The scores as `(name, value)` pairs, in report order.
    pub fn named(&self) -> [(&'static str, f64); 7] {
        [
            ("acc", self.acc),
            ("nmi", self.nmi),
            ("purity", self.purity),
            ("ari", self.ari),
            ("f1", self.f1),
            ("precision", self.precision),
            ("recall", self.recall),
        ]
    }
}

/// Computes all seven metrics from one contingency table.
pub fn score(pred: &[u32], truth: &[u32]) -> Result<MetricReport> {
    let table = ContingencyTable::new(pred, truth)?;
    let (precision, recall, f1) = precision_recall_f1_from(&table);
    Ok(MetricReport {
        acc: accuracy_from(&table),
        nmi: nmi_from(&table),
        purity: purity_from(&table),
        ari: ari_from(&table),
        f1,
        precision,
        recall,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn relabeled_partitions_have_full_accuracy() {
        assert_eq!(accuracy(&[1, 1, 2, 2], &[5, 5, 9, 9]).unwrap(), 1.0);
        assert_eq!(accuracy(&[3, 1, 4, 1, 5], &[3, 1, 4, 1, 5]).unwrap(), 1.0);
    }

    #[test]
    fn accuracy_of_a_half_matching_split() {
        assert_eq!(accuracy(&[1, 2, 1, 2], &[1, 1, 2, 2]).unwrap(), 0.5);
    }

    #[test]
    fn accuracy_handles_unequal_cluster_counts() {
        // Truth has three clusters, prediction merges two of them: the best
        // bijection matches 4 of 5 samples.
        assert_eq!(accuracy(&[0, 0, 0, 1, 1], &[0, 0, 2, 1, 1]).unwrap(), 0.8);
    }

    #[test]
    fn nmi_conventions_and_hand_value() {
        assert_eq!(nmi(&[1, 1, 2, 2], &[7, 7, 8, 8]).unwrap(), 1.0);
        assert_eq!(nmi(&[1, 1, 1, 1], &[1, 1, 2, 2]).unwrap(), 0.0);
        assert_eq!(nmi(&[1, 1], &[4, 4]).unwrap(), 1.0);

        // Contingency [[1,1],[0,2]]:
        // I = (1/4)ln2 + (1/4)ln(2/3) + (1/2)ln(4/3),
        // H_pred = H(1/2) = ln 2, H_truth = H(1/4).
        let information =
            0.25 * f64::ln(2.0) + 0.25 * f64::ln(2.0 / 3.0) + 0.5 * f64::ln(4.0 / 3.0);
        let h_pred = f64::ln(2.0);
        let h_truth = -(0.25 * f64::ln(0.25) + 0.75 * f64::ln(0.75));
        let expected = information / (h_pred * h_truth).sqrt();
        assert_abs_diff_eq!(
            nmi(&[1, 1, 2, 2], &[1, 2, 2, 2]).unwrap(),
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn purity_hand_values() {
        assert_eq!(purity(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(purity(&[1, 1, 1, 1], &[1, 1, 2, 2]).unwrap(), 0.5);
        // Contingency [[2,1],[0,3]] from explicit labels.
        let pred = [1, 1, 1, 2, 2, 2];
        let truth = [1, 1, 2, 2, 2, 2];
        assert_abs_diff_eq!(purity(&pred, &truth).unwrap(), 5.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn pair_counts_enumerated_case() {
        let counts = pair_counts(&[1, 1, 2, 2], &[1, 2, 1, 2]).unwrap();
        assert_eq!(
            counts,
            PairCounts {
                true_positive: 0,
                false_positive: 2,
                false_negative: 2,
                true_negative: 2,
            }
        );
    }

    #[test]
    fn pair_counts_degenerate_cases() {
        let identical = pair_counts(&[0, 0, 1, 2], &[5, 5, 6, 7]).unwrap();
        assert_eq!(identical.false_positive, 0);
        assert_eq!(identical.false_negative, 0);

        let singletons = pair_counts(&[0, 1, 2, 3], &[1, 1, 2, 2]).unwrap();
        assert_eq!(singletons.true_positive, 0);
        assert_eq!(singletons.false_positive, 0);
        assert_eq!(singletons.false_negative, 2);
    }

    #[test]
    fn ari_hand_values() {
        assert_eq!(ari(&[2, 2, 3, 3], &[8, 8, 9, 9]).unwrap(), 1.0);
        // Crossed split: TP=0, row/col pair sums 2 and 2, total 6:
        // (0 - 4/6) / (2 - 4/6) = -1/2.
        assert_abs_diff_eq!(
            ari(&[1, 1, 2, 2], &[1, 2, 1, 2]).unwrap(),
            -0.5,
            epsilon = 1e-15
        );
        assert_eq!(ari(&[1, 1, 1], &[2, 2, 2]).unwrap(), 1.0);
        assert_eq!(ari(&[1, 2, 3], &[4, 5, 6]).unwrap(), 1.0);
    }

    #[test]
    fn pairwise_scores_hand_values() {
        let (p, r, f) = precision_recall_f1(&[1, 1, 2, 2, 2], &[4, 4, 5, 5, 5]).unwrap();
        assert_eq!((p, r, f), (1.0, 1.0, 1.0));

        let (p, r, f) = precision_recall_f1(&[1, 2, 3, 4], &[1, 1, 2, 2]).unwrap();
        assert_eq!((p, r, f), (0.0, 0.0, 0.0));

        let (p, r, f) = precision_recall_f1(&[1, 1, 2, 2], &[1, 2, 1, 2]).unwrap();
        assert_eq!((p, r, f), (0.0, 0.0, 0.0));
    }

    #[test]
    fn score_bundles_all_seven() {
        let report = score(&[1, 1, 2, 2], &[1, 1, 2, 2]).unwrap();
        for (name, value) in report.named() {
            assert_eq!(value, 1.0, "{name}");
        }
        let json = serde_json::to_value(report).unwrap();
        for key in ["acc", "nmi", "purity", "ari", "f1", "precision", "recall"] {
            assert_eq!(json[key], 1.0, "{key}");
        }
    }

    #[test]
    fn length_mismatch_and_empty_are_rejected() {
        assert!(score(&[1, 2], &[1]).is_err());
        assert!(score(&[], &[]).is_err());
    }

    #[test]
    fn relabeling_either_side_changes_nothing() {
        let pred = [0u32, 1, 1, 2, 0, 2, 1];
        let truth = [5u32, 5, 6, 6, 7, 7, 5];
        let remap = |l: u32| 40 - l * 3;
        let pred2: Vec<u32> = pred.iter().map(|&l| remap(l)).collect();
        let truth2: Vec<u32> = truth.iter().map(|&l| remap(l)).collect();
        let a = score(&pred, &truth).unwrap();
        let b = score(&pred2, &truth2).unwrap();
        for ((name, x), (_, y)) in a.named().iter().zip(b.named().iter()) {
            assert_eq!(x, y, "{name}");
        }
    }
}
