//! Ground-truth comparison metrics.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::maxent::PreferenceWeights;

/// Indicator-vector mean squared error over every state:
/// `|C_true △ C_hat| / |S|`.
pub fn cmse(truth: &ConstraintSet, inferred: &ConstraintSet) -> f64 {
    truth.symmetric_difference_len(inferred) as f64 / truth.num_states() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
}

impl Confusion {
    /// 1 when nothing was inferred.
    pub fn precision(&self) -> f64 {
        let predicted = self.true_positives + self.false_positives;
        if predicted == 0 { 1.0 } else { self.true_positives as f64 / predicted as f64 }
    }

    /// 1 when there is nothing to find.
    pub fn recall(&self) -> f64 {
        let actual = self.true_positives + self.false_negatives;
        if actual == 0 { 1.0 } else { self.true_positives as f64 / actual as f64 }
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) }
    }

    /// 0 when every non-excluded state is a true constraint.
    pub fn fpr(&self) -> f64 {
        let negatives = self.false_positives + self.true_negatives;
        if negatives == 0 { 0.0 } else { self.false_positives as f64 / negatives as f64 }
    }
}

/// Confusion counts over all states except `excluded` (start and goal).
pub fn confusion(truth: &ConstraintSet, inferred: &ConstraintSet, excluded: &[usize]) -> Confusion {
    let mut c = Confusion { true_positives: 0, false_positives: 0, false_negatives: 0, true_negatives: 0 };
    for s in (0..truth.num_states()).filter(|s| !excluded.contains(s)) {
        match (truth.contains(s), inferred.contains(s)) {
            (true, true) => c.true_positives += 1,
            (false, true) => c.false_positives += 1,
            (true, false) => c.false_negatives += 1,
            (false, false) => c.true_negatives += 1,
        }
    }
    c
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightRecovery {
    /// `permutation[k]` is the learned cluster matched to true expert `k`.
    pub permutation: Vec<usize>,
    /// Distance between unit-normalized weights, per true expert.
    pub errors: Vec<f64>,
    /// Per true expert and feature, whether the signs agree.
    pub sign_agreement: Vec<Vec<bool>>,
}

impl WeightRecovery {
    pub fn total_error(&self) -> f64 {
        self.errors.iter().sum()
    }
}

fn unit(w: &PreferenceWeights) -> Vec<f64> {
    let n = w.norm();
    w.0.iter().map(|x| x / n).collect()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Heap's algorithm; emits every permutation of `0..k`.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn heap(n: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..n - 1 {
            heap(n - 1, a, out);
            if n.is_multiple_of(2) { a.swap(i, n - 1) } else { a.swap(0, n - 1) }
        }
        heap(n - 1, a, out);
    }
    let mut out = Vec::new();
    heap(k, &mut (0..k).collect(), &mut out);
    out
}

/// Matches learned clusters to true experts by the permutation that
/// minimizes total distance between unit-normalized weight vectors.
/// Ties resolve to the lexicographically smallest permutation.
pub fn weight_recovery(learned: &[PreferenceWeights], truth: &[PreferenceWeights]) -> Result<WeightRecovery> {
    assert_eq!(learned.len(), truth.len(), "cluster counts differ");
    for (k, w) in learned.iter().enumerate() {
        if w.norm() == 0.0 {
            return Err(Error::DegenerateWeights(k));
        }
    }
    let lu: Vec<_> = learned.iter().map(unit).collect();
    let tu: Vec<_> = truth.iter().map(unit).collect();
    let mut perms = permutations(learned.len());
    perms.sort();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for p in perms {
        let total: f64 = (0..truth.len()).map(|k| distance(&lu[p[k]], &tu[k])).sum();
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            best = Some((total, p));
        }
    }
    let (_, permutation) = best.expect("at least one permutation");
    let errors = (0..truth.len()).map(|k| distance(&lu[permutation[k]], &tu[k])).collect();
    let sign_agreement = (0..truth.len())
        .map(|k| {
            learned[permutation[k]]
                .0
                .iter()
                .zip(&truth[k].0)
                .map(|(a, b)| a.signum() == b.signum())
                .collect()
        })
        .collect();
    Ok(WeightRecovery { permutation, errors, sign_agreement })
}

/// Runs `f` and returns its result with elapsed wall-clock seconds.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

/// One evaluated inference run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub method: String,
    pub clusters: usize,
    pub seed: u64,
    pub cmse: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub fpr: f64,
    pub avg_log_likelihood: f64,
    pub weight_error: Vec<f64>,
    pub runtime_s: f64,
    pub num_constraints: usize,
    pub config_digest: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cmse_counts_symmetric_difference() {
        let truth = ConstraintSet::from_states(25, [3, 7, 11]);
        assert_eq!(cmse(&truth, &truth), 0.0);
        assert!((cmse(&truth, &ConstraintSet::empty(25)) - 0.12).abs() < 1e-15);
    }

    #[test]
    fn perfect_and_saturated_confusion() {
        let truth = ConstraintSet::from_states(9, [4]);
        let c = confusion(&truth, &truth, &[0, 8]);
        assert_eq!((c.precision(), c.recall(), c.f1(), c.fpr()), (1.0, 1.0, 1.0, 0.0));
        let everything = ConstraintSet::from_states(9, [1, 2, 3, 5, 6, 7]);
        assert_eq!(confusion(&truth, &everything, &[0, 8]).fpr(), 1.0);
    }

    #[test]
    fn empty_prediction_has_unit_precision() {
        let truth = ConstraintSet::from_states(9, [4]);
        let c = confusion(&truth, &ConstraintSet::empty(9), &[0, 8]);
        assert_eq!(c.precision(), 1.0);
        assert_eq!(c.recall(), 0.0);
        assert_eq!(c.f1(), 0.0);
    }

    #[test]
    fn swapped_clusters_are_matched() {
        let a = PreferenceWeights::new([0.0, 2.0, -1.0, -1.0]);
        let b = PreferenceWeights::new([0.0, -1.0, 2.0, -1.0]);
        let same = weight_recovery(&[a, b], &[a, b]).unwrap();
        assert_eq!(same.permutation, vec![0, 1]);
        assert!(same.total_error() < 1e-12);
        let swapped = weight_recovery(&[b, a], &[a, b]).unwrap();
        assert_eq!(swapped.permutation, vec![1, 0]);
        assert!(swapped.total_error() < 1e-12);
        assert!(swapped.sign_agreement.iter().flatten().all(|&x| x));
    }

    #[test]
    fn zero_weights_are_rejected() {
        let a = PreferenceWeights::new([0.0, 2.0, -1.0, -1.0]);
        assert!(matches!(weight_recovery(&[PreferenceWeights::zero()], &[a]), Err(Error::DegenerateWeights(0))));
    }

    #[test]
    fn heap_permutations_are_complete() {
        let mut p = permutations(4);
        assert_eq!(p.len(), 24);
        p.sort();
        p.dedup();
        assert_eq!(p.len(), 24);
    }

    #[test]
    fn timing_is_non_negative() {
        let ((), secs) = timed(|| ());
        assert!(secs >= 0.0);
    }
}
