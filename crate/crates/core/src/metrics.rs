//! Equal error rate per tag and frame-level localization AUC.

use std::fmt::Write as _;

use log::warn;

use crate::data::{TruthInterval, NUM_TAGS, TAGS};
use crate::numerics::Matrix;

/// Scores and binary truths for every tag over a set of chunks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScoredSet {
    per_tag: Vec<Vec<(f64, bool)>>,
}

impl ScoredSet {
    pub fn new(tags: usize) -> Self {
        Self { per_tag: vec![Vec::new(); tags] }
    }

    /// Appends one chunk's posterior and reference.
    pub fn push(&mut self, scores: &[f64], truth: &[bool]) {
        for (tag, (s, t)) in scores.iter().zip(truth).enumerate() {
            self.per_tag[tag].push((*s, *t));
        }
    }

    pub fn tag(&self, tag: usize) -> &[(f64, bool)] {
        &self.per_tag[tag]
    }

    pub fn tags(&self) -> usize {
        self.per_tag.len()
    }
}

/// Equal error rate of one (score, truth) list, or `None` when only one
/// class is present.
///
/// Thresholds sweep every distinct score from the top down (a chunk is
/// positive when `score >= θ`), starting above the maximum. `FPR - FNR` rises
/// strictly from −1 to +1 along the sweep; the EER is read at the first
/// point where it reaches zero, interpolating linearly from the previous point.
pub fn eer_of(items: &[(f64, bool)]) -> Option<f64> {
    let n_pos = items.iter().filter(|(_, t)| *t).count();
    let n_neg = items.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut sorted: Vec<(f64, bool)> = items.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));

    let (mut fp, mut tp) = (0usize, 0usize);
    let mut prev = (0.0, 1.0); // (FPR, FNR) above every score
    let mut i = 0;
    while i < sorted.len() {
        let s = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == s {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let cur = (fp as f64 / n_neg as f64, 1.0 - tp as f64 / n_pos as f64);
        if let Some(e) = crossing(prev, cur) {
            return Some(e);
        }
        prev = cur;
    }
    // The last point has FPR = 1, FNR = 0, so a crossing always exists.
    unreachable!("EER sweep ended without a crossing")
}

/// EER on the segment from `a` to `b` (each `(FPR, FNR)`) if `FPR - FNR`
/// reaches zero there. Exact zeros at both ends resolve to the lower rate.
pub(crate) fn crossing(a: (f64, f64), b: (f64, f64)) -> Option<f64> {
    let da = a.0 - a.1;
    let db = b.0 - b.1;
    if db < 0.0 {
        return None;
    }
    if db == 0.0 {
        return Some(if da == 0.0 { b.0.min(a.0) } else { b.0 });
    }
    let lambda = -da / (db - da);
    Some(a.0 + lambda * (b.0 - a.0))
}

pub fn eer(scores: &ScoredSet, tag: usize) -> Option<f64> {
    eer_of(scores.tag(tag))
}

pub fn eer_per_tag(scores: &ScoredSet) -> Vec<Option<f64>> {
    (0..scores.tags()).map(|t| eer(scores, t)).collect()
}

/// Unweighted mean over defined tags; `None` if no tag is defined.
pub fn eer_average(per_tag: &[Option<f64>]) -> Option<f64> {
    let defined: Vec<f64> = per_tag.iter().flatten().copied().collect();
    let skipped = per_tag.len() - defined.len();
    if skipped > 0 {
        warn!("{skipped} tag(s) have a single class and are excluded from the EER average");
    }
    if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    }
}

/// ROC AUC of `scores` against binary `labels` (ties count one half), or
/// `None` when either class is missing.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let n_pos = labels.iter().filter(|l| **l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Mid-ranks over tie groups.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_pos += mid * idx[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos * n_neg) as f64)
}

/// Per-event frame-level AUC of a `T × events` localization trace against
/// ground-truth intervals. Events absent from the truth are `None`.
pub fn localization_auc(trace: &Matrix, truth: &[TruthInterval]) -> Vec<Option<f64>> {
    let t_len = trace.rows();
    (0..trace.cols())
        .map(|e| {
            let mut inside = vec![false; t_len];
            let mut present = false;
            for iv in truth.iter().filter(|iv| iv.event == e) {
                present = true;
                for f in iv.start_frame..iv.end_frame.min(t_len) {
                    inside[f] = true;
                }
            }
            if !present {
                return None;
            }
            let scores: Vec<f64> = (0..t_len).map(|t| trace.get(t, e)).collect();
            roc_auc(&scores, &inside)
        })
        .collect()
}

/// `tag,eer` CSV with one row per tag and a final `ave` row. Undefined
/// entries are written as `nan`.
pub fn eer_table_csv(per_tag: &[Option<f64>]) -> String {
    let mut out = String::from("tag,eer\n");
    let fmt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), |x| format!("{x:.6}"));
    for (i, v) in per_tag.iter().enumerate() {
        let name = TAGS.get(i).map_or_else(|| i.to_string(), |c| c.to_string());
        let _ = writeln!(out, "{name},{}", fmt(*v));
    }
    let _ = writeln!(out, "ave,{}", fmt(eer_average(per_tag)));
    out
}

pub fn empty_scored_set() -> ScoredSet {
    ScoredSet::new(NUM_TAGS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    /// Brute-force reference: FPR/FNR counted directly at thresholds midway
    /// between adjacent distinct scores, plus one above and one below all
    /// scores, then the first sign change interpolated.
    pub(crate) fn eer_oracle(items: &[(f64, bool)]) -> Option<f64> {
        let pos = items.iter().filter(|i| i.1).count();
        let neg = items.len() - pos;
        if pos == 0 || neg == 0 {
            return None;
        }
        let mut distinct: Vec<f64> = items.iter().map(|i| i.0).collect();
        distinct.sort_by(|a, b| b.total_cmp(a));
        distinct.dedup();
        let mut thresholds = vec![distinct[0] + 1.0];
        for w in distinct.windows(2) {
            thresholds.push(0.5 * (w[0] + w[1]));
        }
        thresholds.push(distinct[distinct.len() - 1] - 1.0);
        let rates: Vec<(f64, f64)> = thresholds
            .iter()
            .map(|&th| {
                let fp = items.iter().filter(|i| !i.1 && i.0 > th).count();
                let fn_ = items.iter().filter(|i| i.1 && i.0 <= th).count();
                (fp as f64 / neg as f64, fn_ as f64 / pos as f64)
            })
            .collect();
        for w in rates.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (da, db) = (a.0 - a.1, b.0 - b.1);
            if da <= 0.0 && db >= 0.0 {
                if da == 0.0 {
                    return Some(a.0);
                }
                if db == 0.0 {
                    return Some(b.0);
                }
                return Some(a.0 + (-da / (db - da)) * (b.0 - a.0));
            }
        }
        None
    }

    fn auc_oracle(scores: &[f64], labels: &[bool]) -> Option<f64> {
        let mut num = 0.0;
        let mut pairs = 0usize;
        for (i, &li) in labels.iter().enumerate() {
            for (j, &lj) in labels.iter().enumerate() {
                if li && !lj {
                    pairs += 1;
                    num += match scores[i].partial_cmp(&scores[j]).unwrap() {
                        std::cmp::Ordering::Greater => 1.0,
                        std::cmp::Ordering::Equal => 0.5,
                        std::cmp::Ordering::Less => 0.0,
                    };
                }
            }
        }
        (pairs > 0).then(|| num / pairs as f64)
    }

    #[test]
    fn eer_hand_cases() {
        let perfect = [(0.9, true), (0.8, true), (0.2, false), (0.1, false)];
        assert_eq!(eer_of(&perfect), Some(0.0));
        let mixed = [(0.9, false), (0.8, true), (0.2, false), (0.1, true)];
        assert_eq!(eer_of(&mixed), Some(0.5));
        assert_eq!(eer_oracle(&mixed), Some(0.5));
        let inverted = [(0.1, true), (0.2, true), (0.8, false), (0.9, false)];
        assert_eq!(eer_of(&inverted), Some(1.0));
    }

    #[test]
    fn eer_single_class_is_undefined() {
        assert_eq!(eer_of(&[(0.3, true), (0.4, true)]), None);
        assert_eq!(eer_of(&[]), None);
    }

    #[test]
    fn eer_matches_oracle_on_random_sets() {
        let mut rng = Rng::new(99);
        for _ in 0..300 {
            let n = 2 + rng.below(49);
            let items: Vec<(f64, bool)> = (0..n)
                .map(|_| {
                    let s = (rng.uniform() * 20.0).floor() / 20.0;
                    (s, rng.uniform() < 0.4)
                })
                .collect();
            match (eer_of(&items), eer_oracle(&items)) {
                (Some(a), Some(b)) => assert!((a - b).abs() < 1e-9, "{a} vs {b}"),
                (a, b) => assert_eq!(a, b),
            }
        }
    }

    #[test]
    fn average_excludes_undefined() {
        assert_eq!(eer_average(&[Some(0.0); 7]), Some(0.0));
        let table2 = [0.10, 0.10, 0.16, 0.03, 0.11, 0.03, 0.22].map(Some);
        let avg = eer_average(&table2).unwrap();
        assert!((avg - 0.107_142_857).abs() < 1e-6);
        assert_eq!((avg * 100.0).round() / 100.0, 0.11);
        let mut six = [Some(0.2); 7];
        six[3] = None;
        assert!((eer_average(&six).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(eer_average(&[None, None]), None);
    }

    #[test]
    fn auc_cases() {
        let labels = [false, true, true, false];
        assert_eq!(roc_auc(&[0.0, 1.0, 1.0, 0.0], &labels), Some(1.0));
        assert_eq!(roc_auc(&[0.3; 4], &labels), Some(0.5));
        assert_eq!(roc_auc(&[0.3; 2], &[true, true]), None);
        let mut rng = Rng::new(5);
        for _ in 0..50 {
            let scores: Vec<f64> = (0..20).map(|_| (rng.uniform() * 8.0).floor()).collect();
            let labels: Vec<bool> = (0..20).map(|_| rng.uniform() < 0.5).collect();
            let (a, b) = (roc_auc(&scores, &labels), auc_oracle(&scores, &labels));
            match (a, b) {
                (Some(a), Some(b)) => assert!((a - b).abs() < 1e-12),
                (a, b) => assert_eq!(a, b),
            }
        }
    }

    #[test]
    fn localization_auc_uses_intervals() {
        let mut trace = Matrix::zeros(10, 7);
        for t in 3..6 {
            trace.set(t, 5, 1.0);
        }
        let truth = [TruthInterval { event: 5, start_frame: 3, end_frame: 6 }];
        let auc = localization_auc(&trace, &truth);
        assert_eq!(auc[5], Some(1.0));
        assert!(auc.iter().enumerate().all(|(e, a)| e == 5 || a.is_none()));
    }

    #[test]
    fn table_has_eight_rows() {
        let csv = eer_table_csv(&[Some(0.1); 7]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 9);
        assert_eq!(lines[0], "tag,eer");
        assert!(lines[8].starts_with("ave,"));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn eer_invariant_under_squaring(items in proptest::collection::vec((0.0f64..1.0, any::<bool>()), 2..50)) {
                let squared: Vec<(f64, bool)> = items.iter().map(|(s, t)| (s * s, *t)).collect();
                match (eer_of(&items), eer_of(&squared)) {
                    (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12),
                    (a, b) => prop_assert_eq!(a, b),
                }
            }

            #[test]
            fn eer_and_auc_are_bounded(items in proptest::collection::vec((0.0f64..1.0, any::<bool>()), 2..50)) {
                if let Some(e) = eer_of(&items) {
                    prop_assert!((0.0..=1.0).contains(&e));
                }
                let (s, l): (Vec<f64>, Vec<bool>) = items.iter().cloned().unzip();
                if let Some(a) = roc_auc(&s, &l) {
                    prop_assert!((0.0..=1.0).contains(&a));
                }
            }
        }
    }
}
