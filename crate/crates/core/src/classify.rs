//! Map classification: exact Jenks natural breaks and symmetric manual
//! schemes.
//!
//! `jenks_partition` minimizes the total within-class sum of squared
//! deviations by dynamic programming over the sorted distinct values, which
//! is exact (unlike the common iterative-refinement shortcut) and runs in
//! O(k n^2) time and O(k n) space. Duplicates collapse into weighted points
//! so the result is invariant under duplication of the input. Cost ties are
//! broken toward the lexicographically smallest break-index vector, making
//! the partition fully deterministic.
//!
//! Class membership is half-open: a value equal to a boundary belongs to the
//! class above it, and the last class is closed at infinity.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::format_sig;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("no data to classify")]
    NoData,
    #[error("values must be finite")]
    NonFiniteValue,
    #[error("too many classes: requested {requested} for {distinct} distinct values")]
    TooManyClasses { requested: usize, distinct: usize },
    #[error("invalid symmetric bounds: {0}")]
    InvalidSymmetricBounds(String),
    #[error("unclassifiable value: {0}")]
    Unclassifiable(f64),
    #[error("invalid class scheme: {0}")]
    InvalidScheme(String),
}

/// How a scheme's boundaries were derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassKind {
    Jenks,
    Symmetric,
}

/// A classification scheme: `boundaries.len() + 1` classes, one label per
/// class, and for symmetric schemes the index of the neutral class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScheme {
    pub kind: ClassKind,
    pub boundaries: Vec<f64>,
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neutral_class_index: Option<usize>,
}

impl ClassScheme {
    pub fn class_count(&self) -> usize {
        self.labels.len()
    }

    pub fn validate(&self) -> Result<(), ClassifyError> {
        if self.labels.len() != self.boundaries.len() + 1 {
            return Err(ClassifyError::InvalidScheme(format!(
                "{} labels for {} boundaries",
                self.labels.len(),
                self.boundaries.len()
            )));
        }
        for pair in self.boundaries.windows(2) {
            if !(pair[0] < pair[1]) {
                return Err(ClassifyError::InvalidScheme(
                    "boundaries not strictly increasing".into(),
                ));
            }
        }
        if self.boundaries.iter().any(|b| !b.is_finite()) {
            return Err(ClassifyError::InvalidScheme("non-finite boundary".into()));
        }
        if let Some(idx) = self.neutral_class_index {
            if idx >= self.class_count() {
                return Err(ClassifyError::InvalidScheme(format!(
                    "neutral class {idx} out of range"
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("class scheme serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ClassifyError> {
        let scheme: ClassScheme = serde_json::from_str(text)
            .map_err(|e| ClassifyError::InvalidScheme(e.to_string()))?;
        scheme.validate()?;
        Ok(scheme)
    }
}

fn interval_labels(boundaries: &[f64]) -> Vec<String> {
    if boundaries.is_empty() {
        return vec!["all".to_string()];
    }
    let mut labels = Vec::with_capacity(boundaries.len() + 1);
    labels.push(format!("< {}", format_sig(boundaries[0], 6)));
    for pair in boundaries.windows(2) {
        labels.push(format!(
            "{} - {}",
            format_sig(pair[0], 6),
            format_sig(pair[1], 6)
        ));
    }
    labels.push(format!(">= {}", format_sig(boundaries[boundaries.len() - 1], 6)));
    labels
}

/// Sorted distinct values with their multiplicities.
fn distinct_counts(values: &[f64]) -> Result<(Vec<f64>, Vec<f64>), ClassifyError> {
    if values.is_empty() {
        return Err(ClassifyError::NoData);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(ClassifyError::NonFiniteValue);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values compare"));
    let mut distinct: Vec<f64> = Vec::new();
    let mut counts: Vec<f64> = Vec::new();
    for v in sorted {
        match distinct.last() {
            Some(last) if *last == v => *counts.last_mut().unwrap() += 1.0,
            _ => {
                distinct.push(v);
                counts.push(1.0);
            }
        }
    }
    Ok((distinct, counts))
}

/// Weighted segment costs over the full value array, O(1) per query after
/// O(n) setup. Values are shifted by the global weighted mean before the
/// prefix sums are taken, which keeps the classic `ss - s^2/w` form
/// well-conditioned.
struct SegmentCost {
    prefix_w: Vec<f64>,
    prefix_s: Vec<f64>,
    prefix_ss: Vec<f64>,
}

impl SegmentCost {
    fn new(distinct: &[f64], counts: &[f64]) -> Self {
        let total_w: f64 = counts.iter().sum();
        let total_s: f64 = distinct.iter().zip(counts).map(|(v, c)| c * v).sum();
        let mean = if total_w > 0.0 { total_s / total_w } else { 0.0 };
        let n = distinct.len();
        let mut prefix_w = Vec::with_capacity(n + 1);
        let mut prefix_s = Vec::with_capacity(n + 1);
        let mut prefix_ss = Vec::with_capacity(n + 1);
        prefix_w.push(0.0);
        prefix_s.push(0.0);
        prefix_ss.push(0.0);
        for (v, c) in distinct.iter().zip(counts) {
            let d = v - mean;
            prefix_w.push(prefix_w.last().unwrap() + c);
            prefix_s.push(prefix_s.last().unwrap() + c * d);
            prefix_ss.push(prefix_ss.last().unwrap() + c * d * d);
        }
        Self {
            prefix_w,
            prefix_s,
            prefix_ss,
        }
    }

    /// Within-class sum of squared deviations for the inclusive index range
    /// `lo..=hi`. A single distinct value always costs exactly zero.
    fn cost(&self, lo: usize, hi: usize) -> f64 {
        if lo == hi {
            return 0.0;
        }
        let w = self.prefix_w[hi + 1] - self.prefix_w[lo];
        let s = self.prefix_s[hi + 1] - self.prefix_s[lo];
        let ss = self.prefix_ss[hi + 1] - self.prefix_ss[lo];
        let cost = ss - s * s / w;
        if cost > 0.0 {
            cost
        } else {
            0.0
        }
    }
}

/// Canonical within-class cost of the distinct-value range `lo..=hi`.
///
/// This is the single definition of segment cost used by the dynamic
/// program, so independent searches over partitions (such as exhaustive
/// enumeration in tests) reproduce its totals bit for bit.
pub fn within_class_cost(distinct: &[f64], counts: &[f64], lo: usize, hi: usize) -> f64 {
    SegmentCost::new(distinct, counts).cost(lo, hi)
}

/// An optimal k-partition of the sorted distinct values.
#[derive(Debug, Clone, PartialEq)]
pub struct JenksPartition {
    pub distinct: Vec<f64>,
    pub counts: Vec<f64>,
    /// Inclusive index ranges into `distinct`, one per class, in order.
    pub class_ranges: Vec<(usize, usize)>,
    /// Total within-class sum of squared deviations.
    pub cost: f64,
}

/// Break starts for a partition of `distinct[0..=i]` into `m + 1` classes,
/// read back from the parent table.
fn break_vec(parents: &[Vec<usize>], m: usize, mut i: usize) -> Vec<usize> {
    let mut v = vec![0usize; m];
    for t in (1..=m).rev() {
        let j = parents[t][i];
        v[t - 1] = j;
        i = j - 1;
    }
    v
}

/// Finds the minimum-cost partition of the values into `k` contiguous
/// classes. Exact ties in cost resolve to the lexicographically smallest
/// vector of break indices.
pub fn jenks_partition(values: &[f64], k: usize) -> Result<JenksPartition, ClassifyError> {
    let (distinct, counts) = distinct_counts(values)?;
    let n = distinct.len();
    if k == 0 || k > n {
        return Err(ClassifyError::TooManyClasses {
            requested: k,
            distinct: n,
        });
    }
    let ctx = SegmentCost::new(&distinct, &counts);
    let mut f_prev: Vec<f64> = (0..n).map(|i| ctx.cost(0, i)).collect();
    let mut parents: Vec<Vec<usize>> = vec![Vec::new()];
    for m in 1..k {
        let mut f_cur = vec![f64::INFINITY; n];
        let mut parent_row = vec![0usize; n];
        for i in m..n {
            let mut best_cost = f64::INFINITY;
            let mut best_j = m;
            for j in m..=i {
                let cand = f_prev[j - 1] + ctx.cost(j, i);
                if cand < best_cost {
                    best_cost = cand;
                    best_j = j;
                } else if cand == best_cost {
                    let mut a = break_vec(&parents, m - 1, j - 1);
                    a.push(j);
                    let mut b = break_vec(&parents, m - 1, best_j - 1);
                    b.push(best_j);
                    if a < b {
                        best_j = j;
                    }
                }
            }
            f_cur[i] = best_cost;
            parent_row[i] = best_j;
        }
        parents.push(parent_row);
        f_prev = f_cur;
    }
    let breaks = break_vec(&parents, k - 1, n - 1);
    let mut class_ranges = Vec::with_capacity(k);
    let mut start = 0usize;
    for b in &breaks {
        class_ranges.push((start, b - 1));
        start = *b;
    }
    class_ranges.push((start, n - 1));
    Ok(JenksPartition {
        cost: f_prev[n - 1],
        distinct,
        counts,
        class_ranges,
    })
}

/// Jenks natural-breaks scheme for the values. Boundaries sit midway between
/// the last value of one class and the first value of the next, nudged up to
/// the next class's first value in the degenerate case where the midpoint
/// rounds onto the lower value, so training values always classify into
/// their own class.
pub fn jenks_breaks(values: &[f64], k: usize) -> Result<ClassScheme, ClassifyError> {
    let partition = jenks_partition(values, k)?;
    let mut boundaries = Vec::with_capacity(k.saturating_sub(1));
    for pair in partition.class_ranges.windows(2) {
        let below = partition.distinct[pair[0].1];
        let above = partition.distinct[pair[1].0];
        let mut mid = below + (above - below) / 2.0;
        if !(mid > below) || mid > above {
            mid = above;
        }
        boundaries.push(mid);
    }
    let labels = interval_labels(&boundaries);
    let scheme = ClassScheme {
        kind: ClassKind::Jenks,
        boundaries,
        labels,
        neutral_class_index: None,
    };
    scheme.validate()?;
    Ok(scheme)
}

/// One Jenks scheme over the values of every period pooled together, so all
/// periods share a common legend and remain comparable.
pub fn pooled_breaks(values_per_period: &[Vec<f64>], k: usize) -> Result<ClassScheme, ClassifyError> {
    let pooled: Vec<f64> = values_per_period.iter().flatten().copied().collect();
    if pooled.is_empty() {
        return Err(ClassifyError::NoData);
    }
    jenks_breaks(&pooled, k)
}

/// Manual scheme symmetric around 1 for ratio-style indicators. Bounds must
/// be strictly increasing, even in number, with the middle interval
/// containing 1; that interval becomes the neutral class.
pub fn symmetric_scheme(bounds: &[f64]) -> Result<ClassScheme, ClassifyError> {
    if bounds.iter().any(|b| !b.is_finite()) {
        return Err(ClassifyError::InvalidSymmetricBounds(
            "non-finite bound".into(),
        ));
    }
    for pair in bounds.windows(2) {
        if !(pair[0] < pair[1]) {
            return Err(ClassifyError::InvalidSymmetricBounds(
                "bounds not strictly increasing".into(),
            ));
        }
    }
    if bounds.len() % 2 != 0 {
        return Err(ClassifyError::InvalidSymmetricBounds(format!(
            "odd number of bounds ({})",
            bounds.len()
        )));
    }
    let below_one = bounds.partition_point(|b| *b <= 1.0);
    if below_one != bounds.len() / 2 {
        return Err(ClassifyError::InvalidSymmetricBounds(
            "middle interval does not contain 1".into(),
        ));
    }
    let scheme = ClassScheme {
        kind: ClassKind::Symmetric,
        boundaries: bounds.to_vec(),
        labels: interval_labels(bounds),
        neutral_class_index: Some(bounds.len() / 2),
    };
    scheme.validate()?;
    Ok(scheme)
}

/// Class index of a value under a scheme. Values on a boundary fall into the
/// class above; the last class is unbounded. Only finite, non-negative
/// values classify.
pub fn classify(value: f64, scheme: &ClassScheme) -> Result<usize, ClassifyError> {
    if !value.is_finite() || value < 0.0 {
        return Err(ClassifyError::Unclassifiable(value));
    }
    Ok(scheme.boundaries.partition_point(|b| *b <= value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_cost_of_small_sets() {
        let (d, c) = distinct_counts(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(within_class_cost(&d, &c, 0, 2), 2.0);
        assert_eq!(within_class_cost(&d, &c, 0, 0), 0.0);
        // {1, 1, 4}: mean 2, deviations 1, 1, 4.
        let (d, c) = distinct_counts(&[1.0, 1.0, 4.0]).unwrap();
        assert_eq!(d, [1.0, 4.0]);
        assert_eq!(c, [2.0, 1.0]);
        assert_eq!(within_class_cost(&d, &c, 0, 1), 6.0);
    }

    #[test]
    fn three_singletons_for_three_values() {
        let p = jenks_partition(&[1.0, 2.0, 3.0], 3).unwrap();
        assert_eq!(p.class_ranges, [(0, 0), (1, 1), (2, 2)]);
        assert_eq!(p.cost, 0.0);
        let scheme = jenks_breaks(&[1.0, 2.0, 3.0], 3).unwrap();
        assert_eq!(scheme.boundaries, [1.5, 2.5]);
        assert_eq!(scheme.labels.len(), 3);
    }

    #[test]
    fn two_clusters_split_between_them() {
        let values = [0.9, 1.0, 1.1, 9.8, 10.0, 10.2];
        let scheme = jenks_breaks(&values, 2).unwrap();
        assert_eq!(scheme.boundaries, [1.1 + (9.8 - 1.1) / 2.0]);
        let p = jenks_partition(&values, 2).unwrap();
        assert_eq!(p.class_ranges, [(0, 2), (3, 5)]);
    }

    #[test]
    fn one_class_costs_the_total_deviation() {
        let values = [2.0, 4.0, 4.0, 7.0];
        let p = jenks_partition(&values, 1).unwrap();
        let (d, c) = distinct_counts(&values).unwrap();
        assert_eq!(p.cost, within_class_cost(&d, &c, 0, d.len() - 1));
        assert_eq!(p.class_ranges, [(0, d.len() - 1)]);
    }

    #[test]
    fn class_count_must_fit_distinct_values() {
        assert!(matches!(
            jenks_partition(&[1.0, 1.0, 2.0], 3),
            Err(ClassifyError::TooManyClasses {
                requested: 3,
                distinct: 2
            })
        ));
        assert!(matches!(
            jenks_partition(&[1.0], 0),
            Err(ClassifyError::TooManyClasses { .. })
        ));
        assert!(matches!(jenks_partition(&[], 1), Err(ClassifyError::NoData)));
        assert!(matches!(
            jenks_partition(&[f64::NAN], 1),
            Err(ClassifyError::NonFiniteValue)
        ));
    }

    #[test]
    fn ties_resolve_to_smallest_break_vector() {
        // Both splits of {0,1,2} into two classes cost 0.5.
        let p = jenks_partition(&[0.0, 1.0, 2.0], 2).unwrap();
        assert_eq!(p.class_ranges, [(0, 0), (1, 2)]);
        // All three 3-partitions of {0,1,2,3} cost 0.5; the lexicographically
        // smallest break vector is [1, 2].
        let p = jenks_partition(&[0.0, 1.0, 2.0, 3.0], 3).unwrap();
        assert_eq!(p.class_ranges, [(0, 0), (1, 1), (2, 3)]);
    }

    #[test]
    fn duplication_and_permutation_leave_breaks_unchanged() {
        let values = [0.12, 3.4, 0.56, 2.9, 0.11, 3.3];
        let base = jenks_breaks(&values, 3).unwrap();
        let mut doubled = values.to_vec();
        doubled.extend_from_slice(&values);
        assert_eq!(jenks_breaks(&doubled, 3).unwrap(), base);
        let mut reversed = values.to_vec();
        reversed.reverse();
        assert_eq!(jenks_breaks(&reversed, 3).unwrap(), base);
    }

    #[test]
    fn training_values_classify_into_their_own_class() {
        let values = [0.05, 0.1, 0.31, 0.32, 0.8, 0.82, 0.99];
        let k = 3;
        let p = jenks_partition(&values, k).unwrap();
        let scheme = jenks_breaks(&values, k).unwrap();
        for (class, (lo, hi)) in p.class_ranges.iter().enumerate() {
            for idx in *lo..=*hi {
                assert_eq!(classify(p.distinct[idx], &scheme).unwrap(), class);
            }
        }
    }

    #[test]
    fn adjacent_float_values_still_separate_cleanly() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let scheme = jenks_breaks(&[a, b], 2).unwrap();
        assert_eq!(classify(a, &scheme).unwrap(), 0);
        assert_eq!(classify(b, &scheme).unwrap(), 1);
        assert!(scheme.boundaries[0] > a && scheme.boundaries[0] <= b);
    }

    /// Exhaustive minimum over all break placements, totalled left to right
    /// with the same canonical segment cost the DP uses.
    fn enumerate_minimum(values: &[f64], k: usize) -> (f64, Vec<usize>) {
        let (d, c) = distinct_counts(values).unwrap();
        let n = d.len();
        let mut best: Option<(f64, Vec<usize>)> = None;
        let mut breaks: Vec<usize> = (1..k).collect();
        loop {
            let mut cost = 0.0;
            let mut start = 0usize;
            for b in &breaks {
                cost += within_class_cost(&d, &c, start, b - 1);
                start = *b;
            }
            cost += within_class_cost(&d, &c, start, n - 1);
            let better = match &best {
                None => true,
                Some((bc, bv)) => cost < *bc || (cost == *bc && breaks < *bv),
            };
            if better {
                best = Some((cost, breaks.clone()));
            }
            // Advance the combination of k-1 ascending break positions.
            let mut idx = breaks.len();
            loop {
                if idx == 0 {
                    return best.unwrap();
                }
                idx -= 1;
                let max = n - (breaks.len() - idx);
                if breaks[idx] < max {
                    breaks[idx] += 1;
                    for t in idx + 1..breaks.len() {
                        breaks[t] = breaks[t - 1] + 1;
                    }
                    break;
                }
            }
            if breaks.is_empty() {
                return best.unwrap();
            }
        }
    }

    #[test]
    fn dp_matches_exhaustive_enumeration_on_a_grid() {
        let grid = [0.0, 0.4, 1.0, 1.5, 3.0, 3.2, 7.0, 9.5];
        let mut cases = 0;
        for mask in 1u32..(1 << grid.len()) {
            let values: Vec<f64> = (0..grid.len())
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| grid[i])
                .collect();
            let n = values.len();
            for k in 1..=n.min(3) {
                let p = jenks_partition(&values, k).unwrap();
                let (cost, breaks) = enumerate_minimum(&values, k);
                assert_eq!(p.cost, cost, "values {values:?} k {k}");
                let dp_breaks: Vec<usize> =
                    p.class_ranges.iter().skip(1).map(|(lo, _)| *lo).collect();
                assert_eq!(dp_breaks, breaks, "values {values:?} k {k}");
                cases += 1;
            }
        }
        assert!(cases > 500);
    }

    #[test]
    fn pooled_breaks_cover_all_periods() {
        let p1 = vec![0.1, 0.2, 0.3];
        let p2 = vec![0.7, 0.8, 0.9];
        let scheme = pooled_breaks(&[p1.clone(), p2.clone()], 2).unwrap();
        assert_eq!(scheme.boundaries, [0.5]);
        for v in p1 {
            assert_eq!(classify(v, &scheme).unwrap(), 0);
        }
        for v in p2 {
            assert_eq!(classify(v, &scheme).unwrap(), 1);
        }
        assert!(pooled_breaks(&[vec![], vec![]], 2).is_err());
        assert!(pooled_breaks(&[vec![], vec![0.3, 0.9]], 2).is_ok());
    }

    #[test]
    fn default_symmetric_scheme_has_neutral_class_around_one() {
        let scheme = symmetric_scheme(&[0.5, 0.75, 0.9, 1.1, 1.5, 2.0]).unwrap();
        assert_eq!(scheme.class_count(), 7);
        assert_eq!(scheme.neutral_class_index, Some(3));
        assert_eq!(classify(1.0, &scheme).unwrap(), 3);
        assert_eq!(classify(0.95, &scheme).unwrap(), 3);
        assert_eq!(classify(1.1, &scheme).unwrap(), 4);
        assert_eq!(classify(0.0, &scheme).unwrap(), 0);
        assert_eq!(classify(100.0, &scheme).unwrap(), 6);
        assert_eq!(scheme.labels[3], "0.9 - 1.1");
    }

    #[test]
    fn minimal_symmetric_scheme() {
        let scheme = symmetric_scheme(&[0.9, 1.1]).unwrap();
        assert_eq!(scheme.class_count(), 3);
        assert_eq!(scheme.neutral_class_index, Some(1));
    }

    #[test]
    fn bad_symmetric_bounds_are_rejected() {
        for bounds in [
            vec![1.1, 0.9],
            vec![0.9],
            vec![0.5, 0.8],
            vec![1.2, 1.5],
            vec![0.9, f64::INFINITY],
        ] {
            let err = symmetric_scheme(&bounds).unwrap_err();
            assert!(err.to_string().contains("invalid symmetric bounds"));
        }
    }

    #[test]
    fn boundary_values_go_to_the_upper_class() {
        let scheme = jenks_breaks(&[1.0, 2.0, 3.0], 3).unwrap();
        assert_eq!(classify(1.5, &scheme).unwrap(), 1);
        assert_eq!(classify(2.5, &scheme).unwrap(), 2);
    }

    #[test]
    fn non_finite_or_negative_values_do_not_classify() {
        let scheme = symmetric_scheme(&[0.9, 1.1]).unwrap();
        assert!(matches!(
            classify(f64::NAN, &scheme),
            Err(ClassifyError::Unclassifiable(_))
        ));
        assert!(classify(f64::INFINITY, &scheme).is_err());
        assert!(classify(-0.1, &scheme).is_err());
    }

    #[test]
    fn scheme_json_round_trip_preserves_classification() {
        let values = [0.07, 0.13, 0.19, 0.31, 0.44, 0.46, 0.72];
        let scheme = jenks_breaks(&values, 4).unwrap();
        let restored = ClassScheme::from_json(&scheme.to_json()).unwrap();
        assert_eq!(restored, scheme);
        for v in values {
            assert_eq!(
                classify(v, &scheme).unwrap(),
                classify(v, &restored).unwrap()
            );
        }
    }

    #[test]
    fn invalid_scheme_json_is_rejected() {
        let scheme = ClassScheme {
            kind: ClassKind::Jenks,
            boundaries: vec![0.5, 0.4],
            labels: vec!["a".into(), "b".into(), "c".into()],
            neutral_class_index: None,
        };
        assert!(ClassScheme::from_json(&serde_json::to_string(&scheme).unwrap()).is_err());
    }
}
