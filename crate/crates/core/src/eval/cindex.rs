use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Binary indexed tree over score ranks.
struct Fenwick {
    tree: Vec<u64>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Self { tree: vec![0; n + 1] }
    }

    fn add(&mut self, rank: usize) {
        let mut i = rank + 1;
        while i < self.tree.len() {
            self.tree[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Number of inserted ranks `< rank`.
    fn count_below(&self, rank: usize) -> u64 {
        let mut i = rank;
        let mut total = 0;
        while i > 0 {
            total += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        total
    }
}

/// Harrell's concordance index.
///
/// A pair `(i, j)` is comparable when `t_i < t_j` and sample `i` had the
/// event; it is concordant when `score_i > score_j` and counts one half when
/// the scores tie. Runs in `O(n log n)`.
pub fn c_index<T: Scalar>(durations: &[T], events: &[bool], scores: &[T]) -> Result<f64> {
    let n = durations.len();
    if events.len() != n || scores.len() != n {
        return Err(Error::invalid(format!(
            "c-index inputs differ in length: {} durations, {} events, {} scores",
            n,
            events.len(),
            scores.len()
        )));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFinite(format!("risk score of sample {i}")));
    }
    if let Some(i) = durations.iter().position(|d| !d.is_finite()) {
        return Err(Error::NonFinite(format!("duration of sample {i}")));
    }

    let mut distinct: Vec<T> = scores.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    distinct.dedup();
    let rank = |s: T| {
        distinct
            .binary_search_by(|probe| probe.partial_cmp(&s).expect("finite"))
            .expect("score present")
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| durations[b].partial_cmp(&durations[a]).expect("finite"));

    let mut tree = Fenwick::new(distinct.len());
    let (mut comparable, mut concordant, mut tied) = (0u64, 0u64, 0u64);
    let mut inserted = 0u64;
    let mut start = 0;
    while start < n {
        let time = durations[order[start]];
        let mut end = start;
        while end < n && durations[order[end]] == time {
            end += 1;
        }
        // The tree holds exactly the samples with strictly later times.
        for &i in &order[start..end] {
            if events[i] {
                let r = rank(scores[i]);
                let below = tree.count_below(r);
                let up_to = tree.count_below(r + 1);
                comparable += inserted;
                concordant += below;
                tied += up_to - below;
            }
        }
        for &i in &order[start..end] {
            tree.add(rank(scores[i]));
            inserted += 1;
        }
        start = end;
    }
    if comparable == 0 {
        return Err(Error::NoComparablePairs);
    }
    Ok((2 * concordant + tied) as f64 / (2 * comparable) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(t: &[f64], e: &[bool], s: &[f64]) -> Option<f64> {
        let (mut weight, mut count) = (0.0, 0usize);
        for i in 0..t.len() {
            for j in 0..t.len() {
                if e[i] && t[i] < t[j] {
                    count += 1;
                    if s[i] > s[j] {
                        weight += 1.0;
                    } else if s[i] == s[j] {
                        weight += 0.5;
                    }
                }
            }
        }
        (count > 0).then(|| weight / count as f64)
    }

    #[test]
    fn perfect_and_partial_concordance() {
        let t = [1.0, 2.0, 3.0];
        let e = [true; 3];
        assert_eq!(c_index(&t, &e, &[3.0, 2.0, 1.0]).unwrap(), 1.0);
        assert_eq!(c_index(&t, &e, &[3.0, 1.0, 2.0]).unwrap(), 2.0 / 3.0);
        assert_eq!(c_index(&t, &e, &[5.0, 5.0, 5.0]).unwrap(), 0.5);
    }

    #[test]
    fn censored_first_pairs_are_not_comparable() {
        // Only (1, 2) is comparable.
        let c = c_index(&[1.0, 2.0, 3.0], &[false, true, false], &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(c, 0.0);
        let err = c_index(&[1.0, 2.0], &[false, false], &[0.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NoComparablePairs));
        // Equal times are never comparable.
        assert!(c_index(&[2.0, 2.0], &[true, true], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn rejects_mismatched_lengths() {
        assert!(c_index(&[1.0, 2.0], &[true], &[0.0, 1.0]).is_err());
        assert!(c_index(&[1.0, 2.0], &[true, true], &[0.0, f64::NAN]).is_err());
    }

    fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<bool>, Vec<f64>)> {
        (2usize..120).prop_flat_map(|n| {
            (
                proptest::collection::vec(1u32..30, n),
                proptest::collection::vec(proptest::bool::weighted(0.6), n),
                proptest::collection::vec(-6i32..6, n),
            )
                .prop_map(|(t, e, s)| {
                    (
                        t.into_iter().map(f64::from).collect(),
                        e,
                        s.into_iter().map(|v| f64::from(v) * 0.5).collect(),
                    )
                })
        })
    }

    proptest! {
        #[test]
        fn equals_pair_enumeration((t, e, s) in instance()) {
            match brute_force(&t, &e, &s) {
                Some(want) => prop_assert_eq!(c_index(&t, &e, &s).unwrap(), want),
                None => prop_assert!(c_index(&t, &e, &s).is_err()),
            }
        }

        #[test]
        fn invariant_under_monotone_transform((t, e, s) in instance()) {
            prop_assume!(brute_force(&t, &e, &s).is_some());
            let transformed: Vec<f64> = s.iter().map(|v| (v * 0.7).exp() + v.powi(3)).collect();
            prop_assert_eq!(c_index(&t, &e, &s).unwrap(), c_index(&t, &e, &transformed).unwrap());
        }
    }

    #[test]
    fn negated_scores_complement_without_ties() {
        let t: Vec<f64> = (0..40).map(|i| ((i * 17) % 23) as f64 + 1.0).collect();
        let e: Vec<bool> = (0..40).map(|i| i % 3 != 0).collect();
        let s: Vec<f64> = (0..40).map(|i| ((i * 31) % 41) as f64).collect();
        let neg: Vec<f64> = s.iter().map(|v| -v).collect();
        let a = c_index(&t, &e, &s).unwrap();
        let b = c_index(&t, &e, &neg).unwrap();
        assert!((1.0 - a - b).abs() < 1e-15);
    }
}
