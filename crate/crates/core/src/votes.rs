// SPDX-License-Identifier: Apache-2.0

//! Vote histograms and the boost transformation.
//!
//! Every argmax in this crate breaks ties toward the lowest class index,
//! both on raw integer counts and on noisy real-valued counts.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Per-class vote counts from `t` teachers for a single query.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VoteHistogram {
    counts: Vec<u64>,
    teachers: u64,
}

impl VoteHistogram {
    /// Builds a histogram from raw counts. The teacher count is their sum.
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::TooFewClasses(counts.len()));
        }
        let teachers: u64 = counts.iter().sum();
        if teachers == 0 {
            return Err(Error::NoVotes);
        }
        Ok(Self { counts, teachers })
    }

    /// Tallies one label per teacher into a histogram over `classes` bins.
    pub fn from_labels<I>(labels: I, classes: usize) -> Result<Self>
    where
        I: IntoIterator<Item = usize>,
    {
        if classes < 2 {
            return Err(Error::TooFewClasses(classes));
        }
        let mut counts = alloc::vec![0u64; classes];
        for label in labels {
            let slot = counts
                .get_mut(label)
                .ok_or(Error::LabelOutOfRange { label, classes })?;
            *slot += 1;
        }
        Self::new(counts)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Number of classes `L`.
    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    /// Number of teachers `t` (the sum of all counts).
    pub fn teachers(&self) -> u64 {
        self.teachers
    }

    /// Index of the largest count, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &count) in self.counts.iter().enumerate().skip(1) {
            if count > self.counts[best] {
                best = i;
            }
        }
        best
    }

    /// Largest minus second-largest count; zero when the maximum is repeated.
    pub fn gap(&self) -> u64 {
        let top = self.argmax();
        let top_count = self.counts[top];
        let runner_up = self
            .counts
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != top)
            .map(|(_, &c)| c)
            .max()
            .unwrap_or(0);
        top_count - runner_up
    }

    /// Whether the top-two gap is strictly larger than `n`.
    pub fn is_distance_n(&self, n: u64) -> bool {
        self.gap() > n
    }

    /// Minimum number of single-teacher vote changes that relocate the argmax.
    ///
    /// Moving one vote from the winner to a challenger closes their gap by
    /// two. A challenger with a lower index wins on a tie, one with a higher
    /// index must strictly overtake, so the answer is
    /// `ceil(g/2)` or `ceil((g+1)/2)` minimised over challengers.
    pub fn flip_distance(&self) -> u64 {
        let top = self.argmax();
        let top_count = self.counts[top];
        self.counts
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != top)
            .map(|(j, &count)| {
                let gap = top_count - count;
                if j < top {
                    gap.div_ceil(2)
                } else {
                    (gap + 1).div_ceil(2)
                }
            })
            .min()
            .expect("at least two classes")
    }

    /// Adds `c` to the argmax bin.
    pub fn boost(&self, c: f64) -> Result<BoostedVotes> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::param("boost constant", c));
        }
        let boost_index = self.argmax();
        let mut values: Vec<f64> = self.counts.iter().map(|&x| x as f64).collect();
        values[boost_index] += c;
        Ok(BoostedVotes {
            values,
            boost_index,
            boost_constant: c,
        })
    }
}

/// Real-valued counts after the boost constant was added to the argmax bin.
///
/// For `c` beyond about `1e16` the boosted bin absorbs any small additive
/// noise through floating-point rounding. That only strengthens immutability.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostedVotes {
    values: Vec<f64>,
    boost_index: usize,
    boost_constant: f64,
}

impl BoostedVotes {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn boost_index(&self) -> usize {
        self.boost_index
    }

    pub fn boost_constant(&self) -> f64 {
        self.boost_constant
    }

    pub fn argmax(&self) -> usize {
        argmax_f64(&self.values)
    }

    /// Largest minus second-largest value.
    pub fn gap(&self) -> f64 {
        let top = self.argmax();
        let runner_up = self
            .values
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != top)
            .map(|(_, &v)| v)
            .fold(f64::NEG_INFINITY, f64::max);
        self.values[top] - runner_up
    }
}

/// Index of the largest value, lowest index on ties.
///
/// Panics on an empty slice.
pub fn argmax_f64(values: &[f64]) -> usize {
    assert!(!values.is_empty(), "argmax of an empty vector");
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// One answered student query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryRecord {
    pub query_id: u64,
    pub histogram: VoteHistogram,
    pub returned_label: usize,
    pub ground_truth_label: Option<usize>,
}

impl QueryRecord {
    pub fn new(
        query_id: u64,
        histogram: VoteHistogram,
        returned_label: usize,
        ground_truth_label: Option<usize>,
    ) -> Result<Self> {
        let classes = histogram.classes();
        for label in core::iter::once(returned_label).chain(ground_truth_label) {
            if label >= classes {
                return Err(Error::LabelOutOfRange { label, classes });
            }
        }
        Ok(Self {
            query_id,
            histogram,
            returned_label,
            ground_truth_label,
        })
    }

    /// The noiseless plurality label.
    pub fn clean_label(&self) -> usize {
        self.histogram.argmax()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn h(counts: &[u64]) -> VoteHistogram {
        VoteHistogram::new(counts.to_vec()).unwrap()
    }

    #[test]
    fn argmax_examples() {
        assert_eq!(h(&[1, 3, 2]).argmax(), 1);
        assert_eq!(h(&[2, 2, 1]).argmax(), 0);
        assert_eq!(h(&[0, 0, 5, 0]).argmax(), 2);
    }

    #[test]
    fn rejects_degenerate_histograms() {
        assert_eq!(VoteHistogram::new(vec![]), Err(Error::TooFewClasses(0)));
        assert_eq!(VoteHistogram::new(vec![4]), Err(Error::TooFewClasses(1)));
        assert_eq!(VoteHistogram::new(vec![0, 0]), Err(Error::NoVotes));
        assert_eq!(
            VoteHistogram::from_labels([0, 3], 3),
            Err(Error::LabelOutOfRange { label: 3, classes: 3 })
        );
    }

    #[test]
    fn gap_examples() {
        assert_eq!(h(&[5, 3, 1]).gap(), 2);
        assert_eq!(h(&[4, 4, 0]).gap(), 0);
        assert_eq!(h(&[10, 0]).gap(), 10);
    }

    #[test]
    fn distance_n_is_strict() {
        assert!(!h(&[5, 3]).is_distance_n(2));
        assert!(h(&[6, 3]).is_distance_n(2));
        assert!(h(&[170, 40, 40]).is_distance_n(3));
        assert_eq!(h(&[170, 40, 40]).gap(), 130);
        // all-equal histograms qualify for no n
        assert!(!h(&[3, 3, 3]).is_distance_n(0));
    }

    #[test]
    fn boost_examples() {
        let v = h(&[1, 3, 2]);
        assert_eq!(v.boost(0.0).unwrap().values(), &[1.0, 3.0, 2.0]);
        assert_eq!(v.boost(100.0).unwrap().values(), &[1.0, 103.0, 2.0]);

        let b = h(&[2, 2, 1]).boost(1e100).unwrap();
        assert_eq!(b.boost_index(), 0);
        assert_eq!(b.values(), &[1e100 + 2.0, 2.0, 1.0]);
        assert_eq!(b.argmax(), 0);

        assert!(v.boost(-1.0).is_err());
        assert!(v.boost(f64::NAN).is_err());
    }

    #[test]
    fn flip_distance_respects_tie_rule() {
        // winner ahead of the runner-up index needs a strict overtake
        assert_eq!(h(&[4, 2, 0]).flip_distance(), 2);
        assert_eq!(h(&[2, 4, 0]).flip_distance(), 1);
        assert_eq!(h(&[3, 3]).flip_distance(), 1);
        assert_eq!(h(&[5, 4]).flip_distance(), 1);
        assert_eq!(h(&[6, 2, 2]).flip_distance(), 3);
        assert_eq!(h(&[2, 6, 2]).flip_distance(), 2);
        assert_eq!(h(&[10, 0]).flip_distance(), 6);
    }

    #[test]
    fn query_record_checks_labels() {
        assert!(QueryRecord::new(0, h(&[1, 2]), 2, None).is_err());
        assert!(QueryRecord::new(0, h(&[1, 2]), 1, Some(5)).is_err());
        let r = QueryRecord::new(7, h(&[1, 2]), 1, Some(0)).unwrap();
        assert_eq!(r.clean_label(), 1);
    }
}
