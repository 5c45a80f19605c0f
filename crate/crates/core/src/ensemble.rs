// SPDX-License-Identifier: Apache-2.0

//! Teacher ensembles: partitioning, synthetic teachers and ensemble
//! statistics.
//!
//! Synthetic teachers stand in for trained models. Each one answers the true
//! label with probability `p` and otherwise a uniformly chosen wrong label.

use alloc::vec::Vec;
use core::ops::Range;

use crate::noise::RngStream;
use crate::votes::VoteHistogram;
use crate::{Error, Result};

/// Splits `0..dataset_size` into `teachers` contiguous ranges whose sizes
/// differ by at most one; the first `dataset_size % teachers` ranges get the
/// extra element.
pub fn partition(dataset_size: u64, teachers: u64) -> Result<Vec<Range<u64>>> {
    if teachers == 0 || teachers > dataset_size {
        return Err(Error::InvalidCount {
            name: "teachers",
            value: teachers,
        });
    }
    let base = dataset_size / teachers;
    let extra = dataset_size % teachers;
    let mut start = 0;
    Ok((0..teachers)
        .map(|i| {
            let len = base + (i < extra) as u64;
            let r = start..start + len;
            start += len;
            r
        })
        .collect())
}

/// Average single-teacher accuracy measured for a given ensemble size on two
/// digit benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceTask {
    Mnist,
    Svhn,
}

const REFERENCE_ACCURACY: [(u64, f64, f64); 7] = [
    (1, 0.9899, 0.9399),
    (5, 0.9831, 0.9321),
    (10, 0.9671, 0.9120),
    (25, 0.9503, 0.8893),
    (50, 0.9194, 0.8578),
    (100, 0.9145, 0.8270),
    (250, 0.8118, 0.7593),
];

/// Reference per-teacher accuracy for an ensemble of `teachers`, if tabulated.
pub fn reference_teacher_accuracy(task: ReferenceTask, teachers: u64) -> Option<f64> {
    REFERENCE_ACCURACY
        .iter()
        .find(|(t, _, _)| *t == teachers)
        .map(|&(_, mnist, svhn)| match task {
            ReferenceTask::Mnist => mnist,
            ReferenceTask::Svhn => svhn,
        })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticTeacherSpec {
    teachers: u64,
    accuracy: f64,
    classes: usize,
}

impl SyntheticTeacherSpec {
    pub fn new(teachers: u64, accuracy: f64, classes: usize) -> Result<Self> {
        if teachers == 0 {
            return Err(Error::InvalidCount {
                name: "teachers",
                value: 0,
            });
        }
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(Error::param("teacher accuracy", accuracy));
        }
        if classes < 2 {
            return Err(Error::TooFewClasses(classes));
        }
        Ok(Self {
            teachers,
            accuracy,
            classes,
        })
    }

    pub fn teachers(&self) -> u64 {
        self.teachers
    }

    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    /// One teacher's answer for a query whose label is `true_label`.
    pub fn vote(&self, true_label: usize, rng: &mut RngStream) -> usize {
        if rng.unit() < self.accuracy {
            true_label
        } else {
            let r = rng.below(self.classes as u64 - 1) as usize;
            if r < true_label {
                r
            } else {
                r + 1
            }
        }
    }
}

/// Tallies one vote from every synthetic teacher.
pub fn synth_votes(
    spec: &SyntheticTeacherSpec,
    true_label: usize,
    rng: &mut RngStream,
) -> Result<VoteHistogram> {
    if true_label >= spec.classes {
        return Err(Error::LabelOutOfRange {
            label: true_label,
            classes: spec.classes,
        });
    }
    let mut counts = alloc::vec![0u64; spec.classes];
    for _ in 0..spec.teachers {
        counts[spec.vote(true_label, rng)] += 1;
    }
    VoteHistogram::new(counts)
}

/// Teacher predictions for a batch of queries.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTable {
    classes: usize,
    teachers: usize,
    query_ids: Vec<u64>,
    /// `predictions[q][teacher]`.
    predictions: Vec<Vec<usize>>,
    truths: Vec<Option<usize>>,
}

impl PredictionTable {
    /// Validates per-query predictions. Every query needs one label per
    /// teacher and all labels must lie in `[0, classes)`.
    pub fn new(
        classes: usize,
        query_ids: Vec<u64>,
        predictions: Vec<Vec<usize>>,
        truths: Vec<Option<usize>>,
    ) -> Result<Self> {
        if classes < 2 {
            return Err(Error::TooFewClasses(classes));
        }
        for len in [predictions.len(), truths.len()] {
            if len != query_ids.len() {
                return Err(Error::LengthMismatch {
                    expected: query_ids.len(),
                    found: len,
                });
            }
        }
        let teachers = predictions.first().map_or(0, Vec::len);
        for row in &predictions {
            if row.len() != teachers {
                return Err(Error::LengthMismatch {
                    expected: teachers,
                    found: row.len(),
                });
            }
        }
        if !predictions.is_empty() && teachers == 0 {
            return Err(Error::NoVotes);
        }
        let labels = predictions.iter().flatten().copied();
        for label in labels.chain(truths.iter().flatten().copied()) {
            if label >= classes {
                return Err(Error::LabelOutOfRange { label, classes });
            }
        }
        Ok(Self {
            classes,
            teachers,
            query_ids,
            predictions,
            truths,
        })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn teachers(&self) -> usize {
        self.teachers
    }

    pub fn len(&self) -> usize {
        self.query_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.query_ids.is_empty()
    }

    pub fn query_ids(&self) -> &[u64] {
        &self.query_ids
    }

    /// Labels of every teacher for the `index`-th query.
    pub fn predictions(&self, index: usize) -> &[usize] {
        &self.predictions[index]
    }

    pub fn truth(&self, index: usize) -> Option<usize> {
        self.truths[index]
    }

    pub fn truths(&self) -> &[Option<usize>] {
        &self.truths
    }

    pub fn histogram(&self, index: usize) -> VoteHistogram {
        VoteHistogram::from_labels(self.predictions[index].iter().copied(), self.classes)
            .expect("validated on construction")
    }

    pub fn histograms(&self) -> Vec<VoteHistogram> {
        (0..self.len()).map(|i| self.histogram(i)).collect()
    }
}

/// Share of histograms that are distance-`n`; 0 for an empty set.
pub fn qualified_fraction(histograms: &[VoteHistogram], n: u64) -> f64 {
    if histograms.is_empty() {
        return 0.0;
    }
    let hits = histograms.iter().filter(|h| h.is_distance_n(n)).count();
    hits as f64 / histograms.len() as f64
}

/// Label accuracies against ground truth, in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleAccuracy {
    pub queries: usize,
    /// Noiseless plurality vs truth.
    pub clean: f64,
    /// Mechanism output vs truth.
    pub mechanism: f64,
    /// Mechanism output vs noiseless plurality.
    pub agreement: f64,
}

pub fn ensemble_accuracy(
    histograms: &[VoteHistogram],
    truths: &[usize],
    mechanism_labels: &[usize],
) -> Result<EnsembleAccuracy> {
    let n = histograms.len();
    for len in [truths.len(), mechanism_labels.len()] {
        if len != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: len,
            });
        }
    }
    let pct = |hits: usize| {
        if n == 0 {
            0.0
        } else {
            100.0 * hits as f64 / n as f64
        }
    };
    let mut clean = 0;
    let mut mech = 0;
    let mut agree = 0;
    for ((h, &truth), &label) in histograms.iter().zip(truths).zip(mechanism_labels) {
        let plurality = h.argmax();
        clean += (plurality == truth) as usize;
        mech += (label == truth) as usize;
        agree += (label == plurality) as usize;
    }
    Ok(EnsembleAccuracy {
        queries: n,
        clean: pct(clean),
        mechanism: pct(mech),
        agreement: pct(agree),
    })
}
