// SPDX-License-Identifier: Apache-2.0

//! Sensitivity of the boosted voting function `v -> boost(v, c)`.
//!
//! Neighboring datasets differ in one teacher's partition, so a neighbor's
//! histogram moves at most one vote between two bins. Distances between
//! boosted vectors are measured per coordinate (ℓ∞). A move that keeps the
//! argmax in place changes the vector by 1; one that relocates the argmax
//! also relocates `c` and changes it by `1 + c`.
//!
//! The closed forms below follow from [`VoteHistogram::flip_distance`]:
//! local sensitivity is 1 iff no single move relocates the argmax, and the
//! radius-1 smooth sensitivity is `e^-β` iff that also holds for every
//! neighbor. A strict top-two gap above 2 (resp. 4) always qualifies; at a
//! gap of exactly 2 (resp. 4) the lowest-index tie rule decides.
//!
//! Smooth sensitivity here maximises over distance-1 neighbors only, not
//! over all datasets with `e^{-β·d}` decay.

use alloc::vec::Vec;

use crate::votes::VoteHistogram;
use crate::{Error, Result};

/// Which sensitivity notion produced an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SensitivityKind {
    Global,
    Local,
    Smooth,
}

impl SensitivityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SensitivityKind::Global => "global",
            SensitivityKind::Local => "local",
            SensitivityKind::Smooth => "smooth",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityEstimate {
    pub kind: SensitivityKind,
    pub value: f64,
    /// Smoothing parameter, 0 for global and local estimates.
    pub beta: f64,
    /// Largest `n` for which the histogram is distance-`n` (0 if none).
    pub distance_class: u64,
}

fn check_boost(c: f64) -> Result<()> {
    if c >= 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::param("boost constant", c))
    }
}

fn distance_class(v: &VoteHistogram) -> u64 {
    v.gap().saturating_sub(1)
}

/// Worst case over all histograms: `c + 1`.
pub fn global_sensitivity(c: f64) -> Result<f64> {
    check_boost(c)?;
    Ok(c + 1.0)
}

pub fn local_sensitivity(v: &VoteHistogram, c: f64) -> Result<SensitivityEstimate> {
    check_boost(c)?;
    let value = if v.flip_distance() >= 2 { 1.0 } else { 1.0 + c };
    Ok(SensitivityEstimate {
        kind: SensitivityKind::Local,
        value,
        beta: 0.0,
        distance_class: distance_class(v),
    })
}

pub fn smooth_sensitivity(v: &VoteHistogram, c: f64, beta: f64) -> Result<SensitivityEstimate> {
    check_boost(c)?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::param("beta", beta));
    }
    let worst_local = if v.flip_distance() >= 3 { 1.0 } else { 1.0 + c };
    Ok(SensitivityEstimate {
        kind: SensitivityKind::Smooth,
        value: worst_local * libm::exp(-beta),
        beta,
        distance_class: distance_class(v),
    })
}

/// Iterator over `v` itself followed by every single-vote move.
#[derive(Debug, Clone)]
pub struct Neighbors<'a> {
    base: &'a VoteHistogram,
    emitted_self: bool,
    from: usize,
    to: usize,
}

impl<'a> Neighbors<'a> {
    pub fn new(base: &'a VoteHistogram) -> Self {
        Self {
            base,
            emitted_self: false,
            from: 0,
            to: 0,
        }
    }
}

impl Iterator for Neighbors<'_> {
    type Item = VoteHistogram;

    fn next(&mut self) -> Option<VoteHistogram> {
        if !self.emitted_self {
            self.emitted_self = true;
            return Some(self.base.clone());
        }
        let counts = self.base.counts();
        let classes = counts.len();
        while self.from < classes {
            let (from, to) = (self.from, self.to);
            self.to += 1;
            if self.to == classes {
                self.to = 0;
                self.from += 1;
            }
            if from == to || counts[from] == 0 {
                continue;
            }
            let mut moved = counts.to_vec();
            moved[from] -= 1;
            moved[to] += 1;
            return Some(VoteHistogram::new(moved).expect("vote move keeps the total"));
        }
        None
    }
}

pub fn enumerate_neighbors(v: &VoteHistogram) -> Vec<VoteHistogram> {
    Neighbors::new(v).collect()
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| libm::fabs(x - y))
        .fold(0.0, f64::max)
}

/// Local sensitivity by exhaustive neighbor scan.
pub fn brute_force_local(v: &VoteHistogram, c: f64) -> Result<f64> {
    let base = v.boost(c)?;
    let mut worst = 0.0f64;
    for w in Neighbors::new(v) {
        let moved = w.boost(c)?;
        worst = worst.max(linf(base.values(), moved.values()));
    }
    Ok(worst)
}

/// Radius-1 smooth sensitivity by exhaustive scan over `v` and its neighbors.
pub fn brute_force_smooth(v: &VoteHistogram, c: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::param("beta", beta));
    }
    let mut worst = 0.0f64;
    for w in Neighbors::new(v) {
        worst = worst.max(brute_force_local(&w, c)?);
    }
    Ok(worst * libm::exp(-beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn h(counts: &[u64]) -> VoteHistogram {
        VoteHistogram::new(counts.to_vec()).unwrap()
    }

    const E_INV: f64 = 0.36787944117144233;

    #[test]
    fn global_examples() {
        assert_eq!(global_sensitivity(0.0).unwrap(), 1.0);
        assert_eq!(global_sensitivity(10.0).unwrap(), 11.0);
        assert_eq!(global_sensitivity(1e100).unwrap(), 1e100);
        assert!(global_sensitivity(-0.5).is_err());
    }

    #[test]
    fn local_examples() {
        assert_eq!(local_sensitivity(&h(&[10, 2, 2]), 5.0).unwrap().value, 1.0);
        assert_eq!(local_sensitivity(&h(&[5, 4, 0]), 5.0).unwrap().value, 6.0);
        assert_eq!(local_sensitivity(&h(&[7, 5, 0]), 0.0).unwrap().value, 1.0);
        assert_eq!(brute_force_local(&h(&[10, 2, 2]), 5.0).unwrap(), 1.0);
        assert_eq!(brute_force_local(&h(&[5, 4, 0]), 5.0).unwrap(), 6.0);
        assert_eq!(brute_force_local(&h(&[2, 2]), 3.0).unwrap(), 4.0);
    }

    #[test]
    fn local_at_gap_two_depends_on_tie_order() {
        // [4,2,0] -> [3,3,0] keeps index 0 on the tie; [2,4,0] -> [3,3,0] does not
        assert_eq!(local_sensitivity(&h(&[4, 2, 0]), 5.0).unwrap().value, 1.0);
        assert_eq!(brute_force_local(&h(&[4, 2, 0]), 5.0).unwrap(), 1.0);
        assert_eq!(local_sensitivity(&h(&[2, 4, 0]), 5.0).unwrap().value, 6.0);
        assert_eq!(brute_force_local(&h(&[2, 4, 0]), 5.0).unwrap(), 6.0);
    }

    #[test]
    fn smooth_examples() {
        let s = smooth_sensitivity(&h(&[10, 2, 2]), 1e100, 1.0).unwrap();
        assert_eq!(s.kind, SensitivityKind::Smooth);
        assert!((s.value - E_INV).abs() < 1e-15);
        assert_eq!(s.beta, 1.0);
        assert_eq!(s.distance_class, 7);

        let s = smooth_sensitivity(&h(&[5, 4, 0]), 9.0, 1.0).unwrap();
        assert!((s.value - 10.0 * E_INV).abs() < 1e-12);
        // gap 3 is not > 3
        let s = smooth_sensitivity(&h(&[6, 3, 0]), 9.0, 1.0).unwrap();
        assert!((s.value - 10.0 * E_INV).abs() < 1e-12);

        assert!(smooth_sensitivity(&h(&[6, 3, 0]), 9.0, 0.0).is_err());
    }

    #[test]
    fn smooth_at_gap_four_depends_on_tie_order() {
        // [2,6,0] -> [3,5,0] has local sensitivity 1 + c
        let s = smooth_sensitivity(&h(&[2, 6, 0]), 9.0, 1.0).unwrap().value;
        let b = brute_force_smooth(&h(&[2, 6, 0]), 9.0, 1.0).unwrap();
        assert!((s - 10.0 * E_INV).abs() < 1e-12);
        assert!((b - s).abs() < 1e-12);
        let s = smooth_sensitivity(&h(&[6, 2, 0]), 9.0, 1.0).unwrap().value;
        let b = brute_force_smooth(&h(&[6, 2, 0]), 9.0, 1.0).unwrap();
        assert!((s - E_INV).abs() < 1e-15);
        assert!((b - s).abs() < 1e-15);
    }

    #[test]
    fn neighbor_enumeration() {
        let n = enumerate_neighbors(&h(&[2, 0]));
        assert_eq!(n, vec![h(&[2, 0]), h(&[1, 1])]);

        let n = enumerate_neighbors(&h(&[1, 1]));
        assert_eq!(n.len(), 3);
        assert!(n.contains(&h(&[2, 0])) && n.contains(&h(&[0, 2])));

        let v = h(&[3, 2, 1]);
        let n = enumerate_neighbors(&v);
        assert_eq!(n.len(), 7);
        for w in &n {
            assert_eq!(w.teachers(), v.teachers());
            let dist: i64 = v
                .counts()
                .iter()
                .zip(w.counts())
                .map(|(&a, &b)| (a as i64 - b as i64).abs())
                .sum();
            assert!(dist == 0 || dist == 2);
        }
    }
}
