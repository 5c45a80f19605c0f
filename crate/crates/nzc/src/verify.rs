// SPDX-License-Identifier: Apache-2.0

//! Oracle suites behind `nzc verify`.
//!
//! Each suite checks the library against an independent reference (the
//! exhaustive neighbor search, a union bound, the DP definition) and
//! reports a single pass/fail line.

use std::fmt;

use nzc_core::mechanisms::{
    dp_ratio_check, dp_ratio_check_with_sensitivity, flip_probability_mc, noisy_argmax,
};
use nzc_core::noise::required_constant_laplace;
use nzc_core::sensitivity::{
    brute_force_local, brute_force_smooth, enumerate_neighbors, local_sensitivity,
    smooth_sensitivity,
};
use nzc_core::{NoiseSpec, RngStream, VoteHistogram};

use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for SuiteOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {}: {}", self.name, self.detail)
    }
}

/// Sizes for every suite; [`VerifyPlan::full`] matches the acceptance suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyPlan {
    pub seed: u64,
    pub sensitivity_instances: u64,
    pub flip_histograms: u64,
    pub flip_trials: u64,
    pub neighbor_histograms: u64,
    pub ratio_trials: u64,
}

impl VerifyPlan {
    pub fn full(seed: u64) -> Self {
        Self {
            seed,
            sensitivity_instances: 10_000,
            flip_histograms: 1000,
            flip_trials: 100_000,
            neighbor_histograms: 500,
            ratio_trials: 1_000_000,
        }
    }

    pub fn quick(seed: u64) -> Self {
        Self {
            seed,
            sensitivity_instances: 1000,
            flip_histograms: 50,
            flip_trials: 10_000,
            neighbor_histograms: 100,
            ratio_trials: 100_000,
        }
    }
}

/// A random histogram with `1..=max_teachers` votes over `classes` bins.
/// Bin weights are skewed so that both tight and lopsided votes occur.
pub fn random_histogram(rng: &mut RngStream, max_teachers: u64, classes: usize) -> VoteHistogram {
    let teachers = 1 + rng.below(max_teachers);
    let weights: Vec<f64> = (0..classes).map(|_| rng.unit().powi(3)).collect();
    let total: f64 = weights.iter().sum();
    let mut counts = vec![0u64; classes];
    for _ in 0..teachers {
        let mut x = rng.unit() * total;
        let mut bin = classes - 1;
        for (j, w) in weights.iter().enumerate() {
            if x < *w {
                bin = j;
                break;
            }
            x -= w;
        }
        counts[bin] += 1;
    }
    VoteHistogram::new(counts).expect("at least one vote")
}

/// Like [`random_histogram`], redrawn until the plurality is unique.
pub fn random_unique_argmax(rng: &mut RngStream, max_teachers: u64, classes: usize) -> VoteHistogram {
    loop {
        let v = random_histogram(rng, max_teachers, classes);
        if v.gap() > 0 {
            return v;
        }
    }
}

/// A random histogram whose top-two gap exceeds 3.
pub fn random_distance_three(rng: &mut RngStream, max_teachers: u64, classes: usize) -> VoteHistogram {
    let v = random_histogram(rng, max_teachers, classes);
    let mut counts = v.counts().to_vec();
    let top = v.argmax();
    let runner_up = counts
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != top)
        .map(|(_, &n)| n)
        .max()
        .unwrap_or(0);
    counts[top] = counts[top].max(runner_up + 4);
    VoteHistogram::new(counts).expect("at least one vote")
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Closed-form local and smooth sensitivity against exhaustive neighbor
/// enumeration (`t ≤ 64`, `L ≤ 8`).
pub fn sensitivity_suite(plan: &VerifyPlan) -> Result<SuiteOutcome> {
    const BOOSTS: [f64; 4] = [0.0, 1.0, 9.0, 100.0];
    const BETAS: [f64; 3] = [0.5, 1.0, 2.0];
    let mut rng = RngStream::new(plan.seed, 0x5e45);
    let mut mismatches = 0u64;
    for _ in 0..plan.sensitivity_instances {
        let classes = 2 + rng.below(7) as usize;
        let v = random_histogram(&mut rng, 64, classes);
        let c = BOOSTS[rng.below(4) as usize];
        let beta = BETAS[rng.below(3) as usize];
        let local = local_sensitivity(&v, c)?.value;
        let smooth = smooth_sensitivity(&v, c, beta)?.value;
        if !close(local, brute_force_local(&v, c)?) || !close(smooth, brute_force_smooth(&v, c, beta)?) {
            mismatches += 1;
        }
    }
    Ok(SuiteOutcome {
        name: "sensitivity",
        passed: mismatches == 0,
        detail: format!("{mismatches} mismatches in {} instances", plan.sensitivity_instances),
    })
}

/// Flip rate of the boosted mechanism with `c` chosen for `τ = 1e-9`.
pub fn flip_suite(plan: &VerifyPlan) -> Result<SuiteOutcome> {
    let mut rng = RngStream::new(plan.seed, 0xf11b);
    let mut flips = 0u64;
    let mut trials = 0u64;
    for gamma in [1e-3, 1e-6] {
        let c = required_constant_laplace(10, 1e-9, gamma)?;
        let spec = NoiseSpec::laplace(gamma, 1.0)?;
        for _ in 0..plan.flip_histograms {
            let v = random_unique_argmax(&mut rng, 250, 10);
            let est = flip_probability_mc(&v, c, &spec, plan.flip_trials, &mut rng)?;
            flips += est.flips;
            trials += est.trials;
        }
    }
    Ok(SuiteOutcome {
        name: "flip-probability",
        passed: flips == 0,
        detail: format!("{flips} flips in {trials} trials"),
    })
}

/// Shared bounded noise `|η| < c/2` gives every distance-3 histogram and all
/// of its neighbors the same noisy argmax.
pub fn neighbor_suite(plan: &VerifyPlan) -> Result<SuiteOutcome> {
    let mut rng = RngStream::new(plan.seed, 0x4e16);
    let mut violations = 0u64;
    let mut checked = 0u64;
    for _ in 0..plan.neighbor_histograms {
        let classes = 2 + rng.below(9) as usize;
        let v = random_distance_three(&mut rng, 250, classes);
        let bound = 1.0 + 1e3 * rng.unit();
        let c = 2.0 * bound;
        let noise: Vec<f64> = (0..classes).map(|_| 2.0 * bound * rng.centered_uniform()).collect();
        let base = noisy_argmax(v.boost(c)?.values(), &noise)?;
        for w in enumerate_neighbors(&v) {
            checked += 1;
            if noisy_argmax(w.boost(c)?.values(), &noise)? != base {
                violations += 1;
            }
        }
    }
    Ok(SuiteOutcome {
        name: "neighbor-immutability",
        passed: violations == 0,
        detail: format!("{violations} violations over {checked} neighbors"),
    })
}

/// Empirical privacy loss on `[6,3,3]` (γ = 0.5, c = 100, β = 1), plus a
/// negative control where under-scaled noise must exceed the bound.
pub fn ratio_suite(plan: &VerifyPlan) -> Result<SuiteOutcome> {
    const GAMMA: f64 = 0.5;
    let bound = 2.0 * GAMMA + 0.1;
    let mut rng = RngStream::new(plan.seed, 0xd9);
    let v = VoteHistogram::new(vec![6, 3, 3])?;
    let report = dp_ratio_check(&v, 100.0, GAMMA, 1.0, plan.ratio_trials, &mut rng)?;
    let control = VoteHistogram::new(vec![5, 4, 3])?;
    let under = dp_ratio_check_with_sensitivity(
        &control,
        100.0,
        GAMMA,
        (-1.0f64).exp(),
        plan.ratio_trials,
        &mut rng,
    )?;
    let passed = report.max_log_ratio <= bound && under.max_log_ratio > bound;
    Ok(SuiteOutcome {
        name: "dp-ratio",
        passed,
        detail: format!(
            "max log-ratio {:.4} (bound {bound}), under-scaled control {:.4}",
            report.max_log_ratio, under.max_log_ratio
        ),
    })
}

pub fn run_all(plan: &VerifyPlan) -> Result<Vec<SuiteOutcome>> {
    Ok(vec![
        sensitivity_suite(plan)?,
        flip_suite(plan)?,
        neighbor_suite(plan)?,
        ratio_suite(plan)?,
    ])
}
