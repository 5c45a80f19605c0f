// SPDX-License-Identifier: Apache-2.0

//! Randomized aggregators over teacher votes and their Monte-Carlo oracles.
//!
//! Noise is added to every coordinate, including the boosted one, and the
//! noisy counts stay real-valued.

use alloc::vec;
use alloc::vec::Vec;

use crate::accountant::{LedgerEntry, MechanismKind};
use crate::noise::{laplace_from_uniform, NoiseKind, NoiseSpec, RngStream};
use crate::sensitivity::{smooth_sensitivity, Neighbors, SensitivityEstimate, SensitivityKind};
use crate::votes::{argmax_f64, VoteHistogram};
use crate::{Error, Result};

/// Minimum trial count accepted by the Monte-Carlo oracles.
pub const MIN_TRIALS: u64 = 1_000;

#[derive(Debug, Clone, PartialEq)]
pub struct MechanismOutcome {
    pub returned_label: usize,
    /// FNV-1a digest of the noise vector bits.
    pub noise_digest: Option<u64>,
    pub sensitivity_used: SensitivityEstimate,
    pub ledger_entry: LedgerEntry,
}

fn digest(noise: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for x in noise {
        for byte in x.to_bits().to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// `argmax(values + noise)`, lowest index on ties.
pub fn noisy_argmax(values: &[f64], noise: &[f64]) -> Result<usize> {
    if values.len() != noise.len() {
        return Err(Error::LengthMismatch {
            expected: values.len(),
            found: noise.len(),
        });
    }
    let noisy: Vec<f64> = values.iter().zip(noise).map(|(v, n)| v + n).collect();
    Ok(argmax_f64(&noisy))
}

/// Boosts `v` by `c`, adds one draw of `spec` per class and returns the
/// noisy argmax together with the noise digest.
pub fn immutable_noisy_argmax(
    v: &VoteHistogram,
    c: f64,
    spec: &NoiseSpec,
    rng: &mut RngStream,
) -> Result<(usize, u64)> {
    let boosted = v.boost(c)?;
    let mut noise = vec![0.0; v.classes()];
    spec.fill(rng, &mut noise);
    let label = noisy_argmax(boosted.values(), &noise)?;
    Ok((label, digest(&noise)))
}

/// LNMax: `argmax(v + Lap(Δf/γ))` on the raw counts.
pub fn lnmax(
    v: &VoteHistogram,
    gamma: f64,
    delta_f: f64,
    rng: &mut RngStream,
) -> Result<MechanismOutcome> {
    let spec = NoiseSpec::laplace(gamma, delta_f)?;
    let (label, d) = immutable_noisy_argmax(v, 0.0, &spec, rng)?;
    Ok(MechanismOutcome {
        returned_label: label,
        noise_digest: Some(d),
        sensitivity_used: SensitivityEstimate {
            kind: SensitivityKind::Global,
            value: delta_f,
            beta: 0.0,
            distance_class: v.gap().saturating_sub(1),
        },
        ledger_entry: LedgerEntry::laplace(MechanismKind::LnMax, gamma, delta_f),
    })
}

fn nzc_with(
    v: &VoteHistogram,
    c: f64,
    spec: NoiseSpec,
    sensitivity: SensitivityEstimate,
    rng: &mut RngStream,
) -> Result<MechanismOutcome> {
    let (label, d) = immutable_noisy_argmax(v, c, &spec, rng)?;
    let ledger_entry = match spec {
        NoiseSpec::Laplace { gamma, sensitivity } => {
            LedgerEntry::laplace(MechanismKind::NzcLaplace, gamma, sensitivity)
        }
        NoiseSpec::Gaussian { sigma, sensitivity } => LedgerEntry::gaussian(sigma, sensitivity),
    };
    Ok(MechanismOutcome {
        returned_label: label,
        noise_digest: Some(d),
        sensitivity_used: sensitivity,
        ledger_entry,
    })
}

/// Immutable noisy argmax with Laplace noise `Lap(Δ^S/γ)`, where `Δ^S` is
/// the β-smooth sensitivity of the boosted histogram.
pub fn nzc_laplace(
    v: &VoteHistogram,
    c: f64,
    gamma: f64,
    beta: f64,
    rng: &mut RngStream,
) -> Result<MechanismOutcome> {
    let s = smooth_sensitivity(v, c, beta)?;
    nzc_with(v, c, NoiseSpec::laplace(gamma, s.value)?, s, rng)
}

/// Immutable noisy argmax with a fixed Laplace scale. The ledger charges
/// `γ = Δ^S / scale`.
pub fn nzc_laplace_scaled(
    v: &VoteHistogram,
    c: f64,
    scale: f64,
    beta: f64,
    rng: &mut RngStream,
) -> Result<MechanismOutcome> {
    let s = smooth_sensitivity(v, c, beta)?;
    nzc_with(v, c, NoiseSpec::laplace_with_scale(scale, s.value)?, s, rng)
}

/// Immutable noisy argmax with Gaussian noise `N(0, (Δ^S σ)²)`.
pub fn nzc_gaussian(
    v: &VoteHistogram,
    c: f64,
    sigma: f64,
    beta: f64,
    rng: &mut RngStream,
) -> Result<MechanismOutcome> {
    let s = smooth_sensitivity(v, c, beta)?;
    nzc_with(v, c, NoiseSpec::gaussian(sigma, s.value)?, s, rng)
}

/// Monte-Carlo flip rate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlipEstimate {
    pub flips: u64,
    pub trials: u64,
    pub probability: f64,
    pub std_error: f64,
}

impl FlipEstimate {
    fn new(flips: u64, trials: u64) -> Self {
        let p = flips as f64 / trials as f64;
        Self {
            flips,
            trials,
            probability: p,
            std_error: libm::sqrt(p * (1.0 - p) / trials as f64),
        }
    }
}

fn check_trials(trials: u64) -> Result<()> {
    if trials < MIN_TRIALS {
        Err(Error::InvalidCount {
            name: "trials",
            value: trials,
        })
    } else {
        Ok(())
    }
}

/// Fraction of trials in which `argmax(boost(v, c) + noise) != argmax(v)`.
pub fn flip_probability_mc(
    v: &VoteHistogram,
    c: f64,
    spec: &NoiseSpec,
    trials: u64,
    rng: &mut RngStream,
) -> Result<FlipEstimate> {
    check_trials(trials)?;
    let boosted = v.boost(c)?;
    let values = boosted.values();
    let clean = v.argmax();
    let mut noise = vec![0.0; values.len()];

    let flips = match spec.kind() {
        NoiseKind::Laplace => {
            // A flip needs some |η_j| ≥ margin/2. Draws whose uniforms all
            // stay below the matching threshold skip the log transform; the
            // outcome is the same as transforming every draw.
            let b = spec.scale();
            let margin = boosted.gap();
            let skip_below = if margin > 0.0 {
                0.5 * -libm::expm1(-margin / (2.0 * b)) * (1.0 - 1e-9)
            } else {
                0.0
            };
            let mut uniforms = vec![0.0; values.len()];
            let mut flips = 0u64;
            for _ in 0..trials {
                let mut any_large = false;
                for u in uniforms.iter_mut() {
                    *u = rng.centered_uniform();
                    any_large |= libm::fabs(*u) >= skip_below;
                }
                if !any_large {
                    continue;
                }
                for (n, &u) in noise.iter_mut().zip(&uniforms) {
                    *n = laplace_from_uniform(u, b);
                }
                if noisy_argmax(values, &noise)? != clean {
                    flips += 1;
                }
            }
            flips
        }
        NoiseKind::Gaussian => {
            let mut flips = 0u64;
            for _ in 0..trials {
                spec.fill(rng, &mut noise);
                if noisy_argmax(values, &noise)? != clean {
                    flips += 1;
                }
            }
            flips
        }
    };
    Ok(FlipEstimate::new(flips, trials))
}

/// Largest estimated privacy-loss ratio found by [`dp_ratio_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    pub max_log_ratio: f64,
    pub worst_neighbor: VoteHistogram,
    pub worst_label: usize,
    /// Sensitivity the noise was calibrated to.
    pub sensitivity: f64,
    pub trials: u64,
}

/// `|ln((a + ½) / (b + ½))|`; the half-count keeps empty cells finite.
pub fn log_ratio(a: u64, b: u64) -> f64 {
    libm::fabs(libm::log((a as f64 + 0.5) / (b as f64 + 0.5)))
}

fn label_counts(
    v: &VoteHistogram,
    c: f64,
    spec: &NoiseSpec,
    trials: u64,
    rng: &mut RngStream,
) -> Result<Vec<u64>> {
    let boosted = v.boost(c)?;
    let mut noise = vec![0.0; v.classes()];
    let mut counts = vec![0u64; v.classes()];
    for _ in 0..trials {
        spec.fill(rng, &mut noise);
        counts[noisy_argmax(boosted.values(), &noise)?] += 1;
    }
    Ok(counts)
}

/// Estimates `max |ln(Pr[M(D)=y] / Pr[M(D')=y])|` over every label `y` and
/// every single-vote neighbor `D'` of `v`, with noise `Lap(Δ^S(v)/γ)` used
/// for both sides.
pub fn dp_ratio_check(
    v: &VoteHistogram,
    c: f64,
    gamma: f64,
    beta: f64,
    trials: u64,
    rng: &mut RngStream,
) -> Result<RatioReport> {
    let s = smooth_sensitivity(v, c, beta)?;
    dp_ratio_check_with_sensitivity(v, c, gamma, s.value, trials, rng)
}

/// [`dp_ratio_check`] with an explicit sensitivity, so that deliberately
/// miscalibrated noise can be tested.
pub fn dp_ratio_check_with_sensitivity(
    v: &VoteHistogram,
    c: f64,
    gamma: f64,
    sensitivity: f64,
    trials: u64,
    rng: &mut RngStream,
) -> Result<RatioReport> {
    check_trials(trials)?;
    let spec = NoiseSpec::laplace(gamma, sensitivity)?;
    let base = label_counts(v, c, &spec, trials, rng)?;
    let mut report = RatioReport {
        max_log_ratio: 0.0,
        worst_neighbor: v.clone(),
        worst_label: v.argmax(),
        sensitivity,
        trials,
    };
    for w in Neighbors::new(v).skip(1) {
        let other = label_counts(&w, c, &spec, trials, rng)?;
        for (label, (&a, &b)) in base.iter().zip(&other).enumerate() {
            let r = log_ratio(a, b);
            if r > report.max_log_ratio {
                report.max_log_ratio = r;
                report.worst_neighbor = w.clone();
                report.worst_label = label;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::required_constant_laplace;

    fn h(counts: &[u64]) -> VoteHistogram {
        VoteHistogram::new(counts.to_vec()).unwrap()
    }

    #[test]
    fn lnmax_large_gap_is_stable() {
        let mut counts = vec![0; 10];
        counts[0] = 250;
        let v = h(&counts);
        let mut rng = RngStream::new(1, 0);
        let mut same = 0;
        for _ in 0..10_000 {
            let o = lnmax(&v, 20.0, 1.0, &mut rng).unwrap();
            same += (o.returned_label == 0) as u32;
            assert_eq!(o.ledger_entry.pure_epsilon(), Some(40.0));
        }
        assert!(same as f64 / 10_000.0 >= 0.999);
    }

    #[test]
    fn lnmax_zero_noise_limit() {
        let v = h(&[3, 7, 6]);
        let mut rng = RngStream::new(2, 0);
        for _ in 0..1000 {
            assert_eq!(lnmax(&v, 1e12, 1.0, &mut rng).unwrap().returned_label, 1);
        }
    }

    #[test]
    fn lnmax_symmetric_votes_split_evenly() {
        let v = h(&[5, 5]);
        let mut rng = RngStream::new(3, 0);
        let zeros = (0..10_000)
            .filter(|_| lnmax(&v, 0.5, 1.0, &mut rng).unwrap().returned_label == 0)
            .count();
        assert!((zeros as f64 / 10_000.0 - 0.5).abs() <= 0.02);
    }

    #[test]
    fn nzc_laplace_never_flips_qualified_votes() {
        let v = h(&[10, 2, 2]);
        let mut rng = RngStream::new(4, 0);
        for _ in 0..100_000 {
            let o = nzc_laplace(&v, 1e100, 1e-10, 1.0, &mut rng).unwrap();
            assert_eq!(o.returned_label, 0);
        }
        let o = nzc_laplace(&v, 1e100, 1e-10, 1.0, &mut rng).unwrap();
        assert!((o.sensitivity_used.value - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(o.ledger_entry.mechanism, MechanismKind::NzcLaplace);
        assert_eq!(o.ledger_entry.gamma(), Some(1e-10));
        assert_eq!(o.ledger_entry.pure_epsilon(), Some(2e-10));
    }

    #[test]
    fn nzc_with_unit_sensitivity_and_no_boost_matches_lnmax() {
        let v = h(&[4, 5, 3, 1]);
        let spec = NoiseSpec::laplace(0.7, 1.0).unwrap();
        for stream in 0..500 {
            let mut a = RngStream::new(9, stream);
            let mut b = RngStream::new(9, stream);
            let (label, _) = immutable_noisy_argmax(&v, 0.0, &spec, &mut a).unwrap();
            assert_eq!(label, lnmax(&v, 0.7, 1.0, &mut b).unwrap().returned_label);
        }
    }

    #[test]
    fn nzc_gaussian_examples() {
        let v = h(&[5, 5]);
        let mut rng = RngStream::new(5, 0);
        let zeros = (0..10_000)
            .filter(|_| nzc_gaussian(&v, 0.0, 1.0, 1.0, &mut rng).unwrap().returned_label == 0)
            .count();
        assert!((zeros as f64 / 10_000.0 - 0.5).abs() <= 0.02);

        let v = h(&[3, 8, 1]);
        for _ in 0..1000 {
            let o = nzc_gaussian(&v, 5.0, 1e-12, 1.0, &mut rng).unwrap();
            assert_eq!(o.returned_label, 1);
            assert_eq!(o.ledger_entry.mechanism, MechanismKind::NzcGaussian);
        }
    }

    #[test]
    fn flip_mc_examples() {
        let v = h(&[7, 3, 2]);
        let gamma = 0.5;
        let c = required_constant_laplace(3, 1e-3, gamma).unwrap();
        let spec = NoiseSpec::laplace(gamma, 1.0).unwrap();
        let mut rng = RngStream::new(6, 0);
        let est = flip_probability_mc(&v, c, &spec, 100_000, &mut rng).unwrap();
        assert!(est.probability <= 1e-3 + 3.0 * est.std_error.max(1e-4));

        let est = flip_probability_mc(&h(&[5, 5]), 0.0, &spec, 100_000, &mut rng).unwrap();
        assert!((est.probability - 0.5).abs() < 0.01);

        let tiny = NoiseSpec::laplace(1e12, 1.0).unwrap();
        let est = flip_probability_mc(&h(&[5, 4]), 0.0, &tiny, 10_000, &mut rng).unwrap();
        assert_eq!(est.flips, 0);

        assert!(flip_probability_mc(&v, c, &spec, 10, &mut rng).is_err());
    }

    #[test]
    fn flip_mc_fast_path_matches_plain_count() {
        // same uniforms, every draw transformed
        let v = h(&[6, 4, 1]);
        let spec = NoiseSpec::laplace(1.0, 1.0).unwrap();
        let c = 2.0;
        let est = flip_probability_mc(&v, c, &spec, 20_000, &mut RngStream::new(8, 1)).unwrap();
        let boosted = v.boost(c).unwrap();
        let mut rng = RngStream::new(8, 1);
        let mut flips = 0;
        for _ in 0..20_000 {
            let noise: Vec<f64> = (0..3)
                .map(|_| laplace_from_uniform(rng.centered_uniform(), 1.0))
                .collect();
            flips += (noisy_argmax(boosted.values(), &noise).unwrap() != 0) as u64;
        }
        assert_eq!(est.flips, flips);
    }

    #[test]
    fn log_ratio_of_identical_counts_is_zero() {
        assert_eq!(log_ratio(1234, 1234), 0.0);
        assert_eq!(log_ratio(0, 0), 0.0);
        assert!(log_ratio(1_000_000, 0) > 14.0);
    }

    #[test]
    fn noisy_argmax_checks_lengths() {
        assert!(noisy_argmax(&[1.0, 2.0], &[0.0]).is_err());
        assert_eq!(noisy_argmax(&[1.0, 2.0], &[1.5, 0.0]).unwrap(), 0);
        assert_eq!(noisy_argmax(&[1.0, 2.0], &[1.0, 0.0]).unwrap(), 0);
    }
}
