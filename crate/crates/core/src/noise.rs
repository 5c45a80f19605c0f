// SPDX-License-Identifier: Apache-2.0

//! Seeded noise samplers, tail probabilities and required boost constants.
//!
//! Logarithms are natural logs throughout, matching the tail identity
//! `Pr(|Lap(1/γ)| ≥ c) = e^{-γc}`.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// A reproducible random stream addressed by `(seed, stream)`.
///
/// Distinct stream indices under one seed are independent ChaCha streams, so
/// callers can hand one index to each query and process queries in any order.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform on the open interval `(-0.5, 0.5)`; never exactly zero.
    pub fn centered_uniform(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        let k = self.rng.next_u64() >> 11;
        (k as f64 + 0.5) * SCALE - 0.5
    }

    /// Uniform on `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        (self.rng.next_u64() >> 11) as f64 * SCALE
    }

    /// Uniform integer in `[0, n)`, `n > 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        // Lemire's multiply-shift with rejection.
        let mut m = (self.rng.next_u64() as u128) * (n as u128);
        if (m as u64) < n {
            let threshold = n.wrapping_neg() % n;
            while (m as u64) < threshold {
                m = (self.rng.next_u64() as u128) * (n as u128);
            }
        }
        (m >> 64) as u64
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Inverse-CDF transform of a centered uniform draw into `Lap(b)`.
#[inline]
pub(crate) fn laplace_from_uniform(u: f64, b: f64) -> f64 {
    let magnitude = -b * libm::log1p(-2.0 * libm::fabs(u));
    if u < 0.0 {
        -magnitude
    } else {
        magnitude
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::param(name, value))
    }
}

/// One draw from the Laplace distribution with location 0 and scale `b`.
pub fn sample_laplace(b: f64, rng: &mut RngStream) -> Result<f64> {
    let b = positive("laplace scale", b)?;
    Ok(laplace_from_uniform(rng.centered_uniform(), b))
}

/// One draw from `N(0, sigma²)`.
pub fn sample_gaussian(sigma: f64, rng: &mut RngStream) -> Result<f64> {
    let sigma = positive("sigma", sigma)?;
    let z: f64 = StandardNormal.sample(rng);
    Ok(sigma * z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    Laplace,
    Gaussian,
}

/// Noise calibration: a privacy parameter together with the sensitivity it
/// is applied to.
///
/// Laplace noise has scale `b = sensitivity / gamma`. Gaussian noise has
/// standard deviation `sensitivity * sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    Laplace { gamma: f64, sensitivity: f64 },
    Gaussian { sigma: f64, sensitivity: f64 },
}

impl NoiseSpec {
    pub fn laplace(gamma: f64, sensitivity: f64) -> Result<Self> {
        Ok(NoiseSpec::Laplace {
            gamma: positive("gamma", gamma)?,
            sensitivity: positive("sensitivity", sensitivity)?,
        })
    }

    /// Laplace noise given directly by its scale; `gamma` becomes
    /// `sensitivity / scale`.
    pub fn laplace_with_scale(scale: f64, sensitivity: f64) -> Result<Self> {
        let scale = positive("laplace scale", scale)?;
        let sensitivity = positive("sensitivity", sensitivity)?;
        Self::laplace(sensitivity / scale, sensitivity)
    }

    pub fn gaussian(sigma: f64, sensitivity: f64) -> Result<Self> {
        Ok(NoiseSpec::Gaussian {
            sigma: positive("sigma", sigma)?,
            sensitivity: positive("sensitivity", sensitivity)?,
        })
    }

    pub fn kind(&self) -> NoiseKind {
        match self {
            NoiseSpec::Laplace { .. } => NoiseKind::Laplace,
            NoiseSpec::Gaussian { .. } => NoiseKind::Gaussian,
        }
    }

    pub fn sensitivity(&self) -> f64 {
        match *self {
            NoiseSpec::Laplace { sensitivity, .. } | NoiseSpec::Gaussian { sensitivity, .. } => {
                sensitivity
            }
        }
    }

    /// Laplace scale `b`, or Gaussian standard deviation.
    pub fn scale(&self) -> f64 {
        match *self {
            NoiseSpec::Laplace { gamma, sensitivity } => sensitivity / gamma,
            NoiseSpec::Gaussian { sigma, sensitivity } => sensitivity * sigma,
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        let scale = self.scale();
        match self.kind() {
            NoiseKind::Laplace => laplace_from_uniform(rng.centered_uniform(), scale),
            NoiseKind::Gaussian => {
                let z: f64 = StandardNormal.sample(rng);
                scale * z
            }
        }
    }

    pub fn fill(&self, rng: &mut RngStream, out: &mut [f64]) {
        for x in out {
            *x = self.sample(rng);
        }
    }

    /// `Pr(|noise| ≥ c)` for one coordinate: exact for Laplace, the
    /// sub-Gaussian bound for Gaussian.
    pub fn tail(&self, c: f64) -> f64 {
        match self.kind() {
            NoiseKind::Laplace => laplace_tail(c, 1.0 / self.scale()),
            NoiseKind::Gaussian => gaussian_tail_bound(c, self.scale()),
        }
    }
}

/// `Pr(|ζ| ≥ c) = e^{-γc}` for `ζ ~ Lap(1/γ)`; 1 for `c ≤ 0`.
pub fn laplace_tail(c: f64, gamma: f64) -> f64 {
    if c <= 0.0 {
        return 1.0;
    }
    libm::exp(-gamma * c).min(1.0)
}

/// `min(1, 2e^{-c²/(2σ²)})` for `ξ ~ N(0, σ²)`.
pub fn gaussian_tail_bound(c: f64, sigma: f64) -> f64 {
    if c <= 0.0 {
        return 1.0;
    }
    (2.0 * libm::exp(-(c * c) / (2.0 * sigma * sigma))).min(1.0)
}

/// Union bound on `Pr(max_j |noise_j| ≥ c)` over `classes` coordinates.
pub fn union_flip_bound(classes: usize, spec: &NoiseSpec, c: f64) -> f64 {
    (classes as f64 * spec.tail(c)).min(1.0)
}

fn check_tau(tau: f64) -> Result<f64> {
    if tau > 0.0 && tau < 1.0 {
        Ok(tau)
    } else {
        Err(Error::param("tau", tau))
    }
}

fn check_classes(classes: usize) -> Result<f64> {
    if classes == 0 {
        Err(Error::InvalidCount {
            name: "classes",
            value: 0,
        })
    } else {
        Ok(classes as f64)
    }
}

/// Boost constant `(1/γ)·ln(L/τ)` keeping the Laplace flip bound at `τ`.
pub fn required_constant_laplace(classes: usize, tau: f64, gamma: f64) -> Result<f64> {
    let l = check_classes(classes)?;
    let tau = check_tau(tau)?;
    let gamma = positive("gamma", gamma)?;
    Ok(libm::log(l / tau) / gamma)
}

/// Boost constant `sqrt(2σ²·ln(2L/τ))` keeping the Gaussian flip bound at `τ`.
pub fn required_constant_gaussian(classes: usize, tau: f64, sigma: f64) -> Result<f64> {
    let l = check_classes(classes)?;
    let tau = check_tau(tau)?;
    let sigma = positive("sigma", sigma)?;
    Ok(libm::sqrt(2.0 * sigma * sigma * libm::log(2.0 * l / tau)))
}
