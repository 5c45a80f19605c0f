// SPDX-License-Identifier: Apache-2.0

//! Moments accountant and closed-form composition.
//!
//! A [`MomentCurve`] stores bounds on the log moment generating function of
//! the privacy loss, `α(λ)`, at integer orders `λ = 1..=max_order`. Curves of
//! sequentially composed mechanisms add pointwise, and the tail bound turns
//! a curve into `(ε, δ)`.
//!
//! The auxiliary input of the accountant is not modelled; adaptivity is
//! captured by the order in which entries are recorded.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Default order grid `1..=32`.
pub const DEFAULT_MAX_ORDER: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct MomentCurve {
    /// `values[i]` is `α(i + 1)`.
    values: Vec<f64>,
}

impl MomentCurve {
    pub fn zeros(max_order: usize) -> Self {
        Self {
            values: alloc::vec![0.0; max_order],
        }
    }

    /// A curve from `α(1), α(2), ...`; every value must be non-negative.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = values.iter().find(|a| !(**a >= 0.0)) {
            return Err(Error::param("moment", bad));
        }
        Ok(Self { values })
    }

    /// Bound `2γ²λ(λ+1)` for one Laplace noisy-argmax query.
    pub fn laplace(gamma: f64, max_order: usize) -> Result<Self> {
        let values = (1..=max_order)
            .map(|l| per_query_moment(gamma, l as u32))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { values })
    }

    pub fn max_order(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `α(order)` for `order` in `1..=max_order`.
    pub fn get(&self, order: usize) -> Option<f64> {
        order.checked_sub(1).and_then(|i| self.values.get(i).copied())
    }

    /// `(λ, α(λ))` pairs in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().enumerate().map(|(i, &a)| (i + 1, a))
    }

    /// Pointwise sum.
    pub fn compose(&self, other: &MomentCurve) -> Result<MomentCurve> {
        let mut out = self.clone();
        out.accumulate(other)?;
        Ok(out)
    }

    pub fn accumulate(&mut self, other: &MomentCurve) -> Result<()> {
        if self.values.len() != other.values.len() {
            return Err(Error::GridMismatch {
                left: self.values.len(),
                right: other.values.len(),
            });
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }
}

/// Per-query moment bound `2γ²l(l+1)` for the Laplace noisy argmax.
pub fn per_query_moment(gamma: f64, l: u32) -> Result<f64> {
    if l < 1 {
        return Err(Error::InvalidCount {
            name: "moment order",
            value: 0,
        });
    }
    if !(gamma >= 0.0) {
        return Err(Error::param("gamma", gamma));
    }
    let l = l as f64;
    Ok(2.0 * gamma * gamma * l * (l + 1.0))
}

/// Tail bound: `δ = min_λ exp(α(λ) − λε)`, clamped to `[0, 1]`.
pub fn delta_for_eps(curve: &MomentCurve, eps: f64) -> Result<f64> {
    if curve.is_empty() {
        return Err(Error::EmptyCurve);
    }
    if !(eps >= 0.0) {
        return Err(Error::param("epsilon", eps));
    }
    let best = curve
        .iter()
        .map(|(l, a)| a - l as f64 * eps)
        .fold(f64::INFINITY, f64::min);
    Ok(libm::exp(best).clamp(0.0, 1.0))
}

/// Smallest grid `ε` with `delta_for_eps(curve, ε) ≤ δ`:
/// `min_λ (α(λ) + ln(1/δ)) / λ`.
pub fn eps_for_delta(curve: &MomentCurve, delta: f64) -> Result<f64> {
    if curve.is_empty() {
        return Err(Error::EmptyCurve);
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::param("delta", delta));
    }
    let log_inv = -libm::log(delta);
    Ok(curve
        .iter()
        .map(|(l, a)| (a + log_inv) / l as f64)
        .fold(f64::INFINITY, f64::min)
        .max(0.0))
}

/// `4Tγ² + 2γ·sqrt(2T·ln(1/δ))` for `T` queries that are each `(2γ, 0)`-DP.
pub fn advanced_composition(queries: u64, gamma: f64, delta: f64) -> Result<f64> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::param("gamma", gamma));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::param("delta", delta));
    }
    let t = queries as f64;
    Ok(4.0 * t * gamma * gamma + 2.0 * gamma * libm::sqrt(2.0 * t * -libm::log(delta)))
}

/// `2γT`: basic composition of `T` pure `(2γ, 0)` queries.
pub fn simple_composition(queries: u64, gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::param("gamma", gamma));
    }
    Ok(2.0 * gamma * queries as f64)
}

/// Classical Gaussian-mechanism bound solved for ε:
/// `ε = sqrt(2 ln(1.25/δ)) / σ`, or `None` when that ε is not below 1 and
/// the bound does not apply.
pub fn gaussian_epsilon(sigma: f64, delta: f64) -> Result<Option<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::param("sigma", sigma));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", delta));
    }
    let eps = libm::sqrt(2.0 * libm::log(1.25 / delta)) / sigma;
    Ok((eps < 1.0).then_some(eps))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MechanismKind {
    LnMax,
    NzcLaplace,
    NzcGaussian,
}

impl MechanismKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MechanismKind::LnMax => "lnmax",
            MechanismKind::NzcLaplace => "nzc-laplace",
            MechanismKind::NzcGaussian => "nzc-gaussian",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lnmax" => Some(MechanismKind::LnMax),
            "nzc-laplace" => Some(MechanismKind::NzcLaplace),
            "nzc-gaussian" => Some(MechanismKind::NzcGaussian),
            _ => None,
        }
    }
}

/// Privacy parameter of one answered query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseParameter {
    /// Laplace noise `Lap(Δ/γ)`.
    Gamma(f64),
    /// Gaussian noise `N(0, Δ²σ²)`.
    Sigma(f64),
}

/// One per-query record in the ledger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerEntry {
    pub mechanism: MechanismKind,
    pub parameter: NoiseParameter,
    /// Sensitivity the noise was calibrated to.
    pub sensitivity: f64,
}

impl LedgerEntry {
    pub fn laplace(mechanism: MechanismKind, gamma: f64, sensitivity: f64) -> Self {
        Self {
            mechanism,
            parameter: NoiseParameter::Gamma(gamma),
            sensitivity,
        }
    }

    pub fn gaussian(sigma: f64, sensitivity: f64) -> Self {
        Self {
            mechanism: MechanismKind::NzcGaussian,
            parameter: NoiseParameter::Sigma(sigma),
            sensitivity,
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self.parameter {
            NoiseParameter::Gamma(g) => Some(g),
            NoiseParameter::Sigma(_) => None,
        }
    }

    /// Each Laplace query is `(2γ, 0)`-DP.
    pub fn pure_epsilon(&self) -> Option<f64> {
        self.gamma().map(|g| 2.0 * g)
    }

    /// Moment bounds of a Laplace entry. Gaussian entries are accounted with
    /// the classical bound instead and have no curve.
    pub fn moments(&self, max_order: usize) -> Result<Option<MomentCurve>> {
        match self.parameter {
            NoiseParameter::Gamma(g) => MomentCurve::laplace(g, max_order).map(Some),
            NoiseParameter::Sigma(_) => Ok(None),
        }
    }
}

/// Outcome of accounting Gaussian queries with the classical bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GaussianBudget {
    /// Summed `(ε, δ)` over all Gaussian queries.
    Composed { epsilon: f64, delta: f64 },
    /// Some query had `ε ≥ 1` where the classical bound does not hold.
    Inapplicable,
}

/// Ordered per-query records with the accumulated moment curve.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyLedger {
    entries: Vec<LedgerEntry>,
    curve: MomentCurve,
}

impl Default for PrivacyLedger {
    fn default() -> Self {
        Self::new(DEFAULT_MAX_ORDER)
    }
}

impl PrivacyLedger {
    pub fn new(max_order: usize) -> Self {
        Self {
            entries: Vec::new(),
            curve: MomentCurve::zeros(max_order),
        }
    }

    pub fn max_order(&self) -> usize {
        self.curve.max_order()
    }

    /// Appends one query and adds its moments to the running curve.
    pub fn record(&mut self, entry: LedgerEntry) -> Result<()> {
        if let Some(m) = entry.moments(self.max_order())? {
            self.curve.accumulate(&m)?;
        }
        self.entries.push(entry);
        Ok(())
    }

    /// By-value form of [`record`](Self::record).
    pub fn compose(mut self, entry: LedgerEntry) -> Result<Self> {
        self.record(entry)?;
        Ok(self)
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    /// Number of answered queries `T`.
    pub fn query_count(&self) -> usize {
        self.entries.len()
    }

    pub fn curve(&self) -> &MomentCurve {
        &self.curve
    }

    fn laplace_gammas(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().filter_map(LedgerEntry::gamma)
    }

    pub fn laplace_queries(&self) -> usize {
        self.laplace_gammas().count()
    }

    pub fn gaussian_queries(&self) -> usize {
        self.entries.len() - self.laplace_queries()
    }

    /// Moments-accountant ε at `delta` for the Laplace queries.
    pub fn moments_epsilon(&self, delta: f64) -> Result<f64> {
        eps_for_delta(&self.curve, delta)
    }

    pub fn moments_delta(&self, eps: f64) -> Result<f64> {
        delta_for_eps(&self.curve, eps)
    }

    /// `Σ 2γ_i` over Laplace queries.
    pub fn simple_epsilon(&self) -> f64 {
        self.laplace_gammas().map(|g| 2.0 * g).sum()
    }

    /// Advanced composition over the Laplace queries, using the largest
    /// per-query `γ` when they differ.
    pub fn advanced_epsilon(&self, delta: f64) -> Result<f64> {
        let gamma = self.laplace_gammas().fold(0.0, f64::max);
        advanced_composition(self.laplace_queries() as u64, gamma, delta)
    }

    /// Classical Gaussian accounting: per-query `(ε_i, δ)` summed over
    /// queries.
    pub fn gaussian_budget(&self, delta: f64) -> Result<GaussianBudget> {
        let mut epsilon = 0.0;
        let mut count = 0u32;
        for entry in &self.entries {
            if let NoiseParameter::Sigma(sigma) = entry.parameter {
                match gaussian_epsilon(sigma, delta)? {
                    Some(e) => epsilon += e,
                    None => return Ok(GaussianBudget::Inapplicable),
                }
                count += 1;
            }
        }
        Ok(GaussianBudget::Composed {
            epsilon,
            delta: delta * count as f64,
        })
    }
}
