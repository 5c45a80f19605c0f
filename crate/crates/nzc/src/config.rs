// SPDX-License-Identifier: Apache-2.0

//! Experiment configuration.
//!
//! [`Settings`] is the flat, all-optional form shared by CLI flags and TOML
//! config files (keys use the flag names, e.g. `teacher-accuracy = 0.8`).
//! Flags override file values; [`ExperimentConfig::from_settings`] then
//! checks every parameter and fills in defaults.

use std::fs;
use std::path::{Path, PathBuf};

use nzc_core::accountant::{MechanismKind, DEFAULT_MAX_ORDER};
use nzc_core::ensemble::{reference_teacher_accuracy, ReferenceTask};
use nzc_core::noise::{required_constant_gaussian, required_constant_laplace};
use serde::Deserialize;

use crate::{Error, Result};

/// Distance thresholds reported by default.
pub const DEFAULT_DISTANCE_GRID: [u64; 8] = [1, 2, 3, 5, 10, 25, 50, 100];

#[derive(Debug, Clone, Default, PartialEq, Deserialize, clap::Args)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Settings {
    /// Number of synthetic teachers.
    #[arg(long)]
    pub teachers: Option<u64>,
    /// Per-teacher accuracy of synthetic teachers [default: tabulated value for --teachers].
    #[arg(long)]
    pub teacher_accuracy: Option<f64>,
    /// Number of classes L [default: 10].
    #[arg(long)]
    pub classes: Option<usize>,
    /// Number of student queries T [default: all queries in --predictions].
    #[arg(long)]
    pub queries: Option<u64>,
    /// lnmax, nzc-laplace or nzc-gaussian.
    #[arg(long)]
    pub mechanism: Option<String>,
    /// Boost constant added to the winning bin [default: derived from --tau].
    #[arg(long)]
    pub c: Option<f64>,
    /// Laplace privacy parameter; noise is Lap(sensitivity/gamma).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Fixed Laplace noise scale, as an alternative to --gamma.
    #[arg(long)]
    pub scale: Option<f64>,
    /// Gaussian noise multiplier; noise std is sensitivity*sigma.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Smooth-sensitivity parameter [default: 1].
    #[arg(long)]
    pub beta: Option<f64>,
    /// Tolerated flip probability used to derive or check c.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Target delta for (epsilon, delta) reporting [default: 1e-5].
    #[arg(long)]
    pub delta: Option<f64>,
    /// RNG seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Teacher prediction file (query_id,teacher_id,label).
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Ground-truth file (query_id,label).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Output directory [default: nzc-out].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated distance thresholds for qualified fractions.
    #[arg(long, value_delimiter = ',')]
    pub distance_grid: Option<Vec<u64>>,
    /// Largest moment order tracked by the accountant [default: 32].
    #[arg(long)]
    pub max_order: Option<usize>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),+) => {
        Settings { $($field: $top.$field.or($base.$field)),+ }
    };
}

impl Settings {
    pub fn from_toml(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Field-wise overlay: values set in `top` win.
    pub fn overlay(self, top: Settings) -> Settings {
        overlay!(
            self, top, teachers, teacher_accuracy, classes, queries, mechanism, c, gamma, scale,
            sigma, beta, tau, delta, seed, predictions, truth, out, distance_grid, max_order
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnsembleSource {
    Synthetic {
        teachers: u64,
        accuracy: f64,
        classes: usize,
    },
    Files {
        predictions: PathBuf,
        truth: Option<PathBuf>,
        classes: usize,
    },
}

impl EnsembleSource {
    pub fn classes(&self) -> usize {
        match *self {
            EnsembleSource::Synthetic { classes, .. } | EnsembleSource::Files { classes, .. } => {
                classes
            }
        }
    }
}

/// How Laplace noise is calibrated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LaplaceNoise {
    /// `Lap(Δ/γ)`.
    Gamma(f64),
    /// `Lap(b)` regardless of sensitivity; accounting charges `γ = Δ/b`.
    Scale(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MechanismConfig {
    LnMax { noise: LaplaceNoise },
    NzcLaplace { c: f64, noise: LaplaceNoise, beta: f64 },
    NzcGaussian { c: f64, sigma: f64, beta: f64 },
}

impl MechanismConfig {
    pub fn kind(&self) -> MechanismKind {
        match self {
            MechanismConfig::LnMax { .. } => MechanismKind::LnMax,
            MechanismConfig::NzcLaplace { .. } => MechanismKind::NzcLaplace,
            MechanismConfig::NzcGaussian { .. } => MechanismKind::NzcGaussian,
        }
    }

    pub fn boost(&self) -> f64 {
        match *self {
            MechanismConfig::LnMax { .. } => 0.0,
            MechanismConfig::NzcLaplace { c, .. } | MechanismConfig::NzcGaussian { c, .. } => c,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: EnsembleSource,
    pub mechanism: MechanismConfig,
    pub tau: Option<f64>,
    /// `None` answers every query of a prediction file.
    pub queries: Option<u64>,
    pub delta: f64,
    pub seed: u64,
    pub distance_grid: Vec<u64>,
    pub max_order: usize,
}

fn fail<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        fail(format!("--{name} must be a positive finite number, got {v}"))
    }
}

fn probability(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        fail(format!("--{name} must lie strictly between 0 and 1, got {v}"))
    }
}

fn laplace_noise(s: &Settings) -> Result<LaplaceNoise> {
    match (s.gamma, s.scale) {
        (Some(g), None) => Ok(LaplaceNoise::Gamma(positive("gamma", g)?)),
        (None, Some(b)) => Ok(LaplaceNoise::Scale(positive("scale", b)?)),
        (Some(_), Some(_)) => fail("give either --gamma or --scale, not both"),
        (None, None) => fail("Laplace mechanisms need --gamma or --scale"),
    }
}

impl ExperimentConfig {
    pub fn from_settings(s: &Settings) -> Result<Self> {
        let classes = s.classes.unwrap_or(10);
        if classes < 2 {
            return fail(format!("--classes must be at least 2, got {classes}"));
        }
        let synthetic = s.teachers.is_some() || s.teacher_accuracy.is_some();
        let source = match (&s.predictions, synthetic) {
            (Some(_), true) => {
                return fail("choose exactly one ensemble source: --teachers or --predictions")
            }
            (Some(predictions), false) => EnsembleSource::Files {
                predictions: predictions.clone(),
                truth: s.truth.clone(),
                classes,
            },
            (None, _) => {
                if s.truth.is_some() {
                    return fail("--truth requires --predictions");
                }
                let Some(teachers) = s.teachers else {
                    return fail("choose an ensemble source: --teachers or --predictions");
                };
                if teachers == 0 {
                    return fail("--teachers must be positive");
                }
                let accuracy = match s.teacher_accuracy {
                    Some(p) => p,
                    None => reference_teacher_accuracy(ReferenceTask::Mnist, teachers).ok_or_else(
                        || Error::Config(format!("no tabulated accuracy for {teachers} teachers; pass --teacher-accuracy")),
                    )?,
                };
                if !(0.0..=1.0).contains(&accuracy) {
                    return fail(format!("--teacher-accuracy must lie in [0, 1], got {accuracy}"));
                }
                EnsembleSource::Synthetic {
                    teachers,
                    accuracy,
                    classes,
                }
            }
        };
        if matches!(source, EnsembleSource::Synthetic { .. }) && s.queries.is_none() {
            return fail("synthetic ensembles need --queries");
        }

        let beta = positive("beta", s.beta.unwrap_or(1.0))?;
        let tau = s.tau.map(|t| probability("tau", t)).transpose()?;
        let delta = probability("delta", s.delta.unwrap_or(1e-5))?;

        let Some(name) = s.mechanism.as_deref() else {
            return fail("--mechanism is required (lnmax, nzc-laplace, nzc-gaussian)");
        };
        let kind = MechanismKind::parse(name)
            .ok_or_else(|| Error::Config(format!("unknown mechanism `{name}`")))?;
        let boost = |derived: Option<f64>| -> Result<f64> {
            match (s.c, derived) {
                (Some(c), _) if c >= 0.0 && c.is_finite() => Ok(c),
                (Some(c), _) => fail(format!("--c must be a non-negative finite number, got {c}")),
                (None, Some(c)) => Ok(c),
                (None, None) => fail("nzc mechanisms need --c or --tau"),
            }
        };
        let mechanism = match kind {
            MechanismKind::LnMax => {
                if s.c.is_some_and(|c| c != 0.0) {
                    return fail("lnmax does not boost; drop --c");
                }
                if s.sigma.is_some() {
                    return fail("lnmax uses Laplace noise; drop --sigma");
                }
                MechanismConfig::LnMax {
                    noise: laplace_noise(s)?,
                }
            }
            MechanismKind::NzcLaplace => {
                if s.sigma.is_some() {
                    return fail("nzc-laplace uses --gamma or --scale, not --sigma");
                }
                let noise = laplace_noise(s)?;
                let derived = tau
                    .map(|t| required_boost_laplace(classes, t, noise, beta))
                    .transpose()?;
                MechanismConfig::NzcLaplace {
                    c: boost(derived)?,
                    noise,
                    beta,
                }
            }
            MechanismKind::NzcGaussian => {
                if s.gamma.is_some() || s.scale.is_some() {
                    return fail("nzc-gaussian uses --sigma, not --gamma/--scale");
                }
                let Some(sigma) = s.sigma else {
                    return fail("nzc-gaussian needs --sigma");
                };
                let sigma = positive("sigma", sigma)?;
                let derived = tau
                    .map(|t| required_boost_gaussian(classes, t, sigma, beta))
                    .transpose()?;
                MechanismConfig::NzcGaussian {
                    c: boost(derived)?,
                    sigma,
                    beta,
                }
            }
        };

        let distance_grid = s
            .distance_grid
            .clone()
            .unwrap_or_else(|| DEFAULT_DISTANCE_GRID.to_vec());
        if distance_grid.is_empty() {
            return fail("--distance-grid needs at least one value");
        }
        let max_order = s.max_order.unwrap_or(DEFAULT_MAX_ORDER);
        if max_order == 0 {
            return fail("--max-order must be at least 1");
        }

        Ok(Self {
            source,
            mechanism,
            tau,
            queries: s.queries,
            delta,
            seed: s.seed.unwrap_or(0),
            distance_grid,
            max_order,
        })
    }

    /// Boost needed for flip probability `τ` on queries whose smooth
    /// sensitivity takes the small branch `e^-β`.
    pub fn required_boost(&self) -> Option<f64> {
        let classes = self.source.classes();
        let tau = self.tau?;
        match self.mechanism {
            MechanismConfig::LnMax { .. } => None,
            MechanismConfig::NzcLaplace { noise, beta, .. } => {
                required_boost_laplace(classes, tau, noise, beta).ok()
            }
            MechanismConfig::NzcGaussian { sigma, beta, .. } => {
                required_boost_gaussian(classes, tau, sigma, beta).ok()
            }
        }
    }
}

fn required_boost_laplace(classes: usize, tau: f64, noise: LaplaceNoise, beta: f64) -> Result<f64> {
    let scale = match noise {
        LaplaceNoise::Gamma(g) => (-beta).exp() / g,
        LaplaceNoise::Scale(b) => b,
    };
    Ok(required_constant_laplace(classes, tau, 1.0 / scale)?)
}

fn required_boost_gaussian(classes: usize, tau: f64, sigma: f64, beta: f64) -> Result<f64> {
    Ok(required_constant_gaussian(classes, tau, (-beta).exp() * sigma)?)
}
