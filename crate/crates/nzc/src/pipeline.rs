// SPDX-License-Identifier: Apache-2.0

//! End-to-end experiment: build the teacher ensemble, answer every query
//! with the configured mechanism, account for privacy and summarize.
//!
//! Synthetic query `q` draws its true label and teacher votes from stream
//! `2q` of the seed; its mechanism noise comes from stream `2q + 1`.
//! Queries are answered in parallel but results are always collected and
//! recorded in query order, so the output depends only on the seed.

use std::time::{Duration, Instant};

use nzc_core::accountant::{GaussianBudget, NoiseParameter};
use nzc_core::ensemble::{ensemble_accuracy, qualified_fraction, synth_votes, SyntheticTeacherSpec};
use nzc_core::mechanisms::{lnmax, nzc_gaussian, nzc_laplace, nzc_laplace_scaled};
use nzc_core::sensitivity::global_sensitivity;
use nzc_core::{MechanismOutcome, PrivacyLedger, RngStream, VoteHistogram};
use rayon::prelude::*;

use crate::config::{EnsembleSource, ExperimentConfig, LaplaceNoise, MechanismConfig};
use crate::number::Real;
use crate::predictions::load_predictions;
use crate::report::{
    AccuracySummary, BoostSummary, ConfigEcho, ExperimentReport, PrivacySummary, QualifiedPoint,
    QueryRow, Summary,
};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub report: ExperimentReport,
    pub ledger: PrivacyLedger,
    /// Wall-clock time; not part of any output file.
    pub runtime: Duration,
}

struct Query {
    id: u64,
    truth: Option<usize>,
    histogram: VoteHistogram,
}

fn synthetic_queries(teachers: u64, accuracy: f64, classes: usize, count: u64, seed: u64) -> Result<Vec<Query>> {
    let spec = SyntheticTeacherSpec::new(teachers, accuracy, classes)?;
    (0..count)
        .into_par_iter()
        .map(|q| {
            let mut rng = RngStream::new(seed, 2 * q);
            let truth = rng.below(classes as u64) as usize;
            Ok(Query {
                id: q,
                truth: Some(truth),
                histogram: synth_votes(&spec, truth, &mut rng)?,
            })
        })
        .collect()
}

fn answer(cfg: &MechanismConfig, v: &VoteHistogram, rng: &mut RngStream) -> Result<MechanismOutcome> {
    Ok(match *cfg {
        MechanismConfig::LnMax { noise } => {
            let delta_f = global_sensitivity(0.0)?;
            let gamma = match noise {
                LaplaceNoise::Gamma(g) => g,
                LaplaceNoise::Scale(b) => delta_f / b,
            };
            lnmax(v, gamma, delta_f, rng)?
        }
        MechanismConfig::NzcLaplace { c, noise: LaplaceNoise::Gamma(g), beta } => {
            nzc_laplace(v, c, g, beta, rng)?
        }
        MechanismConfig::NzcLaplace { c, noise: LaplaceNoise::Scale(b), beta } => {
            nzc_laplace_scaled(v, c, b, beta, rng)?
        }
        MechanismConfig::NzcGaussian { c, sigma, beta } => nzc_gaussian(v, c, sigma, beta, rng)?,
    })
}

fn opt(x: Option<f64>) -> Option<Real> {
    x.map(Real::new)
}

fn echo(cfg: &ExperimentConfig) -> ConfigEcho {
    let (source, teachers, accuracy, predictions, truth) = match &cfg.source {
        EnsembleSource::Synthetic { teachers, accuracy, .. } => {
            ("synthetic", *teachers, Some(*accuracy), None, None)
        }
        EnsembleSource::Files { predictions, truth, .. } => (
            "files",
            0,
            None,
            Some(predictions.display().to_string()),
            truth.as_ref().map(|t| t.display().to_string()),
        ),
    };
    let (gamma, scale, sigma, beta) = match cfg.mechanism {
        MechanismConfig::LnMax { noise } | MechanismConfig::NzcLaplace { noise, .. } => {
            let beta = match cfg.mechanism {
                MechanismConfig::NzcLaplace { beta, .. } => Some(beta),
                _ => None,
            };
            match noise {
                LaplaceNoise::Gamma(g) => (Some(g), None, None, beta),
                LaplaceNoise::Scale(b) => (None, Some(b), None, beta),
            }
        }
        MechanismConfig::NzcGaussian { sigma, beta, .. } => (None, None, Some(sigma), Some(beta)),
    };
    ConfigEcho {
        source: source.to_owned(),
        teachers,
        teacher_accuracy: opt(accuracy),
        predictions,
        truth,
        classes: cfg.source.classes(),
        mechanism: cfg.mechanism.kind().as_str().to_owned(),
        c: Real::new(cfg.mechanism.boost()),
        gamma: opt(gamma),
        scale: opt(scale),
        sigma: opt(sigma),
        beta: opt(beta),
        tau: opt(cfg.tau),
        delta: Real::new(cfg.delta),
        seed: cfg.seed,
        max_order: cfg.max_order,
    }
}

fn privacy(ledger: &PrivacyLedger, delta: f64, mechanism: &MechanismConfig) -> Result<PrivacySummary> {
    let laplace = ledger.laplace_queries();
    let gaussian = ledger.gaussian_queries();
    let laplace_mech = !matches!(mechanism, MechanismConfig::NzcGaussian { .. });
    let mut s = PrivacySummary {
        delta: Real::new(delta),
        laplace_queries: laplace as u64,
        gaussian_queries: gaussian as u64,
        moments_epsilon: None,
        simple_epsilon: None,
        advanced_epsilon: None,
        max_gamma: None,
        gaussian_epsilon: None,
        gaussian_delta: None,
        gaussian_bound_applicable: None,
    };
    if laplace_mech {
        if laplace == 0 {
            // No query answered, nothing spent.
            s.moments_epsilon = Some(Real::new(0.0));
            s.simple_epsilon = Some(Real::new(0.0));
            s.advanced_epsilon = Some(Real::new(0.0));
        } else {
            s.moments_epsilon = Some(Real::new(ledger.moments_epsilon(delta)?));
            s.simple_epsilon = Some(Real::new(ledger.simple_epsilon()));
            s.advanced_epsilon = Some(Real::new(ledger.advanced_epsilon(delta)?));
            let max_gamma = ledger
                .entries()
                .iter()
                .filter_map(|e| e.gamma())
                .fold(0.0, f64::max);
            s.max_gamma = Some(Real::new(max_gamma));
        }
    } else {
        match ledger.gaussian_budget(delta)? {
            GaussianBudget::Composed { epsilon, delta } => {
                s.gaussian_epsilon = Some(Real::new(epsilon));
                s.gaussian_delta = Some(Real::new(delta));
                s.gaussian_bound_applicable = Some(true);
            }
            GaussianBudget::Inapplicable => s.gaussian_bound_applicable = Some(false),
        }
    }
    Ok(s)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    let start = Instant::now();
    let queries = match &cfg.source {
        EnsembleSource::Synthetic { teachers, accuracy, classes } => {
            let count = cfg.queries.ok_or_else(|| Error::Config("synthetic ensembles need --queries".into()))?;
            synthetic_queries(*teachers, *accuracy, *classes, count, cfg.seed)?
        }
        EnsembleSource::Files { predictions, truth, classes } => {
            let table = load_predictions(predictions, truth.as_deref(), *classes)?;
            let available = table.len() as u64;
            let count = match cfg.queries {
                Some(q) if q > available => {
                    return Err(Error::Config(format!(
                        "--queries {q} exceeds the {available} queries in {}",
                        predictions.display()
                    )))
                }
                Some(q) => q,
                None => available,
            };
            (0..count as usize)
                .map(|i| Query {
                    id: table.query_ids()[i],
                    truth: table.truth(i),
                    histogram: table.histogram(i),
                })
                .collect()
        }
    };

    let outcomes: Vec<MechanismOutcome> = queries
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            let mut rng = RngStream::new(cfg.seed, 2 * i as u64 + 1);
            answer(&cfg.mechanism, &q.histogram, &mut rng)
        })
        .collect::<Result<_>>()?;

    let mut ledger = PrivacyLedger::new(cfg.max_order);
    for o in &outcomes {
        ledger.record(o.ledger_entry)?;
    }

    let histograms: Vec<VoteHistogram> = queries.iter().map(|q| q.histogram.clone()).collect();
    let labels: Vec<usize> = outcomes.iter().map(|o| o.returned_label).collect();

    let agreement = ensemble_accuracy(&histograms, &labels_of(&histograms), &labels)?.agreement;
    let mut lh = Vec::new();
    let mut lt = Vec::new();
    let mut ll = Vec::new();
    for ((q, h), &l) in queries.iter().zip(&histograms).zip(&labels) {
        if let Some(t) = q.truth {
            lh.push(h.clone());
            lt.push(t);
            ll.push(l);
        }
    }
    let accuracy = if lh.is_empty() {
        None
    } else {
        let acc = ensemble_accuracy(&lh, &lt, &ll)?;
        Some(AccuracySummary {
            labelled_queries: lh.len() as u64,
            clean: Real::new(acc.clean),
            mechanism: Real::new(acc.mechanism),
            agreement: Real::new(agreement),
        })
    };

    let required_c = cfg.required_boost();
    let boost = BoostSummary {
        required_c: opt(required_c),
        meets_tau: required_c.map(|r| cfg.mechanism.boost() >= r),
        qualified_queries: histograms.iter().filter(|h| h.flip_distance() >= 3).count() as u64,
    };
    let qualified = cfg
        .distance_grid
        .iter()
        .map(|&n| QualifiedPoint {
            n,
            fraction: Real::new(qualified_fraction(&histograms, n)),
        })
        .collect();

    let rows = queries
        .iter()
        .zip(&outcomes)
        .map(|(q, o)| QueryRow {
            query_id: q.id,
            truth: q.truth,
            clean_label: q.histogram.argmax(),
            returned_label: o.returned_label,
            gap: q.histogram.gap(),
            flip_distance: q.histogram.flip_distance(),
            sensitivity: Real::new(o.sensitivity_used.value),
            parameter: Real::new(match o.ledger_entry.parameter {
                NoiseParameter::Gamma(g) => g,
                NoiseParameter::Sigma(s) => s,
            }),
        })
        .collect();

    let summary = Summary {
        config: echo(cfg),
        queries: queries.len() as u64,
        boost,
        accuracy,
        qualified,
        privacy: privacy(&ledger, cfg.delta, &cfg.mechanism)?,
    };
    Ok(ExperimentRun {
        report: ExperimentReport { summary, queries: rows },
        ledger,
        runtime: start.elapsed(),
    })
}

fn labels_of(histograms: &[VoteHistogram]) -> Vec<usize> {
    histograms.iter().map(VoteHistogram::argmax).collect()
}
