// SPDX-License-Identifier: Apache-2.0

//! Experiment driver for near-zero-cost private vote aggregation.
//!
//! Builds on [`nzc_core`] with everything that touches the outside world:
//! prediction and ledger file formats, experiment configuration, the
//! end-to-end pipeline, report files and the oracle suites behind
//! `nzc verify`.

pub mod config;
mod error;
pub mod ledger_file;
pub mod number;
pub mod pipeline;
pub mod predictions;
pub mod report;
pub mod verify;

pub use config::{EnsembleSource, ExperimentConfig, LaplaceNoise};
pub use error::{Error, Result};
pub use pipeline::{run_experiment, ExperimentRun};
pub use report::{emit_report, read_report, ExperimentReport};
