// SPDX-License-Identifier: Apache-2.0

//! Near-zero-cost private aggregation of teacher votes.
//!
//! This crate is `no_std` (it needs `alloc`) and holds the pure algorithmic
//! pieces:
//!
//!  - [`votes`]: vote histograms, tie-broken argmax, gaps and the boost
//!    transformation that adds a constant to the winning bin.
//!  - [`sensitivity`]: global, local and smooth sensitivity of the boosted
//!    voting function, with a neighbor-enumeration oracle.
//!  - [`noise`]: seeded Laplace/Gaussian samplers, tail bounds and the
//!    boost constants needed for a target flip probability.
//!  - [`mechanisms`]: LNMax and the immutable noisy argmax aggregators plus
//!    Monte-Carlo oracles (flip rate, privacy-loss ratio).
//!  - [`accountant`]: moments accountant ledger and closed-form composition.
//!  - [`ensemble`]: teacher simulation, partitioning and ensemble statistics.
//!
//! File formats, the experiment pipeline and the CLI live in the `nzc` crate.

#![no_std]
#![forbid(unsafe_code)]
// `!(x >= 0.0)` style checks reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod accountant;
pub mod ensemble;
mod error;
pub mod mechanisms;
pub mod noise;
pub mod sensitivity;
pub mod votes;

pub use error::{Error, Result};

pub use accountant::{LedgerEntry, MomentCurve, PrivacyLedger};
pub use mechanisms::MechanismOutcome;
pub use noise::{NoiseSpec, RngStream};
pub use sensitivity::{SensitivityEstimate, SensitivityKind};
pub use votes::{BoostedVotes, QueryRecord, VoteHistogram};
