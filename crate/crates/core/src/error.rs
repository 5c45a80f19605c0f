// SPDX-License-Identifier: Apache-2.0

use core::fmt;

/// Errors produced by the core library.
#[derive(Debug, Clone, PartialEq)]
#[non_exhaustive]
pub enum Error {
    /// A histogram needs at least two classes.
    TooFewClasses(usize),
    /// A histogram with zero total votes.
    NoVotes,
    /// A label outside `[0, classes)`.
    LabelOutOfRange { label: usize, classes: usize },
    /// A real-valued parameter outside its domain.
    InvalidParameter { name: &'static str, value: f64 },
    /// An integer parameter outside its domain.
    InvalidCount { name: &'static str, value: u64 },
    /// Two moment curves over different order grids.
    GridMismatch { left: usize, right: usize },
    /// A moment curve without any orders.
    EmptyCurve,
    /// Two parallel inputs of different lengths.
    LengthMismatch { expected: usize, found: usize },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

impl Error {
    pub(crate) fn param(name: &'static str, value: f64) -> Self {
        Error::InvalidParameter { name, value }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::TooFewClasses(n) => write!(f, "histogram needs at least 2 classes, got {n}"),
            Error::NoVotes => write!(f, "histogram has no votes"),
            Error::LabelOutOfRange { label, classes } => {
                write!(f, "label {label} out of range for {classes} classes")
            }
            Error::InvalidParameter { name, value } => {
                write!(f, "invalid value for {name}: {value}")
            }
            Error::InvalidCount { name, value } => write!(f, "invalid value for {name}: {value}"),
            Error::GridMismatch { left, right } => {
                write!(f, "moment order grids differ ({left} vs {right} orders)")
            }
            Error::EmptyCurve => write!(f, "moment curve has no orders"),
            Error::LengthMismatch { expected, found } => {
                write!(f, "length mismatch: expected {expected}, found {found}")
            }
        }
    }
}

impl core::error::Error for Error {}
