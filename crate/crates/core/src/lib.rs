// SPDX-License-Identifier: Apache-2.0

//! Catmull-Rom spline tanh in Q2.13 fixed point.
//!
//! [`datapath`] is the bit-accurate evaluator, [`spline`] holds the
//! real-valued reference models, [`analysis`] runs exhaustive error sweeps
//! and [`export`] writes memh tables and reports.

pub mod analysis;
pub mod cli;
pub mod datapath;
pub mod error;
pub mod export;
pub mod qformat;
pub mod spline;
pub mod sweep;

pub use datapath::{BasisFixed, BasisRom, Datapath, DatapathConfig, TStrategy};
pub use error::{Error, Result};
pub use qformat::{FixedWord, QFormat, RoundingMode};
pub use spline::{ControlPointTable, Method};
