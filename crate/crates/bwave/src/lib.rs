//! Discrete-event simulator and statistical harness for a preferred-frame
//! model of entangled-photon correlations in which the collapse of the
//! partner photon is carried by a finite-speed superluminal wave (a
//! "B-wave") that retraces the first photon's path back to the source and
//! then chases the second photon.
//!
//! The crate is organised as a pure quantum kernel ([`polarization`]), the
//! preferred-frame timing algebra ([`geometry`]), the per-trial event engine
//! ([`engine`]), a three-qubit signaling protocol ([`ghz`]), Monte Carlo
//! estimation and hypothesis testing ([`harness`]), and the scenario-file /
//! result-emission plumbing used by the `bwave` binary ([`scenario`],
//! [`emit`], [`cli`]).

pub mod cli;
pub mod emit;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod ghz;
pub mod harness;
pub mod polarization;
pub mod scenario;

pub use error::{Error, Result};
