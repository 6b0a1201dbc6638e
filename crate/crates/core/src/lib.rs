//! Neutrino flavor oscillations on a few-qubit circuit simulator.
//!
//! Flavors live on two qubits (e = |00⟩, μ = |01⟩, τ = |10⟩, x = |11⟩).
//! Circuits are checked against the closed-form and matrix oracles in
//! [`oracle`], and the [`harness`] turns a JSON config into CSV and JSON
//! reports.

pub mod acceptance;
pub mod circuits;
pub mod error;
pub mod fit;
pub mod flavor;
pub mod harness;
pub mod mitigation;
pub mod oracle;
pub mod quantum;
pub mod units;

pub use error::{Error, Result};
