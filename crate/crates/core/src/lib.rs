//! Grid-of-beams beam management driven by a Radio Environment Map (REM).
//!
//! The crate is organised along the data flow of the system:
//!
//! * [`channel`] is the ground-truth radio layer (codebook, antenna pattern,
//!   path loss, correlated shadowing, Rayleigh fading).
//! * [`rem`] stores per-tile, per-beam RSRP averages and the UE mobility map.
//! * [`mdp`] turns a REM into a finite MDP and solves it with policy iteration.
//! * [`bm`] holds the runtime controllers (margin baseline, policy lookup,
//!   RLF detection and highest-RSRP fallback).
//! * [`ric`] wires training and enforcement together the way the Non-RT and
//!   Near-RT RIC split them, with in-process A1/E2 message records.
//! * [`sim`] is the burst-clocked road scenario and KPI collection.
//! * [`config`] and [`output`] back the command-line frontend.
//!
//! Data-parallel loops (shadowing fields, REM probe passes, evaluation
//! sweeps, per-UE measurement generation) run on rayon when the `parallel`
//! feature is enabled and fall back to plain iteration otherwise. Results are
//! bit-identical either way.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bm;
pub mod channel;
pub mod config;
pub mod error;
pub mod exec;
pub mod mdp;
pub mod output;
pub mod rem;
pub mod ric;
pub mod sim;

pub use error::{Error, Result};
pub use exec::Execution;

/// Hex-encoded SHA-256 of a byte string. Used for artifact checksums.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
