//! Compress-and-forward relaying over binary erasure channels with nested
//! LDGM-LDPC codes.
//!
//! A source broadcasts a codeword to a relay and a destination over two
//! independent erasure links. Instead of decoding, the relay losslessly
//! compresses its three-valued observation (bit or erasure) down to a short
//! syndrome plus a small list of flipped positions, and the destination
//! reconstructs the relay observation exactly using its own channel output as
//! side information before decoding the source message from the combined view.
//!
//! The crate covers the full pipeline:
//!
//! - [`channel`]: the erasure broadcast channel and reference rates.
//! - [`dist`] / [`exit`]: degree distributions and the mutual-information
//!   curve evaluators used for code design.
//! - [`lp`]: the small dense simplex solver behind the designs.
//! - [`design`]: the three degree-distribution optimizations (source code,
//!   quantizer, syndrome code).
//! - [`graph`]: sampling concrete sparse bipartite graphs from the designed
//!   ensembles, with a persistent text format.
//! - [`ldpc`]: systematic encoding and erasure (peeling) decoding of the
//!   source code.
//! - [`compress`]: relay-side quantization and destination-side joint
//!   reconstruction of the relay observation.
//! - [`sim`]: end-to-end Monte Carlo blocks with rate and capacity accounting.
//! - [`config`] / [`cli`]: declarative experiment configs and the command
//!   entry points used by the `cf-relay` binary.
//!
//! See the crate examples for runnable walk-throughs of each stage.

pub mod channel;
pub mod cli;
pub mod compress;
pub mod config;
pub mod design;
pub mod dist;
pub mod error;
pub mod exit;
pub mod gf2;
pub mod graph;
pub mod ldpc;
pub mod lp;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
