//! Deterministic multi-agent crowd simulator.
//!
//! A rectangular field is partitioned into four half-cell-shifted grid
//! layers and watched by congestion detectors (naive density, free-flow
//! counting, trapped-humans, macro-micro group analysis). Positive verdicts
//! are grown into regions by a FIFO expansion over the overlapping layers
//! and handed to a flying control agent that dissolves the congestion by
//! slowing subgroups or leading groups out on straight or semicircular
//! paths, escalating to the police when the crowd stops obeying.
//!
//! Determinism contract: identical (scenario, seed, dt) produce
//! byte-identical run traces for any worker count.

pub mod control;
pub mod detection;
pub mod dynamics;
pub mod harness;
pub mod world;

#[cfg(test)]
pub(crate) mod testutil;
