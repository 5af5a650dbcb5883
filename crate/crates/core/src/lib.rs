//! Desk-scale simulator of an inter-operator energy-saving market.
//!
//! Mobile operators sharing a coverage area can hand load to each other and
//! power down base stations that end up empty. This crate builds each
//! operator's energy-cost-versus-load curve from a physical downlink model
//! (wrap-around hex grid, log-normal shadowing, flow-level congestion, a
//! realistic power amplifier), turns those curves into unit bids and asks,
//! and clears the resulting double auction with a budget-balanced,
//! truthfulness-preserving rule.
//!
//! Modules, bottom up:
//! - [`geometry`]: the 19-cell wrap-around hexagonal layout and the user grid.
//! - [`radio`]: path loss, shadowing, interference aggregation, outage rate.
//! - [`energy`]: per-operator energy model and the cost-curve builder.
//! - [`market`]: order books, the double-auction rule, the clearinghouse,
//!   a brute-force welfare oracle, and audit probes.
//! - [`config`]: the `key = value` experiment-config format.
//! - [`harness`]: experiment drivers and CSV emitters behind the CLI.

pub mod config;
pub mod energy;
pub mod geometry;
pub mod harness;
pub mod market;
pub mod radio;
