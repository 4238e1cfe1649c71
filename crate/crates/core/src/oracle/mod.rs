//! Synthetic stand-ins for the trained supernetwork and the device latency table.

mod latency;
mod supernet;

pub use latency::{gen_latency, LatencyModel, LatencyRanges};
pub use supernet::{OracleFile, OracleParams, SyntheticSupernet};
