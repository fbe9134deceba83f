//! Phasor-domain transient simulation of power systems with dual grid-forming
//! converters and synchronous machines.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod devices;
pub mod network;
pub mod engine;
pub mod scenario;
pub mod analysis;
pub mod cli;
