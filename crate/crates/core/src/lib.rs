//! Monte Carlo simulation of LPWAN uplinks (LoRa, NB-IoT, SigFox) towards
//! terrestrial gateways, UAVs, HAPs and LEO satellites, with a LEO offloading
//! optimizer.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod model;

pub use error::{Error, Result};
pub mod phy;
pub mod sim;
pub mod coverage;
pub mod offload;
pub mod config;
pub mod experiments;
pub mod cli;
