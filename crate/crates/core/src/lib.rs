//! Statistical millimeter-wave channel simulator.
//!
//! Generates omnidirectional channel impulse responses from a
//! time-cluster / spatial-lobe model, derives directional and small-scale
//! power delay profiles, and builds MIMO-OFDM channel matrices.

pub mod analysis;
pub mod config;
pub mod directional;
pub mod mimo;
pub mod output;
pub mod params;
pub mod pathloss;
pub mod plot;
pub mod runner;
pub mod sscm;
