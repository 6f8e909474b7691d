//! Simulation and greedy configuration of 1-bit reconfigurable intelligent
//! surfaces (RIS) for physical-layer secrecy between a legitimate user (LU)
//! and an eavesdropper (ED).
//!
//! The crate covers the whole chain: geometry and multipath channels
//! ([`geometry`]), the binary surface and its reflection response ([`ris`]),
//! tone and OFDM/PRS waveforms with the received-signal model ([`ofdm`]),
//! powers and secrecy spectral efficiency ([`secrecy`]), the greedy
//! optimizers and an exhaustive oracle ([`optimizers`]), sector codebooks
//! ([`codebook`]) and the experiment drivers behind the CLI
//! ([`experiment`]).

pub mod codebook;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod ofdm;
pub mod optimizers;
pub mod output;
pub mod ris;
pub mod scenario;
pub mod secrecy;
pub(crate) mod serde_util;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};
pub use geometry::{build_default_geometry, synthesize_channels, ChannelParams, ChannelSet, Placement, SectorGrid, Wavefront};
pub use ofdm::{build_prs_grid, receive, Numerology, ResourceGrid, TxMode, TxSignal};
pub use optimizers::{
    algorithm1, algorithm2, ed_min, exhaustive_oracle, lu_max, uniform_config, Evaluator, Method, ObjectiveKind,
    OptimizerOptions, OptimizerTrace,
};
pub use ris::{build_response, ElementModel, RisArrayGeometry, RisConfig, RisResponse};
pub use scenario::Scenario;
pub use secrecy::{power_ratio, received_power, sum_sse, LinkPowers, SecrecyReport};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// The two receivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum User {
    Lu,
    Ed,
}
