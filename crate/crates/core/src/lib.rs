//! Lennard-Jones chains with nearest and next-to-nearest neighbour
//! interactions: the effective bond energy, the discrete energy and its
//! minimizers, the continuum limit energy, and first-order diagnostics.

pub mod config;
pub mod continuum;
pub mod discrete;
pub mod effective;
pub mod error;
pub mod gamma_dev;
pub mod numeric;
pub mod optimize;
pub mod potentials;

pub use config::{parse_config, ExperimentConfig};
pub use continuum::{ContinuumProfile, Jump};
pub use discrete::{ChainState, EnergyChannels};
pub use effective::{EffectiveProfile, SearchParams};
pub use error::{Error, FieldError, Result};
pub use potentials::{ExternalLoad, InteractionModel};
