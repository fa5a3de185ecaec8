//! Room impulse response simulation and mean absorption estimation.
//!
//! The crate covers the whole chain: random shoebox rooms ([`sampler`]), a
//! hybrid image-source / diffuse-rain simulator ([`sim`]), decay analysis and
//! network input preprocessing ([`dsp`]), Sabine/Eyring estimators
//! ([`baselines`]), small neural regressors trained from scratch ([`nn`]),
//! on-disk datasets ([`dataset`]) and the evaluation runners ([`eval`]).

pub mod baselines;
pub mod dataset;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod nn;
pub mod sampler;
pub mod sim;
pub mod types;
pub mod wav;

pub use error::{Error, Result};
pub use sim::{simulate, Echogram, Rir, SimConfig};
pub use types::{
    mean_absorption, AbsorptionLabel, BandProfile, Face, RoomGeometry, RoomSpec, Surface,
    BAND_CENTERS, N_BANDS,
};
