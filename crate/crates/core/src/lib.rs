//! Simulation toolkit for quantum steganography over finite-dimensional channels.
//!
//! Layers, bottom up: dense linear algebra and states ([`state`]), CPTP maps
//! ([`channel`]), information measures ([`measures`]), hash encoders ([`hashing`]),
//! the stego protocol builders and verifiers ([`protocols`]), rate evaluators
//! ([`rates`]) and the config-driven experiment runner ([`experiment`]).
//!
//! All logarithms are base 2; rates and entropies are in bits.
//!
//! The state, channel and measure layers are generic over [`Real`] (`f32` or
//! `f64`). The aliases below fix `f64`, which the protocol layer uses throughout.

pub mod channel;
pub mod error;
pub mod experiment;
pub mod hashing;
pub mod linalg;
pub mod measures;
pub mod protocols;
pub mod rates;
pub mod scalar;
pub mod state;

pub use error::{Error, Result};
pub use scalar::Real;

pub type DensityMatrix = state::DensityMatrixT<f64>;
pub type PureState = state::PureStateT<f64>;
pub type HermitianOperator = state::HermitianOperatorT<f64>;
pub type Povm = state::PovmT<f64>;
pub type Schmidt = state::SchmidtT<f64>;
pub type QuantumChannel = channel::QuantumChannelT<f64>;
pub type Isometry = channel::IsometryT<f64>;
pub type CqState = measures::CqStateT<f64>;
