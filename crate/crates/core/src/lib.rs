//! Joint transmit beamforming and dual-functional RIS reflection design.
//!
//! A dual-functional RIS is two passive reflecting surfaces mounted back to
//! back and joined by a full-duplex amplifier. Face 1 reflects the base-station
//! signal towards nearby users and, through a horn antenna, into the amplifier;
//! face 2 re-radiates the amplified signal to a user behind the surface.
//!
//! The crate is organised as:
//!
//! - [`channel`]: path loss, fading and near-field channel generation.
//! - [`system`]: SINR, sum rate and the two fractional-programming surrogates.
//! - [`optimizer`]: block-coordinate ascent over auxiliary variables,
//!   beamformers and both phase vectors.
//! - [`oracle`]: slow, independent reference computations used for testing.

pub mod channel;
pub mod error;
pub mod linalg;
pub mod optimizer;
pub mod oracle;
pub mod system;
pub mod units;

pub use error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
