pub mod analysis;
pub mod error;
pub mod evolution;
pub mod fock;
pub mod heralding;
pub mod interferometer;
pub mod numfmt;
pub mod schemes;
pub mod verify;

pub use error::{HeraldError, Result};
pub use fock::{Amplitude, FockState, ModeIndex, ModeLayout, StateVector};
pub use interferometer::{Provenance, Unitary};
