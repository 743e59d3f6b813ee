//! Optimal individual-signal eavesdropping on the BB84 protocol.
//!
//! Signals are photon polarizations `x, y` (one basis) and `u, v` (the
//! conjugate basis). An eavesdropper couples each signal to a probe, lets
//! it pass to the receiver, and measures the probe after the basis is
//! announced. The crate builds optimal probes, evaluates the information
//! they yield against the disturbance they cause, and checks the results
//! against closed-form bounds.

pub mod analysis;
pub mod bases;
pub mod bounds;
pub mod error;
pub mod hilbert;
pub mod measurement;
pub mod optimizer;
pub mod probe;
pub mod simplex;
pub mod simulate;
pub mod symmetry;
pub mod tolerance;
pub mod verify;

pub use error::{Error, Result};
pub use tolerance::TOL;
