//! Linear mountain-wave solver on the upper half-plane.
//!
//! The library maps a background atmospheric profile to a stationary Scorer
//! equation in Liouville normal form, builds the associated Green's kernel
//! through its spectral transform (split into evanescent, radiated, and
//! trapped pieces under the outgoing radiation condition), and convolves the
//! kernel with terrain forcing to produce vertical-velocity fields.

pub mod atmosphere;
pub mod cli;
pub mod error;
pub mod field;
pub mod io;
pub mod kernel;
pub mod oracles;
pub mod spectral;
pub mod util;

pub use error::{LeewaveError, Result};
