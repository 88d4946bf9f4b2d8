//! Automatic differentiation: forward-mode duals for the guidance energies
//! and a reverse-mode tape for the denoiser network.

pub mod dual;
pub mod tape;

pub use dual::{Dual, Real, V3};
