//! Physics-guided diffusion for indoor scene layouts.
//!
//! Object poses are denoised by a graph-attention network conditioned on
//! spatial and physical relation graphs, while differentiable collision,
//! gravity and support-relation energies steer the reverse chain toward
//! physically plausible arrangements. The [`metrics`] module scores the
//! output with mesh-level plausibility measures and a quasi-static settler.

pub mod ad;
pub mod diffusion;
pub mod error;
pub mod geom;
pub mod guidance;
pub mod metrics;
pub mod nn;
pub mod scene;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};
