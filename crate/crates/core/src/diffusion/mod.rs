//! DDPM schedule, forward corruption and the guided reverse sampler.

pub mod sampler;
pub mod schedule;

use ndarray::Array2;

use crate::nn::GeometryFeatures;
use crate::scene::Scene;
use crate::Result;

pub use sampler::{
    denormalize, forward_sample, normalize, reverse_step, sample_scene, GuidanceShift, SampleOutput, SamplerConfig,
    TraceEntry,
};
pub use schedule::{make_schedule, NoiseSchedule, ScheduleKind};

/// What a denoiser sees at one reverse step.
pub struct DenoiseInput<'a> {
    /// Normalized N×9 state.
    pub x_t: &'a Array2<f64>,
    pub t: usize,
    /// Meshes, descriptors and relation graphs; poses are ignored.
    pub template: &'a Scene,
    pub geometry: Option<&'a GeometryFeatures>,
    /// Cached output of [`Denoiser::encode_geometry`] for `geometry`.
    pub geometry_tokens: Option<&'a Array2<f64>>,
}

/// Anything predicting the injected noise ε̂ from a noisy state.
pub trait Denoiser: Send + Sync {
    fn predict_eps(&self, input: &DenoiseInput<'_>) -> Result<Array2<f64>>;

    /// Whether the sampler should compute [`GeometryFeatures`].
    fn uses_geometry(&self) -> bool {
        false
    }

    /// Optional per-refresh encoding of the geometry features, passed back
    /// through [`DenoiseInput::geometry_tokens`].
    fn encode_geometry(&self, _geo: &GeometryFeatures) -> Result<Option<Array2<f64>>> {
        Ok(None)
    }
}

/// Predicts zero noise everywhere; the reverse chain then just rescales.
pub struct ZeroDenoiser;

impl Denoiser for ZeroDenoiser {
    fn predict_eps(&self, input: &DenoiseInput<'_>) -> Result<Array2<f64>> {
        Ok(Array2::zeros(input.x_t.raw_dim()))
    }
}
