//! The graph-attention noise predictor, its training loop and a closed-form
//! Gaussian baseline.

pub mod analytic;
pub mod checkpoint;
pub mod geometry;
pub mod model;
pub mod params;
pub mod train;

pub use analytic::{analytic_score_denoiser, AnalyticDenoiser};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use geometry::{geometry_features, GeometryFeatures};
pub use model::{Model, ModelConfig};
pub use params::Params;
pub use train::{train, train_from, TrainConfig, TrainOutput};
