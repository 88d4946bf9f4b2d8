//! Procedural synthetic corpus: primitive meshes, resting-scene generator
//! and dataset files.

pub mod dataset;
pub mod fixtures;
pub mod generator;
pub mod primitives;

pub use dataset::{gen_dataset, load_dataset, Manifest};
pub use generator::{gen_scene, GenSpec, ObjectKind, ShapeKind};
