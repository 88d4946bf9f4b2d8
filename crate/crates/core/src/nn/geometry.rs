//! Per-object point features `[x, y, z, d_scd]` for the geometry perceiver.

use ndarray::Array3;

use crate::geom::{sample_surface, signed_chamfer, SurfaceSample};
use crate::scene::Scene;
use crate::seed;
use crate::Result;

/// N×M×4 tensor; channel 3 holds the signed Chamfer distance to all other
/// objects (or the no-others sentinel).
#[derive(Clone, Debug, PartialEq)]
pub struct GeometryFeatures(pub Array3<f64>);

impl GeometryFeatures {
    pub fn objects(&self) -> usize {
        self.0.shape()[0]
    }

    pub fn points(&self) -> usize {
        self.0.shape()[1]
    }
}

/// Samples `m` points on every posed mesh and measures each against the
/// union of the other objects' samples.
pub fn geometry_features(scene: &Scene, m: usize, seed_value: u64) -> Result<GeometryFeatures> {
    let meshes = scene.posed_meshes_lenient();
    let samples: Vec<SurfaceSample> = meshes
        .iter()
        .enumerate()
        .map(|(i, mesh)| sample_surface(mesh, m, seed::derive(seed_value, &[i as u64])))
        .collect::<Result<_>>()?;
    let mut out = Array3::zeros((scene.len(), m, 4));
    for (i, s) in samples.iter().enumerate() {
        let others = SurfaceSample::merge(samples.iter().enumerate().filter(|(j, _)| *j != i));
        let d = signed_chamfer(s, &others);
        for (k, p) in s.points.iter().enumerate() {
            out[[i, k, 0]] = p.x;
            out[[i, k, 1]] = p.y;
            out[[i, k, 2]] = p.z;
            out[[i, k, 3]] = d[k];
        }
    }
    Ok(GeometryFeatures(out))
}
