//! Average support distance.

use crate::geom::distance::signed_distance;
use crate::scene::{Scene, TriMesh};
use crate::Result;

use super::collision::{aabb_distance, object_sample};
use super::MetricsConfig;

/// Minimum signed distance from any vertex or sampled surface point of
/// `upper` to the surface of `lower`.
pub fn min_signed_distance(upper: &TriMesh, points: &[nalgebra::Vector3<f64>], lower: &TriMesh) -> f64 {
    let b = lower.aabb();
    let mut best = f64::INFINITY;
    for p in upper.vertices().iter().chain(points) {
        // Outside the box the signed distance is at least the box distance.
        if aabb_distance(&b, p) >= best {
            continue;
        }
        best = best.min(signed_distance(lower, p));
    }
    best
}

/// `|min signed distance|` for every annotated support pair
/// `(supported, supporter)` of the scene, in pair order.
pub fn support_distances(scene: &Scene, cfg: &MetricsConfig) -> Result<Vec<f64>> {
    let pairs = scene.graphs.support_pairs();
    if pairs.is_empty() {
        return Ok(Vec::new());
    }
    let meshes = scene.posed_meshes_lenient();
    pairs
        .into_iter()
        .map(|(i, j)| {
            let s = object_sample(&meshes[i], i, cfg)?;
            Ok(min_signed_distance(&meshes[i], &s.points, &meshes[j]).abs())
        })
        .collect()
}

/// Mean support distance over all pairs of the set; `None` when no scene
/// has a support edge.
pub fn asd(scenes: &[Scene], cfg: &MetricsConfig) -> Result<Option<f64>> {
    let mut all = Vec::new();
    for s in scenes {
        all.extend(support_distances(s, cfg)?);
    }
    Ok((!all.is_empty()).then(|| all.iter().sum::<f64>() / all.len() as f64))
}
