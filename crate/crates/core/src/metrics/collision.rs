//! Mesh-level collision rate.

use crate::geom::collide::meshes_intersect;
use crate::geom::distance::signed_distance;
use crate::geom::{sample_surface, Aabb3, Bvh, SurfaceSample};
use crate::scene::{Scene, TriMesh};
use crate::{seed, Result};

use super::MetricsConfig;

pub(crate) fn aabb_distance(b: &Aabb3, p: &nalgebra::Vector3<f64>) -> f64 {
    let d = (b.min - p).sup(&(p - b.max)).sup(&nalgebra::Vector3::zeros());
    d.norm()
}

/// Deepest sampled point of `points` inside `mesh`, as a non-negative depth.
fn deepest_inside(points: &SurfaceSample, mesh: &TriMesh) -> f64 {
    let b = mesh.aabb();
    points
        .points
        .iter()
        .filter(|p| aabb_distance(&b, p) == 0.0)
        .map(|p| -signed_distance(mesh, p))
        .fold(0.0, f64::max)
}

/// Penetration depth estimate between two posed meshes from their surface
/// samples: the deepest point of either sample inside the other mesh.
pub fn penetration_depth(a: &TriMesh, sa: &SurfaceSample, b: &TriMesh, sb: &SurfaceSample) -> f64 {
    deepest_inside(sa, b).max(deepest_inside(sb, a))
}

/// Surface sample of object `k`; the seed depends only on the object index.
pub(crate) fn object_sample(mesh: &TriMesh, k: usize, cfg: &MetricsConfig) -> Result<SurfaceSample> {
    sample_surface(mesh, cfg.samples, seed::derive(cfg.seed, &[0xC011, k as u64]))
}

/// Per object: does it take part in an intersection deeper than the threshold?
pub fn flagged_objects(scene: &Scene, cfg: &MetricsConfig) -> Result<Vec<bool>> {
    let meshes = scene.posed_meshes_lenient();
    let bvhs: Vec<Bvh> = meshes.iter().map(Bvh::build).collect::<Result<_>>()?;
    let mut samples: Vec<Option<SurfaceSample>> = vec![None; meshes.len()];
    let mut flagged = vec![false; meshes.len()];
    for a in 0..meshes.len() {
        for b in a + 1..meshes.len() {
            if !meshes_intersect(&meshes[a], &bvhs[a], &meshes[b], &bvhs[b]) {
                continue;
            }
            for k in [a, b] {
                if samples[k].is_none() {
                    samples[k] = Some(object_sample(&meshes[k], k, cfg)?);
                }
            }
            let (sa, sb) = (samples[a].as_ref().unwrap(), samples[b].as_ref().unwrap());
            if penetration_depth(&meshes[a], sa, &meshes[b], sb) > cfg.depth_threshold {
                flagged[a] = true;
                flagged[b] = true;
            }
        }
    }
    Ok(flagged)
}

/// Flagged objects over all objects in the set; an empty set scores 0.
pub fn col_mesh_rate(scenes: &[Scene], cfg: &MetricsConfig) -> Result<f64> {
    let mut flagged = 0;
    let mut total = 0;
    for s in scenes {
        let f = flagged_objects(s, cfg)?;
        flagged += f.iter().filter(|&&x| x).count();
        total += f.len();
    }
    Ok(if total == 0 { 0.0 } else { flagged as f64 / total as f64 })
}
