//! Small hand-built scenes for tests, examples and the CLI smoke runs.

use std::sync::Arc;

use nalgebra::Vector3;

use super::primitives::{box_mesh, unit_cube};
use crate::scene::{PhysicalRel, RelationGraphs, Rot6, Scene, SceneObject, TriMesh, IDENTITY_6D};

/// Builds a scene from `(mesh, position, rotation)` triples with the given
/// `(supported, supporter)` edges. Spatial relations are left empty.
pub fn scene_of(parts: Vec<(TriMesh, Vector3<f64>, Rot6)>, supports: &[(usize, usize)], floor: f64) -> Scene {
    let n = parts.len();
    let objects = parts
        .into_iter()
        .enumerate()
        .map(|(k, (m, p, r))| SceneObject::new(k, "box", Arc::new(m), p, r))
        .collect();
    let mut g = RelationGraphs::empty(n);
    for &(i, j) in supports {
        g.set_physical(i, j, PhysicalRel::Support);
    }
    Scene::new(objects, g, floor).expect("fixture scene is valid")
}

/// Unit cubes at the given centres, identity rotations.
pub fn cubes(centres: &[Vector3<f64>], supports: &[(usize, usize)]) -> Scene {
    scene_of(centres.iter().map(|c| (unit_cube(), *c, IDENTITY_6D)).collect(), supports, 0.0)
}

/// Boxes of the given sizes at the given centres.
pub fn boxes(items: &[(Vector3<f64>, Vector3<f64>)], supports: &[(usize, usize)]) -> Scene {
    scene_of(items.iter().map(|(s, c)| (box_mesh(*s), *c, IDENTITY_6D)).collect(), supports, 0.0)
}
