//! JSON scene codec and OBJ export.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::relations::{PhysicalRel, RelationGraphs, SpatialRel};
use super::{Scene, SceneObject, TriMesh};
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshFile {
    vertices: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectFile {
    id: usize,
    category: String,
    mesh: MeshFile,
    position: [f64; 3],
    rotation6d: [f64; 6],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    version: u32,
    #[serde(default)]
    floor_height: f64,
    objects: Vec<ObjectFile>,
    spatial: Vec<Vec<String>>,
    physical: Vec<Vec<String>>,
}

fn to_file(scene: &Scene) -> SceneFile {
    SceneFile {
        version: FORMAT_VERSION,
        floor_height: scene.floor_height,
        objects: scene
            .objects
            .iter()
            .map(|o| ObjectFile {
                id: o.id,
                category: o.category.clone(),
                mesh: MeshFile {
                    vertices: o.mesh.vertices().iter().map(|v| [v.x, v.y, v.z]).collect(),
                    faces: o.mesh.faces().to_vec(),
                },
                position: [o.position.x, o.position.y, o.position.z],
                rotation6d: o.rotation,
            })
            .collect(),
        spatial: scene.graphs.spatial_rows().iter().map(|r| r.iter().map(|l| l.to_string()).collect()).collect(),
        physical: scene.graphs.physical_rows().iter().map(|r| r.iter().map(|l| l.to_string()).collect()).collect(),
    }
}

fn from_file(f: SceneFile) -> Result<Scene> {
    if f.version != FORMAT_VERSION {
        return Err(Error::InvalidScene(format!("unsupported scene version {}", f.version)));
    }
    let spatial = f
        .spatial
        .iter()
        .map(|r| r.iter().map(|s| s.parse::<SpatialRel>()).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let physical = f
        .physical
        .iter()
        .map(|r| r.iter().map(|s| s.parse::<PhysicalRel>()).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let graphs = RelationGraphs::from_matrices(spatial, physical)?;
    let mut objects = Vec::with_capacity(f.objects.len());
    for o in f.objects {
        let mesh = TriMesh::new(
            o.mesh.vertices.iter().map(|v| Vector3::new(v[0], v[1], v[2])).collect(),
            o.mesh.faces,
        )?;
        let p = Vector3::new(o.position[0], o.position[1], o.position[2]);
        if !p.iter().chain(o.rotation6d.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidScene(format!("object {} has a non-finite pose", o.id)));
        }
        objects.push(SceneObject::new(o.id, o.category, Arc::new(mesh), p, o.rotation6d));
    }
    Scene::new(objects, graphs, f.floor_height)
}

pub fn scene_to_json(scene: &Scene) -> String {
    serde_json::to_string_pretty(&to_file(scene)).expect("scene serialization cannot fail")
}

pub fn scene_from_json(s: &str) -> Result<Scene> {
    from_file(serde_json::from_str(s)?)
}

pub fn save_scene(path: &Path, scene: &Scene) -> Result<()> {
    std::fs::write(path, scene_to_json(scene))?;
    Ok(())
}

pub fn load_scene(path: &Path) -> Result<Scene> {
    scene_from_json(&std::fs::read_to_string(path)?)
}

/// Wavefront OBJ of the posed scene, one group per object.
pub fn scene_to_obj(scene: &Scene) -> String {
    let mut out = String::new();
    let mut base = 1;
    for (o, m) in scene.objects.iter().zip(scene.posed_meshes_lenient()) {
        let _ = writeln!(out, "o {}_{}", o.category, o.id);
        for v in m.vertices() {
            let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
        }
        for f in m.faces() {
            let _ = writeln!(out, "f {} {} {}", f[0] + base, f[1] + base, f[2] + base);
        }
        base += m.vertices().len();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::rotation::yaw_rot6d;
    use crate::synth::primitives::unit_cube;

    fn sample() -> Scene {
        let a = SceneObject::new(0, "box", Arc::new(unit_cube()), Vector3::new(0.1, 0.5, -0.3), yaw_rot6d(0.3));
        let b = SceneObject::new(1, "crate", Arc::new(unit_cube()), Vector3::new(2.0, 0.5, 1.0 / 3.0), yaw_rot6d(1.0));
        let mut g = RelationGraphs::empty(2);
        g.set_spatial_pair(0, 1, SpatialRel::LeftOf);
        g.set_physical(0, 1, PhysicalRel::Contact);
        Scene::new(vec![a, b], g, 0.0).unwrap()
    }

    #[test]
    fn round_trip_is_bitwise() {
        let s = sample();
        let back = scene_from_json(&scene_to_json(&s)).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_bad_input() {
        let json = scene_to_json(&sample());
        assert!(matches!(scene_from_json(&json.replace("left_of", "sideways")), Err(Error::UnknownLabel(_))));
        assert!(scene_from_json(&json.replace("\"version\": 1", "\"version\": 2")).is_err());
        assert!(scene_from_json(&json.replace("\"category\"", "\"colour\": 1, \"category\"")).is_err());
    }

    #[test]
    fn obj_export_counts() {
        let obj = scene_to_obj(&sample());
        assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 16);
        assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 24);
        assert!(obj.contains("f 9 "));
    }
}
