//! Procedural scenes of resting primitives with annotated support graphs.

use std::sync::Arc;

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::primitives::{box_mesh, cylinder, table};
use crate::geom::aabb::Aabb3;
use crate::scene::derive::derive_relations;
use crate::scene::relations::{PhysicalRel, RelationGraphs};
use crate::scene::rotation::yaw_rot6d;
use crate::scene::{Scene, SceneObject, TriMesh};
use crate::{seed, Error, Result};

pub const MAX_PLACEMENT_ATTEMPTS: usize = 1000;
const CYLINDER_SEGMENTS: usize = 16;
/// Clearance kept between a stacked object's footprint and its supporter's rim.
const RIM_MARGIN: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Box,
    Cylinder,
    Table,
}

/// One entry of the object library. Sizes are bounding-box edge lengths
/// (for cylinders `x` is the diameter and `z` is ignored).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectKind {
    pub category: String,
    pub shape: ShapeKind,
    pub size_min: [f64; 3],
    pub size_max: [f64; 3],
    pub on_floor: bool,
    pub stackable: bool,
    pub can_support: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenSpec {
    pub n_min: usize,
    pub n_max: usize,
    /// Objects stay inside `[-x, x] × [-z, z]`.
    pub room_half_extent: [f64; 2],
    pub max_support_depth: usize,
    pub stack_probability: f64,
    /// Vertical clearance of every resting object above its support.
    pub gap: f64,
    /// Minimum distance between bounding boxes of unrelated objects.
    pub min_separation: f64,
    pub library: Vec<ObjectKind>,
}

fn kind(category: &str, shape: ShapeKind, lo: [f64; 3], hi: [f64; 3], floor: bool, stack: bool, support: bool) -> ObjectKind {
    ObjectKind {
        category: category.into(),
        shape,
        size_min: lo,
        size_max: hi,
        on_floor: floor,
        stackable: stack,
        can_support: support,
    }
}

impl Default for GenSpec {
    fn default() -> Self {
        use ShapeKind::*;
        Self {
            n_min: 2,
            n_max: 12,
            room_half_extent: [3.0, 3.0],
            max_support_depth: 3,
            stack_probability: 0.5,
            gap: 0.005,
            min_separation: 0.05,
            library: vec![
                kind("table", Table, [0.9, 0.6, 0.6], [1.6, 0.85, 1.0], true, false, true),
                kind("cabinet", Box, [0.5, 0.4, 0.4], [1.2, 1.0, 0.7], true, false, true),
                kind("crate", Box, [0.3, 0.2, 0.3], [0.6, 0.45, 0.6], true, true, true),
                kind("box", Box, [0.12, 0.08, 0.12], [0.35, 0.25, 0.35], true, true, true),
                kind("vase", Cylinder, [0.08, 0.1, 0.0], [0.22, 0.35, 0.0], true, true, false),
                kind("book", Box, [0.12, 0.05, 0.16], [0.22, 0.07, 0.28], false, true, true),
            ],
        }
    }
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_owned()));
        if self.n_min < 1 || self.n_min > self.n_max {
            return bad("gen: need 1 <= n_min <= n_max");
        }
        if !(self.room_half_extent.iter().all(|&e| e > 0.0)) {
            return bad("gen: room_half_extent must be positive");
        }
        if !(0.0..=1.0).contains(&self.stack_probability) {
            return bad("gen: stack_probability must lie in [0, 1]");
        }
        if !(self.gap >= 0.0) || !(self.min_separation > self.gap) {
            return bad("gen: need gap >= 0 and min_separation > gap");
        }
        if !self.library.iter().any(|k| k.on_floor) {
            return bad("gen: library has no floor-standing kind");
        }
        for k in &self.library {
            if (0..3).any(|a| !(k.size_min[a] <= k.size_max[a]) || (k.shape != ShapeKind::Cylinder || a != 2) && !(k.size_min[a] > 0.0)) {
                return bad(&format!("gen: size range of `{}` is empty or non-positive", k.category));
            }
        }
        Ok(())
    }
}

struct Placed {
    aabb: Aabb3,
    depth: usize,
    can_support: bool,
}

fn build_mesh<R: Rng>(k: &ObjectKind, rng: &mut R) -> TriMesh {
    let s: [f64; 3] = std::array::from_fn(|a| {
        if k.size_max[a] > k.size_min[a] {
            rng.random_range(k.size_min[a]..k.size_max[a])
        } else {
            k.size_min[a]
        }
    });
    match k.shape {
        ShapeKind::Box => box_mesh(Vector3::new(s[0], s[1], s[2])),
        ShapeKind::Cylinder => cylinder(s[0] / 2.0, s[1], CYLINDER_SEGMENTS),
        ShapeKind::Table => table(Vector3::new(s[0], s[1], s[2]), 0.04, 0.05),
    }
}

/// Generates one resting scene. Supporters come from construction, spatial
/// labels from [`derive_relations`].
pub fn gen_scene(spec: &GenSpec, seed_value: u64) -> Result<Scene> {
    spec.validate()?;
    let mut rng = seed::rng(seed_value, &[0x6E4E]);
    let n = rng.random_range(spec.n_min..=spec.n_max);
    let mut objects: Vec<SceneObject> = Vec::with_capacity(n);
    let mut placed: Vec<Placed> = Vec::with_capacity(n);
    let mut supporter: Vec<Option<usize>> = Vec::with_capacity(n);
    let [rx, rz] = spec.room_half_extent;

    for id in 0..n {
        let mut done = false;
        for attempt in 0..MAX_PLACEMENT_ATTEMPTS {
            let hosts: Vec<usize> = (0..placed.len())
                .filter(|&j| placed[j].can_support && placed[j].depth < spec.max_support_depth)
                .collect();
            // Late attempts fall back to the floor in case no host can fit anything.
            let stack = !hosts.is_empty()
                && attempt < MAX_PLACEMENT_ATTEMPTS / 2
                && rng.random::<f64>() < spec.stack_probability;
            let kinds: Vec<&ObjectKind> =
                spec.library.iter().filter(|k| if stack { k.stackable } else { k.on_floor }).collect();
            if kinds.is_empty() {
                continue;
            }
            let k = kinds[rng.random_range(0..kinds.len())];
            let quarter = rng.random_range(0..4u32);
            let rot = yaw_rot6d(quarter as f64 * std::f64::consts::FRAC_PI_2);
            let local = build_mesh(k, &mut rng);
            // Posed extents of a quarter-turned mesh are exact.
            let ext = local.aabb().extent();
            let half = if quarter % 2 == 0 {
                Vector3::new(ext.x, ext.y, ext.z) / 2.0
            } else {
                Vector3::new(ext.z, ext.y, ext.x) / 2.0
            };
            let (host, base, lo, hi) = if stack {
                let h = hosts[rng.random_range(0..hosts.len())];
                let b = &placed[h].aabb;
                let lo = [b.min.x + RIM_MARGIN + half.x, b.min.z + RIM_MARGIN + half.z];
                let hi = [b.max.x - RIM_MARGIN - half.x, b.max.z - RIM_MARGIN - half.z];
                (Some(h), b.max.y, lo, hi)
            } else {
                (None, 0.0, [-rx + half.x, -rz + half.z], [rx - half.x, rz - half.z])
            };
            if lo[0] > hi[0] || lo[1] > hi[1] {
                continue;
            }
            let x = if hi[0] > lo[0] { rng.random_range(lo[0]..hi[0]) } else { lo[0] };
            let z = if hi[1] > lo[1] { rng.random_range(lo[1]..hi[1]) } else { lo[1] };
            let p = Vector3::new(x, base + spec.gap + half.y, z);
            let obj = SceneObject::new(id, k.category.clone(), Arc::new(local), p, rot);
            let posed = crate::scene::posed_mesh(&obj)?;
            let aabb = posed.aabb();
            let probe = aabb.inflated(spec.min_separation);
            if placed.iter().enumerate().any(|(j, q)| Some(j) != host && q.aabb.overlaps(&probe)) {
                continue;
            }
            let depth = host.map_or(0, |h| placed[h].depth + 1);
            placed.push(Placed { aabb, depth, can_support: k.can_support });
            supporter.push(host);
            objects.push(obj);
            done = true;
            break;
        }
        if !done {
            return Err(Error::PlacementFailure { attempts: MAX_PLACEMENT_ATTEMPTS });
        }
    }

    let provisional = Scene::new(objects, RelationGraphs::empty(n), 0.0)?;
    let derived = derive_relations(&provisional);
    let mut graphs = RelationGraphs::empty(n);
    for i in 0..n {
        for j in i + 1..n {
            graphs.set_spatial_pair(i, j, derived.spatial(i, j));
        }
        if let Some(j) = supporter[i] {
            graphs.set_physical(i, j, PhysicalRel::Support);
        }
    }
    Scene::new(provisional.objects, graphs, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::relations::PhysicalRel;

    #[test]
    fn same_seed_same_scene() {
        let spec = GenSpec::default();
        assert_eq!(gen_scene(&spec, 42).unwrap(), gen_scene(&spec, 42).unwrap());
        assert_ne!(gen_scene(&spec, 42).unwrap(), gen_scene(&spec, 43).unwrap());
    }

    #[test]
    fn two_object_stack() {
        let mut spec = GenSpec { n_min: 2, n_max: 2, stack_probability: 1.0, ..GenSpec::default() };
        spec.library.retain(|k| k.category == "table" || k.category == "box");
        spec.library[1].on_floor = false;
        for s in 0..20 {
            let scene = gen_scene(&spec, s).unwrap();
            assert_eq!(scene.graphs.physical(1, 0), PhysicalRel::Support);
            let gap = scene.objects[1].position.y - scene.objects[1].mesh.aabb().extent().y / 2.0
                - (scene.objects[0].position.y + scene.objects[0].mesh.aabb().extent().y / 2.0);
            assert!((gap - 0.005).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let spec = GenSpec { n_min: 3, n_max: 2, ..GenSpec::default() };
        assert!(matches!(gen_scene(&spec, 0), Err(Error::Config(_))));
        let crowded = GenSpec { n_min: 12, n_max: 12, room_half_extent: [0.2, 0.2], stack_probability: 0.0, ..GenSpec::default() };
        assert!(matches!(gen_scene(&crowded, 0), Err(Error::PlacementFailure { .. })));
    }
}
