//! Pose-derived relation labels.

use nalgebra::Vector3;

use super::relations::{PhysicalRel, RelationGraphs, SpatialRel};
use super::{Scene, TriMesh};
use crate::geom::distance::mesh_distance;
use crate::geom::hull::{intersection_area, xz_hull, Hull2D};
use crate::geom::raycast::vertical_gap;

/// Thresholds used to turn poses into relation labels.
#[derive(Clone, Debug, PartialEq)]
pub struct RelationRules {
    /// An axis fires only if it carries this fraction of the offset norm.
    pub axis_dominance: f64,
    pub spatial_margin: f64,
    pub support_gap_min: f64,
    pub support_gap_tol: f64,
    /// Required fraction of the supported object's hull area over the supporter.
    pub support_overlap: f64,
    pub contact_distance: f64,
}

impl Default for RelationRules {
    fn default() -> Self {
        Self {
            axis_dominance: 0.6,
            spatial_margin: 0.05,
            support_gap_min: -0.01,
            support_gap_tol: 0.02,
            support_overlap: 0.6,
            contact_distance: 0.005,
        }
    }
}

/// Spatial label of `i` relative to `j` from the offset `p_i - p_j`.
pub fn spatial_label(delta: &Vector3<f64>, rules: &RelationRules) -> SpatialRel {
    let norm = delta.norm();
    let mut axis = 0;
    for k in 1..3 {
        if delta[k].abs() > delta[axis].abs() {
            axis = k;
        }
    }
    let a = delta[axis];
    if !(a.abs() > rules.axis_dominance * norm) || !(a.abs() > rules.spatial_margin) {
        return SpatialRel::None;
    }
    match (axis, a < 0.0) {
        (0, true) => SpatialRel::LeftOf,
        (0, false) => SpatialRel::RightOf,
        (1, true) => SpatialRel::Below,
        (1, false) => SpatialRel::Above,
        (_, true) => SpatialRel::InFrontOf,
        (_, false) => SpatialRel::Behind,
    }
}

/// Does `lower` support `upper` under the given rules?
pub fn supports(upper: &TriMesh, upper_hull: &Hull2D, lower: &TriMesh, lower_hull: &Hull2D, rules: &RelationRules) -> bool {
    let (ua, la) = (upper.aabb(), lower.aabb());
    if ua.max.x < la.min.x || la.max.x < ua.min.x || ua.max.z < la.min.z || la.max.z < ua.min.z {
        return false;
    }
    let gap = vertical_gap(upper, lower);
    if !(gap >= rules.support_gap_min && gap <= rules.support_gap_tol) {
        return false;
    }
    let area = upper_hull.area();
    area > 0.0 && intersection_area(upper_hull, lower_hull) >= rules.support_overlap * area
}

pub fn derive_relations(scene: &Scene) -> RelationGraphs {
    derive_relations_with(scene, &RelationRules::default())
}

pub fn derive_relations_with(scene: &Scene, rules: &RelationRules) -> RelationGraphs {
    let meshes = scene.posed_meshes_lenient();
    derive_from_meshes(scene, &meshes, rules)
}

/// Labels from already posed meshes (one per object, in id order).
pub fn derive_from_meshes(scene: &Scene, meshes: &[TriMesh], rules: &RelationRules) -> RelationGraphs {
    let n = scene.len();
    let mut g = RelationGraphs::empty(n);
    for i in 0..n {
        for j in i + 1..n {
            let d = scene.objects[i].position - scene.objects[j].position;
            g.set_spatial_pair(i, j, spatial_label(&d, rules));
        }
    }
    let hulls: Vec<Hull2D> = meshes.iter().map(xz_hull).collect();
    for i in 0..n {
        for j in 0..n {
            if i != j && !g.support_reaches(j, i) && supports(&meshes[i], &hulls[i], &meshes[j], &hulls[j], rules) {
                g.set_physical(i, j, PhysicalRel::Support);
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if g.physical(i, j) != PhysicalRel::None || g.physical(j, i) != PhysicalRel::None {
                continue;
            }
            if mesh_distance(&meshes[i], &meshes[j], rules.contact_distance) < rules.contact_distance {
                g.set_physical(i, j, PhysicalRel::Contact);
                g.set_physical(j, i, PhysicalRel::Contact);
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::rotation::IDENTITY_6D;
    use crate::scene::SceneObject;
    use crate::synth::primitives::{box_mesh, unit_cube};
    use std::sync::Arc;

    fn scene(parts: Vec<(TriMesh, Vector3<f64>)>) -> Scene {
        let n = parts.len();
        let objects = parts
            .into_iter()
            .enumerate()
            .map(|(k, (m, p))| SceneObject::new(k, "box", Arc::new(m), p, IDENTITY_6D))
            .collect();
        Scene::new(objects, RelationGraphs::empty(n), 0.0).unwrap()
    }

    #[test]
    fn left_right_by_margin() {
        let s = scene(vec![
            (unit_cube(), Vector3::new(-2.0, 0.5, 0.0)),
            (unit_cube(), Vector3::new(2.0, 0.5, 0.0)),
        ]);
        let g = derive_relations(&s);
        assert_eq!(g.spatial(0, 1), SpatialRel::LeftOf);
        assert_eq!(g.spatial(1, 0), SpatialRel::RightOf);
        assert_eq!(g.physical(0, 1), PhysicalRel::None);
        let r = RelationRules::default();
        assert_eq!(spatial_label(&Vector3::new(0.03, 0.0, 0.0), &r), SpatialRel::None);
        assert_eq!(spatial_label(&Vector3::new(1.0, 0.9, 1.0), &r), SpatialRel::None);
        assert_eq!(spatial_label(&Vector3::new(0.0, 0.0, -1.0), &r), SpatialRel::InFrontOf);
    }

    #[test]
    fn small_box_on_table_top() {
        let table = box_mesh(Vector3::new(2.0, 0.8, 1.0));
        let mug = box_mesh(Vector3::new(0.1, 0.12, 0.1));
        let s = scene(vec![
            (mug, Vector3::new(0.3, 0.8 + 0.005 + 0.06, 0.1)),
            (table, Vector3::new(0.0, 0.4, 0.0)),
        ]);
        let g = derive_relations(&s);
        assert_eq!(g.physical(0, 1), PhysicalRel::Support);
        assert_eq!(g.physical(1, 0), PhysicalRel::None);
        assert_eq!(g.spatial(0, 1), SpatialRel::Above);
        g.validate().unwrap();
    }

    #[test]
    fn overhang_and_contact() {
        // 70% of the upper cube hangs off: no support.
        let s = scene(vec![
            (unit_cube(), Vector3::new(0.7, 1.51, 0.0)),
            (unit_cube(), Vector3::new(0.0, 0.5, 0.0)),
        ]);
        assert_eq!(derive_relations(&s).physical(0, 1), PhysicalRel::None);
        let s = scene(vec![
            (unit_cube(), Vector3::new(0.0, 0.5, 0.0)),
            (unit_cube(), Vector3::new(1.002, 0.5, 0.0)),
        ]);
        let g = derive_relations(&s);
        assert_eq!(g.physical(0, 1), PhysicalRel::Contact);
        assert_eq!(g.physical(1, 0), PhysicalRel::Contact);
    }
}
