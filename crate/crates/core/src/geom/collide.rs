use super::bvh::Bvh;
use super::tritri::triangles_intersect;
use crate::scene::TriMesh;

/// Intersecting faces of two different objects, stored with `obj_a < obj_b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CollisionPair {
    pub obj_a: usize,
    pub face_a: usize,
    pub obj_b: usize,
    pub face_b: usize,
}

/// Every cross-object face pair for which the closed triangle test holds.
pub fn find_collision_pairs(meshes: &[TriMesh]) -> Vec<CollisionPair> {
    let bvhs: Vec<Bvh> = meshes.iter().map(|m| Bvh::build(m).expect("non-empty mesh")).collect();
    find_collision_pairs_with(meshes, &bvhs)
}

pub fn find_collision_pairs_with(meshes: &[TriMesh], bvhs: &[Bvh]) -> Vec<CollisionPair> {
    let mut out = Vec::new();
    for a in 0..meshes.len() {
        for b in a + 1..meshes.len() {
            if !bvhs[a].root_aabb().overlaps(&bvhs[b].root_aabb()) {
                continue;
            }
            for (fa, fb) in bvhs[a].overlapping_pairs(&bvhs[b]) {
                if triangles_intersect(&meshes[a].triangle(fa), &meshes[b].triangle(fb)) {
                    out.push(CollisionPair { obj_a: a, face_a: fa, obj_b: b, face_b: fb });
                }
            }
        }
    }
    out
}

/// Whether two meshes share at least one point (closed convention).
pub fn meshes_intersect(a: &TriMesh, bvh_a: &Bvh, b: &TriMesh, bvh_b: &Bvh) -> bool {
    bvh_a.root_aabb().overlaps(&bvh_b.root_aabb())
        && bvh_a
            .overlapping_pairs(bvh_b)
            .into_iter()
            .any(|(fa, fb)| triangles_intersect(&a.triangle(fa), &b.triangle(fb)))
}
