//! Bounding volume hierarchy over the faces of one world-frame mesh.

use super::aabb::Aabb3;
use crate::scene::TriMesh;
use crate::{Error, Result};

pub const LEAF_CAPACITY: usize = 4;

/// Face boxes are inflated by this much so the closed-set triangle test
/// (tolerance 1e-9) never loses a touching pair to box pruning.
pub const FACE_BOX_PAD: f64 = 1e-8;

#[derive(Clone, Debug)]
enum NodeKind {
    Leaf { start: usize, len: usize },
    Inner { left: usize, right: usize },
}

#[derive(Clone, Debug)]
struct Node {
    aabb: Aabb3,
    kind: NodeKind,
}

#[derive(Clone, Debug)]
pub struct Bvh {
    nodes: Vec<Node>,
    /// Face indices, leaves reference contiguous ranges.
    order: Vec<usize>,
    face_boxes: Vec<Aabb3>,
}

/// Padded bounding box of every face.
pub fn face_boxes(mesh: &TriMesh) -> Vec<Aabb3> {
    (0..mesh.face_count())
        .map(|f| Aabb3::from_points(mesh.triangle(f).iter()).inflated(FACE_BOX_PAD))
        .collect()
}

impl Bvh {
    pub fn build(mesh: &TriMesh) -> Result<Self> {
        if mesh.face_count() == 0 {
            return Err(Error::EmptyMesh);
        }
        let face_boxes = face_boxes(mesh);
        let centers: Vec<_> = face_boxes.iter().map(|b| b.center()).collect();
        let mut order: Vec<usize> = (0..face_boxes.len()).collect();
        let mut nodes = Vec::new();
        build_node(&mut nodes, &mut order, 0, face_boxes.len(), &face_boxes, &centers);
        Ok(Self { nodes, order, face_boxes })
    }

    pub fn root_aabb(&self) -> Aabb3 {
        self.nodes[0].aabb
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n.kind, NodeKind::Leaf { .. })).count()
    }

    pub fn face_boxes(&self) -> &[Aabb3] {
        &self.face_boxes
    }

    /// Faces stored in each leaf.
    pub fn leaves(&self) -> Vec<Vec<usize>> {
        self.nodes
            .iter()
            .filter_map(|n| match n.kind {
                NodeKind::Leaf { start, len } => Some(self.order[start..start + len].to_vec()),
                NodeKind::Inner { .. } => None,
            })
            .collect()
    }

    /// Checks that every node box contains its descendants' face boxes.
    pub fn is_consistent(&self) -> bool {
        fn check(b: &Bvh, i: usize) -> Vec<usize> {
            let node = &b.nodes[i];
            let faces = match node.kind {
                NodeKind::Leaf { start, len } => b.order[start..start + len].to_vec(),
                NodeKind::Inner { left, right } => {
                    let mut f = check(b, left);
                    f.extend(check(b, right));
                    f
                }
            };
            if faces.iter().all(|&f| node.aabb.contains_box(&b.face_boxes[f])) {
                faces
            } else {
                Vec::new()
            }
        }
        let mut all = check(self, 0);
        all.sort_unstable();
        all == (0..self.face_boxes.len()).collect::<Vec<_>>()
    }

    /// All `(face_self, face_other)` pairs whose padded boxes overlap,
    /// sorted and free of duplicates.
    pub fn overlapping_pairs(&self, other: &Bvh) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, 0usize)];
        while let Some((a, b)) = stack.pop() {
            let (na, nb) = (&self.nodes[a], &other.nodes[b]);
            if !na.aabb.overlaps(&nb.aabb) {
                continue;
            }
            match (&na.kind, &nb.kind) {
                (NodeKind::Leaf { start: sa, len: la }, NodeKind::Leaf { start: sb, len: lb }) => {
                    for &fa in &self.order[*sa..sa + la] {
                        for &fb in &other.order[*sb..sb + lb] {
                            if self.face_boxes[fa].overlaps(&other.face_boxes[fb]) {
                                out.push((fa, fb));
                            }
                        }
                    }
                }
                (NodeKind::Leaf { .. }, NodeKind::Inner { left, right }) => {
                    stack.push((a, *left));
                    stack.push((a, *right));
                }
                (NodeKind::Inner { left, right }, NodeKind::Leaf { .. }) => {
                    stack.push((*left, b));
                    stack.push((*right, b));
                }
                (NodeKind::Inner { left: l1, right: r1 }, NodeKind::Inner { left: l2, right: r2 }) => {
                    stack.push((*l1, *l2));
                    stack.push((*l1, *r2));
                    stack.push((*r1, *l2));
                    stack.push((*r1, *r2));
                }
            }
        }
        out.sort_unstable();
        out
    }
}

fn build_node(
    nodes: &mut Vec<Node>,
    order: &mut [usize],
    start: usize,
    end: usize,
    boxes: &[Aabb3],
    centers: &[nalgebra::Vector3<f64>],
) -> usize {
    let aabb = order[start..end].iter().fold(Aabb3::empty(), |acc, &f| acc.union(&boxes[f]));
    let idx = nodes.len();
    if end - start <= LEAF_CAPACITY {
        nodes.push(Node { aabb, kind: NodeKind::Leaf { start, len: end - start } });
        return idx;
    }
    nodes.push(Node { aabb, kind: NodeKind::Leaf { start, len: 0 } });
    let cbox = Aabb3::from_points(order[start..end].iter().map(|&f| &centers[f]));
    let axis = cbox.longest_axis();
    let mid = (start + end) / 2;
    order[start..end].sort_by(|&a, &b| centers[a][axis].total_cmp(&centers[b][axis]).then(a.cmp(&b)));
    let left = build_node(nodes, order, start, mid, boxes, centers);
    let right = build_node(nodes, order, mid, end, boxes, centers);
    nodes[idx].kind = NodeKind::Inner { left, right };
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::primitives::unit_cube;
    use nalgebra::Vector3;

    #[test]
    fn single_triangle_is_one_leaf() {
        let m = TriMesh::new(vec![Vector3::zeros(), Vector3::x(), Vector3::y()], vec![[0, 1, 2]]).unwrap();
        let b = Bvh::build(&m).unwrap();
        assert_eq!(b.leaf_count(), 1);
        assert!(b.is_consistent());
    }

    #[test]
    fn cube_hierarchy_is_consistent() {
        let b = Bvh::build(&unit_cube()).unwrap();
        assert!(b.is_consistent());
        let mut faces: Vec<usize> = b.leaves().into_iter().flatten().collect();
        faces.sort_unstable();
        assert_eq!(faces, (0..12).collect::<Vec<_>>());
    }

    #[test]
    fn disjoint_meshes_have_no_candidates() {
        let a = Bvh::build(&unit_cube()).unwrap();
        let b = Bvh::build(&unit_cube().translated(&Vector3::new(3.0, 0.0, 0.0))).unwrap();
        assert!(a.overlapping_pairs(&b).is_empty());
    }
}
