//! Fraction of ground-truth relation edges realised by generated poses.

use crate::scene::derive::derive_relations_with;
use crate::scene::{PhysicalRel, RelationGraphs, RelationRules, Scene, SpatialRel};
use crate::{Error, Result};

/// Matched and total non-`none` ground-truth edges.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EdgeCount {
    pub matched: usize,
    pub total: usize,
}

impl EdgeCount {
    pub fn add(self, o: EdgeCount) -> EdgeCount {
        EdgeCount { matched: self.matched + o.matched, total: self.total + o.total }
    }

    /// Vacuous recall is 1.
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.matched as f64 / self.total as f64
        }
    }
}

/// Counts ordered `(i, j)` entries of `reference` that are not `none` and
/// how many of them `other` reproduces. Spatial and physical edges are
/// pooled.
pub fn edge_agreement(reference: &RelationGraphs, other: &RelationGraphs) -> Result<EdgeCount> {
    if reference.len() != other.len() {
        return Err(Error::GraphSizeMismatch(format!("{} vs {} objects", reference.len(), other.len())));
    }
    let n = reference.len();
    let mut c = EdgeCount::default();
    for i in 0..n {
        for j in 0..n {
            let s = reference.spatial(i, j);
            if s != SpatialRel::None {
                c.total += 1;
                c.matched += usize::from(other.spatial(i, j) == s);
            }
            let p = reference.physical(i, j);
            if p != PhysicalRel::None {
                c.total += 1;
                c.matched += usize::from(other.physical(i, j) == p);
            }
        }
    }
    Ok(c)
}

pub fn scene_recall(generated: &Scene, truth: &RelationGraphs, rules: &RelationRules) -> Result<EdgeCount> {
    if generated.len() != truth.len() {
        return Err(Error::GraphSizeMismatch(format!(
            "scene has {} objects, ground truth {}",
            generated.len(),
            truth.len()
        )));
    }
    edge_agreement(truth, &derive_relations_with(generated, rules))
}

/// Micro-averaged recall over a set of generated scenes.
pub fn grecall(generated: &[Scene], truth: &[RelationGraphs]) -> Result<f64> {
    if generated.len() != truth.len() {
        return Err(Error::GraphSizeMismatch(format!("{} scenes, {} graphs", generated.len(), truth.len())));
    }
    let rules = RelationRules::default();
    let mut c = EdgeCount::default();
    for (s, g) in generated.iter().zip(truth) {
        c = c.add(scene_recall(s, g, &rules)?);
    }
    Ok(c.fraction())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::derive_relations;
    use crate::synth::fixtures::cubes;
    use nalgebra::Vector3;

    #[test]
    fn identical_scene_recalls_everything() {
        let s = cubes(&[Vector3::new(0.0, 0.5, 0.0), Vector3::new(0.0, 1.5, 0.0), Vector3::new(3.0, 0.5, 0.0)], &[(1, 0)]);
        let g = derive_relations(&s);
        assert_eq!(grecall(&[s], &[g]).unwrap(), 1.0);
    }

    #[test]
    fn x_mirror_breaks_only_left_right_edges() {
        let pts = [Vector3::new(0.0, 0.5, 0.0), Vector3::new(0.0, 0.5, 3.0), Vector3::new(2.0, 0.5, 3.0)];
        let truth = derive_relations(&cubes(&pts, &[]));
        let mirrored: Vec<_> = pts.iter().map(|p| Vector3::new(-p.x, p.y, p.z)).collect();
        let gen = cubes(&mirrored, &[]);

        // Hand count: 0-1 and 0-2 are front/back (z dominates), 1-2 is
        // left/right. Six ordered spatial edges, two of them flip; the
        // cubes are apart so there are no physical edges.
        assert_eq!(truth.spatial(1, 2), SpatialRel::LeftOf);
        assert_eq!(truth.spatial(0, 2), SpatialRel::InFrontOf);
        let c = scene_recall(&gen, &truth, &RelationRules::default()).unwrap();
        assert_eq!(c, EdgeCount { matched: 4, total: 6 });
        assert!((grecall(&[gen], &[truth]).unwrap() - 4.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn empty_truth_is_vacuous_and_sizes_must_match() {
        let s = cubes(&[Vector3::new(0.0, 0.5, 0.0), Vector3::new(0.0, 0.5, 0.0)], &[]);
        assert_eq!(grecall(&[s.clone()], &[RelationGraphs::empty(2)]).unwrap(), 1.0);
        assert!(matches!(grecall(&[s], &[RelationGraphs::empty(3)]), Err(Error::GraphSizeMismatch(_))));
    }
}
