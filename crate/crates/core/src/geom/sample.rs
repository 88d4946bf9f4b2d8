use nalgebra::Vector3;
use rand::Rng;

use crate::scene::TriMesh;
use crate::{seed, Error, Result};

/// Points drawn on a mesh surface with their face normals.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SurfaceSample {
    pub points: Vec<Vector3<f64>>,
    pub normals: Vec<Vector3<f64>>,
    pub source_face: Vec<usize>,
    /// Object each point came from; all zero for a single-mesh sample.
    pub source_object: Vec<usize>,
}

impl SurfaceSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Concatenates samples, tagging points with the given object ids.
    pub fn merge<'a>(parts: impl IntoIterator<Item = (usize, &'a SurfaceSample)>) -> SurfaceSample {
        let mut out = SurfaceSample::default();
        for (obj, s) in parts {
            out.points.extend_from_slice(&s.points);
            out.normals.extend_from_slice(&s.normals);
            out.source_face.extend_from_slice(&s.source_face);
            out.source_object.extend(std::iter::repeat_n(obj, s.len()));
        }
        out
    }
}

/// Area-weighted face choice followed by uniform barycentric sampling.
pub fn sample_surface(mesh: &TriMesh, m: usize, seed_value: u64) -> Result<SurfaceSample> {
    if mesh.face_count() == 0 {
        return Err(Error::EmptyMesh);
    }
    if m == 0 {
        return Err(Error::Config("surface sample count must be at least 1".into()));
    }
    let mut cdf = Vec::with_capacity(mesh.face_count());
    let mut total = 0.0;
    for f in 0..mesh.face_count() {
        total += mesh.face_area(f);
        cdf.push(total);
    }
    let mut rng = seed::rng(seed_value, &[0x5A4D]);
    let mut out = SurfaceSample {
        points: Vec::with_capacity(m),
        normals: Vec::with_capacity(m),
        source_face: Vec::with_capacity(m),
        source_object: vec![0; m],
    };
    for _ in 0..m {
        let u: f64 = rng.random::<f64>() * total;
        let f = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        let (r1, r2): (f64, f64) = (rng.random(), rng.random());
        let s = r1.sqrt();
        let [a, b, c] = mesh.triangle(f);
        out.points.push(a * (1.0 - s) + b * (s * (1.0 - r2)) + c * (s * r2));
        out.normals.push(mesh.normals()[f]);
        out.source_face.push(f);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::primitives::unit_cube;

    #[test]
    fn deterministic_and_on_surface() {
        let m = unit_cube();
        let a = sample_surface(&m, 300, 11).unwrap();
        let b = sample_surface(&m, 300, 11).unwrap();
        assert_eq!(a, b);
        for (p, &f) in a.points.iter().zip(&a.source_face) {
            let [v0, v1, v2] = m.triangle(f);
            // barycentric residual
            let n = (v1 - v0).cross(&(v2 - v0));
            let area2 = n.norm();
            let l0 = (v1 - p).cross(&(v2 - p)).norm() / area2;
            let l1 = (v2 - p).cross(&(v0 - p)).norm() / area2;
            let l2 = (v0 - p).cross(&(v1 - p)).norm() / area2;
            assert!((l0 + l1 + l2 - 1.0).abs() < 1e-9);
            assert!(n.dot(&(p - v0)).abs() / area2 < 1e-9);
        }
    }

    #[test]
    fn single_point() {
        let s = sample_surface(&unit_cube(), 1, 0).unwrap();
        assert_eq!(s.len(), 1);
        assert!((s.points[0].amax() - 0.5).abs() < 1e-12);
        assert!(sample_surface(&unit_cube(), 0, 0).is_err());
    }
}
