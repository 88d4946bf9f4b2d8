use nalgebra::{Matrix3, Vector3};

use crate::geom::aabb::Aabb3;
use crate::{Error, Result};

/// Faces with area at or below this are rejected.
pub const MIN_FACE_AREA: f64 = 1e-12;

/// Triangle mesh with outward (CCW) face normals.
#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Vector3<f64>>,
    faces: Vec<[usize; 3]>,
    normals: Vec<Vector3<f64>>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vector3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::EmptyMesh);
        }
        if let Some(v) = vertices.iter().find(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidMesh(format!("non-finite vertex {v:?}")));
        }
        let mut normals = Vec::with_capacity(faces.len());
        for (fi, f) in faces.iter().enumerate() {
            if f.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::InvalidMesh(format!(
                    "face {fi} references vertex outside 0..{}",
                    vertices.len()
                )));
            }
            let n = (vertices[f[1]] - vertices[f[0]]).cross(&(vertices[f[2]] - vertices[f[0]]));
            let len = n.norm();
            if 0.5 * len <= MIN_FACE_AREA {
                return Err(Error::InvalidMesh(format!("face {fi} is degenerate")));
            }
            normals.push(n / len);
        }
        Ok(Self { vertices, faces, normals })
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn normals(&self) -> &[Vector3<f64>] {
        &self.normals
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn triangle(&self, f: usize) -> [Vector3<f64>; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.triangle(f);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Enclosed volume by the divergence theorem; absolute value so that
    /// inverted winding still yields a positive mass proxy.
    pub fn volume(&self) -> f64 {
        let v: f64 = (0..self.faces.len())
            .map(|f| {
                let [a, b, c] = self.triangle(f);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum();
        v.abs()
    }

    /// Volume centroid of the closed mesh, falling back to the vertex mean
    /// for (near) zero-volume shells.
    pub fn volume_centroid(&self) -> Vector3<f64> {
        let mut acc = Vector3::zeros();
        let mut vol = 0.0;
        for f in 0..self.faces.len() {
            let [a, b, c] = self.triangle(f);
            let v = a.dot(&b.cross(&c)) / 6.0;
            acc += v * (a + b + c) / 4.0;
            vol += v;
        }
        if vol.abs() < 1e-12 {
            self.vertex_mean()
        } else {
            acc / vol
        }
    }

    pub fn vertex_mean(&self) -> Vector3<f64> {
        self.vertices.iter().sum::<Vector3<f64>>() / self.vertices.len() as f64
    }

    pub fn aabb(&self) -> Aabb3 {
        Aabb3::from_points(self.vertices.iter())
    }

    /// Applies `v' = R v + p`; normals are rotated, topology is unchanged.
    pub fn transformed(&self, rot: &Matrix3<f64>, p: &Vector3<f64>) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(|v| rot * v + p).collect(),
            faces: self.faces.clone(),
            normals: self.normals.iter().map(|n| rot * n).collect(),
        }
    }

    pub fn translated(&self, p: &Vector3<f64>) -> TriMesh {
        self.transformed(&Matrix3::identity(), p)
    }

    /// Concatenates several meshes into one (used for composite primitives).
    pub fn merge(parts: &[TriMesh]) -> Result<TriMesh> {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for m in parts {
            let off = vertices.len();
            vertices.extend_from_slice(&m.vertices);
            faces.extend(m.faces.iter().map(|f| [f[0] + off, f[1] + off, f[2] + off]));
        }
        TriMesh::new(vertices, faces)
    }

    pub fn lowest_y(&self) -> f64 {
        self.vertices.iter().map(|v| v.y).fold(f64::INFINITY, f64::min)
    }

    pub fn highest_y(&self) -> f64 {
        self.vertices.iter().map(|v| v.y).fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::primitives::unit_cube;

    #[test]
    fn rejects_bad_indices_and_degenerate_faces() {
        let v = vec![Vector3::zeros(), Vector3::x(), Vector3::y()];
        assert!(matches!(TriMesh::new(v.clone(), vec![[0, 1, 3]]), Err(Error::InvalidMesh(_))));
        assert!(matches!(TriMesh::new(v.clone(), vec![[0, 1, 1]]), Err(Error::InvalidMesh(_))));
        assert!(matches!(TriMesh::new(v, vec![]), Err(Error::EmptyMesh)));
    }

    #[test]
    fn cube_normals_are_unit_and_outward() {
        let m = unit_cube();
        for (f, n) in m.normals().iter().enumerate() {
            assert!((n.norm() - 1.0).abs() < 1e-9);
            let [a, b, c] = m.triangle(f);
            let centroid = (a + b + c) / 3.0;
            assert!(n.dot(&centroid) > 0.0, "face {f} normal points inward");
        }
        assert!((m.surface_area() - 6.0).abs() < 1e-12);
        assert!((m.volume() - 1.0).abs() < 1e-12);
        assert!(m.volume_centroid().norm() < 1e-12);
    }
}
