//! Deterministic geometric shape descriptor.

use std::cmp::Ordering;

use nalgebra::{Matrix3, Vector3};

use super::TriMesh;
use crate::geom::sample::sample_surface;
use crate::Result;

pub const DESCRIPTOR_LEN: usize = 8;
const DESCRIPTOR_SAMPLES: usize = 256;
const DESCRIPTOR_SEED: u64 = 0x5EED_DE5C;

/// `[extent_x, extent_y, extent_z, surface_area, volume, pc1_std, pc2_std, pc3_std]`.
pub type ShapeDescriptor = [f64; DESCRIPTOR_LEN];

fn cmp_vec(a: &Vector3<f64>, b: &Vector3<f64>) -> Ordering {
    a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)).then(a.z.total_cmp(&b.z))
}

/// Mesh rebuilt from its triangles in a canonical order, so that anything
/// derived from it is independent of vertex and face ordering.
fn canonical_mesh(mesh: &TriMesh) -> Result<TriMesh> {
    let mut tris: Vec<[Vector3<f64>; 3]> = (0..mesh.face_count())
        .map(|f| {
            let t = mesh.triangle(f);
            let k = (0..3).min_by(|&i, &j| cmp_vec(&t[i], &t[j])).unwrap();
            [t[k], t[(k + 1) % 3], t[(k + 2) % 3]]
        })
        .collect();
    tris.sort_by(|a, b| cmp_vec(&a[0], &b[0]).then(cmp_vec(&a[1], &b[1])).then(cmp_vec(&a[2], &b[2])));
    let vertices = tris.iter().flatten().copied().collect();
    let faces = (0..tris.len()).map(|f| [3 * f, 3 * f + 1, 3 * f + 2]).collect();
    TriMesh::new(vertices, faces)
}

pub fn shape_descriptor(mesh: &TriMesh) -> Result<ShapeDescriptor> {
    let canon = canonical_mesh(mesh)?;
    let bb = mesh.aabb();
    let ext = bb.max - bb.min;
    let sample = sample_surface(&canon, DESCRIPTOR_SAMPLES, DESCRIPTOR_SEED)?;
    let n = sample.points.len() as f64;
    let mean = sample.points.iter().sum::<Vector3<f64>>() / n;
    let mut cov = Matrix3::zeros();
    for p in &sample.points {
        let d = p - mean;
        cov += d * d.transpose();
    }
    cov /= n;
    let mut eig: Vec<f64> = cov.symmetric_eigenvalues().iter().map(|v| v.max(0.0).sqrt()).collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    Ok([ext.x, ext.y, ext.z, canon.surface_area(), canon.volume(), eig[0], eig[1], eig[2]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::primitives::{box_mesh, unit_cube};

    #[test]
    fn cube_extents_and_area() {
        let d = shape_descriptor(&unit_cube()).unwrap();
        assert_eq!(&d[..3], &[1.0, 1.0, 1.0]);
        assert!((d[3] - 6.0).abs() < 1e-12);
        assert!((d[4] - 1.0).abs() < 1e-12);
        let d2 = shape_descriptor(&box_mesh(Vector3::new(2.0, 2.0, 2.0))).unwrap();
        assert_eq!(&d2[..3], &[2.0, 2.0, 2.0]);
        assert!((d2[3] - 24.0).abs() < 1e-12);
    }

    #[test]
    fn face_and_vertex_order_do_not_matter() {
        let m = box_mesh(Vector3::new(1.0, 0.4, 0.7));
        let mut faces = m.faces().to_vec();
        faces.reverse();
        faces.rotate_left(5);
        // also rotate indices inside each face, keeping winding
        for f in faces.iter_mut() {
            f.rotate_left(1);
        }
        let mut verts = m.vertices().to_vec();
        verts.reverse();
        let nv = verts.len();
        let faces: Vec<[usize; 3]> = faces.iter().map(|f| f.map(|i| nv - 1 - i)).collect();
        let shuffled = TriMesh::new(verts, faces).unwrap();
        assert_eq!(shape_descriptor(&m).unwrap(), shape_descriptor(&shuffled).unwrap());
    }
}
