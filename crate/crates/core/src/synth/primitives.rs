//! Parametric meshes. Every mesh is centred on its bounding-box centre.

use nalgebra::Vector3;

use crate::scene::TriMesh;

/// Axis-aligned box with the given edge lengths.
pub fn box_mesh(size: Vector3<f64>) -> TriMesh {
    let h = size / 2.0;
    let v = (0..8)
        .map(|k| {
            Vector3::new(
                if k & 1 == 0 { -h.x } else { h.x },
                if k & 2 == 0 { -h.y } else { h.y },
                if k & 4 == 0 { -h.z } else { h.z },
            )
        })
        .collect();
    let faces = vec![
        [0, 4, 6], [0, 6, 2], // -x
        [1, 3, 7], [1, 7, 5], // +x
        [0, 1, 5], [0, 5, 4], // -y
        [2, 6, 7], [2, 7, 3], // +y
        [0, 2, 3], [0, 3, 1], // -z
        [4, 5, 7], [4, 7, 6], // +z
    ];
    TriMesh::new(v, faces).expect("box with positive extents")
}

pub fn unit_cube() -> TriMesh {
    box_mesh(Vector3::repeat(1.0))
}

/// Closed cylinder about +Y.
pub fn cylinder(radius: f64, height: f64, segments: usize) -> TriMesh {
    let s = segments.max(3);
    let h = height / 2.0;
    let mut v = Vec::with_capacity(2 * s + 2);
    for k in 0..s {
        let a = 2.0 * std::f64::consts::PI * k as f64 / s as f64;
        let (sin, cos) = a.sin_cos();
        v.push(Vector3::new(radius * cos, -h, radius * sin));
        v.push(Vector3::new(radius * cos, h, radius * sin));
    }
    let (bot, top) = (2 * s, 2 * s + 1);
    v.push(Vector3::new(0.0, -h, 0.0));
    v.push(Vector3::new(0.0, h, 0.0));
    let mut faces = Vec::with_capacity(4 * s);
    for k in 0..s {
        let (b0, t0) = (2 * k, 2 * k + 1);
        let (b1, t1) = (2 * ((k + 1) % s), 2 * ((k + 1) % s) + 1);
        faces.push([b0, t0, t1]);
        faces.push([b0, t1, b1]);
        faces.push([bot, b0, b1]);
        faces.push([top, t1, t0]);
    }
    TriMesh::new(v, faces).expect("cylinder with positive extents")
}

/// Table: a top slab on four square legs inset from the corners. `size` is
/// the overall bounding box.
pub fn table(size: Vector3<f64>, top_thickness: f64, leg_width: f64) -> TriMesh {
    let h = size / 2.0;
    let top = box_mesh(Vector3::new(size.x, top_thickness, size.z))
        .translated(&Vector3::new(0.0, h.y - top_thickness / 2.0, 0.0));
    let leg_h = size.y - top_thickness;
    let inset = leg_width / 2.0 + 0.25 * leg_width;
    let mut parts = vec![top];
    for (sx, sz) in [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)] {
        let c = Vector3::new(sx * (h.x - inset), -h.y + leg_h / 2.0, sz * (h.z - inset));
        parts.push(box_mesh(Vector3::new(leg_width, leg_h, leg_width)).translated(&c));
    }
    TriMesh::merge(&parts).expect("table parts are valid")
}
