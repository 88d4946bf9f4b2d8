//! Closed-set triangle–triangle intersection by separating axes.
//!
//! Candidate axes are both face normals, the nine edge–edge cross products
//! and the six in-plane edge normals (which settle the coplanar case). The
//! triangles are disjoint iff some axis separates their projections by more
//! than [`TRI_EPS`]; touching therefore counts as intersecting.

use nalgebra::Vector3;

use crate::scene::mesh::MIN_FACE_AREA;
use crate::{Error, Result};

pub type Tri = [Vector3<f64>; 3];

pub const TRI_EPS: f64 = 1e-9;

pub fn tri_tri_intersect(a: &Tri, b: &Tri) -> Result<bool> {
    for t in [a, b] {
        if 0.5 * (t[1] - t[0]).cross(&(t[2] - t[0])).norm() <= MIN_FACE_AREA {
            return Err(Error::DegenerateTriangle);
        }
    }
    Ok(triangles_intersect(a, b))
}

#[inline]
fn separates(axis: &Vector3<f64>, scale: f64, a: &Tri, b: &Tri) -> bool {
    let len = axis.norm();
    if len <= 1e-14 * scale {
        return false;
    }
    let ax = axis / len;
    let (mut amin, mut amax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut bmin, mut bmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..3 {
        let pa = a[k].dot(&ax);
        let pb = b[k].dot(&ax);
        amin = amin.min(pa);
        amax = amax.max(pa);
        bmin = bmin.min(pb);
        bmax = bmax.max(pb);
    }
    amax < bmin - TRI_EPS || bmax < amin - TRI_EPS
}

/// Unchecked predicate; callers guarantee non-degenerate input.
pub fn triangles_intersect(a: &Tri, b: &Tri) -> bool {
    let ea = [a[1] - a[0], a[2] - a[1], a[0] - a[2]];
    let eb = [b[1] - b[0], b[2] - b[1], b[0] - b[2]];
    let na = ea[0].cross(&(a[2] - a[0]));
    let nb = eb[0].cross(&(b[2] - b[0]));
    let la: [f64; 3] = std::array::from_fn(|i| ea[i].norm());
    let lb: [f64; 3] = std::array::from_fn(|i| eb[i].norm());
    if separates(&na, la[0] * la[2], a, b) || separates(&nb, lb[0] * lb[2], a, b) {
        return false;
    }
    for i in 0..3 {
        for j in 0..3 {
            if separates(&ea[i].cross(&eb[j]), la[i] * lb[j], a, b) {
                return false;
            }
        }
    }
    for i in 0..3 {
        if separates(&na.cross(&ea[i]), na.norm() * la[i], a, b)
            || separates(&nb.cross(&eb[i]), nb.norm() * lb[i], a, b)
        {
            return false;
        }
    }
    true
}
