//! Exact point/triangle/mesh distances and inside tests for closed meshes.

use nalgebra::Vector3;

use super::tritri::{triangles_intersect, Tri};
use crate::scene::TriMesh;

/// Closest point on a triangle (Ericson's region classification).
pub fn closest_point_on_triangle(p: &Vector3<f64>, t: &Tri) -> Vector3<f64> {
    let [a, b, c] = *t;
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

pub fn point_triangle_distance(p: &Vector3<f64>, t: &Tri) -> f64 {
    (p - closest_point_on_triangle(p, t)).norm()
}

/// Shortest distance between segments `p0p1` and `q0q1`.
pub fn segment_distance(p0: &Vector3<f64>, p1: &Vector3<f64>, q0: &Vector3<f64>, q1: &Vector3<f64>) -> f64 {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);
    let (s, t);
    if a <= 1e-30 && e <= 1e-30 {
        return r.norm();
    }
    if a <= 1e-30 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= 1e-30 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let s0 = if denom > 0.0 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            } else {
                t = t0;
                s = s0;
            }
        }
    }
    ((p0 + d1 * s) - (q0 + d2 * t)).norm()
}

pub fn triangle_distance(a: &Tri, b: &Tri) -> f64 {
    if triangles_intersect(a, b) {
        return 0.0;
    }
    let mut d = f64::INFINITY;
    for k in 0..3 {
        d = d.min(point_triangle_distance(&a[k], b)).min(point_triangle_distance(&b[k], a));
        for l in 0..3 {
            d = d.min(segment_distance(&a[k], &a[(k + 1) % 3], &b[l], &b[(l + 1) % 3]));
        }
    }
    d
}

/// Minimum distance between two meshes' surfaces, or `cutoff` if they are at
/// least that far apart.
pub fn mesh_distance(a: &TriMesh, b: &TriMesh, cutoff: f64) -> f64 {
    let bb = b.aabb().inflated(cutoff);
    let ba = a.aabb().inflated(cutoff);
    if !bb.overlaps(&a.aabb()) {
        return cutoff;
    }
    let boxes = |m: &TriMesh, other: &crate::geom::aabb::Aabb3| -> Vec<(usize, crate::geom::aabb::Aabb3)> {
        (0..m.face_count())
            .filter_map(|f| {
                let bx = crate::geom::aabb::Aabb3::from_points(m.triangle(f).iter());
                bx.overlaps(other).then_some((f, bx))
            })
            .collect()
    };
    let fa = boxes(a, &bb);
    let fb = boxes(b, &ba);
    let mut best = cutoff;
    for (i, bi) in &fa {
        let bi = bi.inflated(best);
        let ta = a.triangle(*i);
        for (j, bj) in &fb {
            if !bi.overlaps(bj) {
                continue;
            }
            best = best.min(triangle_distance(&ta, &b.triangle(*j)));
            if best == 0.0 {
                return 0.0;
            }
        }
    }
    best
}

/// Generalised winding number of a closed mesh about `p` (±1 inside, 0
/// outside).
pub fn winding_number(mesh: &TriMesh, p: &Vector3<f64>) -> f64 {
    let mut total = 0.0;
    for f in 0..mesh.face_count() {
        let [a, b, c] = mesh.triangle(f);
        let (a, b, c) = (a - p, b - p, c - p);
        let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
        let num = a.dot(&b.cross(&c));
        let den = la * lb * lc + a.dot(&b) * lc + b.dot(&c) * la + c.dot(&a) * lb;
        total += 2.0 * num.atan2(den);
    }
    total / (4.0 * std::f64::consts::PI)
}

/// Distance to the surface, negative inside.
pub fn signed_distance(mesh: &TriMesh, p: &Vector3<f64>) -> f64 {
    let d = (0..mesh.face_count())
        .map(|f| point_triangle_distance(p, &mesh.triangle(f)))
        .fold(f64::INFINITY, f64::min);
    if d > 0.0 && winding_number(mesh, p).abs() > 0.5 {
        -d
    } else {
        d
    }
}
