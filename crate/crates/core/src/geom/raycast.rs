//! Vertical ray casting between two meshes over their XZ overlap.

use nalgebra::Vector3;

use crate::ad::{Real, V3};
use crate::scene::TriMesh;

/// Rays per side of the sampling grid (8×8 = 64 rays).
pub const DEFAULT_RAY_RES: usize = 8;

/// Reported when the XZ footprints do not overlap.
pub const NO_OVERLAP: f64 = f64::INFINITY;

/// Faces whose XZ projection is thinner than this are skipped; vertical
/// walls are covered by their neighbours.
const FLAT_AREA_EPS: f64 = 1e-14;
const EDGE_EPS: f64 = 1e-12;

/// Which mesh and vertex defines one side of the overlap box.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoxSource {
    pub upper: bool,
    pub vertex: usize,
}

/// Everything needed to re-evaluate the minimising ray with other scalars.
#[derive(Clone, Debug, PartialEq)]
pub struct GapHit {
    pub gap: f64,
    pub res: usize,
    pub column: (usize, usize),
    pub upper_face: usize,
    pub lower_face: usize,
    /// Sources of `[min_x, max_x, min_z, max_z]` of the overlap box.
    pub bounds: [BoxSource; 4],
}

/// Height of the triangle's plane above `(x, z)` if the vertical line hits
/// the closed triangle.
pub fn ray_height(t: &[Vector3<f64>; 3], x: f64, z: f64) -> Option<f64> {
    let area2 = (t[1].x - t[0].x) * (t[2].z - t[0].z) - (t[2].x - t[0].x) * (t[1].z - t[0].z);
    if area2.abs() < FLAT_AREA_EPS {
        return None;
    }
    let w = |a: &Vector3<f64>, b: &Vector3<f64>| ((b.x - a.x) * (z - a.z) - (x - a.x) * (b.z - a.z)) / area2;
    let w0 = w(&t[1], &t[2]);
    let w1 = w(&t[2], &t[0]);
    let w2 = w(&t[0], &t[1]);
    if w0 < -EDGE_EPS || w1 < -EDGE_EPS || w2 < -EDGE_EPS {
        return None;
    }
    Some(w0 * t[0].y + w1 * t[1].y + w2 * t[2].y)
}

/// Plane height of a triangle at `(x, z)` over any scalar type; no hit test.
pub fn plane_height_at<S: Real>(t: &[V3<S>; 3], x: S, z: S) -> S {
    let area2 = (t[1].x - t[0].x) * (t[2].z - t[0].z) - (t[2].x - t[0].x) * (t[1].z - t[0].z);
    let w = |a: &V3<S>, b: &V3<S>| ((b.x - a.x) * (z - a.z) - (x - a.x) * (b.z - a.z)) / area2;
    w(&t[1], &t[2]) * t[0].y + w(&t[2], &t[0]) * t[1].y + w(&t[0], &t[1]) * t[2].y
}

fn extreme(m: &TriMesh, axis: usize, max: bool) -> (usize, f64) {
    let mut best = (0, m.vertices()[0][axis]);
    for (k, v) in m.vertices().iter().enumerate() {
        if (max && v[axis] > best.1) || (!max && v[axis] < best.1) {
            best = (k, v[axis]);
        }
    }
    best
}

/// Minimum over the ray grid of (upper's lowest hit − lower's highest hit),
/// or `None` if the footprints do not overlap or no ray hits both.
pub fn vertical_gap_detail(upper: &TriMesh, lower: &TriMesh, res: usize) -> Option<GapHit> {
    let mut bounds = [BoxSource { upper: true, vertex: 0 }; 4];
    let mut lim = [0.0; 4];
    for (slot, (axis, max)) in [(0, false), (0, true), (2, false), (2, true)].into_iter().enumerate() {
        let (ui, uv) = extreme(upper, axis, max);
        let (li, lv) = extreme(lower, axis, max);
        // Overlap box: larger of the minima, smaller of the maxima.
        let take_upper = if max { uv <= lv } else { uv >= lv };
        bounds[slot] = if take_upper { BoxSource { upper: true, vertex: ui } } else { BoxSource { upper: false, vertex: li } };
        lim[slot] = if take_upper { uv } else { lv };
    }
    if lim[0] > lim[1] || lim[2] > lim[3] {
        return None;
    }
    let near = |m: &TriMesh| -> Vec<usize> {
        (0..m.face_count())
            .filter(|&f| {
                let t = m.triangle(f);
                let (x0, x1) = (t[0].x.min(t[1].x).min(t[2].x), t[0].x.max(t[1].x).max(t[2].x));
                let (z0, z1) = (t[0].z.min(t[1].z).min(t[2].z), t[0].z.max(t[1].z).max(t[2].z));
                x1 >= lim[0] - EDGE_EPS && x0 <= lim[1] + EDGE_EPS && z1 >= lim[2] - EDGE_EPS && z0 <= lim[3] + EDGE_EPS
            })
            .collect()
    };
    let (uf, lf) = (near(upper), near(lower));
    let mut best: Option<GapHit> = None;
    for i in 0..res {
        let x = lim[0] + (i as f64 + 0.5) / res as f64 * (lim[1] - lim[0]);
        for k in 0..res {
            let z = lim[2] + (k as f64 + 0.5) / res as f64 * (lim[3] - lim[2]);
            let mut lo: Option<(f64, usize)> = None;
            for &f in &uf {
                if let Some(y) = ray_height(&upper.triangle(f), x, z) {
                    if lo.is_none_or(|(b, _)| y < b) {
                        lo = Some((y, f));
                    }
                }
            }
            let Some((ylo, fu)) = lo else { continue };
            let mut hi: Option<(f64, usize)> = None;
            for &f in &lf {
                if let Some(y) = ray_height(&lower.triangle(f), x, z) {
                    if hi.is_none_or(|(b, _)| y > b) {
                        hi = Some((y, f));
                    }
                }
            }
            let Some((yhi, fl)) = hi else { continue };
            let gap = ylo - yhi;
            if best.as_ref().is_none_or(|b| gap < b.gap) {
                best = Some(GapHit { gap, res, column: (i, k), upper_face: fu, lower_face: fl, bounds });
            }
        }
    }
    best
}

pub fn vertical_gap(upper: &TriMesh, lower: &TriMesh) -> f64 {
    vertical_gap_with(upper, lower, DEFAULT_RAY_RES)
}

pub fn vertical_gap_with(upper: &TriMesh, lower: &TriMesh, res: usize) -> f64 {
    vertical_gap_detail(upper, lower, res).map_or(NO_OVERLAP, |h| h.gap)
}

/// Re-evaluates a recorded hit with vertex positions supplied by the caller,
/// typically posed over dual numbers.
pub fn gap_from_hit<S: Real>(
    hit: &GapHit,
    upper: &TriMesh,
    lower: &TriMesh,
    upper_vertex: impl Fn(usize) -> V3<S>,
    lower_vertex: impl Fn(usize) -> V3<S>,
) -> S {
    let coord = |b: &BoxSource, axis: usize| -> S {
        let v = if b.upper { upper_vertex(b.vertex) } else { lower_vertex(b.vertex) };
        if axis == 0 {
            v.x
        } else {
            v.z
        }
    };
    let (x0, x1) = (coord(&hit.bounds[0], 0), coord(&hit.bounds[1], 0));
    let (z0, z1) = (coord(&hit.bounds[2], 2), coord(&hit.bounds[3], 2));
    let r = hit.res as f64;
    let x = x0 + (x1 - x0) * ((hit.column.0 as f64 + 0.5) / r);
    let z = z0 + (z1 - z0) * ((hit.column.1 as f64 + 0.5) / r);
    let tu = upper.faces()[hit.upper_face].map(&upper_vertex);
    let tl = lower.faces()[hit.lower_face].map(&lower_vertex);
    plane_height_at(&tu, x, z) - plane_height_at(&tl, x, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::primitives::{box_mesh, unit_cube};

    fn cube_at(x: f64, y: f64, z: f64) -> TriMesh {
        unit_cube().translated(&Vector3::new(x, y, z))
    }

    #[test]
    fn stacked_gaps() {
        let lower = cube_at(0.0, 0.5, 0.0);
        assert!((vertical_gap(&cube_at(0.2, 1.8, 0.1), &lower) - 0.3).abs() < 1e-12);
        assert!(vertical_gap(&cube_at(0.3, 1.5, 0.0), &lower).abs() < 1e-12);
        assert!((vertical_gap(&cube_at(0.0, 1.45, 0.0), &lower) + 0.05).abs() < 1e-12);
        assert_eq!(vertical_gap(&cube_at(3.0, 1.5, 0.0), &lower), NO_OVERLAP);
    }

    #[test]
    fn tilted_surface_matches_analytic_plane() {
        // Wedge-like lower surface: a box rotated about Z by a small angle.
        let a = 0.1f64;
        let rot = nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), a).into_inner();
        let lower = box_mesh(Vector3::new(4.0, 1.0, 4.0)).transformed(&rot, &Vector3::zeros());
        let upper = box_mesh(Vector3::new(0.4, 0.4, 0.4)).translated(&Vector3::new(0.0, 2.0, 0.0));
        let hit = vertical_gap_detail(&upper, &lower, 8).unwrap();
        // Oracle: the top face plane passes through R·(0, 0.5, 0) with normal R·ŷ.
        let n = rot * Vector3::y();
        let c = rot * Vector3::new(0.0, 0.5, 0.0);
        let x = -0.2 + (hit.column.0 as f64 + 0.5) / 8.0 * 0.4;
        let z = -0.2 + (hit.column.1 as f64 + 0.5) / 8.0 * 0.4;
        let y_top = c.y - (n.x * (x - c.x) + n.z * (z - c.z)) / n.y;
        assert!((hit.gap - (1.8 - y_top)).abs() < 1e-12);
        let g: f64 = gap_from_hit(&hit, &upper, &lower, |k| V3::from_f64(&upper.vertices()[k]), |k| {
            V3::from_f64(&lower.vertices()[k])
        });
        assert!((g - hit.gap).abs() < 1e-12);
    }
}
