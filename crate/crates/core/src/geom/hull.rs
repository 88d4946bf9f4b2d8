//! Convex hulls of XZ projections and the planar queries built on them.

use nalgebra::{Vector2, Vector3};

use crate::ad::Real;
use crate::scene::TriMesh;

/// Cross products below this count as collinear during construction.
const COLLINEAR_EPS: f64 = 1e-12;

/// Convex polygon in the XZ plane, counter-clockwise when seen with +X to the
/// right and +Z up. Fewer than three vertices means the input was degenerate
/// (a point or a segment).
#[derive(Clone, Debug, PartialEq)]
pub struct Hull2D {
    pub vertices: Vec<Vector2<f64>>,
    /// Index of each hull vertex in the input point list.
    pub source: Vec<usize>,
}

pub fn xz(p: &Vector3<f64>) -> Vector2<f64> {
    Vector2::new(p.x, p.z)
}

fn cross2(o: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

impl Hull2D {
    /// Monotone-chain hull; collinear and duplicate points are dropped.
    pub fn from_points(points: &[Vector2<f64>]) -> Hull2D {
        let mut idx: Vec<usize> = (0..points.len()).collect();
        idx.sort_by(|&a, &b| {
            points[a].x.total_cmp(&points[b].x).then(points[a].y.total_cmp(&points[b].y)).then(a.cmp(&b))
        });
        idx.dedup_by(|a, b| points[*a] == points[*b]);
        if idx.len() < 3 {
            return Hull2D { vertices: idx.iter().map(|&i| points[i]).collect(), source: idx };
        }
        let mut chain: Vec<usize> = Vec::with_capacity(2 * idx.len());
        for pass in 0..2 {
            let start = chain.len();
            let iter: Box<dyn Iterator<Item = &usize>> =
                if pass == 0 { Box::new(idx.iter()) } else { Box::new(idx.iter().rev()) };
            for &i in iter {
                while chain.len() >= start + 2
                    && cross2(&points[chain[chain.len() - 2]], &points[chain[chain.len() - 1]], &points[i])
                        <= COLLINEAR_EPS
                {
                    chain.pop();
                }
                chain.push(i);
            }
            chain.pop();
        }
        if chain.len() < 3 {
            // All points collinear: keep the two extremes.
            let ends = vec![idx[0], *idx.last().unwrap()];
            return Hull2D { vertices: ends.iter().map(|&i| points[i]).collect(), source: ends };
        }
        Hull2D { vertices: chain.iter().map(|&i| points[i]).collect(), source: chain }
    }

    pub fn is_degenerate(&self) -> bool {
        self.vertices.len() < 3
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.vertices)
    }

    /// Closed containment test.
    pub fn contains(&self, p: &Vector2<f64>) -> bool {
        self.distance(p) == 0.0
    }

    pub fn distance(&self, p: &Vector2<f64>) -> f64 {
        point_to_hull_distance(p, self)
    }

    pub fn centroid(&self) -> Vector2<f64> {
        let v = &self.vertices;
        let a = self.area();
        if v.len() < 3 || a <= 0.0 {
            return v.iter().sum::<Vector2<f64>>() / v.len().max(1) as f64;
        }
        let mut c = Vector2::zeros();
        for k in 0..v.len() {
            let (p, q) = (v[k], v[(k + 1) % v.len()]);
            c += (p + q) * (p.x * q.y - q.x * p.y);
        }
        c / (6.0 * a)
    }
}

/// Hull of a mesh's vertices projected onto XZ.
pub fn xz_hull(mesh: &TriMesh) -> Hull2D {
    let pts: Vec<Vector2<f64>> = mesh.vertices().iter().map(xz).collect();
    Hull2D::from_points(&pts)
}

pub fn polygon_area(v: &[Vector2<f64>]) -> f64 {
    if v.len() < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for k in 0..v.len() {
        let (p, q) = (v[k], v[(k + 1) % v.len()]);
        s += p.x * q.y - q.x * p.y;
    }
    0.5 * s
}

fn segment_distance(p: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + ab * t)).norm()
}

/// Zero inside or on the hull, otherwise the distance to its boundary.
pub fn point_to_hull_distance(p: &Vector2<f64>, hull: &Hull2D) -> f64 {
    let v = &hull.vertices;
    match v.len() {
        0 => f64::INFINITY,
        1 => (p - v[0]).norm(),
        2 => segment_distance(p, &v[0], &v[1]),
        n => {
            if (0..n).all(|k| cross2(&v[k], &v[(k + 1) % n], p) >= 0.0) {
                return 0.0;
            }
            (0..n).map(|k| segment_distance(p, &v[k], &v[(k + 1) % n])).fold(f64::INFINITY, f64::min)
        }
    }
}

/// [`point_to_hull_distance`] over a differentiable scalar. The hull vertex
/// order is taken as given; the nearest feature is chosen by real parts.
pub fn point_to_polygon_distance<S: Real>(p: (S, S), poly: &[(S, S)]) -> S {
    let n = poly.len();
    let seg = |a: (S, S), b: (S, S)| -> S {
        let (ex, ez) = (b.0 - a.0, b.1 - a.1);
        let len2 = ex * ex + ez * ez;
        let t = if len2.re() > 0.0 {
            let t = ((p.0 - a.0) * ex + (p.1 - a.1) * ez) / len2;
            if t.re() < 0.0 {
                S::zero()
            } else if t.re() > 1.0 {
                S::cst(1.0)
            } else {
                t
            }
        } else {
            S::zero()
        };
        let (dx, dz) = (p.0 - (a.0 + ex * t), p.1 - (a.1 + ez * t));
        (dx * dx + dz * dz).sqrt()
    };
    match n {
        0 => S::cst(f64::INFINITY),
        1 => seg(poly[0], poly[0]),
        2 => seg(poly[0], poly[1]),
        _ => {
            let inside = (0..n).all(|k| {
                let (a, b) = (poly[k], poly[(k + 1) % n]);
                ((b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)).re() >= 0.0
            });
            if inside {
                return S::zero();
            }
            let mut best = seg(poly[0], poly[1]);
            for k in 1..n {
                best = best.min(seg(poly[k], poly[(k + 1) % n]));
            }
            best
        }
    }
}

/// Area of the intersection of two convex CCW polygons.
pub fn intersection_area(a: &Hull2D, b: &Hull2D) -> f64 {
    if a.is_degenerate() || b.is_degenerate() {
        return 0.0;
    }
    let mut out = a.vertices.clone();
    let m = b.vertices.len();
    for k in 0..m {
        if out.is_empty() {
            break;
        }
        let (e0, e1) = (b.vertices[k], b.vertices[(k + 1) % m]);
        let input = std::mem::take(&mut out);
        for i in 0..input.len() {
            let cur = input[i];
            let prev = input[(i + input.len() - 1) % input.len()];
            let c_in = cross2(&e0, &e1, &cur);
            let p_in = cross2(&e0, &e1, &prev);
            if c_in >= 0.0 {
                if p_in < 0.0 {
                    out.push(prev + (cur - prev) * (p_in / (p_in - c_in)));
                }
                out.push(cur);
            } else if p_in >= 0.0 {
                out.push(prev + (cur - prev) * (p_in / (p_in - c_in)));
            }
        }
    }
    polygon_area(&out).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::rotation::yaw_matrix;
    use crate::synth::primitives::unit_cube;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square() -> Hull2D {
        Hull2D::from_points(&[
            Vector2::new(0.0, 0.0),
            Vector2::new(1.0, 0.0),
            Vector2::new(1.0, 1.0),
            Vector2::new(0.0, 1.0),
            Vector2::new(0.5, 0.0),
            Vector2::new(0.5, 0.5),
        ])
    }

    #[test]
    fn unit_square_queries() {
        let h = square();
        assert_eq!(h.vertices.len(), 4);
        assert!((h.area() - 1.0).abs() < 1e-15);
        assert_eq!(h.distance(&Vector2::new(0.5, 0.5)), 0.0);
        assert_eq!(h.distance(&Vector2::new(2.0, 0.5)), 1.0);
        assert!((h.distance(&Vector2::new(2.0, 2.0)) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(h.distance(&Vector2::new(1.0, 0.3)), 0.0);
    }

    #[test]
    fn cube_hulls() {
        let h = xz_hull(&unit_cube());
        assert_eq!(h.vertices.len(), 4);
        assert!((h.area() - 1.0).abs() < 1e-12);
        let r = unit_cube().transformed(&yaw_matrix(std::f64::consts::FRAC_PI_4), &Vector3::zeros());
        let d = xz_hull(&r);
        assert_eq!(d.vertices.len(), 4);
        let s = 0.5f64.sqrt();
        for v in &d.vertices {
            let on_axis = (v.x.abs() < 1e-12 && (v.y.abs() - s).abs() < 1e-12)
                || (v.y.abs() < 1e-12 && (v.x.abs() - s).abs() < 1e-12);
            assert!(on_axis, "{v:?}");
        }
    }

    #[test]
    fn random_points_are_contained() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<Vector2<f64>> =
            (0..100).map(|_| Vector2::new(rng.random::<f64>(), rng.random::<f64>())).collect();
        let h = Hull2D::from_points(&pts);
        assert!(h.area() > 0.0);
        for p in &pts {
            assert!(h.distance(p) < 1e-12);
        }
        for (v, &s) in h.vertices.iter().zip(&h.source) {
            assert_eq!(*v, pts[s]);
        }
        let n = h.vertices.len();
        for k in 0..n {
            assert!(cross2(&h.vertices[k], &h.vertices[(k + 1) % n], &h.vertices[(k + 2) % n]) > 0.0);
        }
    }

    #[test]
    fn collinear_input_degrades_to_segment() {
        let pts: Vec<_> = (0..5).map(|k| Vector2::new(k as f64, 2.0 * k as f64)).collect();
        let h = Hull2D::from_points(&pts);
        assert!(h.is_degenerate());
        assert_eq!(h.vertices.len(), 2);
        assert!((h.distance(&Vector2::new(5.0, 8.0)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn clipping_area() {
        let a = square();
        let shifted: Vec<_> = a.vertices.iter().map(|v| v + Vector2::new(0.5, 0.25)).collect();
        let b = Hull2D::from_points(&shifted);
        assert!((intersection_area(&a, &b) - 0.5 * 0.75).abs() < 1e-12);
        assert!((intersection_area(&a, &a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generic_distance_agrees() {
        let h = square();
        let poly: Vec<(f64, f64)> = h.vertices.iter().map(|v| (v.x, v.y)).collect();
        for p in [(2.0, 0.5), (-1.0, -1.0), (0.2, 0.4), (0.5, 3.0)] {
            let d = point_to_polygon_distance(p, &poly);
            assert!((d - h.distance(&Vector2::new(p.0, p.1))).abs() < 1e-15);
        }
    }
}
