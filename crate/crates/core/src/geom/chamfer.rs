//! Exact nearest-neighbour search on a uniform grid and the one-way signed
//! Chamfer distance built on it.

use nalgebra::Vector3;

use super::sample::SurfaceSample;

/// Distance reported for every point when there are no other objects.
pub const NO_OTHERS_SENTINEL: f64 = 1e3;

#[derive(Clone, Debug)]
pub struct PointGrid {
    points: Vec<Vector3<f64>>,
    origin: Vector3<f64>,
    cell: f64,
    dims: [usize; 3],
    cell_start: Vec<u32>,
    items: Vec<u32>,
}

impl PointGrid {
    pub fn new(points: &[Vector3<f64>]) -> Self {
        assert!(!points.is_empty(), "PointGrid needs at least one point");
        let mut lo = points[0];
        let mut hi = points[0];
        for p in points {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let ext = hi - lo;
        let max_ext = ext.max().max(1e-9);
        let target_cells = (points.len() as f64 / 2.0).max(1.0);
        let vol = ext.iter().map(|e| e.max(max_ext / 64.0)).product::<f64>();
        let cell = (vol / target_cells).cbrt().max(max_ext / 128.0);
        let dims: [usize; 3] = std::array::from_fn(|k| ((ext[k] / cell).floor() as usize + 1).min(256));
        let n_cells = dims[0] * dims[1] * dims[2];
        let mut counts = vec![0u32; n_cells + 1];
        let cells: Vec<usize> = points
            .iter()
            .map(|p| {
                let c = Self::cell_of(&lo, cell, &dims, p);
                Self::linear(&dims, c)
            })
            .collect();
        for &c in &cells {
            counts[c + 1] += 1;
        }
        for i in 0..n_cells {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; points.len()];
        for (i, &c) in cells.iter().enumerate() {
            items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        Self { points: points.to_vec(), origin: lo, cell, dims, cell_start: counts, items }
    }

    fn cell_of(origin: &Vector3<f64>, cell: f64, dims: &[usize; 3], p: &Vector3<f64>) -> [usize; 3] {
        std::array::from_fn(|k| {
            let c = ((p[k] - origin[k]) / cell).floor();
            if c < 0.0 {
                0
            } else {
                (c as usize).min(dims[k] - 1)
            }
        })
    }

    fn linear(dims: &[usize; 3], c: [usize; 3]) -> usize {
        (c[2] * dims[1] + c[1]) * dims[0] + c[0]
    }

    /// Index and Euclidean distance of the nearest stored point (ties go to
    /// the lower index).
    pub fn nearest(&self, p: &Vector3<f64>) -> (usize, f64) {
        let c = Self::cell_of(&self.origin, self.cell, &self.dims, p);
        let mut best = (usize::MAX, f64::INFINITY);
        let max_r = *self.dims.iter().max().unwrap();
        for r in 0..=max_r {
            let lo: [isize; 3] = std::array::from_fn(|k| (c[k] as isize - r as isize).max(0));
            let hi: [isize; 3] = std::array::from_fn(|k| (c[k] as isize + r as isize).min(self.dims[k] as isize - 1));
            let (cx, cy, cz) = (c[0] as isize, c[1] as isize, c[2] as isize);
            let r_i = r as isize;
            for z in lo[2]..=hi[2] {
                for y in lo[1]..=hi[1] {
                    // Interior rows of the shell only touch its two x faces.
                    let full = (z - cz).abs() == r_i || (y - cy).abs() == r_i;
                    let xs: &[isize] = if full { &[] } else { &[cx - r_i, cx + r_i] };
                    let mut visit = |x: isize| {
                        if x < lo[0] || x > hi[0] {
                            return;
                        }
                        let li = Self::linear(&self.dims, [x as usize, y as usize, z as usize]);
                        for &it in &self.items[self.cell_start[li] as usize..self.cell_start[li + 1] as usize] {
                            let d2 = (self.points[it as usize] - p).norm_squared();
                            let it = it as usize;
                            if d2 < best.1 || (d2 == best.1 && it < best.0) {
                                best = (it, d2);
                            }
                        }
                    };
                    if full {
                        for x in lo[0]..=hi[0] {
                            visit(x);
                        }
                    } else {
                        for &x in xs {
                            visit(x);
                        }
                    }
                }
            }
            // Lower bound on the distance to any cell outside the visited block.
            let mut bound = f64::INFINITY;
            for k in 0..3 {
                if (c[k] as isize - r as isize) > 0 {
                    let plane = self.origin[k] + (c[k] - r) as f64 * self.cell;
                    bound = bound.min(p[k] - plane);
                }
                if c[k] + r + 1 < self.dims[k] {
                    let plane = self.origin[k] + (c[k] + r + 1) as f64 * self.cell;
                    bound = bound.min(plane - p[k]);
                }
            }
            if bound == f64::INFINITY || (best.0 != usize::MAX && best.1 <= bound.max(0.0).powi(2)) {
                break;
            }
        }
        (best.0, best.1.sqrt())
    }
}

/// For each point of `points`, the distance to the nearest point of
/// `others`, negative when the point lies behind that neighbour's normal.
pub fn signed_chamfer(points: &SurfaceSample, others: &SurfaceSample) -> Vec<f64> {
    if others.is_empty() {
        return vec![NO_OTHERS_SENTINEL; points.len()];
    }
    let grid = PointGrid::new(&others.points);
    signed_chamfer_with(points, others, &grid)
}

pub fn signed_chamfer_with(points: &SurfaceSample, others: &SurfaceSample, grid: &PointGrid) -> Vec<f64> {
    points
        .points
        .iter()
        .map(|p| {
            let (q, d) = grid.nearest(p);
            if others.normals[q].dot(&(p - others.points[q])) < 0.0 {
                -d
            } else {
                d
            }
        })
        .collect()
}
