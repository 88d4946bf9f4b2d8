use nalgebra::Vector3;

use crate::ad::{Dual, Real, V3};
use crate::scene::rotation::rot6d_frame;

/// Rigid pose over a generic scalar: `v' = [b1 b2 b3] v + p`.
#[derive(Clone, Copy, Debug)]
pub struct Pose<S> {
    pub cols: [V3<S>; 3],
    pub p: V3<S>,
}

impl<S: Real> Pose<S> {
    /// Degenerate rotations decode to the identity, as in the sampler.
    pub fn new(p: [S; 3], r: [S; 6]) -> Self {
        let cols = rot6d_frame(&r).unwrap_or_else(|| {
            let (o, z) = (S::cst(1.0), S::zero());
            [V3::new(o, z, z), V3::new(z, o, z), V3::new(z, z, o)]
        });
        Self { cols, p: V3::new(p[0], p[1], p[2]) }
    }

    pub fn apply(&self, v: &Vector3<f64>) -> V3<S> {
        self.cols[0].scale_f(v.x) + self.cols[1].scale_f(v.y) + self.cols[2].scale_f(v.z) + self.p
    }
}

impl Pose<f64> {
    pub fn from_row(row: &[f64; 9]) -> Self {
        Self::new([row[0], row[1], row[2]], std::array::from_fn(|k| row[3 + k]))
    }
}

impl Pose<Dual<18>> {
    /// Pose whose nine parameters are seeded in slots `base..base + 9`.
    pub fn seeded(row: &[f64; 9], base: usize) -> Self {
        let v: [Dual<18>; 9] = std::array::from_fn(|k| Dual::var(row[k], base + k));
        Self::new([v[0], v[1], v[2]], std::array::from_fn(|k| v[3 + k]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::rotation::{rot6d_to_matrix, yaw_rot6d};

    #[test]
    fn matches_matrix_transform() {
        let r = yaw_rot6d(0.7);
        let row = [1.0, 2.0, 3.0, r[0], r[1], r[2], r[3], r[4], r[5]];
        let v = Vector3::new(0.3, -0.2, 0.9);
        let expect = rot6d_to_matrix(&r).unwrap() * v + Vector3::new(1.0, 2.0, 3.0);
        assert!((Pose::from_row(&row).apply(&v).re() - expect).norm() < 1e-14);
        let d = Pose::seeded(&row, 9).apply(&v);
        assert_eq!(d.x.d[9], 1.0);
        assert_eq!(d.x.d[0], 0.0);
    }
}
