//! Continuous 6-D rotation representation.
//!
//! A rotation is stored as the first two columns of its matrix. Decoding
//! applies Gram–Schmidt to the two 3-vectors and completes the frame with a
//! cross product, so any non-degenerate 6-vector maps into SO(3).

use nalgebra::{Matrix3, Vector3};

use crate::ad::{Real, V3};
use crate::{Error, Result};

pub type Rot6 = [f64; 6];

pub const IDENTITY_6D: Rot6 = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0];

/// Below this norm a 3-vector (or its orthogonal residual) is degenerate.
pub const DEGENERATE_NORM: f64 = 1e-8;

/// Gram–Schmidt frame `[b1, b2, b3]` (matrix columns) of a 6-vector, or
/// `None` when the input is degenerate.
pub fn rot6d_frame<S: Real>(r: &[S; 6]) -> Option<[V3<S>; 3]> {
    let a1 = V3::new(r[0], r[1], r[2]);
    let a2 = V3::new(r[3], r[4], r[5]);
    let n1 = a1.norm();
    if !(n1.re() > DEGENERATE_NORM) || !(a2.norm().re() > DEGENERATE_NORM) {
        return None;
    }
    let b1 = a1.scale(S::cst(1.0) / n1);
    let u = a2 - b1.scale(b1.dot(&a2));
    let nu = u.norm();
    if !(nu.re() > DEGENERATE_NORM) {
        return None;
    }
    let b2 = u.scale(S::cst(1.0) / nu);
    let b3 = b1.cross(&b2);
    Some([b1, b2, b3])
}

pub fn rot6d_to_matrix(r: &Rot6) -> Result<Matrix3<f64>> {
    let [b1, b2, b3] = rot6d_frame(r).ok_or(Error::DegenerateRotation)?;
    Ok(Matrix3::from_columns(&[b1.re(), b2.re(), b3.re()]))
}

/// Decoding used inside the sampler: degenerate inputs become the identity
/// so that early, very noisy states never abort the chain.
pub fn rot6d_to_matrix_lenient(r: &Rot6) -> Matrix3<f64> {
    match rot6d_to_matrix(r) {
        Ok(m) => m,
        Err(_) => {
            log::warn!("degenerate 6-D rotation {r:?}; substituting identity");
            Matrix3::identity()
        }
    }
}

pub fn orthonormality_error(m: &Matrix3<f64>) -> f64 {
    (m.transpose() * m - Matrix3::identity()).amax()
}

pub fn matrix_to_rot6d(m: &Matrix3<f64>) -> Result<Rot6> {
    let err = orthonormality_error(m);
    if !(err <= 1e-6) || !(m.determinant() > 0.0) {
        return Err(Error::NotARotation(err));
    }
    Ok([m[(0, 0)], m[(1, 0)], m[(2, 0)], m[(0, 1)], m[(1, 1)], m[(2, 1)]])
}

/// Rotation by `theta` about +Y (world up).
pub fn yaw_matrix(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn yaw_rot6d(theta: f64) -> Rot6 {
    let m = yaw_matrix(theta);
    [m[(0, 0)], m[(1, 0)], m[(2, 0)], m[(0, 1)], m[(1, 1)], m[(2, 1)]]
}

/// Unit quaternion `(w, x, y, z)` to rotation matrix.
pub fn quaternion_matrix(w: f64, x: f64, y: f64, z: f64) -> Matrix3<f64> {
    let n = (w * w + x * x + y * y + z * z).sqrt();
    let (w, x, y, z) = (w / n, x / n, y / n, z / n);
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// Shortest-arc rotation taking unit vector `from` onto unit vector `to`.
pub fn align_vectors(from: &Vector3<f64>, to: &Vector3<f64>) -> Matrix3<f64> {
    let c = from.dot(to);
    let axis = from.cross(to);
    let s = axis.norm();
    if s < 1e-12 {
        if c > 0.0 {
            return Matrix3::identity();
        }
        // 180 degrees about any axis orthogonal to `from`.
        let helper = if from.x.abs() < 0.9 { Vector3::x() } else { Vector3::z() };
        let k = from.cross(&helper).normalize();
        return 2.0 * k * k.transpose() - Matrix3::identity();
    }
    let k = axis / s;
    let kx = Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
    Matrix3::identity() + s * kx + (1.0 - c) * kx * kx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ad::Dual;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn canonical_and_scaled_inputs_decode_to_identity() {
        assert_eq!(rot6d_to_matrix(&IDENTITY_6D).unwrap(), Matrix3::identity());
        assert_eq!(rot6d_to_matrix(&[2.0, 0.0, 0.0, 0.0, 3.0, 0.0]).unwrap(), Matrix3::identity());
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            rot6d_to_matrix(&[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]),
            Err(Error::DegenerateRotation)
        ));
        assert!(matches!(
            rot6d_to_matrix(&[0.0, 0.0, 0.0, 0.0, 1.0, 0.0]),
            Err(Error::DegenerateRotation)
        ));
        assert_eq!(rot6d_to_matrix_lenient(&[0.0; 6]), Matrix3::identity());
    }

    #[test]
    fn yaw_90_encoding() {
        let r = matrix_to_rot6d(&yaw_matrix(std::f64::consts::FRAC_PI_2)).unwrap();
        let expect = [0.0, 0.0, -1.0, 0.0, 1.0, 0.0];
        for (a, b) in r.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
        let back = rot6d_to_matrix(&r).unwrap();
        assert!((back - yaw_matrix(std::f64::consts::FRAC_PI_2)).amax() < 1e-9);
    }

    #[test]
    fn unit_random_inputs_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let mut r = [0.0; 6];
            for x in r.iter_mut() {
                *x = rng.sample::<f64, _>(StandardNormal);
            }
            let m = rot6d_to_matrix(&r).unwrap();
            // Explicit product rather than the helper used by the decoder.
            let mut worst: f64 = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    let dot: f64 = (0..3).map(|k| m[(k, i)] * m[(k, j)]).sum();
                    worst = worst.max((dot - if i == j { 1.0 } else { 0.0 }).abs());
                }
            }
            assert!(worst < 1e-9);
            assert!((m.determinant() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_reflections() {
        let m = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0);
        assert!(matches!(matrix_to_rot6d(&m), Err(Error::NotARotation(_))));
    }

    #[test]
    fn dual_jacobian_matches_finite_differences() {
        let r0 = [0.7, -0.2, 0.4, 0.1, 0.9, -0.5];
        let rd: [Dual<6>; 6] = std::array::from_fn(|k| Dual::var(r0[k], k));
        let frame = rot6d_frame(&rd).unwrap();
        let h = 1e-6;
        for k in 0..6 {
            let mut rp = r0;
            let mut rm = r0;
            rp[k] += h;
            rm[k] -= h;
            let fd = (rot6d_to_matrix(&rp).unwrap() - rot6d_to_matrix(&rm).unwrap()) / (2.0 * h);
            for (col, b) in frame.iter().enumerate() {
                let an = Vector3::new(b.x.d[k], b.y.d[k], b.z.d[k]);
                assert!((an - fd.column(col)).amax() < 1e-8, "slot {k} col {col}");
            }
        }
    }

    #[test]
    fn align_vectors_maps_from_onto_to() {
        let a = Vector3::new(0.3, 0.8, -0.2).normalize();
        for to in [Vector3::y(), -Vector3::y(), a, -a] {
            let r = align_vectors(&a, &to);
            assert!((r * a - to).norm() < 1e-12);
            assert!(orthonormality_error(&r) < 1e-12);
        }
    }
}
