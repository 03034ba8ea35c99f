use nalgebra::{Matrix3, UnitQuaternion, Vector3, Vector4};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Tolerance on `RᵀR = I` and `det R = 1` accepted by [`Rotation::new`].
pub const ROTATION_TOLERANCE: f64 = 1e-12;

/// Tolerance on the norm of a vector that is supposed to be a unit direction.
pub const UNIT_TOLERANCE: f64 = 1e-9;

/// Below this dot product with `ŷ` a direction is treated as antipodal to `ŷ`.
const ANTIPODAL_THRESHOLD: f64 = -1.0 + 1e-12;

/// A proper rotation of 3D space (orthogonal, determinant +1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    /// Validate a matrix and wrap it as a rotation.
    pub fn new(matrix: Matrix3<f64>) -> Result<Rotation> {
        let gram = matrix.transpose() * matrix;
        let orth_err = (gram - Matrix3::identity()).amax();
        if !orth_err.is_finite() || orth_err > ROTATION_TOLERANCE {
            return Err(Error::Precondition(format!(
                "matrix is not orthogonal (max |RᵀR - I| = {orth_err:e})"
            )));
        }
        let det = matrix.determinant();
        if (det - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(Error::Precondition(format!(
                "matrix has determinant {det}, expected +1"
            )));
        }
        Ok(Rotation(matrix))
    }

    pub fn identity() -> Rotation {
        Rotation(Matrix3::identity())
    }

    /// Rotation by `angle` radians about the y axis (right-handed).
    pub fn about_y(angle: f64) -> Rotation {
        let (s, c) = angle.sin_cos();
        Rotation(Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c))
    }

    pub fn about_x(angle: f64) -> Rotation {
        let (s, c) = angle.sin_cos();
        Rotation(Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c))
    }

    pub fn from_quaternion(q: &UnitQuaternion<f64>) -> Rotation {
        Rotation(q.to_rotation_matrix().into_inner())
    }

    /// Haar-uniform random rotation.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Rotation {
        loop {
            let v = Vector4::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            );
            if v.norm() > 1e-6 {
                let q = UnitQuaternion::from_quaternion(nalgebra::Quaternion::from(v));
                return Rotation::from_quaternion(&q);
            }
        }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn inverse(&self) -> Rotation {
        Rotation(self.0.transpose())
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    /// `self · other`, i.e. apply `other` first.
    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation(self.0 * other.0)
    }
}

/// Normalise a direction, rejecting zero-length or non-finite input.
pub fn normalize(v: &Vector3<f64>) -> Result<Vector3<f64>> {
    let n = v.norm();
    if !n.is_finite() || n == 0.0 {
        return Err(Error::Argument(format!("cannot normalise vector {v:?}")));
    }
    Ok(v / n)
}

pub(crate) fn check_unit(v: &Vector3<f64>) -> Result<()> {
    let n = v.norm();
    if !n.is_finite() || (n - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::Precondition(format!(
            "direction must be a unit vector, got norm {n}"
        )));
    }
    Ok(())
}

/// Rotation `R` with `R · direction = ŷ`.
///
/// The general case is the minimal-angle rotation about `direction × ŷ`. When
/// `direction` is (numerically) `-ŷ` the rotation by π about x is returned.
/// The result depends only on the bits of the input.
pub fn alignment_rotation(direction: &Vector3<f64>) -> Result<Rotation> {
    if direction.norm() == 0.0 {
        return Err(Error::Argument("zero-length direction".into()));
    }
    check_unit(direction)?;
    let d = direction.normalize();
    let c = d.y;
    if c < ANTIPODAL_THRESHOLD {
        return Ok(Rotation::about_x(std::f64::consts::PI));
    }
    // k = d × ŷ, Rodrigues with sinθ = |k|, cosθ = c:
    // R = I + [k]× + [k]×² / (1 + c)
    let k = Vector3::new(-d.z, 0.0, d.x);
    let kx = Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
    let m = Matrix3::identity() + kx + kx * kx / (1.0 + c);
    Ok(Rotation(m))
}
