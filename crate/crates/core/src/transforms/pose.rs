use nalgebra::{Matrix3, Point3, Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::TransformError;

/// Rotation followed by translation: `p ↦ R·p + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoseRepr", into = "PoseRepr")]
pub struct RigidPose {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
}

#[derive(Serialize, Deserialize)]
struct PoseRepr {
    rotation_wxyz: [f64; 4],
    translation: [f64; 3],
}

impl TryFrom<PoseRepr> for RigidPose {
    type Error = TransformError;

    fn try_from(r: PoseRepr) -> Result<Self, Self::Error> {
        if !r.translation.iter().all(|c| c.is_finite()) {
            return Err(TransformError::InvalidTransform("non-finite translation".into()));
        }
        Ok(Self {
            rotation: quaternion_from_wxyz(r.rotation_wxyz)?,
            translation: Vector3::from(r.translation),
        })
    }
}

impl From<RigidPose> for PoseRepr {
    fn from(p: RigidPose) -> Self {
        Self {
            rotation_wxyz: quaternion_to_wxyz(&p.rotation),
            translation: p.translation.into(),
        }
    }
}

pub(crate) fn quaternion_from_wxyz(q: [f64; 4]) -> Result<UnitQuaternion<f64>, TransformError> {
    let raw = Quaternion::new(q[0], q[1], q[2], q[3]);
    let norm = raw.norm();
    if !norm.is_finite() || norm == 0.0 {
        return Err(TransformError::InvalidTransform(format!("quaternion {q:?} cannot be normalized")));
    }
    Ok(UnitQuaternion::from_quaternion(raw))
}

pub(crate) fn quaternion_to_wxyz(q: &UnitQuaternion<f64>) -> [f64; 4] {
    [q.w, q.i, q.j, q.k]
}

/// Re-projects onto the unit sphere so long chains of products do not drift.
fn renormalized(q: UnitQuaternion<f64>) -> UnitQuaternion<f64> {
    UnitQuaternion::from_quaternion(q.into_inner())
}

impl Default for RigidPose {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidPose {
    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation: renormalized(rotation),
            translation,
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self::new(UnitQuaternion::identity(), translation)
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.rotation.to_rotation_matrix().into_inner()
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidPose) -> RigidPose {
        RigidPose {
            rotation: renormalized(self.rotation * other.rotation),
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidPose {
        let inv = self.rotation.inverse();
        RigidPose {
            rotation: inv,
            translation: -(inv * self.translation),
        }
    }

    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        self.rotation * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// Moves the pose along its tangent space.
    ///
    /// The world-frame rotation vector `omega` spins the body about the world
    /// position of `pivot` (given in the body frame) through the exponential
    /// map, and `delta` then shifts that pivot. Keeping the pivot on the body
    /// makes updates independent of where the world origin sits.
    pub fn retract(&self, omega: &Vector3<f64>, delta: &Vector3<f64>, pivot: &Point3<f64>) -> RigidPose {
        let rotation = renormalized(UnitQuaternion::from_scaled_axis(*omega) * self.rotation);
        let center = self.apply(pivot);
        RigidPose {
            rotation,
            translation: center.coords + delta - rotation * pivot.coords,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.translation.iter().all(|c| c.is_finite()) && self.rotation.coords.iter().all(|c| c.is_finite())
    }
}

/// `p ↦ s·R·p + t` with `s > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SimilarityRepr", into = "SimilarityRepr")]
pub struct SimilarityTransform {
    scale: f64,
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
}

#[derive(Serialize, Deserialize)]
struct SimilarityRepr {
    scale: f64,
    rotation_wxyz: [f64; 4],
    translation: [f64; 3],
}

impl TryFrom<SimilarityRepr> for SimilarityTransform {
    type Error = TransformError;

    fn try_from(r: SimilarityRepr) -> Result<Self, Self::Error> {
        if !r.translation.iter().all(|c| c.is_finite()) {
            return Err(TransformError::InvalidTransform("non-finite translation".into()));
        }
        Self::new(r.scale, quaternion_from_wxyz(r.rotation_wxyz)?, Vector3::from(r.translation))
    }
}

impl From<SimilarityTransform> for SimilarityRepr {
    fn from(t: SimilarityTransform) -> Self {
        Self {
            scale: t.scale,
            rotation_wxyz: quaternion_to_wxyz(&t.rotation),
            translation: t.translation.into(),
        }
    }
}

impl SimilarityTransform {
    pub fn new(scale: f64, rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Result<Self, TransformError> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(TransformError::InvalidTransform(format!("scale must be positive, got {scale}")));
        }
        Ok(Self {
            scale,
            rotation: renormalized(rotation),
            translation,
        })
    }

    pub fn identity() -> Self {
        Self::from_rigid(&RigidPose::identity())
    }

    pub fn from_rigid(pose: &RigidPose) -> Self {
        Self {
            scale: 1.0,
            rotation: pose.rotation,
            translation: pose.translation,
        }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Drops the scale.
    pub fn rigid_part(&self) -> RigidPose {
        RigidPose::new(self.rotation, self.translation)
    }

    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from((self.rotation * p.coords) * self.scale + self.translation)
    }

    pub fn compose(&self, other: &SimilarityTransform) -> SimilarityTransform {
        SimilarityTransform {
            scale: self.scale * other.scale,
            rotation: renormalized(self.rotation * other.rotation),
            translation: (self.rotation * other.translation) * self.scale + self.translation,
        }
    }

    pub fn inverse(&self) -> SimilarityTransform {
        let inv = self.rotation.inverse();
        SimilarityTransform {
            scale: 1.0 / self.scale,
            rotation: inv,
            translation: -(inv * self.translation) / self.scale,
        }
    }
}
