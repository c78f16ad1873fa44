//! Rigid transforms, oriented boxes and voxel-grid index arithmetic.

use nalgebra::{Quaternion, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Proper rigid motion stored as a unit quaternion plus a translation.
///
/// `a.compose(&b)` is the transform that applies `b` first, then `a`, so a
/// chain such as world-from-ego composed with ego-from-sensor yields
/// world-from-sensor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TransformRecord", into = "TransformRecord")]
pub struct RigidTransform {
    rotation: UnitQuaternion<f64>,
    translation: Vec3,
}

/// JSON shape of a transform: quaternion as `[w, x, y, z]` plus translation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransformRecord {
    pub quaternion: [f64; 4],
    pub translation: [f64; 3],
}

impl TryFrom<TransformRecord> for RigidTransform {
    type Error = Error;

    fn try_from(r: TransformRecord) -> Result<Self> {
        RigidTransform::from_parts(r.quaternion, r.translation)
    }
}

impl From<RigidTransform> for TransformRecord {
    fn from(t: RigidTransform) -> Self {
        TransformRecord {
            quaternion: t.quaternion_wxyz(),
            translation: [t.translation.x, t.translation.y, t.translation.z],
        }
    }
}

// Already-unit quaternions are kept bit-for-bit so serialized poses reload exactly.
fn renormalize(q: Quaternion<f64>) -> UnitQuaternion<f64> {
    let n2 = q.norm_squared();
    if (n2 - 1.0).abs() <= 4.0 * f64::EPSILON {
        UnitQuaternion::new_unchecked(q)
    } else {
        UnitQuaternion::new_normalize(q)
    }
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vec3::zeros(),
        }
    }

    /// Builds a transform from a `[w, x, y, z]` quaternion (renormalized) and a translation.
    pub fn from_parts(quaternion_wxyz: [f64; 4], translation: [f64; 3]) -> Result<Self> {
        let [w, x, y, z] = quaternion_wxyz;
        let q = Quaternion::new(w, x, y, z);
        let n = q.norm();
        if !n.is_finite() || n < 1e-12 {
            return Err(Error::Format(format!(
                "quaternion {quaternion_wxyz:?} cannot be normalized"
            )));
        }
        if translation.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format(format!(
                "translation {translation:?} is not finite"
            )));
        }
        Ok(Self {
            rotation: renormalize(q),
            translation: Vec3::from(translation),
        })
    }

    pub fn from_rotation_translation(rotation: UnitQuaternion<f64>, translation: Vec3) -> Self {
        Self {
            rotation: renormalize(rotation.into_inner()),
            translation,
        }
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vec3::new(x, y, z),
        }
    }

    /// Rotation by `angle` radians about the z axis.
    pub fn from_yaw(angle: f64) -> Self {
        Self::from_axis_angle(Vec3::z(), angle)
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        Self {
            rotation: UnitQuaternion::from_axis_angle(&Unit::new_normalize(axis), angle),
            translation: Vec3::zeros(),
        }
    }

    pub fn with_translation(mut self, translation: Vec3) -> Self {
        self.translation = translation;
        self
    }

    pub fn rotation(&self) -> &UnitQuaternion<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> Vec3 {
        self.translation
    }

    pub fn quaternion_wxyz(&self) -> [f64; 4] {
        let q = self.rotation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    /// Yaw angle of the rotation about z, in radians.
    pub fn yaw(&self) -> f64 {
        self.rotation.euler_angles().2
    }

    /// `self ∘ other`: applies `other`, then `self`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: renormalize((self.rotation * other.rotation).into_inner()),
            translation: self.translation + self.rotation * other.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let inv = self.rotation.inverse();
        RigidTransform {
            rotation: inv,
            translation: -(inv * self.translation),
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    /// Applies only the rotational part, for directions.
    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }
}

/// Composes two transforms; see [`RigidTransform::compose`].
pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    a.compose(b)
}

pub fn apply(t: &RigidTransform, p: &Vec3) -> Vec3 {
    t.apply(p)
}

/// Oriented bounding box of one annotated object at one frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxRecord", into = "BoxRecord")]
pub struct OrientedBox {
    /// World-from-box pose; the box is centred on the pose origin.
    pub pose: RigidTransform,
    pub half_extents: Vec3,
    pub instance_id: String,
}

/// JSON shape of a box; `quaternion` is `[w, x, y, z]` and defaults to identity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoxRecord {
    pub instance_id: String,
    pub center: [f64; 3],
    #[serde(default = "identity_wxyz")]
    pub quaternion: [f64; 4],
    pub half_extents: [f64; 3],
}

fn identity_wxyz() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

impl TryFrom<BoxRecord> for OrientedBox {
    type Error = Error;

    fn try_from(r: BoxRecord) -> Result<Self> {
        let pose = RigidTransform::from_parts(r.quaternion, r.center)?;
        OrientedBox::new(r.instance_id, pose, Vec3::from(r.half_extents))
    }
}

impl From<OrientedBox> for BoxRecord {
    fn from(b: OrientedBox) -> Self {
        let c = b.center();
        BoxRecord {
            instance_id: b.instance_id,
            center: [c.x, c.y, c.z],
            quaternion: b.pose.quaternion_wxyz(),
            half_extents: [b.half_extents.x, b.half_extents.y, b.half_extents.z],
        }
    }
}

impl OrientedBox {
    pub fn new(
        instance_id: impl Into<String>,
        pose: RigidTransform,
        half_extents: Vec3,
    ) -> Result<Self> {
        if half_extents.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::Format(format!(
                "box half extents must be positive, got {:?}",
                half_extents.as_slice()
            )));
        }
        Ok(Self {
            pose,
            half_extents,
            instance_id: instance_id.into(),
        })
    }

    pub fn center(&self) -> Vec3 {
        self.pose.translation()
    }

    /// Boundary-inclusive containment, with the box grown by `margin` on every face.
    pub fn contains_with_margin(&self, p: &Vec3, margin: f64) -> bool {
        let local = self.pose.inverse().apply(p);
        (0..3).all(|i| local[i].abs() <= self.half_extents[i] + margin)
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        self.contains_with_margin(p, 0.0)
    }

    /// Same box re-expressed through `frame_from_world`.
    pub fn transformed(&self, frame_from_world: &RigidTransform) -> OrientedBox {
        OrientedBox {
            pose: frame_from_world.compose(&self.pose),
            half_extents: self.half_extents,
            instance_id: self.instance_id.clone(),
        }
    }

    /// Unsigned distance from `p` to the box surface.
    pub fn surface_distance(&self, p: &Vec3) -> f64 {
        let q = self.pose.inverse().apply(p);
        let d = q.abs() - self.half_extents;
        let outside = d.map(|v| v.max(0.0)).norm();
        if outside > 0.0 {
            outside
        } else {
            -d.max()
        }
    }
}

pub fn point_in_box(p: &Vec3, b: &OrientedBox) -> bool {
    b.contains(p)
}

/// Placement and resolution of a dense voxel grid in the t=0 ego frame.
///
/// Origin and voxel size are held at `f32` precision so the grid header of a
/// serialized sample reproduces the spec exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpecRecord", into = "GridSpecRecord")]
pub struct GridSpec {
    origin: Vec3,
    voxel_size: Vec3,
    dims: [usize; 3],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridSpecRecord {
    pub origin: [f64; 3],
    pub voxel_size: [f64; 3],
    pub dims: [usize; 3],
}

impl TryFrom<GridSpecRecord> for GridSpec {
    type Error = Error;

    fn try_from(r: GridSpecRecord) -> Result<Self> {
        GridSpec::new(r.origin, r.voxel_size, r.dims)
    }
}

impl From<GridSpec> for GridSpecRecord {
    fn from(g: GridSpec) -> Self {
        GridSpecRecord {
            origin: g.origin.into(),
            voxel_size: g.voxel_size.into(),
            dims: g.dims,
        }
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::new([-51.2, -51.2, -3.0], [0.4; 3], [256, 256, 16])
            .expect("default grid is valid")
    }
}

impl GridSpec {
    pub fn new(origin: [f64; 3], voxel_size: [f64; 3], dims: [usize; 3]) -> Result<Self> {
        let q = |v: f64| v as f32 as f64;
        if origin.iter().any(|v| !q(*v).is_finite()) {
            return Err(Error::Config(format!("grid origin {origin:?} is not finite")));
        }
        if voxel_size.iter().any(|v| !(q(*v).is_finite() && q(*v) > 0.0)) {
            return Err(Error::Config(format!(
                "voxel size {voxel_size:?} must be positive"
            )));
        }
        if dims.iter().any(|&d| d == 0 || d > u32::MAX as usize) {
            return Err(Error::Config(format!("grid dims {dims:?} out of range")));
        }
        if dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).is_none() {
            return Err(Error::Config(format!("grid dims {dims:?} overflow")));
        }
        Ok(Self {
            origin: Vec3::new(q(origin[0]), q(origin[1]), q(origin[2])),
            voxel_size: Vec3::new(q(voxel_size[0]), q(voxel_size[1]), q(voxel_size[2])),
            dims,
        })
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn voxel_size(&self) -> Vec3 {
        self.voxel_size
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn num_voxels(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    /// Maximum corner of the grid (exclusive).
    pub fn max_corner(&self) -> Vec3 {
        self.origin
            + Vec3::new(
                self.dims[0] as f64 * self.voxel_size.x,
                self.dims[1] as f64 * self.voxel_size.y,
                self.dims[2] as f64 * self.voxel_size.z,
            )
    }

    /// Linear offset with x varying fastest, then y, then z.
    #[inline]
    pub fn linear_index(&self, idx: [usize; 3]) -> usize {
        idx[0] + self.dims[0] * (idx[1] + self.dims[1] * idx[2])
    }

    #[inline]
    pub fn unravel(&self, linear: usize) -> [usize; 3] {
        let x = linear % self.dims[0];
        let rest = linear / self.dims[0];
        [x, rest % self.dims[1], rest / self.dims[1]]
    }

    /// Voxel containing `p` under half-open `[lo, hi)` intervals, or `None` outside the grid.
    #[inline]
    pub fn world_to_index(&self, p: &Vec3) -> Option<[usize; 3]> {
        let mut idx = [0usize; 3];
        for a in 0..3 {
            let g = (p[a] - self.origin[a]) / self.voxel_size[a];
            // Written so NaN also fails.
            if !(g >= 0.0 && g < self.dims[a] as f64) {
                return None;
            }
            idx[a] = (g.floor() as usize).min(self.dims[a] - 1);
        }
        Some(idx)
    }

    pub fn voxel_center(&self, idx: [usize; 3]) -> Vec3 {
        Vec3::new(
            self.origin.x + (idx[0] as f64 + 0.5) * self.voxel_size.x,
            self.origin.y + (idx[1] as f64 + 0.5) * self.voxel_size.y,
            self.origin.z + (idx[2] as f64 + 0.5) * self.voxel_size.z,
        )
    }
}

pub fn world_to_index(spec: &GridSpec, p: &Vec3) -> Option<[usize; 3]> {
    spec.world_to_index(p)
}
