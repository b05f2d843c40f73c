use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

/// Rigid motion: rotation by intrinsic Z-Y-X Euler angles (degrees), then
/// translation (mm). `rotation_deg` holds the angles about x, y and z, and the
/// rotation matrix is `Rz(z) * Ry(y) * Rx(x)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation_deg: [f64; 3],
    pub translation_mm: [f64; 3],
}

impl RigidTransform {
    pub const IDENTITY: RigidTransform = RigidTransform {
        rotation_deg: [0.0; 3],
        translation_mm: [0.0; 3],
    };

    pub fn new(rotation_deg: [f64; 3], translation_mm: [f64; 3]) -> Self {
        RigidTransform {
            rotation_deg,
            translation_mm,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.rotation_deg == [0.0; 3] && self.translation_mm == [0.0; 3]
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        let [ax, ay, az] = self.rotation_deg.map(f64::to_radians);
        let (sx, cx) = ax.sin_cos();
        let (sy, cy) = ay.sin_cos();
        let (sz, cz) = az.sin_cos();
        let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, cx, -sx, 0.0, sx, cx);
        let ry = Matrix3::new(cy, 0.0, sy, 0.0, 1.0, 0.0, -sy, 0.0, cy);
        let rz = Matrix3::new(cz, -sz, 0.0, sz, cz, 0.0, 0.0, 0.0, 1.0);
        rz * ry * rx
    }

    fn translation(&self) -> Vector3<f64> {
        Vector3::from(self.translation_mm)
    }

    /// `R p + t`.
    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let q = self.rotation_matrix() * Vector3::from(p) + self.translation();
        [q[0], q[1], q[2]]
    }

    /// `Rᵀ (p - t)`.
    pub fn apply_inverse(&self, p: [f64; 3]) -> [f64; 3] {
        let q = self.rotation_matrix().transpose() * (Vector3::from(p) - self.translation());
        [q[0], q[1], q[2]]
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation_matrix().transpose();
        let t = -(rt * self.translation());
        RigidTransform {
            rotation_deg: euler_zyx_deg(&rt),
            translation_mm: [t[0], t[1], t[2]],
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        let r = self.rotation_matrix() * other.rotation_matrix();
        let t = self.rotation_matrix() * other.translation() + self.translation();
        RigidTransform {
            rotation_deg: euler_zyx_deg(&r),
            translation_mm: [t[0], t[1], t[2]],
        }
    }
}

/// Recovers `[x, y, z]` angles (degrees) with `r = Rz(z) Ry(y) Rx(x)`.
fn euler_zyx_deg(r: &Matrix3<f64>) -> [f64; 3] {
    let sy = (-r[(2, 0)]).clamp(-1.0, 1.0);
    let y = sy.asin();
    let (x, z) = if sy.abs() < 1.0 - 1e-12 {
        (r[(2, 1)].atan2(r[(2, 2)]), r[(1, 0)].atan2(r[(0, 0)]))
    } else {
        // gimbal lock: fold everything into x
        (r[(0, 1)].atan2(r[(1, 1)]) * sy.signum(), 0.0)
    };
    [x.to_degrees(), y.to_degrees(), z.to_degrees()]
}

/// Motion of an object about a fixed centre: `p ↦ R (p - c) + c + t`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct CenteredMotion {
    rotation: Matrix3<f64>,
    center: Vector3<f64>,
    translation: Vector3<f64>,
    identity: bool,
}

impl CenteredMotion {
    pub fn new(t: &RigidTransform, center: [f64; 3]) -> Self {
        CenteredMotion {
            rotation: t.rotation_matrix(),
            center: Vector3::from(center),
            translation: Vector3::from(t.translation_mm),
            identity: t.is_identity(),
        }
    }

    /// Where object point `p` ends up after the motion.
    #[inline]
    pub fn forward(&self, p: [f64; 3]) -> [f64; 3] {
        let q = self.rotation * (Vector3::from(p) - self.center) + self.center + self.translation;
        [q[0], q[1], q[2]]
    }

    /// Which object point is seen at scanner position `p` after the motion.
    #[inline]
    pub fn backward(&self, p: [f64; 3]) -> [f64; 3] {
        if self.identity {
            return p;
        }
        let q = self.rotation.transpose() * (Vector3::from(p) - self.center - self.translation)
            + self.center;
        [q[0], q[1], q[2]]
    }

    /// Linear part of `backward`.
    pub fn backward_linear(&self) -> Matrix3<f64> {
        self.rotation.transpose()
    }
}
