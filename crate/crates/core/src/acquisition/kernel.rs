use nalgebra::Vector3;

use crate::acquisition::{SliceProfile, StackGeometry};
use crate::volume::{CenteredMotion, Grid, RigidTransform};

const FWHM_TO_SIGMA: f64 = 0.424_660_900_144_009_5; // 1 / (2 sqrt(2 ln 2))

fn subdivisions(width: f64, step: f64) -> usize {
    ((width / step - 1e-9).ceil() as usize).max(1)
}

fn midpoints(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let h = (hi - lo) / n as f64;
    (0..n).map(move |i| lo + (i as f64 + 0.5) * h)
}

/// Through-plane `(offset mm, weight)` pairs; weights are non-negative and sum to 1.
pub fn profile_weights(thickness_mm: f64, profile: SliceProfile, step_mm: f64) -> Vec<(f64, f64)> {
    let (half, n) = match profile {
        SliceProfile::Box => (0.5 * thickness_mm, subdivisions(thickness_mm, step_mm)),
        SliceProfile::Gaussian => (thickness_mm, subdivisions(2.0 * thickness_mm, step_mm)),
    };
    let sigma = thickness_mm * FWHM_TO_SIGMA;
    let raw: Vec<(f64, f64)> = midpoints(-half, half, n)
        .map(|z| {
            let w = match profile {
                SliceProfile::Box => 1.0,
                SliceProfile::Gaussian => (-0.5 * (z / sigma).powi(2)).exp(),
            };
            (z, w)
        })
        .collect();
    let total: f64 = raw.iter().map(|(_, w)| w).sum();
    raw.into_iter().map(|(z, w)| (z, w / total)).collect()
}

/// Point spread of one slice sample: weighted offsets `(u, v, normal)` in mm
/// around the sample centre. Box in-plane over `inplane_width_mm`, slice
/// profile through-plane; sub-samples are spaced at most `step_mm` apart.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceKernel {
    samples: Vec<([f64; 3], f64)>,
}

impl SliceKernel {
    pub fn new(
        inplane_width_mm: [f64; 2],
        thickness_mm: f64,
        profile: SliceProfile,
        step_mm: f64,
    ) -> Self {
        let [wu, wv] = inplane_width_mm;
        let nu = subdivisions(wu, step_mm);
        let nv = subdivisions(wv, step_mm);
        let through = profile_weights(thickness_mm, profile, step_mm);
        let w_plane = 1.0 / (nu * nv) as f64;
        let mut samples = Vec::with_capacity(nu * nv * through.len());
        for &(z, wz) in &through {
            for v in midpoints(-0.5 * wv, 0.5 * wv, nv) {
                for u in midpoints(-0.5 * wu, 0.5 * wu, nu) {
                    samples.push(([u, v, z], w_plane * wz));
                }
            }
        }
        SliceKernel { samples }
    }

    pub fn samples(&self) -> &[([f64; 3], f64)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Affine map from pixel `(i, j)` of one moved slice, plus a kernel offset,
/// to continuous voxel coordinates of an HR grid.
#[derive(Clone, Debug)]
pub(crate) struct SliceMap {
    pub base: [f64; 3],
    pub di: [f64; 3],
    pub dj: [f64; 3],
    /// Kernel offsets mapped to HR voxel deltas, with weights.
    pub deltas: Vec<([f64; 3], f64)>,
}

impl SliceMap {
    pub fn new(
        geom: &StackGeometry,
        stack_grid: &Grid,
        k: usize,
        motion: &RigidTransform,
        hr: &Grid,
        kernel: &SliceKernel,
    ) -> Self {
        let m = CenteredMotion::new(motion, geom.center_mm);
        let to_hr = |p: [f64; 3]| hr.world_to_voxel(m.backward(p));
        let base = to_hr(stack_grid.voxel_to_world([0.0, 0.0, k as f64]));
        let lin = hr.inverse_linear() * m.backward_linear();
        let [eu, ev, en] = geom.frame().map(Vector3::from);
        let [du, dv] = geom.inplane_spacing_mm;
        let arr = |x: Vector3<f64>| [x[0], x[1], x[2]];
        let di = arr(lin * eu * du);
        let dj = arr(lin * ev * dv);
        let deltas = kernel
            .samples()
            .iter()
            .map(|&([u, v, n], w)| (arr(lin * (eu * u + ev * v + en * n)), w))
            .collect();
        SliceMap {
            base,
            di,
            dj,
            deltas,
        }
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize) -> [f64; 3] {
        let (fi, fj) = (i as f64, j as f64);
        [0, 1, 2].map(|a| self.base[a] + fi * self.di[a] + fj * self.dj[a])
    }
}
