use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{Grid, Volume, Voxel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Nearest,
    Trilinear,
}

const SNAP: f64 = 1e-9;

/// Index of the voxel whose footprint contains continuous coordinate `c`,
/// or `None` outside the grid.
#[inline]
pub fn nearest_index(c: [f64; 3], dims: [usize; 3]) -> Option<[usize; 3]> {
    let mut out = [0usize; 3];
    for a in 0..3 {
        let r = c[a].round();
        if !(r >= 0.0 && r < dims[a] as f64) {
            return None;
        }
        out[a] = r as usize;
    }
    Some(out)
}

#[inline]
fn axis_stencil(c: f64, n: usize) -> Option<(usize, usize, f64)> {
    let last = n as f64 - 1.0;
    if !(c >= -0.5 && c <= last + 0.5) {
        return None;
    }
    let mut c = c.clamp(0.0, last);
    let r = c.round();
    if (c - r).abs() < SNAP {
        c = r;
    }
    let lo = c.floor();
    let f = c - lo;
    let lo = lo as usize;
    let hi = (lo + 1).min(n - 1);
    Some((lo, hi, f))
}

/// Trilinear interpolation stencil at continuous voxel coordinate `c`:
/// eight `(flat index, weight)` pairs whose weights sum to 1. Coordinates
/// within half a voxel outside the lattice are clamped to the border; further
/// out returns `None`.
#[inline]
pub fn trilinear_stencil(c: [f64; 3], dims: [usize; 3]) -> Option<[(usize, f64); 8]> {
    let (x0, x1, fx) = axis_stencil(c[0], dims[0])?;
    let (y0, y1, fy) = axis_stencil(c[1], dims[1])?;
    let (z0, z1, fz) = axis_stencil(c[2], dims[2])?;
    let idx = |i: usize, j: usize, k: usize| i + dims[0] * (j + dims[1] * k);
    let (gx, gy, gz) = (1.0 - fx, 1.0 - fy, 1.0 - fz);
    Some([
        (idx(x0, y0, z0), gx * gy * gz),
        (idx(x1, y0, z0), fx * gy * gz),
        (idx(x0, y1, z0), gx * fy * gz),
        (idx(x1, y1, z0), fx * fy * gz),
        (idx(x0, y0, z1), gx * gy * fz),
        (idx(x1, y0, z1), fx * gy * fz),
        (idx(x0, y1, z1), gx * fy * fz),
        (idx(x1, y1, z1), fx * fy * fz),
    ])
}

/// Samples `vol` at a continuous voxel coordinate; zero outside.
#[inline]
pub fn sample<T: Voxel>(vol: &Volume<T>, c: [f64; 3], mode: Interpolation) -> T {
    let dims = vol.dims();
    match mode {
        Interpolation::Nearest => match nearest_index(c, dims) {
            Some([i, j, k]) => vol.get(i, j, k),
            None => T::default(),
        },
        Interpolation::Trilinear => match trilinear_stencil(c, dims) {
            Some(st) => {
                let data = vol.data();
                let mut acc = 0.0;
                for (i, w) in st {
                    if w != 0.0 {
                        acc += w * data[i].to_f64();
                    }
                }
                T::from_f64(acc)
            }
            None => T::default(),
        },
    }
}

/// Resamples `vol` onto `target`: each output voxel takes the input value at
/// its world position. Samples outside the input field of view are zero.
pub fn resample<T: Voxel>(vol: &Volume<T>, target: &Grid, mode: Interpolation) -> Result<Volume<T>> {
    if T::CATEGORICAL && mode == Interpolation::Trilinear {
        return Err(Error::LabelInterpolation);
    }
    if vol.grid().same_lattice(target) && vol.grid() == target {
        return Ok(vol.clone());
    }
    let src = vol.grid();
    let data: Vec<T> = (0..target.len())
        .into_par_iter()
        .map(|idx| {
            let [i, j, k] = target.coords(idx);
            let w = target.voxel_to_world([i as f64, j as f64, k as f64]);
            sample(vol, src.world_to_voxel(w), mode)
        })
        .collect();
    Volume::new(target.clone(), data)
}
