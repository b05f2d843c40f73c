use crate::error::{Error, Result};
use crate::volume::IntensityVolume;

/// `10·log10(peak² / MSE)` over `mask` (all voxels if `None`), with `peak`
/// the maximum of the reference `b` inside the mask. Identical inputs give
/// `f64::INFINITY`.
pub fn psnr(a: &IntensityVolume, b: &IntensityVolume, mask: Option<&[bool]>) -> Result<f64> {
    if !a.grid().same_lattice(b.grid()) {
        return Err(Error::GridMismatch("psnr inputs must share a grid".into()));
    }
    if let Some(m) = mask {
        if m.len() != a.data().len() {
            return Err(Error::GridMismatch("mask size differs from the volumes".into()));
        }
    }
    let inside = |i: usize| mask.is_none_or(|m| m[i]);
    let (mut sse, mut n, mut peak) = (0.0, 0usize, f64::NEG_INFINITY);
    for (i, (&x, &y)) in a.data().iter().zip(b.data()).enumerate() {
        if inside(i) {
            let d = x as f64 - y as f64;
            sse += d * d;
            n += 1;
            peak = peak.max(y as f64);
        }
    }
    if n == 0 {
        return Err(Error::InvalidParameter("psnr mask is empty".into()));
    }
    if sse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / (sse / n as f64)).log10())
}
