use std::ops::Range;

use rayon::prelude::*;

use crate::acquisition::{SimulatedStack, SliceKernel, SliceMap};
use crate::error::{Error, Result};
use crate::volume::{trilinear_stencil, Grid};

/// Bilinear in-plane interpolation from the acquisition grid of a slice to
/// the grid the stack is stored on.
#[derive(Clone, Debug)]
struct Interp {
    base: [f64; 2],
    di: [f64; 2],
    dj: [f64; 2],
}

#[derive(Clone, Debug)]
struct SliceOp {
    stack: usize,
    /// Acquisition model of each acquired pixel.
    map: SliceMap,
    acq_dims: [usize; 2],
    acq_mask: Vec<bool>,
    interp: Option<Interp>,
    dims: [usize; 2],
    rows: Range<usize>,
}

/// Matrix-free slice acquisition model `A`: HR voxels to the concatenated
/// pixels of every slice of every stack.
///
/// Each acquired pixel moves the HR volume by the slice's rigid transform,
/// integrates through the slice profile and over the acquired in-plane
/// pixel, sampling the HR volume trilinearly. Stacks stored on an
/// interpolated in-plane grid add the bilinear interpolation from the
/// acquired pixels. Rows whose support leaves the HR grid are masked out and
/// read as zero.
#[derive(Clone, Debug)]
pub struct ForwardOperator {
    hr: Grid,
    slices: Vec<SliceOp>,
    stack_rows: Vec<Range<usize>>,
    mask: Vec<bool>,
}

#[inline(always)]
fn axis(c: f64, n: usize) -> (usize, usize, f64) {
    let mut c = c.clamp(0.0, (n - 1) as f64);
    let r = c.round();
    if (c - r).abs() < 1e-9 {
        c = r;
    }
    let lo = c.floor();
    let lo_i = lo as usize;
    (lo_i, usize::from(lo_i + 1 < n), c - lo)
}

/// Visits the `(hr index, weight)` taps of one unmasked acquired pixel:
/// trilinear weights of every kernel sample, scaled by the kernel weight.
#[inline]
fn pixel_taps(map: &SliceMap, i: usize, j: usize, dims: [usize; 3], mut f: impl FnMut(usize, f64)) {
    let c = map.center(i, j);
    let sx = dims[0];
    let sxy = dims[0] * dims[1];
    for &(d, w) in &map.deltas {
        let (x0, ox, fx) = axis(c[0] + d[0], dims[0]);
        let (y0, oy, fy) = axis(c[1] + d[1], dims[1]);
        let (z0, oz, fz) = axis(c[2] + d[2], dims[2]);
        let base = x0 + sx * y0 + sxy * z0;
        let (dy, dz) = (oy * sx, oz * sxy);
        let (gx, gy, gz) = (1.0 - fx, 1.0 - fy, 1.0 - fz);
        let (a, b) = (w * gz, w * fz);
        f(base, a * gy * gx);
        f(base + ox, a * gy * fx);
        f(base + dy, a * fy * gx);
        f(base + dy + ox, a * fy * fx);
        f(base + dz, b * gy * gx);
        f(base + dz + ox, b * gy * fx);
        f(base + dz + dy, b * fy * gx);
        f(base + dz + dy + ox, b * fy * fx);
    }
}

fn pixel_inside(map: &SliceMap, i: usize, j: usize, dims: [usize; 3]) -> bool {
    let c = map.center(i, j);
    map.deltas
        .iter()
        .all(|&(d, _)| trilinear_stencil([c[0] + d[0], c[1] + d[1], c[2] + d[2]], dims).is_some())
}

impl Interp {
    /// Acquired pixels and weights contributing to stored pixel `(i, j)`.
    #[inline]
    fn taps(&self, i: usize, j: usize, dims: [usize; 2]) -> Option<[(usize, f64); 4]> {
        let (fi, fj) = (i as f64, j as f64);
        let c = [0, 1].map(|a| self.base[a] + fi * self.di[a] + fj * self.dj[a]);
        let st = trilinear_stencil([c[0], c[1], 0.0], [dims[0], dims[1], 1])?;
        Some([st[0], st[1], st[2], st[3]])
    }
}

impl SliceOp {
    fn rows_inside(&self) -> Vec<bool> {
        let [nu, nv] = self.dims;
        match &self.interp {
            None => self.acq_mask.clone(),
            Some(ip) => (0..nu * nv)
                .map(|r| match ip.taps(r % nu, r / nu, self.acq_dims) {
                    Some(t) => t.iter().all(|&(a, w)| w == 0.0 || self.acq_mask[a]),
                    None => false,
                })
                .collect(),
        }
    }

    fn acquired_forward(&self, x: &[f64], dims: [usize; 3]) -> Vec<f64> {
        let [nu, nv] = self.acq_dims;
        let mut z = vec![0.0; nu * nv];
        for j in 0..nv {
            for i in 0..nu {
                let r = i + nu * j;
                if self.acq_mask[r] {
                    let mut acc = 0.0;
                    pixel_taps(&self.map, i, j, dims, |idx, w| acc += w * x[idx]);
                    z[r] = acc;
                }
            }
        }
        z
    }

    fn forward_into(&self, x: &[f64], dims: [usize; 3], mask: &[bool], out: &mut [f64]) {
        let z = self.acquired_forward(x, dims);
        match &self.interp {
            None => {
                for (o, (&v, &m)) in out.iter_mut().zip(z.iter().zip(mask)) {
                    *o = if m { v } else { 0.0 };
                }
            }
            Some(ip) => {
                let nu = self.dims[0];
                for (r, o) in out.iter_mut().enumerate() {
                    *o = 0.0;
                    if mask[r] {
                        if let Some(t) = ip.taps(r % nu, r / nu, self.acq_dims) {
                            *o = t.iter().map(|&(a, w)| w * z[a]).sum();
                        }
                    }
                }
            }
        }
    }

    fn adjoint_into(&self, r: &[f64], dims: [usize; 3], mask: &[bool], buf: &mut [f64]) {
        let [au, av] = self.acq_dims;
        let z = match &self.interp {
            None => r.iter().zip(mask).map(|(&v, &m)| if m { v } else { 0.0 }).collect(),
            Some(ip) => {
                let nu = self.dims[0];
                let mut z = vec![0.0; au * av];
                for (row, &v) in r.iter().enumerate() {
                    if mask[row] && v != 0.0 {
                        if let Some(t) = ip.taps(row % nu, row / nu, self.acq_dims) {
                            for (a, w) in t {
                                z[a] += w * v;
                            }
                        }
                    }
                }
                z
            }
        };
        for j in 0..av {
            for i in 0..au {
                let p = i + au * j;
                let v = z[p];
                if self.acq_mask[p] && v != 0.0 {
                    pixel_taps(&self.map, i, j, dims, |idx, w| buf[idx] += w * v);
                }
            }
        }
    }
}

/// Builds `A` for `stacks` on the reconstruction grid `hr`.
pub fn build_operator(stacks: &[SimulatedStack], hr: &Grid) -> Result<ForwardOperator> {
    if stacks.is_empty() {
        return Err(Error::EmptyStacks);
    }
    let step = hr.spacing().into_iter().fold(f64::INFINITY, f64::min);
    let hr_dims = hr.dims();
    let mut slices = Vec::new();
    let mut stack_rows = Vec::with_capacity(stacks.len());
    let mut mask = Vec::new();
    let mut row = 0;
    for (s, st) in stacks.iter().enumerate() {
        let grid = st.image.grid();
        let g = &st.geometry;
        if st.motion.len() != g.n_slices() {
            return Err(Error::Geometry(format!("stack {s}: motion/slice count mismatch")));
        }
        let acq = g.as_acquired();
        let acq_grid = acq.grid()?;
        let width = acq.inplane_spacing_mm.map(|p| p.max(st.sequence.inplane_res_mm));
        let kernel = SliceKernel::new(width, g.slice_thickness_mm, st.sequence.profile, step);
        let [au, av] = acq.inplane_dims;
        let [nu, nv] = g.inplane_dims;
        let start = row;
        let mut any = false;
        for k in 0..g.n_slices() {
            let map = SliceMap::new(&acq, &acq_grid, k, &st.motion.transforms[k], hr, &kernel);
            let acq_mask = (0..au * av)
                .map(|p| pixel_inside(&map, p % au, p / au, hr_dims))
                .collect();
            let interp = g.acquired.map(|_| {
                let to_acq = |i: f64, j: f64| {
                    acq_grid.world_to_voxel(grid.voxel_to_world([i, j, k as f64]))
                };
                let o = to_acq(0.0, 0.0);
                let (a, b) = (to_acq(1.0, 0.0), to_acq(0.0, 1.0));
                Interp {
                    base: [o[0], o[1]],
                    di: [a[0] - o[0], a[1] - o[1]],
                    dj: [b[0] - o[0], b[1] - o[1]],
                }
            });
            let op = SliceOp {
                stack: s,
                map,
                acq_dims: [au, av],
                acq_mask,
                interp,
                dims: [nu, nv],
                rows: row..row + nu * nv,
            };
            let inside = op.rows_inside();
            any |= inside.iter().any(|&m| m);
            mask.extend(inside);
            slices.push(op);
            row += nu * nv;
        }
        if !any {
            return Err(Error::DisjointFieldOfView(s));
        }
        stack_rows.push(start..row);
    }
    Ok(ForwardOperator {
        hr: hr.clone(),
        slices,
        stack_rows,
        mask,
    })
}

impl ForwardOperator {
    pub fn hr_grid(&self) -> &Grid {
        &self.hr
    }

    pub fn n_rows(&self) -> usize {
        self.mask.len()
    }

    pub fn n_cols(&self) -> usize {
        self.hr.len()
    }

    /// Rows that take part in the model.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Row range of each stack in the concatenated sample vector.
    pub fn stack_rows(&self) -> &[Range<usize>] {
        &self.stack_rows
    }

    /// Concatenated stack intensities, zero on masked rows.
    pub fn observations(&self, stacks: &[SimulatedStack]) -> Result<Vec<f64>> {
        if stacks.len() != self.stack_rows.len() {
            return Err(Error::InvalidParameter(format!(
                "operator built for {} stacks, got {}",
                self.stack_rows.len(),
                stacks.len()
            )));
        }
        let mut y = Vec::with_capacity(self.n_rows());
        for (st, r) in stacks.iter().zip(&self.stack_rows) {
            if st.image.data().len() != r.len() {
                return Err(Error::GridMismatch("stack does not match the operator".into()));
            }
            y.extend(st.image.data().iter().map(|&v| v as f64));
        }
        for (v, &m) in y.iter_mut().zip(&self.mask) {
            if !m {
                *v = 0.0;
            }
        }
        Ok(y)
    }

    /// `A x`.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols());
        let dims = self.hr.dims();
        let mut out = vec![0.0; self.n_rows()];
        let mut chunks: Vec<(&SliceOp, &mut [f64])> = Vec::with_capacity(self.slices.len());
        let mut rest = out.as_mut_slice();
        for sl in &self.slices {
            let (head, tail) = rest.split_at_mut(sl.rows.len());
            chunks.push((sl, head));
            rest = tail;
        }
        chunks
            .into_par_iter()
            .for_each(|(sl, out)| sl.forward_into(x, dims, &self.mask[sl.rows.clone()], out));
        out
    }

    /// `Aᵀ r`. Each stack scatters into its own buffer; buffers are summed in
    /// stack order so the result does not depend on scheduling.
    pub fn adjoint(&self, r: &[f64]) -> Vec<f64> {
        assert_eq!(r.len(), self.n_rows());
        let dims = self.hr.dims();
        let n = self.n_cols();
        let buffers: Vec<Vec<f64>> = (0..self.stack_rows.len())
            .into_par_iter()
            .map(|s| {
                let mut buf = vec![0.0; n];
                for sl in self.slices.iter().filter(|sl| sl.stack == s) {
                    let rows = sl.rows.clone();
                    sl.adjoint_into(&r[rows.clone()], dims, &self.mask[rows], &mut buf);
                }
                buf
            })
            .collect();
        let mut iter = buffers.into_iter();
        let mut out = iter.next().unwrap_or_else(|| vec![0.0; n]);
        for b in iter {
            for (o, v) in out.iter_mut().zip(b) {
                *o += v;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::{
        interpolate_inplane, sample_motion, simulate_stack, MotionLevel, MotionTrace, Orientation, SequenceParams,
        SliceProfile, StackGeometry,
    };
    use crate::volume::IntensityVolume;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn stacks_on(hr: &Grid, motion: MotionLevel, seed: u64) -> Vec<SimulatedStack> {
        let zero = IntensityVolume::filled(hr.clone(), 0.0).unwrap();
        let seq = SequenceParams {
            snr_db: None,
            ..Default::default()
        };
        Orientation::ALL
            .into_iter()
            .enumerate()
            .map(|(o, orientation)| {
                let g = StackGeometry::covering(hr.world_bounds(), orientation, 1.1, 3.0, 3.0, 0.4 * o as f64).unwrap();
                let m = sample_motion(motion, g.n_slices(), seed + o as u64);
                let st = simulate_stack(&zero, &g, &m, &seq, 0).unwrap();
                if o == 0 {
                    st
                } else {
                    interpolate_inplane(&st, 0.8594).unwrap()
                }
            })
            .collect()
    }

    #[test]
    fn adjoint_consistency() {
        let hr = Grid::centered([16; 3], [1.0; 3]).unwrap();
        let op = build_operator(&stacks_on(&hr, MotionLevel::Moderate, 1), &hr).unwrap();
        for seed in 0..3 {
            let x = random(op.n_cols(), seed);
            let y = random(op.n_rows(), seed + 100);
            let lhs = dot(&op.forward(&x), &y);
            let rhs = dot(&x, &op.adjoint(&y));
            let scale = dot(&x, &x).sqrt() * dot(&y, &y).sqrt();
            assert!((lhs - rhs).abs() <= 1e-8 * scale, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn linearity() {
        let hr = Grid::centered([12; 3], [1.0; 3]).unwrap();
        let op = build_operator(&stacks_on(&hr, MotionLevel::Little, 2), &hr).unwrap();
        let x = random(op.n_cols(), 1);
        let z = random(op.n_cols(), 2);
        let (a, b) = (0.7, -1.3);
        let comb: Vec<f64> = x.iter().zip(&z).map(|(p, q)| a * p + b * q).collect();
        let lhs = op.forward(&comb);
        let (ax, az) = (op.forward(&x), op.forward(&z));
        let norm = dot(&lhs, &lhs).sqrt();
        for i in 0..lhs.len() {
            assert!((lhs[i] - (a * ax[i] + b * az[i])).abs() <= 1e-10 * norm.max(1.0));
        }
        let doubled: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let ad = op.forward(&doubled);
        assert!(ad.iter().zip(&ax).all(|(p, q)| *p == 2.0 * q));
    }

    #[test]
    fn degenerate_geometry_is_identity() {
        let hr = Grid::centered([6, 7, 8], [1.0; 3]).unwrap();
        let g = StackGeometry {
            orientation: Orientation::Axial,
            slice_positions_mm: (0..8).map(|k| k as f64 - 3.5).collect(),
            inplane_dims: [6, 7],
            inplane_spacing_mm: [1.0; 2],
            slice_thickness_mm: 1.0,
            offset_mm: 0.0,
            center_mm: hr.center_world(),
            acquired: None,
        };
        let seq = SequenceParams {
            inplane_res_mm: 1.0,
            slice_thickness_mm: 1.0,
            profile: SliceProfile::Box,
            snr_db: None,
            ..Default::default()
        };
        let zero = IntensityVolume::filled(hr.clone(), 0.0).unwrap();
        let st = simulate_stack(&zero, &g, &MotionTrace::identity(8), &seq, 0).unwrap();
        let op = build_operator(&[st], &hr).unwrap();
        assert!(op.mask().iter().all(|&m| m));
        let x = random(op.n_cols(), 4);
        assert_eq!(op.forward(&x), x);
        assert_eq!(op.adjoint(&x), x);
    }

    #[test]
    fn errors() {
        let hr = Grid::centered([8; 3], [1.0; 3]).unwrap();
        assert!(matches!(build_operator(&[], &hr), Err(Error::EmptyStacks)));
        let far = Grid::new([8; 3], [1.0; 3], {
            let mut a = *hr.affine();
            a[0][3] += 500.0;
            a
        })
        .unwrap();
        let stacks = stacks_on(&far, MotionLevel::None, 0);
        assert!(matches!(build_operator(&stacks, &hr), Err(Error::DisjointFieldOfView(0))));
    }

    #[test]
    fn observations_follow_stack_order() {
        let hr = Grid::centered([10; 3], [1.0; 3]).unwrap();
        let stacks = stacks_on(&hr, MotionLevel::None, 0);
        let op = build_operator(&stacks, &hr).unwrap();
        let y = op.observations(&stacks).unwrap();
        assert_eq!(y.len(), op.n_rows());
        assert_eq!(op.stack_rows().len(), 3);
        assert!(op.observations(&stacks[..2]).is_err());
    }
}
