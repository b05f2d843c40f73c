use rayon::prelude::*;

use crate::acquisition::LabelStack;
use crate::error::{Error, Result};
use crate::volume::{nearest_index, CenteredMotion, Grid, LabelVolume, MAX_LABEL};

/// HR voxel index to continuous stack voxel coordinates for one slice.
struct SliceVote<'a> {
    origin: [f64; 3],
    cols: [[f64; 3]; 3],
    k: usize,
    half_width: f64,
    labels: &'a LabelVolume,
}

impl SliceVote<'_> {
    fn new<'a>(
        stack: &'a LabelStack,
        k: usize,
        hr: &Grid,
    ) -> SliceVote<'a> {
        let grid = stack.labels.grid();
        let m = CenteredMotion::new(&stack.motion.transforms[k], stack.geometry.center_mm);
        let map = |v: [f64; 3]| grid.world_to_voxel(m.forward(hr.voxel_to_world(v)));
        let origin = map([0.0; 3]);
        let cols = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]].map(|e| {
            let p = map(e);
            [p[0] - origin[0], p[1] - origin[1], p[2] - origin[2]]
        });
        let half_width = 0.5 * stack.geometry.slice_thickness_mm / grid.spacing()[2];
        SliceVote {
            origin,
            cols,
            k,
            half_width,
            labels: &stack.labels,
        }
    }

    #[inline]
    fn vote(&self, v: [usize; 3]) -> Option<u8> {
        let f = v.map(|x| x as f64);
        let at = |a: usize| {
            self.origin[a] + f[0] * self.cols[0][a] + f[1] * self.cols[1][a] + f[2] * self.cols[2][a]
        };
        if (at(2) - self.k as f64).abs() > self.half_width + 1e-9 {
            return None;
        }
        let dims = self.labels.dims();
        let [i, j, _] = nearest_index([at(0), at(1), self.k as f64], dims)?;
        Some(self.labels.get(i, j, self.k))
    }
}

/// Majority vote over every slice sample whose footprint covers each HR
/// voxel (through-plane within half the slice thickness, nearest pixel
/// in-plane). Ties go to the lower class; voxels without votes are
/// background.
pub fn fuse_labels(stacks: &[LabelStack], hr: &Grid) -> Result<LabelVolume> {
    let mut votes = Vec::new();
    for (s, st) in stacks.iter().enumerate() {
        if st.motion.len() != st.labels.dims()[2] {
            return Err(Error::Geometry(format!("label stack {s}: motion/slice count mismatch")));
        }
        for k in 0..st.labels.dims()[2] {
            votes.push(SliceVote::new(st, k, hr));
        }
    }
    let data: Vec<u8> = (0..hr.len())
        .into_par_iter()
        .map(|idx| {
            let v = hr.coords(idx);
            let mut counts = [0u32; MAX_LABEL as usize + 1];
            for sv in &votes {
                if let Some(l) = sv.vote(v) {
                    counts[l as usize] += 1;
                }
            }
            let mut best = 0;
            for l in 1..counts.len() {
                if counts[l] > counts[best] {
                    best = l;
                }
            }
            best as u8
        })
        .collect();
    LabelVolume::new(hr.clone(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::{MotionTrace, Orientation, StackGeometry};

    fn stack(labels: LabelVolume, geometry: StackGeometry) -> LabelStack {
        let n = labels.dims()[2];
        LabelStack {
            labels,
            motion: MotionTrace::identity(n),
            geometry,
        }
    }

    fn degenerate(hr: &Grid) -> StackGeometry {
        let d = hr.dims();
        StackGeometry {
            orientation: Orientation::Axial,
            slice_positions_mm: (0..d[2]).map(|k| k as f64 - (d[2] as f64 - 1.0) * 0.5).collect(),
            inplane_dims: [d[0], d[1]],
            inplane_spacing_mm: [1.0; 2],
            slice_thickness_mm: 1.0,
            offset_mm: 0.0,
            center_mm: hr.center_world(),
            acquired: None,
        }
    }

    fn uniform(hr: &Grid, l: u8) -> LabelVolume {
        LabelVolume::filled(hr.clone(), l).unwrap()
    }

    #[test]
    fn single_degenerate_stack_is_copied() {
        let hr = Grid::centered([5, 6, 7], [1.0; 3]).unwrap();
        let labels = LabelVolume::from_fn(hr.clone(), |[i, j, k]| ((i + 2 * j + 3 * k) % 8) as u8).unwrap();
        let fused = fuse_labels(&[stack(labels.clone(), degenerate(&hr))], &hr).unwrap();
        assert_eq!(fused.data(), labels.data());
    }

    #[test]
    fn majority_and_ties() {
        let hr = Grid::centered([3, 3, 3], [1.0; 3]).unwrap();
        let g = degenerate(&hr);
        let wm = stack(uniform(&hr, 3), g.clone());
        let gm = stack(uniform(&hr, 2), g.clone());
        let fused = fuse_labels(&[wm.clone(), wm.clone(), gm.clone()], &hr).unwrap();
        assert!(fused.data().iter().all(|&l| l == 3));
        let tie = fuse_labels(&[wm, gm.clone()], &hr).unwrap();
        assert!(tie.data().iter().all(|&l| l == 2));
        let agree = fuse_labels(&[gm.clone(), gm], &hr).unwrap();
        assert!(agree.data().iter().all(|&l| l == 2));
    }

    #[test]
    fn no_votes_is_background() {
        let hr = Grid::centered([4, 4, 4], [1.0; 3]).unwrap();
        let fused = fuse_labels(&[], &hr).unwrap();
        assert!(fused.data().iter().all(|&l| l == 0));
    }
}
