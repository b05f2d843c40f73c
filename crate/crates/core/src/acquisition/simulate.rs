use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acquisition::kernel::{SliceKernel, SliceMap};
use crate::acquisition::{
    sample_motion, signal_phantom, MotionLevel, MotionTrace, Orientation, SequenceParams,
    SliceProfile, StackGeometry,
};
use crate::error::{Error, Result};
use crate::phantom::TissueParams;
use crate::rng;
use crate::volume::{
    nearest_index, resample, trilinear_stencil, CenteredMotion, Grid, IntensityVolume, Interpolation, LabelVolume,
    Volume,
};

/// In-plane resolution of the clinical SR reconstructions the simulated
/// series are interpolated to.
pub const CLINICAL_INPLANE_MM: f64 = 0.8594;

const NOISE_STREAM: u64 = 0x4e6f_6973_65;

/// One simulated low-resolution series.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulatedStack {
    /// Slice intensities on `geometry.grid()`.
    pub image: IntensityVolume,
    pub motion: MotionTrace,
    pub geometry: StackGeometry,
    pub sequence: SequenceParams,
    pub seed: u64,
}

/// Labels propagated onto the grid of a [`SimulatedStack`].
#[derive(Clone, Debug, PartialEq)]
pub struct LabelStack {
    pub labels: LabelVolume,
    pub motion: MotionTrace,
    pub geometry: StackGeometry,
}

fn overlaps(a: &Grid, b: &Grid) -> bool {
    let (alo, ahi) = a.world_bounds();
    let (blo, bhi) = b.world_bounds();
    (0..3).all(|i| alo[i] < bhi[i] && blo[i] < ahi[i])
}

/// Acquires one series from an HR intensity volume: every slice sees the
/// object moved by its rigid transform, integrated through the slice profile
/// and the in-plane pixel footprint, then corrupted by Rician noise.
pub fn simulate_stack(
    hr: &IntensityVolume,
    geom: &StackGeometry,
    motion: &MotionTrace,
    seq: &SequenceParams,
    seed: u64,
) -> Result<SimulatedStack> {
    seq.validate()?;
    let grid = geom.grid()?;
    if motion.len() != geom.n_slices() {
        return Err(Error::Geometry(format!(
            "motion trace has {} transforms for {} slices",
            motion.len(),
            geom.n_slices()
        )));
    }
    if !overlaps(&grid, hr.grid()) {
        return Err(Error::Geometry("stack geometry lies outside the HR domain".into()));
    }
    let hr_spacing = hr.spacing().into_iter().fold(f64::INFINITY, f64::min);
    let kernel = SliceKernel::new(
        geom.inplane_spacing_mm,
        geom.slice_thickness_mm,
        seq.profile,
        hr_spacing,
    );
    let [nu, nv] = geom.inplane_dims;
    let hr_dims = hr.dims();
    let hr_data = hr.data();
    let scale = seq.intensity_scale;
    let slices: Vec<Vec<f64>> = (0..geom.n_slices())
        .into_par_iter()
        .map(|k| {
            let map = SliceMap::new(geom, &grid, k, &motion.transforms[k], hr.grid(), &kernel);
            let mut out = Vec::with_capacity(nu * nv);
            for j in 0..nv {
                for i in 0..nu {
                    let c = map.center(i, j);
                    let mut acc = 0.0;
                    for &(d, w) in &map.deltas {
                        let p = [c[0] + d[0], c[1] + d[1], c[2] + d[2]];
                        if let Some(st) = trilinear_stencil(p, hr_dims) {
                            for (idx, wt) in st {
                                acc += w * wt * hr_data[idx] as f64;
                            }
                        }
                    }
                    out.push(acc * scale);
                }
            }
            out
        })
        .collect();

    let slices = match seq.snr_db {
        Some(snr_db) => {
            let (sum, count) = slices
                .iter()
                .flatten()
                .filter(|&&v| v > 0.0)
                .fold((0.0, 0usize), |(s, n), &v| (s + v, n + 1));
            let mean_fg = if count > 0 { sum / count as f64 } else { 0.0 };
            let sigma = mean_fg / 10f64.powf(snr_db / 20.0);
            let noise_seed = rng::derive_seed(seed, NOISE_STREAM);
            slices
                .into_par_iter()
                .enumerate()
                .map(|(k, s)| rician(s, sigma, noise_seed, k as u64))
                .collect()
        }
        None => slices,
    };
    let data: Vec<f32> = slices.into_iter().flatten().map(|v| v as f32).collect();
    Ok(SimulatedStack {
        image: Volume::new(grid, data)?,
        motion: motion.clone(),
        geometry: geom.clone(),
        sequence: seq.clone(),
        seed,
    })
}

/// Magnitude of the signal plus complex Gaussian noise of std `sigma` per channel.
fn rician(slice: Vec<f64>, sigma: f64, seed: u64, k: u64) -> Vec<f64> {
    if sigma <= 0.0 {
        return slice;
    }
    let mut r = rng::stream(seed, k);
    slice
        .into_iter()
        .map(|s| {
            let re: f64 = r.sample(StandardNormal);
            let im: f64 = r.sample(StandardNormal);
            (s + sigma * re).hypot(sigma * im)
        })
        .collect()
}

/// Resamples every slice in-plane (bilinear) to `target_mm` pixels. The
/// in-plane field of view stays centred; the pixel count becomes
/// `ceil(old_count · old_spacing / target_mm)`.
pub fn interpolate_inplane(stack: &SimulatedStack, target_mm: f64) -> Result<SimulatedStack> {
    if !(target_mm > 0.0 && target_mm.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "in-plane target spacing must be positive, got {target_mm}"
        )));
    }
    let g = &stack.geometry;
    if g.inplane_spacing_mm.iter().all(|&s| (s - target_mm).abs() < 1e-12) {
        return Ok(stack.clone());
    }
    let dims = [0, 1].map(|a| {
        let len = g.inplane_dims[a] as f64 * g.inplane_spacing_mm[a];
        ((len / target_mm - 1e-9).ceil() as usize).max(1)
    });
    let geometry = g.with_inplane(dims, [target_mm; 2]);
    let image = resample(&stack.image, &geometry.grid()?, Interpolation::Trilinear)?;
    Ok(SimulatedStack {
        image,
        geometry,
        ..stack.clone()
    })
}

/// Samples `labels` with nearest-neighbour lookup at every pixel centre of
/// `stack` (slice centre through-plane), under that slice's motion.
pub fn propagate_labels(labels: &LabelVolume, stack: &SimulatedStack) -> Result<LabelStack> {
    let grid = stack.image.grid();
    if !overlaps(grid, labels.grid()) {
        return Err(Error::Geometry(
            "label volume and stack do not share a world frame".into(),
        ));
    }
    let [nu, nv, ns] = grid.dims();
    let src = labels.grid();
    let center = stack.geometry.center_mm;
    let slices: Vec<Vec<u8>> = (0..ns)
        .into_par_iter()
        .map(|k| {
            let t = &stack.motion.transforms[k];
            let m = CenteredMotion::new(t, center);
            let mut out = Vec::with_capacity(nu * nv);
            for j in 0..nv {
                for i in 0..nu {
                    let p = grid.voxel_to_world([i as f64, j as f64, k as f64]);
                    let q = m.backward(p);
                    let l = match nearest_index(src.world_to_voxel(q), src.dims()) {
                        Some([a, b, c]) => labels.get(a, b, c),
                        None => 0,
                    };
                    out.push(l);
                }
            }
            out
        })
        .collect();
    Ok(LabelStack {
        labels: Volume::new(grid.clone(), slices.into_iter().flatten().collect())?,
        motion: stack.motion.clone(),
        geometry: stack.geometry.clone(),
    })
}

/// Simulation settings standing in for a reconstruction domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DomainPreset {
    /// Gaussian slice profile, 25 dB SNR.
    #[serde(rename = "target-like")]
    TargetLike,
    /// Box slice profile, 18 dB SNR, intensities scaled by 1.1.
    #[serde(rename = "source-like")]
    SourceLike,
}

impl DomainPreset {
    pub fn name(self) -> &'static str {
        match self {
            DomainPreset::TargetLike => "target-like",
            DomainPreset::SourceLike => "source-like",
        }
    }

    /// `seq` with the preset's profile, noise level and intensity scale.
    pub fn apply(self, seq: &SequenceParams) -> SequenceParams {
        let (profile, snr, scale) = match self {
            DomainPreset::TargetLike => (SliceProfile::Gaussian, 25.0, 1.0),
            DomainPreset::SourceLike => (SliceProfile::Box, 18.0, 1.1),
        };
        SequenceParams {
            profile,
            snr_db: Some(snr),
            intensity_scale: scale,
            ..seq.clone()
        }
    }
}

impl std::str::FromStr for DomainPreset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "target-like" => Ok(DomainPreset::TargetLike),
            "source-like" => Ok(DomainPreset::SourceLike),
            other => Err(format!("unknown preset '{other}' (target-like|source-like)")),
        }
    }
}

/// Case-level simulation settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CaseConfig {
    pub preset: DomainPreset,
    pub motion: MotionLevel,
    pub stacks_per_orientation: usize,
    /// In-plane spacing the acquired slices are interpolated to; `None` keeps
    /// the acquired grid.
    pub interpolate_to_mm: Option<f64>,
    /// Replaces the preset's SNR when set. `Some(None)` (JSON `null`) means
    /// noiseless.
    #[serde(skip_serializing_if = "Option::is_none", deserialize_with = "present")]
    pub snr_db: Option<Option<f64>>,
}

// a key that is present, even as null, is an override
fn present<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<Option<f64>>, D::Error> {
    Option::<f64>::deserialize(d).map(Some)
}

impl Default for CaseConfig {
    fn default() -> Self {
        CaseConfig {
            preset: DomainPreset::TargetLike,
            motion: MotionLevel::Little,
            stacks_per_orientation: 2,
            interpolate_to_mm: Some(CLINICAL_INPLANE_MM),
            snr_db: None,
        }
    }
}

impl CaseConfig {
    /// Sequence parameters after applying the preset and the SNR override.
    pub fn sequence(&self, seq: &SequenceParams) -> SequenceParams {
        let mut s = self.preset.apply(seq);
        if let Some(snr) = self.snr_db {
            s.snr_db = snr;
        }
        s
    }
}

/// All series of one simulated subject.
#[derive(Clone, Debug)]
pub struct SimulatedCase {
    /// Noise-free HR intensity phantom the stacks were acquired from.
    pub hr: IntensityVolume,
    pub stacks: Vec<SimulatedStack>,
    pub labels: Vec<LabelStack>,
}

/// Simulates `stacks_per_orientation` series in each orthogonal orientation,
/// the `r`-th series of an orientation shifted by `r / n` of the slice
/// spacing, each with its own motion trace, then interpolates in-plane and
/// propagates the labels onto the interpolated grids.
pub fn simulate_case(
    labels: &LabelVolume,
    table: &TissueParams,
    seq: &SequenceParams,
    case: &CaseConfig,
    seed: u64,
) -> Result<SimulatedCase> {
    if case.stacks_per_orientation == 0 {
        return Err(Error::InvalidParameter("need at least one stack per orientation".into()));
    }
    let seq = case.sequence(seq);
    seq.validate()?;
    let hr = signal_phantom(labels, table, &SequenceParams {
        intensity_scale: 1.0,
        ..seq.clone()
    })?;
    let bounds = hr.grid().world_bounds();
    let spacing = seq.slice_spacing_mm();
    let per = case.stacks_per_orientation;
    let mut stacks = Vec::with_capacity(3 * per);
    let mut label_stacks = Vec::with_capacity(3 * per);
    for (oi, orientation) in Orientation::ALL.into_iter().enumerate() {
        for r in 0..per {
            let index = (oi * per + r) as u64;
            let stack_seed = rng::derive_seed(seed, index);
            let offset = spacing * r as f64 / per as f64;
            let geom = StackGeometry::covering(
                bounds,
                orientation,
                seq.inplane_res_mm,
                seq.slice_thickness_mm,
                spacing,
                offset,
            )?;
            let motion = sample_motion(case.motion, geom.n_slices(), stack_seed);
            let acquired = simulate_stack(&hr, &geom, &motion, &seq, stack_seed)?;
            let stack = match case.interpolate_to_mm {
                Some(mm) => interpolate_inplane(&acquired, mm)?,
                None => acquired,
            };
            label_stacks.push(propagate_labels(labels, &stack)?);
            stacks.push(stack);
        }
    }
    Ok(SimulatedCase {
        hr,
        stacks,
        labels: label_stacks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{generate_phantom, tissue_table, PhantomSpec};
    use crate::volume::RigidTransform;

    fn noiseless(profile: SliceProfile, thickness: f64, res: f64) -> SequenceParams {
        SequenceParams {
            snr_db: None,
            profile,
            slice_thickness_mm: thickness,
            inplane_res_mm: res,
            ..Default::default()
        }
    }

    fn random_hr(dims: [usize; 3], seed: u64) -> IntensityVolume {
        let g = Grid::centered(dims, [1.0; 3]).unwrap();
        let mut r = rng::stream(seed, 0);
        let data = (0..g.len()).map(|_| r.random::<f32>()).collect();
        IntensityVolume::new(g, data).unwrap()
    }

    /// Geometry whose pixels coincide with the HR voxels.
    fn degenerate_geometry(hr: &Grid, o: Orientation) -> StackGeometry {
        let [u, v, n] = o.axes();
        let d = hr.dims();
        StackGeometry {
            orientation: o,
            slice_positions_mm: (0..d[n]).map(|k| k as f64 - (d[n] as f64 - 1.0) * 0.5).collect(),
            inplane_dims: [d[u], d[v]],
            inplane_spacing_mm: [1.0, 1.0],
            slice_thickness_mm: 1.0,
            offset_mm: 0.0,
            center_mm: hr.center_world(),
            acquired: None,
        }
    }

    #[test]
    fn degenerate_acquisition_is_a_copy() {
        let hr = random_hr([8, 9, 10], 1);
        for o in Orientation::ALL {
            let g = degenerate_geometry(hr.grid(), o);
            let seq = noiseless(SliceProfile::Box, 1.0, 1.0);
            let s = simulate_stack(&hr, &g, &MotionTrace::identity(g.n_slices()), &seq, 0).unwrap();
            let [u, v, n] = o.axes();
            let sg = s.image.grid();
            for idx in 0..sg.len() {
                let [i, j, k] = sg.coords(idx);
                let mut c = [0usize; 3];
                c[u] = i;
                c[v] = j;
                c[n] = k;
                let expected = hr.get(c[0], c[1], c[2]);
                assert!((s.image.data()[idx] - expected).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn constant_volume_gives_constant_slices() {
        let g = Grid::centered([40, 40, 40], [1.0; 3]).unwrap();
        let hr = IntensityVolume::filled(g.clone(), 0.7).unwrap();
        // cover a box well inside the HR field of view
        let bounds = ([-12.0; 3], [12.0; 3]);
        for profile in [SliceProfile::Box, SliceProfile::Gaussian] {
            let geom = StackGeometry::covering(bounds, Orientation::Coronal, 1.1, 3.0, 3.0, 0.0).unwrap();
            let seq = noiseless(profile, 3.0, 1.1);
            let motion = sample_motion(MotionLevel::Moderate, geom.n_slices(), 3);
            let s = simulate_stack(&hr, &geom, &motion, &seq, 3).unwrap();
            assert!(s.image.data().iter().all(|&v| (v - 0.7).abs() < 1e-6));
        }
    }

    #[test]
    fn mean_slice_intensity_within_hr_range() {
        let labels = generate_phantom(&PhantomSpec::default()).unwrap();
        let seq = noiseless(SliceProfile::Gaussian, 3.0, 1.1);
        let hr = signal_phantom(&labels, &tissue_table(1.5).unwrap(), &seq).unwrap();
        let (lo, hi) = hr.min_max();
        let geom = StackGeometry::covering(hr.grid().world_bounds(), Orientation::Axial, 1.1, 3.0, 3.0, 0.0).unwrap();
        let motion = sample_motion(MotionLevel::Little, geom.n_slices(), 1);
        let s = simulate_stack(&hr, &geom, &motion, &seq, 1).unwrap();
        let per = geom.inplane_dims[0] * geom.inplane_dims[1];
        for slice in s.image.data().chunks(per) {
            let m = slice.iter().map(|&v| v as f64).sum::<f64>() / per as f64;
            assert!(m >= lo as f64 - 1e-9 && m <= hi as f64 + 1e-9);
        }
    }

    #[test]
    fn empirical_snr_matches_target() {
        let g = Grid::centered([24, 24, 24], [1.0; 3]).unwrap();
        let hr = IntensityVolume::filled(g, 1.0).unwrap();
        let bounds = ([-8.0; 3], [8.0; 3]);
        let geom = StackGeometry::covering(bounds, Orientation::Axial, 1.0, 3.0, 3.0, 0.0).unwrap();
        let seq = SequenceParams {
            snr_db: Some(20.0),
            inplane_res_mm: 1.0,
            ..Default::default()
        };
        let per = geom.inplane_dims[0] * geom.inplane_dims[1];
        // per-slice SNR estimates, averaged over seeds
        let mut mean_snr = vec![0.0; geom.n_slices()];
        for seed in 0..50 {
            let s = simulate_stack(&hr, &geom, &MotionTrace::identity(geom.n_slices()), &seq, seed).unwrap();
            for (k, slice) in s.image.data().chunks(per).enumerate() {
                let n = slice.len() as f64;
                let mean = slice.iter().map(|&v| v as f64).sum::<f64>() / n;
                let var = slice.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
                mean_snr[k] += 20.0 * (mean / var.sqrt()).log10() / 50.0;
            }
        }
        for snr in mean_snr {
            assert!((snr - 20.0).abs() <= 1.0, "{snr} dB");
        }
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let hr = random_hr([16, 16, 16], 2);
        let geom = StackGeometry::covering(hr.grid().world_bounds(), Orientation::Sagittal, 1.1, 3.0, 3.0, 0.0).unwrap();
        let seq = SequenceParams::default();
        let m = sample_motion(MotionLevel::Little, geom.n_slices(), 4);
        let a = simulate_stack(&hr, &geom, &m, &seq, 4).unwrap();
        let b = simulate_stack(&hr, &geom, &m, &seq, 4).unwrap();
        let c = simulate_stack(&hr, &geom, &m, &seq, 5).unwrap();
        assert_eq!(a.image, b.image);
        assert_ne!(a.image, c.image);
        assert!(a.image.data().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn mismatched_motion_rejected() {
        let hr = random_hr([8, 8, 8], 0);
        let geom = StackGeometry::covering(hr.grid().world_bounds(), Orientation::Axial, 1.0, 2.0, 2.0, 0.0).unwrap();
        let r = simulate_stack(&hr, &geom, &MotionTrace::identity(1), &SequenceParams::default(), 0);
        assert!(matches!(r, Err(Error::Geometry(_))));
    }

    #[test]
    fn geometry_outside_hr_rejected() {
        let hr = random_hr([8, 8, 8], 0);
        let geom = StackGeometry::covering(([100.0; 3], [110.0; 3]), Orientation::Axial, 1.0, 2.0, 2.0, 0.0).unwrap();
        let r = simulate_stack(&hr, &geom, &MotionTrace::identity(geom.n_slices()), &SequenceParams::default(), 0);
        assert!(matches!(r, Err(Error::Geometry(_))));
    }

    fn stack_from(hr: &IntensityVolume, res: f64) -> SimulatedStack {
        let geom = StackGeometry::covering(hr.grid().world_bounds(), Orientation::Axial, res, 3.0, 3.0, 0.0).unwrap();
        let seq = noiseless(SliceProfile::Gaussian, 3.0, res);
        simulate_stack(hr, &geom, &MotionTrace::identity(geom.n_slices()), &seq, 0).unwrap()
    }

    #[test]
    fn interpolation_to_current_spacing_is_identity() {
        let s = stack_from(&random_hr([16, 16, 16], 1), 1.1);
        assert_eq!(interpolate_inplane(&s, 1.1).unwrap(), s);
    }

    #[test]
    fn interpolated_dims() {
        let s = stack_from(&random_hr([64, 64, 64], 1), 1.1);
        assert_eq!(s.geometry.inplane_dims, [59, 59]);
        let t = interpolate_inplane(&s, CLINICAL_INPLANE_MM).unwrap();
        let expected = (59.0f64 * 1.1 / 0.8594).ceil() as usize;
        assert_eq!(t.geometry.inplane_dims, [expected, expected]);
        assert_eq!(t.image.dims()[2], s.image.dims()[2]);
        assert_eq!(t.image.spacing()[2], s.image.spacing()[2]);
    }

    #[test]
    fn interpolation_keeps_constant_slices() {
        let g = Grid::centered([30, 30, 30], [1.0; 3]).unwrap();
        let hr = IntensityVolume::filled(g, 2.0).unwrap();
        let geom = StackGeometry::covering(([-10.0; 3], [10.0; 3]), Orientation::Axial, 1.1, 3.0, 3.0, 0.0).unwrap();
        let seq = noiseless(SliceProfile::Box, 3.0, 1.1);
        let s = simulate_stack(&hr, &geom, &MotionTrace::identity(geom.n_slices()), &seq, 0).unwrap();
        let t = interpolate_inplane(&s, CLINICAL_INPLANE_MM).unwrap();
        assert!(t.image.data().iter().all(|&v| (v - 2.0).abs() < 1e-6));
    }

    fn random_labels(dims: [usize; 3], seed: u64) -> LabelVolume {
        let g = Grid::centered(dims, [1.0; 3]).unwrap();
        let mut r = rng::stream(seed, 0);
        let data = (0..g.len()).map(|_| r.random_range(0..=7u8)).collect();
        LabelVolume::new(g, data).unwrap()
    }

    #[test]
    fn degenerate_propagation_copies_labels() {
        let labels = random_labels([6, 7, 8], 2);
        let hr = labels.map(|l| l as f32).unwrap();
        let g = degenerate_geometry(labels.grid(), Orientation::Axial);
        let s = simulate_stack(&hr, &g, &MotionTrace::identity(g.n_slices()), &noiseless(SliceProfile::Box, 1.0, 1.0), 0).unwrap();
        let ls = propagate_labels(&labels, &s).unwrap();
        assert_eq!(ls.labels.data(), labels.data());
    }

    #[test]
    fn propagation_without_motion_equals_nearest_resample() {
        let labels = generate_phantom(&PhantomSpec::default()).unwrap();
        let case = CaseConfig {
            motion: MotionLevel::None,
            snr_db: Some(None),
            ..Default::default()
        };
        let sim = simulate_case(&labels, &tissue_table(1.5).unwrap(), &SequenceParams::default(), &case, 8).unwrap();
        for ls in &sim.labels {
            let r = resample(&labels, ls.labels.grid(), Interpolation::Nearest).unwrap();
            assert_eq!(r, ls.labels);
        }
    }

    #[test]
    fn propagated_labels_subset_of_input() {
        let mut labels = random_labels([20, 20, 20], 5);
        labels = labels.map(|l| if l == 2 { 3 } else { l }).unwrap();
        let hr = labels.map(|l| l as f32).unwrap();
        let geom = StackGeometry::covering(hr.grid().world_bounds(), Orientation::Coronal, 0.9, 2.0, 2.0, 0.5).unwrap();
        let m = sample_motion(MotionLevel::Moderate, geom.n_slices(), 6);
        let s = simulate_stack(&hr, &geom, &m, &SequenceParams::default(), 6).unwrap();
        let ls = propagate_labels(&labels, &s).unwrap();
        let input = labels.label_set();
        assert!(ls.labels.label_set().iter().all(|l| input.contains(l)));
    }

    #[test]
    fn in_plane_rotation_permutes_axes() {
        let n = 8;
        let labels = random_labels([n, n, 1], 9);
        let hr = labels.map(|l| l as f32).unwrap();
        let mut g = degenerate_geometry(labels.grid(), Orientation::Axial);
        g.slice_positions_mm = vec![0.0];
        let motion = MotionTrace {
            level: MotionLevel::Moderate,
            seed: 0,
            transforms: vec![RigidTransform::new([0.0, 0.0, 90.0], [0.0; 3])],
        };
        let s = simulate_stack(&hr, &g, &motion, &noiseless(SliceProfile::Box, 1.0, 1.0), 0).unwrap();
        let ls = propagate_labels(&labels, &s).unwrap();
        // pixel (i, j) sees object point R⁻¹ p: (x, y) -> (y, -x)
        for j in 0..n {
            for i in 0..n {
                assert_eq!(ls.labels.get(i, j, 0), labels.get(j, n - 1 - i, 0));
            }
        }
    }

    #[test]
    fn case_has_six_stacks_two_per_orientation() {
        let labels = generate_phantom(&PhantomSpec::default()).unwrap();
        let sim = simulate_case(&labels, &tissue_table(1.5).unwrap(), &SequenceParams::default(), &CaseConfig::default(), 1).unwrap();
        assert_eq!(sim.stacks.len(), 6);
        for o in Orientation::ALL {
            let of: Vec<_> = sim.stacks.iter().filter(|s| s.geometry.orientation == o).collect();
            assert_eq!(of.len(), 2);
            let d = of[1].geometry.offset_mm - of[0].geometry.offset_mm;
            assert!((d - 0.5 * of[0].geometry.slice_thickness_mm).abs() < 1e-12);
        }
        for (s, l) in sim.stacks.iter().zip(&sim.labels) {
            assert_eq!(s.image.grid(), l.labels.grid());
            assert_eq!(s.geometry.inplane_spacing_mm, [CLINICAL_INPLANE_MM; 2]);
        }
    }

    #[test]
    fn seeds_change_motion_not_geometry() {
        let labels = generate_phantom(&PhantomSpec::default()).unwrap();
        let t = tissue_table(1.5).unwrap();
        let seq = SequenceParams::default();
        let a = simulate_case(&labels, &t, &seq, &CaseConfig::default(), 1).unwrap();
        let b = simulate_case(&labels, &t, &seq, &CaseConfig::default(), 2).unwrap();
        for (x, y) in a.stacks.iter().zip(&b.stacks) {
            assert_eq!(x.geometry, y.geometry);
            assert_ne!(x.motion, y.motion);
        }
        // motion traces differ between stacks of one case
        assert_ne!(a.stacks[0].motion.transforms, a.stacks[1].motion.transforms);
    }

    #[test]
    fn presets_differ_in_intensity_statistics() {
        let labels = generate_phantom(&PhantomSpec::default()).unwrap();
        let t = tissue_table(1.5).unwrap();
        let seq = SequenceParams::default();
        let mean = |p: DomainPreset| {
            let case = CaseConfig { preset: p, ..Default::default() };
            let sim = simulate_case(&labels, &t, &seq, &case, 3).unwrap();
            let s = &sim.stacks[0].image;
            s.data().iter().map(|&v| v as f64).sum::<f64>() / s.data().len() as f64
        };
        let target = mean(DomainPreset::TargetLike);
        let source = mean(DomainPreset::SourceLike);
        assert!(source > 1.05 * target, "{source} vs {target}");
    }
}
