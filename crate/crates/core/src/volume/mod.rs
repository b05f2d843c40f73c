//! Volumetric data model: grids, voxel arrays, rigid transforms, resampling
//! and NIfTI-1 I/O.

mod data;
mod grid;
pub mod nifti;
mod resample;
mod transform;

pub use data::{IntensityVolume, LabelVolume, Volume, Voxel, MAX_LABEL};
pub use grid::{affine_inverse, Affine, Grid};
pub use nifti::{load_intensity, load_labels, load_volume, save_volume, AnyVolume, VolumeKind};
pub use resample::{nearest_index, resample, sample, trilinear_stencil, Interpolation};
pub use transform::RigidTransform;
pub(crate) use transform::CenteredMotion;
