use crate::error::{Error, Result};
use crate::volume::Grid;

/// Highest tissue class index. Class 0 is background.
pub const MAX_LABEL: u8 = 7;

/// Voxel element types a [`Volume`] can hold.
pub trait Voxel: Copy + Default + PartialEq + Send + Sync + std::fmt::Debug + 'static {
    /// Categorical data may only be resampled with nearest-neighbour lookup.
    const CATEGORICAL: bool;

    fn check(&self, index: usize) -> Result<()>;
    fn to_f64(self) -> f64;
    fn from_f64(v: f64) -> Self;
}

impl Voxel for u8 {
    const CATEGORICAL: bool = true;

    fn check(&self, index: usize) -> Result<()> {
        if *self > MAX_LABEL {
            Err(Error::InvalidLabel {
                value: *self,
                index,
            })
        } else {
            Ok(())
        }
    }

    fn to_f64(self) -> f64 {
        self as f64
    }

    fn from_f64(v: f64) -> Self {
        v as u8
    }
}

impl Voxel for f32 {
    const CATEGORICAL: bool = false;

    fn check(&self, index: usize) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(index))
        }
    }

    fn to_f64(self) -> f64 {
        self as f64
    }

    fn from_f64(v: f64) -> Self {
        v as f32
    }
}

/// A 3D array of voxels on a [`Grid`]. Immutable once constructed.
#[derive(Clone, Debug, PartialEq)]
pub struct Volume<T: Voxel> {
    grid: Grid,
    data: Vec<T>,
}

/// Tissue class map: 0 background, 1..=7 CSF, cortical GM, WM, ventricles,
/// cerebellum, deep GM, brain stem.
pub type LabelVolume = Volume<u8>;

/// Real-valued MR intensities.
pub type IntensityVolume = Volume<f32>;

impl<T: Voxel> Volume<T> {
    pub fn new(grid: Grid, data: Vec<T>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "data has {} voxels, grid has {}",
                data.len(),
                grid.len()
            )));
        }
        for (i, v) in data.iter().enumerate() {
            v.check(i)?;
        }
        Ok(Volume { grid, data })
    }

    pub fn filled(grid: Grid, value: T) -> Result<Self> {
        let n = grid.len();
        Volume::new(grid, vec![value; n])
    }

    /// Builds a volume by evaluating `f` at every voxel index.
    pub fn from_fn(grid: Grid, mut f: impl FnMut([usize; 3]) -> T) -> Result<Self> {
        let data = (0..grid.len()).map(|idx| f(grid.coords(idx))).collect();
        Volume::new(grid, data)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dims(&self) -> [usize; 3] {
        self.grid.dims()
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.grid.spacing()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.data[self.grid.index(i, j, k)]
    }

    pub fn map<U: Voxel>(&self, f: impl Fn(T) -> U) -> Result<Volume<U>> {
        Volume::new(self.grid.clone(), self.data.iter().map(|&v| f(v)).collect())
    }
}

impl LabelVolume {
    /// Voxel count per class, indexed by class.
    pub fn histogram(&self) -> [usize; MAX_LABEL as usize + 1] {
        let mut h = [0; MAX_LABEL as usize + 1];
        for &v in &self.data {
            h[v as usize] += 1;
        }
        h
    }

    /// Set of classes present in the volume.
    pub fn label_set(&self) -> Vec<u8> {
        self.histogram()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(l, _)| l as u8)
            .collect()
    }
}

impl IntensityVolume {
    pub fn min_max(&self) -> (f32, f32) {
        self.data
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}
