use nalgebra::{Matrix3, Matrix4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major 4×4 voxel-to-world matrix in millimetres.
pub type Affine = [[f64; 4]; 4];

const SPACING_REL_TOL: f64 = 1e-6;

/// Sampling lattice of a volume: voxel counts, voxel size and the
/// voxel-to-world transform. Voxel `(i, j, k)` is stored at
/// `i + nx * (j + ny * k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct Grid {
    dims: [usize; 3],
    spacing: [f64; 3],
    affine: Affine,
    inverse: Affine,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    dims: [usize; 3],
    spacing: [f64; 3],
    affine: Affine,
}

impl TryFrom<GridRepr> for Grid {
    type Error = Error;

    fn try_from(r: GridRepr) -> Result<Self> {
        Grid::new(r.dims, r.spacing, r.affine)
    }
}

impl From<Grid> for GridRepr {
    fn from(g: Grid) -> Self {
        GridRepr {
            dims: g.dims,
            spacing: g.spacing,
            affine: g.affine,
        }
    }
}

pub(crate) fn to_matrix(a: &Affine) -> Matrix4<f64> {
    Matrix4::from_fn(|r, c| a[r][c])
}

pub(crate) fn from_matrix(m: &Matrix4<f64>) -> Affine {
    let mut a = [[0.0; 4]; 4];
    for (r, row) in a.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = m[(r, c)];
        }
    }
    a
}

/// Inverts a voxel-to-world affine.
pub fn affine_inverse(a: &Affine) -> Result<Affine> {
    let m = to_matrix(a);
    let lin: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into_owned();
    let det = lin.determinant();
    if !det.is_finite() || det.abs() < 1e-12 {
        return Err(Error::SingularAffine);
    }
    let inv = m.try_inverse().ok_or(Error::SingularAffine)?;
    Ok(from_matrix(&inv))
}

fn apply(a: &Affine, p: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (r, o) in out.iter_mut().enumerate() {
        *o = a[r][0] * p[0] + a[r][1] * p[1] + a[r][2] * p[2] + a[r][3];
    }
    out
}

impl Grid {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], affine: Affine) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidGrid(format!("dims must be positive, got {dims:?}")));
        }
        if spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::InvalidGrid(format!(
                "spacing must be positive, got {spacing:?}"
            )));
        }
        if affine.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("affine has non-finite entries".into()));
        }
        let inverse = affine_inverse(&affine)?;
        for (c, &s) in spacing.iter().enumerate() {
            let norm = (0..3).map(|r| affine[r][c].powi(2)).sum::<f64>().sqrt();
            if ((norm - s) / s).abs() > SPACING_REL_TOL {
                return Err(Error::InvalidGrid(format!(
                    "affine column {c} has norm {norm}, spacing says {s}"
                )));
            }
        }
        Ok(Grid {
            dims,
            spacing,
            affine,
            inverse,
        })
    }

    /// Axis-aligned grid with voxel (0,0,0) at `origin`.
    pub fn axis_aligned(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3]) -> Result<Self> {
        let mut a = [[0.0; 4]; 4];
        for i in 0..3 {
            a[i][i] = spacing[i];
            a[i][3] = origin[i];
        }
        a[3][3] = 1.0;
        Grid::new(dims, spacing, a)
    }

    /// Axis-aligned grid whose field of view is centred on the world origin.
    pub fn centered(dims: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        let origin = [0, 1, 2].map(|i| -(dims[i] as f64 - 1.0) * 0.5 * spacing[i]);
        Grid::axis_aligned(dims, spacing, origin)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn affine(&self) -> &Affine {
        &self.affine
    }

    pub fn inverse_affine(&self) -> &Affine {
        &self.inverse
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let j = (idx / self.dims[0]) % self.dims[1];
        let k = idx / (self.dims[0] * self.dims[1]);
        [i, j, k]
    }

    /// Continuous voxel coordinate to world millimetres.
    #[inline]
    pub fn voxel_to_world(&self, v: [f64; 3]) -> [f64; 3] {
        apply(&self.affine, v)
    }

    /// World millimetres to continuous voxel coordinate.
    #[inline]
    pub fn world_to_voxel(&self, p: [f64; 3]) -> [f64; 3] {
        apply(&self.inverse, p)
    }

    /// World position of the centre of the field of view.
    pub fn center_world(&self) -> [f64; 3] {
        self.voxel_to_world([0, 1, 2].map(|i| (self.dims[i] as f64 - 1.0) * 0.5))
    }

    /// Unit direction of voxel axis `axis` in world space.
    pub fn axis_direction(&self, axis: usize) -> [f64; 3] {
        let s = self.spacing[axis];
        [0, 1, 2].map(|r| self.affine[r][axis] / s)
    }

    /// World-space bounding box `(min, max)` of the voxel footprints.
    pub fn world_bounds(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for corner in 0..8 {
            let v = [0, 1, 2].map(|a| {
                if corner & (1 << a) == 0 {
                    -0.5
                } else {
                    self.dims[a] as f64 - 0.5
                }
            });
            let p = self.voxel_to_world(v);
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        (lo, hi)
    }

    /// `true` when both grids sample the same lattice (affine compared to 1e-9 mm).
    pub fn same_lattice(&self, other: &Grid) -> bool {
        self.dims == other.dims
            && self
                .affine
                .iter()
                .flatten()
                .zip(other.affine.iter().flatten())
                .all(|(a, b)| (a - b).abs() <= 1e-9)
    }

    pub(crate) fn inverse_linear(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|r, c| self.inverse[r][c])
    }
}
