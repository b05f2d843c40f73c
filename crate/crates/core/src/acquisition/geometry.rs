use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{Affine, Grid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Axial,
    Coronal,
    Sagittal,
}

impl Orientation {
    pub const ALL: [Orientation; 3] = [Orientation::Axial, Orientation::Coronal, Orientation::Sagittal];

    /// World axes `(u, v, normal)` spanned by the slice plane and its normal.
    pub fn axes(self) -> [usize; 3] {
        match self {
            Orientation::Axial => [0, 1, 2],
            Orientation::Coronal => [0, 2, 1],
            Orientation::Sagittal => [1, 2, 0],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Orientation::Axial => "axial",
            Orientation::Coronal => "coronal",
            Orientation::Sagittal => "sagittal",
        }
    }
}

/// Placement of one series of parallel thick slices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StackGeometry {
    pub orientation: Orientation,
    /// Slice centres along the normal, relative to `center_mm`; equispaced, increasing.
    pub slice_positions_mm: Vec<f64>,
    pub inplane_dims: [usize; 2],
    pub inplane_spacing_mm: [f64; 2],
    pub slice_thickness_mm: f64,
    /// Shift of this series along the normal relative to an unshifted series.
    pub offset_mm: f64,
    /// World centre of the field of view, also the centre of rigid motion.
    pub center_mm: [f64; 3],
    /// In-plane grid the slices were acquired on, when they have since been
    /// interpolated to `inplane_dims`/`inplane_spacing_mm`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acquired: Option<InplaneGrid>,
}

/// Pixel grid of one slice plane, centred on the stack's field of view.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InplaneGrid {
    pub dims: [usize; 2],
    pub spacing_mm: [f64; 2],
}

impl StackGeometry {
    /// A series that covers the world box `bounds` with slices of the given
    /// thickness and spacing, shifted by `offset_mm` along the normal.
    pub fn covering(
        bounds: ([f64; 3], [f64; 3]),
        orientation: Orientation,
        inplane_res_mm: f64,
        thickness_mm: f64,
        spacing_mm: f64,
        offset_mm: f64,
    ) -> Result<Self> {
        if !(inplane_res_mm > 0.0 && thickness_mm > 0.0 && spacing_mm > 0.0) {
            return Err(Error::Geometry(
                "resolution, thickness and spacing must be positive".into(),
            ));
        }
        let (lo, hi) = bounds;
        let center = [0, 1, 2].map(|a| 0.5 * (lo[a] + hi[a]));
        let [u, v, n] = orientation.axes();
        let extent = |a: usize| hi[a] - lo[a];
        let count = |len: f64, step: f64| ((len / step - 1e-9).ceil() as usize).max(1);
        let inplane_dims = [count(extent(u), inplane_res_mm), count(extent(v), inplane_res_mm)];
        // one extra slice so that shifted series still cover the box
        let n_slices = count(extent(n), spacing_mm) + 1;
        let slice_positions_mm = (0..n_slices)
            .map(|k| (k as f64 - (n_slices as f64 - 1.0) * 0.5) * spacing_mm + offset_mm)
            .collect();
        Ok(StackGeometry {
            orientation,
            slice_positions_mm,
            inplane_dims,
            inplane_spacing_mm: [inplane_res_mm; 2],
            slice_thickness_mm: thickness_mm,
            offset_mm,
            center_mm: center,
            acquired: None,
        })
    }

    pub fn n_slices(&self) -> usize {
        self.slice_positions_mm.len()
    }

    pub fn slice_spacing_mm(&self) -> f64 {
        match self.slice_positions_mm.as_slice() {
            [a, b, ..] => b - a,
            _ => self.slice_thickness_mm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.slice_positions_mm;
        if p.is_empty() {
            return Err(Error::Geometry("stack has no slices".into()));
        }
        if p.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Geometry("slice positions must be strictly increasing".into()));
        }
        let step = self.slice_spacing_mm();
        if p.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > 1e-6 * step.max(1.0)) {
            return Err(Error::Geometry("slice positions must be equispaced".into()));
        }
        if self.inplane_dims.iter().any(|&d| d == 0)
            || self.inplane_spacing_mm.iter().any(|&s| !(s > 0.0))
            || !(self.slice_thickness_mm > 0.0)
        {
            return Err(Error::Geometry("in-plane grid and thickness must be positive".into()));
        }
        Ok(())
    }

    /// Voxel grid of the stack: axes 0 and 1 in-plane, axis 2 across slices.
    pub fn grid(&self) -> Result<Grid> {
        self.validate()?;
        let [u, v, n] = self.orientation.axes();
        let [nu, nv] = self.inplane_dims;
        let [du, dv] = self.inplane_spacing_mm;
        let dn = self.slice_spacing_mm();
        let mut a: Affine = [[0.0; 4]; 4];
        a[u][0] = du;
        a[v][1] = dv;
        a[n][2] = dn;
        let mut origin = self.center_mm;
        origin[u] -= (nu as f64 - 1.0) * 0.5 * du;
        origin[v] -= (nv as f64 - 1.0) * 0.5 * dv;
        origin[n] += self.slice_positions_mm[0];
        for r in 0..3 {
            a[r][3] = origin[r];
        }
        a[3][3] = 1.0;
        Grid::new([nu, nv, self.n_slices()], [du, dv, dn], a)
    }

    /// Unit vectors `(u, v, normal)` in world space.
    pub fn frame(&self) -> [[f64; 3]; 3] {
        self.orientation.axes().map(|a| {
            let mut e = [0.0; 3];
            e[a] = 1.0;
            e
        })
    }

    /// Same series resampled in-plane to a new pixel grid; remembers the
    /// original acquisition grid.
    pub fn with_inplane(&self, dims: [usize; 2], spacing_mm: [f64; 2]) -> Self {
        StackGeometry {
            inplane_dims: dims,
            inplane_spacing_mm: spacing_mm,
            acquired: Some(self.acquired.unwrap_or(InplaneGrid {
                dims: self.inplane_dims,
                spacing_mm: self.inplane_spacing_mm,
            })),
            ..self.clone()
        }
    }

    /// The series on its acquisition grid.
    pub fn as_acquired(&self) -> Self {
        match self.acquired {
            Some(a) => StackGeometry {
                inplane_dims: a.dims,
                inplane_spacing_mm: a.spacing_mm,
                acquired: None,
                ..self.clone()
            },
            None => self.clone(),
        }
    }
}
