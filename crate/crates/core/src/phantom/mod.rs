//! Procedural fetal-brain-like label phantoms and tissue relaxation tables.
//!
//! A phantom is a set of nested ellipsoids: a CSF envelope, a brain
//! ellipsoid whose outer shell is cortical gray matter and whose interior is
//! white matter, and paired ventricles, deep gray matter nuclei and cerebellar
//! hemispheres plus a brain stem.

mod tissue;

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{Grid, LabelVolume, RigidTransform};

pub use tissue::{
    tissue_table, FieldStrength, Relaxation, TissueParams, TissueTable, TISSUE_DISPLAY,
    TISSUE_NAMES,
};

pub const CSF: u8 = 1;
pub const CORTICAL_GM: u8 = 2;
pub const WM: u8 = 3;
pub const VENTRICLES: u8 = 4;
pub const CEREBELLUM: u8 = 5;
pub const DEEP_GM: u8 = 6;
pub const BRAIN_STEM: u8 = 7;

/// Oriented ellipsoid in world millimetres.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    pub center_mm: [f64; 3],
    pub semi_axes_mm: [f64; 3],
    #[serde(default)]
    pub rotation_deg: [f64; 3],
}

impl Ellipsoid {
    pub fn new(center_mm: [f64; 3], semi_axes_mm: [f64; 3]) -> Self {
        Ellipsoid {
            center_mm,
            semi_axes_mm,
            rotation_deg: [0.0; 3],
        }
    }

    fn rotated(mut self, rotation_deg: [f64; 3]) -> Self {
        self.rotation_deg = rotation_deg;
        self
    }

    fn rotation(&self) -> Matrix3<f64> {
        RigidTransform::new(self.rotation_deg, [0.0; 3]).rotation_matrix()
    }

    /// `Σ (local_i / a_i)²`: below 1 inside, above 1 outside.
    fn level_with(&self, rt: &Matrix3<f64>, p: [f64; 3]) -> f64 {
        let d = Vector3::from(p) - Vector3::from(self.center_mm);
        let l = rt * d;
        (0..3).map(|i| (l[i] / self.semi_axes_mm[i]).powi(2)).sum()
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        self.level_with(&self.rotation().transpose(), p) <= 1.0
    }

    /// Same centre and orientation, semi-axes reduced by `d` mm.
    pub fn shrunk(&self, d: f64) -> Self {
        Ellipsoid {
            semi_axes_mm: self.semi_axes_mm.map(|a| a - d),
            ..*self
        }
    }

    pub fn scaled(&self, f: f64) -> Self {
        Ellipsoid {
            semi_axes_mm: self.semi_axes_mm.map(|a| a * f),
            ..*self
        }
    }

    fn surface_points(&self, n_theta: usize, n_phi: usize) -> Vec<[f64; 3]> {
        let r = self.rotation();
        let c = Vector3::from(self.center_mm);
        let mut pts = Vec::with_capacity(n_theta * n_phi + 2);
        for it in 0..=n_theta {
            let theta = PI * it as f64 / n_theta as f64;
            for ip in 0..n_phi {
                let phi = 2.0 * PI * ip as f64 / n_phi as f64;
                let l = Vector3::new(
                    self.semi_axes_mm[0] * theta.sin() * phi.cos(),
                    self.semi_axes_mm[1] * theta.sin() * phi.sin(),
                    self.semi_axes_mm[2] * theta.cos(),
                );
                let p = r * l + c;
                pts.push([p[0], p[1], p[2]]);
            }
        }
        pts
    }

    /// `true` when every sampled surface point of `self` lies inside `outer`.
    pub fn inside(&self, outer: &Ellipsoid) -> bool {
        let rt = outer.rotation().transpose();
        self.surface_points(24, 48)
            .into_iter()
            .all(|p| outer.level_with(&rt, p) <= 1.0 + 1e-9)
    }

    /// Conservative axis-aligned bounding box.
    fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        let r = self.rotation();
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for a in 0..3 {
            let ext: f64 = (0..3)
                .map(|k| (r[(a, k)] * self.semi_axes_mm[k]).powi(2))
                .sum::<f64>()
                .sqrt();
            lo[a] = self.center_mm[a] - ext;
            hi[a] = self.center_mm[a] + ext;
        }
        (lo, hi)
    }

    fn is_valid(&self) -> bool {
        self.semi_axes_mm.iter().all(|&a| a.is_finite() && a > 0.0)
            && self.center_mm.iter().all(|c| c.is_finite())
    }
}

/// Geometry of a procedural phantom. All positions are world millimetres on
/// a grid centred at the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhantomSpec {
    pub dims: [usize; 3],
    pub spacing_mm: [f64; 3],
    pub seed: u64,
    /// Outer boundary of the extra-axial CSF.
    pub envelope: Ellipsoid,
    /// Outer boundary of the cortex.
    pub brain: Ellipsoid,
    pub cortical_thickness_mm: f64,
    pub ventricles: [Ellipsoid; 2],
    pub deep_gm: [Ellipsoid; 2],
    pub cerebellum: [Ellipsoid; 2],
    pub brain_stem: Ellipsoid,
    /// Seeded perturbation: centres move by up to this many mm.
    pub jitter_mm: f64,
    /// Seeded perturbation: semi-axes scale by up to this relative amount.
    pub jitter_scale: f64,
    /// Enlarged ventricles.
    pub pathological: bool,
    pub pathological_ventricle_scale: f64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        PhantomSpec {
            dims: [64; 3],
            spacing_mm: [1.0; 3],
            seed: 42,
            envelope: Ellipsoid::new([0.0, 0.0, 0.0], [27.0, 30.0, 25.0]),
            brain: Ellipsoid::new([0.0, 0.5, 1.0], [24.0, 27.0, 21.5]),
            cortical_thickness_mm: 2.5,
            ventricles: [
                Ellipsoid::new([-5.0, 2.0, 5.0], [3.0, 11.0, 4.5]).rotated([0.0, 0.0, -8.0]),
                Ellipsoid::new([5.0, 2.0, 5.0], [3.0, 11.0, 4.5]).rotated([0.0, 0.0, 8.0]),
            ],
            deep_gm: [
                Ellipsoid::new([-9.0, 1.0, -1.0], [5.0, 7.0, 5.0]),
                Ellipsoid::new([9.0, 1.0, -1.0], [5.0, 7.0, 5.0]),
            ],
            cerebellum: [
                Ellipsoid::new([-6.0, -16.0, -10.5], [6.5, 5.5, 5.5]),
                Ellipsoid::new([6.0, -16.0, -10.5], [6.5, 5.5, 5.5]),
            ],
            brain_stem: Ellipsoid::new([0.0, -5.0, -13.0], [4.5, 5.0, 7.0]),
            jitter_mm: 0.5,
            jitter_scale: 0.03,
            pathological: false,
            pathological_ventricle_scale: 1.5,
        }
    }
}

impl PhantomSpec {
    pub fn with_seed(seed: u64) -> Self {
        PhantomSpec {
            seed,
            ..Default::default()
        }
    }

    /// Scales both ventricle ellipsoids.
    pub fn scale_ventricles(mut self, f: f64) -> Self {
        self.ventricles = self.ventricles.map(|e| e.scaled(f));
        self
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::centered(self.dims, self.spacing_mm)
            .map_err(|e| Error::InvalidPhantom(format!("grid: {e}")))
    }

    /// The spec after applying the seeded jitter and the pathological flag.
    pub fn realized(&self) -> PhantomSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut jitter = |e: &mut Ellipsoid| {
            for c in e.center_mm.iter_mut() {
                if self.jitter_mm > 0.0 {
                    *c += rng.random_range(-self.jitter_mm..=self.jitter_mm);
                }
            }
            for a in e.semi_axes_mm.iter_mut() {
                if self.jitter_scale > 0.0 {
                    *a *= 1.0 + rng.random_range(-self.jitter_scale..=self.jitter_scale);
                }
            }
        };
        let mut s = self.clone();
        jitter(&mut s.envelope);
        // brain is jittered in scale only so the CSF margin stays positive
        let c = s.brain.center_mm;
        jitter(&mut s.brain);
        s.brain.center_mm = c;
        for e in s
            .ventricles
            .iter_mut()
            .chain(s.deep_gm.iter_mut())
            .chain(s.cerebellum.iter_mut())
        {
            jitter(e);
        }
        jitter(&mut s.brain_stem);
        if s.pathological {
            let f = s.pathological_ventricle_scale;
            s.ventricles = s.ventricles.map(|e| e.scaled(f));
        }
        s
    }

    fn white_matter(&self) -> Ellipsoid {
        self.brain.shrunk(self.cortical_thickness_mm)
    }

    /// Checks nesting: ventricles and deep GM inside WM, WM inside the
    /// cortical shell, cortex inside the CSF envelope, cerebellum and brain
    /// stem inside the envelope; every structure intersects the grid.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidPhantom(m));
        let grid = self.grid()?;
        let named: Vec<(&str, &Ellipsoid)> = [
            ("envelope", &self.envelope),
            ("brain", &self.brain),
            ("ventricle[0]", &self.ventricles[0]),
            ("ventricle[1]", &self.ventricles[1]),
            ("deep_gm[0]", &self.deep_gm[0]),
            ("deep_gm[1]", &self.deep_gm[1]),
            ("cerebellum[0]", &self.cerebellum[0]),
            ("cerebellum[1]", &self.cerebellum[1]),
            ("brain_stem", &self.brain_stem),
        ]
        .into_iter()
        .collect();
        for (name, e) in &named {
            if !e.is_valid() {
                return fail(format!("{name}: semi-axes must be positive"));
            }
        }
        if !(self.cortical_thickness_mm > 0.0) {
            return fail("cortical shell thickness must be positive".into());
        }
        let wm = self.white_matter();
        if !wm.is_valid() {
            return fail(format!(
                "cortical shell thickness {} mm exceeds the brain semi-axes",
                self.cortical_thickness_mm
            ));
        }
        if !self.brain.inside(&self.envelope) {
            return fail("nesting: cortical GM shell is not inside the CSF envelope".into());
        }
        for (name, e) in &named[2..6] {
            if !e.inside(&wm) {
                return fail(format!("nesting: {name} is not inside the white matter"));
            }
        }
        for (name, e) in &named[6..] {
            if !e.inside(&self.envelope) {
                return fail(format!("nesting: {name} is not inside the CSF envelope"));
            }
        }
        let (glo, ghi) = grid.world_bounds();
        for (name, e) in &named {
            let (lo, hi) = e.bounds();
            if (0..3).any(|a| hi[a] < glo[a] || lo[a] > ghi[a]) {
                return fail(format!("{name} lies entirely outside the grid"));
            }
        }
        Ok(())
    }

    fn label_at(&self, p: [f64; 3], rot: &[Matrix3<f64>; 9], wm: &Ellipsoid) -> u8 {
        // rot holds Rᵀ for: envelope, brain, vent x2, dgm x2, cereb x2, stem
        let inside = |e: &Ellipsoid, r: &Matrix3<f64>| e.level_with(r, p) <= 1.0;
        if inside(&self.ventricles[0], &rot[2]) || inside(&self.ventricles[1], &rot[3]) {
            VENTRICLES
        } else if inside(&self.deep_gm[0], &rot[4]) || inside(&self.deep_gm[1], &rot[5]) {
            DEEP_GM
        } else if inside(&self.brain_stem, &rot[8]) {
            BRAIN_STEM
        } else if inside(&self.cerebellum[0], &rot[6]) || inside(&self.cerebellum[1], &rot[7]) {
            CEREBELLUM
        } else if inside(wm, &rot[1]) {
            WM
        } else if inside(&self.brain, &rot[1]) {
            CORTICAL_GM
        } else if inside(&self.envelope, &rot[0]) {
            CSF
        } else {
            0
        }
    }
}

/// Renders the label phantom described by `spec`. Pure function of `spec`.
pub fn generate_phantom(spec: &PhantomSpec) -> Result<LabelVolume> {
    let s = spec.realized();
    s.validate()?;
    let grid = s.grid()?;
    let rt = |e: &Ellipsoid| e.rotation().transpose();
    let rot = [
        rt(&s.envelope),
        rt(&s.brain),
        rt(&s.ventricles[0]),
        rt(&s.ventricles[1]),
        rt(&s.deep_gm[0]),
        rt(&s.deep_gm[1]),
        rt(&s.cerebellum[0]),
        rt(&s.cerebellum[1]),
        rt(&s.brain_stem),
    ];
    let wm = s.white_matter();
    let g = grid.clone();
    LabelVolume::from_fn(grid, |[i, j, k]| {
        let p = g.voxel_to_world([i as f64, j as f64, k as f64]);
        s.label_at(p, &rot, &wm)
    })
}
