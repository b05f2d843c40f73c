//! On-disk stacks: a NIfTI image, an optional NIfTI label map and a JSON
//! sidecar holding geometry, motion and sequence parameters.
//!
//! For an image `sub-01_run-1.nii.gz` the sidecar is `sub-01_run-1.json` and
//! the labels are `sub-01_run-1_labels.nii.gz`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::acquisition::{LabelStack, MotionTrace, SequenceParams, SimulatedStack, StackGeometry};
use crate::error::{Error, Result};
use crate::volume::Grid;
use crate::volume::{load_intensity, load_labels, save_volume, IntensityVolume, LabelVolume};

pub const SIDECAR_SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub schema: u32,
    pub geometry: StackGeometry,
    pub motion: MotionTrace,
    pub sequence: SequenceParams,
    pub seed: u64,
}

fn stem(image: &Path) -> (PathBuf, String) {
    let name = image.file_name().and_then(|n| n.to_str()).unwrap_or("stack");
    let base = name
        .strip_suffix(".nii.gz")
        .or_else(|| name.strip_suffix(".nii"))
        .unwrap_or(name);
    (image.parent().unwrap_or(Path::new("")).to_path_buf(), base.to_string())
}

// NIfTI stores the affine in single precision.
fn matches(a: &Grid, b: &Grid) -> bool {
    a.dims() == b.dims()
        && a.affine()
            .iter()
            .flatten()
            .zip(b.affine().iter().flatten())
            .all(|(x, y)| (x - y).abs() <= 1e-4 * x.abs().max(1.0))
}

pub fn sidecar_path(image: &Path) -> PathBuf {
    let (dir, base) = stem(image);
    dir.join(format!("{base}.json"))
}

pub fn labels_path(image: &Path) -> PathBuf {
    let (dir, base) = stem(image);
    let ext = if image.to_string_lossy().ends_with(".gz") { ".nii.gz" } else { ".nii" };
    dir.join(format!("{base}_labels{ext}"))
}

/// Writes the image and its sidecar; returns the paths written.
pub fn write_stack(stack: &SimulatedStack, image: &Path) -> Result<Vec<PathBuf>> {
    save_volume(&stack.image, image)?;
    let sc = Sidecar {
        schema: SIDECAR_SCHEMA,
        geometry: stack.geometry.clone(),
        motion: stack.motion.clone(),
        sequence: stack.sequence.clone(),
        seed: stack.seed,
    };
    let side = sidecar_path(image);
    let text = serde_json::to_string_pretty(&sc)?;
    std::fs::write(&side, text + "\n").map_err(|e| Error::io(&side, e))?;
    Ok(vec![image.to_path_buf(), side])
}

pub fn write_labels(labels: &LabelStack, image: &Path) -> Result<PathBuf> {
    let p = labels_path(image);
    save_volume(&labels.labels, &p)?;
    Ok(p)
}

pub fn read_sidecar(image: &Path) -> Result<Sidecar> {
    let side = sidecar_path(image);
    if !side.exists() {
        return Err(Error::MissingSidecar(side));
    }
    let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let sc: Sidecar = serde_json::from_str(&text)?;
    if sc.schema != SIDECAR_SCHEMA {
        return Err(Error::Unsupported(format!(
            "{}: sidecar schema {} (expected {SIDECAR_SCHEMA})",
            side.display(),
            sc.schema
        )));
    }
    sc.geometry.validate()?;
    if sc.motion.len() != sc.geometry.n_slices() {
        return Err(Error::Geometry(format!(
            "{}: {} motion transforms for {} slices",
            side.display(),
            sc.motion.len(),
            sc.geometry.n_slices()
        )));
    }
    Ok(sc)
}

/// Loads an image and its sidecar, checking that they describe the same grid.
pub fn read_stack(image: &Path) -> Result<SimulatedStack> {
    let sc = read_sidecar(image)?;
    let vol = load_intensity(image)?;
    let expected = sc.geometry.grid()?;
    if !matches(vol.grid(), &expected) {
        return Err(Error::GridMismatch(format!(
            "{} does not match the geometry in its sidecar",
            image.display()
        )));
    }
    Ok(SimulatedStack {
        image: IntensityVolume::new(expected, vol.into_data())?,
        motion: sc.motion,
        geometry: sc.geometry,
        sequence: sc.sequence,
        seed: sc.seed,
    })
}

/// Loads the label map stored next to `image`, if any.
pub fn read_labels(image: &Path, stack: &SimulatedStack) -> Result<Option<LabelStack>> {
    let p = labels_path(image);
    if !p.exists() {
        return Ok(None);
    }
    let labels = load_labels(&p)?;
    if !matches(labels.grid(), stack.image.grid()) {
        return Err(Error::GridMismatch(format!(
            "{} does not match its image grid",
            p.display()
        )));
    }
    Ok(Some(LabelStack {
        labels: LabelVolume::new(stack.image.grid().clone(), labels.into_data())?,
        motion: stack.motion.clone(),
        geometry: stack.geometry.clone(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::{simulate_case, CaseConfig};
    use crate::phantom::{generate_phantom, tissue_table, PhantomSpec};

    #[test]
    fn naming() {
        let p = Path::new("out/stack_0.nii.gz");
        assert_eq!(sidecar_path(p), Path::new("out/stack_0.json"));
        assert_eq!(labels_path(p), Path::new("out/stack_0_labels.nii.gz"));
        assert_eq!(labels_path(Path::new("a.nii")), Path::new("a_labels.nii"));
    }

    #[test]
    fn round_trip() {
        let spec = PhantomSpec {
            dims: [32; 3],
            spacing_mm: [2.0; 3],
            ..PhantomSpec::default()
        };
        let labels = generate_phantom(&spec).unwrap();
        let case = CaseConfig {
            stacks_per_orientation: 1,
            ..Default::default()
        };
        let sim = simulate_case(&labels, &tissue_table(1.5).unwrap(), &SequenceParams::default(), &case, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let img = dir.path().join("s.nii.gz");
        write_stack(&sim.stacks[0], &img).unwrap();
        write_labels(&sim.labels[0], &img).unwrap();
        let back = read_stack(&img).unwrap();
        assert_eq!(back, sim.stacks[0]);
        let lb = read_labels(&img, &back).unwrap().unwrap();
        assert_eq!(lb, sim.labels[0]);
    }

    #[test]
    fn missing_sidecar_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let img = dir.path().join("x.nii");
        assert!(matches!(read_stack(&img), Err(Error::MissingSidecar(_))));
    }
}
