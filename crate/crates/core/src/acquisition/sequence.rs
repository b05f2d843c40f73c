use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phantom::{Relaxation, TissueParams};
use crate::volume::{IntensityVolume, LabelVolume};

/// Through-plane sensitivity of a 2D slice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SliceProfile {
    /// Uniform over the slice thickness.
    Box,
    /// Gaussian with FWHM equal to the slice thickness, truncated at ± one thickness.
    Gaussian,
}

/// T2-weighted single-shot fast spin echo acquisition parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SequenceParams {
    pub field_t: f64,
    pub tr_ms: f64,
    /// Effective echo time.
    pub te_ms: f64,
    /// Acquired in-plane resolution.
    pub inplane_res_mm: f64,
    pub slice_thickness_mm: f64,
    /// Gap between adjacent slices; negative values overlap.
    pub slice_gap_mm: f64,
    /// Target SNR on the mean foreground signal; `None` disables noise.
    pub snr_db: Option<f64>,
    pub profile: SliceProfile,
    /// Global multiplicative intensity scale.
    pub intensity_scale: f64,
}

impl Default for SequenceParams {
    fn default() -> Self {
        SequenceParams {
            field_t: 1.5,
            tr_ms: 6000.0,
            te_ms: 90.0,
            inplane_res_mm: 1.1,
            slice_thickness_mm: 3.0,
            slice_gap_mm: 0.0,
            snr_db: Some(25.0),
            profile: SliceProfile::Gaussian,
            intensity_scale: 1.0,
        }
    }
}

impl SequenceParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(format!("sequence: {m}")));
        if !(self.te_ms > 0.0) {
            return bad("TE must be positive");
        }
        if !(self.tr_ms > self.te_ms) {
            return bad("TR must exceed TE");
        }
        if !(self.slice_thickness_mm > 0.0) {
            return bad("slice thickness must be positive");
        }
        if !(self.inplane_res_mm > 0.0) {
            return bad("in-plane resolution must be positive");
        }
        if !(self.slice_thickness_mm + self.slice_gap_mm > 0.0) {
            return bad("slice spacing (thickness + gap) must be positive");
        }
        if let Some(snr) = self.snr_db {
            if !snr.is_finite() {
                return bad("SNR must be finite (use null for noiseless)");
            }
        }
        if !(self.intensity_scale > 0.0 && self.intensity_scale.is_finite()) {
            return bad("intensity scale must be positive");
        }
        Ok(())
    }

    /// Centre-to-centre distance of adjacent slices.
    pub fn slice_spacing_mm(&self) -> f64 {
        self.slice_thickness_mm + self.slice_gap_mm
    }
}

/// Closed-form saturation-recovery spin-echo signal
/// `PD · (1 − exp(−TR/T1)) · exp(−TE/T2)`.
pub fn steady_state_signal(tissue: &Relaxation, seq: &SequenceParams) -> Result<f64> {
    if !(tissue.t1_ms > 0.0 && tissue.t2_ms > 0.0 && seq.tr_ms > 0.0 && seq.te_ms > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "T1, T2, TR and TE must be positive (T1={}, T2={}, TR={}, TE={})",
            tissue.t1_ms, tissue.t2_ms, seq.tr_ms, seq.te_ms
        )));
    }
    Ok(relaxation_signal(tissue, seq.tr_ms, seq.te_ms))
}

/// The closed form without parameter checks; `tr_ms` may be infinite and
/// `te_ms` zero.
pub fn relaxation_signal(tissue: &Relaxation, tr_ms: f64, te_ms: f64) -> f64 {
    let recovery = -(-tr_ms / tissue.t1_ms).exp_m1();
    tissue.pd * recovery * (-te_ms / tissue.t2_ms).exp()
}

/// Maps each label to its steady-state signal; background stays 0.
pub fn signal_phantom(
    labels: &LabelVolume,
    table: &TissueParams,
    seq: &SequenceParams,
) -> Result<IntensityVolume> {
    let mut lut = [0f32; 256];
    for class in labels.label_set() {
        if class == 0 {
            continue;
        }
        let t = table.get(class).ok_or(Error::MissingTissue(class))?;
        lut[class as usize] = (steady_state_signal(t, seq)? * seq.intensity_scale) as f32;
    }
    labels.map(|l| lut[l as usize])
}
