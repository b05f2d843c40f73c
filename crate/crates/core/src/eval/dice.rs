use crate::error::{Error, Result};
use crate::volume::LabelVolume;

/// Voxel counts `(|P|, |T|, |P∩T|)` per class 0..=7.
fn overlap(pred: &LabelVolume, truth: &LabelVolume) -> Result<[[usize; 3]; 8]> {
    if !pred.grid().same_lattice(truth.grid()) {
        return Err(Error::GridMismatch("dice inputs must share a grid".into()));
    }
    let mut c = [[0usize; 3]; 8];
    for (&p, &t) in pred.data().iter().zip(truth.data()) {
        c[p as usize][0] += 1;
        c[t as usize][1] += 1;
        if p == t {
            c[p as usize][2] += 1;
        }
    }
    Ok(c)
}

fn ratio([p, t, i]: [usize; 3]) -> f64 {
    if p + t == 0 {
        1.0
    } else {
        2.0 * i as f64 / (p + t) as f64
    }
}

/// `2|P∩T| / (|P| + |T|)` for one class; 1 when the class is absent from both.
pub fn dice(pred: &LabelVolume, truth: &LabelVolume, class: u8) -> Result<f64> {
    if class > 7 {
        return Err(Error::InvalidParameter(format!("class {class} out of range")));
    }
    Ok(ratio(overlap(pred, truth)?[class as usize]))
}

/// Dice of the seven tissue classes 1..=7 in one pass.
pub fn tissue_dice(pred: &LabelVolume, truth: &LabelVolume) -> Result<[f64; 7]> {
    let c = overlap(pred, truth)?;
    Ok(std::array::from_fn(|i| ratio(c[i + 1])))
}
