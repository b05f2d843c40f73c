use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::volume::RigidTransform;

/// Qualitative amount of fetal motion during a series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotionLevel {
    None,
    Little,
    Moderate,
}

impl MotionLevel {
    /// Per-axis bounds `(rotation degrees, translation mm)`.
    pub fn bounds(self) -> (f64, f64) {
        match self {
            MotionLevel::None => (0.0, 0.0),
            MotionLevel::Little => (2.0, 0.5),
            MotionLevel::Moderate => (5.0, 2.0),
        }
    }
}

impl std::str::FromStr for MotionLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(MotionLevel::None),
            "little" => Ok(MotionLevel::Little),
            "moderate" => Ok(MotionLevel::Moderate),
            other => Err(format!("unknown motion level '{other}' (none|little|moderate)")),
        }
    }
}

/// One rigid transform per slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionTrace {
    pub level: MotionLevel,
    pub seed: u64,
    pub transforms: Vec<RigidTransform>,
}

impl MotionTrace {
    pub fn identity(n_slices: usize) -> Self {
        MotionTrace {
            level: MotionLevel::None,
            seed: 0,
            transforms: vec![RigidTransform::IDENTITY; n_slices],
        }
    }

    pub fn len(&self) -> usize {
        self.transforms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transforms.is_empty()
    }
}

/// Independent uniform per-slice motion within the level's bounds.
pub fn sample_motion(level: MotionLevel, n_slices: usize, seed: u64) -> MotionTrace {
    let (rot, trans) = level.bounds();
    let transforms = (0..n_slices)
        .map(|k| {
            if level == MotionLevel::None {
                return RigidTransform::IDENTITY;
            }
            let mut r = rng::stream(seed, k as u64);
            let rotation_deg = [(); 3].map(|_| r.random_range(-rot..=rot));
            let translation_mm = [(); 3].map(|_| r.random_range(-trans..=trans));
            RigidTransform::new(rotation_deg, translation_mm)
        })
        .collect();
    MotionTrace {
        level,
        seed,
        transforms,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn none_is_identity() {
        let t = sample_motion(MotionLevel::None, 20, 3);
        assert!(t.transforms.iter().all(|x| x.is_identity()));
    }

    #[test]
    fn bounds_hold() {
        for (level, rmax, tmax) in [(MotionLevel::Little, 2.0, 0.5), (MotionLevel::Moderate, 5.0, 2.0)] {
            let t = sample_motion(level, 1000, 17);
            let r = t.transforms.iter().flat_map(|x| x.rotation_deg).fold(0.0f64, |m, v| m.max(v.abs()));
            let s = t.transforms.iter().flat_map(|x| x.translation_mm).fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(r <= rmax && s <= tmax);
            // the range is actually used
            assert!(r > 0.9 * rmax && s > 0.9 * tmax);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(
            sample_motion(MotionLevel::Moderate, 30, 5),
            sample_motion(MotionLevel::Moderate, 30, 5)
        );
        assert_ne!(
            sample_motion(MotionLevel::Moderate, 30, 5),
            sample_motion(MotionLevel::Moderate, 30, 6)
        );
    }

    #[test]
    fn prefix_stable() {
        // per-slice streams: slice k does not depend on how many slices follow
        let a = sample_motion(MotionLevel::Little, 5, 9);
        let b = sample_motion(MotionLevel::Little, 12, 9);
        assert_eq!(a.transforms[..], b.transforms[..5]);
    }
}
