use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::MAX_LABEL;

/// Shipped default relaxation table. Representative literature-style
/// constants, replaceable through [`TissueTable::from_csv_path`].
const DEFAULT_TABLE: &str = include_str!("../../data/tissue_params.csv");

/// Tissue class names in label order 1..=7.
pub const TISSUE_NAMES: [&str; 7] = [
    "CSF",
    "cortical_GM",
    "WM",
    "ventricles",
    "cerebellum",
    "deep_GM",
    "brain_stem",
];

/// Human-readable tissue names as they appear in report tables.
pub const TISSUE_DISPLAY: [&str; 7] = [
    "CSF",
    "Cortical GM",
    "WM",
    "Ventricles",
    "Cerebellum",
    "Deep GM",
    "Brain stem",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FieldStrength {
    #[serde(rename = "1.5")]
    T1_5,
    #[serde(rename = "3.0")]
    T3,
}

impl FieldStrength {
    pub const ALL: [FieldStrength; 2] = [FieldStrength::T1_5, FieldStrength::T3];

    pub fn from_tesla(t: f64) -> Result<Self> {
        if (t - 1.5).abs() < 1e-9 {
            Ok(FieldStrength::T1_5)
        } else if (t - 3.0).abs() < 1e-9 {
            Ok(FieldStrength::T3)
        } else {
            Err(Error::UnsupportedField(t))
        }
    }

    pub fn tesla(self) -> f64 {
        match self {
            FieldStrength::T1_5 => 1.5,
            FieldStrength::T3 => 3.0,
        }
    }
}

/// Relaxation times (ms) and relative proton density of one tissue.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Relaxation {
    pub t1_ms: f64,
    pub t2_ms: f64,
    pub pd: f64,
}

impl Relaxation {
    fn validate(&self, class: u8) -> Result<()> {
        let ok = self.t2_ms > 0.0 && self.t1_ms > self.t2_ms && self.pd > 0.0 && self.pd <= 1.0;
        if ok && self.t1_ms.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "class {class}: need T1 > T2 > 0 and PD in (0, 1], got {self:?}"
            )))
        }
    }
}

/// Relaxation parameters for classes 1..=7 at one field strength.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TissueParams {
    pub field: FieldStrength,
    entries: Vec<Option<Relaxation>>,
}

impl TissueParams {
    pub fn get(&self, class: u8) -> Option<&Relaxation> {
        self.entries.get(class as usize).and_then(|e| e.as_ref())
    }

    /// Overrides or inserts one class.
    pub fn set(&mut self, class: u8, r: Relaxation) -> Result<()> {
        if class == 0 || class > MAX_LABEL {
            return Err(Error::InvalidParameter(format!("no tissue class {class}")));
        }
        r.validate(class)?;
        self.entries[class as usize] = Some(r);
        Ok(())
    }

    /// Drops a class (used to exercise missing-entry handling).
    pub fn remove(&mut self, class: u8) {
        if let Some(e) = self.entries.get_mut(class as usize) {
            *e = None;
        }
    }
}

/// Both field strengths, complete for every class.
#[derive(Clone, Debug, PartialEq)]
pub struct TissueTable {
    by_field: [TissueParams; 2],
}

#[derive(Deserialize)]
struct Row {
    class: u8,
    field: f64,
    #[serde(rename = "T1")]
    t1: f64,
    #[serde(rename = "T2")]
    t2: f64,
    #[serde(rename = "PD")]
    pd: f64,
}

impl TissueTable {
    /// Parses a CSV with columns `class,field,T1,T2,PD`.
    pub fn from_csv(reader: impl Read, source: &str) -> Result<Self> {
        let empty = |field| TissueParams {
            field,
            entries: vec![None; MAX_LABEL as usize + 1],
        };
        let mut by_field = [empty(FieldStrength::T1_5), empty(FieldStrength::T3)];
        let mut rdr = csv::Reader::from_reader(reader);
        for rec in rdr.deserialize::<Row>() {
            let row = rec.map_err(|e| Error::Csv {
                path: source.to_string(),
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let f = FieldStrength::from_tesla(row.field)?;
            by_field[f as usize].set(
                row.class,
                Relaxation {
                    t1_ms: row.t1,
                    t2_ms: row.t2,
                    pd: row.pd,
                },
            )?;
        }
        for params in &by_field {
            for class in 1..=MAX_LABEL {
                if params.get(class).is_none() {
                    return Err(Error::InvalidParameter(format!(
                        "{source}: no entry for class {class} at {} T",
                        params.field.tesla()
                    )));
                }
            }
        }
        Ok(TissueTable { by_field })
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        TissueTable::from_csv(f, &path.display().to_string())
    }

    pub fn params(&self, field: FieldStrength) -> &TissueParams {
        &self.by_field[field as usize]
    }
}

impl Default for TissueTable {
    fn default() -> Self {
        TissueTable::from_csv(DEFAULT_TABLE.as_bytes(), "built-in table")
            .expect("built-in tissue table is valid")
    }
}

/// Shipped relaxation parameters at `field_t` tesla (1.5 or 3.0).
pub fn tissue_table(field_t: f64) -> Result<TissueParams> {
    let f = FieldStrength::from_tesla(field_t)?;
    Ok(TissueTable::default().params(f).clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csf_has_longest_t2_at_1_5() {
        let t = tissue_table(1.5).unwrap();
        let csf = t.get(1).unwrap();
        for class in 2..=7 {
            if class == 4 {
                continue;
            }
            assert!(csf.t2_ms > t.get(class).unwrap().t2_ms);
        }
        assert!(csf.t2_ms > t.get(3).unwrap().t2_ms);
    }

    #[test]
    fn t1_lengthens_at_3t() {
        let lo = tissue_table(1.5).unwrap();
        let hi = tissue_table(3.0).unwrap();
        for class in 1..=7 {
            assert!(hi.get(class).unwrap().t1_ms > lo.get(class).unwrap().t1_ms);
        }
    }

    #[test]
    fn unsupported_field() {
        let err = tissue_table(7.0).unwrap_err();
        assert!(err.to_string().contains("unsupported field"));
    }

    #[test]
    fn every_entry_obeys_invariants() {
        let table = TissueTable::default();
        for f in FieldStrength::ALL {
            for class in 1..=7 {
                let r = table.params(f).get(class).unwrap();
                assert!(r.t1_ms > r.t2_ms && r.t2_ms > 0.0);
                assert!(r.pd > 0.0 && r.pd <= 1.0);
            }
        }
    }

    #[test]
    fn incomplete_csv_rejected() {
        let csv = "class,field,T1,T2,PD\n1,1.5,4000,2000,1.0\n";
        assert!(TissueTable::from_csv(csv.as_bytes(), "t").is_err());
    }

    #[test]
    fn bad_row_reports_line() {
        let csv = "class,field,T1,T2,PD\n1,1.5,abc,2000,1.0\n";
        let err = TissueTable::from_csv(csv.as_bytes(), "t.csv").unwrap_err();
        assert!(err.to_string().starts_with("t.csv:2"), "{err}");
    }

    #[test]
    fn t2_longer_than_t1_rejected() {
        let mut csv = DEFAULT_TABLE.to_string();
        csv = csv.replace("2,1.5,1100,110,0.85", "2,1.5,100,110,0.85");
        assert!(TissueTable::from_csv(csv.as_bytes(), "t").is_err());
    }
}
