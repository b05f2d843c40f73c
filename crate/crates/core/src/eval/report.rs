use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{bonferroni, mean_sd, wilcoxon_signed_rank, ZeroMethod};
use crate::phantom::{TISSUE_DISPLAY, TISSUE_NAMES};

pub const OVERALL: &str = "Overall";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cohort {
    Neurotypical,
    Pathological,
}

impl Cohort {
    pub fn name(self) -> &'static str {
        match self {
            Cohort::Neurotypical => "neurotypical",
            Cohort::Pathological => "pathological",
        }
    }
}

/// One row of a per-subject DSC table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DscRecord {
    pub subject: String,
    pub cohort: Option<Cohort>,
    pub configuration: String,
    /// Tissue class 1..=7.
    pub tissue: u8,
    pub dsc: f64,
}

/// Per-subject Dice scores for several configurations.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DscTable {
    pub records: Vec<DscRecord>,
}

/// Parses a tissue column value: a class name or its number.
pub fn parse_tissue(s: &str) -> Option<u8> {
    let s = s.trim();
    if let Ok(n) = s.parse::<u8>() {
        return (1..=7).contains(&n).then_some(n);
    }
    TISSUE_NAMES
        .iter()
        .zip(TISSUE_DISPLAY)
        .position(|(a, b)| a.eq_ignore_ascii_case(s) || b.eq_ignore_ascii_case(s))
        .map(|i| i as u8 + 1)
}

const COLUMNS: [&str; 5] = ["subject", "cohort", "configuration", "tissue", "dsc"];

impl DscTable {
    pub fn read(path: &Path) -> Result<DscTable> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        DscTable::parse(&text, &path.display().to_string())
    }

    /// Parses `subject,cohort,configuration,tissue,dsc` with a header row;
    /// errors carry `origin` and the 1-based line number.
    pub fn parse(text: &str, origin: &str) -> Result<DscTable> {
        let err = |line: u64, message: String| Error::Csv {
            path: origin.to_string(),
            line,
            message,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = rdr.headers().map_err(|e| err(1, e.to_string()))?.clone();
        let col = |name: &str| header.iter().position(|h| h.eq_ignore_ascii_case(name));
        let mut idx = [0usize; 5];
        for (i, name) in COLUMNS.iter().enumerate() {
            idx[i] = col(name).ok_or_else(|| err(1, format!("missing column '{name}'")))?;
        }
        let mut records = Vec::new();
        let mut seen = BTreeMap::new();
        let mut cohorts: BTreeMap<String, Option<Cohort>> = BTreeMap::new();
        for row in rdr.records() {
            let row = row.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                err(line, e.to_string())
            })?;
            let line = row.position().map_or(0, |p| p.line());
            let field = |i: usize| row.get(idx[i]).unwrap_or("");
            let subject = field(0).to_string();
            if subject.is_empty() {
                return Err(err(line, "empty subject".into()));
            }
            let cohort = match field(1).to_ascii_lowercase().as_str() {
                "" => None,
                "neurotypical" => Some(Cohort::Neurotypical),
                "pathological" => Some(Cohort::Pathological),
                other => return Err(err(line, format!("unknown cohort '{other}'"))),
            };
            let configuration = field(2).to_string();
            if configuration.is_empty() {
                return Err(err(line, "empty configuration".into()));
            }
            let tissue = parse_tissue(field(3))
                .ok_or_else(|| err(line, format!("unknown tissue '{}'", field(3))))?;
            let dsc: f64 = field(4)
                .parse()
                .map_err(|_| err(line, format!("invalid dsc '{}'", field(4))))?;
            if !(0.0..=1.0).contains(&dsc) {
                return Err(err(line, format!("dsc {dsc} outside [0, 1]")));
            }
            if let Some(prev) = cohorts.insert(subject.clone(), cohort) {
                if prev != cohort {
                    return Err(err(line, format!("subject '{subject}' has inconsistent cohorts")));
                }
            }
            let key = (subject.clone(), configuration.clone(), tissue);
            if let Some(first) = seen.insert(key, line) {
                return Err(err(line, format!("duplicate entry (first on line {first})")));
            }
            records.push(DscRecord {
                subject,
                cohort,
                configuration,
                tissue,
                dsc,
            });
        }
        Ok(DscTable { records })
    }

    /// CSV text with the same columns the reader accepts.
    pub fn to_csv(&self) -> String {
        let mut s = COLUMNS.join(",") + "\n";
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.subject,
                r.cohort.map_or("", |c| c.name()),
                r.configuration,
                TISSUE_NAMES[r.tissue as usize - 1],
                r.dsc
            );
        }
        s
    }

    /// Configurations in order of first appearance.
    pub fn configurations(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.records {
            if !out.contains(&r.configuration) {
                out.push(r.configuration.clone());
            }
        }
        out
    }
}

/// A paired comparison of `configuration` against `reference`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    pub configuration: String,
    pub reference: String,
}

impl std::str::FromStr for Comparison {
    type Err = String;

    /// `A:B` compares A against reference B.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.split_once(':') {
            Some((a, b)) if !a.is_empty() && !b.is_empty() => Ok(Comparison {
                configuration: a.to_string(),
                reference: b.to_string(),
            }),
            _ => Err(format!("comparison '{s}' is not of the form CONFIG:REFERENCE")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub configuration: String,
    /// Tissue name or `Overall`.
    pub row: String,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub configuration: String,
    pub reference: String,
    pub row: String,
    pub n: usize,
    /// `None` when every paired difference is zero.
    pub statistic: Option<f64>,
    pub p_raw: Option<f64>,
    pub p_adjusted: Option<f64>,
    pub significant: bool,
}

impl ComparisonRow {
    pub fn label(&self) -> &'static str {
        match self.p_adjusted {
            None => "n.s. (degenerate)",
            Some(_) if self.significant => "*",
            Some(_) => "n.s.",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohortReport {
    /// `all`, `neurotypical` or `pathological`.
    pub cohort: String,
    pub subjects: Vec<String>,
    pub summaries: Vec<Summary>,
    pub comparisons: Vec<ComparisonRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub alpha: f64,
    pub zeros: ZeroMethod,
    pub configurations: Vec<String>,
    pub cohorts: Vec<CohortReport>,
    pub notes: Vec<String>,
}

fn row_names() -> Vec<String> {
    TISSUE_NAMES
        .iter()
        .map(|s| s.to_string())
        .chain([OVERALL.to_string()])
        .collect()
}

/// Per-subject values of one configuration, indexed `[row][subject]`
/// (rows: 7 tissues, then the overall mean over tissues).
fn values_of(
    cells: &BTreeMap<(&str, &str, u8), f64>,
    configuration: &str,
    subjects: &[String],
) -> Result<Vec<Vec<f64>>> {
    let mut out = vec![Vec::with_capacity(subjects.len()); 8];
    for s in subjects {
        let mut total = 0.0;
        for t in 1..=7u8 {
            let v = *cells.get(&(configuration, s.as_str(), t)).ok_or_else(|| {
                Error::Report(format!(
                    "missing DSC for subject '{s}', configuration '{configuration}', tissue {}",
                    TISSUE_NAMES[t as usize - 1]
                ))
            })?;
            out[t as usize - 1].push(v);
            total += v;
        }
        out[7].push(total / 7.0);
    }
    Ok(out)
}

/// Means and SDs per configuration and row, and Wilcoxon signed-rank tests
/// of each comparison with Bonferroni correction over the seven tissue
/// rows; computed for all subjects and for each tagged cohort.
pub fn build_report(
    table: &DscTable,
    comparisons: &[Comparison],
    alpha: f64,
    zeros: ZeroMethod,
) -> Result<MetricsReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} outside (0, 1)")));
    }
    if table.records.is_empty() {
        return Err(Error::Report("DSC table is empty".into()));
    }
    let configurations = table.configurations();
    for c in comparisons {
        for name in [&c.configuration, &c.reference] {
            if !configurations.contains(name) {
                return Err(Error::Report(format!("comparison references unknown configuration '{name}'")));
            }
        }
    }
    let cells: BTreeMap<(&str, &str, u8), f64> = table
        .records
        .iter()
        .map(|r| ((r.configuration.as_str(), r.subject.as_str(), r.tissue), r.dsc))
        .collect();
    let mut cohort_of: BTreeMap<&str, Option<Cohort>> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for r in &table.records {
        if cohort_of.insert(&r.subject, r.cohort).is_none() {
            order.push(r.subject.clone());
        }
    }
    let tagged: BTreeSet<Cohort> = cohort_of.values().flatten().copied().collect();
    let mut groups: Vec<(String, Vec<String>)> = vec![("all".into(), order.clone())];
    for c in tagged {
        let members = order.iter().filter(|s| cohort_of[s.as_str()] == Some(c)).cloned().collect();
        groups.push((c.name().into(), members));
    }

    let rows = row_names();
    let mut cohorts = Vec::with_capacity(groups.len());
    for (name, subjects) in groups {
        let mut values = BTreeMap::new();
        for c in &configurations {
            values.insert(c.as_str(), values_of(&cells, c, &subjects)?);
        }
        let mut summaries = Vec::new();
        for (ri, row) in rows.iter().enumerate() {
            for c in &configurations {
                let (mean, sd) = mean_sd(&values[c.as_str()][ri]);
                summaries.push(Summary {
                    configuration: c.clone(),
                    row: row.clone(),
                    n: subjects.len(),
                    mean,
                    sd,
                });
            }
        }
        let mut out_cmp = Vec::new();
        for cmp in comparisons {
            let a = &values[cmp.configuration.as_str()];
            let b = &values[cmp.reference.as_str()];
            let tests: Vec<Option<_>> = (0..rows.len())
                .map(|ri| match wilcoxon_signed_rank(&a[ri], &b[ri], zeros) {
                    Ok(t) => Ok(Some(t)),
                    Err(Error::DegenerateSample) => Ok(None),
                    Err(e) => Err(e),
                })
                .collect::<Result<_>>()?;
            // the family is the seven tissue rows; Overall stays unadjusted
            let family: Vec<f64> = tests[..7].iter().flatten().map(|t| t.p_value).collect();
            let adjusted = bonferroni(&family)?;
            let mut adj = adjusted.into_iter();
            for (ri, t) in tests.iter().enumerate() {
                let (statistic, p_raw, p_adjusted) = match t {
                    Some(t) => {
                        let pa = if ri < 7 { adj.next().unwrap_or(t.p_value) } else { t.p_value };
                        (Some(t.statistic), Some(t.p_value), Some(pa))
                    }
                    None => (None, None, None),
                };
                out_cmp.push(ComparisonRow {
                    configuration: cmp.configuration.clone(),
                    reference: cmp.reference.clone(),
                    row: rows[ri].clone(),
                    n: subjects.len(),
                    statistic,
                    p_raw,
                    p_adjusted,
                    significant: p_adjusted.is_some_and(|p| p < alpha),
                });
            }
        }
        cohorts.push(CohortReport {
            cohort: name,
            subjects,
            summaries,
            comparisons: out_cmp,
        });
    }
    let notes = vec![
        "DSC mean ± sample standard deviation (n − 1) over subjects.".to_string(),
        "Overall: per-subject mean of the seven tissue DSCs, then mean over subjects.".to_string(),
        "DSC convention: class absent from both maps = 1, absent from exactly one = 0.".to_string(),
        format!(
            "Paired two-sided Wilcoxon signed-rank test (zeros: {}); exact p up to 25 non-zero differences, normal approximation above.",
            match zeros {
                ZeroMethod::Drop => "drop",
                ZeroMethod::Pratt => "pratt",
            }
        ),
        format!("Bonferroni correction over the 7 tissue rows of each comparison (Overall unadjusted); * = adjusted p < {alpha}."),
    ];
    Ok(MetricsReport {
        alpha,
        zeros,
        configurations,
        cohorts,
        notes,
    })
}

fn fmt_p(p: Option<f64>) -> String {
    p.map_or(String::new(), |v| format!("{v:.6e}"))
}

impl MetricsReport {
    /// `cohort,row,configuration,n,mean,sd`.
    pub fn summary_csv(&self) -> String {
        let mut s = String::from("cohort,row,configuration,n,mean,sd\n");
        for c in &self.cohorts {
            for m in &c.summaries {
                let _ = writeln!(s, "{},{},{},{},{:.6},{:.6}", c.cohort, m.row, m.configuration, m.n, m.mean, m.sd);
            }
        }
        s
    }

    /// `cohort,row,configuration,reference,n,statistic,p_raw,p_adjusted,significance`.
    pub fn comparisons_csv(&self) -> String {
        let mut s = String::from("cohort,row,configuration,reference,n,statistic,p_raw,p_adjusted,significance\n");
        for c in &self.cohorts {
            for r in &c.comparisons {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{}",
                    c.cohort,
                    r.row,
                    r.configuration,
                    r.reference,
                    r.n,
                    r.statistic.map_or(String::new(), |w| format!("{w}")),
                    fmt_p(r.p_raw),
                    fmt_p(r.p_adjusted),
                    r.label()
                );
            }
        }
        s
    }

    /// Table with one column per configuration, DSC as `mean ± sd`; a `*`
    /// marks rows where that configuration differs significantly from a
    /// reference.
    pub fn text_table(&self) -> String {
        let mut out = String::new();
        let display: Vec<&str> = TISSUE_DISPLAY.iter().copied().chain([OVERALL]).collect();
        for c in &self.cohorts {
            let _ = writeln!(out, "Cohort: {} ({} subjects)", c.cohort, c.subjects.len());
            let width = 14;
            let _ = write!(out, "{:<13}", "Tissue");
            for cfg in &self.configurations {
                let _ = write!(out, " {cfg:>width$}");
            }
            out.push('\n');
            for (ri, row) in row_names().iter().enumerate() {
                let _ = write!(out, "{:<13}", display[ri]);
                for cfg in &self.configurations {
                    let m = c
                        .summaries
                        .iter()
                        .find(|m| &m.row == row && &m.configuration == cfg)
                        .expect("summary for every row and configuration");
                    let star = c
                        .comparisons
                        .iter()
                        .any(|r| &r.row == row && &r.configuration == cfg && r.significant);
                    let cell = format!("{:.2} ± {:.2}{}", m.mean, m.sd, if star { "*" } else { "" });
                    let _ = write!(out, " {cell:>width$}");
                }
                out.push('\n');
            }
            for r in c.comparisons.iter().filter(|r| r.row == OVERALL || r.p_adjusted.is_none()) {
                let _ = writeln!(
                    out,
                    "  {} vs {} [{}]: p = {}, adjusted {} {}",
                    r.configuration,
                    r.reference,
                    r.row,
                    r.p_raw.map_or("-".into(), |p| format!("{p:.4}")),
                    r.p_adjusted.map_or("-".into(), |p| format!("{p:.4}")),
                    r.label()
                );
            }
            out.push('\n');
        }
        for n in &self.notes {
            let _ = writeln!(out, "{n}");
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Writes `report.csv`, `comparisons.csv`, `report.txt` and `report.json`
    /// into `dir`; returns the paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = [
            ("report.csv", self.summary_csv()),
            ("comparisons.csv", self.comparisons_csv()),
            ("report.txt", self.text_table()),
            ("report.json", self.to_json()?),
        ];
        let mut out = Vec::new();
        for (name, text) in files {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
            out.push(p);
        }
        Ok(out)
    }
}
