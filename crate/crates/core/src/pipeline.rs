//! The stages behind the command line: each reads a [`RunConfig`], writes
//! its outputs under `config.output` and a `<command>_manifest.json`.

use std::path::{Path, PathBuf};

use log::info;

use crate::acquisition::{io, simulate_case};
use crate::config::{Manifest, RunConfig};
use crate::error::{Error, Result};
use crate::eval::{build_report, tissue_dice, Cohort, DscRecord, DscTable, MetricsReport};
use crate::phantom::{generate_phantom, tissue_table, FieldStrength, TissueParams, TissueTable};
use crate::rng;
use crate::srr::{build_operator, fuse_labels, sr_reconstruct, union_grid, Reconstruction};
use crate::volume::{load_labels, resample, save_volume, Interpolation, LabelVolume};

pub const PHANTOM_FILE: &str = "phantom_labels.nii.gz";
pub const HR_REFERENCE_FILE: &str = "hr_reference.nii.gz";
pub const STACK_DIR: &str = "stacks";
pub const SR_FILE: &str = "sr.nii.gz";
pub const SR_LABELS_FILE: &str = "sr_labels.nii.gz";
pub const CONVERGENCE_FILE: &str = "convergence.csv";
pub const DSC_FILE: &str = "dsc.csv";

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn manifest_path(cfg: &RunConfig, command: &str) -> PathBuf {
    cfg.output.join(format!("{command}_manifest.json"))
}

fn tissues(cfg: &RunConfig) -> Result<TissueParams> {
    match &cfg.tissue_table {
        Some(p) => {
            let table = TissueTable::from_csv_path(p)?;
            Ok(table.params(FieldStrength::from_tesla(cfg.sequence.field_t)?).clone())
        }
        None => tissue_table(cfg.sequence.field_t),
    }
}

/// Renders the phantom to `phantom_labels.nii.gz`.
pub fn cmd_phantom(cfg: &RunConfig) -> Result<Manifest> {
    cfg.validate()?;
    create_dir(&cfg.output)?;
    let labels = generate_phantom(&cfg.phantom_spec())?;
    let path = cfg.output.join(PHANTOM_FILE);
    save_volume(&labels, &path)?;
    info!("phantom {:?} written to {}", labels.dims(), path.display());
    let mut m = Manifest::new("phantom", cfg);
    m.add_output(&path, &cfg.output)?;
    m.write(&manifest_path(cfg, "phantom"))?;
    Ok(m)
}

/// Simulates the stacks of one subject from `labels` (or the configured
/// phantom) into `stacks/`, with sidecars, propagated labels and the
/// noise-free HR reference.
pub fn cmd_simulate(cfg: &RunConfig, labels: Option<&Path>) -> Result<Manifest> {
    cfg.validate()?;
    let mut m = Manifest::new("simulate", cfg);
    let truth = match labels {
        Some(p) => {
            m.add_input(p)?;
            load_labels(p)?
        }
        None => generate_phantom(&cfg.phantom_spec())?,
    };
    if let Some(p) = &cfg.tissue_table {
        m.add_input(p)?;
    }
    let case = simulate_case(&truth, &tissues(cfg)?, &cfg.sequence, &cfg.case, cfg.seed)?;
    let dir = cfg.output.join(STACK_DIR);
    create_dir(&dir)?;
    let hr = cfg.output.join(HR_REFERENCE_FILE);
    save_volume(&case.hr, &hr)?;
    m.add_output(&hr, &cfg.output)?;
    for (i, (stack, lab)) in case.stacks.iter().zip(&case.labels).enumerate() {
        let name = format!("stack-{:02}_{}.nii.gz", i + 1, stack.geometry.orientation.name());
        let image = dir.join(name);
        for p in io::write_stack(stack, &image)? {
            m.add_output(&p, &cfg.output)?;
        }
        m.add_output(&io::write_labels(lab, &image)?, &cfg.output)?;
        m.seeds.push((format!("stack-{:02}", i + 1), stack.seed));
    }
    info!("{} stacks written to {}", case.stacks.len(), dir.display());
    m.write(&manifest_path(cfg, "simulate"))?;
    Ok(m)
}

/// Stack images under `dir`, sorted by name.
pub fn find_stacks(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for e in entries {
        let p = e.map_err(|e| Error::io(dir, e))?.path();
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
        let image = name.ends_with(".nii") || name.ends_with(".nii.gz");
        if image && !name.contains("_labels.nii") {
            out.push(p);
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(Error::EmptyStacks);
    }
    Ok(out)
}

/// Reconstructs the stacks (default: everything in `stacks/`) on an
/// isotropic grid of `solver.hr_spacing_mm` covering them. Writes the SR
/// volume, the fused labels when every stack has labels, and the objective
/// trace.
pub fn cmd_reconstruct(cfg: &RunConfig, inputs: &[PathBuf]) -> Result<(Manifest, Reconstruction)> {
    cfg.validate()?;
    let inputs = if inputs.is_empty() {
        find_stacks(&cfg.output.join(STACK_DIR))?
    } else {
        inputs.to_vec()
    };
    let mut m = Manifest::new("reconstruct", cfg);
    let mut stacks = Vec::with_capacity(inputs.len());
    let mut labels = Vec::with_capacity(inputs.len());
    for p in &inputs {
        let s = io::read_stack(p)?;
        m.add_input(p)?;
        m.add_input(&io::sidecar_path(p))?;
        if let Some(l) = io::read_labels(p, &s)? {
            m.add_input(&io::labels_path(p))?;
            labels.push(l);
        }
        m.seeds.push((p.display().to_string(), s.seed));
        stacks.push(s);
    }
    create_dir(&cfg.output)?;
    let grid = union_grid(&stacks, cfg.solver.hr_spacing_mm)?;
    info!("reconstructing {} stacks on {:?} voxels", stacks.len(), grid.dims());
    let op = build_operator(&stacks, &grid)?;
    let rec = sr_reconstruct(&op, &stacks, &cfg.solver)?;
    info!(
        "{} iterations, objective {:.6e}, converged {}",
        rec.iterations,
        rec.final_objective(),
        rec.converged
    );
    let sr = cfg.output.join(SR_FILE);
    save_volume(&rec.volume, &sr)?;
    m.add_output(&sr, &cfg.output)?;
    if labels.len() == stacks.len() {
        let fused = fuse_labels(&labels, &grid)?;
        let p = cfg.output.join(SR_LABELS_FILE);
        save_volume(&fused, &p)?;
        m.add_output(&p, &cfg.output)?;
    }
    let log = cfg.output.join(CONVERGENCE_FILE);
    rec.write_log(&log)?;
    m.add_output(&log, &cfg.output)?;
    m.write(&manifest_path(cfg, "reconstruct"))?;
    Ok((m, rec))
}

/// Builds the report of a DSC table (`csv`, else `evaluation.dsc_csv`).
pub fn cmd_evaluate(cfg: &RunConfig, csv: Option<&Path>) -> Result<(Manifest, MetricsReport)> {
    cfg.validate()?;
    let path = csv
        .map(Path::to_path_buf)
        .or_else(|| cfg.evaluation.dsc_csv.clone())
        .ok_or_else(|| Error::Config("no DSC table given (evaluation.dsc_csv)".into()))?;
    let table = DscTable::read(&path)?;
    let comparisons = cfg.evaluation.parsed_comparisons()?;
    let report = build_report(&table, &comparisons, cfg.evaluation.alpha, cfg.evaluation.zeros)?;
    let mut m = Manifest::new("evaluate", cfg);
    m.add_input(&path)?;
    for p in report.write(&cfg.output)? {
        m.add_output(&p, &cfg.output)?;
    }
    m.write(&manifest_path(cfg, "evaluate"))?;
    Ok((m, report))
}

/// Configuration names used by [`pipeline`].
pub const FUSED: &str = "fused";
pub const SINGLE_STACK: &str = "single-stack";

/// Phantom, simulation and reconstruction for `pipeline.subjects` subjects
/// under `sub-XX/`, then Dice of the fused SR labels and of the first
/// stack's labels (nearest-neighbour upsampled) against the phantom on the
/// SR grid, written to `dsc.csv` and evaluated.
pub fn pipeline(cfg: &RunConfig) -> Result<(Manifest, MetricsReport)> {
    cfg.validate()?;
    create_dir(&cfg.output)?;
    let mut m = Manifest::new("pipeline", cfg);
    let mut table = DscTable::default();
    for s in 0..cfg.pipeline.subjects {
        let subject = format!("sub-{:02}", s + 1);
        let every = cfg.pipeline.pathological_every;
        let pathological = every > 0 && (s + 1) % every == 0;
        let mut sub = cfg.clone();
        sub.seed = rng::derive_seed(cfg.seed, s as u64);
        sub.phantom.pathological = pathological;
        sub.output = cfg.output.join(&subject);
        m.seeds.push((subject.clone(), sub.seed));
        info!("{subject}: seed {}, pathological {pathological}", sub.seed);

        let mut outputs = cmd_phantom(&sub)?.outputs;
        outputs.extend(cmd_simulate(&sub, Some(&sub.output.join(PHANTOM_FILE)))?.outputs);
        outputs.extend(cmd_reconstruct(&sub, &[])?.0.outputs);
        for o in outputs {
            m.outputs.push(crate::config::FileDigest {
                path: format!("{subject}/{}", o.path),
                sha256: o.sha256,
            });
        }

        let fused = load_labels(sub.output.join(SR_LABELS_FILE))?;
        let grid = fused.grid().clone();
        let truth = resample(&load_labels(sub.output.join(PHANTOM_FILE))?, &grid, Interpolation::Nearest)?;
        let first = find_stacks(&sub.output.join(STACK_DIR))?.remove(0);
        let single: LabelVolume = resample(&load_labels(io::labels_path(&first))?, &grid, Interpolation::Nearest)?;
        let cohort = Some(if pathological { Cohort::Pathological } else { Cohort::Neurotypical });
        for (name, pred) in [(FUSED, &fused), (SINGLE_STACK, &single)] {
            for (t, dsc) in tissue_dice(pred, &truth)?.into_iter().enumerate() {
                table.records.push(DscRecord {
                    subject: subject.clone(),
                    cohort,
                    configuration: name.to_string(),
                    tissue: t as u8 + 1,
                    dsc,
                });
            }
        }
    }
    let csv = cfg.output.join(DSC_FILE);
    std::fs::write(&csv, table.to_csv()).map_err(|e| Error::io(&csv, e))?;
    m.add_output(&csv, &cfg.output)?;

    let mut eval = cfg.clone();
    if eval.evaluation.comparisons.is_empty() {
        eval.evaluation.comparisons = vec![format!("{FUSED}:{SINGLE_STACK}")];
    }
    let (em, report) = cmd_evaluate(&eval, Some(&csv))?;
    m.outputs.extend(em.outputs);
    m.write(&manifest_path(cfg, "pipeline"))?;
    Ok((m, report))
}
