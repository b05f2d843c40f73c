use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fetalsim::acquisition::{DomainPreset, MotionLevel};
use fetalsim::config::RunConfig;
use fetalsim::eval::ZeroMethod;
use fetalsim::pipeline;

#[derive(Parser)]
#[command(name = "fetalsim", version, about = "Simulate, reconstruct and evaluate fetal brain MR acquisitions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration (or a run manifest to replay).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// target-like or source-like.
    #[arg(long)]
    preset: Option<DomainPreset>,
    /// none, little or moderate.
    #[arg(long)]
    motion: Option<MotionLevel>,
    /// SNR in dB, or `inf` for noiseless stacks.
    #[arg(long)]
    snr: Option<String>,
    /// TV weight.
    #[arg(long)]
    lambda: Option<f64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Render the label phantom.
    Phantom(Common),
    /// Simulate thick-slice stacks.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Label map to acquire (default: the configured phantom).
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Super-resolution reconstruction and label fusion.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        /// Stack images (default: every stack in <output>/stacks).
        stacks: Vec<PathBuf>,
    },
    /// Report tables from a per-subject DSC CSV.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// DSC table (default: evaluation.dsc_csv).
        csv: Option<PathBuf>,
        /// CONFIG:REFERENCE pairs; replaces evaluation.comparisons.
        #[arg(long = "compare")]
        comparisons: Vec<String>,
        #[arg(long)]
        alpha: Option<f64>,
        /// drop or pratt.
        #[arg(long)]
        zeros: Option<ZeroMethod>,
    },
    /// phantom, simulate, reconstruct and evaluate in one run.
    Pipeline(Common),
}

fn resolve(c: &Common) -> fetalsim::Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(p) = c.preset {
        cfg.case.preset = p;
    }
    if let Some(m) = c.motion {
        cfg.case.motion = m;
    }
    if let Some(s) = &c.snr {
        cfg.case.snr_db = Some(match s.as_str() {
            "inf" | "none" => None,
            v => Some(v.parse().map_err(|_| {
                fetalsim::Error::Config(format!("--snr expects a number or 'inf', got '{v}'"))
            })?),
        });
    }
    if let Some(l) = c.lambda {
        cfg.solver.lambda = Some(l);
    }
    if let Some(o) = &c.output {
        cfg.output = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> fetalsim::Result<()> {
    let common = match &cli.command {
        Command::Phantom(c) | Command::Pipeline(c) => c,
        Command::Simulate { common, .. }
        | Command::Reconstruct { common, .. }
        | Command::Evaluate { common, .. } => common,
    };
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| fetalsim::Error::Config(format!("thread pool: {e}")))?;
    }
    let mut cfg = resolve(common)?;
    let manifest = match &cli.command {
        Command::Phantom(_) => pipeline::cmd_phantom(&cfg)?,
        Command::Simulate { labels, .. } => pipeline::cmd_simulate(&cfg, labels.as_deref())?,
        Command::Reconstruct { stacks, .. } => pipeline::cmd_reconstruct(&cfg, stacks)?.0,
        Command::Evaluate {
            csv,
            comparisons,
            alpha,
            zeros,
            ..
        } => {
            if !comparisons.is_empty() {
                cfg.evaluation.comparisons = comparisons.clone();
            }
            if let Some(a) = alpha {
                cfg.evaluation.alpha = *a;
            }
            if let Some(z) = zeros {
                cfg.evaluation.zeros = *z;
            }
            let (m, report) = pipeline::cmd_evaluate(&cfg, csv.as_deref())?;
            print!("{}", report.text_table());
            m
        }
        Command::Pipeline(_) => {
            let (m, report) = pipeline::pipeline(&cfg)?;
            print!("{}", report.text_table());
            m
        }
    };
    for o in &manifest.outputs {
        log::info!("wrote {} ({})", o.path, &o.sha256[..12]);
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FETALSIM_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
