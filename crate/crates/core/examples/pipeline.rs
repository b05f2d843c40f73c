//! Runs the whole pipeline from a JSON config and prints the manifest
//! summary.
//!
//! cargo run --release --example pipeline -- [config.json]

use fetalsim::config::RunConfig;

fn main() -> fetalsim::Result<()> {
    let mut cfg = match std::env::args().nth(1) {
        Some(p) => RunConfig::load(p.as_ref())?,
        None => serde_json::from_str(
            r#"{"schema": 1, "seed": 1,
                "phantom": {"dims": [32, 32, 32], "spacing_mm": [2.0, 2.0, 2.0]},
                "solver": {"max_iterations": 30, "hr_spacing_mm": 1.6},
                "pipeline": {"subjects": 4}}"#,
        )?,
    };
    if cfg.output == std::path::Path::new("out") {
        cfg.output = std::env::temp_dir().join("fetalsim_pipeline");
    }
    let (manifest, report) = fetalsim::pipeline::pipeline(&cfg)?;
    print!("{}", report.text_table());
    println!("config sha256 {}", manifest.config_sha256);
    println!("{} outputs under {}", manifest.outputs.len(), cfg.output.display());
    Ok(())
}
