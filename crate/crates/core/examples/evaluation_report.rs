//! Report tables from a per-subject DSC CSV, or from a synthetic one.
//!
//! cargo run --release --example evaluation_report -- [dsc.csv] [A:B ...]

use fetalsim::eval::{build_report, Comparison, DscTable, ZeroMethod};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn synthetic() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut s = String::from("subject,cohort,configuration,tissue,dsc\n");
    for subject in 0..12 {
        let cohort = if subject < 8 { "neurotypical" } else { "pathological" };
        for tissue in 1..=7 {
            let base: f64 = rng.random_range(0.4..0.8);
            for (cfg, gain) in [("Baseline", 0.0), ("Adapted", 0.06)] {
                let v = (base + gain + rng.random_range(-0.03..0.03)).clamp(0.0, 1.0);
                s += &format!("sub-{subject:02},{cohort},{cfg},{tissue},{v:.4}\n");
            }
        }
    }
    s
}

fn main() -> fetalsim::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (table, comparisons) = match args.first() {
        Some(path) => (
            DscTable::read(path.as_ref())?,
            args[1..].iter().map(|s| s.parse::<Comparison>().unwrap()).collect(),
        ),
        None => (DscTable::parse(&synthetic(), "synthetic")?, vec!["Adapted:Baseline".parse().unwrap()]),
    };
    let report = build_report(&table, &comparisons, 0.05, ZeroMethod::Drop)?;
    print!("{}", report.text_table());
    print!("{}", report.comparisons_csv());
    Ok(())
}
