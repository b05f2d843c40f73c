//! Simulates six stacks of the default phantom, reconstructs them on the
//! phantom grid and compares against the best single stack.
//!
//! cargo run --release --example reconstruct_phantom -- [motion] [snr|inf]

use std::time::Instant;

use fetalsim::acquisition::{simulate_case, CaseConfig, MotionLevel, SequenceParams};
use fetalsim::eval::tissue_dice;
use fetalsim::phantom::{generate_phantom, tissue_table, PhantomSpec, TISSUE_DISPLAY};
use fetalsim::srr::{build_operator, fuse_labels, psnr, sr_reconstruct, SolverConfig};
use fetalsim::volume::{resample, Interpolation};

fn main() -> fetalsim::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let motion: MotionLevel = args.first().map_or("little", |s| s.as_str()).parse().unwrap();
    let snr = match args.get(1).map(|s| s.as_str()) {
        Some("inf") => Some(None),
        Some(v) => Some(Some(v.parse().unwrap())),
        None => None,
    };
    let labels = generate_phantom(&PhantomSpec::default())?;
    let case = CaseConfig { motion, snr_db: snr, ..Default::default() };
    let t = Instant::now();
    let sim = simulate_case(&labels, &tissue_table(1.5)?, &SequenceParams::default(), &case, 7)?;
    println!("simulated {} stacks in {:.1?}", sim.stacks.len(), t.elapsed());

    let hr = labels.grid();
    let fg: Vec<bool> = labels.data().iter().map(|&l| l > 0).collect();
    let best = sim
        .stacks
        .iter()
        .map(|s| {
            let up = resample(&s.image, hr, Interpolation::Trilinear).unwrap();
            psnr(&up, &sim.hr, Some(&fg)).unwrap()
        })
        .fold(f64::NEG_INFINITY, f64::max);
    println!("best single stack: {best:.2} dB");

    let t = Instant::now();
    let op = build_operator(&sim.stacks, hr)?;
    println!("operator: {} rows in {:.1?}", op.n_rows(), t.elapsed());
    let t = Instant::now();
    let rec = sr_reconstruct(&op, &sim.stacks, &SolverConfig::default())?;
    println!(
        "SR: {} iterations in {:.1?}, {:.2} dB",
        rec.iterations,
        t.elapsed(),
        psnr(&rec.volume, &sim.hr, Some(&fg))?
    );

    let t = Instant::now();
    let fused = fuse_labels(&sim.labels, hr)?;
    println!("fused labels in {:.1?}", t.elapsed());
    for (name, d) in TISSUE_DISPLAY.iter().zip(tissue_dice(&fused, &labels)?) {
        println!("{name:<12} dice {d:.4}");
    }
    Ok(())
}
