//! Renders a seeded label phantom and prints the voxel count per tissue.
//!
//! cargo run --release --example phantom -- [seed] [out.nii.gz]

use fetalsim::phantom::{generate_phantom, PhantomSpec, TISSUE_DISPLAY};
use fetalsim::volume::save_volume;

fn main() -> fetalsim::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seed = args.first().map_or(42, |s| s.parse().expect("seed"));
    let mut spec = PhantomSpec::with_seed(seed);
    let labels = generate_phantom(&spec)?;
    spec.pathological = true;
    let enlarged = generate_phantom(&spec)?;
    let (h, p) = (labels.histogram(), enlarged.histogram());
    println!("{:<12} {:>9} {:>13}", "tissue", "voxels", "pathological");
    for (c, name) in TISSUE_DISPLAY.iter().enumerate() {
        println!("{name:<12} {:>9} {:>13}", h[c + 1], p[c + 1]);
    }
    if let Some(out) = args.get(1) {
        save_volume(&labels, out)?;
        println!("written to {out}");
    }
    Ok(())
}
