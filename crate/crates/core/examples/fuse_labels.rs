//! Label round trip: phantom labels propagated through six noiseless,
//! motion-free stacks and fused back onto the phantom grid.

use fetalsim::acquisition::{simulate_case, CaseConfig, MotionLevel, SequenceParams};
use fetalsim::eval::tissue_dice;
use fetalsim::phantom::{generate_phantom, tissue_table, PhantomSpec, TISSUE_DISPLAY};
use fetalsim::srr::fuse_labels;

fn main() -> fetalsim::Result<()> {
    let labels = generate_phantom(&PhantomSpec::default())?;
    for motion in [MotionLevel::None, MotionLevel::Moderate] {
        let case = CaseConfig {
            motion,
            snr_db: Some(None),
            ..Default::default()
        };
        let sim = simulate_case(&labels, &tissue_table(1.5)?, &SequenceParams::default(), &case, 7)?;
        let fused = fuse_labels(&sim.labels, labels.grid())?;
        println!("motion {motion:?}");
        for (name, d) in TISSUE_DISPLAY.iter().zip(tissue_dice(&fused, &labels)?) {
            println!("  {name:<12} {d:.4}");
        }
    }
    Ok(())
}
