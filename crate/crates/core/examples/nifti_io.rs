//! Writes a volume with an oblique affine, reads it back and prints the
//! header geometry; with a path argument, describes that file instead (as labels when
//! the name contains `labels`).

use fetalsim::volume::{load_intensity, load_volume, save_volume, AnyVolume, Grid, IntensityVolume, VolumeKind};

fn describe(g: &Grid) {
    println!("dims {:?}, spacing {:?}", g.dims(), g.spacing());
    for row in g.affine() {
        println!("  [{:9.4} {:9.4} {:9.4} {:9.4}]", row[0], row[1], row[2], row[3]);
    }
}

fn main() -> fetalsim::Result<()> {
    if let Some(path) = std::env::args().nth(1) {
        let kind = if path.contains("labels") { VolumeKind::Label } else { VolumeKind::Intensity };
        match load_volume(&path, kind)? {
            AnyVolume::Label(v) => {
                describe(v.grid());
                println!("labels present: {:?}", v.label_set());
            }
            AnyVolume::Intensity(v) => {
                describe(v.grid());
                println!("range {:?}", v.min_max());
            }
        }
        return Ok(());
    }
    let (c, s) = (30f64.to_radians().cos(), 30f64.to_radians().sin());
    let affine = [
        [0.8 * c, -1.1 * s, 0.0, 10.0],
        [0.8 * s, 1.1 * c, 0.0, -4.0],
        [0.0, 0.0, 3.0, 2.5],
        [0.0, 0.0, 0.0, 1.0],
    ];
    let grid = Grid::new([20, 16, 6], [0.8, 1.1, 3.0], affine)?;
    let vol = IntensityVolume::from_fn(grid, |[i, j, k]| (i + 10 * j + 100 * k) as f32)?;
    let path = std::env::temp_dir().join("fetalsim_example.nii.gz");
    save_volume(&vol, &path)?;
    let back = load_intensity(&path)?;
    describe(back.grid());
    println!("voxels identical: {}", back.data() == vol.data());
    Ok(())
}
