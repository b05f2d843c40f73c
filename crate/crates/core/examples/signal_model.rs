//! Tissue contrast of the closed-form spin-echo model at both field
//! strengths, and its dependence on the echo time.

use fetalsim::acquisition::{steady_state_signal, SequenceParams};
use fetalsim::phantom::{tissue_table, TISSUE_DISPLAY};

fn main() -> fetalsim::Result<()> {
    for field in [1.5, 3.0] {
        let table = tissue_table(field)?;
        let seq = SequenceParams {
            field_t: field,
            ..Default::default()
        };
        println!("{field} T, TR {} ms, TE {} ms", seq.tr_ms, seq.te_ms);
        for (c, name) in TISSUE_DISPLAY.iter().enumerate() {
            let s = steady_state_signal(table.get(c as u8 + 1).unwrap(), &seq)?;
            println!("  {name:<12} {s:.4}");
        }
    }
    let table = tissue_table(1.5)?;
    println!("CSF / WM contrast against TE at 1.5 T:");
    for te in [60.0, 90.0, 120.0, 160.0] {
        let seq = SequenceParams {
            te_ms: te,
            ..Default::default()
        };
        let csf = steady_state_signal(table.get(1).unwrap(), &seq)?;
        let wm = steady_state_signal(table.get(3).unwrap(), &seq)?;
        println!("  TE {te:>5} ms: {:.3}", csf / wm);
    }
    Ok(())
}
