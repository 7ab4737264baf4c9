//! The simulated-missingness protocol: seeded, exact-count, MCAR masks over
//! the observed cells, and what "reproducible" means here.

use streamfill::series::{apply_mask, simulate_missingness};
use streamfill::synthdata::{generate, SynthConfig};

fn main() -> Result<(), streamfill::Error> {
    let (ds, _) = generate(&SynthConfig::uniform(4, 500, 1))?;
    let sm = ds.observed();
    let eligible = sm.observed_count();
    println!("eligible observed cells: {eligible}");

    // exact floor counts at the standard rates
    for rate in [0.05, 0.1, 0.2, 0.3, 0.5] {
        let mask = simulate_missingness(sm, rate, 7)?;
        println!(
            "rate {:>4}: hides {:>4} cells (floor({rate} × {eligible}) = {})",
            rate,
            mask.len(),
            (rate * eligible as f64).floor() as usize
        );
    }

    // same seed → identical mask; different seed → different mask
    let a = simulate_missingness(sm, 0.2, 7)?;
    let b = simulate_missingness(sm, 0.2, 7)?;
    let c = simulate_missingness(sm, 0.2, 8)?;
    println!("\nseed 7 twice identical: {}", a == b);
    let overlap = a.cells().iter().filter(|cell| c.contains(cell.0, cell.1)).count();
    println!("seed 7 vs seed 8 overlap: {overlap}/{} cells", a.len());

    // masks record cells; applying one produces the degraded matrix
    let degraded = apply_mask(sm, &a)?;
    println!(
        "\nafter applying the mask: {} observed cells (was {eligible}); source unchanged: {}",
        degraded.observed_count(),
        sm.observed_count() == eligible
    );
    Ok(())
}
