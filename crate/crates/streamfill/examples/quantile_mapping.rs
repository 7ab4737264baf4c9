//! Quantile mapping up close: the per-station transfer function learned
//! from paired training samples, and how the two tail policies behave
//! outside the fitted range.

use streamfill::qm::{QmModel, TailPolicy};
use streamfill::series::split_chronological;
use streamfill::synthdata::{generate, BiasShape, SynthConfig};

fn main() -> Result<(), streamfill::Error> {
    // forecast = 2.5·truth^1.3 + 30 + noise — a strictly monotone bias
    let mut cfg = SynthConfig::uniform(1, 365 * 6, 11);
    cfg.bias_shape = BiasShape::Power;
    cfg.bias_exponent = 1.3;
    cfg.bias_gain = vec![2.5];
    cfg.bias_offset = vec![30.0];
    cfg.noise_sd = vec![3.0];
    let (ds, _) = generate(&cfg)?;
    let (train, _) = split_chronological(&ds, 0.6)?;

    let clamp = QmModel::fit(&train, TailPolicy::Clamp)?;
    let extend = QmModel::fit(&train, TailPolicy::LinearExtend)?;
    let pair = clamp.pair("S01").unwrap();
    println!(
        "fitted on {} paired samples; forecast range [{:.1}, {:.1}], obs range [{:.1}, {:.1}]",
        pair.forecast.len(),
        pair.forecast.min(),
        pair.forecast.max(),
        pair.observed.min(),
        pair.observed.max()
    );

    println!("\n{:>10} {:>12} {:>14}", "forecast", "clamp", "linear-extend");
    let lo = pair.forecast.min() - 40.0;
    let hi = pair.forecast.max() + 80.0;
    let mut x = lo;
    while x <= hi {
        println!(
            "{x:>10.1} {:>12.2} {:>14.2}",
            clamp.transfer("S01", x)?,
            extend.transfer("S01", x)?
        );
        x += (hi - lo) / 12.0;
    }
    println!(
        "\nabove the fitted range, clamp pins the output at the training maximum\n\
         while linear-extend continues the last quantile segment."
    );
    Ok(())
}
