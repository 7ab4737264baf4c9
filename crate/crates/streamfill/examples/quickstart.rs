//! Smallest end-to-end run: generate a synthetic station network, hide part
//! of the test period, fill the gaps by quantile mapping, and score the
//! result at the hidden cells.

use streamfill::metrics::{score_imputation, Grouping, StationScore};
use streamfill::qm::{QmModel, TailPolicy};
use streamfill::series::{apply_mask, simulate_missingness, split_chronological};
use streamfill::synthdata::{generate, SynthConfig};

fn main() -> Result<(), streamfill::Error> {
    // five stations, four years of daily data, forecast = 3·truth + 20 + noise
    let cfg = SynthConfig::uniform(5, 365 * 4, 42);
    let (ds, _) = generate(&cfg)?;
    println!("dataset: {} days × {} stations", ds.n_dates(), ds.n_stations());

    // 60/40 chronological split, then hide 20% of the test observations
    let (train, test) = split_chronological(&ds, 0.6)?;
    let mask = simulate_missingness(test.observed(), 0.2, 7)?;
    let degraded = test.with_observed(apply_mask(test.observed(), &mask)?)?;
    println!("hidden cells: {}", mask.len());

    // fit on the training period, fill the gaps in the degraded test period
    let model = QmModel::fit(&train, TailPolicy::Clamp)?;
    let filled = model.impute(&degraded)?;

    // score against the truth at the hidden cells only
    println!("\n{:<8} {:>8} {:>8} {:>8}", "station", "KGE", "NSE", "RMSE");
    for score in score_imputation(test.observed(), &filled, &mask, Grouping::PerStation)? {
        match score {
            StationScore::Scored { station, scores } => {
                println!(
                    "{station:<8} {:>8.3} {:>8.3} {:>8.3}",
                    scores.kge, scores.nse, scores.rmse
                );
            }
            StationScore::Skipped { station, reason } => {
                println!("{station:<8} skipped: {reason}");
            }
        }
    }
    Ok(())
}
