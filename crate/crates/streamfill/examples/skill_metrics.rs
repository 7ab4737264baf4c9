//! The three skill scores on hand-picked vectors: what perfect, biased, and
//! mean-predictor simulations look like under KGE, NSE, and RMSE.

use streamfill::metrics::{kge, nse, rmse};

fn show(label: &str, obs: &[f64], sim: &[f64]) {
    let k = kge(obs, sim).map(|v| format!("{v:>8.4}")).unwrap_or_else(|e| format!("{e}"));
    let n = nse(obs, sim).map(|v| format!("{v:>8.4}")).unwrap_or_else(|e| format!("{e}"));
    let r = rmse(obs, sim).map(|v| format!("{v:>8.4}")).unwrap_or_else(|e| format!("{e}"));
    println!("{label:<26} KGE {k}  NSE {n}  RMSE {r}");
}

fn main() {
    let obs = [12.0, 35.0, 80.0, 41.0, 22.0, 18.0, 95.0, 60.0];

    show("perfect", &obs, &obs);

    let mean = obs.iter().sum::<f64>() / obs.len() as f64;
    show("mean predictor", &obs, &vec![mean; obs.len()]);

    let doubled: Vec<f64> = obs.iter().map(|x| 2.0 * x).collect();
    show("doubled (r=1, β=α=2)", &obs, &doubled);
    println!("{:<26} 1 − √2 = {:.4}", "  closed form:", 1.0 - 2f64.sqrt());

    let shifted: Vec<f64> = obs.iter().map(|x| x + 10.0).collect();
    show("shifted +10", &obs, &shifted);

    let noisy: Vec<f64> = obs
        .iter()
        .enumerate()
        .map(|(i, x)| x + if i % 2 == 0 { 5.0 } else { -5.0 })
        .collect();
    show("±5 alternating error", &obs, &noisy);

    // degenerate cases are errors, not NaNs
    show("constant observations", &[3.0, 3.0, 3.0], &[1.0, 2.0, 3.0]);
}
