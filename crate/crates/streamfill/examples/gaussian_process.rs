//! Exact GP inference on a small problem: hyperparameters from marginal
//! likelihood ascent, then posterior means with calibrated uncertainty that
//! grows away from the data.

use streamfill::gp::{GpFitOptions, GpRegressor};
use streamfill::rng::Rng;

fn main() -> Result<(), streamfill::Error> {
    // noisy observations of a smooth function on [0, 10]
    let mut rng = Rng::with_seed(5);
    let truth = |x: f64| 3.0 * (0.8 * x).sin() + 0.4 * x;
    let inputs: Vec<Vec<f64>> = (0..60).map(|_| vec![rng.uniform(0.0, 10.0)]).collect();
    let targets: Vec<Vec<f64>> =
        inputs.iter().map(|x| vec![truth(x[0]) + 0.3 * rng.normal()]).collect();

    let model = GpRegressor::fit(
        inputs,
        &targets,
        GpFitOptions { restarts: 3, seed: 1, ..Default::default() },
    )?;
    let h = model.hyperparams();
    println!(
        "fitted hyperparameters: lengthscale {:.3}, signal variance {:.3}, noise variance {:.4}",
        h.lengthscale, h.signal_variance, h.noise_variance
    );
    println!(
        "log-marginal likelihood {:.2} (restarts reached {:?})",
        model.diagnostics().final_lml,
        model
            .diagnostics()
            .restart_lml
            .iter()
            .map(|v| format!("{v:.1}"))
            .collect::<Vec<_>>()
    );

    println!("\n{:>6} {:>9} {:>9} {:>8}", "x", "truth", "mean", "sd");
    for i in 0..=14 {
        // probe past the data so the prior reversion is visible
        let x = i as f64;
        let p = model.predict(&[x])?;
        println!(
            "{x:>6.1} {:>9.3} {:>9.3} {:>8.3}{}",
            truth(x),
            p.means[0],
            p.variances[0].sqrt(),
            if x > 10.0 { "   ← outside the data" } else { "" }
        );
    }
    Ok(())
}
