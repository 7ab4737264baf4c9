//! The whole pipeline in one run: all six methods over the standard rate
//! grid with paired masks, then the full artifact set — results.csv,
//! summary.md, model dumps, manifest, and SVG plots — under
//! `target/benchmark-run/`.
//!
//! Takes a couple of minutes; shrink the grid or the GP budget to go faster.

use streamfill::experiment::run_experiment;
use streamfill::plan::ExperimentPlan;
use streamfill::report::emit_report;
use streamfill::synthdata::{generate, SynthConfig};

fn main() -> Result<(), streamfill::Error> {
    let n = 8;
    let mut cfg = SynthConfig::uniform(n, 365 * 10, 404);
    cfg.cross_corr = 0.6;
    cfg.noise_sd = vec![8.0; n];
    let (ds, _) = generate(&cfg)?;
    println!("dataset: {} days × {} stations", ds.n_dates(), ds.n_stations());

    let mut plan = ExperimentPlan::default();
    plan.seeds = vec![1, 2];
    plan.gp.budget = 400; // keep exact inference quick for a demo
    plan.gp.restarts = 2;
    plan.rf.n_trees = 50;

    let started = std::time::Instant::now();
    let output = run_experiment(&ds, &plan)?;
    println!(
        "{} records, {} skipped, in {:.1?}",
        output.report.records.len(),
        output.report.skipped.len(),
        started.elapsed()
    );
    for (method, err) in &output.failed_fits {
        println!("fit failed for {method}: {err}");
    }

    println!("\nmean KGE by method and rate:");
    print!("{:>12}", "");
    for r in &plan.rates {
        print!("{:>8}%", r * 100.0);
    }
    println!();
    for m in &plan.methods {
        print!("{:>12}", m.to_string());
        for &r in &plan.rates {
            match output.report.mean_for(m.as_str(), r) {
                Some(t) => print!("{:>9.3}", t.kge),
                None => print!("{:>9}", "–"),
            }
        }
        println!();
    }

    let artifacts = emit_report(&output, &plan, &[], "target/benchmark-run")?;
    println!("\nartifacts:");
    println!("  {}", artifacts.results_csv.display());
    println!("  {}", artifacts.summary_md.display());
    for p in artifacts.model_files.iter().chain(artifacts.plot_files.iter().take(3)) {
        println!("  {}", p.display());
    }
    println!("  … and {} more plots", artifacts.plot_files.len().saturating_sub(3));
    Ok(())
}
