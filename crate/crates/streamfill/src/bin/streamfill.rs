//! Thin command-line front end over the streamfill library.
//!
//! Subcommands: `synth`, `evaluate`, `impute`, `report`. Exit code 0 on
//! success; on failure one machine-readable line goes to stderr:
//! `streamfill-error kind=<Kind> msg="<message>"`.

use std::collections::HashMap;
use std::path::PathBuf;
use std::process::ExitCode;

use streamfill::csvio::{load_series_csv, write_series_csv};
use streamfill::error::Error;
use streamfill::experiment::{impute_once, run_experiment};
use streamfill::plan::{ExperimentPlan, MethodName};
use streamfill::report::{emit_report, emit_summary_from_results, parse_results_csv};
use streamfill::series::align;
use streamfill::synthdata::generate;

const USAGE: &str = "\
streamfill — gap-fill daily streamflow records by bias-correcting a forecast series

USAGE:
  streamfill synth    --config <plan.toml> --out <dir> [--seed <n>]
  streamfill evaluate --insitu <csv> --forecast <csv> --plan <plan.toml> --out <dir> [--seed <n>]
  streamfill impute   --method <name> --insitu <csv> --forecast <csv> --out <csv> [--seed <n>]
  streamfill report   --results <csv> --out <dir>

Methods: gess-lookup, qm, enet, gp, knn, rf.
The plan file is TOML; every key has a default, see the README for the schema.
STREAMFILL_THREADS caps worker threads (0 or unset = auto).
";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() || args[0] == "--help" || args[0] == "-h" || args[0] == "help" {
        print!("{USAGE}");
        return if args.is_empty() { ExitCode::from(2) } else { ExitCode::SUCCESS };
    }
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("streamfill-error kind={} msg={:?}", e.kind(), e.to_string());
            ExitCode::FAILURE
        }
    }
}

fn run(args: &[String]) -> Result<(), Error> {
    let cmd = args[0].as_str();
    let flags = parse_flags(&args[1..])?;
    match cmd {
        "synth" => synth(&flags),
        "evaluate" => evaluate(&flags),
        "impute" => impute(&flags),
        "report" => report(&flags),
        other => Err(Error::InvalidPlan(format!("unknown subcommand {other:?}; try --help"))),
    }
}

fn parse_flags(args: &[String]) -> Result<HashMap<String, String>, Error> {
    let mut flags = HashMap::new();
    let mut i = 0;
    while i < args.len() {
        let key = args[i]
            .strip_prefix("--")
            .ok_or_else(|| Error::InvalidPlan(format!("expected --flag, got {:?}", args[i])))?;
        let value = args
            .get(i + 1)
            .ok_or_else(|| Error::InvalidPlan(format!("--{key} needs a value")))?;
        flags.insert(key.to_string(), value.clone());
        i += 2;
    }
    Ok(flags)
}

fn required<'a>(flags: &'a HashMap<String, String>, key: &str) -> Result<&'a str, Error> {
    flags
        .get(key)
        .map(|s| s.as_str())
        .ok_or_else(|| Error::InvalidPlan(format!("missing required flag --{key}")))
}

fn load_plan(flags: &HashMap<String, String>, key: &str) -> Result<ExperimentPlan, Error> {
    let mut plan = match flags.get(key) {
        Some(path) => ExperimentPlan::load(path)?,
        None => ExperimentPlan::default(),
    };
    if let Some(seed) = flags.get("seed") {
        plan.seed = seed
            .parse()
            .map_err(|_| Error::InvalidPlan(format!("--seed must be an integer, got {seed:?}")))?;
    }
    Ok(plan)
}

/// Generate synthetic insitu/forecast CSVs from the plan's `[synth]` section.
fn synth(flags: &HashMap<String, String>) -> Result<(), Error> {
    let plan = load_plan(flags, "config")?;
    let out_dir = PathBuf::from(required(flags, "out")?);
    let synth = plan.synth.clone().unwrap_or_default();
    let cfg = synth.to_config(plan.seed)?;
    let (ds, biases) = generate(&cfg)?;
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::Io(e.to_string()))?;
    write_series_csv(ds.observed(), out_dir.join("insitu.csv"))?;
    write_series_csv(ds.forecast(), out_dir.join("forecast.csv"))?;
    let bias_json = serde_json::to_string_pretty(&biases).expect("bias parameters serialize");
    std::fs::write(out_dir.join("bias_params.json"), bias_json)
        .map_err(|e| Error::Io(e.to_string()))?;
    println!(
        "wrote {} days × {} stations to {}",
        ds.n_dates(),
        ds.n_stations(),
        out_dir.display()
    );
    Ok(())
}

/// Run the benchmark grid and emit the full artifact set.
fn evaluate(flags: &HashMap<String, String>) -> Result<(), Error> {
    let plan = load_plan(flags, "plan")?;
    let insitu_path = required(flags, "insitu")?;
    let forecast_path = required(flags, "forecast")?;
    let observed = load_series_csv(insitu_path)?;
    let forecast = load_series_csv(forecast_path)?;
    let out_dir = required(flags, "out")?;
    let hash_of = |path: &str| -> Result<String, Error> {
        Ok(streamfill::report::fnv1a_hex(
            &std::fs::read(path).map_err(|e| Error::Io(format!("{path}: {e}")))?,
        ))
    };
    let inputs = vec![
        (format!("insitu:{insitu_path}"), hash_of(insitu_path)?),
        (format!("forecast:{forecast_path}"), hash_of(forecast_path)?),
    ];
    let ds = align(&observed, &forecast)?;
    let output = run_experiment(&ds, &plan)?;
    let artifacts = emit_report(&output, &plan, &inputs, out_dir)?;
    for (method, err) in &output.failed_fits {
        eprintln!("warning: {method} fit failed: {err}");
    }
    println!(
        "{} records ({} skipped) → {}",
        output.report.records.len(),
        output.report.skipped.len(),
        artifacts.out_dir.display()
    );
    Ok(())
}

/// Fill the gaps of one series with one method and write the completed CSV.
fn impute(flags: &HashMap<String, String>) -> Result<(), Error> {
    let method: MethodName = required(flags, "method")?.parse()?;
    let plan = load_plan(flags, "plan")?;
    let observed = load_series_csv(required(flags, "insitu")?)?;
    let forecast = load_series_csv(required(flags, "forecast")?)?;
    let out = PathBuf::from(required(flags, "out")?);
    let ds = align(&observed, &forecast)?;
    let before = ds.observed().observed_count();
    let filled = impute_once(&ds, method, &plan)?;
    write_series_csv(&filled, &out)?;
    println!(
        "filled {} of {} cells with {method} → {}",
        filled.observed_count() - before,
        ds.n_dates() * ds.n_stations(),
        out.display()
    );
    Ok(())
}

/// Rebuild summary tables and rate curves from an existing results.csv.
fn report(flags: &HashMap<String, String>) -> Result<(), Error> {
    let results_path = required(flags, "results")?;
    let out_dir = required(flags, "out")?;
    let text = std::fs::read_to_string(results_path)
        .map_err(|e| Error::Io(format!("{results_path}: {e}")))?;
    let parsed = parse_results_csv(&text)?;
    let report_rate = flags
        .get("rate")
        .map(|r| r.parse::<f64>().map_err(|_| Error::InvalidPlan(format!("bad --rate {r:?}"))))
        .transpose()?
        .unwrap_or(0.2);
    let artifacts = emit_summary_from_results(&parsed, report_rate, out_dir)?;
    println!("summary → {}", artifacts.summary_md.display());
    Ok(())
}
