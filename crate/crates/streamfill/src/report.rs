//! Run artifact emission: results.csv, summary.md, model dumps, the run
//! manifest, and SVG plots.
//!
//! Float cells in results.csv are rounded to six significant digits and
//! printed with Rust's shortest round-trip formatting (`.` decimal
//! separator, no locale), so identical runs produce byte-identical files.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiment::{InfillSnapshot, RunOutput};
use crate::metrics::{MetricRecord, MetricsReport, ScoreTriple};
use crate::plan::ExperimentPlan;
use crate::svg;

/// FNV-1a 64-bit hash as fixed-width hex; used for config and input hashes
/// in run manifests.
pub fn fnv1a_hex(bytes: &[u8]) -> String {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    format!("{h:016x}")
}

/// Round to `digits` significant digits and render shortest-round-trip.
pub fn format_sig(x: f64, digits: i32) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    let factor = 10f64.powi(digits - 1 - mag);
    let rounded = (x * factor).round() / factor;
    format!("{rounded}")
}

/// The results.csv header, fixed.
pub const RESULTS_HEADER: &str = "method,rate,seed,station,kge,nse,rmse";

/// Render the per-record results table.
pub fn results_to_csv(report: &MetricsReport) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in &report.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.method,
            format_sig(r.rate, 6),
            r.seed,
            r.station,
            format_sig(r.scores.kge, 6),
            format_sig(r.scores.nse, 6),
            format_sig(r.scores.rmse, 6),
        ));
    }
    out
}

/// Parse a results table back into records (the `report` subcommand's
/// input).
pub fn parse_results_csv(text: &str) -> Result<MetricsReport> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == RESULTS_HEADER => {}
        Some((_, h)) => {
            return Err(Error::ParseError {
                line: 1,
                column: 1,
                reason: format!("expected header {RESULTS_HEADER:?}, got {h:?}"),
            })
        }
        None => {
            return Err(Error::ParseError { line: 1, column: 1, reason: "empty file".into() })
        }
    }
    let mut report = MetricsReport::default();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::ParseError {
                line: line_no,
                column: fields.len(),
                reason: format!("expected 7 fields, got {}", fields.len()),
            });
        }
        let num = |col: usize| -> Result<f64> {
            fields[col].parse().map_err(|_| Error::ParseError {
                line: line_no,
                column: col + 1,
                reason: format!("invalid number {:?}", fields[col]),
            })
        };
        report.records.push(MetricRecord {
            method: fields[0].to_string(),
            rate: num(1)?,
            seed: fields[2].parse().map_err(|_| Error::ParseError {
                line: line_no,
                column: 3,
                reason: format!("invalid seed {:?}", fields[2]),
            })?,
            station: fields[3].to_string(),
            scores: ScoreTriple { kge: num(4)?, nse: num(5)?, rmse: num(6)? },
        });
    }
    Ok(report)
}

fn rates_in_order(report: &MetricsReport) -> Vec<f64> {
    let mut rates = Vec::new();
    for r in &report.records {
        if !rates.contains(&r.rate) {
            rates.push(r.rate);
        }
    }
    rates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    rates
}

fn methods_in_order(report: &MetricsReport) -> Vec<String> {
    let mut methods = Vec::new();
    for r in &report.records {
        if !methods.contains(&r.method) {
            methods.push(r.method.clone());
        }
    }
    methods
}

fn stations_in_order(report: &MetricsReport) -> Vec<String> {
    let mut stations = Vec::new();
    for r in &report.records {
        if !stations.contains(&r.station) {
            stations.push(r.station.clone());
        }
    }
    stations
}

/// Render summary.md: mean metrics by method × rate, plus per-station KGE
/// at the report rate.
pub fn summary_markdown(report: &MetricsReport, report_rate: f64, header_note: &str) -> String {
    let rates = rates_in_order(report);
    let methods = methods_in_order(report);
    let stations = stations_in_order(report);
    let mut md = String::from("# Imputation benchmark summary\n\n");
    if !header_note.is_empty() {
        md.push_str(header_note);
        md.push('\n');
    }
    md.push_str(&format!(
        "\n{} scored records, {} skipped entries.\n",
        report.records.len(),
        report.skipped.len()
    ));

    for (label, pick) in [
        ("Mean KGE", 0usize),
        ("Mean NSE", 1),
        ("Mean RMSE", 2),
    ] {
        md.push_str(&format!("\n## {label} by method and missingness rate\n\n"));
        md.push_str("| method |");
        for r in &rates {
            md.push_str(&format!(" {}% |", format_sig(r * 100.0, 6)));
        }
        md.push('\n');
        md.push_str("|---|");
        md.push_str(&"---|".repeat(rates.len()));
        md.push('\n');
        for m in &methods {
            md.push_str(&format!("| {m} |"));
            for &r in &rates {
                match report.mean_for(m, r) {
                    Some(t) => {
                        let v = match pick {
                            0 => t.kge,
                            1 => t.nse,
                            _ => t.rmse,
                        };
                        md.push_str(&format!(" {} |", format_sig(v, 6)));
                    }
                    None => md.push_str(" – |"),
                }
            }
            md.push('\n');
        }
    }

    md.push_str(&format!(
        "\n## Per-station KGE at {}% missingness\n\n",
        format_sig(report_rate * 100.0, 6)
    ));
    md.push_str("| method |");
    for s in &stations {
        md.push_str(&format!(" {s} |"));
    }
    md.push('\n');
    md.push_str("|---|");
    md.push_str(&"---|".repeat(stations.len()));
    md.push('\n');
    for m in &methods {
        md.push_str(&format!("| {m} |"));
        for s in &stations {
            let vals: Vec<f64> = report
                .records
                .iter()
                .filter(|r| &r.method == m && r.rate == report_rate && &r.station == s)
                .map(|r| r.scores.kge)
                .collect();
            if vals.is_empty() {
                md.push_str(" – |");
            } else {
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                md.push_str(&format!(" {} |", format_sig(mean, 6)));
            }
        }
        md.push('\n');
    }

    if !report.skipped.is_empty() {
        md.push_str("\n## Skipped entries\n\n");
        md.push_str("| method | rate | seed | station | reason |\n|---|---|---|---|---|\n");
        for s in &report.skipped {
            md.push_str(&format!(
                "| {} | {} | {} | {} | {} |\n",
                s.method,
                format_sig(s.rate, 6),
                s.seed,
                s.station,
                s.reason
            ));
        }
    }
    md
}

/// Skill-vs-rate curves, one chart per metric.
fn rate_curve_charts(report: &MetricsReport) -> Vec<(String, String)> {
    let rates = rates_in_order(report);
    let methods = methods_in_order(report);
    let mut files = Vec::new();
    for (metric, label) in [("kge", "Mean KGE"), ("nse", "Mean NSE"), ("rmse", "Mean RMSE")] {
        let series: Vec<svg::Series> = methods
            .iter()
            .map(|m| svg::Series {
                name: m.clone(),
                points: rates
                    .iter()
                    .map(|&r| {
                        let y = report.mean_for(m, r).map(|t| match metric {
                            "kge" => t.kge,
                            "nse" => t.nse,
                            _ => t.rmse,
                        });
                        (r * 100.0, y)
                    })
                    .collect(),
                color: None,
            })
            .collect();
        let chart = svg::line_chart(
            &format!("{label} vs missingness rate"),
            "missing data (%)",
            label,
            &series,
            None,
        );
        files.push((format!("{metric}_vs_rate.svg"), chart));
    }
    files
}

/// Per-station infill overlays for the snapshot window.
fn infill_charts(snapshot: &InfillSnapshot) -> Vec<(String, String)> {
    let mut files = Vec::new();
    for (s, station) in snapshot.stations.iter().enumerate() {
        let mut series = vec![svg::Series {
            name: "observed".into(),
            points: snapshot.truth[s]
                .iter()
                .enumerate()
                .map(|(t, v)| (t as f64, *v))
                .collect(),
            color: Some(7),
        }];
        for (i, (name, per_station)) in snapshot.methods.iter().enumerate() {
            series.push(svg::Series {
                name: name.to_string(),
                points: per_station[s]
                    .iter()
                    .enumerate()
                    .map(|(t, v)| (t as f64, *v))
                    .collect(),
                color: Some(i),
            });
        }
        let markers = svg::Markers {
            name: "hidden cells".into(),
            points: snapshot
                .masked
                .iter()
                .filter(|&&(_, ms)| ms == s)
                .filter_map(|&(t, _)| snapshot.truth[s][t].map(|v| (t as f64, v)))
                .collect(),
        };
        let chart = svg::line_chart(
            &format!(
                "Station {station}: infilled series at {}% missingness (from {})",
                format_sig(snapshot.rate * 100.0, 6),
                snapshot.dates.first().map(|d| d.to_string()).unwrap_or_default()
            ),
            "days into test window",
            "discharge (m³/s)",
            &series,
            Some(&markers),
        );
        files.push((format!("infill_{station}.svg"), chart));
    }
    files
}

/// Paths written by an emission.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub results_csv: PathBuf,
    pub summary_md: PathBuf,
    pub manifest_json: Option<PathBuf>,
    pub model_files: Vec<PathBuf>,
    pub plot_files: Vec<PathBuf>,
}

fn write(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Emit the full artifact set for a run: results, summary, manifest, model
/// dumps, and plots. Re-running into the same directory overwrites
/// deterministically.
///
/// `inputs` lists (label, content hash) pairs for the source files so the
/// manifest pins exactly what was evaluated; pass an empty slice when the
/// data never touched disk.
pub fn emit_report(
    output: &RunOutput,
    plan: &ExperimentPlan,
    inputs: &[(String, String)],
    out_dir: impl AsRef<Path>,
) -> Result<RunArtifacts> {
    let out_dir = out_dir.as_ref().to_path_buf();
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::Io(format!("{}: {e}", out_dir.display())))?;
    let models_dir = out_dir.join("models");
    let plots_dir = out_dir.join("plots");
    std::fs::create_dir_all(&models_dir).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::create_dir_all(&plots_dir).map_err(|e| Error::Io(e.to_string()))?;

    let results_csv = out_dir.join("results.csv");
    write(&results_csv, &results_to_csv(&output.report))?;

    let note = format!(
        "- config hash: `{}`\n- seeds: {:?}\n- methods: {}\n",
        plan.config_hash(),
        plan.seeds,
        plan.methods.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(", "),
    );
    let summary_md = out_dir.join("summary.md");
    write(&summary_md, &summary_markdown(&output.report, plan.report_rate, &note))?;

    let mut model_files = Vec::new();
    for (name, json) in &output.model_dumps {
        let path = models_dir.join(name);
        write(&path, json)?;
        model_files.push(path);
    }

    let mut plot_files = Vec::new();
    for (name, chart) in rate_curve_charts(&output.report) {
        let path = plots_dir.join(name);
        write(&path, &chart)?;
        plot_files.push(path);
    }
    if let Some(snapshot) = &output.infill {
        for (name, chart) in infill_charts(snapshot) {
            let path = plots_dir.join(name);
            write(&path, &chart)?;
            plot_files.push(path);
        }
    }

    #[derive(Serialize)]
    struct Manifest<'a> {
        tool: &'static str,
        version: &'static str,
        config_hash: String,
        inputs: &'a [(String, String)],
        seeds: &'a [u64],
        rates: &'a [f64],
        methods: Vec<String>,
        n_records: usize,
        n_skipped: usize,
        failed_fits: Vec<(String, String)>,
        plan_toml: String,
    }
    let manifest = Manifest {
        tool: "streamfill",
        version: env!("CARGO_PKG_VERSION"),
        config_hash: plan.config_hash(),
        inputs,
        seeds: &plan.seeds,
        rates: &plan.rates,
        methods: plan.methods.iter().map(|m| m.to_string()).collect(),
        n_records: output.report.records.len(),
        n_skipped: output.report.skipped.len(),
        failed_fits: output
            .failed_fits
            .iter()
            .map(|(m, e)| (m.to_string(), e.clone()))
            .collect(),
        plan_toml: plan.to_toml_string(),
    };
    let manifest_json = out_dir.join("manifest.json");
    write(&manifest_json, &serde_json::to_string_pretty(&manifest).expect("manifest serializes"))?;

    Ok(RunArtifacts {
        out_dir,
        results_csv,
        summary_md,
        manifest_json: Some(manifest_json),
        model_files,
        plot_files,
    })
}

/// Emit summary and rate curves from an existing results table (the
/// `report` subcommand).
pub fn emit_summary_from_results(
    report: &MetricsReport,
    report_rate: f64,
    out_dir: impl AsRef<Path>,
) -> Result<RunArtifacts> {
    let out_dir = out_dir.as_ref().to_path_buf();
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::Io(format!("{}: {e}", out_dir.display())))?;
    let plots_dir = out_dir.join("plots");
    std::fs::create_dir_all(&plots_dir).map_err(|e| Error::Io(e.to_string()))?;
    let summary_md = out_dir.join("summary.md");
    write(&summary_md, &summary_markdown(report, report_rate, ""))?;
    let mut plot_files = Vec::new();
    for (name, chart) in rate_curve_charts(report) {
        let path = plots_dir.join(name);
        write(&path, &chart)?;
        plot_files.push(path);
    }
    Ok(RunArtifacts {
        results_csv: out_dir.join("results.csv"),
        summary_md,
        manifest_json: None,
        model_files: Vec::new(),
        plot_files,
        out_dir,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{MetricRecord, ScoreTriple};

    fn sample_report() -> MetricsReport {
        let mut report = MetricsReport::default();
        for (method, rate, seed, station, kge) in [
            ("qm", 0.1, 1u64, "A", 0.95),
            ("qm", 0.1, 1, "B", 0.90),
            ("qm", 0.2, 1, "A", 0.85),
            ("gess-lookup", 0.1, 1, "A", -0.414214),
            ("gess-lookup", 0.2, 1, "A", -0.6),
        ] {
            report.records.push(MetricRecord {
                method: method.into(),
                rate,
                seed,
                station: station.into(),
                scores: ScoreTriple { kge, nse: kge - 0.1, rmse: 10.0 * (1.0 - kge) },
            });
        }
        report
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_sig(0.8382714999, 6), "0.838271");
        assert_eq!(format_sig(-0.41421356, 6), "-0.414214");
        assert_eq!(format_sig(123456789.0, 6), "123457000");
        assert_eq!(format_sig(0.05, 6), "0.05");
        assert_eq!(format_sig(0.0, 6), "0");
        assert_eq!(format_sig(59.559, 6), "59.559");
        assert_eq!(format_sig(1e-7, 6), "0.0000001");
    }

    #[test]
    fn results_round_trip() {
        let report = sample_report();
        let text = results_to_csv(&report);
        assert!(text.starts_with(RESULTS_HEADER));
        let back = parse_results_csv(&text).unwrap();
        assert_eq!(back.records.len(), report.records.len());
        for (a, b) in back.records.iter().zip(&report.records) {
            assert_eq!(a.method, b.method);
            assert_eq!(a.station, b.station);
            assert_eq!(a.seed, b.seed);
            assert!((a.scores.kge - b.scores.kge).abs() < 1e-6);
        }
        // emission is deterministic
        assert_eq!(text, results_to_csv(&report));
    }

    #[test]
    fn parse_rejects_wrong_header() {
        assert!(parse_results_csv("method,rate\nqm,0.1\n").is_err());
    }

    #[test]
    fn summary_tables_match_recomputed_means(){
        let report = sample_report();
        let md = summary_markdown(&report, 0.1, "");
        // qm at 10%: mean KGE over A and B = 0.925
        assert!(md.contains("0.925"), "summary:\n{md}");
        // per-station table at 10%
        assert!(md.contains("| qm | 0.95 | 0.9 |"), "summary:\n{md}");
        assert!(md.contains("gess-lookup"));
    }
}
