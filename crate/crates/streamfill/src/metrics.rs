//! Hydrological skill scores — KGE, NSE, RMSE — and their aggregation over
//! evaluation cells.
//!
//! Conventions, fixed once for the whole crate:
//!
//! * KGE uses the squared correlation term, `1 − sqrt((r−1)² + (β−1)² +
//!   (α−1)²)` with β the mean ratio and α the standard-deviation ratio
//!   (simulated over observed). All three metrics use the population
//!   standard deviation (divisor n).
//! * Scores are computed at the hidden evaluation cells only, never over the
//!   full series — copying the surviving observations would otherwise count
//!   as skill.

use crate::error::{Error, Result};
use crate::series::{MissingnessMask, SeriesMatrix};

/// One method's KGE / NSE / RMSE on a set of evaluation cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreTriple {
    /// Kling-Gupta efficiency, (−∞, 1].
    pub kge: f64,
    /// Nash-Sutcliffe efficiency, (−∞, 1].
    pub nse: f64,
    /// Root mean square error, [0, ∞), in value units.
    pub rmse: f64,
}

fn check_pair(obs: &[f64], sim: &[f64], min_len: usize) -> Result<()> {
    if obs.len() != sim.len() {
        return Err(Error::LengthMismatch { left: obs.len(), right: sim.len() });
    }
    if obs.len() < min_len {
        return Err(Error::TooFewSamples { needed: min_len, got: obs.len() });
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation (divisor n).
fn std_pop(xs: &[f64], m: f64) -> f64 {
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Kling-Gupta efficiency of `sim` against `obs`.
///
/// Decomposes agreement into Pearson correlation, mean-bias ratio, and
/// variability ratio; 1 is perfect. Undefined when either side has zero
/// variance ([`Error::DegenerateVariance`]) or the observed mean is zero
/// ([`Error::DegenerateMean`]).
pub fn kge(obs: &[f64], sim: &[f64]) -> Result<f64> {
    check_pair(obs, sim, 2)?;
    let mo = mean(obs);
    let ms = mean(sim);
    let so = std_pop(obs, mo);
    let ss = std_pop(sim, ms);
    if so == 0.0 || ss == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    if mo == 0.0 {
        return Err(Error::DegenerateMean);
    }
    let cov = obs
        .iter()
        .zip(sim)
        .map(|(&o, &s)| (o - mo) * (s - ms))
        .sum::<f64>()
        / obs.len() as f64;
    let r = cov / (so * ss);
    let beta = ms / mo;
    let alpha = ss / so;
    Ok(1.0 - ((r - 1.0).powi(2) + (beta - 1.0).powi(2) + (alpha - 1.0).powi(2)).sqrt())
}

/// Nash-Sutcliffe efficiency: 1 minus the ratio of error variance to the
/// observed variance. 1 is perfect; 0 matches the observed-mean predictor.
pub fn nse(obs: &[f64], sim: &[f64]) -> Result<f64> {
    check_pair(obs, sim, 2)?;
    let mo = mean(obs);
    let denom = obs.iter().map(|o| (o - mo) * (o - mo)).sum::<f64>();
    if denom == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let num = obs.iter().zip(sim).map(|(&o, &s)| (o - s) * (o - s)).sum::<f64>();
    Ok(1.0 - num / denom)
}

/// Root mean square error. 0 iff the vectors are identical.
pub fn rmse(obs: &[f64], sim: &[f64]) -> Result<f64> {
    check_pair(obs, sim, 1)?;
    let mse = obs.iter().zip(sim).map(|(&o, &s)| (o - s) * (o - s)).sum::<f64>()
        / obs.len() as f64;
    Ok(mse.sqrt())
}

/// All three scores for one obs/sim pair.
pub fn score_pair(obs: &[f64], sim: &[f64]) -> Result<ScoreTriple> {
    Ok(ScoreTriple { kge: kge(obs, sim)?, nse: nse(obs, sim)?, rmse: rmse(obs, sim)? })
}

/// Why a station was not scored.
#[derive(Debug, Clone, PartialEq)]
pub enum SkipReason {
    /// Fewer than two masked cells at this station.
    TooFewCells(usize),
    /// Zero variance at the evaluation cells.
    DegenerateVariance,
    /// Zero observed mean at the evaluation cells.
    DegenerateMean,
    /// The method could not be fitted for this station.
    FitFailed(String),
}

impl std::fmt::Display for SkipReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SkipReason::TooFewCells(n) => write!(f, "too few masked cells ({n})"),
            SkipReason::DegenerateVariance => write!(f, "degenerate variance at masked cells"),
            SkipReason::DegenerateMean => write!(f, "zero observed mean at masked cells"),
            SkipReason::FitFailed(msg) => write!(f, "fit failed: {msg}"),
        }
    }
}

/// Per-station scoring outcome.
#[derive(Debug, Clone, PartialEq)]
pub enum StationScore {
    Scored { station: String, scores: ScoreTriple },
    Skipped { station: String, reason: SkipReason },
}

impl StationScore {
    pub fn station(&self) -> &str {
        match self {
            StationScore::Scored { station, .. } | StationScore::Skipped { station, .. } => station,
        }
    }

    pub fn scores(&self) -> Option<ScoreTriple> {
        match self {
            StationScore::Scored { scores, .. } => Some(*scores),
            StationScore::Skipped { .. } => None,
        }
    }
}

/// How evaluation cells are grouped for scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    /// One score per station over that station's masked cells (the default:
    /// per-station tables need it).
    PerStation,
    /// One pooled score over every masked cell, reported under station
    /// `"(pooled)"`.
    Pooled,
}

/// Score an imputation against the truth at the masked cells.
///
/// `truth` must be observed and `imputed` must hold a value at every masked
/// cell. Stations with fewer than two masked cells are reported as skipped,
/// as are stations whose evaluation cells make a metric undefined.
pub fn score_imputation(
    truth: &SeriesMatrix,
    imputed: &SeriesMatrix,
    mask: &MissingnessMask,
    grouping: Grouping,
) -> Result<Vec<StationScore>> {
    let n_stations = truth.n_stations();
    let mut per_station: Vec<(Vec<f64>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); n_stations];
    for &(t, s) in mask.cells() {
        if t >= truth.n_dates() || s >= n_stations {
            return Err(Error::IndexOutOfRange { time: t, station: s });
        }
        let o = truth
            .value(t, s)
            .ok_or_else(|| Error::InvalidSeries(format!("truth missing at masked cell ({t}, {s})")))?;
        let y = imputed.value(t, s).ok_or(Error::UnimputedCell { time: t, station: s })?;
        per_station[s].0.push(o);
        per_station[s].1.push(y);
    }

    let groups: Vec<(String, Vec<f64>, Vec<f64>)> = match grouping {
        Grouping::PerStation => per_station
            .into_iter()
            .enumerate()
            .map(|(s, (o, y))| (truth.stations()[s].clone(), o, y))
            .collect(),
        Grouping::Pooled => {
            let mut obs = Vec::new();
            let mut sim = Vec::new();
            for (o, y) in per_station {
                obs.extend(o);
                sim.extend(y);
            }
            vec![("(pooled)".to_string(), obs, sim)]
        }
    };

    let mut out = Vec::with_capacity(groups.len());
    for (station, obs, sim) in groups {
        if obs.len() < 2 {
            out.push(StationScore::Skipped { station, reason: SkipReason::TooFewCells(obs.len()) });
            continue;
        }
        match score_pair(&obs, &sim) {
            Ok(scores) => out.push(StationScore::Scored { station, scores }),
            Err(Error::DegenerateVariance) => {
                out.push(StationScore::Skipped { station, reason: SkipReason::DegenerateVariance })
            }
            Err(Error::DegenerateMean) => {
                out.push(StationScore::Skipped { station, reason: SkipReason::DegenerateMean })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// One scored record of the benchmark grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub method: String,
    pub rate: f64,
    pub seed: u64,
    pub station: String,
    pub scores: ScoreTriple,
}

/// A station that produced no score for one grid cell, and why.
#[derive(Debug, Clone, PartialEq)]
pub struct SkipRecord {
    pub method: String,
    pub rate: f64,
    pub seed: u64,
    pub station: String,
    pub reason: String,
}

/// Mean scores for one (method, rate) cell plus the record count behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub method: String,
    pub rate: f64,
    pub mean: ScoreTriple,
    pub n_records: usize,
}

/// The benchmark output: per-(method, rate, seed, station) records plus
/// skipped entries. Aggregates are always recomputed from the records, so
/// they cannot drift out of sync.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsReport {
    pub records: Vec<MetricRecord>,
    pub skipped: Vec<SkipRecord>,
}

impl MetricsReport {
    /// Unweighted arithmetic means over stations and seeds, one row per
    /// (method, rate) in first-appearance order.
    pub fn aggregates(&self) -> Vec<Aggregate> {
        let mut keys: Vec<(String, f64)> = Vec::new();
        for r in &self.records {
            if !keys.iter().any(|(m, ra)| m == &r.method && ra == &r.rate) {
                keys.push((r.method.clone(), r.rate));
            }
        }
        keys.into_iter()
            .map(|(method, rate)| {
                let triples: Vec<ScoreTriple> = self
                    .records
                    .iter()
                    .filter(|r| r.method == method && r.rate == rate)
                    .map(|r| r.scores)
                    .collect();
                let n = triples.len();
                let nf = n as f64;
                let mean = ScoreTriple {
                    kge: triples.iter().map(|t| t.kge).sum::<f64>() / nf,
                    nse: triples.iter().map(|t| t.nse).sum::<f64>() / nf,
                    rmse: triples.iter().map(|t| t.rmse).sum::<f64>() / nf,
                };
                Aggregate { method, rate, mean, n_records: n }
            })
            .collect()
    }

    /// Mean score for one (method, rate), if any records exist.
    pub fn mean_for(&self, method: &str, rate: f64) -> Option<ScoreTriple> {
        self.aggregates()
            .into_iter()
            .find(|a| a.method == method && a.rate == rate)
            .map(|a| a.mean)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::date::Date;
    use crate::rng::Rng;
    use crate::series::{apply_mask, simulate_missingness};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn perfect_agreement_is_one() {
        let v = [1.0, 2.0, 3.0];
        assert!(close(kge(&v, &v).unwrap(), 1.0, 1e-15));
        assert!(close(nse(&v, &v).unwrap(), 1.0, 1e-15));
        assert_eq!(rmse(&v, &v).unwrap(), 0.0);
    }

    #[test]
    fn kge_doubled_series() {
        // r = 1, β = 2, α = 2 → 1 − √2
        let obs = [1.0, 2.0, 3.0, 4.0];
        let sim = [2.0, 4.0, 6.0, 8.0];
        let expected = 1.0 - 2.0_f64.sqrt();
        assert!(close(kge(&obs, &sim).unwrap(), expected, 1e-12));
    }

    #[test]
    fn kge_degenerate_cases() {
        assert_eq!(kge(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::DegenerateVariance));
        assert_eq!(kge(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]), Err(Error::DegenerateVariance));
        assert_eq!(kge(&[-1.0, 0.0, 1.0], &[0.0, 1.0, 2.0]), Err(Error::DegenerateMean));
        assert_eq!(kge(&[1.0], &[1.0]), Err(Error::TooFewSamples { needed: 2, got: 1 }));
        assert_eq!(kge(&[1.0, 2.0], &[1.0]), Err(Error::LengthMismatch { left: 2, right: 1 }));
    }

    #[test]
    fn kge_affine_scaling_closed_form() {
        // kge(obs, a·obs) = 1 − |a−1|·√2 exactly (r=1, β=α=a)
        let mut rng = Rng::with_seed(21);
        for _ in 0..50 {
            let n = 3 + rng.next_below(40) as usize;
            let obs: Vec<f64> = (0..n).map(|_| 1.0 + 10.0 * rng.next_f64()).collect();
            let a = 0.25 + 3.0 * rng.next_f64();
            let sim: Vec<f64> = obs.iter().map(|&x| a * x).collect();
            if std_pop(&obs, mean(&obs)) == 0.0 {
                continue;
            }
            let expected = 1.0 - ((a - 1.0) * (a - 1.0) * 2.0).sqrt();
            assert!(
                close(kge(&obs, &sim).unwrap(), expected, 1e-9),
                "a={a} kge={} expected={expected}",
                kge(&obs, &sim).unwrap()
            );
        }
    }

    #[test]
    fn nse_mean_predictor_is_zero() {
        let obs = [3.0, 5.0, 7.0, 9.0];
        let m = mean(&obs);
        let sim = [m; 4];
        assert_eq!(nse(&obs, &sim).unwrap(), 0.0);
    }

    #[test]
    fn nse_derived_value() {
        // 1 − 4/2 = −1
        assert!(close(nse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 5.0]).unwrap(), -1.0, 1e-15));
    }

    #[test]
    fn nse_degenerate_obs() {
        assert_eq!(nse(&[2.0, 2.0], &[1.0, 3.0]), Err(Error::DegenerateVariance));
    }

    #[test]
    fn rmse_values() {
        assert!(close(rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), (12.5f64).sqrt(), 1e-12));
        assert!(close(rmse(&[5.0], &[7.0]).unwrap(), 2.0, 1e-15));
    }

    #[test]
    fn nse_bounded_and_rmse_squares_to_mse() {
        let mut rng = Rng::with_seed(37);
        for _ in 0..200 {
            let n = 2 + rng.next_below(30) as usize;
            let obs: Vec<f64> = (0..n).map(|_| rng.normal() * 50.0).collect();
            let sim: Vec<f64> = (0..n).map(|_| rng.normal() * 50.0).collect();
            if let Ok(v) = nse(&obs, &sim) {
                assert!(v <= 1.0);
            }
            let r = rmse(&obs, &sim).unwrap();
            let mse = obs.iter().zip(&sim).map(|(&o, &s)| (o - s) * (o - s)).sum::<f64>()
                / n as f64;
            assert!((r * r - mse).abs() <= 1e-9 * mse.max(1.0));
        }
    }

    #[test]
    fn metrics_are_permutation_invariant() {
        let obs = [1.0, 4.0, 2.0, 8.0, 5.0];
        let sim = [1.5, 3.0, 2.5, 7.0, 6.0];
        // rotate both by 2
        let obs_p = [2.0, 8.0, 5.0, 1.0, 4.0];
        let sim_p = [2.5, 7.0, 6.0, 1.5, 3.0];
        assert!(close(kge(&obs, &sim).unwrap(), kge(&obs_p, &sim_p).unwrap(), 1e-12));
        assert!(close(nse(&obs, &sim).unwrap(), nse(&obs_p, &sim_p).unwrap(), 1e-12));
        assert!(close(rmse(&obs, &sim).unwrap(), rmse(&obs_p, &sim_p).unwrap(), 1e-12));
    }

    fn two_station_truth() -> SeriesMatrix {
        let dates: Vec<Date> = {
            let d0 = Date::parse_iso("2020-01-01").unwrap();
            (0..6).map(|i| d0.add_days(i)).collect()
        };
        let values: Vec<f64> =
            vec![1.0, 10.0, 2.0, 20.0, 3.0, 30.0, 4.0, 40.0, 5.0, 50.0, 6.0, 60.0];
        SeriesMatrix::complete(dates, vec!["A".into(), "B".into()], values).unwrap()
    }

    #[test]
    fn score_imputation_perfect_fill() {
        let truth = two_station_truth();
        let mask = simulate_missingness(&truth, 0.4, 17).unwrap();
        let degraded = apply_mask(&truth, &mask).unwrap();
        let fills: Vec<(usize, usize, f64)> = mask
            .cells()
            .iter()
            .map(|&(t, s)| (t, s, truth.value(t, s).unwrap()))
            .collect();
        let imputed = degraded.with_filled(&fills).unwrap();
        for st in score_imputation(&truth, &imputed, &mask, Grouping::PerStation).unwrap() {
            match st {
                StationScore::Scored { scores, .. } => {
                    assert!(close(scores.kge, 1.0, 1e-12));
                    assert!(close(scores.nse, 1.0, 1e-12));
                    assert_eq!(scores.rmse, 0.0);
                }
                StationScore::Skipped { reason, .. } => {
                    assert!(matches!(reason, SkipReason::TooFewCells(_)));
                }
            }
        }
    }

    #[test]
    fn score_imputation_skips_station_without_cells() {
        let truth = two_station_truth();
        // mask only station 0 cells
        let full = simulate_missingness(&truth, 0.9, 1).unwrap();
        let only_a = full.retain_stations(|s| s == 0);
        let degraded = apply_mask(&truth, &only_a).unwrap();
        let fills: Vec<(usize, usize, f64)> =
            only_a.cells().iter().map(|&(t, s)| (t, s, 0.5)).collect();
        let imputed = degraded.with_filled(&fills).unwrap();
        let scores = score_imputation(&truth, &imputed, &only_a, Grouping::PerStation).unwrap();
        let b = scores.iter().find(|s| s.station() == "B").unwrap();
        assert!(matches!(
            b,
            StationScore::Skipped { reason: SkipReason::TooFewCells(0), .. }
        ));
    }

    #[test]
    fn score_imputation_matches_vector_oracle() {
        let truth = two_station_truth();
        let mask = simulate_missingness(&truth, 0.6, 23).unwrap();
        let degraded = apply_mask(&truth, &mask).unwrap();
        // fill with truth + station-dependent offset
        let fills: Vec<(usize, usize, f64)> = mask
            .cells()
            .iter()
            .map(|&(t, s)| (t, s, truth.value(t, s).unwrap() + if s == 0 { 0.5 } else { -2.0 }))
            .collect();
        let imputed = degraded.with_filled(&fills).unwrap();
        let scores = score_imputation(&truth, &imputed, &mask, Grouping::PerStation).unwrap();
        for (s_idx, score) in scores.iter().enumerate() {
            let obs: Vec<f64> = mask
                .cells()
                .iter()
                .filter(|&&(_, s)| s == s_idx)
                .map(|&(t, s)| truth.value(t, s).unwrap())
                .collect();
            let sim: Vec<f64> = mask
                .cells()
                .iter()
                .filter(|&&(_, s)| s == s_idx)
                .map(|&(t, s)| imputed.value(t, s).unwrap())
                .collect();
            if obs.len() < 2 {
                assert!(score.scores().is_none());
                continue;
            }
            let expected = score_pair(&obs, &sim).unwrap();
            let got = score.scores().unwrap();
            assert!(close(got.kge, expected.kge, 1e-12));
            assert!(close(got.nse, expected.nse, 1e-12));
            assert!(close(got.rmse, expected.rmse, 1e-12));
        }
    }

    #[test]
    fn score_imputation_rejects_unimputed_cell() {
        let truth = two_station_truth();
        let mask = simulate_missingness(&truth, 0.4, 5).unwrap();
        let degraded = apply_mask(&truth, &mask).unwrap();
        let err = score_imputation(&truth, &degraded, &mask, Grouping::PerStation);
        assert!(matches!(err, Err(Error::UnimputedCell { .. })));
    }

    #[test]
    fn aggregates_are_means_of_records() {
        let mut report = MetricsReport::default();
        let triples = [(0.9, 0.8, 1.0), (0.7, 0.6, 3.0), (0.5, 0.4, 5.0)];
        for (i, &(k, n, r)) in triples.iter().enumerate() {
            report.records.push(MetricRecord {
                method: "qm".into(),
                rate: 0.2,
                seed: i as u64,
                station: format!("S{i}"),
                scores: ScoreTriple { kge: k, nse: n, rmse: r },
            });
        }
        let aggs = report.aggregates();
        assert_eq!(aggs.len(), 1);
        let a = &aggs[0];
        assert_eq!(a.n_records, 3);
        assert!(close(a.mean.kge, 0.7, 1e-12));
        assert!(close(a.mean.nse, 0.6, 1e-12));
        assert!(close(a.mean.rmse, 3.0, 1e-12));
    }
}
