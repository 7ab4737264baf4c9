//! Experiment orchestration: fit every method once on the training split,
//! then sweep the (rate, seed) grid, imputing the degraded test split and
//! scoring at the hidden cells.
//!
//! Masks are shared across methods within a grid cell, so method
//! comparisons are paired. Fits and grid cells run concurrently (capped by
//! `STREAMFILL_THREADS`); every random stream is derived from the plan
//! seed, so the output is identical regardless of scheduling.

use crate::baselines::{gess_lookup, ForestImputer, KnnImputer};
use crate::date::Date;
use crate::enet::{cross_validate, cross_validate_univariate, ElasticNetModel, FitOptions};
use crate::error::{Error, Result};
use crate::gp::{GpConfig, GpModel};
use crate::metrics::{
    score_imputation, Grouping, MetricRecord, MetricsReport, SkipRecord, StationScore,
};
use crate::parallel::parallel_map;
use crate::plan::{ExperimentPlan, MethodName};
use crate::qm::QmModel;
use crate::rng::derive_seed;
use crate::series::{
    apply_mask, simulate_missingness_with, split_chronological, AlignedDataset,
};

/// A method fitted on the training split, ready to impute.
pub enum FittedMethod {
    GessLookup,
    Qm(QmModel),
    Enet(Box<ElasticNetModel>),
    Gp(Box<GpModel>),
    Knn(KnnImputer),
    Rf(ForestImputer),
}

impl FittedMethod {
    /// Fit one method. Bias-correction methods see forecast and
    /// observations; the complete-data baselines are handed the observed
    /// matrix only.
    pub fn fit(name: MethodName, train: &AlignedDataset, plan: &ExperimentPlan) -> Result<Self> {
        let method_seed = derive_seed(plan.seed, &[name as u64]);
        match name {
            MethodName::GessLookup => Ok(FittedMethod::GessLookup),
            MethodName::Qm => Ok(FittedMethod::Qm(QmModel::fit(train, plan.qm.tail_policy)?)),
            MethodName::Enet => {
                let rows = train.complete_row_indices();
                if rows.len() < 2 {
                    return Err(Error::NoCompleteRows);
                }
                let x_rows: Vec<Vec<f64>> = rows
                    .iter()
                    .map(|&t| {
                        (0..train.n_stations())
                            .map(|s| train.forecast().value(t, s).unwrap())
                            .collect()
                    })
                    .collect();
                let y_rows: Vec<Vec<f64>> = rows
                    .iter()
                    .map(|&t| {
                        (0..train.n_stations())
                            .map(|s| train.observed().value(t, s).unwrap())
                            .collect()
                    })
                    .collect();
                let spec = plan.enet.cv_spec();
                let chosen = if plan.enet.univariate {
                    cross_validate_univariate(&x_rows, &y_rows, &spec)?
                } else {
                    cross_validate(&x_rows, &y_rows, &spec)?
                };
                let opts = FitOptions {
                    lambda: chosen.lambda,
                    alpha: chosen.alpha,
                    tol: plan.enet.tol,
                    max_iter: plan.enet.max_iter,
                };
                let model = if plan.enet.univariate {
                    ElasticNetModel::fit_univariate(train, opts)?
                } else {
                    ElasticNetModel::fit(train, opts)?
                };
                Ok(FittedMethod::Enet(Box::new(model)))
            }
            MethodName::Gp => {
                let model = GpModel::fit(
                    train,
                    GpConfig {
                        budget: plan.gp.budget,
                        restarts: plan.gp.restarts,
                        seed: method_seed,
                        max_iters: plan.gp.max_iters,
                    },
                )?;
                Ok(FittedMethod::Gp(Box::new(model)))
            }
            MethodName::Knn => {
                Ok(FittedMethod::Knn(KnnImputer::fit(train.observed(), plan.knn.k)?))
            }
            MethodName::Rf => Ok(FittedMethod::Rf(ForestImputer::fit(
                train.observed(),
                plan.rf.forest_config(),
                method_seed,
            )?)),
        }
    }

    /// Impute a degraded dataset. Baselines receive only the observed
    /// matrix; the forecast never reaches them.
    pub fn impute(&self, degraded: &AlignedDataset) -> Result<crate::series::SeriesMatrix> {
        match self {
            FittedMethod::GessLookup => gess_lookup(degraded),
            FittedMethod::Qm(m) => m.impute(degraded),
            FittedMethod::Enet(m) => m.impute(degraded),
            FittedMethod::Gp(m) => m.impute(degraded),
            FittedMethod::Knn(m) => m.impute(degraded.observed()),
            FittedMethod::Rf(m) => m.impute(degraded.observed()),
        }
    }

    /// Station indices this fit cannot fill (only quantile mapping can be
    /// partially fitted).
    fn unfitted_station_indices(&self, stations: &[String]) -> Vec<usize> {
        match self {
            FittedMethod::Qm(m) => (0..stations.len()).filter(|&s| !m.is_fitted(s)).collect(),
            _ => Vec::new(),
        }
    }

    /// Model dump as (filename, JSON), when the method has one.
    pub fn dump(&self) -> Option<(String, String)> {
        match self {
            FittedMethod::Qm(m) => Some(("qm.json".into(), m.to_json())),
            FittedMethod::Enet(m) => Some(("enet.json".into(), m.to_json())),
            FittedMethod::Gp(m) => Some(("gp.json".into(), m.to_json())),
            _ => None,
        }
    }
}

/// Truth, degraded, and per-method infilled series over a window of the
/// test period, kept for plot emission.
#[derive(Debug, Clone)]
pub struct InfillSnapshot {
    pub rate: f64,
    pub seed: u64,
    pub dates: Vec<Date>,
    pub stations: Vec<String>,
    /// `truth[s][t]` over the window (None where the source was missing).
    pub truth: Vec<Vec<Option<f64>>>,
    /// Window-relative hidden cells (t, s).
    pub masked: Vec<(usize, usize)>,
    /// Per method: `series[s][t]` of the infilled matrix over the window.
    pub methods: Vec<(MethodName, Vec<Vec<Option<f64>>>)>,
}

/// Everything a run produces before artifact emission.
pub struct RunOutput {
    pub report: MetricsReport,
    pub infill: Option<InfillSnapshot>,
    /// (filename, JSON) model dumps for the fitted methods.
    pub model_dumps: Vec<(String, String)>,
    /// Methods whose fit failed outright, with the error text.
    pub failed_fits: Vec<(MethodName, String)>,
}

/// Run the full benchmark grid on an aligned dataset.
pub fn run_experiment(ds: &AlignedDataset, plan: &ExperimentPlan) -> Result<RunOutput> {
    plan.validate()?;
    let (train, test) = split_chronological(ds, plan.train_fraction)?;
    let stations = ds.stations().to_vec();

    // one fit per method, reused across the whole grid
    let fits: Vec<(MethodName, Result<FittedMethod>)> =
        parallel_map(plan.methods.clone(), |name| (name, FittedMethod::fit(name, &train, plan)));

    let mut model_dumps = Vec::new();
    let mut failed_fits = Vec::new();
    for (name, fit) in &fits {
        match fit {
            Ok(f) => {
                if let Some(dump) = f.dump() {
                    model_dumps.push(dump);
                }
            }
            Err(e) => failed_fits.push((*name, e.to_string())),
        }
    }

    let plot_rate = if plan.rates.contains(&plan.report_rate) {
        plan.report_rate
    } else {
        plan.rates[0]
    };

    struct CellScores {
        rate: f64,
        seed: u64,
        per_method: Vec<(MethodName, Vec<StationScore>)>,
        snapshot: Option<InfillSnapshot>,
    }

    let cells: Vec<(usize, usize)> = (0..plan.rates.len())
        .flat_map(|ri| (0..plan.seeds.len()).map(move |si| (ri, si)))
        .collect();

    let cell_outputs: Vec<Result<CellScores>> = parallel_map(cells, |(ri, si)| {
        let rate = plan.rates[ri];
        let seed = plan.seeds[si];
        let mask_seed = derive_seed(plan.seed, &[ri as u64, seed]);
        let mask =
            simulate_missingness_with(test.observed(), rate, mask_seed, plan.mask_mechanism())?;
        let degraded = test.with_observed(apply_mask(test.observed(), &mask)?)?;
        let want_snapshot = rate == plot_rate && si == 0;
        let mut snapshot_methods = Vec::new();

        let mut per_method = Vec::with_capacity(fits.len());
        for (name, fit) in &fits {
            let fitted = match fit {
                Ok(f) => f,
                Err(e) => {
                    per_method.push((
                        *name,
                        stations
                            .iter()
                            .map(|st| StationScore::Skipped {
                                station: st.clone(),
                                reason: crate::metrics::SkipReason::FitFailed(e.to_string()),
                            })
                            .collect(),
                    ));
                    continue;
                }
            };
            match fitted.impute(&degraded) {
                Ok(imputed) => {
                    let unfitted = fitted.unfitted_station_indices(&stations);
                    let scoring_mask = if unfitted.is_empty() {
                        mask.clone()
                    } else {
                        mask.retain_stations(|s| !unfitted.contains(&s))
                    };
                    let mut scores = score_imputation(
                        test.observed(),
                        &imputed,
                        &scoring_mask,
                        Grouping::PerStation,
                    )?;
                    for &s in &unfitted {
                        scores[s] = StationScore::Skipped {
                            station: stations[s].clone(),
                            reason: crate::metrics::SkipReason::FitFailed(
                                "station not fitted".into(),
                            ),
                        };
                    }
                    if want_snapshot {
                        let window = plan.plot_window_days.min(test.n_dates());
                        snapshot_methods.push((
                            *name,
                            (0..stations.len())
                                .map(|s| (0..window).map(|t| imputed.value(t, s)).collect())
                                .collect(),
                        ));
                    }
                    per_method.push((*name, scores));
                }
                Err(e) => {
                    per_method.push((
                        *name,
                        stations
                            .iter()
                            .map(|st| StationScore::Skipped {
                                station: st.clone(),
                                reason: crate::metrics::SkipReason::FitFailed(e.to_string()),
                            })
                            .collect(),
                    ));
                }
            }
        }

        let snapshot = if want_snapshot {
            let window = plan.plot_window_days.min(test.n_dates());
            Some(InfillSnapshot {
                rate,
                seed,
                dates: test.dates()[..window].to_vec(),
                stations: stations.clone(),
                truth: (0..stations.len())
                    .map(|s| (0..window).map(|t| test.observed().value(t, s)).collect())
                    .collect(),
                masked: mask.cells().iter().copied().filter(|&(t, _)| t < window).collect(),
                methods: snapshot_methods,
            })
        } else {
            None
        };

        Ok(CellScores { rate, seed, per_method, snapshot })
    });

    // deterministic assembly: method (plan order) → rate → seed → station
    let mut cell_results = Vec::with_capacity(cell_outputs.len());
    for out in cell_outputs {
        cell_results.push(out?);
    }
    let mut report = MetricsReport::default();
    let mut infill = None;
    for cell in &cell_results {
        if cell.snapshot.is_some() && infill.is_none() {
            infill = cell.snapshot.clone();
        }
    }
    for name in &plan.methods {
        for cell in &cell_results {
            for (m, scores) in &cell.per_method {
                if m != name {
                    continue;
                }
                for sc in scores {
                    match sc {
                        StationScore::Scored { station, scores } => {
                            report.records.push(MetricRecord {
                                method: name.to_string(),
                                rate: cell.rate,
                                seed: cell.seed,
                                station: station.clone(),
                                scores: *scores,
                            });
                        }
                        StationScore::Skipped { station, reason } => {
                            report.skipped.push(SkipRecord {
                                method: name.to_string(),
                                rate: cell.rate,
                                seed: cell.seed,
                                station: station.clone(),
                                reason: reason.to_string(),
                            });
                        }
                    }
                }
            }
        }
    }

    Ok(RunOutput { report, infill, model_dumps, failed_fits })
}

/// Fit one method on every row where an observation exists, then fill the
/// remaining gaps — the production path behind `streamfill impute`.
pub fn impute_once(
    ds: &AlignedDataset,
    method: MethodName,
    plan: &ExperimentPlan,
) -> Result<crate::series::SeriesMatrix> {
    let fitted = FittedMethod::fit(method, ds, plan)?;
    fitted.impute(ds)
}
