//! Quantile mapping bias correction.
//!
//! Per station, two empirical CDFs are fitted on the paired training rows —
//! one for the observations, one for the forecast — and a forecast value is
//! corrected by pushing it through the forecast CDF and back out through the
//! inverse observation CDF. Because both CDFs are fitted on paired samples
//! of equal size, a strictly monotone bias is inverted exactly at the
//! training forecast values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{AlignedDataset, SeriesMatrix};

/// How transfer inputs outside the fitted forecast range are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TailPolicy {
    /// Map anything beyond the fitted range to the training extremes. The
    /// default: it prevents runaway extrapolated extremes.
    #[default]
    Clamp,
    /// Extend the first/last quantile segment linearly (probabilities still
    /// capped to [0, 1]).
    LinearExtend,
}

/// An empirical CDF over a sorted sample, using the plotting position
/// `F(x_(i)) = (i + 0.5) / n` with linear interpolation between points.
///
/// Ties collapse to the midpoint probability of the tied block on the
/// forward side, and the quantile function returns the plateau value across
/// a tied block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    sorted_samples: Vec<f64>,
}

impl EmpiricalCdf {
    /// Fit on at least two finite samples.
    pub fn fit(samples: &[f64]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InsufficientSamples { station: None, got: samples.len() });
        }
        if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!("non-finite CDF sample {bad}")));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { sorted_samples: sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted_samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted_samples.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.sorted_samples[0]
    }

    pub fn max(&self) -> f64 {
        *self.sorted_samples.last().unwrap()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted_samples
    }

    fn position(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.sorted_samples.len() as f64
    }

    /// Forward CDF value at `x`.
    pub fn cdf(&self, x: f64, tail: TailPolicy) -> f64 {
        let v = &self.sorted_samples;
        let n = v.len();
        // degenerate distribution: a step at the single value
        if v[0] == v[n - 1] {
            return if x < v[0] {
                0.0
            } else if x > v[0] {
                1.0
            } else {
                0.5
            };
        }
        let less = v.partition_point(|&s| s < x);
        let leq = v.partition_point(|&s| s <= x);
        if leq > less {
            // x is exactly a sample value (possibly tied): midpoint position
            return (less as f64 + 0.5 * (leq - less) as f64) / n as f64;
        }
        if less == 0 {
            // below the minimum
            return match tail {
                TailPolicy::Clamp => self.position(0),
                TailPolicy::LinearExtend => {
                    let (i, j) = first_distinct_segment(v);
                    let slope = (self.position(j) - self.position(i)) / (v[j] - v[i]);
                    (self.position(i) + (x - v[i]) * slope).clamp(0.0, 1.0)
                }
            };
        }
        if less == n {
            // above the maximum
            return match tail {
                TailPolicy::Clamp => self.position(n - 1),
                TailPolicy::LinearExtend => {
                    let (i, j) = last_distinct_segment(v);
                    let slope = (self.position(j) - self.position(i)) / (v[j] - v[i]);
                    (self.position(j) + (x - v[j]) * slope).clamp(0.0, 1.0)
                }
            };
        }
        // strictly between two distinct samples
        let (i, j) = (less - 1, less);
        let w = (x - v[i]) / (v[j] - v[i]);
        self.position(i) + w * (self.position(j) - self.position(i))
    }

    /// Quantile (inverse CDF) at probability `p`.
    pub fn quantile(&self, p: f64, tail: TailPolicy) -> f64 {
        let v = &self.sorted_samples;
        let n = v.len();
        if v[0] == v[n - 1] {
            return v[0];
        }
        let p0 = self.position(0);
        let pn = self.position(n - 1);
        if p <= p0 {
            return match tail {
                TailPolicy::Clamp => v[0],
                TailPolicy::LinearExtend => {
                    let (i, j) = first_distinct_segment(v);
                    let slope = (v[j] - v[i]) / (self.position(j) - self.position(i));
                    v[i] + (p - self.position(i)) * slope
                }
            };
        }
        if p >= pn {
            return match tail {
                TailPolicy::Clamp => v[n - 1],
                TailPolicy::LinearExtend => {
                    let (i, j) = last_distinct_segment(v);
                    let slope = (v[j] - v[i]) / (self.position(j) - self.position(i));
                    v[j] + (p - self.position(j)) * slope
                }
            };
        }
        // positions are strictly increasing, so the segment is well defined
        let k = ((p * n as f64 - 0.5).floor() as usize).min(n - 2);
        let (pi, pj) = (self.position(k), self.position(k + 1));
        let w = (p - pi) / (pj - pi);
        v[k] + w * (v[k + 1] - v[k])
    }
}

/// First pair of indices spanning a nonzero value gap from the bottom.
fn first_distinct_segment(v: &[f64]) -> (usize, usize) {
    let j = v.partition_point(|&s| s <= v[0]);
    (j - 1, j)
}

/// Last pair of indices spanning a nonzero value gap from the top.
fn last_distinct_segment(v: &[f64]) -> (usize, usize) {
    let n = v.len();
    let i = v.partition_point(|&s| s < v[n - 1]);
    (i - 1, i)
}

/// Per-station pair of fitted CDFs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationCdfPair {
    pub observed: EmpiricalCdf,
    pub forecast: EmpiricalCdf,
}

/// A fitted quantile-mapping model: one CDF pair per station, fitted on the
/// rows of the training period where that station's observation is present.
#[derive(Debug, Clone, PartialEq)]
pub struct QmModel {
    stations: Vec<String>,
    pairs: Vec<Option<StationCdfPair>>,
    unfitted: Vec<(String, String)>,
    tail: TailPolicy,
}

impl QmModel {
    /// Fit per-station CDF pairs on a training dataset.
    ///
    /// Stations with fewer than two paired samples are left unfitted and
    /// listed in [`QmModel::unfitted_stations`]; an error is returned only
    /// when no station can be fitted at all.
    pub fn fit(train: &AlignedDataset, tail: TailPolicy) -> Result<Self> {
        let stations = train.stations().to_vec();
        let mut pairs = Vec::with_capacity(stations.len());
        let mut unfitted = Vec::new();
        for s in 0..stations.len() {
            let mut obs = Vec::new();
            let mut fcst = Vec::new();
            for t in 0..train.n_dates() {
                if let Some(o) = train.observed().value(t, s) {
                    obs.push(o);
                    fcst.push(train.forecast().value(t, s).expect("forecast is gap-free"));
                }
            }
            if obs.len() < 2 {
                unfitted.push((stations[s].clone(), format!("{} paired samples", obs.len())));
                pairs.push(None);
            } else {
                pairs.push(Some(StationCdfPair {
                    observed: EmpiricalCdf::fit(&obs)?,
                    forecast: EmpiricalCdf::fit(&fcst)?,
                }));
            }
        }
        if pairs.iter().all(|p| p.is_none()) {
            return Err(Error::InsufficientSamples { station: None, got: 0 });
        }
        Ok(Self { stations, pairs, unfitted, tail })
    }

    pub fn tail_policy(&self) -> TailPolicy {
        self.tail
    }

    pub fn stations(&self) -> &[String] {
        &self.stations
    }

    /// Stations that could not be fitted, with the reason.
    pub fn unfitted_stations(&self) -> &[(String, String)] {
        &self.unfitted
    }

    pub fn is_fitted(&self, station_idx: usize) -> bool {
        self.pairs.get(station_idx).map(|p| p.is_some()).unwrap_or(false)
    }

    /// The fitted CDF pair for a station id.
    pub fn pair(&self, station: &str) -> Option<&StationCdfPair> {
        let idx = self.stations.iter().position(|s| s == station)?;
        self.pairs[idx].as_ref()
    }

    /// Bias-correct one forecast value for one station.
    pub fn transfer(&self, station: &str, x_fcst: f64) -> Result<f64> {
        let idx = self
            .stations
            .iter()
            .position(|s| s == station)
            .ok_or_else(|| Error::UnknownStation(station.to_string()))?;
        self.transfer_idx(idx, x_fcst)
    }

    fn transfer_idx(&self, idx: usize, x_fcst: f64) -> Result<f64> {
        let pair = self.pairs[idx]
            .as_ref()
            .ok_or_else(|| Error::InsufficientSamples { station: Some(self.stations[idx].clone()), got: 0 })?;
        let p = pair.forecast.cdf(x_fcst, self.tail);
        Ok(pair.observed.quantile(p, self.tail))
    }

    /// Fill every missing observation cell with the bias-corrected forecast.
    ///
    /// Cells of unfitted stations are left missing; callers decide whether
    /// that is an error for their use case.
    pub fn impute(&self, ds: &AlignedDataset) -> Result<SeriesMatrix> {
        for st in ds.stations() {
            if !self.stations.contains(st) {
                return Err(Error::UnknownStation(st.clone()));
            }
        }
        let mut fills = Vec::new();
        for (s, st) in ds.stations().iter().enumerate() {
            let model_idx = self.stations.iter().position(|m| m == st).unwrap();
            if self.pairs[model_idx].is_none() {
                continue;
            }
            for t in 0..ds.n_dates() {
                if ds.observed().value(t, s).is_none() {
                    let x = ds.forecast().value(t, s).expect("forecast is gap-free");
                    fills.push((t, s, self.transfer_idx(model_idx, x)?));
                }
            }
        }
        ds.observed().with_filled(&fills)
    }

    /// Serializable dump: per-station sorted sample vectors and tail policy.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct StationDump<'a> {
            station: &'a str,
            observed_samples: Option<&'a [f64]>,
            forecast_samples: Option<&'a [f64]>,
        }
        #[derive(Serialize)]
        struct Dump<'a> {
            model: &'static str,
            tail_policy: TailPolicy,
            stations: Vec<StationDump<'a>>,
        }
        let dump = Dump {
            model: "quantile-mapping",
            tail_policy: self.tail,
            stations: self
                .stations
                .iter()
                .zip(&self.pairs)
                .map(|(st, p)| StationDump {
                    station: st,
                    observed_samples: p.as_ref().map(|p| p.observed.samples()),
                    forecast_samples: p.as_ref().map(|p| p.forecast.samples()),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&dump).expect("dump serializes")
    }
}
