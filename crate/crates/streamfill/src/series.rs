//! Date-indexed multi-station series: the data model shared by every
//! imputation method, plus alignment, chronological splitting, and
//! missingness simulation.

use crate::date::Date;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// A T×S matrix of daily discharge values (m³/s) with an explicit per-cell
/// observation mask.
///
/// Invariants enforced at construction:
/// * dates strictly increasing (daily resolution, gaps allowed),
/// * station identifiers unique,
/// * values finite wherever the mask is true.
///
/// The matrix is immutable after construction; operations that "modify" it
/// return a new matrix. Values at masked-out cells are unspecified and must
/// not be read — [`SeriesMatrix::value`] returns `None` there.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesMatrix {
    dates: Vec<Date>,
    stations: Vec<String>,
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl SeriesMatrix {
    /// Build a matrix from row-major `values` and `mask` of length T·S.
    pub fn new(
        dates: Vec<Date>,
        stations: Vec<String>,
        values: Vec<f64>,
        mask: Vec<bool>,
    ) -> Result<Self> {
        let t = dates.len();
        let s = stations.len();
        if values.len() != t * s || mask.len() != t * s {
            return Err(Error::InvalidSeries(format!(
                "expected {t}×{s} cells, got {} values and {} mask entries",
                values.len(),
                mask.len()
            )));
        }
        if !dates.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidSeries("dates must be strictly increasing".into()));
        }
        for (i, a) in stations.iter().enumerate() {
            if stations[i + 1..].contains(a) {
                return Err(Error::InvalidSeries(format!("duplicate station id {a:?}")));
            }
        }
        for (idx, (&v, &m)) in values.iter().zip(&mask).enumerate() {
            if m && !v.is_finite() {
                return Err(Error::InvalidSeries(format!(
                    "non-finite value at cell ({}, {})",
                    idx / s,
                    idx % s
                )));
            }
        }
        Ok(Self { dates, stations, values, mask })
    }

    /// A fully observed matrix (mask all true).
    pub fn complete(dates: Vec<Date>, stations: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let mask = vec![true; values.len()];
        Self::new(dates, stations, values, mask)
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn n_stations(&self) -> usize {
        self.stations.len()
    }

    pub fn dates(&self) -> &[Date] {
        &self.dates
    }

    pub fn stations(&self) -> &[String] {
        &self.stations
    }

    pub fn station_index(&self, id: &str) -> Option<usize> {
        self.stations.iter().position(|s| s == id)
    }

    pub fn is_observed(&self, t: usize, s: usize) -> bool {
        self.mask[t * self.stations.len() + s]
    }

    /// The value at `(t, s)`, or `None` if the cell is missing.
    pub fn value(&self, t: usize, s: usize) -> Option<f64> {
        let idx = t * self.stations.len() + s;
        if self.mask[idx] {
            Some(self.values[idx])
        } else {
            None
        }
    }

    /// Count of observed cells.
    pub fn observed_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Observed values of one station, in date order.
    pub fn station_observed(&self, s: usize) -> Vec<f64> {
        (0..self.n_dates()).filter_map(|t| self.value(t, s)).collect()
    }

    /// True when every cell of every station is observed.
    pub fn is_complete(&self) -> bool {
        self.mask.iter().all(|&m| m)
    }

    /// Row `t` as a vector of optional values.
    pub fn row(&self, t: usize) -> Vec<Option<f64>> {
        (0..self.n_stations()).map(|s| self.value(t, s)).collect()
    }

    /// New matrix with the given cells filled in (and marked observed).
    /// Cells must currently be missing.
    pub fn with_filled(&self, fills: &[(usize, usize, f64)]) -> Result<Self> {
        let s_len = self.stations.len();
        let mut values = self.values.clone();
        let mut mask = self.mask.clone();
        for &(t, s, v) in fills {
            if t >= self.dates.len() || s >= s_len {
                return Err(Error::IndexOutOfRange { time: t, station: s });
            }
            if !v.is_finite() {
                return Err(Error::InvalidSeries(format!("non-finite fill at ({t}, {s})")));
            }
            let idx = t * s_len + s;
            values[idx] = v;
            mask[idx] = true;
        }
        Ok(Self { dates: self.dates.clone(), stations: self.stations.clone(), values, mask })
    }

    /// Sub-matrix over a contiguous date range `[lo, hi)`.
    fn slice_dates(&self, lo: usize, hi: usize) -> Self {
        let s_len = self.stations.len();
        Self {
            dates: self.dates[lo..hi].to_vec(),
            stations: self.stations.clone(),
            values: self.values[lo * s_len..hi * s_len].to_vec(),
            mask: self.mask[lo * s_len..hi * s_len].to_vec(),
        }
    }

    /// Sub-matrix restricted to selected date and station indices.
    fn select(&self, date_idx: &[usize], station_idx: &[usize]) -> Self {
        let s_len = self.stations.len();
        let mut values = Vec::with_capacity(date_idx.len() * station_idx.len());
        let mut mask = Vec::with_capacity(values.capacity());
        for &t in date_idx {
            for &s in station_idx {
                values.push(self.values[t * s_len + s]);
                mask.push(self.mask[t * s_len + s]);
            }
        }
        Self {
            dates: date_idx.iter().map(|&t| self.dates[t]).collect(),
            stations: station_idx.iter().map(|&s| self.stations[s].clone()).collect(),
            values,
            mask,
        }
    }
}

/// A pair of series — in-situ observations and a gap-free forecast — sharing
/// one date index and station roster.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedDataset {
    observed: SeriesMatrix,
    forecast: SeriesMatrix,
}

impl AlignedDataset {
    /// Validate and wrap an already-aligned pair.
    pub fn new(observed: SeriesMatrix, forecast: SeriesMatrix) -> Result<Self> {
        if observed.dates != forecast.dates {
            return Err(Error::InvalidSeries("date indexes differ".into()));
        }
        if observed.stations != forecast.stations {
            return Err(Error::InvalidSeries("station rosters differ".into()));
        }
        if let Some(idx) = forecast.mask.iter().position(|&m| !m) {
            let s_len = forecast.stations.len();
            return Err(Error::ForecastGap {
                date: forecast.dates[idx / s_len].to_string(),
                station: forecast.stations[idx % s_len].clone(),
            });
        }
        Ok(Self { observed, forecast })
    }

    pub fn observed(&self) -> &SeriesMatrix {
        &self.observed
    }

    pub fn forecast(&self) -> &SeriesMatrix {
        &self.forecast
    }

    pub fn n_dates(&self) -> usize {
        self.observed.n_dates()
    }

    pub fn n_stations(&self) -> usize {
        self.observed.n_stations()
    }

    pub fn stations(&self) -> &[String] {
        self.observed.stations()
    }

    pub fn dates(&self) -> &[Date] {
        self.observed.dates()
    }

    /// Replace the observed matrix, keeping the forecast. The replacement
    /// must share the date index and roster.
    pub fn with_observed(&self, observed: SeriesMatrix) -> Result<Self> {
        Self::new(observed, self.forecast.clone())
    }

    /// Indices of rows where every station is observed in the in-situ matrix.
    pub fn complete_row_indices(&self) -> Vec<usize> {
        (0..self.n_dates())
            .filter(|&t| (0..self.n_stations()).all(|s| self.observed.is_observed(t, s)))
            .collect()
    }
}

/// Restrict two series to their common dates and stations.
///
/// The result keeps the observed matrix's station order. A forecast cell
/// missing inside the intersection is an error — the forecast is required to
/// be gap-free, never silently imputed.
pub fn align(observed: &SeriesMatrix, forecast: &SeriesMatrix) -> Result<AlignedDataset> {
    let station_pairs: Vec<(usize, usize)> = observed
        .stations
        .iter()
        .enumerate()
        .filter_map(|(i, id)| forecast.station_index(id).map(|j| (i, j)))
        .collect();

    let mut obs_dates = Vec::new();
    let mut fc_dates = Vec::new();
    let (mut i, mut j) = (0usize, 0usize);
    while i < observed.dates.len() && j < forecast.dates.len() {
        match observed.dates[i].cmp(&forecast.dates[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                obs_dates.push(i);
                fc_dates.push(j);
                i += 1;
                j += 1;
            }
        }
    }

    if station_pairs.is_empty() || obs_dates.is_empty() {
        return Err(Error::EmptyIntersection);
    }

    let obs_stations: Vec<usize> = station_pairs.iter().map(|&(i, _)| i).collect();
    let fc_stations: Vec<usize> = station_pairs.iter().map(|&(_, j)| j).collect();
    let obs = observed.select(&obs_dates, &obs_stations);
    let fc = forecast.select(&fc_dates, &fc_stations);
    AlignedDataset::new(obs, fc)
}

/// Split a dataset chronologically: the first `ceil(train_fraction · T)`
/// dates go to train, the remainder to test. No shuffling.
pub fn split_chronological(
    ds: &AlignedDataset,
    train_fraction: f64,
) -> Result<(AlignedDataset, AlignedDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train_fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let t = ds.n_dates();
    if t < 2 {
        return Err(Error::DegenerateSplit { train_len: t, test_len: 0 });
    }
    let n_train = (train_fraction * t as f64).ceil() as usize;
    if n_train == 0 || n_train >= t {
        return Err(Error::DegenerateSplit { train_len: n_train, test_len: t - n_train });
    }
    let train = AlignedDataset {
        observed: ds.observed.slice_dates(0, n_train),
        forecast: ds.forecast.slice_dates(0, n_train),
    };
    let test = AlignedDataset {
        observed: ds.observed.slice_dates(n_train, t),
        forecast: ds.forecast.slice_dates(n_train, t),
    };
    Ok((train, test))
}

/// A reproducible set of observed cells hidden for evaluation.
///
/// Cells are stored sorted by (time, station). The mask records which cells
/// to hide; it never destroys data — apply it with [`apply_mask`].
#[derive(Debug, Clone, PartialEq)]
pub struct MissingnessMask {
    cells: Vec<(usize, usize)>,
    rate: f64,
    seed: u64,
}

impl MissingnessMask {
    pub fn cells(&self) -> &[(usize, usize)] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn contains(&self, t: usize, s: usize) -> bool {
        self.cells.binary_search(&(t, s)).is_ok()
    }

    /// Sub-mask keeping only cells whose station index satisfies the
    /// predicate. Used to drop stations a method could not fit.
    pub fn retain_stations(&self, keep: impl Fn(usize) -> bool) -> Self {
        Self {
            cells: self.cells.iter().copied().filter(|&(_, s)| keep(s)).collect(),
            rate: self.rate,
            seed: self.seed,
        }
    }
}

/// Hide a seeded uniform random subset of the observed cells (MCAR).
///
/// Exactly `floor(rate · observed_count)` cells are selected, uniformly
/// without replacement over the observed cells enumerated in row-major
/// order. Identical `(matrix shape, mask, rate, seed)` give a bit-identical
/// result; the generator pipeline is pinned in [`crate::rng`].
pub fn simulate_missingness(sm: &SeriesMatrix, rate: f64, seed: u64) -> Result<MissingnessMask> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidConfig(format!("rate must be in [0, 1), got {rate}")));
    }
    let eligible: Vec<(usize, usize)> = (0..sm.n_dates())
        .flat_map(|t| (0..sm.n_stations()).map(move |s| (t, s)))
        .filter(|&(t, s)| sm.is_observed(t, s))
        .collect();
    if eligible.is_empty() {
        return Err(Error::InvalidSeries("matrix has no observed cells".into()));
    }
    let count = (rate * eligible.len() as f64).floor() as usize;
    let mut rng = Rng::with_seed(seed);
    let picked = rng.sample_indices(eligible.len(), count);
    let cells: Vec<(usize, usize)> = picked.into_iter().map(|i| eligible[i]).collect();
    Ok(MissingnessMask { cells, rate, seed })
}

/// How simulated missingness is laid out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaskMechanism {
    /// Uniform random cells (MCAR). The default.
    Mcar,
    /// Contiguous per-station outages: runs of consecutive days with the
    /// given mean length, mimicking real sensor failures.
    Blocks { mean_length: usize },
}

/// Like [`simulate_missingness`], with a choice of mechanism. Both
/// mechanisms hide exactly `floor(rate · observed_count)` cells and are
/// bit-reproducible per seed.
pub fn simulate_missingness_with(
    sm: &SeriesMatrix,
    rate: f64,
    seed: u64,
    mechanism: MaskMechanism,
) -> Result<MissingnessMask> {
    match mechanism {
        MaskMechanism::Mcar => simulate_missingness(sm, rate, seed),
        MaskMechanism::Blocks { mean_length } => {
            if mean_length == 0 {
                return Err(Error::InvalidConfig("block mean_length must be ≥ 1".into()));
            }
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::InvalidConfig(format!("rate must be in [0, 1), got {rate}")));
            }
            let eligible = sm.observed_count();
            if eligible == 0 {
                return Err(Error::InvalidSeries("matrix has no observed cells".into()));
            }
            let target = (rate * eligible as f64).floor() as usize;
            let (t_len, s_len) = (sm.n_dates(), sm.n_stations());
            let mut hidden = std::collections::BTreeSet::new();
            let mut rng = Rng::with_seed(seed);
            while hidden.len() < target {
                let s = rng.next_below(s_len as u64) as usize;
                let start = rng.next_below(t_len as u64) as usize;
                // uniform length on [1, 2·mean − 1] has the requested mean
                let len = 1 + rng.next_below((2 * mean_length - 1) as u64) as usize;
                for t in start..(start + len).min(t_len) {
                    if sm.is_observed(t, s) && hidden.insert((t, s)) && hidden.len() == target {
                        break;
                    }
                }
            }
            Ok(MissingnessMask { cells: hidden.into_iter().collect(), rate, seed })
        }
    }
}

/// Apply a missingness mask: the returned matrix has the masked cells
/// flipped to missing, everything else unchanged. The input is not mutated.
pub fn apply_mask(sm: &SeriesMatrix, mask: &MissingnessMask) -> Result<SeriesMatrix> {
    let s_len = sm.stations.len();
    let mut out = sm.clone();
    for &(t, s) in &mask.cells {
        if t >= sm.dates.len() || s >= s_len {
            return Err(Error::IndexOutOfRange { time: t, station: s });
        }
        out.mask[t * s_len + s] = false;
    }
    Ok(out)
}
