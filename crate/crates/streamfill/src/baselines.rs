//! Complete-data imputation baselines: k-nearest-neighbour regression,
//! random-forest regression over bagged CART trees, and the raw forecast
//! lookup.
//!
//! KNN and the forest see only in-situ data — their interfaces take no
//! forecast matrix at all, so the separation is enforced by the types, not
//! by convention. Both train on the rows of the training split where every
//! station is observed.

use crate::error::{Error, Result};
use crate::rng::{derive_seed, Rng};
use crate::series::{AlignedDataset, SeriesMatrix};
use crate::stats::Standardizer;

/// K-nearest-neighbour imputer on complete in-situ rows.
///
/// For a missing cell (t, s), the distance to each training row is the
/// Euclidean distance over the stations observed at time t (excluding s),
/// on standardized values; the fill is the mean of the k nearest rows'
/// station-s values. A row with nothing else observed falls back to the
/// station-s training mean.
#[derive(Debug, Clone)]
pub struct KnnImputer {
    k: usize,
    rows: Vec<Vec<f64>>,
    standardizer: Standardizer,
}

impl KnnImputer {
    /// Fit on the complete rows of a training matrix.
    pub fn fit(train_obs: &SeriesMatrix, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("k must be ≥ 1".into()));
        }
        let rows = complete_rows(train_obs);
        if rows.is_empty() {
            return Err(Error::NoCompleteTrainingRows);
        }
        if k > rows.len() {
            return Err(Error::InvalidConfig(format!(
                "k = {k} exceeds the {} complete training rows",
                rows.len()
            )));
        }
        let standardizer = Standardizer::fit(&rows);
        Ok(Self { k, rows, standardizer })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_training_rows(&self) -> usize {
        self.rows.len()
    }

    /// Fill every missing cell of `target`.
    pub fn impute(&self, target: &SeriesMatrix) -> Result<SeriesMatrix> {
        if target.n_stations() != self.standardizer.n_columns() {
            return Err(Error::DimensionMismatch {
                expected: self.standardizer.n_columns(),
                got: target.n_stations(),
            });
        }
        let n_stations = target.n_stations();
        let z_rows: Vec<Vec<f64>> =
            self.rows.iter().map(|r| self.standardizer.apply_row(r)).collect();
        let mut fills = Vec::new();
        for t in 0..target.n_dates() {
            let row = target.row(t);
            let missing: Vec<usize> = (0..n_stations).filter(|&s| row[s].is_none()).collect();
            if missing.is_empty() {
                continue;
            }
            for &s in &missing {
                let dims: Vec<usize> =
                    (0..n_stations).filter(|&d| d != s && row[d].is_some()).collect();
                if dims.is_empty() {
                    fills.push((t, s, self.standardizer.means[s]));
                    continue;
                }
                let z_query: Vec<f64> = dims
                    .iter()
                    .map(|&d| {
                        (row[d].unwrap() - self.standardizer.means[d])
                            / self.standardizer.scales[d]
                    })
                    .collect();
                let mut dist: Vec<(f64, usize)> = z_rows
                    .iter()
                    .enumerate()
                    .map(|(i, zr)| {
                        let d2: f64 = dims
                            .iter()
                            .zip(&z_query)
                            .map(|(&d, &zq)| (zr[d] - zq) * (zr[d] - zq))
                            .sum();
                        (d2, i)
                    })
                    .collect();
                // ties broken by row index so the result is deterministic
                dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                let fill = dist[..self.k]
                    .iter()
                    .map(|&(_, i)| self.rows[i][s])
                    .sum::<f64>()
                    / self.k as f64;
                fills.push((t, s, fill));
            }
        }
        target.with_filled(&fills)
    }
}

/// Convenience wrapper: fit on `train_obs` and impute `target` in one call.
pub fn knn_impute(train_obs: &SeriesMatrix, target: &SeriesMatrix, k: usize) -> Result<SeriesMatrix> {
    KnnImputer::fit(train_obs, k)?.impute(target)
}

/// Forest configuration.
#[derive(Debug, Clone, Copy)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Fraction of features drawn (without replacement) per split.
    pub feature_subsample: f64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self { n_trees: 100, max_depth: 12, min_samples_leaf: 5, feature_subsample: 1.0 / 3.0 }
    }
}

/// A binary CART regression tree stored as a flat node arena.
#[derive(Debug, Clone)]
pub struct RegressionTree {
    nodes: Vec<TreeNode>,
}

#[derive(Debug, Clone)]
enum TreeNode {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

impl RegressionTree {
    /// Fit on rows of features `x` and targets `y`, choosing at each node
    /// the variance-minimizing split over a random feature subset.
    fn fit(
        x: &[Vec<f64>],
        y: &[f64],
        cfg: &ForestConfig,
        features_per_split: usize,
        rng: &mut Rng,
    ) -> Self {
        let mut nodes = Vec::new();
        let idx: Vec<usize> = (0..y.len()).collect();
        grow(&mut nodes, x, y, idx, 0, cfg, features_per_split, rng);
        Self { nodes }
    }

    fn predict(&self, x: &[f64]) -> f64 {
        let mut node = 0usize;
        loop {
            match &self.nodes[node] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split { feature, threshold, left, right } => {
                    node = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    fn depth_from(&self, node: usize) -> usize {
        match &self.nodes[node] {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => {
                1 + self.depth_from(*left).max(self.depth_from(*right))
            }
        }
    }

    /// Tree depth in edges; a lone leaf has depth 0.
    pub fn depth(&self) -> usize {
        self.depth_from(0)
    }
}

/// Recursively grow a subtree over the rows in `idx`; returns the node id.
#[allow(clippy::too_many_arguments)]
fn grow(
    nodes: &mut Vec<TreeNode>,
    x: &[Vec<f64>],
    y: &[f64],
    idx: Vec<usize>,
    depth: usize,
    cfg: &ForestConfig,
    features_per_split: usize,
    rng: &mut Rng,
) -> usize {
    let node_id = nodes.len();
    let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
    nodes.push(TreeNode::Leaf { value: mean });
    if depth >= cfg.max_depth || idx.len() < 2 * cfg.min_samples_leaf {
        return node_id;
    }
    let n_features = x[0].len();
    let chosen = rng.sample_indices(n_features, features_per_split.min(n_features));
    let Some((feature, threshold)) = best_split(x, y, &idx, &chosen, cfg.min_samples_leaf) else {
        return node_id;
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
        idx.into_iter().partition(|&i| x[i][feature] <= threshold);
    let left = grow(nodes, x, y, left_idx, depth + 1, cfg, features_per_split, rng);
    let right = grow(nodes, x, y, right_idx, depth + 1, cfg, features_per_split, rng);
    nodes[node_id] = TreeNode::Split { feature, threshold, left, right };
    node_id
}

/// Exhaustive best split over candidate features: minimizes the summed
/// child squared error, scanning sorted prefix sums. Requires both children
/// to keep at least `min_leaf` rows.
fn best_split(
    x: &[Vec<f64>],
    y: &[f64],
    idx: &[usize],
    features: &[usize],
    min_leaf: usize,
) -> Option<(usize, f64)> {
    let n = idx.len();
    let mut best: Option<(f64, usize, f64)> = None;
    for &f in features {
        let mut order: Vec<usize> = idx.to_vec();
        order.sort_by(|&a, &b| x[a][f].partial_cmp(&x[b][f]).unwrap().then(a.cmp(&b)));
        let total: f64 = order.iter().map(|&i| y[i]).sum();
        let total_sq: f64 = order.iter().map(|&i| y[i] * y[i]).sum();
        let mut left_sum = 0.0;
        let mut left_sq = 0.0;
        for split_at in 1..n {
            let i = order[split_at - 1];
            left_sum += y[i];
            left_sq += y[i] * y[i];
            // can't split between equal feature values
            if x[order[split_at - 1]][f] == x[order[split_at]][f] {
                continue;
            }
            if split_at < min_leaf || n - split_at < min_leaf {
                continue;
            }
            let nl = split_at as f64;
            let nr = (n - split_at) as f64;
            let right_sum = total - left_sum;
            let right_sq = total_sq - left_sq;
            let sse = (left_sq - left_sum * left_sum / nl) + (right_sq - right_sum * right_sum / nr);
            let threshold = 0.5 * (x[order[split_at - 1]][f] + x[order[split_at]][f]);
            if best.map(|(b, _, _)| sse < b).unwrap_or(true) {
                best = Some((sse, f, threshold));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

/// Random-forest imputer: per target station, a bag of CART trees fitted on
/// bootstrap resamples of the complete in-situ rows, using the other
/// stations' same-day values as features.
#[derive(Debug, Clone)]
pub struct ForestImputer {
    config: ForestConfig,
    seed: u64,
    /// forests[s] predicts station s from the other stations.
    forests: Vec<Vec<RegressionTree>>,
    feature_means: Vec<f64>,
    n_stations: usize,
}

impl ForestImputer {
    /// Fit one forest per station. Tree randomness is derived from
    /// `(seed, station, tree)`, so results do not depend on scheduling.
    pub fn fit(train_obs: &SeriesMatrix, config: ForestConfig, seed: u64) -> Result<Self> {
        if config.n_trees == 0 || config.min_samples_leaf == 0 {
            return Err(Error::InvalidConfig("n_trees and min_samples_leaf must be ≥ 1".into()));
        }
        if !(0.0 < config.feature_subsample && config.feature_subsample <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "feature_subsample must be in (0, 1], got {}",
                config.feature_subsample
            )));
        }
        let rows = complete_rows(train_obs);
        if rows.len() < config.min_samples_leaf {
            return Err(Error::NoCompleteTrainingRows);
        }
        let n_stations = train_obs.n_stations();
        let feature_means: Vec<f64> = (0..n_stations)
            .map(|s| rows.iter().map(|r| r[s]).sum::<f64>() / rows.len() as f64)
            .collect();
        let n_features = n_stations.saturating_sub(1).max(1);
        let features_per_split =
            ((config.feature_subsample * n_features as f64).floor() as usize).max(1);

        let mut forests = Vec::with_capacity(n_stations);
        for s in 0..n_stations {
            // feature vector = all stations except s, in station order
            let x: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| {
                    r.iter().enumerate().filter(|&(d, _)| d != s).map(|(_, &v)| v).collect()
                })
                .collect();
            let y: Vec<f64> = rows.iter().map(|r| r[s]).collect();
            let mut trees = Vec::with_capacity(config.n_trees);
            for tree_idx in 0..config.n_trees {
                let mut rng =
                    Rng::with_seed(derive_seed(seed, &[s as u64, tree_idx as u64]));
                let boot: Vec<usize> =
                    (0..rows.len()).map(|_| rng.next_below(rows.len() as u64) as usize).collect();
                let bx: Vec<Vec<f64>> = boot.iter().map(|&i| x[i].clone()).collect();
                let by: Vec<f64> = boot.iter().map(|&i| y[i]).collect();
                trees.push(RegressionTree::fit(&bx, &by, &config, features_per_split, &mut rng));
            }
            forests.push(trees);
        }
        Ok(Self { config, seed, forests, feature_means, n_stations })
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trees_for(&self, station: usize) -> &[RegressionTree] {
        &self.forests[station]
    }

    /// Fill every missing cell: the prediction is the mean over trees, with
    /// unavailable features replaced by their training means.
    pub fn impute(&self, target: &SeriesMatrix) -> Result<SeriesMatrix> {
        if target.n_stations() != self.n_stations {
            return Err(Error::DimensionMismatch {
                expected: self.n_stations,
                got: target.n_stations(),
            });
        }
        let mut fills = Vec::new();
        for t in 0..target.n_dates() {
            let row = target.row(t);
            for s in 0..self.n_stations {
                if row[s].is_some() {
                    continue;
                }
                let features: Vec<f64> = (0..self.n_stations)
                    .filter(|&d| d != s)
                    .map(|d| row[d].unwrap_or(self.feature_means[d]))
                    .collect();
                let trees = &self.forests[s];
                let pred =
                    trees.iter().map(|tr| tr.predict(&features)).sum::<f64>() / trees.len() as f64;
                fills.push((t, s, pred));
            }
        }
        target.with_filled(&fills)
    }
}

/// The no-model baseline: fill every missing observation with the
/// co-located forecast value, verbatim.
pub fn gess_lookup(ds: &AlignedDataset) -> Result<SeriesMatrix> {
    let mut fills = Vec::new();
    for t in 0..ds.n_dates() {
        for s in 0..ds.n_stations() {
            if ds.observed().value(t, s).is_none() {
                fills.push((t, s, ds.forecast().value(t, s).expect("forecast is gap-free")));
            }
        }
    }
    ds.observed().with_filled(&fills)
}

/// Rows of a matrix where every station is observed.
fn complete_rows(sm: &SeriesMatrix) -> Vec<Vec<f64>> {
    (0..sm.n_dates())
        .filter_map(|t| {
            let row: Option<Vec<f64>> = (0..sm.n_stations()).map(|s| sm.value(t, s)).collect();
            row
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::date::Date;
    use crate::rng::Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn dates(n: usize) -> Vec<Date> {
        let d0 = Date::parse_iso("2020-01-01").unwrap();
        (0..n).map(|i| d0.add_days(i as i64)).collect()
    }

    fn matrix(ids: &[&str], values: Vec<f64>, mask: Vec<bool>) -> SeriesMatrix {
        let t = values.len() / ids.len();
        SeriesMatrix::new(dates(t), ids.iter().map(|s| s.to_string()).collect(), values, mask)
            .unwrap()
    }

    #[test]
    fn knn_k1_exact_row_match() {
        let train = matrix(
            &["A", "B", "C"],
            vec![1.0, 10.0, 100.0, 2.0, 20.0, 200.0, 3.0, 30.0, 300.0],
            vec![true; 9],
        );
        // target row matches training row 1 on A and B; C missing
        let target = matrix(&["A", "B", "C"], vec![2.0, 20.0, 0.0], vec![true, true, false]);
        let filled = knn_impute(&train, &target, 1).unwrap();
        assert_eq!(filled.value(0, 2), Some(200.0));
    }

    #[test]
    fn knn_k_all_rows_gives_training_mean() {
        let train = matrix(
            &["A", "B"],
            vec![1.0, 10.0, 2.0, 20.0, 3.0, 30.0, 4.0, 40.0],
            vec![true; 8],
        );
        let target = matrix(&["A", "B"], vec![2.5, 0.0], vec![true, false]);
        let filled = knn_impute(&train, &target, 4).unwrap();
        assert!(close(filled.value(0, 1).unwrap(), 25.0, 1e-12));
    }

    #[test]
    fn knn_matches_brute_force_oracle() {
        let train = matrix(
            &["A", "B", "C"],
            vec![0.0, 5.0, 9.0, 1.0, 6.0, 4.0, 10.0, 2.0, 7.0],
            vec![true; 9],
        );
        let target = matrix(&["A", "B", "C"], vec![0.5, 5.5, 0.0], vec![true, true, false]);
        let filled = knn_impute(&train, &target, 2).unwrap();
        // brute force in standardized space over dims {A, B}
        let rows = vec![vec![0.0, 5.0, 9.0], vec![1.0, 6.0, 4.0], vec![10.0, 2.0, 7.0]];
        let std = Standardizer::fit(&rows);
        let q = [(0.5 - std.means[0]) / std.scales[0], (5.5 - std.means[1]) / std.scales[1]];
        let mut d: Vec<(f64, usize)> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let z0 = (r[0] - std.means[0]) / std.scales[0];
                let z1 = (r[1] - std.means[1]) / std.scales[1];
                ((z0 - q[0]).powi(2) + (z1 - q[1]).powi(2), i)
            })
            .collect();
        d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let expected = (rows[d[0].1][2] + rows[d[1].1][2]) / 2.0;
        assert!(close(filled.value(0, 2).unwrap(), expected, 1e-12));
    }

    #[test]
    fn knn_all_other_stations_missing_falls_back_to_mean() {
        let train = matrix(&["A", "B"], vec![1.0, 10.0, 3.0, 30.0], vec![true; 4]);
        let target = matrix(&["A", "B"], vec![0.0, 0.0], vec![false, false]);
        let filled = knn_impute(&train, &target, 1).unwrap();
        assert!(close(filled.value(0, 0).unwrap(), 2.0, 1e-12));
        assert!(close(filled.value(0, 1).unwrap(), 20.0, 1e-12));
    }

    #[test]
    fn knn_rejects_no_complete_rows_and_bad_k() {
        let train = matrix(&["A", "B"], vec![1.0, 0.0, 2.0, 0.0], vec![true, false, true, false]);
        assert!(matches!(KnnImputer::fit(&train, 1), Err(Error::NoCompleteTrainingRows)));
        let ok = matrix(&["A", "B"], vec![1.0, 2.0, 3.0, 4.0], vec![true; 4]);
        assert!(KnnImputer::fit(&ok, 3).is_err());
    }

    #[test]
    fn stump_forest_predicts_bootstrap_means() {
        let train = matrix(
            &["A", "B"],
            vec![1.0, 10.0, 2.0, 20.0, 3.0, 30.0, 4.0, 40.0, 5.0, 50.0, 6.0, 60.0],
            vec![true; 12],
        );
        let cfg = ForestConfig { n_trees: 50, max_depth: 0, min_samples_leaf: 1, ..Default::default() };
        let model = ForestImputer::fit(&train, cfg, 3).unwrap();
        for s in 0..2 {
            for tree in model.trees_for(s) {
                assert_eq!(tree.depth(), 0);
            }
        }
        let target = matrix(&["A", "B"], vec![0.0, 35.0], vec![false, true]);
        let filled = model.impute(&target).unwrap();
        // a mean of bootstrap means stays near the training mean of A = 3.5
        let v = filled.value(0, 0).unwrap();
        assert!((v - 3.5).abs() < 1.0, "got {v}");
    }

    #[test]
    fn separable_step_function_is_learned_exactly() {
        // B is a step function of A with a wide gap between the classes, so
        // every bootstrap's split threshold falls inside the gap and a
        // depth-1 tree reaches zero training error.
        let mut values = Vec::new();
        for i in 0..40 {
            let a = if i < 20 { i as f64 * 0.1 } else { 8.0 + (i - 20) as f64 * 0.1 };
            values.push(a);
            values.push(if a > 5.0 { 100.0 } else { 10.0 });
        }
        let train = matrix(&["A", "B"], values.clone(), vec![true; 80]);
        let cfg = ForestConfig { n_trees: 20, max_depth: 4, min_samples_leaf: 1, feature_subsample: 1.0 };
        let model = ForestImputer::fit(&train, cfg, 5).unwrap();
        // training rmse on station B
        let mut se = 0.0;
        for i in 0..40 {
            let a = values[2 * i];
            let truth = values[2 * i + 1];
            let target = matrix(&["A", "B"], vec![a, 0.0], vec![true, false]);
            let filled = model.impute(&target).unwrap();
            se += (filled.value(0, 1).unwrap() - truth).powi(2);
        }
        assert!((se / 40.0).sqrt() < 1e-9);
    }

    #[test]
    fn forest_is_deterministic_per_seed() {
        let mut values = Vec::new();
        for i in 0..30 {
            values.push(i as f64);
            values.push((i as f64 * 1.7).sin() * 10.0);
        }
        let train = matrix(&["A", "B"], values, vec![true; 60]);
        let cfg = ForestConfig { n_trees: 10, ..Default::default() };
        let m1 = ForestImputer::fit(&train, cfg, 42).unwrap();
        let m2 = ForestImputer::fit(&train, cfg, 42).unwrap();
        let target = matrix(&["A", "B"], vec![7.3, 0.0], vec![true, false]);
        let v1 = m1.impute(&target).unwrap().value(0, 1).unwrap();
        let v2 = m2.impute(&target).unwrap().value(0, 1).unwrap();
        assert_eq!(v1.to_bits(), v2.to_bits());
        let m3 = ForestImputer::fit(&train, cfg, 43).unwrap();
        let v3 = m3.impute(&target).unwrap().value(0, 1).unwrap();
        assert_ne!(v1.to_bits(), v3.to_bits());
    }

    #[test]
    fn forest_predictions_stay_within_training_range() {
        let mut values = Vec::new();
        let mut rng = Rng::with_seed(91);
        for _ in 0..50 {
            values.push(rng.uniform(0.0, 10.0));
            values.push(rng.uniform(100.0, 200.0));
        }
        let train = matrix(&["A", "B"], values, vec![true; 100]);
        let model = ForestImputer::fit(&train, ForestConfig::default(), 1).unwrap();
        for probe in [-100.0, 0.0, 5.0, 1000.0] {
            let target = matrix(&["A", "B"], vec![probe, 0.0], vec![true, false]);
            let v = model.impute(&target).unwrap().value(0, 1).unwrap();
            assert!((100.0..=200.0).contains(&v), "prediction {v} escaped training range");
        }
    }

    #[test]
    fn hand_built_two_tree_forest_oracle() {
        // 4 rows, feature A, target B; depth-1 trees, full rows as "bootstrap"
        // via min_samples_leaf=2 on 4 rows the split at the midpoint is forced
        let train = matrix(
            &["A", "B"],
            vec![1.0, 10.0, 2.0, 12.0, 8.0, 30.0, 9.0, 32.0],
            vec![true; 8],
        );
        let cfg = ForestConfig { n_trees: 2, max_depth: 1, min_samples_leaf: 2, feature_subsample: 1.0 };
        let model = ForestImputer::fit(&train, cfg, 7).unwrap();
        let target = matrix(&["A", "B"], vec![1.5, 0.0], vec![true, false]);
        let got = model.impute(&target).unwrap().value(0, 1).unwrap();
        // trace each tree by hand: for feature value 1.5 follow the split
        let mut expected = 0.0;
        for tree in model.trees_for(1) {
            expected += tree.predict(&[1.5]);
        }
        expected /= 2.0;
        assert_eq!(got.to_bits(), expected.to_bits());
        // and each tree's leaves are means of its bootstrap halves, so the
        // prediction must lie inside the target range
        assert!((10.0..=32.0).contains(&got));
    }

    #[test]
    fn lookup_fills_with_forecast_verbatim() {
        let obs = matrix(
            &["A", "B"],
            vec![1.0, 0.0, 3.0, 4.0, 0.0, 6.0],
            vec![true, false, true, true, false, true],
        );
        let fc = matrix(&["A", "B"], vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0], vec![true; 6]);
        let ds = AlignedDataset::new(obs.clone(), fc).unwrap();
        let filled = gess_lookup(&ds).unwrap();
        assert_eq!(filled.value(0, 1), Some(20.0));
        assert_eq!(filled.value(2, 0), Some(50.0));
        assert_eq!(filled.value(0, 0), Some(1.0));
        assert_eq!(filled.value(1, 0), Some(3.0));
        // no missing cells → identity
        let complete = matrix(&["A"], vec![1.0, 2.0], vec![true; 2]);
        let fc2 = matrix(&["A"], vec![9.0, 9.0], vec![true; 2]);
        let ds2 = AlignedDataset::new(complete.clone(), fc2).unwrap();
        assert_eq!(&gess_lookup(&ds2).unwrap(), &complete);
    }
}
