//! Multi-output elastic net fitted by cyclic coordinate descent.
//!
//! Each station's observations are regressed on all stations' forecasts;
//! the outputs share one design matrix and one cross-validated
//! (strength, mixing) penalty pair but are otherwise independent.
//!
//! On standardized data the objective for one output is
//!
//! ```text
//! J(b) = 1/(2n) · ‖y − X b‖² + strength·( mixing·‖b‖₁ + (1−mixing)/2·‖b‖₂² )
//! ```
//!
//! whose exact coordinate minimizer is the soft-threshold update
//! `b_j ← S(rho_j, strength·mixing) / (g_jj + strength·(1−mixing))`. The
//! descent runs in covariance form (precomputed Gram matrix), so each sweep
//! costs O(p²) regardless of the row count.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::{AlignedDataset, SeriesMatrix};
use crate::stats::Standardizer;

/// Soft-threshold operator `S(z, t) = sign(z)·max(|z| − t, 0)`.
fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Coordinate-descent result for one output on standardized data.
#[derive(Debug, Clone)]
pub struct CdFit {
    pub beta: Vec<f64>,
    /// Penalized objective after each full sweep.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
}

/// Cyclic coordinate descent on pre-standardized data for a single output.
///
/// `gram` is `(1/n)XᵀX` (row-major p×p), `corr` is `(1/n)Xᵀy`, and
/// `y_sq_mean` is `(1/n)‖y‖²` for the objective trace. Iterates until the
/// largest coefficient change in a sweep drops below `tol` or `max_iter`
/// sweeps have run; in the latter case the fit is returned with
/// `converged = false`.
pub fn coordinate_descent(
    gram: &[f64],
    corr: &[f64],
    y_sq_mean: f64,
    lambda: f64,
    alpha: f64,
    tol: f64,
    max_iter: usize,
) -> CdFit {
    let p = corr.len();
    let mut beta = vec![0.0; p];
    let mut trace = Vec::new();
    let mut converged = false;
    let l1 = lambda * alpha;
    let l2 = lambda * (1.0 - alpha);
    for _ in 0..max_iter {
        let mut max_delta = 0.0f64;
        for j in 0..p {
            let g_jj = gram[j * p + j];
            // rho_j = corr_j − Σ_{k≠j} G_jk b_k
            let mut rho = corr[j];
            for k in 0..p {
                if k != j {
                    rho -= gram[j * p + k] * beta[k];
                }
            }
            let denom = g_jj + l2;
            let new = if denom > 0.0 { soft_threshold(rho, l1) / denom } else { 0.0 };
            max_delta = max_delta.max((new - beta[j]).abs());
            beta[j] = new;
        }
        trace.push(objective(gram, corr, y_sq_mean, &beta, lambda, alpha));
        if max_delta < tol {
            converged = true;
            break;
        }
    }
    CdFit { beta, objective_trace: trace, converged }
}

/// The penalized objective in covariance form.
pub fn objective(
    gram: &[f64],
    corr: &[f64],
    y_sq_mean: f64,
    beta: &[f64],
    lambda: f64,
    alpha: f64,
) -> f64 {
    let p = beta.len();
    let mut quad = 0.0;
    for j in 0..p {
        for k in 0..p {
            quad += beta[j] * gram[j * p + k] * beta[k];
        }
    }
    let cross: f64 = corr.iter().zip(beta).map(|(&c, &b)| c * b).sum();
    let l1: f64 = beta.iter().map(|b| b.abs()).sum();
    let l2: f64 = beta.iter().map(|b| b * b).sum();
    0.5 * y_sq_mean - cross + 0.5 * quad + lambda * (alpha * l1 + 0.5 * (1.0 - alpha) * l2)
}

/// A fitted multi-output elastic net.
#[derive(Debug, Clone)]
pub struct ElasticNetModel {
    input_stations: Vec<String>,
    output_stations: Vec<String>,
    /// Standardized coefficients, `beta[output][input]`.
    beta: Vec<Vec<f64>>,
    input_std: Standardizer,
    output_std: Standardizer,
    lambda: f64,
    alpha: f64,
    converged: bool,
    objective_traces: Vec<Vec<f64>>,
}

/// Tuning knobs for a single fit.
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub lambda: f64,
    pub alpha: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { lambda: 0.0, alpha: 0.5, tol: 1e-6, max_iter: 10_000 }
    }
}

impl ElasticNetModel {
    /// Fit on explicit training rows (inputs: forecast rows, outputs:
    /// observation rows). Rows with missing outputs must already be
    /// excluded. Needs at least two rows.
    pub fn fit_rows(
        x_rows: &[Vec<f64>],
        y_rows: &[Vec<f64>],
        input_stations: Vec<String>,
        output_stations: Vec<String>,
        opts: FitOptions,
    ) -> Result<Self> {
        if x_rows.len() != y_rows.len() {
            return Err(Error::LengthMismatch { left: x_rows.len(), right: y_rows.len() });
        }
        if x_rows.len() < 2 {
            return Err(Error::NoCompleteRows);
        }
        if !(opts.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tol must be > 0, got {}", opts.tol)));
        }
        if opts.lambda < 0.0 || !(0.0..=1.0).contains(&opts.alpha) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be ≥ 0 and alpha in [0, 1], got ({}, {})",
                opts.lambda, opts.alpha
            )));
        }
        let n = x_rows.len();
        let p = input_stations.len();
        let q = output_stations.len();

        let input_std = Standardizer::fit(x_rows);
        let output_std = Standardizer::fit(y_rows);
        let zx: Vec<Vec<f64>> = x_rows.iter().map(|r| input_std.apply_row(r)).collect();
        let zy: Vec<Vec<f64>> = y_rows.iter().map(|r| output_std.apply_row(r)).collect();

        // Gram matrix and per-output correlations, both 1/n-normalized.
        let mut gram = vec![0.0; p * p];
        for row in &zx {
            for j in 0..p {
                for k in j..p {
                    gram[j * p + k] += row[j] * row[k];
                }
            }
        }
        for j in 0..p {
            for k in j..p {
                let v = gram[j * p + k] / n as f64;
                gram[j * p + k] = v;
                gram[k * p + j] = v;
            }
        }

        let mut beta = Vec::with_capacity(q);
        let mut traces = Vec::with_capacity(q);
        let mut converged = true;
        for out in 0..q {
            let mut corr = vec![0.0; p];
            let mut y_sq = 0.0;
            for (zrow, yrow) in zx.iter().zip(&zy) {
                let yv = yrow[out];
                y_sq += yv * yv;
                for (c, &z) in corr.iter_mut().zip(zrow) {
                    *c += z * yv;
                }
            }
            for c in &mut corr {
                *c /= n as f64;
            }
            y_sq /= n as f64;
            let fit = coordinate_descent(
                &gram, &corr, y_sq, opts.lambda, opts.alpha, opts.tol, opts.max_iter,
            );
            converged &= fit.converged;
            beta.push(fit.beta);
            traces.push(fit.objective_trace);
        }

        Ok(Self {
            input_stations,
            output_stations,
            beta,
            input_std,
            output_std,
            lambda: opts.lambda,
            alpha: opts.alpha,
            converged,
            objective_traces: traces,
        })
    }

    /// Fit on a training dataset: inputs are all stations' forecasts,
    /// outputs all stations' observations, using only rows where every
    /// station is observed.
    pub fn fit(train: &AlignedDataset, opts: FitOptions) -> Result<Self> {
        let (x_rows, y_rows) = complete_training_rows(train)?;
        Self::fit_rows(
            &x_rows,
            &y_rows,
            train.stations().to_vec(),
            train.stations().to_vec(),
            opts,
        )
    }

    /// The univariate variant: each station's observations are regressed on
    /// that station's own forecast only, giving a diagonal coefficient
    /// matrix. All stations still share the penalty pair.
    pub fn fit_univariate(train: &AlignedDataset, opts: FitOptions) -> Result<Self> {
        let (x_rows, y_rows) = complete_training_rows(train)?;
        let q = train.n_stations();
        let input_std = Standardizer::fit(&x_rows);
        let output_std = Standardizer::fit(&y_rows);
        let mut beta = vec![vec![0.0; q]; q];
        let mut traces = Vec::with_capacity(q);
        let mut converged = true;
        for s in 0..q {
            let xs: Vec<Vec<f64>> = x_rows.iter().map(|r| vec![r[s]]).collect();
            let ys: Vec<Vec<f64>> = y_rows.iter().map(|r| vec![r[s]]).collect();
            let sub = Self::fit_rows(
                &xs,
                &ys,
                vec![train.stations()[s].clone()],
                vec![train.stations()[s].clone()],
                opts,
            )?;
            beta[s][s] = sub.beta[0][0];
            converged &= sub.converged;
            traces.push(sub.objective_traces[0].clone());
        }
        Ok(Self {
            input_stations: train.stations().to_vec(),
            output_stations: train.stations().to_vec(),
            beta,
            input_std,
            output_std,
            lambda: opts.lambda,
            alpha: opts.alpha,
            converged,
            objective_traces: traces,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The additive penalty weights: `l1_weight = lambda·alpha`,
    /// `l2_weight = lambda·(1−alpha)`; the mixing fractions sum to one.
    pub fn penalty_split(&self) -> (f64, f64) {
        (self.lambda * self.alpha, self.lambda * (1.0 - self.alpha))
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    /// Standardized coefficients, `[output][input]`.
    pub fn standardized_coefficients(&self) -> &[Vec<f64>] {
        &self.beta
    }

    /// Coefficients mapped back to original units.
    pub fn coefficients(&self) -> Vec<Vec<f64>> {
        self.beta
            .iter()
            .enumerate()
            .map(|(out, b)| {
                b.iter()
                    .enumerate()
                    .map(|(j, &bj)| bj * self.output_std.scales[out] / self.input_std.scales[j])
                    .collect()
            })
            .collect()
    }

    /// Per-output intercepts in original units.
    pub fn intercepts(&self) -> Vec<f64> {
        let w = self.coefficients();
        (0..self.output_stations.len())
            .map(|out| {
                self.output_std.means[out]
                    - w[out].iter().zip(&self.input_std.means).map(|(&wj, &m)| wj * m).sum::<f64>()
            })
            .collect()
    }

    /// Objective value after each sweep, per output.
    pub fn objective_traces(&self) -> &[Vec<f64>] {
        &self.objective_traces
    }

    /// Predict all outputs (original units) for one input row.
    pub fn predict_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_stations.len() {
            return Err(Error::DimensionMismatch {
                expected: self.input_stations.len(),
                got: x.len(),
            });
        }
        let z = self.input_std.apply_row(x);
        Ok((0..self.output_stations.len())
            .map(|out| {
                let zy: f64 = self.beta[out].iter().zip(&z).map(|(&b, &zv)| b * zv).sum();
                self.output_std.means[out] + self.output_std.scales[out] * zy
            })
            .collect())
    }

    /// Fill missing observation cells with predictions from the forecast
    /// row; observed cells pass through unchanged.
    pub fn impute(&self, ds: &AlignedDataset) -> Result<SeriesMatrix> {
        for st in ds.stations() {
            if !self.output_stations.contains(st) {
                return Err(Error::UnknownStation(st.clone()));
            }
        }
        if ds.stations() != self.input_stations.as_slice() {
            // inputs are positional: the forecast roster must match exactly
            return Err(Error::UnknownStation(format!(
                "expected input roster {:?}",
                self.input_stations
            )));
        }
        let out_index: Vec<usize> = ds
            .stations()
            .iter()
            .map(|st| self.output_stations.iter().position(|o| o == st).unwrap())
            .collect();
        let mut fills = Vec::new();
        for t in 0..ds.n_dates() {
            let missing: Vec<usize> =
                (0..ds.n_stations()).filter(|&s| ds.observed().value(t, s).is_none()).collect();
            if missing.is_empty() {
                continue;
            }
            let x: Vec<f64> =
                (0..ds.n_stations()).map(|s| ds.forecast().value(t, s).unwrap()).collect();
            let pred = self.predict_row(&x)?;
            for s in missing {
                fills.push((t, s, pred[out_index[s]]));
            }
        }
        ds.observed().with_filled(&fills)
    }

    /// Structured dump: coefficient matrix plus standardization parameters.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Dump<'a> {
            model: &'static str,
            lambda: f64,
            alpha: f64,
            l1_weight: f64,
            l2_weight: f64,
            converged: bool,
            input_stations: &'a [String],
            output_stations: &'a [String],
            standardized_beta: &'a [Vec<f64>],
            coefficients: Vec<Vec<f64>>,
            intercepts: Vec<f64>,
            input_standardizer: &'a Standardizer,
            output_standardizer: &'a Standardizer,
        }
        let (l1, l2) = self.penalty_split();
        serde_json::to_string_pretty(&Dump {
            model: "elastic-net",
            lambda: self.lambda,
            alpha: self.alpha,
            l1_weight: l1,
            l2_weight: l2,
            converged: self.converged,
            input_stations: &self.input_stations,
            output_stations: &self.output_stations,
            standardized_beta: &self.beta,
            coefficients: self.coefficients(),
            intercepts: self.intercepts(),
            input_standardizer: &self.input_std,
            output_standardizer: &self.output_std,
        })
        .expect("dump serializes")
    }
}

/// How cross-validation folds are cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FoldScheme {
    /// Contiguous blocks of rows; respects temporal structure. The default.
    #[default]
    ContiguousBlocks,
    /// Row i goes to fold `i mod folds`.
    Interleaved,
}

/// Cross-validation grid specification.
#[derive(Debug, Clone)]
pub struct CvSpec {
    pub folds: usize,
    pub fold_scheme: FoldScheme,
    pub alpha_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CvSpec {
    fn default() -> Self {
        Self {
            folds: 5,
            fold_scheme: FoldScheme::ContiguousBlocks,
            alpha_grid: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            lambda_grid: log_spaced(1e-4, 1e2, 20),
            tol: 1e-6,
            max_iter: 10_000,
        }
    }
}

impl CvSpec {
    fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::InvalidConfig(format!("folds must be ≥ 2, got {}", self.folds)));
        }
        if self.alpha_grid.is_empty() || self.lambda_grid.is_empty() {
            return Err(Error::InvalidConfig("empty CV grid".into()));
        }
        if self.alpha_grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::InvalidConfig("alpha grid values must lie in [0, 1]".into()));
        }
        if self.lambda_grid.iter().any(|l| !(*l > 0.0)) {
            return Err(Error::InvalidConfig("lambda grid values must be positive".into()));
        }
        Ok(())
    }
}

/// Complete (forecast row, observation row) pairs of a training dataset.
fn complete_training_rows(train: &AlignedDataset) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let rows = train.complete_row_indices();
    if rows.len() < 2 {
        return Err(Error::NoCompleteRows);
    }
    let x_rows = rows
        .iter()
        .map(|&t| (0..train.n_stations()).map(|s| train.forecast().value(t, s).unwrap()).collect())
        .collect();
    let y_rows = rows
        .iter()
        .map(|&t| (0..train.n_stations()).map(|s| train.observed().value(t, s).unwrap()).collect())
        .collect();
    Ok((x_rows, y_rows))
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

/// One evaluated grid point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CvScore {
    pub lambda: f64,
    pub alpha: f64,
    pub mean_rmse: f64,
}

/// Grid search outcome: the selected pair and the full score table.
#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub lambda: f64,
    pub alpha: f64,
    pub scores: Vec<CvScore>,
}

/// Cross-validate the diagonal (univariate-per-station) variant: each
/// output sees only its own station's input column, and the grid scores are
/// averaged across stations so one shared (lambda, alpha) pair is selected.
pub fn cross_validate_univariate(
    x_rows: &[Vec<f64>],
    y_rows: &[Vec<f64>],
    spec: &CvSpec,
) -> Result<CvOutcome> {
    let q = y_rows.first().map(|r| r.len()).unwrap_or(0);
    if q == 0 || x_rows.first().map(|r| r.len()) != Some(q) {
        return Err(Error::InvalidConfig(
            "univariate variant needs matching input/output rosters".into(),
        ));
    }
    let mut mean_scores: Vec<CvScore> = Vec::new();
    for s in 0..q {
        let xs: Vec<Vec<f64>> = x_rows.iter().map(|r| vec![r[s]]).collect();
        let ys: Vec<Vec<f64>> = y_rows.iter().map(|r| vec![r[s]]).collect();
        let out = cross_validate(&xs, &ys, spec)?;
        if s == 0 {
            mean_scores = out.scores;
        } else {
            for (acc, sc) in mean_scores.iter_mut().zip(&out.scores) {
                acc.mean_rmse += sc.mean_rmse;
            }
        }
    }
    for sc in &mut mean_scores {
        sc.mean_rmse /= q as f64;
    }
    let mut best = mean_scores[0];
    for s in &mean_scores[1..] {
        let better = s.mean_rmse < best.mean_rmse
            || (s.mean_rmse == best.mean_rmse
                && (s.lambda > best.lambda || (s.lambda == best.lambda && s.alpha > best.alpha)));
        if better {
            best = *s;
        }
    }
    Ok(CvOutcome { lambda: best.lambda, alpha: best.alpha, scores: mean_scores })
}

/// Pick the (lambda, alpha) pair minimizing mean held-out RMSE over folds;
/// exact ties go to the larger lambda (then the larger alpha).
pub fn cross_validate(
    x_rows: &[Vec<f64>],
    y_rows: &[Vec<f64>],
    spec: &CvSpec,
) -> Result<CvOutcome> {
    spec.validate()?;
    let n = x_rows.len();
    if n != y_rows.len() {
        return Err(Error::LengthMismatch { left: n, right: y_rows.len() });
    }
    if n < spec.folds {
        return Err(Error::InsufficientRows { rows: n, folds: spec.folds });
    }

    let fold_of: Vec<usize> = match spec.fold_scheme {
        FoldScheme::ContiguousBlocks => (0..n).map(|i| i * spec.folds / n).collect(),
        FoldScheme::Interleaved => (0..n).map(|i| i % spec.folds).collect(),
    };
    for f in 0..spec.folds {
        let held = fold_of.iter().filter(|&&x| x == f).count();
        if held == 0 || n - held < 2 {
            return Err(Error::InsufficientRows { rows: n, folds: spec.folds });
        }
    }

    let p = x_rows[0].len();
    let q = y_rows[0].len();
    let names_in: Vec<String> = (0..p).map(|j| format!("in{j}")).collect();
    let names_out: Vec<String> = (0..q).map(|j| format!("out{j}")).collect();

    let mut scores = Vec::with_capacity(spec.alpha_grid.len() * spec.lambda_grid.len());
    for &alpha in &spec.alpha_grid {
        for &lambda in &spec.lambda_grid {
            let mut fold_rmse_sum = 0.0;
            for f in 0..spec.folds {
                let train_x: Vec<Vec<f64>> = (0..n)
                    .filter(|&i| fold_of[i] != f)
                    .map(|i| x_rows[i].clone())
                    .collect();
                let train_y: Vec<Vec<f64>> = (0..n)
                    .filter(|&i| fold_of[i] != f)
                    .map(|i| y_rows[i].clone())
                    .collect();
                let model = ElasticNetModel::fit_rows(
                    &train_x,
                    &train_y,
                    names_in.clone(),
                    names_out.clone(),
                    FitOptions { lambda, alpha, tol: spec.tol, max_iter: spec.max_iter },
                )?;
                let mut se = 0.0;
                let mut count = 0usize;
                for i in (0..n).filter(|&i| fold_of[i] == f) {
                    let pred = model.predict_row(&x_rows[i])?;
                    for (yh, &y) in pred.iter().zip(&y_rows[i]) {
                        se += (yh - y) * (yh - y);
                        count += 1;
                    }
                }
                fold_rmse_sum += (se / count as f64).sqrt();
            }
            scores.push(CvScore { lambda, alpha, mean_rmse: fold_rmse_sum / spec.folds as f64 });
        }
    }

    let mut best = scores[0];
    for s in &scores[1..] {
        let better = s.mean_rmse < best.mean_rmse
            || (s.mean_rmse == best.mean_rmse
                && (s.lambda > best.lambda || (s.lambda == best.lambda && s.alpha > best.alpha)));
        if better {
            best = *s;
        }
    }
    Ok(CvOutcome { lambda: best.lambda, alpha: best.alpha, scores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Standardize a vector to zero mean, unit population sd.
    fn standardize(v: &[f64]) -> Vec<f64> {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let sd = (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt();
        v.iter().map(|x| (x - m) / sd).collect()
    }

    fn univariate_fit(x: &[f64], y: &[f64], lambda: f64, alpha: f64) -> f64 {
        let n = x.len() as f64;
        let gram = [x.iter().map(|v| v * v).sum::<f64>() / n];
        let corr = [x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / n];
        let y_sq = y.iter().map(|v| v * v).sum::<f64>() / n;
        coordinate_descent(&gram, &corr, y_sq, lambda, alpha, 1e-12, 1000).beta[0]
    }

    #[test]
    fn univariate_matches_soft_threshold_closed_form() {
        let mut rng = Rng::with_seed(4);
        for _ in 0..3 {
            let n = 50;
            let x = standardize(&(0..n).map(|_| rng.normal()).collect::<Vec<_>>());
            let y = standardize(
                &x.iter().map(|&v| 0.8 * v + 0.4 * rng.normal()).collect::<Vec<_>>(),
            );
            let rho = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / n as f64;
            for (lambda, alpha) in [(0.5, 0.5), (0.1, 1.0), (1.0, 0.25)] {
                let expected = soft_threshold(rho, lambda * alpha) / (1.0 + lambda * (1.0 - alpha));
                let got = univariate_fit(&x, &y, lambda, alpha);
                assert!(close(got, expected, 1e-10), "λ={lambda} α={alpha}: {got} vs {expected}");
            }
        }
    }

    #[test]
    fn full_l1_shrinkage_kills_coefficient() {
        let mut rng = Rng::with_seed(6);
        let n = 80;
        let x = standardize(&(0..n).map(|_| rng.normal()).collect::<Vec<_>>());
        let y = standardize(&x.iter().map(|&v| 0.5 * v + rng.normal()).collect::<Vec<_>>());
        let rho = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / n as f64;
        assert_eq!(univariate_fit(&x, &y, rho.abs() + 1e-9, 1.0), 0.0);
        assert_eq!(univariate_fit(&x, &y, rho.abs() * 2.0, 1.0), 0.0);
    }

    #[test]
    fn zero_penalty_recovers_affine_map() {
        // y = 2·x exactly, one input and output, lambda = 0
        let x_rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 + 1.0]).collect();
        let y_rows: Vec<Vec<f64>> = x_rows.iter().map(|r| vec![2.0 * r[0]]).collect();
        let model = ElasticNetModel::fit_rows(
            &x_rows,
            &y_rows,
            vec!["A".into()],
            vec!["A".into()],
            FitOptions { lambda: 0.0, ..Default::default() },
        )
        .unwrap();
        assert!(close(model.coefficients()[0][0], 2.0, 1e-9));
        assert!(close(model.intercepts()[0], 0.0, 1e-9));
    }

    #[test]
    fn objective_is_non_increasing_per_sweep() {
        let mut rng = Rng::with_seed(8);
        for _ in 0..50 {
            let n = 30;
            let p = 2 + rng.next_below(5) as usize;
            let x_rows: Vec<Vec<f64>> =
                (0..n).map(|_| (0..p).map(|_| rng.normal()).collect()).collect();
            let y_rows: Vec<Vec<f64>> = x_rows
                .iter()
                .map(|r| vec![r.iter().sum::<f64>() + 0.5 * rng.normal()])
                .collect();
            let lambda = rng.uniform(0.0, 2.0);
            let alpha = rng.uniform(0.0, 1.0);
            let model = ElasticNetModel::fit_rows(
                &x_rows,
                &y_rows,
                (0..p).map(|j| format!("in{j}")).collect(),
                vec!["out".into()],
                FitOptions { lambda, alpha, tol: 1e-10, max_iter: 200 },
            )
            .unwrap();
            for trace in model.objective_traces() {
                for w in trace.windows(2) {
                    assert!(
                        w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0),
                        "objective increased: {} -> {}",
                        w[0],
                        w[1]
                    );
                }
            }
        }
    }

    #[test]
    fn kkt_conditions_hold_at_convergence() {
        let mut rng = Rng::with_seed(10);
        for _ in 0..20 {
            let n = 60;
            let p = 4;
            let x_rows: Vec<Vec<f64>> =
                (0..n).map(|_| (0..p).map(|_| rng.normal()).collect()).collect();
            let y: Vec<f64> = x_rows
                .iter()
                .map(|r| 2.0 * r[0] - 1.0 * r[2] + 0.3 * rng.normal())
                .collect();
            let zx: Vec<Vec<f64>> = {
                let std = Standardizer::fit(&x_rows);
                x_rows.iter().map(|r| std.apply_row(r)).collect()
            };
            let zy = standardize(&y);
            let mut gram = vec![0.0; p * p];
            let mut corr = vec![0.0; p];
            for (row, &yv) in zx.iter().zip(&zy) {
                for j in 0..p {
                    corr[j] += row[j] * yv;
                    for k in 0..p {
                        gram[j * p + k] += row[j] * row[k];
                    }
                }
            }
            for v in &mut gram {
                *v /= n as f64;
            }
            for v in &mut corr {
                *v /= n as f64;
            }
            let lambda = rng.uniform(0.01, 1.0);
            let alpha = rng.uniform(0.0, 1.0);
            let tol = 1e-10;
            let fit = coordinate_descent(&gram, &corr, 1.0, lambda, alpha, tol, 5000);
            assert!(fit.converged);
            for j in 0..p {
                let mut rho = corr[j];
                for k in 0..p {
                    if k != j {
                        rho -= gram[j * p + k] * fit.beta[k];
                    }
                }
                let denom = gram[j * p + j] + lambda * (1.0 - alpha);
                let b = fit.beta[j];
                if b == 0.0 {
                    assert!(rho.abs() <= lambda * alpha + 1e-8, "|rho|={} λα={}", rho.abs(), lambda * alpha);
                } else {
                    let stationarity = rho - b * denom - b.signum() * lambda * alpha;
                    assert!(stationarity.abs() <= 1e-6, "stationarity={stationarity}");
                }
            }
        }
    }

    #[test]
    fn huge_penalty_zeroes_every_coefficient() {
        let mut rng = Rng::with_seed(12);
        let x_rows: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.normal(), rng.normal()]).collect();
        let y_rows: Vec<Vec<f64>> =
            x_rows.iter().map(|r| vec![3.0 * r[0] + r[1], r[0] - r[1]]).collect();
        let model = ElasticNetModel::fit_rows(
            &x_rows,
            &y_rows,
            vec!["a".into(), "b".into()],
            vec!["c".into(), "d".into()],
            FitOptions { lambda: 1e9, alpha: 0.5, ..Default::default() },
        )
        .unwrap();
        for b in model.standardized_coefficients() {
            assert!(b.iter().all(|&v| v == 0.0));
        }
        // intercept-only prediction = per-output training mean
        let pred = model.predict_row(&[0.0, 0.0]).unwrap();
        let mean0 = y_rows.iter().map(|r| r[0]).sum::<f64>() / 40.0;
        assert!(close(pred[0], mean0, 1e-12));
    }

    #[test]
    fn input_scaling_does_not_change_predictions() {
        let mut rng = Rng::with_seed(14);
        let x_rows: Vec<Vec<f64>> =
            (0..50).map(|_| vec![rng.uniform(1.0, 5.0), rng.uniform(-2.0, 2.0)]).collect();
        let y_rows: Vec<Vec<f64>> =
            x_rows.iter().map(|r| vec![4.0 * r[0] - 2.0 * r[1] + 0.1 * rng.normal()]).collect();
        let opts = FitOptions { lambda: 0.3, alpha: 0.5, ..Default::default() };
        let m1 = ElasticNetModel::fit_rows(
            &x_rows,
            &y_rows,
            vec!["a".into(), "b".into()],
            vec!["y".into()],
            opts,
        )
        .unwrap();
        let c = 3.7;
        let x_scaled: Vec<Vec<f64>> =
            x_rows.iter().map(|r| r.iter().map(|&v| c * v).collect()).collect();
        let m2 = ElasticNetModel::fit_rows(
            &x_scaled,
            &y_rows,
            vec!["a".into(), "b".into()],
            vec!["y".into()],
            opts,
        )
        .unwrap();
        for r in &x_rows {
            let p1 = m1.predict_row(r).unwrap()[0];
            let scaled: Vec<f64> = r.iter().map(|&v| c * v).collect();
            let p2 = m2.predict_row(&scaled).unwrap()[0];
            assert!(close(p1, p2, 1e-9), "{p1} vs {p2}");
        }
    }

    #[test]
    fn cv_single_grid_point_is_returned() {
        let mut rng = Rng::with_seed(16);
        let x_rows: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.normal()]).collect();
        let y_rows: Vec<Vec<f64>> = x_rows.iter().map(|r| vec![r[0]]).collect();
        let spec = CvSpec {
            alpha_grid: vec![0.5],
            lambda_grid: vec![0.123],
            ..Default::default()
        };
        let out = cross_validate(&x_rows, &y_rows, &spec).unwrap();
        assert_eq!(out.lambda, 0.123);
        assert_eq!(out.alpha, 0.5);
        assert_eq!(out.scores.len(), 1);
    }

    #[test]
    fn cv_prefers_small_penalty_on_noise_free_data() {
        let mut rng = Rng::with_seed(18);
        let x_rows: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.uniform(0.0, 10.0)]).collect();
        let y_rows: Vec<Vec<f64>> = x_rows.iter().map(|r| vec![5.0 * r[0] + 1.0]).collect();
        let spec = CvSpec {
            alpha_grid: vec![0.5],
            lambda_grid: vec![1e-6, 1e3],
            ..Default::default()
        };
        let out = cross_validate(&x_rows, &y_rows, &spec).unwrap();
        assert_eq!(out.lambda, 1e-6);
    }

    #[test]
    fn cv_selection_minimizes_the_reported_table() {
        let mut rng = Rng::with_seed(20);
        let n = 60;
        let p = 5;
        let x_rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..p).map(|_| rng.normal()).collect()).collect();
        // sparse truth: only features 0 and 3 matter
        let y_rows: Vec<Vec<f64>> = x_rows
            .iter()
            .map(|r| vec![3.0 * r[0] - 2.0 * r[3] + 0.5 * rng.normal()])
            .collect();
        let spec = CvSpec {
            folds: 5,
            alpha_grid: vec![0.25, 0.75],
            lambda_grid: log_spaced(1e-3, 10.0, 6),
            ..Default::default()
        };
        let out = cross_validate(&x_rows, &y_rows, &spec).unwrap();
        let selected = out
            .scores
            .iter()
            .find(|s| s.lambda == out.lambda && s.alpha == out.alpha)
            .unwrap();
        for s in &out.scores {
            assert!(selected.mean_rmse <= s.mean_rmse + 1e-15);
        }
    }

    #[test]
    fn cv_rejects_too_few_rows() {
        let x_rows: Vec<Vec<f64>> = (0..3).map(|i| vec![i as f64]).collect();
        let y_rows = x_rows.clone();
        let spec = CvSpec { folds: 5, ..Default::default() };
        assert!(matches!(
            cross_validate(&x_rows, &y_rows, &spec),
            Err(Error::InsufficientRows { .. })
        ));
    }

    #[test]
    fn identity_model_fills_with_forecast() {
        use crate::date::Date;
        use crate::series::{AlignedDataset, SeriesMatrix};
        let d0 = Date::parse_iso("2021-01-01").unwrap();
        let n = 30usize;
        let dates: Vec<Date> = (0..n).map(|i| d0.add_days(i as i64)).collect();
        let mut rng = Rng::with_seed(22);
        let fc_vals: Vec<f64> = (0..n).map(|_| rng.uniform(1.0, 9.0)).collect();
        let mut mask = vec![true; n];
        mask[4] = false;
        mask[17] = false;
        let obs = SeriesMatrix::new(dates.clone(), vec!["A".into()], fc_vals.clone(), mask).unwrap();
        let fc = SeriesMatrix::complete(dates, vec!["A".into()], fc_vals.clone()).unwrap();
        let ds = AlignedDataset::new(obs, fc).unwrap();
        // fit on itself: obs == forecast on observed rows → identity map
        let model = ElasticNetModel::fit(&ds, FitOptions { lambda: 0.0, ..Default::default() })
            .unwrap();
        let filled = model.impute(&ds).unwrap();
        assert!(close(filled.value(4, 0).unwrap(), fc_vals[4], 1e-8));
        assert!(close(filled.value(17, 0).unwrap(), fc_vals[17], 1e-8));
    }

    #[test]
    fn univariate_variant_has_diagonal_coefficients() {
        use crate::date::Date;
        use crate::series::{AlignedDataset, SeriesMatrix};
        let d0 = Date::parse_iso("2021-01-01").unwrap();
        let n = 60usize;
        let dates: Vec<Date> = (0..n).map(|i| d0.add_days(i as i64)).collect();
        let mut rng = Rng::with_seed(26);
        let mut fc = Vec::new();
        let mut ob = Vec::new();
        for _ in 0..n {
            let a = rng.uniform(1.0, 10.0);
            let b = rng.uniform(1.0, 10.0);
            fc.extend([a, b]);
            ob.extend([3.0 * a + 1.0, 0.5 * b + 4.0]);
        }
        let obs = SeriesMatrix::complete(dates.clone(), vec!["A".into(), "B".into()], ob).unwrap();
        let fcst = SeriesMatrix::complete(dates, vec!["A".into(), "B".into()], fc).unwrap();
        let ds = AlignedDataset::new(obs, fcst).unwrap();
        let model =
            ElasticNetModel::fit_univariate(&ds, FitOptions { lambda: 0.0, ..Default::default() })
                .unwrap();
        let coefs = model.coefficients();
        assert!(close(coefs[0][0], 3.0, 1e-8));
        assert!(close(coefs[1][1], 0.5, 1e-8));
        assert_eq!(coefs[0][1], 0.0);
        assert_eq!(coefs[1][0], 0.0);
        let pred = model.predict_row(&[2.0, 6.0]).unwrap();
        assert!(close(pred[0], 7.0, 1e-8));
        assert!(close(pred[1], 7.0, 1e-8));
    }

    #[test]
    fn univariate_cv_averages_station_tables() {
        let mut rng = Rng::with_seed(28);
        let x_rows: Vec<Vec<f64>> =
            (0..40).map(|_| vec![rng.uniform(0.0, 5.0), rng.uniform(0.0, 5.0)]).collect();
        let y_rows: Vec<Vec<f64>> =
            x_rows.iter().map(|r| vec![2.0 * r[0], 3.0 * r[1] + 1.0]).collect();
        let spec = CvSpec {
            alpha_grid: vec![0.5],
            lambda_grid: vec![1e-6, 10.0],
            ..Default::default()
        };
        let out = cross_validate_univariate(&x_rows, &y_rows, &spec).unwrap();
        assert_eq!(out.lambda, 1e-6);
        assert_eq!(out.scores.len(), 2);
    }

    #[test]
    fn fitted_affine_relation_is_reproduced() {
        use crate::date::Date;
        use crate::series::{AlignedDataset, SeriesMatrix};
        let d0 = Date::parse_iso("2021-01-01").unwrap();
        let n = 50usize;
        let dates: Vec<Date> = (0..n).map(|i| d0.add_days(i as i64)).collect();
        let mut rng = Rng::with_seed(24);
        let fc_vals: Vec<f64> = (0..n).map(|_| rng.uniform(2.0, 20.0)).collect();
        let obs_vals: Vec<f64> = fc_vals.iter().map(|&x| 5.0 * x + 10.0).collect();
        let mut mask = vec![true; n];
        for t in [3usize, 11, 29, 41] {
            mask[t] = false;
        }
        let obs = SeriesMatrix::new(dates.clone(), vec!["A".into()], obs_vals.clone(), mask).unwrap();
        let fc = SeriesMatrix::complete(dates, vec!["A".into()], fc_vals.clone()).unwrap();
        let ds = AlignedDataset::new(obs, fc).unwrap();
        let model =
            ElasticNetModel::fit(&ds, FitOptions { lambda: 0.0, ..Default::default() }).unwrap();
        let filled = model.impute(&ds).unwrap();
        for t in [3usize, 11, 29, 41] {
            let expected = 5.0 * fc_vals[t] + 10.0;
            assert!(close(filled.value(t, 0).unwrap(), expected, 1e-8));
        }
    }
}
