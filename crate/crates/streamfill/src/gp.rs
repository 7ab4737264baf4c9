//! Multi-output Gaussian process regression with exact Cholesky inference.
//!
//! All outputs share one squared-exponential kernel, one lengthscale, one
//! signal variance, and one observation-noise variance; the log-marginal
//! likelihood is summed over outputs and its analytic gradient (in
//! log-hyperparameter space) drives a small BFGS ascent. Cross-station
//! structure enters through the input vector, which holds every station's
//! forecast value.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::{derive_seed, Rng};
use crate::series::{AlignedDataset, SeriesMatrix};
use crate::stats::Standardizer;

/// Kernel and noise hyperparameters plus per-output prior means.
///
/// The three kernel parameters are strictly positive and are optimized in
/// log space; the prior means are fixed at the per-output training means.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GpHyperparams {
    pub lengthscale: f64,
    pub signal_variance: f64,
    pub noise_variance: f64,
    pub prior_means: Vec<f64>,
}

impl GpHyperparams {
    pub fn new(lengthscale: f64, signal_variance: f64, noise_variance: f64, prior_means: Vec<f64>) -> Result<Self> {
        if !(lengthscale > 0.0 && signal_variance > 0.0 && noise_variance > 0.0) {
            return Err(Error::InvalidConfig(
                "lengthscale, signal variance, and noise variance must be positive".into(),
            ));
        }
        Ok(Self { lengthscale, signal_variance, noise_variance, prior_means })
    }

    fn to_log(&self) -> [f64; 3] {
        [self.lengthscale.ln(), self.signal_variance.ln(), self.noise_variance.ln()]
    }

    fn with_log(&self, logp: &[f64; 3]) -> Self {
        Self {
            lengthscale: logp[0].exp(),
            signal_variance: logp[1].exp(),
            noise_variance: logp[2].exp(),
            prior_means: self.prior_means.clone(),
        }
    }
}

/// Squared-exponential covariance between two input rows:
/// `signal_variance · exp(−‖xi − xj‖² / (2·lengthscale²))`.
pub fn se_kernel(xi: &[f64], xj: &[f64], hyper: &GpHyperparams) -> f64 {
    debug_assert_eq!(xi.len(), xj.len());
    let d2: f64 = xi.iter().zip(xj).map(|(&a, &b)| (a - b) * (a - b)).sum();
    hyper.signal_variance * (-d2 / (2.0 * hyper.lengthscale * hyper.lengthscale)).exp()
}

/// Squared-distance matrix of the training inputs (row-major n×n).
fn squared_distances(inputs: &[Vec<f64>]) -> Vec<f64> {
    let n = inputs.len();
    let mut d2 = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v: f64 =
                inputs[i].iter().zip(&inputs[j]).map(|(&a, &b)| (a - b) * (a - b)).sum();
            d2[i * n + j] = v;
            d2[j * n + i] = v;
        }
    }
    d2
}

/// Kernel matrix plus noise: `A = K + noise·I`, from precomputed squared
/// distances.
fn build_covariance(d2: &[f64], n: usize, hyper: &GpHyperparams) -> Vec<f64> {
    let inv_two_ell2 = 1.0 / (2.0 * hyper.lengthscale * hyper.lengthscale);
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = hyper.signal_variance * (-d2[i * n + j] * inv_two_ell2).exp();
        }
        a[i * n + i] += hyper.noise_variance;
    }
    a
}

/// Factor `A (+ jitter·I)` with an escalating jitter ladder: nothing, then
/// `1e-10·scale` growing ×10 up to `1e-4·scale`, where `scale` is the mean
/// diagonal. Returns the factor and the jitter that was needed.
fn factor_with_jitter(a: &[f64], n: usize) -> Result<(Vec<f64>, f64)> {
    let scale = (0..n).map(|i| a[i * n + i]).sum::<f64>() / n as f64;
    if !scale.is_finite() || scale <= 0.0 {
        return Err(Error::CholeskyFailure);
    }
    let mut jitter = 0.0;
    loop {
        let mut l = a.to_vec();
        if jitter > 0.0 {
            for i in 0..n {
                l[i * n + i] += jitter;
            }
        }
        if linalg::cholesky_in_place(&mut l, n).is_ok() {
            return Ok((l, jitter));
        }
        jitter = if jitter == 0.0 { 1e-10 * scale } else { jitter * 10.0 };
        if jitter > 1e-4 * scale {
            return Err(Error::CholeskyFailure);
        }
    }
}

/// Log-marginal likelihood of the training data under the shared-kernel
/// multi-output model, with its analytic gradient in log-hyperparameter
/// space `(log lengthscale, log signal variance, log noise variance)`.
///
/// `targets` is row-major n×q; the prior means in `hyper` are subtracted
/// per output before the quadratic form.
pub fn log_marginal_likelihood(
    hyper: &GpHyperparams,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
) -> Result<(f64, [f64; 3])> {
    let n = inputs.len();
    if n == 0 || targets.len() != n {
        return Err(Error::LengthMismatch { left: n, right: targets.len() });
    }
    let q = targets[0].len();
    if hyper.prior_means.len() != q {
        return Err(Error::DimensionMismatch { expected: q, got: hyper.prior_means.len() });
    }
    let d2 = squared_distances(inputs);
    lml_with_distances(hyper, &d2, n, targets)
}

/// The worker behind [`log_marginal_likelihood`]; reuses a precomputed
/// squared-distance matrix so the optimizer pays for it once.
fn lml_with_distances(
    hyper: &GpHyperparams,
    d2: &[f64],
    n: usize,
    targets: &[Vec<f64>],
) -> Result<(f64, [f64; 3])> {
    let q = targets[0].len();
    let a = build_covariance(d2, n, hyper);
    let (l, _jitter) = factor_with_jitter(&a, n)?;
    let log_det = linalg::log_det_from_cholesky(&l, n);

    // alphas[o] = A⁻¹ (y_o − μ_o); ln 2π = ln τ
    let ln_two_pi = std::f64::consts::TAU.ln();
    let mut alphas = vec![vec![0.0; n]; q];
    let mut value = -0.5 * q as f64 * (log_det + n as f64 * ln_two_pi);
    for o in 0..q {
        let mut y: Vec<f64> = (0..n).map(|i| targets[i][o] - hyper.prior_means[o]).collect();
        let quad: f64 = {
            let centered = y.clone();
            linalg::solve_spd(&l, n, &mut y);
            centered.iter().zip(&y).map(|(&c, &a)| c * a).sum()
        };
        value -= 0.5 * quad;
        alphas[o] = y;
    }

    // gradient: ½ tr((M − q·A⁻¹) · dA/dθ) with M = Σ_o α_o α_oᵀ
    let inv = linalg::inverse_from_cholesky(&l, n);
    let inv_two_ell2 = 1.0 / (2.0 * hyper.lengthscale * hyper.lengthscale);
    let ell2 = hyper.lengthscale * hyper.lengthscale;
    let mut grad = [0.0f64; 3];
    for i in 0..n {
        for j in 0..n {
            let idx = i * n + j;
            let k_ij = hyper.signal_variance * (-d2[idx] * inv_two_ell2).exp();
            let mut m_ij = 0.0;
            for alpha in &alphas {
                m_ij += alpha[i] * alpha[j];
            }
            let w = 0.5 * (m_ij - q as f64 * inv[idx]);
            grad[0] += w * k_ij * d2[idx] / ell2; // d/d log lengthscale
            grad[1] += w * k_ij; // d/d log signal variance
            if i == j {
                grad[2] += w * hyper.noise_variance; // d/d log noise variance
            }
        }
    }
    Ok((value, grad))
}

/// Fit options for the hyperparameter search.
#[derive(Debug, Clone, Copy)]
pub struct GpFitOptions {
    /// Seeded optimizer restarts beyond the default initialization.
    pub restarts: usize,
    pub seed: u64,
    /// BFGS iteration cap per restart.
    pub max_iters: usize,
    /// Infinity-norm gradient tolerance.
    pub grad_tol: f64,
}

impl Default for GpFitOptions {
    fn default() -> Self {
        Self { restarts: 3, seed: 0, max_iters: 120, grad_tol: 1e-4 }
    }
}

/// Diagnostics kept from a fit.
#[derive(Debug, Clone, Serialize)]
pub struct GpFitDiagnostics {
    pub final_lml: f64,
    /// Best likelihood reached by each restart.
    pub restart_lml: Vec<f64>,
    /// Jitter added to factor the final covariance (0 when none needed).
    pub jitter: f64,
}

/// A fitted GP on explicit input rows: kernel hyperparameters, the training
/// set, the Cholesky factor of the noisy covariance, and the per-output
/// solve weights.
#[derive(Debug, Clone)]
pub struct GpRegressor {
    hyper: GpHyperparams,
    inputs: Vec<Vec<f64>>,
    chol: Vec<f64>,
    /// weights[o] = (K + noise·I)⁻¹ (y_o − μ_o)
    weights: Vec<Vec<f64>>,
    diagnostics: GpFitDiagnostics,
}

/// Posterior predictive mean and variance at one input.
#[derive(Debug, Clone, PartialEq)]
pub struct GpPrediction {
    pub means: Vec<f64>,
    /// Shared across outputs — the kernel is shared, so the predictive
    /// variance is too.
    pub variances: Vec<f64>,
}

impl GpRegressor {
    /// Build the exact posterior for fixed hyperparameters.
    pub fn with_hyperparams(
        inputs: Vec<Vec<f64>>,
        targets: &[Vec<f64>],
        hyper: GpHyperparams,
    ) -> Result<Self> {
        let n = inputs.len();
        if n == 0 || targets.len() != n {
            return Err(Error::LengthMismatch { left: n, right: targets.len() });
        }
        let q = targets[0].len();
        if hyper.prior_means.len() != q {
            return Err(Error::DimensionMismatch { expected: q, got: hyper.prior_means.len() });
        }
        let d2 = squared_distances(&inputs);
        let a = build_covariance(&d2, n, &hyper);
        let (chol, jitter) = factor_with_jitter(&a, n)?;
        let mut weights = Vec::with_capacity(q);
        for o in 0..q {
            let mut y: Vec<f64> = (0..n).map(|i| targets[i][o] - hyper.prior_means[o]).collect();
            linalg::solve_spd(&chol, n, &mut y);
            weights.push(y);
        }
        let (final_lml, _) = lml_with_distances(&hyper, &d2, n, targets)?;
        Ok(Self {
            hyper,
            inputs,
            chol,
            weights,
            diagnostics: GpFitDiagnostics { final_lml, restart_lml: Vec::new(), jitter },
        })
    }

    /// Maximize the log-marginal likelihood over the three kernel
    /// hyperparameters from seeded restarts, then build the posterior at
    /// the best point found.
    ///
    /// Initialization: lengthscale 1, signal variance = mean target
    /// variance, noise variance = a tenth of it; each restart perturbs the
    /// log-parameters uniformly in ±0.7.
    pub fn fit(inputs: Vec<Vec<f64>>, targets: &[Vec<f64>], opts: GpFitOptions) -> Result<Self> {
        let n = inputs.len();
        if n < 2 || targets.len() != n {
            return Err(Error::NoCompleteRows);
        }
        let q = targets[0].len();
        let prior_means: Vec<f64> =
            (0..q).map(|o| targets.iter().map(|r| r[o]).sum::<f64>() / n as f64).collect();
        let target_var = (0..q)
            .map(|o| {
                targets.iter().map(|r| (r[o] - prior_means[o]).powi(2)).sum::<f64>() / n as f64
            })
            .sum::<f64>()
            / q as f64;
        let target_var = if target_var > 0.0 { target_var } else { 1.0 };
        let base = GpHyperparams::new(1.0, target_var, 0.1 * target_var, prior_means)?;

        let d2 = squared_distances(&inputs);
        let eval = |logp: &[f64; 3]| -> Option<(f64, [f64; 3])> {
            // trust region in log space: reject points whose exp would be
            // numerically meaningless, so line searches back off instead
            if logp.iter().any(|v| !v.is_finite() || v.abs() > 30.0) {
                return None;
            }
            let h = base.with_log(logp);
            lml_with_distances(&h, &d2, n, targets).ok()
        };

        let mut best: Option<([f64; 3], f64)> = None;
        let mut restart_lml = Vec::new();
        for r in 0..opts.restarts.max(1) {
            let mut start = base.to_log();
            if r > 0 {
                let mut rng = Rng::with_seed(derive_seed(opts.seed, &[r as u64]));
                for v in &mut start {
                    *v += rng.uniform(-0.7, 0.7);
                }
            }
            if let Some((point, value)) = maximize_bfgs(&eval, start, opts.max_iters, opts.grad_tol)
            {
                restart_lml.push(value);
                if best.map(|(_, bv)| value > bv).unwrap_or(true) {
                    best = Some((point, value));
                }
            } else {
                restart_lml.push(f64::NEG_INFINITY);
            }
        }
        let (point, _) = best.ok_or(Error::CholeskyFailure)?;
        let hyper = base.with_log(&point);
        let mut model = Self::with_hyperparams(inputs, targets, hyper)?;
        model.diagnostics.restart_lml = restart_lml;
        Ok(model)
    }

    pub fn hyperparams(&self) -> &GpHyperparams {
        &self.hyper
    }

    pub fn diagnostics(&self) -> &GpFitDiagnostics {
        &self.diagnostics
    }

    pub fn n_training_rows(&self) -> usize {
        self.inputs.len()
    }

    /// Posterior mean and variance at a test input.
    pub fn predict(&self, x_star: &[f64]) -> Result<GpPrediction> {
        let n = self.inputs.len();
        let dim = self.inputs[0].len();
        if x_star.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: x_star.len() });
        }
        let k_star: Vec<f64> =
            self.inputs.iter().map(|xi| se_kernel(xi, x_star, &self.hyper)).collect();
        let q = self.weights.len();
        let means: Vec<f64> = (0..q)
            .map(|o| {
                self.hyper.prior_means[o]
                    + k_star.iter().zip(&self.weights[o]).map(|(&k, &w)| k * w).sum::<f64>()
            })
            .collect();
        let mut v = k_star;
        linalg::solve_lower(&self.chol, n, &mut v);
        let mut var = self.hyper.signal_variance - v.iter().map(|x| x * x).sum::<f64>();
        if var < 0.0 {
            debug_assert!(
                var > -1e-8 * self.hyper.signal_variance,
                "variance clip too large: {var}"
            );
            var = 0.0;
        }
        Ok(GpPrediction { means, variances: vec![var; q] })
    }
}

/// BFGS ascent with Armijo backtracking on the negated objective.
/// `eval` returns `None` where the objective is undefined (e.g. a
/// factorization failure at extreme hyperparameters); such points are
/// simply rejected by the line search. Returns the best point and value,
/// or `None` if even the start point is undefined.
fn maximize_bfgs(
    eval: &dyn Fn(&[f64; 3]) -> Option<(f64, [f64; 3])>,
    start: [f64; 3],
    max_iters: usize,
    grad_tol: f64,
) -> Option<([f64; 3], f64)> {
    let neg = |p: &[f64; 3]| eval(p).map(|(v, g)| (-v, [-g[0], -g[1], -g[2]]));
    let mut x = start;
    let (mut fx, mut g) = neg(&x)?;
    // inverse Hessian approximation, row-major 3×3
    let mut h = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
    for _ in 0..max_iters {
        let gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gnorm < grad_tol {
            break;
        }
        // direction d = −H g
        let mut d = [0.0f64; 3];
        for i in 0..3 {
            for j in 0..3 {
                d[i] -= h[i * 3 + j] * g[j];
            }
        }
        let mut slope: f64 = d.iter().zip(&g).map(|(&di, &gi)| di * gi).sum();
        if slope >= 0.0 {
            // not a descent direction: reset to steepest descent
            h = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
            for i in 0..3 {
                d[i] = -g[i];
            }
            slope = -g.iter().map(|v| v * v).sum::<f64>();
        }
        // Armijo backtracking
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let xt = [x[0] + t * d[0], x[1] + t * d[1], x[2] + t * d[2]];
            if let Some((ft, gt)) = neg(&xt) {
                if ft <= fx + 1e-4 * t * slope {
                    accepted = Some((xt, ft, gt));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else { break };
        let s = [xn[0] - x[0], xn[1] - x[1], xn[2] - x[2]];
        let y = [gn[0] - g[0], gn[1] - g[1], gn[2] - g[2]];
        let sy: f64 = s.iter().zip(&y).map(|(&a, &b)| a * b).sum();
        if sy > 1e-12 {
            // H ← (I − s yᵀ/sy) H (I − y sᵀ/sy) + s sᵀ/sy
            let rho = 1.0 / sy;
            let mut ihy = [0.0f64; 9]; // (I − ρ s yᵀ)
            for i in 0..3 {
                for j in 0..3 {
                    ihy[i * 3 + j] = if i == j { 1.0 } else { 0.0 } - rho * s[i] * y[j];
                }
            }
            let mut tmp = [0.0f64; 9];
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        tmp[i * 3 + j] += ihy[i * 3 + k] * h[k * 3 + j];
                    }
                }
            }
            let mut hn = [0.0f64; 9];
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        hn[i * 3 + j] += tmp[i * 3 + k] * ihy[j * 3 + k];
                    }
                    hn[i * 3 + j] += rho * s[i] * s[j];
                }
            }
            h = hn;
        }
        let improved = fx - fn_;
        x = xn;
        fx = fn_;
        g = gn;
        if improved.abs() < 1e-10 * (1.0 + fx.abs()) {
            break;
        }
    }
    Some((x, -fx))
}

/// A fitted GP imputer over a station roster: standardized forecast inputs,
/// per-output prior means at the training observation means, and a budgeted
/// training subsample.
#[derive(Debug, Clone)]
pub struct GpModel {
    stations: Vec<String>,
    input_std: Standardizer,
    regressor: GpRegressor,
    training_rows_used: usize,
}

/// Configuration for [`GpModel::fit`].
#[derive(Debug, Clone, Copy)]
pub struct GpConfig {
    /// Training-row budget; rows beyond it are uniformly subsampled
    /// (seeded). Exact inference is cubic in this number.
    pub budget: usize,
    pub restarts: usize,
    pub seed: u64,
    pub max_iters: usize,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self { budget: 2000, restarts: 3, seed: 0, max_iters: 120 }
    }
}

impl GpModel {
    /// Fit on the training rows where every station is observed, subsampled
    /// to the budget.
    pub fn fit(train: &AlignedDataset, cfg: GpConfig) -> Result<Self> {
        if cfg.budget < 2 {
            return Err(Error::InvalidConfig(format!("budget must be ≥ 2, got {}", cfg.budget)));
        }
        let mut rows = train.complete_row_indices();
        if rows.len() < 2 {
            return Err(Error::NoCompleteRows);
        }
        if rows.len() > cfg.budget {
            let mut rng = Rng::with_seed(derive_seed(cfg.seed, &[0x6B]));
            let picked = rng.sample_indices(rows.len(), cfg.budget);
            rows = picked.into_iter().map(|i| rows[i]).collect();
        }
        let raw_inputs: Vec<Vec<f64>> = rows
            .iter()
            .map(|&t| (0..train.n_stations()).map(|s| train.forecast().value(t, s).unwrap()).collect())
            .collect();
        let targets: Vec<Vec<f64>> = rows
            .iter()
            .map(|&t| (0..train.n_stations()).map(|s| train.observed().value(t, s).unwrap()).collect())
            .collect();
        let input_std = Standardizer::fit(&raw_inputs);
        let inputs: Vec<Vec<f64>> = raw_inputs.iter().map(|r| input_std.apply_row(r)).collect();
        let n_used = inputs.len();
        let regressor = GpRegressor::fit(
            inputs,
            &targets,
            GpFitOptions {
                restarts: cfg.restarts,
                seed: cfg.seed,
                max_iters: cfg.max_iters,
                ..Default::default()
            },
        )?;
        Ok(Self {
            stations: train.stations().to_vec(),
            input_std,
            regressor,
            training_rows_used: n_used,
        })
    }

    pub fn regressor(&self) -> &GpRegressor {
        &self.regressor
    }

    pub fn stations(&self) -> &[String] {
        &self.stations
    }

    /// Predict all stations from one raw forecast row.
    pub fn predict_row(&self, forecast_row: &[f64]) -> Result<GpPrediction> {
        if forecast_row.len() != self.stations.len() {
            return Err(Error::DimensionMismatch {
                expected: self.stations.len(),
                got: forecast_row.len(),
            });
        }
        self.regressor.predict(&self.input_std.apply_row(forecast_row))
    }

    /// Fill missing cells with posterior means; returns the filled matrix
    /// and a per-filled-cell predictive variance table.
    pub fn impute_with_variances(
        &self,
        ds: &AlignedDataset,
    ) -> Result<(SeriesMatrix, Vec<(usize, usize, f64)>)> {
        if ds.stations() != self.stations.as_slice() {
            return Err(Error::UnknownStation(format!(
                "expected station roster {:?}",
                self.stations
            )));
        }
        let mut fills = Vec::new();
        let mut variances = Vec::new();
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
                fills.push((t, s, pred.means[s]));
                variances.push((t, s, pred.variances[s]));
            }
        }
        Ok((ds.observed().with_filled(&fills)?, variances))
    }

    /// Fill missing cells with posterior means.
    pub fn impute(&self, ds: &AlignedDataset) -> Result<SeriesMatrix> {
        Ok(self.impute_with_variances(ds)?.0)
    }

    /// Diagnostic dump: optimized hyperparameters and fit likelihoods.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Dump<'a> {
            model: &'static str,
            stations: &'a [String],
            training_rows_used: usize,
            lengthscale: f64,
            signal_variance: f64,
            noise_variance: f64,
            prior_means: &'a [f64],
            diagnostics: &'a GpFitDiagnostics,
        }
        let h = self.regressor.hyperparams();
        serde_json::to_string_pretty(&Dump {
            model: "gaussian-process",
            stations: &self.stations,
            training_rows_used: self.training_rows_used,
            lengthscale: h.lengthscale,
            signal_variance: h.signal_variance,
            noise_variance: h.noise_variance,
            prior_means: &h.prior_means,
            diagnostics: self.regressor.diagnostics(),
        })
        .expect("dump serializes")
    }
}
