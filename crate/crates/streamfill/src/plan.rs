//! Experiment plans: which methods to run, at which missingness rates and
//! seeds, with what per-method settings. Plans are plain TOML documents;
//! every field has a default, so an empty file is a valid plan.

use serde::{Deserialize, Serialize};

use crate::enet::{CvSpec, FoldScheme};
use crate::error::{Error, Result};
use crate::qm::TailPolicy;
use crate::synthdata::{BiasShape, SynthConfig};

/// The imputation methods the harness knows about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    GessLookup,
    Qm,
    Enet,
    Gp,
    Knn,
    Rf,
}

impl MethodName {
    pub const ALL: [MethodName; 6] = [
        MethodName::GessLookup,
        MethodName::Qm,
        MethodName::Enet,
        MethodName::Gp,
        MethodName::Knn,
        MethodName::Rf,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MethodName::GessLookup => "gess-lookup",
            MethodName::Qm => "qm",
            MethodName::Enet => "enet",
            MethodName::Gp => "gp",
            MethodName::Knn => "knn",
            MethodName::Rf => "rf",
        }
    }
}

impl std::fmt::Display for MethodName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MethodName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gess-lookup" => Ok(MethodName::GessLookup),
            "qm" => Ok(MethodName::Qm),
            "enet" => Ok(MethodName::Enet),
            "gp" => Ok(MethodName::Gp),
            "knn" => Ok(MethodName::Knn),
            "rf" => Ok(MethodName::Rf),
            other => Err(Error::InvalidPlan(format!(
                "unknown method {other:?} (expected one of gess-lookup, qm, enet, gp, knn, rf)"
            ))),
        }
    }
}

fn default_rates() -> Vec<f64> {
    vec![0.05, 0.1, 0.2, 0.3, 0.5]
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3]
}

fn default_train_fraction() -> f64 {
    0.6
}

fn default_master_seed() -> u64 {
    42
}

fn default_methods() -> Vec<MethodName> {
    MethodName::ALL.to_vec()
}

/// Quantile-mapping settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct QmPlan {
    pub tail_policy: TailPolicy,
}

/// Elastic-net settings. The penalty pair is cross-validated over
/// `alpha_grid × lambda_grid`, the latter log-spaced.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnetPlan {
    pub folds: usize,
    pub interleaved_folds: bool,
    /// Regress each station only on its own forecast instead of on the
    /// whole roster.
    pub univariate: bool,
    pub alpha_grid: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_count: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EnetPlan {
    fn default() -> Self {
        Self {
            folds: 5,
            interleaved_folds: false,
            univariate: false,
            alpha_grid: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            lambda_min: 1e-4,
            lambda_max: 1e2,
            lambda_count: 20,
            tol: 1e-6,
            max_iter: 10_000,
        }
    }
}

impl EnetPlan {
    pub fn cv_spec(&self) -> CvSpec {
        CvSpec {
            folds: self.folds,
            fold_scheme: if self.interleaved_folds {
                FoldScheme::Interleaved
            } else {
                FoldScheme::ContiguousBlocks
            },
            alpha_grid: self.alpha_grid.clone(),
            lambda_grid: crate::enet::log_spaced(self.lambda_min, self.lambda_max, self.lambda_count),
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

/// Gaussian-process settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpPlan {
    /// Training-row budget (exact inference is cubic in it).
    pub budget: usize,
    pub restarts: usize,
    pub max_iters: usize,
}

impl Default for GpPlan {
    fn default() -> Self {
        Self { budget: 2000, restarts: 3, max_iters: 120 }
    }
}

/// KNN settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnPlan {
    pub k: usize,
}

impl Default for KnnPlan {
    fn default() -> Self {
        Self { k: 5 }
    }
}

/// Random-forest settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfPlan {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub feature_subsample: f64,
}

impl Default for RfPlan {
    fn default() -> Self {
        let d = crate::baselines::ForestConfig::default();
        Self {
            n_trees: d.n_trees,
            max_depth: d.max_depth,
            min_samples_leaf: d.min_samples_leaf,
            feature_subsample: d.feature_subsample,
        }
    }
}

impl RfPlan {
    pub fn forest_config(&self) -> crate::baselines::ForestConfig {
        crate::baselines::ForestConfig {
            n_trees: self.n_trees,
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
            feature_subsample: self.feature_subsample,
        }
    }
}

/// Synthetic-generator section, used by the `synth` subcommand. Per-station
/// parameters accept either a scalar (broadcast) or one value per station.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthPlan {
    pub n_stations: usize,
    pub n_days: usize,
    pub start_date: String,
    pub seasonal_amplitude: NumOrPerStation,
    pub seasonal_period: f64,
    pub base_flow: NumOrPerStation,
    pub anomaly_sd: NumOrPerStation,
    pub ar_coefficient: f64,
    pub cross_corr: f64,
    pub bias_gain: NumOrPerStation,
    pub bias_offset: NumOrPerStation,
    pub bias_shape: BiasShape,
    pub bias_exponent: f64,
    pub noise_sd: NumOrPerStation,
}

impl Default for SynthPlan {
    fn default() -> Self {
        Self {
            n_stations: 10,
            n_days: 365 * 15,
            start_date: "1980-01-01".into(),
            seasonal_amplitude: NumOrPerStation::Scalar(30.0),
            seasonal_period: 365.0,
            base_flow: NumOrPerStation::Scalar(60.0),
            anomaly_sd: NumOrPerStation::Scalar(15.0),
            ar_coefficient: 0.7,
            cross_corr: 0.6,
            bias_gain: NumOrPerStation::Scalar(3.0),
            bias_offset: NumOrPerStation::Scalar(20.0),
            bias_shape: BiasShape::Affine,
            bias_exponent: 1.3,
            noise_sd: NumOrPerStation::Scalar(5.0),
        }
    }
}

/// A scalar broadcast to every station, or an explicit per-station list.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumOrPerStation {
    Scalar(f64),
    PerStation(Vec<f64>),
}

impl NumOrPerStation {
    fn resolve(&self, n: usize, name: &str) -> Result<Vec<f64>> {
        match self {
            NumOrPerStation::Scalar(v) => Ok(vec![*v; n]),
            NumOrPerStation::PerStation(v) => {
                if v.len() != n {
                    return Err(Error::InvalidPlan(format!(
                        "{name} lists {} values for {n} stations",
                        v.len()
                    )));
                }
                Ok(v.clone())
            }
        }
    }
}

impl SynthPlan {
    /// Materialize into a generator configuration with the given seed.
    pub fn to_config(&self, seed: u64) -> Result<SynthConfig> {
        let n = self.n_stations;
        Ok(SynthConfig {
            n_stations: n,
            n_days: self.n_days,
            start_date: crate::date::Date::parse_iso(&self.start_date)?,
            seasonal_amplitude: self.seasonal_amplitude.resolve(n, "seasonal_amplitude")?,
            seasonal_period: self.seasonal_period,
            base_flow: self.base_flow.resolve(n, "base_flow")?,
            anomaly_sd: self.anomaly_sd.resolve(n, "anomaly_sd")?,
            ar_coefficient: self.ar_coefficient,
            cross_corr: self.cross_corr,
            bias_gain: self.bias_gain.resolve(n, "bias_gain")?,
            bias_offset: self.bias_offset.resolve(n, "bias_offset")?,
            bias_shape: self.bias_shape,
            bias_exponent: self.bias_exponent,
            noise_sd: self.noise_sd.resolve(n, "noise_sd")?,
            seed,
        })
    }
}

/// How the harness lays out simulated missingness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MaskLayout {
    /// Uniform random cells. The default.
    #[default]
    Mcar,
    /// Contiguous per-station outage blocks.
    Blocks,
}

/// A full experiment plan: grid, split, and per-method sections.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentPlan {
    /// Master seed for fits and derived streams (`--seed` overrides it).
    pub seed: u64,
    pub train_fraction: f64,
    /// Missingness rates, each in [0, 1).
    pub rates: Vec<f64>,
    /// Mask realization seeds.
    pub seeds: Vec<u64>,
    pub methods: Vec<MethodName>,
    /// Cell layout of the simulated missingness.
    pub mask_layout: MaskLayout,
    /// Mean outage length when `mask_layout = "blocks"`.
    pub mask_block_mean_length: usize,
    /// Missingness rate used for the per-station summary table and the
    /// infill plots.
    pub report_rate: f64,
    /// Days of the test period shown in infill plots.
    pub plot_window_days: usize,
    pub qm: QmPlan,
    pub enet: EnetPlan,
    pub gp: GpPlan,
    pub knn: KnnPlan,
    pub rf: RfPlan,
    pub synth: Option<SynthPlan>,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            seed: default_master_seed(),
            train_fraction: default_train_fraction(),
            rates: default_rates(),
            seeds: default_seeds(),
            methods: default_methods(),
            mask_layout: MaskLayout::Mcar,
            mask_block_mean_length: 10,
            report_rate: 0.2,
            plot_window_days: 365,
            qm: QmPlan::default(),
            enet: EnetPlan::default(),
            gp: GpPlan::default(),
            knn: KnnPlan::default(),
            rf: RfPlan::default(),
            synth: None,
        }
    }
}

impl ExperimentPlan {
    /// Parse a TOML plan, rejecting unknown keys.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let plan: ExperimentPlan =
            toml::from_str(text).map_err(|e| Error::InvalidPlan(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_toml_str(&text)
    }

    /// Canonical TOML echo, written into the run manifest.
    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("plan serializes")
    }

    /// FNV-1a hash of the canonical plan serialization, as fixed-width hex.
    pub fn config_hash(&self) -> String {
        crate::report::fnv1a_hex(self.to_toml_string().as_bytes())
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() || self.rates.is_empty() || self.seeds.is_empty() {
            return Err(Error::InvalidPlan("methods, rates, and seeds must be non-empty".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidPlan(format!(
                "train_fraction must be in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.rates.iter().any(|r| !(0.0..1.0).contains(r)) {
            return Err(Error::InvalidPlan("rates must lie in [0, 1)".into()));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[i + 1..].contains(m) {
                return Err(Error::InvalidPlan(format!("method {m} listed twice")));
            }
        }
        if self.enet.folds < 2 {
            return Err(Error::InvalidPlan("enet.folds must be ≥ 2".into()));
        }
        if self.gp.budget < 2 {
            return Err(Error::InvalidPlan("gp.budget must be ≥ 2".into()));
        }
        if self.knn.k == 0 {
            return Err(Error::InvalidPlan("knn.k must be ≥ 1".into()));
        }
        if self.mask_block_mean_length == 0 {
            return Err(Error::InvalidPlan("mask_block_mean_length must be ≥ 1".into()));
        }
        Ok(())
    }

    /// The mask mechanism the plan asks for.
    pub fn mask_mechanism(&self) -> crate::series::MaskMechanism {
        match self.mask_layout {
            MaskLayout::Mcar => crate::series::MaskMechanism::Mcar,
            MaskLayout::Blocks => {
                crate::series::MaskMechanism::Blocks { mean_length: self.mask_block_mean_length }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_plan_uses_defaults() {
        let plan = ExperimentPlan::from_toml_str("").unwrap();
        assert_eq!(plan.rates, vec![0.05, 0.1, 0.2, 0.3, 0.5]);
        assert_eq!(plan.train_fraction, 0.6);
        assert_eq!(plan.methods.len(), 6);
        assert_eq!(plan.knn.k, 5);
        assert_eq!(plan.rf.n_trees, 100);
        assert_eq!(plan.gp.budget, 2000);
    }

    #[test]
    fn parses_full_plan() {
        let text = r#"
seed = 7
train_fraction = 0.7
rates = [0.1, 0.2]
seeds = [11, 12]
methods = ["qm", "gess-lookup"]

[qm]
tail_policy = "linear-extend"

[enet]
folds = 3
alpha_grid = [0.5]

[gp]
budget = 500
restarts = 2

[knn]
k = 9

[rf]
n_trees = 25

[synth]
n_stations = 4
n_days = 400
bias_gain = [3.0, 2.0, 1.0, 5.0]
bias_shape = "power"
"#;
        let plan = ExperimentPlan::from_toml_str(text).unwrap();
        assert_eq!(plan.seed, 7);
        assert_eq!(plan.methods, vec![MethodName::Qm, MethodName::GessLookup]);
        assert_eq!(plan.qm.tail_policy, TailPolicy::LinearExtend);
        assert_eq!(plan.enet.folds, 3);
        assert_eq!(plan.gp.budget, 500);
        assert_eq!(plan.knn.k, 9);
        assert_eq!(plan.rf.n_trees, 25);
        let synth = plan.synth.as_ref().unwrap();
        let cfg = synth.to_config(plan.seed).unwrap();
        assert_eq!(cfg.bias_gain, vec![3.0, 2.0, 1.0, 5.0]);
        assert_eq!(cfg.bias_shape, BiasShape::Power);
        assert_eq!(cfg.noise_sd, vec![5.0; 4]);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(ExperimentPlan::from_toml_str("bogus_key = 1").is_err());
        assert!(ExperimentPlan::from_toml_str("rates = []").is_err());
        assert!(ExperimentPlan::from_toml_str("rates = [1.5]").is_err());
        assert!(ExperimentPlan::from_toml_str("train_fraction = 1.0").is_err());
        assert!(ExperimentPlan::from_toml_str("methods = [\"qm\", \"qm\"]").is_err());
        assert!(ExperimentPlan::from_toml_str("methods = [\"mlp\"]").is_err());
    }

    #[test]
    fn config_hash_tracks_content() {
        let a = ExperimentPlan::default();
        let mut b = ExperimentPlan::default();
        assert_eq!(a.config_hash(), b.config_hash());
        b.seed = 43;
        assert_ne!(a.config_hash(), b.config_hash());
    }

    #[test]
    fn scalar_broadcast_and_list_mismatch() {
        let synth = SynthPlan { n_stations: 3, ..Default::default() };
        let cfg = synth.to_config(1).unwrap();
        assert_eq!(cfg.base_flow, vec![60.0; 3]);
        let bad = SynthPlan {
            n_stations: 3,
            bias_gain: NumOrPerStation::PerStation(vec![1.0, 2.0]),
            ..Default::default()
        };
        assert!(bad.to_config(1).is_err());
    }
}
