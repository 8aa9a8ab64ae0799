//! Scenario and method configuration, with built-in presets.

use fcls_core::initializers::{InitKind, InitSpec};
use fcls_core::lla::LlaMode;
use fcls_core::penalty::{ENTRYWISE_DEFAULT_A, FCLS_DEFAULT_A};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

pub const DEFAULT_N_VALUES: [usize; 8] = [8, 16, 32, 64, 128, 256, 512, 1024];
pub const DEFAULT_REPS: usize = 20;
pub const DEFAULT_RIDGE: f64 = 0.01;
pub const DEFAULT_SIGMA_GAUSSIAN_SEQ: f64 = 3.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    GaussianSeq,
    Covariance,
    Linear,
    Logistic,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Self::GaussianSeq => "gaussian_seq",
            Self::Covariance => "covariance",
            Self::Linear => "linear",
            Self::Logistic => "logistic",
        }
    }

    /// Shrinkage families estimate from raw samples through `b_ok`.
    pub fn is_shrinkage(&self) -> bool {
        matches!(self, Self::GaussianSeq | Self::Covariance)
    }

    pub fn default_signal(&self) -> Signal {
        match self {
            Self::GaussianSeq => Signal::Constant(1.0),
            Self::Covariance => Signal::Constant(0.3),
            Self::Linear | Self::Logistic => Signal::RandomSign(RandomSignTag::RandomSign),
        }
    }

    pub fn default_sigma(&self) -> f64 {
        match self {
            Self::GaussianSeq => DEFAULT_SIGMA_GAUSSIAN_SEQ,
            _ => 1.0,
        }
    }
}

/// Nonzero values of the target: a constant, or independent random signs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Signal {
    Constant(f64),
    RandomSign(RandomSignTag),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomSignTag {
    RandomSign,
}

impl Signal {
    pub const RANDOM_SIGN: Signal = Signal::RandomSign(RandomSignTag::RandomSign);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    FclsLla,
    EntrywiseScad,
    Lasso,
    HardThreshold,
    Raw,
}

fn default_true() -> bool {
    true
}

fn default_grid_points() -> usize {
    fcls_core::lla::DEFAULT_GRID_POINTS
}

fn default_decades() -> f64 {
    fcls_core::lla::DEFAULT_GRID_DECADES
}

/// One estimator in a comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub name: String,
    pub kind: MethodKind,
    /// SCAD shape; defaults to 2.1 for FCLS and 3.7 for entrywise SCAD.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<LlaMode>,
    /// LLA step cap (entrywise SCAD defaults to one step).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    /// Select the tuning parameter closest to the oracle instead of by CV.
    #[serde(default = "default_true")]
    pub cheat: bool,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_decades")]
    pub grid_decades: f64,
    /// Explicit tuning grid, overriding the default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
}

impl MethodSpec {
    pub fn new(name: &str, kind: MethodKind) -> Self {
        Self {
            name: name.to_string(),
            kind,
            a: None,
            init: None,
            mode: None,
            max_steps: None,
            cheat: true,
            grid_points: default_grid_points(),
            grid_decades: default_decades(),
            grid: None,
        }
    }

    pub fn with_init(mut self, kind: InitKind) -> Self {
        self.init = Some(InitSpec::new(kind));
        self
    }

    pub fn with_mode(mut self, mode: LlaMode) -> Self {
        self.mode = Some(mode);
        self
    }

    pub fn shape(&self) -> f64 {
        self.a.unwrap_or(match self.kind {
            MethodKind::EntrywiseScad => ENTRYWISE_DEFAULT_A,
            _ => FCLS_DEFAULT_A,
        })
    }

    pub fn lla_mode(&self) -> LlaMode {
        self.mode.unwrap_or(LlaMode::TwoStep)
    }

    fn validate(&self, family: Family) -> Result<()> {
        let mut problems = Vec::new();
        if self.name.is_empty() || self.name.contains(',') {
            problems.push("name must be nonempty and contain no commas".to_string());
        }
        if self.grid_points < 2 {
            problems.push("grid_points must be at least 2".into());
        }
        if !(self.grid_decades > 0.0) {
            problems.push("grid_decades must be positive".into());
        }
        if let Some(g) = &self.grid {
            if g.is_empty() || g.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                problems.push("grid must be nonempty, finite and nonnegative".into());
            }
        }
        if let Some(init) = &self.init {
            if init.cv_folds < 2 {
                problems.push("init.cv_folds must be at least 2".into());
            }
            let regression_threshold = !family.is_shrinkage()
                && matches!(init.kind, InitKind::HardThreshold | InitKind::SoftThreshold)
                && init.gamma.is_none();
            if regression_threshold {
                problems.push("cross-validated thresholding needs a shrinkage family".into());
            }
        }
        if matches!(self.kind, MethodKind::FclsLla | MethodKind::EntrywiseScad) && self.max_steps == Some(0) {
            problems.push("max_steps must be at least 1".into());
        }
        if self.kind == MethodKind::FclsLla && !(self.shape() > 2.0) {
            problems.push("SCAD shape a must exceed 2".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(SimError::Schema(
                problems.into_iter().map(|p| format!("methods[{}]: {p}", self.name)).collect(),
            ))
        }
    }
}

fn default_reps() -> usize {
    DEFAULT_REPS
}

fn default_ridge() -> f64 {
    DEFAULT_RIDGE
}

fn default_n_values() -> Vec<usize> {
    DEFAULT_N_VALUES.to_vec()
}

/// A Monte-Carlo experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    #[serde(default)]
    pub name: String,
    pub family: Family,
    pub block_sizes: Vec<usize>,
    #[serde(default)]
    pub n_isolated: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal: Option<Signal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_sigma: Option<f64>,
    #[serde(default = "default_n_values")]
    pub n_values: Vec<usize>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_ridge")]
    pub ridge: f64,
    #[serde(default)]
    pub methods: Vec<MethodSpec>,
    /// Fill the `wall_ms` column (makes results.csv run-dependent).
    #[serde(default)]
    pub record_timing: bool,
}

impl SimScenario {
    pub fn new(family: Family, block_sizes: Vec<usize>) -> Self {
        Self {
            name: String::new(),
            family,
            block_sizes,
            n_isolated: 0,
            signal: None,
            noise_sigma: None,
            n_values: default_n_values(),
            reps: DEFAULT_REPS,
            seed: 0,
            ridge: DEFAULT_RIDGE,
            methods: Vec::new(),
            record_timing: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut s: Self = serde_json::from_str(text).map_err(|e| SimError::Schema(vec![e.to_string()]))?;
        s.fill_defaults();
        s.validate()?;
        Ok(s)
    }

    /// Resolves empty name and method list to the family defaults.
    pub fn fill_defaults(&mut self) {
        if self.name.is_empty() {
            let sizes: Vec<String> = self.block_sizes.iter().map(|s| s.to_string()).collect();
            self.name = format!("{}_{}", self.family.name(), sizes.join("x"));
        }
        if self.methods.is_empty() {
            self.methods = default_methods(self.family);
        }
    }

    pub fn d(&self) -> usize {
        self.block_sizes.iter().sum::<usize>() + self.n_isolated
    }

    pub fn signal(&self) -> Signal {
        self.signal.unwrap_or_else(|| self.family.default_signal())
    }

    pub fn sigma(&self) -> f64 {
        self.noise_sigma.unwrap_or_else(|| self.family.default_sigma())
    }

    /// Smallest sample size every method's cross-validation can handle.
    pub fn min_n(&self) -> usize {
        self.methods
            .iter()
            .map(|m| {
                let init_folds = m.init.as_ref().map_or(0, |i| i.cv_folds);
                let own = if m.cheat { 0 } else { fcls_core::initializers::DEFAULT_CV_FOLDS };
                init_folds.max(own)
            })
            .max()
            .unwrap_or(0)
            .max(2)
    }

    /// Nonzero count of the target.
    pub fn support_size(&self) -> usize {
        self.block_sizes.iter().map(|b| b * b.saturating_sub(1) / 2).sum()
    }

    /// `n_values` with infeasible sizes removed: cross-validation needs at
    /// least one sample per fold, and the least-squares oracle needs more
    /// samples than support coordinates.
    pub fn feasible_n_values(&self) -> Vec<usize> {
        let mut lo = self.min_n();
        if self.family == Family::Linear {
            lo = lo.max(self.support_size() + 1);
        }
        self.n_values.iter().copied().filter(|&n| n >= lo).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.reps == 0 {
            problems.push("reps: must be at least 1".to_string());
        }
        if self.block_sizes.is_empty() || self.block_sizes.contains(&0) {
            problems.push("block_sizes: need at least one block, all sizes >= 1".into());
        }
        if self.d() < 2 {
            problems.push("block_sizes/n_isolated: need at least 2 nodes".into());
        }
        if self.n_values.is_empty() {
            problems.push("n_values: must be nonempty".into());
        } else if self.feasible_n_values().is_empty() {
            problems.push(format!("n_values: none reaches the cross-validation minimum of {}", self.min_n()));
        }
        if !(self.sigma() >= 0.0) || !self.sigma().is_finite() {
            problems.push("noise_sigma: must be finite and nonnegative".into());
        }
        if !(self.ridge >= 0.0) {
            problems.push("ridge: must be nonnegative".into());
        }
        if let Signal::Constant(v) = self.signal() {
            if !v.is_finite() || v == 0.0 {
                problems.push("signal: must be a nonzero number or \"random_sign\"".into());
            }
        }
        if self.name.contains(',') {
            problems.push("name: must not contain commas".into());
        }
        if self.methods.is_empty() {
            problems.push("methods: must be nonempty".into());
        }
        let mut names: Vec<&str> = self.methods.iter().map(|m| m.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            problems.push("methods: names must be unique".into());
        }
        for m in &self.methods {
            if let Err(SimError::Schema(p)) = m.validate(self.family) {
                problems.extend(p);
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(SimError::Schema(problems))
        }
    }
}

/// The estimators compared for each family.
pub fn default_methods(family: Family) -> Vec<MethodSpec> {
    use MethodKind::*;
    match family {
        Family::GaussianSeq => vec![
            MethodSpec::new("fcls_hard_cv", FclsLla).with_init(InitKind::HardThreshold),
            MethodSpec::new("fcls_empirical", FclsLla).with_init(InitKind::Raw),
            MethodSpec::new("fcls_zero", FclsLla).with_init(InitKind::Zero),
            MethodSpec::new("fcls_hard_cv_converged", FclsLla)
                .with_init(InitKind::HardThreshold)
                .with_mode(LlaMode::ToConvergence),
            MethodSpec::new("hard_threshold", HardThreshold),
            MethodSpec::new("empirical", Raw),
        ],
        Family::Covariance => vec![
            MethodSpec::new("fcls_hard_cv", FclsLla).with_init(InitKind::HardThreshold),
            MethodSpec::new("hard_threshold", HardThreshold),
            MethodSpec::new("empirical", Raw),
        ],
        Family::Linear | Family::Logistic => vec![
            MethodSpec::new("fcls_lasso_cv", FclsLla).with_init(InitKind::LassoCv),
            MethodSpec::new("entrywise_scad", EntrywiseScad).with_init(InitKind::LassoCv),
            MethodSpec::new("lasso", Lasso),
        ],
    }
}

pub const PRESET_NAMES: [&str; 12] = [
    "gaussian_seq_5",
    "gaussian_seq_10",
    "gaussian_seq_25",
    "covariance_5",
    "covariance_10",
    "covariance_25",
    "linear_5",
    "linear_10",
    "linear_25",
    "logistic_5",
    "logistic_10",
    "logistic_25",
];

/// Two equal fully connected blocks of size 5, 10 or 25 for each family.
pub fn preset(name: &str) -> Result<SimScenario> {
    let (family, size) = name
        .rsplit_once('_')
        .and_then(|(fam, size)| {
            let family = match fam {
                "gaussian_seq" => Family::GaussianSeq,
                "covariance" => Family::Covariance,
                "linear" => Family::Linear,
                "logistic" => Family::Logistic,
                _ => return None,
            };
            let size: usize = size.parse().ok()?;
            [5, 10, 25].contains(&size).then_some((family, size))
        })
        .ok_or_else(|| {
            SimError::Schema(vec![format!(
                "unknown preset '{name}' (expected one of {})",
                PRESET_NAMES.join(", ")
            )])
        })?;
    let mut s = SimScenario::new(family, vec![size, size]);
    s.name = name.to_string();
    s.seed = 2022;
    s.fill_defaults();
    Ok(s)
}
