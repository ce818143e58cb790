//! Scenario configuration: a single JSON document, every key optional,
//! unknown keys rejected. An empty document is the study setup.

use std::fs;
use std::path::{Path, PathBuf};

use lottery_mfe::actions::{Action, ActionTable, PERIODS, WEEKLY_DOLLARS_PER_DAILY_CENT};
use lottery_mfe::dp::BranchWeighting;
use lottery_mfe::lottery::{LotteryConfig, WinProbabilityMethod};
use lottery_mfe::mfe::{MfeProblem, SolverSettings};
use lottery_mfe::thermal::{
    CostWeights, CostWindow, CouponRate, CouponSchedule, Interpolation, SimOptions, ThermalParams,
};
use lottery_mfe::{Error as CoreError, ProspectParams, RegenerationDist};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read `{path}`: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse `{path}`: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("`{field}` refers to missing file `{path}`")]
    MissingFile { field: String, path: PathBuf },
}

impl ConfigError {
    pub fn kind(&self) -> &'static str {
        match self {
            ConfigError::Io { .. } => "io",
            ConfigError::Parse { .. } => "parse",
            ConfigError::Invalid { .. } => "validation",
            ConfigError::MissingFile { .. } => "missing_file",
        }
    }

    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { field, .. } | ConfigError::MissingFile { field, .. } => Some(field),
            _ => None,
        }
    }

    fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid { field: field.into(), reason: reason.into() }
    }
}

/// Re-labels a core validation error under the config section it came from.
fn at(section: &str) -> impl Fn(CoreError) -> ConfigError + '_ {
    move |e| match e {
        CoreError::InvalidParameter { field, reason } => {
            let path = if section.is_empty() { field.to_string() } else { format!("{section}.{field}") };
            ConfigError::Invalid { field: path, reason }
        }
        other => ConfigError::invalid(section, other.to_string()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProspectConfig {
    pub gamma: f64,
    pub varphi: f64,
    pub xi: f64,
}

impl Default for ProspectConfig {
    fn default() -> Self {
        let p = ProspectParams::default();
        Self { gamma: p.gamma, varphi: p.varphi, xi: p.xi }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LotteryConfigFile {
    pub cluster_size: usize,
    pub winners: usize,
    /// Dollars per winner; the loss is `prize * K / M` and the win the rest.
    pub prize: f64,
}

impl Default for LotteryConfigFile {
    fn default() -> Self {
        Self { cluster_size: 50, winners: 1, prize: 15.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { x_min: lottery_mfe::grid::DEFAULT_X_MIN, x_max: lottery_mfe::grid::DEFAULT_X_MAX }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegenerationPoint {
    pub x: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    Raw,
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Auto,
    Exact,
    K1,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub vi_tol: f64,
    pub vi_max_sweeps: usize,
    pub tie_tol: f64,
    pub stationary_tol: f64,
    pub stationary_max_iters: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub damping: f64,
    pub fallback_damping: f64,
    pub oscillation_window: usize,
    pub method: Method,
    pub mc_samples: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let s = SolverSettings::default();
        Self {
            vi_tol: s.vi_tol,
            vi_max_sweeps: s.vi_max_sweeps,
            tie_tol: s.tie_tol,
            stationary_tol: s.stationary_tol,
            stationary_max_iters: s.stationary_max_iters,
            tol: s.tol,
            max_iters: s.max_iters,
            damping: s.damping,
            fallback_damping: s.fallback_damping,
            oscillation_window: s.oscillation_window,
            method: Method::Auto,
            mc_samples: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpolationConfig {
    #[default]
    ZeroOrderHold,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostWindowConfig {
    #[default]
    ActionPeriods,
    WholeDay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalConfig {
    pub capacitance: f64,
    pub resistance: f64,
    pub rated_power: f64,
    pub cop: f64,
    pub setpoint: f64,
    pub deadband: f64,
    /// Euler step, seconds.
    pub dt: f64,
    pub interpolation: InterpolationConfig,
    pub cost_window: CostWindowConfig,
    pub lambda: f64,
    /// Cents per kWh.
    pub varsigma: f64,
}

impl Default for ThermalConfig {
    fn default() -> Self {
        let p = ThermalParams::default();
        let w = CostWeights::default();
        Self {
            capacitance: p.capacitance,
            resistance: p.resistance,
            rated_power: p.rated_power,
            cop: p.cop,
            setpoint: p.setpoint,
            deadband: p.deadband,
            dt: 10.0,
            interpolation: InterpolationConfig::ZeroOrderHold,
            cost_window: CostWindowConfig::ActionPeriods,
            lambda: w.lambda,
            varsigma: w.varsigma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouponRateConfig {
    pub base: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_kwh: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub high_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionConfig {
    pub label: String,
    pub cost_cents: f64,
    pub coupons: f64,
    pub savings_cents: f64,
    pub setpoints: [f64; PERIODS],
}

impl From<&Action> for ActionConfig {
    fn from(a: &Action) -> Self {
        Self {
            label: a.label.clone(),
            cost_cents: a.cost_cents,
            coupons: a.coupons,
            savings_cents: a.savings_cents,
            setpoints: a.setpoints,
        }
    }
}

impl From<&ActionConfig> for Action {
    fn from(a: &ActionConfig) -> Self {
        Action {
            label: a.label.clone(),
            cost_cents: a.cost_cents,
            coupons: a.coupons,
            savings_cents: a.savings_cents,
            setpoints: a.setpoints,
        }
    }
}

/// Format of `actions_file` and of `build-action-table` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionTableFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub actions: Vec<ActionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<Vec<serde_json::Value>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ambient_csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prices_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub prospect: ProspectConfig,
    pub lottery: LotteryConfigFile,
    pub beta: f64,
    pub grid: GridConfig,
    pub regeneration: Vec<RegenerationPoint>,
    /// Multiplier taking table costs (cents per day) into the surplus units
    /// of the decision problem.
    pub cost_scale: f64,
    pub weighting: Weighting,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub actions: Option<Vec<ActionConfig>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub actions_file: Option<PathBuf>,
    pub solver: SolverConfig,
    pub thermal: ThermalConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupon_schedule: Option<Vec<CouponRateConfig>>,
    pub data: DataConfig,
    pub seed: u64,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            prospect: ProspectConfig::default(),
            lottery: LotteryConfigFile::default(),
            beta: 0.92,
            grid: GridConfig::default(),
            regeneration: vec![RegenerationPoint { x: 0.0, mass: 1.0 }],
            cost_scale: WEEKLY_DOLLARS_PER_DAILY_CENT,
            weighting: Weighting::Raw,
            actions: None,
            actions_file: None,
            solver: SolverConfig::default(),
            thermal: ThermalConfig::default(),
            coupon_schedule: None,
            data: DataConfig::default(),
            seed: 0,
            base_dir: PathBuf::from("."),
        }
    }
}

/// Everything the commands need, validated.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub problem: MfeProblem,
    pub settings: SolverSettings,
    pub thermal: ThermalParams,
    pub sim: SimOptions,
    pub weights: CostWeights,
    pub coupons: CouponSchedule,
    pub ambient_csv: Option<PathBuf>,
    pub prices_csv: Option<PathBuf>,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let mut cfg = Self::from_json(&text).map_err(|message| ConfigError::Parse { path: path.to_path_buf(), message })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// Parses a document; blank input counts as `{}`.
    pub fn from_json(text: &str) -> Result<Self, String> {
        if text.trim().is_empty() {
            return Ok(Self::default());
        }
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    fn resolve_path(&self, field: &str, p: &Path) -> Result<PathBuf, ConfigError> {
        let full = if p.is_absolute() { p.to_path_buf() } else { self.base_dir.join(p) };
        if !full.is_file() {
            return Err(ConfigError::MissingFile { field: field.into(), path: full });
        }
        Ok(full)
    }

    fn action_table(&self) -> Result<ActionTable, ConfigError> {
        let rows: Vec<ActionConfig> = match (&self.actions, &self.actions_file) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::invalid("actions_file", "give either `actions` or `actions_file`, not both"))
            }
            (Some(a), None) => a.clone(),
            (None, Some(f)) => {
                let path = self.resolve_path("actions_file", f)?;
                let text = fs::read_to_string(&path).map_err(|source| ConfigError::Io { path: path.clone(), source })?;
                let file: ActionTableFile =
                    serde_json::from_str(&text).map_err(|e| ConfigError::Parse { path, message: e.to_string() })?;
                file.actions
            }
            (None, None) => return Ok(ActionTable::study_default()),
        };
        ActionTable::new(rows.iter().map(Action::from).collect()).map_err(at(""))
    }

    fn coupon_schedule(&self) -> Result<CouponSchedule, ConfigError> {
        let Some(rates) = &self.coupon_schedule else {
            return Ok(CouponSchedule::default());
        };
        if rates.len() != PERIODS {
            return Err(ConfigError::invalid("coupon_schedule", format!("needs {PERIODS} periods, got {}", rates.len())));
        }
        let mut out = CouponSchedule::default();
        for (j, r) in rates.iter().enumerate() {
            let high = match (r.threshold_kwh, r.high_rate) {
                (Some(t), Some(h)) => Some((t, h)),
                (None, None) => None,
                _ => {
                    return Err(ConfigError::invalid(
                        format!("coupon_schedule[{j}]"),
                        "threshold_kwh and high_rate go together",
                    ))
                }
            };
            out.rates[j] = CouponRate { base: r.base, high };
        }
        out.validate().map_err(at(""))?;
        Ok(out)
    }

    pub fn resolve(&self) -> Result<Scenario, ConfigError> {
        let p = &self.prospect;
        let prospect = ProspectParams::new(p.gamma, p.varphi, p.xi).map_err(at("prospect"))?;
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(ConfigError::invalid("beta", format!("must lie in (0, 1), got {}", self.beta)));
        }
        let l = &self.lottery;
        let lottery = LotteryConfig::from_prize(l.cluster_size, l.winners, l.prize).map_err(at("lottery"))?;
        if !(self.grid.x_min < 0.0 && self.grid.x_max > 0.0) {
            return Err(ConfigError::invalid("grid", "need x_min < 0 < x_max"));
        }
        if !(self.cost_scale >= 0.0 && self.cost_scale.is_finite()) {
            return Err(ConfigError::invalid("cost_scale", "must be finite and >= 0"));
        }
        let problem = MfeProblem {
            actions: self.action_table()?,
            lottery,
            prospect,
            beta: self.beta,
            x_min: self.grid.x_min,
            x_max: self.grid.x_max,
            regeneration: self.regeneration.iter().map(|r| (r.x, r.mass)).collect(),
            cost_scale: self.cost_scale,
            weighting: match self.weighting {
                Weighting::Raw => BranchWeighting::Raw,
                Weighting::Normalized => BranchWeighting::Normalized,
            },
        };
        problem.validate().map_err(at(""))?;
        let grid = problem.grid().map_err(at("grid"))?;
        RegenerationDist::from_points(&grid, &problem.regeneration).map_err(|e| match e {
            CoreError::InvalidParameter { reason, .. } => ConfigError::invalid("regeneration", reason),
            other => ConfigError::invalid("regeneration", other.to_string()),
        })?;

        let s = &self.solver;
        let method = match s.method {
            Method::Auto => WinProbabilityMethod::Auto,
            Method::Exact => WinProbabilityMethod::Exact,
            Method::K1 => WinProbabilityMethod::K1Convolution,
            Method::MonteCarlo => {
                if s.mc_samples == 0 {
                    return Err(ConfigError::invalid("solver.mc_samples", "must be >= 1"));
                }
                WinProbabilityMethod::MonteCarlo { samples: s.mc_samples, seed: self.seed }
            }
        };
        let settings = SolverSettings {
            vi_tol: s.vi_tol,
            vi_max_sweeps: s.vi_max_sweeps,
            tie_tol: s.tie_tol,
            stationary_tol: s.stationary_tol,
            stationary_max_iters: s.stationary_max_iters,
            tol: s.tol,
            max_iters: s.max_iters,
            damping: s.damping,
            fallback_damping: s.fallback_damping,
            oscillation_window: s.oscillation_window,
            method,
        };
        settings.validate().map_err(at("solver"))?;

        let t = &self.thermal;
        let thermal = ThermalParams {
            capacitance: t.capacitance,
            resistance: t.resistance,
            rated_power: t.rated_power,
            cop: t.cop,
            setpoint: t.setpoint,
            deadband: t.deadband,
        };
        thermal.validate().map_err(at("thermal"))?;
        if !(t.dt > 0.0 && t.dt <= 60.0) {
            return Err(ConfigError::invalid("thermal.dt", "must lie in (0, 60] seconds"));
        }
        for (field, v) in [("thermal.lambda", t.lambda), ("thermal.varsigma", t.varsigma)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ConfigError::invalid(field, "must be finite and >= 0"));
            }
        }
        let sim = SimOptions {
            dt: t.dt,
            interpolation: match t.interpolation {
                InterpolationConfig::ZeroOrderHold => Interpolation::ZeroOrderHold,
                InterpolationConfig::Linear => Interpolation::Linear,
            },
            ..SimOptions::new(&thermal)
        };
        let weights = CostWeights {
            lambda: t.lambda,
            varsigma: t.varsigma,
            window: match t.cost_window {
                CostWindowConfig::ActionPeriods => CostWindow::ActionPeriods,
                CostWindowConfig::WholeDay => CostWindow::WholeDay,
            },
        };

        let ambient_csv = self.data.ambient_csv.as_deref().map(|p| self.resolve_path("data.ambient_csv", p)).transpose()?;
        let prices_csv = self.data.prices_csv.as_deref().map(|p| self.resolve_path("data.prices_csv", p)).transpose()?;

        Ok(Scenario {
            problem,
            settings,
            thermal,
            sim,
            weights,
            coupons: self.coupon_schedule()?,
            ambient_csv,
            prices_csv,
            seed: self.seed,
        })
    }
}
