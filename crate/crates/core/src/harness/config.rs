use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coverage::CoverageParams;
use crate::em::{EmOptions, SelectionOptions};
use crate::error::{invalid, Error, Result};
use crate::field::{generate_scenario, GaussianComponent, ScenarioOptions, WorthField};
use crate::loglinear::RevisionPolicy;
use crate::qlearn::SoqlParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Lll,
    Blll,
    Psblll,
    Ql,
    Soql,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Lll => "lll",
            Algorithm::Blll => "blll",
            Algorithm::Psblll => "psblll",
            Algorithm::Ql => "ql",
            Algorithm::Soql => "soql",
        }
    }
}

/// Whether log-linear robots decide with the true field or with their own
/// mixture estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Environment {
    KnownField,
    EstimatedField,
}

/// The worth field: explicit components, or a random mixture drawn from
/// `seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub components: Vec<GaussianComponent>,
    pub min_components: usize,
    pub max_components: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self { seed: 1, components: Vec::new(), min_components: 1, max_components: 5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimationConfig {
    /// Iterations between component-count proposals.
    pub n_aic: usize,
    /// `f_mode` is this quantile of the robot's observed worths.
    pub f_mode_quantile: f64,
    /// Repetition factor `V` of high-worth observations.
    pub v: u32,
    /// EM passes after each new observation.
    pub em_iterations: usize,
    /// EM passes on a split/merge candidate.
    pub candidate_em_iterations: usize,
    pub partial_iterations: usize,
    pub cov_floor: f64,
    /// Temperature of the AIC logit; the learning τ when absent.
    pub aic_tau: Option<f64>,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            n_aic: 50,
            f_mode_quantile: 0.6,
            v: 3,
            em_iterations: 10,
            candidate_em_iterations: 50,
            partial_iterations: 20,
            cov_floor: EmOptions::default().cov_floor,
            aic_tau: None,
        }
    }
}

impl EstimationConfig {
    pub fn em_options(&self) -> EmOptions {
        EmOptions { iterations: self.em_iterations, cov_floor: self.cov_floor, ..EmOptions::default() }
    }

    pub fn selection_options(&self, tau: f64) -> SelectionOptions {
        SelectionOptions {
            em: EmOptions { iterations: self.candidate_em_iterations, ..self.em_options() },
            partial_iterations: self.partial_iterations,
            aic_tau: self.aic_tau.unwrap_or(tau),
            ..SelectionOptions::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteadyConfig {
    pub window: usize,
    /// Allowed spread, as a fraction of the field's total mass.
    pub tol: f64,
}

impl Default for SteadyConfig {
    fn default() -> Self {
        Self { window: 200, tol: 1e-4 }
    }
}

/// One experiment: algorithm, world, parameters and seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Name used in sweep outputs; the algorithm name when absent.
    pub label: Option<String>,
    pub algorithm: Algorithm,
    pub environment: Environment,
    pub grid: usize,
    pub robots: usize,
    pub seeds: Vec<u64>,
    /// Iteration cap.
    pub iterations: u64,
    /// Steady state is not tested before this many iterations.
    pub min_iterations: u64,
    /// Logit temperature of the log-linear learners.
    pub tau: f64,
    pub scenario: ScenarioConfig,
    pub coverage: CoverageParams,
    pub revision: RevisionPolicy,
    pub soql: SoqlParams,
    pub estimation: EstimationConfig,
    pub steady: SteadyConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            label: None,
            algorithm: Algorithm::Psblll,
            environment: Environment::KnownField,
            grid: 40,
            robots: 5,
            seeds: vec![1],
            iterations: 20_000,
            min_iterations: 5_000,
            tau: 3e-3,
            scenario: ScenarioConfig::default(),
            coverage: CoverageParams::default(),
            revision: RevisionPolicy::default(),
            soql: SoqlParams::default(),
            estimation: EstimationConfig::default(),
            steady: SteadyConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.algorithm.name().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid < 2 {
            return Err(invalid("grid", "need at least a 2x2 grid"));
        }
        if self.robots == 0 {
            return Err(invalid("robots", "need at least one robot"));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(invalid("tau", "temperature must be positive"));
        }
        if self.steady.window < 2 {
            return Err(invalid("steady.window", "window must be at least 2"));
        }
        if !(self.steady.tol >= 0.0) {
            return Err(invalid("steady.tol", "tolerance must be non-negative"));
        }
        let e = &self.estimation;
        if e.n_aic == 0 {
            return Err(invalid("estimation.n_aic", "period must be at least 1"));
        }
        if !(0.0..=1.0).contains(&e.f_mode_quantile) {
            return Err(invalid("estimation.f_mode_quantile", "must lie in [0, 1]"));
        }
        if !(e.cov_floor > 0.0) {
            return Err(invalid("estimation.cov_floor", "must be positive"));
        }
        if e.aic_tau.is_some_and(|t| !(t > 0.0)) {
            return Err(invalid("estimation.aic_tau", "must be positive"));
        }
        self.coverage.validate()?;
        self.revision.validate()?;
        self.soql.validate()?;
        for c in &self.scenario.components {
            c.validate()?;
        }
        Ok(())
    }

    /// The worth field of this experiment.
    pub fn field(&self) -> Result<WorthField> {
        if self.scenario.components.is_empty() {
            let opts = ScenarioOptions {
                min_components: self.scenario.min_components,
                max_components: self.scenario.max_components,
                ..ScenarioOptions::default()
            };
            generate_scenario(self.scenario.seed, self.grid, &opts)
        } else {
            WorthField::new(self.grid, self.scenario.components.clone())
        }
    }
}
