//! Experiment configuration: a sectioned TOML file with typed parsing and
//! unknown-key rejection. Missing keys fall back to the presets; missing
//! sections behave as if empty.

use std::path::Path;

use serde::Deserialize;

use crate::ppo::PpoConfig;
use crate::quad::QuadPlanConfig;
use crate::rocket::{ImitationConfig, PlanningConfig, RocketWorldConfig};

use super::PipelineError;

/// Planning-environment ids the pipeline accepts.
pub const PLANNING_ENVS: [&str; 2] = ["rocket-plan", "quad-plan"];

fn default_name() -> String {
    "experiment".to_string()
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default = "default_name")]
    pub name: String,
    /// Planning environment id: `rocket-plan` or `quad-plan`.
    pub env: String,
    #[serde(default)]
    pub seed: u64,
    /// Default output directory; the CLI `--out` flag overrides it.
    #[serde(default)]
    pub out_dir: Option<String>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            name: default_name(),
            env: "rocket-plan".to_string(),
            seed: 0,
            out_dir: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct StagesSection {
    pub planning_steps: u64,
    pub imitation_steps: u64,
    /// Defaults to planning + imitation so the baseline comparison spends
    /// the same total budget.
    pub baseline_steps: Option<u64>,
    /// Stage-1 gate: the planner's final distance to the goal must be below
    /// this, otherwise the pipeline stops before imitation.
    pub gate_distance: f64,
}

impl Default for StagesSection {
    fn default() -> Self {
        StagesSection {
            planning_steps: 300_000,
            imitation_steps: 300_000,
            baseline_steps: None,
            gate_distance: 2.0,
        }
    }
}

impl StagesSection {
    pub fn baseline_budget(&self) -> u64 {
        self.baseline_steps
            .unwrap_or(self.planning_steps + self.imitation_steps)
    }
}

/// Optional overrides layered over the stage-appropriate PPO preset.
/// Keys set at the `[ppo]` level apply to every stage that trains; the
/// nested `[ppo.planning]`, `[ppo.imitation]`, and `[ppo.baseline]` tables
/// layer on top of that for a single stage (stages legitimately want
/// different horizons and exploration scales).
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct PpoOverrides {
    pub gamma: Option<f64>,
    pub gae_lambda: Option<f64>,
    pub clip_epsilon: Option<f64>,
    pub epochs_per_update: Option<usize>,
    pub minibatch_size: Option<usize>,
    pub steps_per_update: Option<usize>,
    pub num_workers: Option<usize>,
    pub entropy_coef: Option<f64>,
    pub value_coef: Option<f64>,
    pub learning_rate: Option<f64>,
    pub max_grad_norm: Option<f64>,
    pub hidden_layers: Option<Vec<usize>>,
    pub log_std_init: Option<f64>,
    pub planning: Option<Box<PpoOverrides>>,
    pub imitation: Option<Box<PpoOverrides>>,
    pub baseline: Option<Box<PpoOverrides>>,
}

impl PpoOverrides {
    fn apply(&self, mut base: PpoConfig) -> PpoConfig {
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field.clone() { base.$field = v; })*
            };
        }
        set!(
            gamma,
            gae_lambda,
            clip_epsilon,
            epochs_per_update,
            minibatch_size,
            steps_per_update,
            num_workers,
            entropy_coef,
            value_coef,
            learning_rate,
            max_grad_norm,
            hidden_layers,
            log_std_init
        );
        base
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RocketSection {
    /// Obstacle layout (true) or plain navigation (false).
    pub obstacles: bool,
    /// Planner episode horizon in planner steps. The 200-step default matches
    /// the full env's 10 s wall clock; harder layouts benefit from a longer
    /// leash, since the planner's random walk needs room to find the goal
    /// basin before bounds or the horizon cut an episode short.
    pub plan_horizon: Option<u64>,
}

impl Default for RocketSection {
    fn default() -> Self {
        RocketSection {
            obstacles: true,
            plan_horizon: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ImitationSection {
    pub tracking_exponent: f64,
    pub collision_penalty: f64,
    /// Monotone matching window in densified points; 0 searches globally.
    pub progress_window: usize,
    pub densify_spacing: f64,
}

impl Default for ImitationSection {
    fn default() -> Self {
        let d = ImitationConfig::default();
        ImitationSection {
            tracking_exponent: d.tracking_exponent,
            collision_penalty: d.collision_penalty,
            progress_window: d.progress_window.unwrap_or(0),
            densify_spacing: d.densify_spacing,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct QuadSection {
    /// `trot` or `walk`.
    pub gait: String,
}

impl Default for QuadSection {
    fn default() -> Self {
        QuadSection {
            gait: "trot".to_string(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RobustnessSection {
    /// Force magnitudes to probe, N.
    pub magnitudes: Vec<f64>,
    /// How long each push lasts, s.
    pub duration: f64,
    /// Trials per magnitude.
    pub trials: usize,
    /// Onset window as fractions of the episode horizon.
    pub window: [f64; 2],
    /// Separate seed for the probe directions/onsets; defaults to the
    /// experiment seed.
    pub seed: Option<u64>,
}

impl Default for RobustnessSection {
    fn default() -> Self {
        RobustnessSection {
            magnitudes: vec![0.0, 0.5],
            duration: 0.1,
            trials: 20,
            window: [0.3, 0.7],
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSection {
    pub trials: usize,
    pub steps_per_trial: u64,
    /// Log-uniform range.
    pub learning_rate: [f64; 2],
    /// Log-uniform range.
    pub clip_epsilon: [f64; 2],
    /// Categorical choices.
    pub entropy_coef_choices: Vec<f64>,
    /// Categorical choices.
    pub hidden_layer_choices: Vec<Vec<usize>>,
}

impl Default for SearchSection {
    fn default() -> Self {
        SearchSection {
            trials: 4,
            steps_per_trial: 8_192,
            learning_rate: [1e-4, 1e-2],
            clip_epsilon: [0.05, 0.4],
            entropy_coef_choices: vec![0.0, 0.005, 0.02],
            hidden_layer_choices: vec![vec![32, 32], vec![64, 64]],
        }
    }
}

/// The whole experiment file. Unknown sections and unknown keys inside any
/// section are rejected at parse time. `Default` is the rocket experiment
/// with every section at its preset values.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub stages: StagesSection,
    #[serde(default)]
    pub ppo: PpoOverrides,
    #[serde(default)]
    pub rocket: RocketSection,
    #[serde(default)]
    pub imitation: ImitationSection,
    #[serde(default)]
    pub quad: QuadSection,
    #[serde(default)]
    pub robustness: RobustnessSection,
    #[serde(default)]
    pub search: SearchSection,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: String| Err(PipelineError::Config(msg));
        if !PLANNING_ENVS.contains(&self.experiment.env.as_str()) {
            return bad(format!(
                "experiment.env `{}` is not a planning environment (expected one of {:?})",
                self.experiment.env, PLANNING_ENVS
            ));
        }
        if self.stages.planning_steps == 0 || self.stages.imitation_steps == 0 {
            return bad("stage budgets must be at least 1 step".into());
        }
        if self.stages.baseline_budget() == 0 {
            return bad("baseline budget must be at least 1 step".into());
        }
        if !(self.stages.gate_distance > 0.0) {
            return bad("stages.gate_distance must be positive".into());
        }
        if self.rocket.plan_horizon == Some(0) {
            return bad("rocket.plan_horizon must be at least 1 step".into());
        }
        for (name, stage) in [
            ("planning", &self.ppo.planning),
            ("imitation", &self.ppo.imitation),
            ("baseline", &self.ppo.baseline),
        ] {
            if let Some(stage) = stage {
                if stage.planning.is_some() || stage.imitation.is_some() || stage.baseline.is_some()
                {
                    return bad(format!(
                        "ppo.{name} must not itself contain stage tables"
                    ));
                }
            }
        }
        if !(self.imitation.densify_spacing > 0.0) {
            return bad("imitation.densify_spacing must be positive".into());
        }
        if self.imitation.tracking_exponent >= 0.0 {
            return bad("imitation.tracking_exponent must be negative (reward decays with error)".into());
        }
        if self.imitation.collision_penalty < 0.0 {
            return bad("imitation.collision_penalty must be non-negative".into());
        }
        match self.quad.gait.as_str() {
            "trot" | "walk" => {}
            other => return bad(format!("quad.gait `{other}` is neither `trot` nor `walk`")),
        }
        let r = &self.robustness;
        if r.magnitudes.is_empty() || r.magnitudes.iter().any(|m| *m < 0.0 || !m.is_finite()) {
            return bad("robustness.magnitudes must be non-empty and non-negative".into());
        }
        if !(r.duration > 0.0) {
            return bad("robustness.duration must be positive".into());
        }
        if r.trials == 0 {
            return bad("robustness.trials must be at least 1".into());
        }
        if !(0.0 <= r.window[0] && r.window[0] <= r.window[1] && r.window[1] <= 1.0) {
            return bad("robustness.window must satisfy 0 <= start <= end <= 1".into());
        }
        let s = &self.search;
        if s.trials == 0 || s.steps_per_trial == 0 {
            return bad("search.trials and search.steps_per_trial must be at least 1".into());
        }
        for (name, range) in [("learning_rate", s.learning_rate), ("clip_epsilon", s.clip_epsilon)] {
            if !(range[0] > 0.0 && range[0] <= range[1]) {
                return bad(format!("search.{name} must be a positive low..high range"));
            }
        }
        if s.entropy_coef_choices.is_empty() || s.hidden_layer_choices.is_empty() {
            return bad("search choice lists must be non-empty".into());
        }
        if s.entropy_coef_choices.iter().any(|e| *e < 0.0) {
            return bad("search.entropy_coef_choices must be non-negative".into());
        }
        if s.hidden_layer_choices.iter().any(|h| h.iter().any(|&w| w == 0)) {
            return bad("search.hidden_layer_choices must not contain zero-width layers".into());
        }
        Ok(())
    }

    /// PPO settings for the planning stage.
    pub fn planning_ppo(&self) -> PpoConfig {
        let mut cfg = self.ppo.apply(PpoConfig::planning_defaults());
        if let Some(stage) = &self.ppo.planning {
            cfg = stage.apply(cfg);
        }
        cfg.total_env_steps = self.stages.planning_steps;
        cfg
    }

    /// PPO settings for the imitation stage (full dynamics).
    pub fn imitation_ppo(&self) -> PpoConfig {
        let mut cfg = self.ppo.apply(PpoConfig::full_dynamics_defaults());
        if let Some(stage) = &self.ppo.imitation {
            cfg = stage.apply(cfg);
        }
        cfg.total_env_steps = self.stages.imitation_steps;
        cfg
    }

    /// PPO settings for the monolithic baseline (full dynamics, combined
    /// budget).
    pub fn baseline_ppo(&self) -> PpoConfig {
        let mut cfg = self.ppo.apply(PpoConfig::full_dynamics_defaults());
        if let Some(stage) = &self.ppo.baseline {
            cfg = stage.apply(cfg);
        }
        cfg.total_env_steps = self.stages.baseline_budget();
        cfg
    }

    /// The rocket world this experiment runs in.
    pub fn world(&self) -> RocketWorldConfig {
        if self.rocket.obstacles {
            RocketWorldConfig::with_obstacles()
        } else {
            RocketWorldConfig::no_obstacles()
        }
    }

    pub fn rocket_planning(&self) -> PlanningConfig {
        let defaults = PlanningConfig::default();
        PlanningConfig {
            world: self.world(),
            max_steps: self.rocket.plan_horizon.unwrap_or(defaults.max_steps),
            ..defaults
        }
    }

    pub fn imitation_config(&self) -> ImitationConfig {
        ImitationConfig {
            tracking_exponent: self.imitation.tracking_exponent,
            collision_penalty: self.imitation.collision_penalty,
            progress_window: match self.imitation.progress_window {
                0 => None,
                w => Some(w),
            },
            densify_spacing: self.imitation.densify_spacing,
        }
    }

    pub fn quad_planning(&self) -> QuadPlanConfig {
        match self.quad.gait.as_str() {
            "walk" => QuadPlanConfig::walk(),
            _ => QuadPlanConfig::trot(),
        }
    }
}

/// Read, parse, and validate an experiment file. All failures are config
/// errors (exit code 2).
pub fn load_config(path: &Path) -> Result<ExperimentConfig, PipelineError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PipelineError::Config(format!("read {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        PipelineError::Config(msg) => {
            PipelineError::Config(format!("{}: {msg}", path.display()))
        }
        other => other,
    })
}

/// Parse and validate experiment TOML from a string.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, PipelineError> {
    let cfg: ExperimentConfig =
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[experiment]\nenv = \"rocket-plan\"\n";

    #[test]
    fn empty_text_parses_to_the_default_experiment() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        cfg.validate().unwrap();
        assert_eq!(cfg.experiment.env, "rocket-plan");
    }

    #[test]
    fn minimal_config_gets_full_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.experiment.seed, 0);
        assert_eq!(cfg.stages.planning_steps, 300_000);
        assert_eq!(cfg.stages.baseline_budget(), 600_000);
        assert!(cfg.rocket.obstacles);
        assert_eq!(cfg.quad.gait, "trot");
        let ppo = cfg.planning_ppo();
        assert_eq!(ppo.total_env_steps, 300_000);
        assert_eq!(ppo.entropy_coef, 0.0);
        let imi = cfg.imitation_ppo();
        assert_eq!(imi.entropy_coef, 0.02);
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_config_error() {
        let text = format!("{MINIMAL}\n[stages]\nplanning_steps = 10\ntypo_key = 3\n");
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("typo_key"), "{err}");
    }

    #[test]
    fn unknown_sections_are_rejected() {
        let text = format!("{MINIMAL}\n[nonsense]\nx = 1\n");
        assert_eq!(parse_config(&text).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn partial_sections_keep_defaults_for_missing_keys() {
        let text = format!("{MINIMAL}\n[stages]\nplanning_steps = 12345\n");
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.stages.planning_steps, 12_345);
        assert_eq!(cfg.stages.imitation_steps, 300_000);
        assert!((cfg.stages.gate_distance - 2.0).abs() < 1e-12);
    }

    #[test]
    fn baseline_budget_defaults_to_combined_stages() {
        let text = format!(
            "{MINIMAL}\n[stages]\nplanning_steps = 11\nimitation_steps = 22\n"
        );
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.stages.baseline_budget(), 33);
        let explicit = format!(
            "{MINIMAL}\n[stages]\nbaseline_steps = 7\n"
        );
        assert_eq!(parse_config(&explicit).unwrap().stages.baseline_budget(), 7);
    }

    #[test]
    fn ppo_overrides_apply_on_top_of_stage_presets() {
        let text = format!(
            "{MINIMAL}\n[ppo]\nlearning_rate = 0.001\nhidden_layers = [32, 32]\n"
        );
        let cfg = parse_config(&text).unwrap();
        let plan = cfg.planning_ppo();
        assert!((plan.learning_rate - 0.001).abs() < 1e-15);
        assert_eq!(plan.hidden_layers, vec![32, 32]);
        assert_eq!(plan.entropy_coef, 0.0, "preset field untouched");
        let imi = cfg.imitation_ppo();
        assert!((imi.learning_rate - 0.001).abs() < 1e-15);
        assert_eq!(imi.entropy_coef, 0.02, "stage preset still wins where unset");
    }

    #[test]
    fn bad_env_and_bad_gait_are_config_errors() {
        let err = parse_config("[experiment]\nenv = \"rocket-full\"\n").unwrap_err();
        assert!(err.to_string().contains("rocket-full"), "{err}");
        let text = format!("{MINIMAL}\n[quad]\ngait = \"gallop\"\n");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn zero_progress_window_disables_windowing() {
        let text = format!("{MINIMAL}\n[imitation]\nprogress_window = 0\n");
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.imitation_config().progress_window, None);
        let dflt = parse_config(MINIMAL).unwrap();
        assert_eq!(dflt.imitation_config().progress_window, Some(25));
    }

    #[test]
    fn obstacle_flag_switches_world_presets() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert!(cfg.world().obstacles_enabled);
        let text = format!("{MINIMAL}\n[rocket]\nobstacles = false\n");
        let cfg = parse_config(&text).unwrap();
        assert!(!cfg.world().obstacles_enabled);
        assert!((cfg.world().goal_exponent - (-1.0)).abs() < 1e-15);
    }

    #[test]
    fn robustness_window_bounds_are_checked() {
        let text = format!("{MINIMAL}\n[robustness]\nwindow = [0.9, 0.2]\n");
        assert_eq!(parse_config(&text).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn stage_tables_layer_over_shared_ppo_overrides() {
        let text = format!(
            "{MINIMAL}\n[ppo]\nlearning_rate = 0.002\n\n[ppo.planning]\ngamma = 0.999\nsteps_per_update = 4096\n"
        );
        let cfg = parse_config(&text).unwrap();
        let plan = cfg.planning_ppo();
        assert!((plan.learning_rate - 0.002).abs() < 1e-15, "shared key reaches planning");
        assert!((plan.gamma - 0.999).abs() < 1e-15, "stage key applies");
        assert_eq!(plan.steps_per_update, 4096);
        let imi = cfg.imitation_ppo();
        assert!((imi.learning_rate - 0.002).abs() < 1e-15, "shared key reaches imitation");
        assert!((imi.gamma - 0.995).abs() < 1e-15, "planning-only key leaves imitation preset");
        let base = cfg.baseline_ppo();
        assert!((base.gamma - 0.995).abs() < 1e-15);
        assert_eq!(base.steps_per_update, 1024);
    }

    #[test]
    fn nested_stage_tables_inside_stage_tables_are_rejected() {
        let text = format!("{MINIMAL}\n[ppo.planning.imitation]\ngamma = 0.9\n");
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("stage tables"), "{err}");
    }

    #[test]
    fn plan_horizon_overrides_planner_max_steps() {
        let dflt = parse_config(MINIMAL).unwrap();
        assert_eq!(dflt.rocket_planning().max_steps, 200);
        let text = format!("{MINIMAL}\n[rocket]\nplan_horizon = 2000\n");
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.rocket_planning().max_steps, 2000);
        let zero = format!("{MINIMAL}\n[rocket]\nplan_horizon = 0\n");
        assert_eq!(parse_config(&zero).unwrap_err().exit_code(), 2);
    }
}
