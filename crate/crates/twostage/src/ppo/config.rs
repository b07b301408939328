use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("ppo config: {field} {problem}")]
pub struct PpoConfigError {
    pub field: &'static str,
    pub problem: &'static str,
}

/// Trainer hyperparameters. `steps_per_update` counts steps *per worker*.
#[derive(Debug, Clone, PartialEq)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_epsilon: f64,
    pub epochs_per_update: usize,
    pub minibatch_size: usize,
    pub steps_per_update: usize,
    pub num_workers: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub learning_rate: f64,
    pub total_env_steps: u64,
    pub max_grad_norm: f64,
    /// Hidden layer widths shared by the policy mean net and the value net.
    pub hidden_layers: Vec<usize>,
    /// Initial (state-independent) log standard deviation per action dim.
    pub log_std_init: f64,
}

impl PpoConfig {
    /// Defaults for planning environments: deterministic dynamics, no
    /// entropy bonus needed.
    pub fn planning_defaults() -> Self {
        PpoConfig {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_epsilon: 0.2,
            epochs_per_update: 10,
            minibatch_size: 256,
            steps_per_update: 2048,
            num_workers: 4,
            entropy_coef: 0.0,
            value_coef: 0.5,
            learning_rate: 3e-4,
            total_env_steps: 1_000_000,
            max_grad_norm: 0.5,
            hidden_layers: vec![64, 64],
            log_std_init: -1.0,
        }
    }

    /// Defaults for full-dynamics environments. Tracking rewards inherit the
    /// sparse profile of the reference return, so the initial signal is a few
    /// lucky rollouts that the learner must consolidate before policy drift
    /// erases them: a wide initial action distribution plus a strong entropy
    /// bonus keep those rollouts coming, a higher learning rate and smaller
    /// update window lock the gains in quickly, and a longer discount horizon
    /// chains the signal backwards along a multi-hundred-step flight.
    pub fn full_dynamics_defaults() -> Self {
        PpoConfig {
            gamma: 0.995,
            steps_per_update: 1024,
            entropy_coef: 0.02,
            learning_rate: 1e-3,
            log_std_init: -0.3,
            ..PpoConfig::planning_defaults()
        }
    }

    pub fn validate(&self) -> Result<(), PpoConfigError> {
        let err = |field, problem| Err(PpoConfigError { field, problem });
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return err("gamma", "must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return err("gae_lambda", "must lie in [0, 1]");
        }
        if !(self.clip_epsilon > 0.0) {
            return err("clip_epsilon", "must be positive");
        }
        if self.epochs_per_update == 0 {
            return err("epochs_per_update", "must be at least 1");
        }
        if self.minibatch_size == 0 {
            return err("minibatch_size", "must be at least 1");
        }
        if self.steps_per_update == 0 {
            return err("steps_per_update", "must be at least 1");
        }
        if self.num_workers == 0 {
            return err("num_workers", "must be at least 1");
        }
        if self.entropy_coef < 0.0 {
            return err("entropy_coef", "must be non-negative");
        }
        if !(self.value_coef > 0.0) {
            return err("value_coef", "must be positive");
        }
        if !(self.learning_rate > 0.0) {
            return err("learning_rate", "must be positive");
        }
        if self.total_env_steps == 0 {
            return err("total_env_steps", "must be at least 1");
        }
        if !(self.max_grad_norm > 0.0) {
            return err("max_grad_norm", "must be positive");
        }
        if self.hidden_layers.iter().any(|&w| w == 0) {
            return err("hidden_layers", "widths must be positive");
        }
        Ok(())
    }
}
