//! Perturbation-robustness probes: push the trained tracker with external
//! forces of configured magnitudes and see whether it still reaches the goal.

use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::nn::GaussianPolicy;
use crate::ppo::derive_seed;
use crate::rocket::sim::PerturbationWindow;
use crate::rocket::RocketImitationEnv;

use super::config::ExperimentConfig;
use super::run::evaluate_deterministic;
use super::PipelineError;

/// What to probe: every (magnitude, trial) pair runs one deterministic
/// rollout with one seeded random push.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessSuite {
    /// Force magnitudes, N. Magnitude 0 reproduces the unperturbed rollout.
    pub magnitudes: Vec<f64>,
    /// Push duration, s (rounded to whole simulation steps, at least one).
    pub duration: f64,
    /// Trials per magnitude.
    pub trials: usize,
    /// Onset window as fractions of the episode horizon.
    pub window: [f64; 2],
    pub seed: u64,
    /// A rollout succeeds if it comes within this of the goal without
    /// leaving the arena.
    pub success_distance: f64,
}

impl RobustnessSuite {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        let r = &cfg.robustness;
        RobustnessSuite {
            magnitudes: r.magnitudes.clone(),
            duration: r.duration,
            trials: r.trials,
            window: r.window,
            seed: r.seed.unwrap_or(cfg.experiment.seed),
            success_distance: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessRow {
    pub magnitude: f64,
    pub trial: usize,
    /// Unit direction the force points in.
    pub direction: [f64; 2],
    pub onset_step: u64,
    pub duration_steps: u64,
    /// Velocity change a free body would pick up: magnitude x applied
    /// duration / mass.
    pub impulse_velocity: f64,
    pub success: bool,
    pub final_distance: f64,
    pub min_distance: f64,
    pub max_tracking_error: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RobustnessReport {
    pub rows: Vec<RobustnessRow>,
}

impl RobustnessReport {
    /// Fraction of successful trials at one configured magnitude.
    pub fn success_rate(&self, magnitude: f64) -> f64 {
        let rows: Vec<_> = self.rows.iter().filter(|r| r.magnitude == magnitude).collect();
        if rows.is_empty() {
            return 0.0;
        }
        rows.iter().filter(|r| r.success).count() as f64 / rows.len() as f64
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), PipelineError> {
        let mut out = String::from(
            "magnitude,trial,dir_x,dir_y,onset_step,duration_steps,impulse_velocity,\
             success,final_distance,min_distance,max_tracking_error\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                r.magnitude,
                r.trial,
                r.direction[0],
                r.direction[1],
                r.onset_step,
                r.duration_steps,
                r.impulse_velocity,
                r.success,
                r.final_distance,
                r.min_distance,
                r.max_tracking_error
            ));
        }
        fs::write(path, out).map_err(|e| PipelineError::runtime("robustness csv: write", e))
    }
}

/// Probe one policy across the whole suite. Each trial gets its own RNG
/// stream, so the report is reproducible and independent of trial order.
pub fn eval_robustness(
    policy: &GaussianPolicy,
    make_env: &dyn Fn() -> RocketImitationEnv,
    suite: &RobustnessSuite,
) -> RobustnessReport {
    let mut rows = Vec::with_capacity(suite.magnitudes.len() * suite.trials);
    for (mi, &magnitude) in suite.magnitudes.iter().enumerate() {
        for trial in 0..suite.trials {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                suite.seed,
                50_000 + (mi * suite.trials + trial) as u64,
            ));
            let mut env = make_env();
            let dt = env.world().dt;
            let mass = env.world().mass;
            let horizon = env.world().max_steps;
            let duration_steps = ((suite.duration / dt).round() as u64).max(1);
            let angle = rng.random_range(0.0..TAU);
            let direction = [angle.cos(), angle.sin()];
            let lo = (suite.window[0] * horizon as f64).floor() as u64;
            let hi = ((suite.window[1] * horizon as f64).floor() as u64).max(lo);
            let onset_step = rng.random_range(lo..=hi);
            env.set_perturbation(Some(PerturbationWindow {
                force: [magnitude * direction[0], magnitude * direction[1]],
                start_step: onset_step,
                duration_steps,
            }));
            let summary = evaluate_deterministic(policy, &mut env);
            rows.push(RobustnessRow {
                magnitude,
                trial,
                direction,
                onset_step,
                duration_steps,
                impulse_velocity: magnitude * (duration_steps as f64 * dt) / mass,
                success: summary.min_goal_distance <= suite.success_distance
                    && !summary.out_of_bounds,
                final_distance: summary.final_distance,
                min_distance: summary.min_goal_distance,
                max_tracking_error: summary.max_tracking_error,
            });
        }
    }
    RobustnessReport { rows }
}
