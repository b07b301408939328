//! Diagonal-Gaussian policy head over an MLP mean network.
//!
//! The log standard deviations are free, state-independent parameters, kept
//! inside [LOG_STD_MIN, LOG_STD_MAX] after every optimizer step so sampling
//! can neither collapse nor explode.

use rand::Rng;
use rand_distr::StandardNormal;

use super::mlp::MlpParams;

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_7;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    pub mean_net: MlpParams,
    pub log_std: Vec<f64>,
}

impl GaussianPolicy {
    pub fn new(mean_net: MlpParams, log_std_init: f64) -> Self {
        let dim = mean_net.spec.output_dim();
        let mut policy = GaussianPolicy {
            mean_net,
            log_std: vec![log_std_init; dim],
        };
        policy.clamp_log_std();
        policy
    }

    pub fn action_dim(&self) -> usize {
        self.log_std.len()
    }

    /// Deterministic-mode action: the mean network output.
    pub fn mean_action(&self, observation: &[f64]) -> Vec<f64> {
        self.mean_net.forward(observation)
    }

    /// Draw `mean + sigma ⊙ z` and return the action with its log-density.
    pub fn sample<R: Rng>(&self, observation: &[f64], rng: &mut R) -> (Vec<f64>, f64) {
        let mean = self.mean_net.forward(observation);
        let action: Vec<f64> = mean
            .iter()
            .zip(&self.log_std)
            .map(|(m, ls)| m + ls.exp() * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let log_prob = log_prob_given_mean(&mean, &self.log_std, &action);
        (action, log_prob)
    }

    pub fn log_prob(&self, observation: &[f64], action: &[f64]) -> f64 {
        let mean = self.mean_net.forward(observation);
        log_prob_given_mean(&mean, &self.log_std, action)
    }

    /// Differential entropy; for a diagonal Gaussian it only depends on the
    /// log standard deviations.
    pub fn entropy(&self) -> f64 {
        self.log_std
            .iter()
            .map(|ls| ls + 0.5 + HALF_LN_TWO_PI)
            .sum()
    }

    pub fn clamp_log_std(&mut self) {
        for ls in &mut self.log_std {
            *ls = ls.clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
    }
}

/// Diagonal-Gaussian log-density
/// `sum_i [ -0.5 ((a_i - mu_i)/sigma_i)^2 - log sigma_i - 0.5 log 2 pi ]`.
pub fn log_prob_given_mean(mean: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    assert_eq!(mean.len(), action.len(), "action dimension mismatch");
    assert_eq!(mean.len(), log_std.len(), "log_std dimension mismatch");
    mean.iter()
        .zip(log_std)
        .zip(action)
        .map(|((m, ls), a)| {
            let z = (a - m) / ls.exp();
            -0.5 * z * z - ls - HALF_LN_TWO_PI
        })
        .sum()
}
