//! Experience collection and advantage estimation.
//!
//! Workers own one environment and one RNG stream each; batches are laid out
//! worker-major, so a serial collection loop produces exactly the batch a
//! parallel one would.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::env::Environment;
use crate::nn::{GaussianPolicy, MlpParams};

use super::derive_seed;

/// One update's worth of experience across all workers, stored worker-major:
/// worker 0's steps first, then worker 1's, and so on. Observations and
/// actions are flattened row-major.
///
/// `actions` holds the *sampled* actions (before any environment clamping),
/// matching the stored `log_probs`; ratios in the update depend on that.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBatch {
    pub obs_dim: usize,
    pub act_dim: usize,
    /// Number of records contributed by each worker, in order.
    pub worker_lengths: Vec<usize>,
    pub observations: Vec<f64>,
    pub actions: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    /// V(s_t) under the collection-time value net.
    pub values: Vec<f64>,
    /// V(s_{t+1}) of the true successor state — the bootstrap source at
    /// truncations (and at batch cuts mid-episode).
    pub next_values: Vec<f64>,
    /// True episode ends; no bootstrapping past these.
    pub terminated: Vec<bool>,
    /// Horizon cuts; value flow bootstraps through `next_values` here.
    pub truncated: Vec<bool>,
    /// Returns and lengths of episodes that *finished* during this batch.
    pub episode_returns: Vec<f64>,
    pub episode_lengths: Vec<u64>,
}

impl RolloutBatch {
    pub fn len(&self) -> usize {
        self.log_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_probs.is_empty()
    }

    pub fn observation(&self, i: usize) -> &[f64] {
        &self.observations[i * self.obs_dim..(i + 1) * self.obs_dim]
    }

    pub fn action(&self, i: usize) -> &[f64] {
        &self.actions[i * self.act_dim..(i + 1) * self.act_dim]
    }

    /// Half-open record ranges per worker.
    pub fn worker_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::with_capacity(self.worker_lengths.len());
        let mut start = 0;
        for &len in &self.worker_lengths {
            out.push(start..start + len);
            start += len;
        }
        out
    }
}

struct Worker {
    env: Box<dyn Environment>,
    rng: ChaCha8Rng,
    obs: Vec<f64>,
    episode_return: f64,
    episode_length: u64,
}

/// A set of independently seeded workers. Episode accumulators persist
/// across batches, so an episode spanning two updates is credited once,
/// when it ends.
pub struct EnvPool {
    workers: Vec<Worker>,
}

impl EnvPool {
    /// `factory(i)` builds worker `i`'s environment; all workers share the
    /// base seed but draw from separate RNG streams.
    pub fn new(factory: &dyn Fn(usize) -> Box<dyn Environment>, num_workers: usize, seed: u64) -> Self {
        let workers = (0..num_workers)
            .map(|i| {
                let mut env = factory(i);
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
                rng.set_stream(i as u64);
                let obs = env.reset(Some(derive_seed(seed, 100 + i as u64)));
                Worker {
                    env,
                    rng,
                    obs,
                    episode_return: 0.0,
                    episode_length: 0,
                }
            })
            .collect();
        EnvPool { workers }
    }

    pub fn num_workers(&self) -> usize {
        self.workers.len()
    }

    pub fn env(&self, worker: usize) -> &dyn Environment {
        self.workers[worker].env.as_ref()
    }
}

/// Advance each worker `steps[w]` times and assemble the records
/// worker-major. Resets environments as episodes end.
pub fn collect_rollouts(
    policy: &GaussianPolicy,
    value_net: &MlpParams,
    pool: &mut EnvPool,
    steps: &[usize],
) -> RolloutBatch {
    assert_eq!(steps.len(), pool.workers.len(), "one step count per worker");
    let obs_dim = value_net.spec.input_dim();
    let act_dim = policy.action_dim();
    let total: usize = steps.iter().sum();
    let mut batch = RolloutBatch {
        obs_dim,
        act_dim,
        worker_lengths: steps.to_vec(),
        observations: Vec::with_capacity(total * obs_dim),
        actions: Vec::with_capacity(total * act_dim),
        log_probs: Vec::with_capacity(total),
        rewards: Vec::with_capacity(total),
        values: Vec::with_capacity(total),
        next_values: Vec::with_capacity(total),
        terminated: Vec::with_capacity(total),
        truncated: Vec::with_capacity(total),
        episode_returns: Vec::new(),
        episode_lengths: Vec::new(),
    };
    for (worker, &n) in pool.workers.iter_mut().zip(steps) {
        for _ in 0..n {
            let (action, log_prob) = policy.sample(&worker.obs, &mut worker.rng);
            let value = value_net.forward(&worker.obs)[0];
            let result = worker.env.step(&action);
            let next_value = value_net.forward(&result.observation)[0];

            batch.observations.extend_from_slice(&worker.obs);
            batch.actions.extend_from_slice(&action);
            batch.log_probs.push(log_prob);
            batch.rewards.push(result.reward);
            batch.values.push(value);
            batch.next_values.push(next_value);
            batch.terminated.push(result.terminated);
            batch.truncated.push(result.truncated);

            worker.episode_return += result.reward;
            worker.episode_length += 1;
            if result.done() {
                batch.episode_returns.push(worker.episode_return);
                batch.episode_lengths.push(worker.episode_length);
                worker.episode_return = 0.0;
                worker.episode_length = 0;
                worker.obs = worker.env.reset(None);
            } else {
                worker.obs = result.observation;
            }
        }
    }
    batch
}

/// Generalized advantage estimation over each worker's stream, walked in
/// reverse:
///
/// `delta_t = r_t + gamma * V(s_{t+1}) * [not terminated] - V(s_t)`
/// `A_t     = delta_t + gamma * lambda * [episode continues] * A_{t+1}`
///
/// Termination zeroes the bootstrap; truncation keeps it (the episode was
/// cut, not finished) but still stops the advantage recursion. Returns are
/// `A_t + V(s_t)`.
pub fn compute_gae(batch: &RolloutBatch, gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let n = batch.len();
    let mut advantages = vec![0.0; n];
    let mut returns = vec![0.0; n];
    for range in batch.worker_ranges() {
        let mut next_advantage = 0.0;
        for i in range.rev() {
            let not_terminated = !batch.terminated[i] as u8 as f64;
            let flows = !(batch.terminated[i] || batch.truncated[i]) as u8 as f64;
            let delta =
                batch.rewards[i] + gamma * batch.next_values[i] * not_terminated - batch.values[i];
            let advantage = delta + gamma * lambda * flows * next_advantage;
            advantages[i] = advantage;
            returns[i] = advantage + batch.values[i];
            next_advantage = advantage;
        }
    }
    (advantages, returns)
}
