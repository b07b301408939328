//! The outer training loop: collect, estimate advantages, update, log.

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::env::Environment;
use crate::nn::{
    save_checkpoint, Checkpoint, CheckpointError, GaussianPolicy, MlpParams, MlpSpec,
    OptimizerState,
};

use super::rollout::{collect_rollouts, compute_gae, EnvPool};
use super::update::ppo_update;
use super::{derive_seed, PpoConfig, PpoConfigError};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Config(#[from] PpoConfigError),
    #[error("checkpoint: {0}")]
    Checkpoint(#[from] CheckpointError),
    #[error("curve I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// One row of the learning curve, recorded after every update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// Cumulative environment steps consumed after this update.
    pub env_steps: u64,
    /// Mean return of episodes that finished during this update's rollout,
    /// or 0.0 if none did.
    pub mean_return: f64,
    /// `mean_return` divided by the environment's theoretical maximum.
    pub normalized_return: f64,
    /// Episodes finished during this update's rollout.
    pub episodes: u64,
    /// Mean length of those episodes (0.0 if none finished).
    pub mean_length: f64,
    pub approx_kl: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
}

/// A whole run's curve plus the context needed to interpret it.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    pub env_id: String,
    pub theoretical_max: f64,
    pub points: Vec<CurvePoint>,
}

impl LearningCurve {
    /// Write the curve as CSV with a fixed column set.
    pub fn save_csv(&self, path: &std::path::Path) -> std::io::Result<()> {
        let mut out = String::from("env_steps,mean_return,normalized_return,episodes,approx_kl,policy_loss,value_loss\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                p.env_steps,
                p.mean_return,
                p.normalized_return,
                p.episodes,
                p.approx_kl,
                p.policy_loss,
                p.value_loss
            ));
        }
        std::fs::write(path, out)
    }

    /// Normalized return at the end of training: the last point whose update
    /// window completed at least one episode. A trailing window shorter than
    /// one episode records no returns (mean 0.0 by convention), which would
    /// misreport a policy whose episodes simply outlast the window, so such
    /// points are skipped. 0.0 for an empty curve or one with no episodes.
    pub fn final_normalized_return(&self) -> f64 {
        self.points
            .iter()
            .rev()
            .find(|p| p.episodes > 0)
            .or(self.points.last())
            .map_or(0.0, |p| p.normalized_return)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutput {
    pub policy: GaussianPolicy,
    pub value_net: MlpParams,
    pub curve: LearningCurve,
}

/// Optional instrumentation for a training run.
#[derive(Default)]
pub struct TrainHooks {
    /// Directory for periodic checkpoints (written only if set).
    pub checkpoint_dir: Option<PathBuf>,
    /// Checkpoint every N updates; 0 disables periodic checkpoints.
    pub checkpoint_every_updates: u64,
    /// Called with each curve point as it is recorded.
    pub progress: Option<Box<dyn FnMut(&CurvePoint)>>,
}

fn network_spec(obs_dim: usize, hidden: &[usize], out_dim: usize) -> MlpSpec {
    let mut sizes = Vec::with_capacity(hidden.len() + 2);
    sizes.push(obs_dim);
    sizes.extend_from_slice(hidden);
    sizes.push(out_dim);
    MlpSpec::new(sizes).expect("layer sizes validated by PpoConfig")
}

fn optimizer_for(blocks: &[usize], learning_rate: f64) -> OptimizerState {
    OptimizerState::new(blocks, learning_rate)
}

fn block_sizes(net: &MlpParams) -> Vec<usize> {
    net.layers
        .iter()
        .flat_map(|l| [l.weights.len(), l.biases.len()])
        .collect()
}

/// Train a fresh agent on environments built by `factory`, consuming exactly
/// `cfg.total_env_steps` environment steps. The final (possibly short) update
/// spreads its remaining budget across workers, extra steps going to the
/// lowest-indexed ones.
///
/// Fully deterministic in `(seed, cfg, factory)`: worker RNG streams, reset
/// seeds, and both network initializations all derive from `seed` through
/// fixed stream ids, so reruns produce bit-identical outputs.
pub fn train(
    factory: &dyn Fn(usize) -> Box<dyn Environment>,
    cfg: &PpoConfig,
    seed: u64,
    hooks: &mut TrainHooks,
) -> Result<TrainOutput, TrainError> {
    cfg.validate()?;

    let mut pool = EnvPool::new(factory, cfg.num_workers, seed);
    let (obs_dim, act_dim, env_id, theoretical_max) = {
        let env = pool.env(0);
        (
            env.observation_space().dim(),
            env.action_space().dim(),
            env.id().to_string(),
            env.theoretical_max_return(),
        )
    };

    // Stream ids 1 and 100.. are taken by the pool (action noise and reset
    // seeds); networks and the shuffle RNG use their own.
    let policy_net = MlpParams::init(
        &network_spec(obs_dim, &cfg.hidden_layers, act_dim),
        derive_seed(seed, 2),
    );
    let mut policy = GaussianPolicy::new(policy_net, cfg.log_std_init);
    let mut value_net = MlpParams::init(
        &network_spec(obs_dim, &cfg.hidden_layers, 1),
        derive_seed(seed, 3),
    );
    let mut update_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 4));

    let mut policy_blocks = block_sizes(&policy.mean_net);
    policy_blocks.push(policy.log_std.len());
    let mut policy_opt = optimizer_for(&policy_blocks, cfg.learning_rate);
    let mut value_opt = optimizer_for(&block_sizes(&value_net), cfg.learning_rate);

    let update_size = (cfg.steps_per_update * cfg.num_workers) as u64;
    let mut curve = LearningCurve {
        env_id,
        theoretical_max,
        points: Vec::new(),
    };
    let mut env_steps: u64 = 0;
    let mut update_index: u64 = 0;

    while env_steps < cfg.total_env_steps {
        let this_update = (cfg.total_env_steps - env_steps).min(update_size) as usize;
        let base = this_update / cfg.num_workers;
        let remainder = this_update % cfg.num_workers;
        let lengths: Vec<usize> = (0..cfg.num_workers)
            .map(|w| base + usize::from(w < remainder))
            .collect();

        let batch = collect_rollouts(&policy, &value_net, &mut pool, &lengths);
        let (advantages, returns) = compute_gae(&batch, cfg.gamma, cfg.gae_lambda);
        let stats = ppo_update(
            &mut policy,
            &mut value_net,
            &mut policy_opt,
            &mut value_opt,
            &batch,
            &advantages,
            &returns,
            cfg,
            &mut update_rng,
        );

        env_steps += batch.len() as u64;
        update_index += 1;

        let episodes = batch.episode_returns.len() as u64;
        let (mean_return, mean_length) = if episodes > 0 {
            (
                batch.episode_returns.iter().sum::<f64>() / episodes as f64,
                batch.episode_lengths.iter().sum::<u64>() as f64 / episodes as f64,
            )
        } else {
            (0.0, 0.0)
        };
        let normalized_return = if theoretical_max != 0.0 {
            mean_return / theoretical_max
        } else {
            0.0
        };
        let point = CurvePoint {
            env_steps,
            mean_return,
            normalized_return,
            episodes,
            mean_length,
            approx_kl: stats.approx_kl,
            policy_loss: stats.policy_loss,
            value_loss: stats.value_loss,
        };
        if let Some(progress) = hooks.progress.as_mut() {
            progress(&point);
        }
        curve.points.push(point);

        if let Some(dir) = &hooks.checkpoint_dir {
            if hooks.checkpoint_every_updates > 0
                && update_index % hooks.checkpoint_every_updates == 0
            {
                let path = dir.join(format!("update-{update_index:05}.ckpt"));
                save_checkpoint(
                    &path,
                    &Checkpoint {
                        policy: policy.clone(),
                        value: value_net.clone(),
                    },
                )?;
            }
        }
    }

    Ok(TrainOutput {
        policy,
        value_net,
        curve,
    })
}
