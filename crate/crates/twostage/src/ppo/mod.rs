//! Proximal policy optimization over the environments in this crate:
//! rollout collection across seeded workers, generalized advantage
//! estimation, clipped-surrogate updates with hand-derived gradients, and
//! learning-curve logging.

mod config;
mod rollout;
mod train;
mod update;

pub use config::{PpoConfig, PpoConfigError};
pub use rollout::{collect_rollouts, compute_gae, EnvPool, RolloutBatch};
pub use train::{train, CurvePoint, LearningCurve, TrainError, TrainHooks, TrainOutput};
pub use update::{clipped_objective, normalize_advantages, ppo_update, UpdateStats};

/// Derive an independent sub-seed from a base seed and a stream id
/// (splitmix64 over golden-ratio-spaced streams). Used so the policy init,
/// value init, workers, and minibatch shuffles never share randomness.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
