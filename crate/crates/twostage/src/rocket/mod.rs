//! The 2-D rocket task family.
//!
//! Three views of one world:
//! - [`sim`]: full rigid-body dynamics with dead-zoned engines (`rocket-full`).
//! - [`planning`]: the simplified additive-dynamics planner (`rocket-plan`),
//!   plus extraction of its deterministic trajectory.
//! - [`imitation`]: full dynamics again, but rewarded for following a stored
//!   reference trajectory (`rocket-imitate`).
//!
//! [`trajectory`] holds the reference-trajectory container and its file format.

pub mod imitation;
pub mod planning;
pub mod sim;
pub mod trajectory;

pub use imitation::{
    imitation_reward, DensePoint, ImitationConfig, ReferenceIndex, RocketImitationEnv,
};
pub use planning::{extract_trajectory, PlanningConfig, RocketPlanningEnv};
pub use sim::{
    decode_action, dynamics_step, observe, reward_layout_hash, sparse_reward, wrap_angle,
    RocketEnv, RocketState, RocketWorldConfig,
};
pub use trajectory::{ReferencePoint, ReferenceTrajectory, TrajectoryError};
