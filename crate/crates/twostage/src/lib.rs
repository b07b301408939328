//! Two-stage reinforcement-learning control.
//!
//! The pipeline trains a *motion planner* on deliberately simplified additive
//! dynamics (actions are bounded state deltas), extracts the planner's
//! deterministic trajectory, and then trains a *controller* on the full
//! dynamics whose only job is to follow that trajectory. A monolithic PPO
//! baseline on the full task is included for comparison.
//!
//! Layout:
//! - [`nn`]: dense MLP with manual backprop, diagonal-Gaussian policy head,
//!   Adam, checkpoints. Everything is `f64`.
//! - [`ppo`]: clipped-surrogate PPO with GAE, deterministic rollouts and
//!   learning curves.
//! - [`env`]: the environment contract shared by all tasks.
//! - [`rocket`]: 2-D rigid-body rocket (full dynamics, planning variant,
//!   trajectory-following variant).
//! - [`quad`]: kinematic quadruped stepping-stone planner with footfall
//!   schedules.
//! - [`pipeline`]: experiment orchestration, config files, manifests, plots,
//!   robustness and hyperparameter-search harnesses.

pub mod env;
pub mod nn;
pub mod pipeline;
pub mod ppo;
pub mod quad;
pub mod rocket;
