//! Quadruped motion planning over a kinematic body + end-effector state.
//!
//! The planner treats locomotion as "move five points around under speed
//! caps": the body translates freely while each foot's height is dictated by
//! a footfall schedule, so any plan it produces is schedule-compliant by
//! construction. The reward library also evaluates the original task's
//! no-slip and foot-height terms for analysis.

mod gait;
mod planning;

pub use gait::{desired_foot_z, FootfallPattern, Gait, SWING_FOOT_HEIGHT};
pub use planning::{
    extract_quad_trajectory, load_quad_trajectory, original_quad_reward, plan_reward,
    save_quad_trajectory, OriginalRewardBreakdown, PlanRewardBreakdown, QuadPlanConfig,
    QuadPlanEnv, QuadPlanState, QuadTrajectoryError, QuadTrajectoryRow,
};
