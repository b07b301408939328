//! The planning view of the rocket task: same arena, same reward field, but
//! the "dynamics" are additive — an action is a small, bounded state delta
//! and the next state is simply `state + delta`.
//!
//! This makes the MDP nearly trivial to explore (any state nearby is one step
//! away), which is the entire point: the planner finds *where to go*, and the
//! full-dynamics stage later learns *how to fly there*.

use crate::env::{Environment, SpaceSpec, StepInfo, StepResult};
use crate::nn::GaussianPolicy;

use super::sim::{observe, reward_layout_hash, sparse_reward, wrap_angle, RocketState, RocketWorldConfig};
use super::trajectory::{ReferencePoint, ReferenceTrajectory};

/// Planner-stage parameters layered over the shared world description.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanningConfig {
    pub world: RocketWorldConfig,
    /// Planner step period, s (coarser than the simulation step).
    pub dt: f64,
    pub max_steps: u64,
    /// Per-axis position delta cap, m.
    pub position_step: f64,
    /// Heading delta cap, rad.
    pub heading_step: f64,
    /// Reaching this distance of the goal ends the episode when
    /// `terminate_on_arrival` is set.
    pub arrival_radius: f64,
    pub terminate_on_arrival: bool,
}

impl Default for PlanningConfig {
    fn default() -> Self {
        PlanningConfig {
            world: RocketWorldConfig::with_obstacles(),
            dt: 0.05,
            max_steps: 200,
            position_step: 0.5,
            heading_step: 0.05_f64.to_radians(),
            arrival_radius: 0.25,
            terminate_on_arrival: true,
        }
    }
}

impl PlanningConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.world.validate()?;
        if !(self.dt > 0.0) {
            return Err("planner dt must be positive".into());
        }
        if !(self.position_step > 0.0) || !(self.heading_step > 0.0) {
            return Err("planner step caps must be positive".into());
        }
        if self.max_steps == 0 {
            return Err("planner max_steps must be positive".into());
        }
        if self.arrival_radius < 0.0 {
            return Err("arrival radius must be non-negative".into());
        }
        Ok(())
    }
}

/// `rocket-plan`: additive-dynamics navigation in the rocket's arena.
pub struct RocketPlanningEnv {
    cfg: PlanningConfig,
    position: [f64; 2],
    heading: f64,
    steps: u64,
    needs_reset: bool,
}

impl RocketPlanningEnv {
    pub fn new(cfg: PlanningConfig) -> Self {
        if let Err(e) = cfg.validate() {
            panic!("invalid planning config: {e}");
        }
        let position = cfg.world.start;
        RocketPlanningEnv {
            cfg,
            position,
            heading: 0.0,
            steps: 0,
            needs_reset: false,
        }
    }

    pub fn cfg(&self) -> &PlanningConfig {
        &self.cfg
    }

    pub fn position(&self) -> [f64; 2] {
        self.position
    }

    /// The 7-dim planner observation is the pose slice of the full
    /// observation: `[x, y, theta, gx - x, gy - y, distance, angle_to_goal]`.
    /// Velocity terms do not exist in this MDP. The goal-relative entries are
    /// always derived from the pose, never stored.
    fn observe(&self) -> Vec<f64> {
        let full = observe(
            &self.cfg.world,
            &RocketState {
                position: self.position,
                heading: self.heading,
                velocity: [0.0, 0.0],
                angular_velocity: 0.0,
            },
        );
        vec![full[0], full[1], full[2], full[6], full[7], full[8], full[9]]
    }

    fn distance_to_goal(&self) -> f64 {
        (self.position[0] - self.cfg.world.goal[0]).hypot(self.position[1] - self.cfg.world.goal[1])
    }
}

impl Environment for RocketPlanningEnv {
    fn id(&self) -> &'static str {
        "rocket-plan"
    }

    fn observation_space(&self) -> SpaceSpec {
        let w = &self.cfg.world;
        let margin = self.cfg.position_step + 1e-9;
        let span_x = w.x_bounds[1] - w.x_bounds[0] + 2.0 * margin;
        let span_y = w.y_bounds[1] - w.y_bounds[0] + 2.0 * margin;
        let pi = std::f64::consts::PI;
        SpaceSpec::new(
            vec![
                w.x_bounds[0] - margin,
                w.y_bounds[0] - margin,
                -pi,
                -span_x,
                -span_y,
                0.0,
                -pi,
            ],
            vec![
                w.x_bounds[1] + margin,
                w.y_bounds[1] + margin,
                pi,
                span_x,
                span_y,
                span_x.hypot(span_y),
                pi,
            ],
        )
    }

    fn action_space(&self) -> SpaceSpec {
        let p = self.cfg.position_step;
        let h = self.cfg.heading_step;
        SpaceSpec::new(vec![-p, -p, -h], vec![p, p, h])
    }

    fn reset(&mut self, _seed: Option<u64>) -> Vec<f64> {
        self.position = self.cfg.world.start;
        self.heading = 0.0;
        self.steps = 0;
        self.needs_reset = false;
        self.observe()
    }

    fn step(&mut self, action: &[f64]) -> StepResult {
        assert!(
            !self.needs_reset,
            "episode finished; call reset() before stepping again"
        );
        let mut a = action.to_vec();
        let action_clamped = self.action_space().clamp(&mut a);
        self.position[0] += a[0];
        self.position[1] += a[1];
        self.heading = wrap_angle(self.heading + a[2]);
        self.steps += 1;

        let reward = sparse_reward(&self.cfg.world, self.position);
        let distance = self.distance_to_goal();
        let out_of_bounds = !self.cfg.world.in_bounds(self.position);
        let arrived =
            self.cfg.terminate_on_arrival && distance <= self.cfg.arrival_radius && !out_of_bounds;
        let terminated = out_of_bounds || arrived;
        let truncated = !terminated && self.steps >= self.cfg.max_steps;
        self.needs_reset = terminated || truncated;

        let termination_reason = if out_of_bounds {
            Some("out_of_bounds".to_string())
        } else if arrived {
            Some("goal_reached".to_string())
        } else {
            None
        };
        StepResult {
            observation: self.observe(),
            reward,
            terminated,
            truncated,
            info: StepInfo {
                step: self.steps,
                action_clamped,
                distance_to_goal: distance,
                termination_reason,
                ..StepInfo::default()
            },
        }
    }

    fn theoretical_max_return(&self) -> f64 {
        self.cfg.world.goal_weight * self.cfg.max_steps as f64
    }

    fn max_steps(&self) -> u64 {
        self.cfg.max_steps
    }
}

/// Roll the policy's *mean* action from the fixed start and record every
/// visited state with its reward: `max_steps` transitions produce
/// `max_steps + 1` states unless the episode terminates earlier.
///
/// The result is deterministic in (policy, config). Callers decide what to do
/// when `final_goal_distance()` is unsatisfying; this function just reports.
pub fn extract_trajectory(policy: &GaussianPolicy, cfg: &PlanningConfig) -> ReferenceTrajectory {
    let mut env = RocketPlanningEnv::new(cfg.clone());
    let mut obs = env.reset(None);
    let mut points = vec![ReferencePoint {
        t: 0.0,
        position: env.position,
        heading: env.heading,
        reward: sparse_reward(&cfg.world, env.position),
    }];
    loop {
        let action = policy.mean_action(&obs);
        let r = env.step(&action);
        points.push(ReferencePoint {
            t: env.steps as f64 * cfg.dt,
            position: env.position,
            heading: env.heading,
            reward: r.reward,
        });
        let done = r.done();
        obs = r.observation;
        if done {
            break;
        }
    }
    ReferenceTrajectory::new(
        cfg.dt,
        cfg.world.goal,
        reward_layout_hash(&cfg.world),
        points,
    )
    .expect("extraction yields at least two monotone states")
}
