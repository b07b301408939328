//! Full rocket dynamics: a 2-D rigid body with a dead-zoned main engine, a
//! torque-only side engine, linear drag and gravity, integrated with
//! semi-implicit Euler.
//!
//! Conventions, used consistently across the whole crate:
//! - Heading `theta = 0` points along +y; positive `theta` rotates
//!   counter-clockwise; angles live in `(-pi, pi]`.
//! - Thrust acts along the heading `(-sin theta, cos theta)`.
//! - The reward depends only on position: an exponential attractor at the
//!   goal minus exponential repulsors at the obstacle centers. Collisions are
//!   flagged but never terminal; leaving the arena is terminal.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::env::{Environment, SpaceSpec, StepInfo, StepResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocketState {
    pub position: [f64; 2],
    pub heading: f64,
    pub velocity: [f64; 2],
    pub angular_velocity: f64,
}

/// World geometry, physical constants and reward shape for the rocket tasks.
#[derive(Debug, Clone, PartialEq)]
pub struct RocketWorldConfig {
    /// Gravitational acceleration along y (negative pulls down), m/s^2.
    pub gravity: f64,
    /// Linear drag coefficient: drag force = -lambda * velocity, N s/m.
    pub drag_coefficient: f64,
    pub mass: f64,
    pub moment_of_inertia: f64,
    /// Main engine force at full throttle, N.
    pub main_engine_scale: f64,
    /// Side engine torque at full throttle, N m (applies no linear force).
    pub side_engine_scale: f64,
    /// Engine commands below this magnitude produce nothing.
    pub engine_dead_zone: f64,
    /// Integration step, s.
    pub dt: f64,
    pub x_bounds: [f64; 2],
    pub y_bounds: [f64; 2],
    pub start: [f64; 2],
    pub goal: [f64; 2],
    pub obstacles_enabled: bool,
    pub obstacles: [[f64; 2]; 2],
    pub obstacle_radius: f64,
    pub max_steps: u64,
    /// Goal attractor: `goal_weight * exp(goal_exponent * distance)`.
    pub goal_weight: f64,
    pub goal_exponent: f64,
    /// Obstacle repulsors, subtracted per obstacle.
    pub obstacle_weights: [f64; 2],
    pub obstacle_exponents: [f64; 2],
}

impl RocketWorldConfig {
    /// Navigation between obstacles; all exponential scales at -0.5.
    pub fn with_obstacles() -> Self {
        RocketWorldConfig {
            gravity: -2.5,
            drag_coefficient: 2.5,
            mass: 1.0,
            moment_of_inertia: 1.0,
            main_engine_scale: 50.0,
            side_engine_scale: 10.0,
            engine_dead_zone: 0.5,
            dt: 1.0 / 50.0,
            x_bounds: [-15.0, 15.0],
            y_bounds: [0.0, 30.0],
            start: [0.0, 2.0],
            goal: [0.0, 26.0],
            obstacles_enabled: true,
            obstacles: [[-3.0, 14.0], [3.0, 14.0]],
            obstacle_radius: 1.0,
            max_steps: 500,
            goal_weight: 0.9,
            goal_exponent: -0.5,
            obstacle_weights: [0.05, 0.05],
            obstacle_exponents: [-0.5, -0.5],
        }
    }

    /// Plain navigation: no obstacles, sharper goal attractor.
    pub fn no_obstacles() -> Self {
        RocketWorldConfig {
            obstacles_enabled: false,
            goal_exponent: -1.0,
            obstacle_weights: [0.0, 0.0],
            ..RocketWorldConfig::with_obstacles()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.mass > 0.0 && self.moment_of_inertia > 0.0) {
            return Err("mass and moment of inertia must be positive".into());
        }
        if !(self.dt > 0.0) {
            return Err("dt must be positive".into());
        }
        if self.drag_coefficient < 0.0 {
            return Err("drag coefficient must be non-negative".into());
        }
        if !(0.0 < self.engine_dead_zone && self.engine_dead_zone < 1.0) {
            return Err("engine dead zone must lie in (0, 1)".into());
        }
        if self.x_bounds[0] >= self.x_bounds[1] || self.y_bounds[0] >= self.y_bounds[1] {
            return Err("arena bounds are inverted".into());
        }
        for (label, p) in [("start", self.start), ("goal", self.goal)] {
            if !self.in_bounds(p) {
                return Err(format!("{label} {p:?} lies outside the arena"));
            }
        }
        if self.max_steps == 0 {
            return Err("max_steps must be positive".into());
        }
        Ok(())
    }

    pub fn in_bounds(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x_bounds[0]
            && p[0] <= self.x_bounds[1]
            && p[1] >= self.y_bounds[0]
            && p[1] <= self.y_bounds[1]
    }

    /// Largest speed the dynamics can sustain: thrust plus gravity against
    /// drag (valid because episodes start at rest).
    pub fn speed_bound(&self) -> f64 {
        if self.drag_coefficient == 0.0 {
            return f64::INFINITY;
        }
        (self.main_engine_scale + self.mass * self.gravity.abs() + 1.0) / self.drag_coefficient
    }
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let w = a.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w - two_pi
    } else {
        w
    }
}

/// Map a raw 2-dof command to (main thrust, side torque), applying the
/// clamp to [-1, 1] and the dead zones.
pub fn decode_action(cfg: &RocketWorldConfig, action: [f64; 2]) -> (f64, f64) {
    let a0 = action[0].clamp(-1.0, 1.0);
    let a1 = action[1].clamp(-1.0, 1.0);
    let main = if a0 >= cfg.engine_dead_zone {
        cfg.main_engine_scale * a0
    } else {
        0.0
    };
    let side = if a1.abs() >= cfg.engine_dead_zone {
        cfg.side_engine_scale * a1
    } else {
        0.0
    };
    (main, side)
}

/// One semi-implicit Euler step of the rigid body under thrust, gravity,
/// linear drag and an optional extra force (used for robustness probes).
pub fn dynamics_step(
    state: &RocketState,
    cfg: &RocketWorldConfig,
    main_thrust: f64,
    side_torque: f64,
    extra_force: [f64; 2],
) -> RocketState {
    let (sin_t, cos_t) = state.heading.sin_cos();
    let force = [
        main_thrust * -sin_t - cfg.drag_coefficient * state.velocity[0] + extra_force[0],
        main_thrust * cos_t + cfg.mass * cfg.gravity - cfg.drag_coefficient * state.velocity[1]
            + extra_force[1],
    ];
    let vx = state.velocity[0] + force[0] / cfg.mass * cfg.dt;
    let vy = state.velocity[1] + force[1] / cfg.mass * cfg.dt;
    let omega = state.angular_velocity + side_torque / cfg.moment_of_inertia * cfg.dt;
    RocketState {
        position: [state.position[0] + vx * cfg.dt, state.position[1] + vy * cfg.dt],
        heading: wrap_angle(state.heading + omega * cfg.dt),
        velocity: [vx, vy],
        angular_velocity: omega,
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Position-only reward: exponential goal attractor minus exponential
/// obstacle repulsors. Bounded by `(-sum(obstacle_weights), goal_weight]`.
pub fn sparse_reward(cfg: &RocketWorldConfig, position: [f64; 2]) -> f64 {
    let mut r = cfg.goal_weight * (cfg.goal_exponent * dist(position, cfg.goal)).exp();
    if cfg.obstacles_enabled {
        for i in 0..2 {
            r -= cfg.obstacle_weights[i]
                * (cfg.obstacle_exponents[i] * dist(position, cfg.obstacles[i])).exp();
        }
    }
    r
}

/// Hash of everything the reward field depends on, so artifacts produced
/// against one layout are never silently replayed against another.
pub fn reward_layout_hash(cfg: &RocketWorldConfig) -> String {
    let canon = format!(
        "goal={} {};bounds={} {} {} {};obstacles={};o0={} {};o1={} {};radius={};w={} {} {};k={} {} {}",
        cfg.goal[0],
        cfg.goal[1],
        cfg.x_bounds[0],
        cfg.x_bounds[1],
        cfg.y_bounds[0],
        cfg.y_bounds[1],
        cfg.obstacles_enabled,
        cfg.obstacles[0][0],
        cfg.obstacles[0][1],
        cfg.obstacles[1][0],
        cfg.obstacles[1][1],
        cfg.obstacle_radius,
        cfg.goal_weight,
        cfg.obstacle_weights[0],
        cfg.obstacle_weights[1],
        cfg.goal_exponent,
        cfg.obstacle_exponents[0],
        cfg.obstacle_exponents[1],
    );
    let digest = Sha256::digest(canon.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// 10-dim observation: pose, velocities, and goal-relative terms.
///
/// `[x, y, theta, vx, vy, omega, gx - x, gy - y, distance, angle_to_goal]`
/// where `angle_to_goal` is the signed heading error toward the goal, zero
/// when the goal is dead ahead and zero by convention at zero distance.
pub fn observe(cfg: &RocketWorldConfig, state: &RocketState) -> Vec<f64> {
    let rel = [
        cfg.goal[0] - state.position[0],
        cfg.goal[1] - state.position[1],
    ];
    let distance = rel[0].hypot(rel[1]);
    let angle_to_goal = if distance == 0.0 {
        0.0
    } else {
        // Bearing in the same convention as heading: 0 along +y, CCW positive.
        wrap_angle((-rel[0]).atan2(rel[1]) - state.heading)
    };
    vec![
        state.position[0],
        state.position[1],
        state.heading,
        state.velocity[0],
        state.velocity[1],
        state.angular_velocity,
        rel[0],
        rel[1],
        distance,
        angle_to_goal,
    ]
}

/// External force applied over a window of steps (robustness probes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationWindow {
    pub force: [f64; 2],
    pub start_step: u64,
    pub duration_steps: u64,
}

impl PerturbationWindow {
    fn active_at(&self, step: u64) -> bool {
        step >= self.start_step && step < self.start_step + self.duration_steps
    }
}

/// `rocket-full`: the original task with full dynamics and sparse reward.
pub struct RocketEnv {
    cfg: RocketWorldConfig,
    state: RocketState,
    steps: u64,
    needs_reset: bool,
    perturbation: Option<PerturbationWindow>,
}

impl RocketEnv {
    pub fn new(cfg: RocketWorldConfig) -> Self {
        if let Err(e) = cfg.validate() {
            panic!("invalid rocket config: {e}");
        }
        let state = initial_state(&cfg);
        RocketEnv {
            cfg,
            state,
            steps: 0,
            needs_reset: false,
            perturbation: None,
        }
    }

    pub fn cfg(&self) -> &RocketWorldConfig {
        &self.cfg
    }

    pub fn state(&self) -> &RocketState {
        &self.state
    }

    /// Install an external force window. Survives resets so a trial can be
    /// configured before or after `reset`; pass `None` to clear.
    pub fn set_perturbation(&mut self, window: Option<PerturbationWindow>) {
        self.perturbation = window;
    }

    /// Shared by the full and imitation environments: physics, bookkeeping
    /// and termination, with the reward left to the caller.
    pub(crate) fn step_dynamics(&mut self, action: &[f64]) -> (Vec<f64>, bool, bool, StepInfo) {
        assert!(
            !self.needs_reset,
            "episode finished; call reset() before stepping again"
        );
        let mut a = action.to_vec();
        let action_clamped = self.action_space().clamp(&mut a);
        let (main, side) = decode_action(&self.cfg, [a[0], a[1]]);
        let extra = match &self.perturbation {
            Some(w) if w.active_at(self.steps) => w.force,
            _ => [0.0, 0.0],
        };
        self.state = dynamics_step(&self.state, &self.cfg, main, side, extra);
        self.steps += 1;

        let out_of_bounds = !self.cfg.in_bounds(self.state.position);
        let terminated = out_of_bounds;
        let truncated = !terminated && self.steps >= self.cfg.max_steps;
        self.needs_reset = terminated || truncated;

        let collision = self.cfg.obstacles_enabled
            && self
                .cfg
                .obstacles
                .iter()
                .any(|o| dist(self.state.position, *o) <= self.cfg.obstacle_radius);
        let info = StepInfo {
            step: self.steps,
            action_clamped,
            collision,
            distance_to_goal: dist(self.state.position, self.cfg.goal),
            termination_reason: out_of_bounds.then(|| "out_of_bounds".to_string()),
            ..StepInfo::default()
        };
        (observe(&self.cfg, &self.state), terminated, truncated, info)
    }
}

fn initial_state(cfg: &RocketWorldConfig) -> RocketState {
    RocketState {
        position: cfg.start,
        heading: 0.0,
        velocity: [0.0, 0.0],
        angular_velocity: 0.0,
    }
}

/// Observation bounds that provably contain every reachable state, including
/// the single out-of-bounds observation a terminal step can emit.
pub(crate) fn rocket_observation_space(cfg: &RocketWorldConfig) -> SpaceSpec {
    let v = cfg.speed_bound().min(1e6);
    let pos_margin = v * cfg.dt + 1.0;
    let omega_max =
        cfg.side_engine_scale / cfg.moment_of_inertia * cfg.dt * (cfg.max_steps as f64 + 1.0);
    let span_x = cfg.x_bounds[1] - cfg.x_bounds[0] + 2.0 * pos_margin;
    let span_y = cfg.y_bounds[1] - cfg.y_bounds[0] + 2.0 * pos_margin;
    let diag = span_x.hypot(span_y);
    let pi = std::f64::consts::PI;
    SpaceSpec::new(
        vec![
            cfg.x_bounds[0] - pos_margin,
            cfg.y_bounds[0] - pos_margin,
            -pi,
            -v,
            -v,
            -omega_max,
            -span_x,
            -span_y,
            0.0,
            -pi,
        ],
        vec![
            cfg.x_bounds[1] + pos_margin,
            cfg.y_bounds[1] + pos_margin,
            pi,
            v,
            v,
            omega_max,
            span_x,
            span_y,
            diag,
            pi,
        ],
    )
}

impl Environment for RocketEnv {
    fn id(&self) -> &'static str {
        "rocket-full"
    }

    fn observation_space(&self) -> SpaceSpec {
        rocket_observation_space(&self.cfg)
    }

    fn action_space(&self) -> SpaceSpec {
        SpaceSpec::new(vec![-1.0, -1.0], vec![1.0, 1.0])
    }

    fn reset(&mut self, _seed: Option<u64>) -> Vec<f64> {
        self.state = initial_state(&self.cfg);
        self.steps = 0;
        self.needs_reset = false;
        observe(&self.cfg, &self.state)
    }

    fn step(&mut self, action: &[f64]) -> StepResult {
        let (observation, terminated, truncated, info) = self.step_dynamics(action);
        let reward = sparse_reward(&self.cfg, self.state.position);
        StepResult {
            observation,
            reward,
            terminated,
            truncated,
            info,
        }
    }

    /// The reward never exceeds `goal_weight` (obstacle terms only subtract),
    /// so the return is bounded by `goal_weight * max_steps`.
    fn theoretical_max_return(&self) -> f64 {
        self.cfg.goal_weight * self.cfg.max_steps as f64
    }

    fn max_steps(&self) -> u64 {
        self.cfg.max_steps
    }
}

/// One row of a dumped episode.
#[derive(Debug, Clone, Copy)]
pub struct SimTrajectoryRow {
    pub t: f64,
    pub state: RocketState,
    pub reward: f64,
    pub collision: bool,
}

/// Write an episode dump: `t,x,y,theta,vx,vy,omega,reward,collision`.
pub fn write_sim_csv(path: &Path, rows: &[SimTrajectoryRow]) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "t,x,y,theta,vx,vy,omega,reward,collision")?;
    for r in rows {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{}",
            r.t,
            r.state.position[0],
            r.state.position[1],
            r.state.heading,
            r.state.velocity[0],
            r.state.velocity[1],
            r.state.angular_velocity,
            r.reward,
            r.collision as u8
        )?;
    }
    f.flush()
}
