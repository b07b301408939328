//! Kinematic quadruped planner: the body and four end-effectors are moved
//! directly by bounded per-step deltas while foot heights follow the footfall
//! schedule. No contact physics — feasibility is encouraged by the reward and
//! enforced later by whatever tracks the plan.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::env::{Environment, SpaceSpec, StepInfo, StepResult};
use crate::nn::GaussianPolicy;

use super::gait::{desired_foot_z, FootfallPattern, SWING_FOOT_HEIGHT};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadPlanConfig {
    pub pattern: FootfallPattern,
    /// Planner step, s.
    pub dt: f64,
    /// Goal position in the ground plane, m.
    pub goal: [f64; 2],
    /// Desired body height, m.
    pub com_height: f64,
    /// Body height below which the episode ends, m.
    pub min_com_height: f64,
    /// Base translation speed limit, m/s (per component).
    pub base_max_speed: f64,
    /// End-effector swing speed limit, rad/s, converted to a displacement
    /// cap through `leg_length`.
    pub ee_max_angular_speed: f64,
    /// Nominal leg length used for the angular-to-linear conversion, m.
    pub leg_length: f64,
    /// Nominal foot placements (x lateral, y along travel), order FL FR HL HR.
    pub nominal_feet: [[f64; 2]; 4],
    pub max_steps: u64,
    /// Arrival radius around the goal, m.
    pub goal_threshold: f64,
    // Reward falloffs. The first four shape the planning reward; `k_ns` and
    // `k_ee_z` belong to the original task reward evaluated for analysis.
    pub k_dist: f64,
    pub k_com: f64,
    pub k_ee_x: f64,
    pub k_com_z: f64,
    pub k_ns: f64,
    pub k_ee_z: f64,
}

impl QuadPlanConfig {
    pub fn walk() -> Self {
        QuadPlanConfig {
            pattern: FootfallPattern::walk(),
            base_max_speed: 0.264,
            ee_max_angular_speed: 1.65,
            ..QuadPlanConfig::trot()
        }
    }

    pub fn trot() -> Self {
        QuadPlanConfig {
            pattern: FootfallPattern::trot(),
            dt: 0.1,
            goal: [0.0, 2.0],
            com_height: 0.42,
            min_com_height: 0.32,
            base_max_speed: 0.63,
            ee_max_angular_speed: 1.26,
            leg_length: 0.25,
            nominal_feet: [[-0.21, 0.12], [0.21, 0.12], [-0.21, -0.12], [0.21, -0.12]],
            max_steps: 59,
            goal_threshold: 0.1,
            k_dist: -2.5,
            k_com: -4.0,
            k_ee_x: -20.0,
            k_com_z: -20.0,
            k_ns: -10.0,
            k_ee_z: -20.0,
        }
    }

    /// Per-component body displacement cap per step, m.
    pub fn body_step_cap(&self) -> f64 {
        self.base_max_speed * self.dt
    }

    /// Per-component end-effector displacement cap per step, m.
    pub fn ee_step_cap(&self) -> f64 {
        self.ee_max_angular_speed * self.leg_length * self.dt
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.dt > 0.0) {
            return Err("dt must be positive".into());
        }
        if !(self.base_max_speed > 0.0 && self.ee_max_angular_speed > 0.0) {
            return Err("speed caps must be positive".into());
        }
        if !(self.leg_length > 0.0) {
            return Err("leg length must be positive".into());
        }
        if self.min_com_height >= self.com_height {
            return Err("min_com_height must sit below com_height".into());
        }
        for k in [
            self.k_dist,
            self.k_com,
            self.k_ee_x,
            self.k_com_z,
            self.k_ns,
            self.k_ee_z,
        ] {
            if k >= 0.0 {
                return Err("reward falloffs must be negative".into());
            }
        }
        Ok(())
    }
}

/// Full kinematic planner state.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadPlanState {
    pub body: [f64; 3],
    /// Order FL, FR, HL, HR.
    pub feet: [[f64; 3]; 4],
    /// Gait phase ∈ [0,1).
    pub phase: f64,
}

impl QuadPlanState {
    /// Stance at phase 0: body at the origin at nominal height, feet at their
    /// nominal placements with schedule-driven heights.
    fn initial(cfg: &QuadPlanConfig) -> Self {
        let mut feet = [[0.0; 3]; 4];
        for (j, foot) in feet.iter_mut().enumerate() {
            foot[0] = cfg.nominal_feet[j][0];
            foot[1] = cfg.nominal_feet[j][1];
            foot[2] = desired_foot_z(cfg.pattern.contact_flag(j, 0.0));
        }
        QuadPlanState {
            body: [0.0, 0.0, cfg.com_height],
            feet,
            phase: 0.0,
        }
    }

    pub fn distance_to_goal(&self, cfg: &QuadPlanConfig) -> f64 {
        (self.body[0] - cfg.goal[0]).hypot(self.body[1] - cfg.goal[1])
    }
}

/// Multiplicative planning reward, one factor per objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanRewardBreakdown {
    /// Body distance to goal.
    pub r_dist: f64,
    /// Ground-projected body over the foot centroid.
    pub r_com: f64,
    /// Feet at their nominal lateral placements.
    pub r_ee_x: f64,
    /// Body at nominal height.
    pub r_com_z: f64,
    pub total: f64,
}

pub fn plan_reward(state: &QuadPlanState, cfg: &QuadPlanConfig) -> PlanRewardBreakdown {
    let d_goal = state.distance_to_goal(cfg);
    let cx = state.feet.iter().map(|f| f[0]).sum::<f64>() / 4.0;
    let cy = state.feet.iter().map(|f| f[1]).sum::<f64>() / 4.0;
    let d_com = (state.body[0] - cx).hypot(state.body[1] - cy);
    let x_dev: f64 = state
        .feet
        .iter()
        .zip(&cfg.nominal_feet)
        .map(|(f, n)| (f[0] - n[0]).abs())
        .sum();
    let z_dev = (state.body[2] - cfg.com_height).abs();
    PlanRewardBreakdown {
        r_dist: (cfg.k_dist * d_goal).exp(),
        r_com: (cfg.k_com * d_com).exp(),
        r_ee_x: (cfg.k_ee_x * x_dev).exp(),
        r_com_z: (cfg.k_com_z * z_dev).exp(),
        // One exp of the summed exponents; the factored values above are the
        // same quantity term by term, which the tests hold to 1e-12.
        total: (cfg.k_dist * d_goal + cfg.k_com * d_com + cfg.k_ee_x * x_dev + cfg.k_com_z * z_dev)
            .exp(),
    }
}

/// The original task's multiplicative reward, evaluated on a pair of
/// consecutive kinematic snapshots. The full-physics environment that would
/// emit this lives outside this crate's scope; the terms are provided (and
/// unit-tested) as a library.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OriginalRewardBreakdown {
    pub r_dist: f64,
    /// No-slip: scheduled contact feet should not translate between steps.
    pub r_ns: f64,
    /// Foot heights should match the schedule.
    pub r_ee_z: f64,
    pub r_com: f64,
    pub total: f64,
}

pub fn original_quad_reward(
    prev: &QuadPlanState,
    curr: &QuadPlanState,
    cfg: &QuadPlanConfig,
) -> OriginalRewardBreakdown {
    let d_goal = curr.distance_to_goal(cfg);
    let cx = curr.feet.iter().map(|f| f[0]).sum::<f64>() / 4.0;
    let cy = curr.feet.iter().map(|f| f[1]).sum::<f64>() / 4.0;
    let d_com = (curr.body[0] - cx).hypot(curr.body[1] - cy);
    let mut slip = 0.0;
    let mut z_dev = 0.0;
    for j in 0..4 {
        let contact = cfg.pattern.contact_flag(j, curr.phase);
        if contact {
            let dx = curr.feet[j][0] - prev.feet[j][0];
            let dy = curr.feet[j][1] - prev.feet[j][1];
            let dz = curr.feet[j][2] - prev.feet[j][2];
            slip += (dx * dx + dy * dy + dz * dz).sqrt();
        }
        z_dev += (curr.feet[j][2] - desired_foot_z(contact)).abs();
    }
    OriginalRewardBreakdown {
        r_dist: (cfg.k_dist * d_goal).exp(),
        r_ns: (cfg.k_ns * slip).exp(),
        r_ee_z: (cfg.k_ee_z * z_dev).exp(),
        r_com: (cfg.k_com * d_com).exp(),
        total: (cfg.k_dist * d_goal + cfg.k_ns * slip + cfg.k_ee_z * z_dev + cfg.k_com * d_com)
            .exp(),
    }
}

/// `quad-plan`: additive kinematic transitions under per-step caps, with the
/// 11-dim action (body Δxyz + four feet Δxy) and schedule-driven foot heights.
pub struct QuadPlanEnv {
    cfg: QuadPlanConfig,
    state: QuadPlanState,
    start_distance: f64,
    steps: u64,
    needs_reset: bool,
}

impl QuadPlanEnv {
    pub fn new(cfg: QuadPlanConfig) -> Self {
        cfg.validate().expect("invalid quad planner config");
        let state = QuadPlanState::initial(&cfg);
        let start_distance = state.distance_to_goal(&cfg);
        QuadPlanEnv {
            cfg,
            state,
            start_distance,
            steps: 0,
            needs_reset: true,
        }
    }

    pub fn cfg(&self) -> &QuadPlanConfig {
        &self.cfg
    }

    pub fn state(&self) -> &QuadPlanState {
        &self.state
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    fn observe(&self) -> Vec<f64> {
        let mut obs = Vec::with_capacity(19);
        obs.extend_from_slice(&self.state.body);
        for foot in &self.state.feet {
            obs.extend_from_slice(foot);
        }
        obs.push(self.state.phase);
        obs.push(self.cfg.goal[0] - self.state.body[0]);
        obs.push(self.cfg.goal[1] - self.state.body[1]);
        obs.push(self.state.distance_to_goal(&self.cfg));
        obs
    }
}

impl Environment for QuadPlanEnv {
    fn id(&self) -> &'static str {
        "quad-plan"
    }

    fn observation_space(&self) -> SpaceSpec {
        let cfg = &self.cfg;
        let body_cap = cfg.body_step_cap();
        let ee_budget = cfg.ee_step_cap() * (cfg.max_steps + 1) as f64;
        // The deviation cutoff keeps the body inside start_distance of the
        // goal plus one final overshooting step.
        let reach = self.start_distance + 2.0 * body_cap;
        let mut low = Vec::with_capacity(19);
        let mut high = Vec::with_capacity(19);
        low.extend_from_slice(&[
            cfg.goal[0] - reach,
            cfg.goal[1] - reach,
            cfg.min_com_height - 2.0 * body_cap,
        ]);
        high.extend_from_slice(&[
            cfg.goal[0] + reach,
            cfg.goal[1] + reach,
            cfg.com_height + body_cap * (cfg.max_steps + 1) as f64,
        ]);
        for nominal in &cfg.nominal_feet {
            low.extend_from_slice(&[nominal[0] - ee_budget, nominal[1] - ee_budget, 0.0]);
            high.extend_from_slice(&[
                nominal[0] + ee_budget,
                nominal[1] + ee_budget,
                SWING_FOOT_HEIGHT,
            ]);
        }
        low.push(0.0);
        high.push(1.0);
        low.extend_from_slice(&[-reach, -reach, 0.0]);
        high.extend_from_slice(&[reach, reach, reach]);
        SpaceSpec::new(low, high)
    }

    fn action_space(&self) -> SpaceSpec {
        let body = self.cfg.body_step_cap();
        let ee = self.cfg.ee_step_cap();
        let mut high = vec![body; 3];
        high.extend(std::iter::repeat(ee).take(8));
        let low = high.iter().map(|h| -h).collect();
        SpaceSpec::new(low, high)
    }

    fn reset(&mut self, _seed: Option<u64>) -> Vec<f64> {
        self.state = QuadPlanState::initial(&self.cfg);
        self.start_distance = self.state.distance_to_goal(&self.cfg);
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
        for i in 0..3 {
            self.state.body[i] += a[i];
        }
        for j in 0..4 {
            self.state.feet[j][0] += a[3 + 2 * j];
            self.state.feet[j][1] += a[4 + 2 * j];
        }
        self.state.phase =
            (self.state.phase + self.cfg.dt / self.cfg.pattern.period).rem_euclid(1.0);
        for j in 0..4 {
            self.state.feet[j][2] =
                desired_foot_z(self.cfg.pattern.contact_flag(j, self.state.phase));
        }
        self.steps += 1;

        let reward = plan_reward(&self.state, &self.cfg).total;
        let distance = self.state.distance_to_goal(&self.cfg);
        // Conditions in fixed precedence: arrival, deviation, height, horizon.
        let arrived = distance <= self.cfg.goal_threshold;
        let deviated = !arrived && distance > self.start_distance;
        let collapsed = !arrived && !deviated && self.state.body[2] < self.cfg.min_com_height;
        let terminated = arrived || deviated || collapsed;
        let truncated = !terminated && self.steps >= self.cfg.max_steps;
        self.needs_reset = terminated || truncated;

        let termination_reason = if arrived {
            Some("goal_reached".to_string())
        } else if deviated {
            Some("deviation".to_string())
        } else if collapsed {
            Some("com_height".to_string())
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
        self.cfg.max_steps as f64
    }

    fn max_steps(&self) -> u64 {
        self.cfg.max_steps
    }
}

/// One serialized planner state.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadTrajectoryRow {
    pub t: f64,
    pub phase: f64,
    pub body: [f64; 3],
    pub feet: [[f64; 3]; 4],
    pub contacts: [bool; 4],
}

#[derive(Debug, Error)]
pub enum QuadTrajectoryError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported trajectory version: {0:?}")]
    UnsupportedVersion(String),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

const QUAD_TRAJECTORY_FORMAT: &str = "twostage-quadtraj v1";
const QUAD_TRAJECTORY_COLUMNS: &str = "t,phase,bx,by,bz,e0x,e0y,e0z,e1x,e1y,e1z,e2x,e2y,e2z,e3x,e3y,e3z,c0,c1,c2,c3";

/// Deterministic rollout of the policy's mean action; one row per visited
/// state including the initial stance.
pub fn extract_quad_trajectory(
    policy: &GaussianPolicy,
    cfg: &QuadPlanConfig,
) -> Vec<QuadTrajectoryRow> {
    let mut env = QuadPlanEnv::new(cfg.clone());
    let mut obs = env.reset(None);
    let row = |env: &QuadPlanEnv| QuadTrajectoryRow {
        t: env.steps() as f64 * cfg.dt,
        phase: env.state().phase,
        body: env.state().body,
        feet: env.state().feet,
        contacts: cfg.pattern.contacts(env.state().phase),
    };
    let mut rows = vec![row(&env)];
    loop {
        let action = policy.mean_action(&obs);
        let r = env.step(&action);
        rows.push(row(&env));
        let done = r.done();
        obs = r.observation;
        if done {
            break;
        }
    }
    rows
}

pub fn save_quad_trajectory(path: &Path, rows: &[QuadTrajectoryRow]) -> Result<(), QuadTrajectoryError> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "{QUAD_TRAJECTORY_FORMAT}")?;
    writeln!(f, "points: {}", rows.len())?;
    writeln!(f, "{QUAD_TRAJECTORY_COLUMNS}")?;
    for r in rows {
        write!(f, "{},{}", r.t, r.phase)?;
        for v in r.body {
            write!(f, ",{v}")?;
        }
        for foot in &r.feet {
            for v in foot {
                write!(f, ",{v}")?;
            }
        }
        for c in r.contacts {
            write!(f, ",{}", c as u8)?;
        }
        writeln!(f)?;
    }
    f.flush()?;
    Ok(())
}

pub fn load_quad_trajectory(path: &Path) -> Result<Vec<QuadTrajectoryRow>, QuadTrajectoryError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let version = lines.next().map(|(_, l)| l).unwrap_or_default();
    if version != QUAD_TRAJECTORY_FORMAT {
        return Err(QuadTrajectoryError::UnsupportedVersion(version.to_string()));
    }
    let fail = |line: usize, message: &str| QuadTrajectoryError::Format {
        line: line + 1,
        message: message.to_string(),
    };
    let (line, count) = lines.next().ok_or_else(|| fail(1, "missing points header"))?;
    let declared: usize = count
        .strip_prefix("points: ")
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| fail(line, "malformed points header"))?;
    let (line, header) = lines.next().ok_or_else(|| fail(2, "missing column header"))?;
    if header != QUAD_TRAJECTORY_COLUMNS {
        return Err(fail(line, "unexpected column header"));
    }
    let mut rows = Vec::with_capacity(declared);
    for (line, text) in lines {
        let fields: Vec<&str> = text.split(',').collect();
        if fields.len() != 21 {
            return Err(fail(line, "expected 21 fields"));
        }
        let num = |i: usize| -> Result<f64, QuadTrajectoryError> {
            fields[i]
                .parse()
                .map_err(|_| fail(line, &format!("bad float in field {i}")))
        };
        let flag = |i: usize| -> Result<bool, QuadTrajectoryError> {
            match fields[i] {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(fail(line, &format!("bad contact flag in field {i}"))),
            }
        };
        let mut feet = [[0.0; 3]; 4];
        for (j, foot) in feet.iter_mut().enumerate() {
            for (k, v) in foot.iter_mut().enumerate() {
                *v = num(5 + 3 * j + k)?;
            }
        }
        rows.push(QuadTrajectoryRow {
            t: num(0)?,
            phase: num(1)?,
            body: [num(2)?, num(3)?, num(4)?],
            feet,
            contacts: [flag(17)?, flag(18)?, flag(19)?, flag(20)?],
        });
    }
    if rows.len() != declared {
        return Err(QuadTrajectoryError::Format {
            line: 2,
            message: format!("declared {declared} points, found {}", rows.len()),
        });
    }
    Ok(rows)
}
