//! The imitation view: full rocket dynamics, but the sparse navigation reward
//! is replaced by a dense trajectory-following reward.
//!
//! The stored reference is densified to centimeter spacing and matched by
//! nearest point under a monotone progress window, so reward exists along the
//! *entire* corridor the planner found rather than only near the goal. The
//! per-step reward is
//!
//! `exp(tracking_exponent * |x - xbar|) * R(xbar) - collision_penalty * 1[collision]`
//!
//! where `xbar` is the matched reference position and `R(xbar)` its stored
//! sparse reward.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::env::{Environment, SpaceSpec, StepResult};

use super::sim::{
    reward_layout_hash, rocket_observation_space, PerturbationWindow, RocketEnv, RocketState,
    RocketWorldConfig,
};
use super::trajectory::{ReferenceTrajectory, TrajectoryError};

#[derive(Debug, Clone, PartialEq)]
pub struct ImitationConfig {
    /// Exponential falloff of reward with distance to the matched point.
    pub tracking_exponent: f64,
    /// Flat penalty per obstacle-contact step.
    pub collision_penalty: f64,
    /// How many densified points past the last match the search may advance
    /// per query. `None` searches the whole reference (used by analysis).
    pub progress_window: Option<usize>,
    /// Maximum spacing between densified reference points, m.
    pub densify_spacing: f64,
}

impl Default for ImitationConfig {
    fn default() -> Self {
        ImitationConfig {
            tracking_exponent: -0.625,
            collision_penalty: 0.2,
            progress_window: Some(25),
            densify_spacing: 0.025,
        }
    }
}

/// One densified reference sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensePoint {
    pub position: [f64; 2],
    pub reward: f64,
}

/// Densified reference with monotone nearest-point matching state.
#[derive(Debug, Clone)]
pub struct ReferenceIndex {
    points: Vec<DensePoint>,
    window: Option<usize>,
    last_matched: usize,
}

impl ReferenceIndex {
    /// Densify `trajectory` by linear interpolation at `cfg.densify_spacing`,
    /// recomputing the sparse reward at every interpolated position (the
    /// reward field is available, so interpolating stored rewards would only
    /// add error). Fails if the trajectory was planned against a different
    /// reward layout than `world`.
    pub fn build(
        trajectory: &ReferenceTrajectory,
        world: &RocketWorldConfig,
        cfg: &ImitationConfig,
    ) -> Result<Self, TrajectoryError> {
        let expected = reward_layout_hash(world);
        if trajectory.layout_hash != expected {
            return Err(TrajectoryError::LayoutMismatch {
                expected,
                found: trajectory.layout_hash.clone(),
            });
        }
        let mut points = Vec::new();
        points.push(DensePoint {
            position: trajectory.points[0].position,
            reward: super::sim::sparse_reward(world, trajectory.points[0].position),
        });
        for pair in trajectory.points.windows(2) {
            let (a, b) = (pair[0].position, pair[1].position);
            let seg = (b[0] - a[0]).hypot(b[1] - a[1]);
            let subdivisions = (seg / cfg.densify_spacing).ceil().max(1.0) as usize;
            for k in 1..=subdivisions {
                // Land exactly on the endpoint rather than within float noise of it.
                let position = if k == subdivisions {
                    b
                } else {
                    let f = k as f64 / subdivisions as f64;
                    [a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])]
                };
                points.push(DensePoint {
                    position,
                    reward: super::sim::sparse_reward(world, position),
                });
            }
        }
        Ok(ReferenceIndex {
            points,
            window: cfg.progress_window,
            last_matched: 0,
        })
    }

    #[cfg(test)]
    pub(crate) fn from_points(points: Vec<DensePoint>, window: Option<usize>) -> Self {
        ReferenceIndex {
            points,
            window,
            last_matched: 0,
        }
    }

    pub fn points(&self) -> &[DensePoint] {
        &self.points
    }

    pub fn last_matched(&self) -> usize {
        self.last_matched
    }

    pub fn reset(&mut self) {
        self.last_matched = 0;
    }

    pub fn max_reward(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.reward)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Nearest reference point to `position` within the progress window
    /// `[last_matched, last_matched + window]`, ties broken toward the larger
    /// id. Advances `last_matched`, so matches never move backwards along the
    /// reference within an episode.
    pub fn nearest(&mut self, position: [f64; 2]) -> (usize, f64) {
        let lo = self.last_matched;
        let hi = match self.window {
            Some(w) => (lo + w).min(self.points.len() - 1),
            None => self.points.len() - 1,
        };
        let (mut best_id, mut best_d) = (lo, dist(self.points[lo].position, position));
        for id in lo + 1..=hi {
            let d = dist(self.points[id].position, position);
            if d <= best_d {
                best_id = id;
                best_d = d;
            }
        }
        self.last_matched = best_id;
        (best_id, best_d)
    }

    /// Stateless global nearest-point query for analysis and tests: ignores
    /// the window and does not advance the match.
    pub fn probe(&self, position: [f64; 2]) -> (usize, f64) {
        let mut best_id = 0;
        let mut best_d = f64::INFINITY;
        for (id, p) in self.points.iter().enumerate() {
            let d = dist(p.position, position);
            if d <= best_d {
                best_id = id;
                best_d = d;
            }
        }
        (best_id, best_d)
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// The trajectory-following reward given a matched reference point.
pub fn imitation_reward(
    cfg: &ImitationConfig,
    matched: &DensePoint,
    tracking_error: f64,
    collision: bool,
) -> f64 {
    (cfg.tracking_exponent * tracking_error).exp() * matched.reward
        - cfg.collision_penalty * (collision as u8 as f64)
}

/// `rocket-imitate`: identical dynamics, observation and termination to
/// `rocket-full`; only the reward channel differs.
pub struct RocketImitationEnv {
    sim: RocketEnv,
    index: ReferenceIndex,
    cfg: ImitationConfig,
    max_reference_reward: f64,
}

impl RocketImitationEnv {
    pub fn new(
        world: RocketWorldConfig,
        trajectory: &ReferenceTrajectory,
        cfg: ImitationConfig,
    ) -> Result<Self, TrajectoryError> {
        let index = ReferenceIndex::build(trajectory, &world, &cfg)?;
        let max_reference_reward = index.max_reward();
        Ok(RocketImitationEnv {
            sim: RocketEnv::new(world),
            index,
            cfg,
            max_reference_reward,
        })
    }

    pub fn set_perturbation(&mut self, window: Option<PerturbationWindow>) {
        self.sim.set_perturbation(window);
    }

    pub fn state(&self) -> &RocketState {
        self.sim.state()
    }

    pub fn reference(&self) -> &ReferenceIndex {
        &self.index
    }

    pub fn world(&self) -> &RocketWorldConfig {
        self.sim.cfg()
    }
}

impl Environment for RocketImitationEnv {
    fn id(&self) -> &'static str {
        "rocket-imitate"
    }

    fn observation_space(&self) -> SpaceSpec {
        rocket_observation_space(self.sim.cfg())
    }

    fn action_space(&self) -> SpaceSpec {
        SpaceSpec::new(vec![-1.0, -1.0], vec![1.0, 1.0])
    }

    fn reset(&mut self, seed: Option<u64>) -> Vec<f64> {
        self.index.reset();
        self.sim.reset(seed)
    }

    fn step(&mut self, action: &[f64]) -> StepResult {
        let (observation, terminated, truncated, mut info) = self.sim.step_dynamics(action);
        let position = self.sim.state().position;
        let (matched_id, err) = self.index.nearest(position);
        let reward = imitation_reward(&self.cfg, &self.index.points[matched_id], err, info.collision);
        info.tracking_error = Some(err);
        info.matched_reference = Some(matched_id);
        StepResult {
            observation,
            reward,
            terminated,
            truncated,
            info,
        }
    }

    /// Max instantaneous reward is the best stored reference reward (attained
    /// at zero tracking error), times the episode length.
    fn theoretical_max_return(&self) -> f64 {
        // A floor keeps normalization defined for degenerate all-negative
        // references, which real pipelines never produce.
        self.max_reference_reward.max(1e-9) * self.sim.max_steps() as f64
    }

    fn max_steps(&self) -> u64 {
        self.sim.max_steps()
    }
}

/// One row of a tracking dump.
#[derive(Debug, Clone, Copy)]
pub struct TrackingRow {
    pub t: f64,
    pub position: [f64; 2],
    pub matched: [f64; 2],
    pub error: f64,
    pub reward: f64,
    pub collision: bool,
}

/// Write a tracking dump: `t,x,y,xbar,ybar,err,reward,collision`.
pub fn write_tracking_csv(path: &Path, rows: &[TrackingRow]) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "t,x,y,xbar,ybar,err,reward,collision")?;
    for r in rows {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{}",
            r.t,
            r.position[0],
            r.position[1],
            r.matched[0],
            r.matched[1],
            r.error,
            r.reward,
            r.collision as u8
        )?;
    }
    f.flush()
}
