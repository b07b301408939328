//! The environment contract shared by every task in this crate.
//!
//! Semantics follow the usual episodic RL conventions:
//! - `reset` returns the initial observation; every environment here starts
//!   from a fixed initial state, so the seed only feeds auxiliary randomness.
//! - `step` consumes an action (clamped to the declared action space, with the
//!   clamping recorded in [`StepInfo`]) and returns the successor observation.
//! - `terminated` means the MDP reached a terminal state; `truncated` means a
//!   step limit cut the episode short. When both would apply on the same step,
//!   termination takes precedence for bootstrapping purposes.
//!
//! Stepping a finished episode without an intervening reset is a programmer
//! error and panics.

/// Axis-aligned box bounds for observation and action vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceSpec {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl SpaceSpec {
    pub fn new(low: Vec<f64>, high: Vec<f64>) -> Self {
        assert_eq!(low.len(), high.len(), "space bounds length mismatch");
        assert!(
            low.iter().zip(&high).all(|(l, h)| l <= h),
            "space lower bound above upper bound"
        );
        SpaceSpec { low, high }
    }

    pub fn dim(&self) -> usize {
        self.low.len()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .zip(self.low.iter().zip(&self.high))
                .all(|(x, (l, h))| *x >= *l && *x <= *h)
    }

    /// Clamp `point` into the box; returns whether anything changed.
    pub fn clamp(&self, point: &mut [f64]) -> bool {
        assert_eq!(point.len(), self.dim(), "action dimension mismatch");
        let mut clamped = false;
        for (x, (l, h)) in point.iter_mut().zip(self.low.iter().zip(&self.high)) {
            let c = x.clamp(*l, *h);
            if c != *x {
                clamped = true;
                *x = c;
            }
        }
        clamped
    }
}

/// Side-channel annotations attached to each step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepInfo {
    /// Steps taken in the current episode, counting this one.
    pub step: u64,
    /// True if the submitted action fell outside the action space.
    pub action_clamped: bool,
    /// Contact with an obstacle this step (never terminal by itself).
    pub collision: bool,
    /// Distance from the agent to its goal after the transition.
    pub distance_to_goal: f64,
    /// Why the episode ended, when it did.
    pub termination_reason: Option<String>,
    /// Trajectory-following tasks: distance to the matched reference point.
    pub tracking_error: Option<f64>,
    /// Trajectory-following tasks: index of the matched reference point.
    pub matched_reference: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub info: StepInfo,
}

impl StepResult {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

pub trait Environment: Send {
    /// Stable identifier used by configs and the CLI.
    fn id(&self) -> &'static str;

    fn observation_space(&self) -> SpaceSpec;

    fn action_space(&self) -> SpaceSpec;

    /// Start a fresh episode and return the initial observation.
    fn reset(&mut self, seed: Option<u64>) -> Vec<f64>;

    /// Advance one step. Panics if the previous step finished the episode and
    /// no reset happened since.
    fn step(&mut self, action: &[f64]) -> StepResult;

    /// Upper bound used to normalize returns: the maximum instantaneous
    /// reward times the maximum episode length.
    fn theoretical_max_return(&self) -> f64;

    /// Episode step limit (the truncation horizon).
    fn max_steps(&self) -> u64;
}
