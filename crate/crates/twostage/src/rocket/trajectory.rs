//! Reference trajectories: the hand-off artifact between the planning stage
//! and the imitation stage.
//!
//! Stored as versioned text. Floats use shortest round-trip formatting, so
//! save/load reproduces every value bit-for-bit. The header carries a hash of
//! the reward layout the trajectory was planned against; consumers refuse to
//! follow a trajectory from a different world.

use std::fs;
use std::path::Path;

use thiserror::Error;

const FORMAT_TAG: &str = "twostage-trajectory";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("trajectory I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported trajectory header `{0}`")]
    UnsupportedVersion(String),
    #[error("trajectory line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("trajectory has {0} states; at least two are required")]
    TooFewPoints(usize),
    #[error("trajectory line {line}: timestamp {t} does not increase over {prev}")]
    NonMonotonicTime { line: usize, t: f64, prev: f64 },
    #[error("trajectory was planned for reward layout {found}, expected {expected}")]
    LayoutMismatch { expected: String, found: String },
}

/// One planned state: time, pose, and the sparse reward at that position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferencePoint {
    pub t: f64,
    pub position: [f64; 2],
    pub heading: f64,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectory {
    /// Planner step period, s.
    pub dt: f64,
    pub goal: [f64; 2],
    /// Hash of the reward layout (see `sim::reward_layout_hash`).
    pub layout_hash: String,
    pub points: Vec<ReferencePoint>,
}

impl ReferenceTrajectory {
    pub fn new(
        dt: f64,
        goal: [f64; 2],
        layout_hash: String,
        points: Vec<ReferencePoint>,
    ) -> Result<Self, TrajectoryError> {
        if points.len() < 2 {
            return Err(TrajectoryError::TooFewPoints(points.len()));
        }
        for (i, pair) in points.windows(2).enumerate() {
            if pair[1].t <= pair[0].t {
                return Err(TrajectoryError::NonMonotonicTime {
                    line: i + 2,
                    t: pair[1].t,
                    prev: pair[0].t,
                });
            }
        }
        Ok(ReferenceTrajectory {
            dt,
            goal,
            layout_hash,
            points,
        })
    }

    /// Distance from the last planned state to the goal; the pipeline's
    /// stage gate looks at this.
    pub fn final_goal_distance(&self) -> f64 {
        let last = self.points.last().expect("validated non-empty").position;
        (last[0] - self.goal[0]).hypot(last[1] - self.goal[1])
    }

    /// Smallest distance from any planned state to `point`.
    pub fn min_distance_to(&self, point: [f64; 2]) -> f64 {
        self.points
            .iter()
            .map(|p| (p.position[0] - point[0]).hypot(p.position[1] - point[1]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn save(&self, path: &Path) -> Result<(), TrajectoryError> {
        let mut out = String::new();
        out.push_str(&format!("{FORMAT_TAG} v{FORMAT_VERSION}\n"));
        out.push_str(&format!("dt: {}\n", self.dt));
        out.push_str(&format!("goal: {} {}\n", self.goal[0], self.goal[1]));
        out.push_str(&format!("layout: {}\n", self.layout_hash));
        out.push_str(&format!("points: {}\n", self.points.len()));
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                p.t, p.position[0], p.position[1], p.heading, p.reward
            ));
        }
        fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, TrajectoryError> {
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines().enumerate();

        let (_, header) = lines.next().ok_or_else(|| TrajectoryError::Format {
            line: 1,
            message: "empty trajectory file".into(),
        })?;
        if header != format!("{FORMAT_TAG} v{FORMAT_VERSION}") {
            return Err(TrajectoryError::UnsupportedVersion(header.to_string()));
        }

        let dt = parse_keyed_floats(&mut lines, "dt", 1)?[0];
        let goal_v = parse_keyed_floats(&mut lines, "goal", 2)?;
        let (layout_line_no, layout_rest) = expect_key(&mut lines, "layout")?;
        let layout_hash = layout_rest.trim().to_string();
        if layout_hash.is_empty() {
            return Err(TrajectoryError::Format {
                line: layout_line_no,
                message: "empty layout hash".into(),
            });
        }
        let declared = parse_keyed_floats(&mut lines, "points", 1)?[0] as usize;

        let mut points = Vec::with_capacity(declared);
        let mut prev_t: Option<f64> = None;
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(TrajectoryError::Format {
                    line: line_no,
                    message: format!("expected 5 comma-separated fields, got {}", fields.len()),
                });
            }
            let mut vals = [0.0; 5];
            for (i, f) in fields.iter().enumerate() {
                vals[i] = f.trim().parse::<f64>().map_err(|e| TrajectoryError::Format {
                    line: line_no,
                    message: format!("bad float `{f}`: {e}"),
                })?;
            }
            if let Some(prev) = prev_t {
                if vals[0] <= prev {
                    return Err(TrajectoryError::NonMonotonicTime {
                        line: line_no,
                        t: vals[0],
                        prev,
                    });
                }
            }
            prev_t = Some(vals[0]);
            points.push(ReferencePoint {
                t: vals[0],
                position: [vals[1], vals[2]],
                heading: vals[3],
                reward: vals[4],
            });
        }
        if points.len() != declared {
            return Err(TrajectoryError::Format {
                line: 0,
                message: format!("header declares {declared} points, file has {}", points.len()),
            });
        }
        ReferenceTrajectory::new(dt, [goal_v[0], goal_v[1]], layout_hash, points)
    }
}

type Lines<'a> = std::iter::Enumerate<std::str::Lines<'a>>;

fn expect_key<'a>(lines: &mut Lines<'a>, key: &str) -> Result<(usize, &'a str), TrajectoryError> {
    let (idx, line) = lines.next().ok_or_else(|| TrajectoryError::Format {
        line: 0,
        message: format!("missing `{key}` header line"),
    })?;
    let line_no = idx + 1;
    line.strip_prefix(key)
        .and_then(|r| r.strip_prefix(':'))
        .map(|rest| (line_no, rest))
        .ok_or_else(|| TrajectoryError::Format {
            line: line_no,
            message: format!("expected `{key}:` header line"),
        })
}

fn parse_keyed_floats(lines: &mut Lines, key: &str, n: usize) -> Result<Vec<f64>, TrajectoryError> {
    let (line_no, rest) = expect_key(lines, key)?;
    let vals: Result<Vec<f64>, _> = rest
        .split_whitespace()
        .map(|tok| {
            tok.parse::<f64>().map_err(|e| TrajectoryError::Format {
                line: line_no,
                message: format!("bad float `{tok}`: {e}"),
            })
        })
        .collect();
    let vals = vals?;
    if vals.len() != n {
        return Err(TrajectoryError::Format {
            line: line_no,
            message: format!("`{key}` expects {n} values, got {}", vals.len()),
        });
    }
    Ok(vals)
}
