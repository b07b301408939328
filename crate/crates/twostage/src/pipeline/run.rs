//! Pipeline runs: the two-stage experiment, single-stage trainings, and the
//! monolithic baseline, each writing its artifacts plus a manifest.

use std::path::{Path, PathBuf};

use crate::env::Environment;
use crate::nn::{save_checkpoint, Checkpoint, GaussianPolicy};
use crate::ppo::{derive_seed, train, CurvePoint, TrainHooks, TrainOutput};
use crate::quad::{extract_quad_trajectory, save_quad_trajectory, QuadPlanEnv};
use crate::rocket::{
    extract_trajectory, ReferenceTrajectory, RocketEnv, RocketImitationEnv, RocketPlanningEnv,
};

use super::config::ExperimentConfig;
use super::curves::{curve_rows, merge_two_stage, write_curves_svg, SvgSeries};
use super::manifest::Manifest;
use super::PipelineError;

pub const PLAN_CURVE_FILE: &str = "plan_curve.csv";
pub const PLANNER_CHECKPOINT_FILE: &str = "planner.ckpt";
pub const TRAJECTORY_FILE: &str = "trajectory.txt";
pub const QUAD_TRAJECTORY_FILE: &str = "quad_trajectory.txt";
pub const IMITATION_CURVE_FILE: &str = "imitation_curve.csv";
pub const IMITATION_CHECKPOINT_FILE: &str = "imitation.ckpt";
pub const MERGED_CURVE_FILE: &str = "merged_curve.csv";
pub const CURVES_SVG_FILE: &str = "curves.svg";
pub const BASELINE_CURVE_FILE: &str = "baseline_curve.csv";
pub const BASELINE_CHECKPOINT_FILE: &str = "baseline.ckpt";
pub const MANIFEST_FILE: &str = "manifest.txt";

// Stage seeds are derived from the experiment seed on separate streams so
// the two trainings never share RNG state.
const PLAN_STREAM: u64 = 11;
const IMITATE_STREAM: u64 = 12;
const BASELINE_STREAM: u64 = 13;

/// What a deterministic (mean-action) rollout did, reduced to the numbers
/// the gates and reports care about.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub env_id: String,
    pub steps: u64,
    pub total_reward: f64,
    /// Distance to goal when the episode ended.
    pub final_distance: f64,
    /// Closest approach to the goal over the whole episode.
    pub min_goal_distance: f64,
    pub collisions: u64,
    /// Largest reference-tracking error seen (0 when the env tracks nothing).
    pub max_tracking_error: f64,
    /// True if the episode ended by leaving the arena.
    pub out_of_bounds: bool,
    pub termination_reason: Option<String>,
}

/// Roll the policy's mean action until the episode ends.
pub fn evaluate_deterministic(policy: &GaussianPolicy, env: &mut dyn Environment) -> EvalSummary {
    let mut obs = env.reset(None);
    let mut summary = EvalSummary {
        env_id: env.id().to_string(),
        steps: 0,
        total_reward: 0.0,
        final_distance: f64::INFINITY,
        min_goal_distance: f64::INFINITY,
        collisions: 0,
        max_tracking_error: 0.0,
        out_of_bounds: false,
        termination_reason: None,
    };
    loop {
        let action = policy.mean_action(&obs);
        let r = env.step(&action);
        summary.steps += 1;
        summary.total_reward += r.reward;
        summary.final_distance = r.info.distance_to_goal;
        summary.min_goal_distance = summary.min_goal_distance.min(r.info.distance_to_goal);
        summary.collisions += u64::from(r.info.collision);
        if let Some(err) = r.info.tracking_error {
            summary.max_tracking_error = summary.max_tracking_error.max(err);
        }
        let done = r.done();
        if done {
            summary.termination_reason = r.info.termination_reason.clone();
            summary.out_of_bounds =
                summary.termination_reason.as_deref() == Some("out_of_bounds");
            return summary;
        }
        obs = r.observation;
    }
}

fn stage_hooks(label: &'static str, verbose: bool) -> TrainHooks {
    if !verbose {
        return TrainHooks::default();
    }
    TrainHooks {
        progress: Some(Box::new(move |p: &CurvePoint| {
            eprintln!(
                "[{label}] steps {:>9}  episodes {:>4}  mean return {:>10.3}  normalized {:>7.4}  kl {:.5}",
                p.env_steps, p.episodes, p.mean_return, p.normalized_return, p.approx_kl
            );
        })),
        ..TrainHooks::default()
    }
}

fn save_agent(path: &Path, output: &TrainOutput) -> Result<(), PipelineError> {
    save_checkpoint(
        path,
        &Checkpoint {
            policy: output.policy.clone(),
            value: output.value_net.clone(),
        },
    )?;
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| PipelineError::runtime(&format!("create {}", dir.display()), e))
}

#[derive(Debug)]
pub struct TwoStageArtifacts {
    pub planner: TrainOutput,
    pub trajectory: ReferenceTrajectory,
    pub imitation: TrainOutput,
    pub eval: EvalSummary,
    pub manifest: Manifest,
    pub out_dir: PathBuf,
}

#[derive(Debug)]
pub struct PlanArtifacts {
    pub train: TrainOutput,
    /// Present for the rocket planner; the quad planner saves its own format.
    pub trajectory: Option<ReferenceTrajectory>,
    pub manifest: Manifest,
    pub out_dir: PathBuf,
}

#[derive(Debug)]
pub struct BaselineArtifacts {
    pub train: TrainOutput,
    pub eval: EvalSummary,
    pub manifest: Manifest,
    pub out_dir: PathBuf,
}

fn require_rocket(cfg: &ExperimentConfig, what: &str) -> Result<(), PipelineError> {
    if cfg.experiment.env != "rocket-plan" {
        return Err(PipelineError::Config(format!(
            "{what} is only implemented for the rocket task (experiment.env = `{}`); \
             the quad's full-dynamics stage is out of scope",
            cfg.experiment.env
        )));
    }
    Ok(())
}

/// Stage 1 + gate + stage 2, writing all artifacts and a manifest into
/// `out_dir`. On a gate failure the stage-1 artifacts (curve, checkpoint,
/// trajectory) and a manifest covering them are still written so the bad
/// plan can be inspected.
pub fn run_two_stage(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    verbose: bool,
) -> Result<TwoStageArtifacts, PipelineError> {
    require_rocket(cfg, "the two-stage pipeline")?;
    ensure_dir(out_dir)?;
    let seed = cfg.experiment.seed;

    let plan_cfg = cfg.rocket_planning();
    let planner = {
        let plan_cfg = plan_cfg.clone();
        train(
            &move |_| Box::new(RocketPlanningEnv::new(plan_cfg.clone())) as Box<dyn Environment>,
            &cfg.planning_ppo(),
            derive_seed(seed, PLAN_STREAM),
            &mut stage_hooks("plan", verbose),
        )?
    };
    let trajectory = extract_trajectory(&planner.policy, &plan_cfg);

    planner.curve.save_csv(&out_dir.join(PLAN_CURVE_FILE))?;
    save_agent(&out_dir.join(PLANNER_CHECKPOINT_FILE), &planner)?;
    trajectory.save(&out_dir.join(TRAJECTORY_FILE))?;

    let gate_distance = trajectory.final_goal_distance();
    if gate_distance >= cfg.stages.gate_distance {
        let manifest = Manifest::from_files(
            out_dir,
            &[PLAN_CURVE_FILE, PLANNER_CHECKPOINT_FILE, TRAJECTORY_FILE],
        )?;
        manifest.write(&out_dir.join(MANIFEST_FILE))?;
        return Err(PipelineError::StageGate {
            distance: gate_distance,
            threshold: cfg.stages.gate_distance,
        });
    }

    let world = plan_cfg.world.clone();
    let imi_cfg = cfg.imitation_config();
    // Validate trajectory/world/config compatibility once up front; workers
    // then construct their own copies infallibly.
    drop(RocketImitationEnv::new(world.clone(), &trajectory, imi_cfg.clone())?);
    let imitation = {
        let (world, trajectory, imi_cfg) = (world.clone(), trajectory.clone(), imi_cfg.clone());
        train(
            &move |_| {
                Box::new(
                    RocketImitationEnv::new(world.clone(), &trajectory, imi_cfg.clone())
                        .expect("validated above"),
                ) as Box<dyn Environment>
            },
            &cfg.imitation_ppo(),
            derive_seed(seed, IMITATE_STREAM),
            &mut stage_hooks("imitate", verbose),
        )?
    };

    imitation.curve.save_csv(&out_dir.join(IMITATION_CURVE_FILE))?;
    save_agent(&out_dir.join(IMITATION_CHECKPOINT_FILE), &imitation)?;

    let merged = merge_two_stage(
        &curve_rows(&planner.curve),
        &curve_rows(&imitation.curve),
        cfg.stages.planning_steps,
    );
    merged.write_csv(&out_dir.join(MERGED_CURVE_FILE))?;
    write_curves_svg(
        &out_dir.join(CURVES_SVG_FILE),
        &format!("{}: two-stage learning curves", cfg.experiment.name),
        "env steps (stages concatenated)",
        "normalized return",
        &[
            SvgSeries {
                label: "planning".into(),
                color: "#e6841f".into(),
                points: planner
                    .curve
                    .points
                    .iter()
                    .map(|p| (p.env_steps as f64, p.normalized_return))
                    .collect(),
            },
            SvgSeries {
                label: "imitation".into(),
                color: "#2c8a3d".into(),
                points: imitation
                    .curve
                    .points
                    .iter()
                    .map(|p| {
                        (
                            (cfg.stages.planning_steps + p.env_steps) as f64,
                            p.normalized_return,
                        )
                    })
                    .collect(),
            },
        ],
    )?;

    let mut eval_env = RocketImitationEnv::new(world, &trajectory, imi_cfg)?;
    let eval = evaluate_deterministic(&imitation.policy, &mut eval_env);

    let manifest = Manifest::from_files(
        out_dir,
        &[
            PLAN_CURVE_FILE,
            PLANNER_CHECKPOINT_FILE,
            TRAJECTORY_FILE,
            IMITATION_CURVE_FILE,
            IMITATION_CHECKPOINT_FILE,
            MERGED_CURVE_FILE,
            CURVES_SVG_FILE,
        ],
    )?;
    manifest.write(&out_dir.join(MANIFEST_FILE))?;

    Ok(TwoStageArtifacts {
        planner,
        trajectory,
        imitation,
        eval,
        manifest,
        out_dir: out_dir.to_path_buf(),
    })
}

/// Train only the planning stage (rocket or quad) and save its artifacts.
pub fn run_plan_only(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    verbose: bool,
) -> Result<PlanArtifacts, PipelineError> {
    ensure_dir(out_dir)?;
    let seed = derive_seed(cfg.experiment.seed, PLAN_STREAM);
    let ppo = cfg.planning_ppo();
    let mut files: Vec<&str> = vec![PLAN_CURVE_FILE, PLANNER_CHECKPOINT_FILE];

    let (output, trajectory) = match cfg.experiment.env.as_str() {
        "rocket-plan" => {
            let plan_cfg = cfg.rocket_planning();
            let output = {
                let plan_cfg = plan_cfg.clone();
                train(
                    &move |_| {
                        Box::new(RocketPlanningEnv::new(plan_cfg.clone())) as Box<dyn Environment>
                    },
                    &ppo,
                    seed,
                    &mut stage_hooks("plan", verbose),
                )?
            };
            let trajectory = extract_trajectory(&output.policy, &plan_cfg);
            trajectory.save(&out_dir.join(TRAJECTORY_FILE))?;
            files.push(TRAJECTORY_FILE);
            (output, Some(trajectory))
        }
        "quad-plan" => {
            let quad_cfg = cfg.quad_planning();
            let output = {
                let quad_cfg = quad_cfg.clone();
                train(
                    &move |_| Box::new(QuadPlanEnv::new(quad_cfg.clone())) as Box<dyn Environment>,
                    &ppo,
                    seed,
                    &mut stage_hooks("plan", verbose),
                )?
            };
            let rows = extract_quad_trajectory(&output.policy, &quad_cfg);
            save_quad_trajectory(&out_dir.join(QUAD_TRAJECTORY_FILE), &rows)?;
            files.push(QUAD_TRAJECTORY_FILE);
            (output, None)
        }
        other => {
            return Err(PipelineError::Config(format!(
                "train-plan does not know env `{other}`"
            )))
        }
    };

    output.curve.save_csv(&out_dir.join(PLAN_CURVE_FILE))?;
    save_agent(&out_dir.join(PLANNER_CHECKPOINT_FILE), &output)?;
    let manifest = Manifest::from_files(out_dir, &files)?;
    manifest.write(&out_dir.join(MANIFEST_FILE))?;
    Ok(PlanArtifacts {
        train: output,
        trajectory,
        manifest,
        out_dir: out_dir.to_path_buf(),
    })
}

/// Train only the imitation stage against an existing reference trajectory.
pub fn run_imitate_only(
    cfg: &ExperimentConfig,
    trajectory_path: &Path,
    out_dir: &Path,
    verbose: bool,
) -> Result<(TrainOutput, EvalSummary, Manifest), PipelineError> {
    require_rocket(cfg, "imitation training")?;
    ensure_dir(out_dir)?;
    let trajectory = ReferenceTrajectory::load(trajectory_path)?;
    let world = cfg.world();
    let imi_cfg = cfg.imitation_config();
    drop(RocketImitationEnv::new(world.clone(), &trajectory, imi_cfg.clone())?);
    let output = {
        let (world, trajectory, imi_cfg) = (world.clone(), trajectory.clone(), imi_cfg.clone());
        train(
            &move |_| {
                Box::new(
                    RocketImitationEnv::new(world.clone(), &trajectory, imi_cfg.clone())
                        .expect("validated above"),
                ) as Box<dyn Environment>
            },
            &cfg.imitation_ppo(),
            derive_seed(cfg.experiment.seed, IMITATE_STREAM),
            &mut stage_hooks("imitate", verbose),
        )?
    };
    output.curve.save_csv(&out_dir.join(IMITATION_CURVE_FILE))?;
    save_agent(&out_dir.join(IMITATION_CHECKPOINT_FILE), &output)?;
    let mut eval_env = RocketImitationEnv::new(world, &trajectory, imi_cfg)?;
    let eval = evaluate_deterministic(&output.policy, &mut eval_env);
    let manifest =
        Manifest::from_files(out_dir, &[IMITATION_CURVE_FILE, IMITATION_CHECKPOINT_FILE])?;
    manifest.write(&out_dir.join(MANIFEST_FILE))?;
    Ok((output, eval, manifest))
}

/// Monolithic PPO on the full rocket task with the combined budget.
pub fn run_baseline(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    verbose: bool,
) -> Result<BaselineArtifacts, PipelineError> {
    require_rocket(cfg, "the monolithic baseline")?;
    ensure_dir(out_dir)?;
    let world = cfg.world();
    let output = {
        let world = world.clone();
        train(
            &move |_| Box::new(RocketEnv::new(world.clone())) as Box<dyn Environment>,
            &cfg.baseline_ppo(),
            derive_seed(cfg.experiment.seed, BASELINE_STREAM),
            &mut stage_hooks("baseline", verbose),
        )?
    };
    output.curve.save_csv(&out_dir.join(BASELINE_CURVE_FILE))?;
    save_agent(&out_dir.join(BASELINE_CHECKPOINT_FILE), &output)?;
    let mut eval_env = RocketEnv::new(world);
    let eval = evaluate_deterministic(&output.policy, &mut eval_env);
    let manifest =
        Manifest::from_files(out_dir, &[BASELINE_CURVE_FILE, BASELINE_CHECKPOINT_FILE])?;
    manifest.write(&out_dir.join(MANIFEST_FILE))?;
    Ok(BaselineArtifacts {
        train: output,
        eval,
        manifest,
        out_dir: out_dir.to_path_buf(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::config::parse_config;

    /// Small enough to train in well under a second.
    fn tiny_config(extra: &str) -> ExperimentConfig {
        let text = format!(
            "[experiment]\nenv = \"rocket-plan\"\nseed = 5\n\n\
             [stages]\nplanning_steps = 256\nimitation_steps = 256\ngate_distance = 100.0\n\n\
             [ppo]\nnum_workers = 2\nsteps_per_update = 64\nminibatch_size = 64\n\
             epochs_per_update = 2\nhidden_layers = [8]\n{extra}"
        );
        parse_config(&text).unwrap()
    }

    #[test]
    fn two_stage_writes_every_artifact_and_the_manifest_last() {
        let cfg = tiny_config("");
        let dir = tempfile::tempdir().unwrap();
        let result = run_two_stage(&cfg, dir.path(), false).unwrap();
        assert_eq!(result.manifest.entries.len(), 7);
        for file in [
            PLAN_CURVE_FILE,
            PLANNER_CHECKPOINT_FILE,
            TRAJECTORY_FILE,
            IMITATION_CURVE_FILE,
            IMITATION_CHECKPOINT_FILE,
            MERGED_CURVE_FILE,
            CURVES_SVG_FILE,
            MANIFEST_FILE,
        ] {
            assert!(dir.path().join(file).exists(), "{file} missing");
        }
        // Spot-check artifact relationships.
        assert_eq!(
            result.planner.curve.points.last().unwrap().env_steps,
            256,
            "planning budget consumed exactly"
        );
        assert_eq!(result.imitation.curve.points.last().unwrap().env_steps, 256);
        assert!(result.eval.steps > 0);
        let loaded = ReferenceTrajectory::load(&dir.path().join(TRAJECTORY_FILE)).unwrap();
        assert_eq!(loaded, result.trajectory);
    }

    #[test]
    fn rerunning_the_pipeline_reproduces_identical_manifests() {
        let cfg = tiny_config("");
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let m1 = run_two_stage(&cfg, d1.path(), false).unwrap().manifest;
        let m2 = run_two_stage(&cfg, d2.path(), false).unwrap().manifest;
        assert_eq!(m1, m2, "same config + seed must hash identically");
        let mut other = tiny_config("");
        other.experiment.seed = 6;
        let d3 = tempfile::tempdir().unwrap();
        let m3 = run_two_stage(&other, d3.path(), false).unwrap().manifest;
        assert_ne!(m1, m3, "a different seed must not hash identically");
    }

    #[test]
    fn failed_gate_halts_with_stage_one_artifacts_on_disk() {
        let mut cfg = tiny_config("");
        cfg.stages.gate_distance = 1e-6; // unreachable after 256 steps
        let dir = tempfile::tempdir().unwrap();
        let err = run_two_stage(&cfg, dir.path(), false).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(dir.path().join(TRAJECTORY_FILE).exists());
        assert!(dir.path().join(MANIFEST_FILE).exists());
        assert!(
            !dir.path().join(IMITATION_CURVE_FILE).exists(),
            "stage 2 must not run after a failed gate"
        );
        let manifest = Manifest::load(&dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(manifest.entries.len(), 3);
    }

    #[test]
    fn two_stage_and_baseline_reject_the_quad_env() {
        let mut cfg = tiny_config("");
        cfg.experiment.env = "quad-plan".to_string();
        let dir = tempfile::tempdir().unwrap();
        let err = run_two_stage(&cfg, dir.path(), false).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("out of scope"), "{err}");
        let err = run_baseline(&cfg, dir.path(), false).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn baseline_consumes_the_combined_budget() {
        let cfg = tiny_config("");
        let dir = tempfile::tempdir().unwrap();
        let result = run_baseline(&cfg, dir.path(), false).unwrap();
        assert_eq!(result.train.curve.points.last().unwrap().env_steps, 512);
        assert_eq!(result.train.curve.env_id, "rocket-full");
        assert_eq!(result.manifest.entries.len(), 2);
        assert!(result.eval.final_distance.is_finite());
    }

    #[test]
    fn plan_only_handles_both_planning_envs() {
        let cfg = tiny_config("");
        let dir = tempfile::tempdir().unwrap();
        let rocket = run_plan_only(&cfg, dir.path(), false).unwrap();
        assert!(rocket.trajectory.is_some());
        assert!(dir.path().join(TRAJECTORY_FILE).exists());

        let mut quad_cfg = tiny_config("");
        quad_cfg.experiment.env = "quad-plan".to_string();
        let qdir = tempfile::tempdir().unwrap();
        let quad = run_plan_only(&quad_cfg, qdir.path(), false).unwrap();
        assert!(quad.trajectory.is_none());
        assert!(qdir.path().join(QUAD_TRAJECTORY_FILE).exists());
        assert_eq!(quad.train.curve.env_id, "quad-plan");
        let rows =
            crate::quad::load_quad_trajectory(&qdir.path().join(QUAD_TRAJECTORY_FILE)).unwrap();
        assert!(!rows.is_empty());
    }

    #[test]
    fn imitate_only_consumes_a_saved_trajectory() {
        let cfg = tiny_config("");
        let plan_dir = tempfile::tempdir().unwrap();
        run_plan_only(&cfg, plan_dir.path(), false).unwrap();
        let imi_dir = tempfile::tempdir().unwrap();
        let (output, eval, manifest) = run_imitate_only(
            &cfg,
            &plan_dir.path().join(TRAJECTORY_FILE),
            imi_dir.path(),
            false,
        )
        .unwrap();
        assert_eq!(output.curve.env_id, "rocket-imitate");
        assert_eq!(manifest.entries.len(), 2);
        assert!(eval.max_tracking_error >= 0.0);
    }

    #[test]
    fn deterministic_eval_reports_bounded_quantities() {
        let cfg = tiny_config("");
        let plan_cfg = cfg.rocket_planning();
        let policy = crate::nn::GaussianPolicy::new(
            crate::nn::MlpParams::init(
                &crate::nn::MlpSpec::new(vec![
                    RocketEnv::new(plan_cfg.world.clone()).observation_space().dim(),
                    8,
                    2,
                ])
                .unwrap(),
                0,
            ),
            -1.0,
        );
        let mut env = RocketEnv::new(plan_cfg.world);
        let summary = evaluate_deterministic(&policy, &mut env);
        assert!(summary.steps >= 1 && summary.steps <= 500);
        assert!(summary.min_goal_distance <= summary.final_distance);
        assert_eq!(summary.env_id, "rocket-full");
    }
}
