//! Command-line front end. Every subcommand reads the same config format;
//! flags override the handful of fields that vary between invocations of
//! the same experiment (seed, env, budgets, paths).
//!
//! Exit codes: 0 success, 2 bad config or arguments, 3 stage gate tripped,
//! 4 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::env::Environment;
use crate::nn::load_checkpoint;
use crate::quad::QuadPlanEnv;
use crate::rocket::{ReferenceTrajectory, RocketEnv, RocketImitationEnv, RocketPlanningEnv};

use super::config::{load_config, ExperimentConfig};
use super::curves::{load_curve_csv, merge_two_stage, write_curves_svg, CurveRow, SvgSeries};
use super::manifest::{Manifest, ManifestIssue};
use super::robustness::{eval_robustness, RobustnessSuite};
use super::run::{
    evaluate_deterministic, run_baseline, run_imitate_only, run_plan_only, run_two_stage,
    EvalSummary, BASELINE_CURVE_FILE, CURVES_SVG_FILE, IMITATION_CURVE_FILE, MANIFEST_FILE,
    MERGED_CURVE_FILE, PLAN_CURVE_FILE,
};
use super::search::{random_search, write_search_csv, SearchSpace};
use super::PipelineError;

#[derive(Debug, Parser)]
#[command(
    name = "twostage",
    version,
    about = "Two-staged reinforcement learning: plan on simplified dynamics, imitate on full dynamics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand that reads an experiment config.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Experiment config file (TOML); built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override experiment.seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override experiment.env (rocket-plan | quad-plan).
    #[arg(long)]
    pub env: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the planning stage on simplified dynamics and save its
    /// curve, checkpoint, and reference trajectory.
    TrainPlan {
        #[command(flatten)]
        common: CommonArgs,
        /// Output directory (falls back to experiment.out_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the planning-stage step budget.
        #[arg(long)]
        steps: Option<u64>,
    },
    /// Train the trajectory-tracking stage on full dynamics against a
    /// saved reference trajectory.
    TrainImitate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the imitation-stage step budget.
        #[arg(long)]
        steps: Option<u64>,
        /// Reference trajectory file produced by train-plan or run-pipeline.
        #[arg(long)]
        trajectory: PathBuf,
    },
    /// Train the single-stage baseline on the full task with the combined
    /// two-stage budget.
    TrainBaseline {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the baseline step budget.
        #[arg(long)]
        steps: Option<u64>,
    },
    /// Run the full pipeline: plan, gate on final goal distance, imitate.
    RunPipeline {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override both stage budgets at once.
        #[arg(long)]
        steps: Option<u64>,
    },
    /// Roll out a checkpoint with the deterministic (mean) policy and
    /// print an episode summary.
    Rollout {
        #[command(flatten)]
        common: CommonArgs,
        /// Checkpoint file to load.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Track this reference trajectory (full dynamics) instead of the
        /// configured planning env.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// Roll out on the full-dynamics task (for baseline checkpoints).
        #[arg(long)]
        full_dynamics: bool,
    },
    /// Push a trained tracker with seeded random disturbances and report
    /// success rates per force magnitude.
    EvalRobustness {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Imitation checkpoint to probe.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Reference trajectory the checkpoint was trained against.
        #[arg(long)]
        trajectory: PathBuf,
    },
    /// Merge the stage curves found in an output directory and redraw the
    /// learning-curve plot.
    Plot {
        #[command(flatten)]
        common: CommonArgs,
        /// Directory holding plan/imitation/baseline curve CSVs.
        #[arg(long)]
        out: PathBuf,
    },
    /// Random hyperparameter search over the configured space; writes a
    /// ranked CSV.
    Search {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override search.steps_per_trial.
        #[arg(long)]
        steps: Option<u64>,
    },
    /// Re-hash every artifact listed in a run's manifest and report
    /// divergences.
    VerifyManifest {
        /// Directory containing manifest.txt.
        #[arg(long)]
        out: PathBuf,
    },
}

/// Load the config (or defaults) and fold in the shared flag overrides,
/// re-validating afterwards since an override can invalidate the result.
fn load_with_common(common: &CommonArgs) -> Result<ExperimentConfig, PipelineError> {
    let mut cfg = match &common.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.experiment.seed = seed;
    }
    if let Some(env) = &common.env {
        cfg.experiment.env = env.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn resolve_out(
    flag: Option<PathBuf>,
    cfg: &ExperimentConfig,
) -> Result<PathBuf, PipelineError> {
    flag.or_else(|| cfg.experiment.out_dir.as_ref().map(PathBuf::from))
        .ok_or_else(|| {
            PipelineError::Config(
                "no output directory: pass --out or set experiment.out_dir".into(),
            )
        })
}

fn print_eval(label: &str, eval: &EvalSummary) {
    println!(
        "{label}: env {}  steps {}  return {:.3}",
        eval.env_id, eval.steps, eval.total_reward
    );
    println!(
        "{label}: final distance {:.3} m  min distance {:.3} m  collisions {}",
        eval.final_distance, eval.min_goal_distance, eval.collisions
    );
    if eval.max_tracking_error > 0.0 {
        println!(
            "{label}: max tracking error {:.3} m",
            eval.max_tracking_error
        );
    }
    if let Some(reason) = &eval.termination_reason {
        println!("{label}: terminated early ({reason})");
    }
}

/// Build the factory for whichever planning env the config names.
fn planning_factory(
    cfg: &ExperimentConfig,
) -> Result<Box<dyn Fn(usize) -> Box<dyn Environment>>, PipelineError> {
    match cfg.experiment.env.as_str() {
        "rocket-plan" => {
            let plan_cfg = cfg.rocket_planning();
            Ok(Box::new(move |_| {
                Box::new(RocketPlanningEnv::new(plan_cfg.clone())) as Box<dyn Environment>
            }))
        }
        "quad-plan" => {
            let quad_cfg = cfg.quad_planning();
            Ok(Box::new(move |_| {
                Box::new(QuadPlanEnv::new(quad_cfg.clone())) as Box<dyn Environment>
            }))
        }
        other => Err(PipelineError::Config(format!(
            "no planning env named `{other}`"
        ))),
    }
}

fn run_command(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::TrainPlan { common, out, steps } => {
            let mut cfg = load_with_common(&common)?;
            if let Some(s) = steps {
                cfg.stages.planning_steps = s;
            }
            let out = resolve_out(out, &cfg)?;
            let result = run_plan_only(&cfg, &out, true)?;
            if let Some(trajectory) = &result.trajectory {
                println!(
                    "plan: {} waypoints, final goal distance {:.3} m",
                    trajectory.points.len(),
                    trajectory.final_goal_distance()
                );
            }
            println!(
                "plan: final normalized return {:.4}; {} artifacts in {}",
                result.train.curve.final_normalized_return(),
                result.manifest.entries.len(),
                out.display()
            );
            Ok(())
        }
        Command::TrainImitate {
            common,
            out,
            steps,
            trajectory,
        } => {
            let mut cfg = load_with_common(&common)?;
            if let Some(s) = steps {
                cfg.stages.imitation_steps = s;
            }
            let out = resolve_out(out, &cfg)?;
            let (output, eval, manifest) = run_imitate_only(&cfg, &trajectory, &out, true)?;
            print_eval("imitate", &eval);
            println!(
                "imitate: final normalized return {:.4}; {} artifacts in {}",
                output.curve.final_normalized_return(),
                manifest.entries.len(),
                out.display()
            );
            Ok(())
        }
        Command::TrainBaseline { common, out, steps } => {
            let mut cfg = load_with_common(&common)?;
            if let Some(s) = steps {
                cfg.stages.baseline_steps = Some(s);
            }
            let out = resolve_out(out, &cfg)?;
            let result = run_baseline(&cfg, &out, true)?;
            print_eval("baseline", &result.eval);
            println!(
                "baseline: final normalized return {:.4}; {} artifacts in {}",
                result.train.curve.final_normalized_return(),
                result.manifest.entries.len(),
                out.display()
            );
            Ok(())
        }
        Command::RunPipeline { common, out, steps } => {
            let mut cfg = load_with_common(&common)?;
            if let Some(s) = steps {
                cfg.stages.planning_steps = s;
                cfg.stages.imitation_steps = s;
            }
            let out = resolve_out(out, &cfg)?;
            let result = run_two_stage(&cfg, &out, true)?;
            println!(
                "gate: plan reached {:.3} m from the goal (threshold {} m), passed",
                result.trajectory.final_goal_distance(),
                cfg.stages.gate_distance
            );
            print_eval("pipeline", &result.eval);
            println!(
                "pipeline: {} artifacts + manifest in {}",
                result.manifest.entries.len(),
                out.display()
            );
            Ok(())
        }
        Command::Rollout {
            common,
            checkpoint,
            trajectory,
            full_dynamics,
        } => {
            let cfg = load_with_common(&common)?;
            let ckpt = load_checkpoint(&checkpoint)?;
            let mut env: Box<dyn Environment> = if let Some(path) = trajectory {
                let reference = ReferenceTrajectory::load(&path)?;
                Box::new(RocketImitationEnv::new(
                    cfg.world(),
                    &reference,
                    cfg.imitation_config(),
                )?)
            } else if full_dynamics {
                Box::new(RocketEnv::new(cfg.world()))
            } else {
                planning_factory(&cfg)?(0)
            };
            let eval = evaluate_deterministic(&ckpt.policy, env.as_mut());
            print_eval("rollout", &eval);
            Ok(())
        }
        Command::EvalRobustness {
            common,
            out,
            checkpoint,
            trajectory,
        } => {
            let cfg = load_with_common(&common)?;
            let out = resolve_out(out, &cfg)?;
            let ckpt = load_checkpoint(&checkpoint)?;
            let reference = ReferenceTrajectory::load(&trajectory)?;
            let world = cfg.world();
            let imi_cfg = cfg.imitation_config();
            // Surface an incompatible trajectory/world pair before the loop.
            drop(RocketImitationEnv::new(
                world.clone(),
                &reference,
                imi_cfg.clone(),
            )?);
            let suite = RobustnessSuite::from_config(&cfg);
            let report = eval_robustness(
                &ckpt.policy,
                &|| {
                    RocketImitationEnv::new(world.clone(), &reference, imi_cfg.clone())
                        .expect("validated above")
                },
                &suite,
            );
            std::fs::create_dir_all(&out)
                .map_err(|e| PipelineError::runtime(&format!("create {}", out.display()), e))?;
            let csv = out.join("robustness.csv");
            report.write_csv(&csv)?;
            for &magnitude in &suite.magnitudes {
                println!(
                    "robustness: {magnitude} N for {} s: success rate {:.0}% over {} trials",
                    suite.duration,
                    100.0 * report.success_rate(magnitude),
                    suite.trials
                );
            }
            println!("robustness: wrote {}", csv.display());
            Ok(())
        }
        Command::Plot { common, out } => {
            let _ = load_with_common(&common)?;
            let load_if_present = |name: &str| -> Result<Option<Vec<CurveRow>>, PipelineError> {
                let path = out.join(name);
                if path.exists() {
                    load_curve_csv(&path).map(Some)
                } else {
                    Ok(None)
                }
            };
            let plan = load_if_present(PLAN_CURVE_FILE)?;
            let imitation = load_if_present(IMITATION_CURVE_FILE)?;
            let baseline = load_if_present(BASELINE_CURVE_FILE)?;

            let mut series = Vec::new();
            let as_points = |rows: &[CurveRow], offset: u64| -> Vec<(f64, f64)> {
                rows.iter()
                    .map(|r| ((offset + r.env_steps) as f64, r.normalized_return))
                    .collect()
            };
            // The final curve point sits exactly at the stage's step
            // budget, so it doubles as the imitation stage's x offset.
            let plan_budget = plan
                .as_ref()
                .and_then(|rows| rows.last().map(|r| r.env_steps))
                .unwrap_or(0);
            if let Some(rows) = &plan {
                series.push(SvgSeries {
                    label: "planning".into(),
                    color: "#e6841f".into(),
                    points: as_points(rows, 0),
                });
            }
            if let Some(rows) = &imitation {
                series.push(SvgSeries {
                    label: "imitation".into(),
                    color: "#2c8a3d".into(),
                    points: as_points(rows, plan_budget),
                });
            }
            if let Some(rows) = &baseline {
                series.push(SvgSeries {
                    label: "baseline".into(),
                    color: "#5561c9".into(),
                    points: as_points(rows, 0),
                });
            }
            if series.is_empty() {
                return Err(PipelineError::Config(format!(
                    "no curve CSVs found in {}",
                    out.display()
                )));
            }
            if let (Some(plan), Some(imitation)) = (&plan, &imitation) {
                merge_two_stage(plan, imitation, plan_budget)
                    .write_csv(&out.join(MERGED_CURVE_FILE))?;
                println!("plot: wrote {}", out.join(MERGED_CURVE_FILE).display());
            }
            let svg = out.join(CURVES_SVG_FILE);
            write_curves_svg(
                &svg,
                "learning curves",
                "env steps (stages concatenated)",
                "normalized return",
                &series,
            )?;
            println!("plot: wrote {} ({} series)", svg.display(), series.len());
            Ok(())
        }
        Command::Search { common, out, steps } => {
            let mut cfg = load_with_common(&common)?;
            if let Some(s) = steps {
                cfg.search.steps_per_trial = s;
                cfg.validate()?;
            }
            let out = resolve_out(out, &cfg)?;
            let factory = planning_factory(&cfg)?;
            let mut base = cfg.planning_ppo();
            base.total_env_steps = cfg.search.steps_per_trial;
            let space = SearchSpace::from_config(&cfg.search);
            let rows = random_search(
                factory.as_ref(),
                &base,
                &space,
                cfg.search.trials,
                cfg.experiment.seed,
            );
            std::fs::create_dir_all(&out)
                .map_err(|e| PipelineError::runtime(&format!("create {}", out.display()), e))?;
            let csv = out.join("search.csv");
            write_search_csv(&csv, &rows)?;
            if let Some(best) = rows.first() {
                println!(
                    "search: best of {}: trial {} (lr {:.2e}, clip {:.3}, entropy {}, hidden {:?}) \
                     normalized return {:.4}{}",
                    rows.len(),
                    best.trial,
                    best.learning_rate,
                    best.clip_epsilon,
                    best.entropy_coef,
                    best.hidden_layers,
                    best.final_normalized_return,
                    if best.failed { " [failed]" } else { "" }
                );
            }
            println!("search: wrote {}", csv.display());
            Ok(())
        }
        Command::VerifyManifest { out } => {
            let manifest = Manifest::load(&out.join(MANIFEST_FILE))?;
            let issues = manifest.verify(&out)?;
            if issues.is_empty() {
                println!(
                    "manifest OK: {} files match in {}",
                    manifest.entries.len(),
                    out.display()
                );
                return Ok(());
            }
            for issue in &issues {
                match issue {
                    ManifestIssue::Missing { path } => eprintln!("missing: {path}"),
                    ManifestIssue::HashMismatch {
                        path,
                        expected,
                        actual,
                    } => eprintln!("hash mismatch: {path}: expected {expected}, got {actual}"),
                }
            }
            Err(PipelineError::Runtime(format!(
                "manifest verification failed: {} of {} files diverge",
                issues.len(),
                manifest.entries.len()
            )))
        }
    }
}

/// Parse arguments, dispatch, and map errors onto the exit-code scheme.
/// Argument errors exit 2 via clap itself, matching the config-error code.
pub fn cli_main() -> ExitCode {
    let cli = Cli::parse();
    match run_command(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
