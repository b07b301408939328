//! Acceptance gate for the whole artifact: one test per criterion, each
//! printing an `ACCEPTANCE <id> PASS/FAIL` line (visible with
//! `cargo test --test acceptance -- --nocapture`) before asserting.
//!
//! Criteria 1-5 depend on real training runs at the shipped budgets and
//! presets; they share fixtures through `LazyLock` so each policy is trained
//! once. Criteria 6-11 are properties of the code alone and run in seconds.
//! Every tolerance is pinned literally at its use site.

use std::sync::LazyLock;

use tempfile::TempDir;
use twostage::env::Environment;
use twostage::nn::{MlpGradients, MlpParams, MlpSpec};
use twostage::pipeline::{
    eval_robustness, run_baseline, run_plan_only, run_two_stage, BaselineArtifacts,
    ExperimentConfig, PipelineError, PlanArtifacts, RobustnessSuite, TwoStageArtifacts,
    MANIFEST_FILE,
};
use twostage::ppo::{compute_gae, RolloutBatch};
use twostage::quad::{
    desired_foot_z, original_quad_reward, plan_reward, QuadPlanConfig, QuadPlanEnv, QuadPlanState,
};
use twostage::rocket::{
    dynamics_step, imitation_reward, sparse_reward, DensePoint, ImitationConfig, ReferenceIndex,
    ReferencePoint, ReferenceTrajectory, RocketImitationEnv, RocketState, RocketWorldConfig,
};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEEDS: [u64; 3] = [0, 1, 2];

fn verdict(id: &str, pass: bool, detail: &str) {
    let word = if pass { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {id} {word}: {detail}");
    assert!(pass, "ACCEPTANCE {id} {word}: {detail}");
}

fn rocket_config(obstacles: bool, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default(); // rocket-plan, 300k + 300k
    cfg.experiment.seed = seed;
    cfg.rocket.obstacles = obstacles;
    cfg
}

/// Three full two-stage runs. A seed whose planner misses the stage gate is
/// kept as an error: that seed simply failed.
struct TwoStageRuns {
    _dir: TempDir,
    runs: Vec<(u64, Result<TwoStageArtifacts, PipelineError>)>,
}

fn train_two_stage(obstacles: bool) -> TwoStageRuns {
    let dir = TempDir::new().expect("tempdir");
    let runs = SEEDS
        .iter()
        .map(|&seed| {
            let cfg = rocket_config(obstacles, seed);
            let out = dir.path().join(format!("seed{seed}"));
            (seed, run_two_stage(&cfg, &out, false))
        })
        .collect();
    TwoStageRuns { _dir: dir, runs }
}

static NO_OBSTACLE_RUNS: LazyLock<TwoStageRuns> = LazyLock::new(|| train_two_stage(false));
static OBSTACLE_RUNS: LazyLock<TwoStageRuns> = LazyLock::new(|| train_two_stage(true));

struct BaselineRuns {
    _dir: TempDir,
    runs: Vec<(u64, BaselineArtifacts)>,
}

static OBSTACLE_BASELINE_RUNS: LazyLock<BaselineRuns> = LazyLock::new(|| {
    let dir = TempDir::new().expect("tempdir");
    let runs = SEEDS
        .iter()
        .map(|&seed| {
            let cfg = rocket_config(true, seed);
            let out = dir.path().join(format!("seed{seed}"));
            (seed, run_baseline(&cfg, &out, false).expect("baseline run"))
        })
        .collect();
    BaselineRuns { _dir: dir, runs }
});

struct QuadRuns {
    _dir: TempDir,
    runs: Vec<(u64, PlanArtifacts)>,
}

static QUAD_RUNS: LazyLock<QuadRuns> = LazyLock::new(|| {
    let dir = TempDir::new().expect("tempdir");
    let runs = SEEDS
        .iter()
        .map(|&seed| {
            let mut cfg = ExperimentConfig::default();
            cfg.experiment.env = "quad-plan".to_string();
            cfg.experiment.seed = seed;
            cfg.stages.planning_steps = 500_000;
            let out = dir.path().join(format!("seed{seed}"));
            (seed, run_plan_only(&cfg, &out, false).expect("quad run"))
        })
        .collect();
    QuadRuns { _dir: dir, runs }
});

// --- Training-dependent criteria ---------------------------------------

/// Two-stage rocket navigation without obstacles: with default presets and
/// 300k planning + 300k imitation steps, at least 2 of 3 seeds end their
/// deterministic rollout within 2 m of the goal.
#[test]
fn a01_two_stage_reaches_goal_without_obstacles() {
    let mut details = Vec::new();
    let mut successes = 0;
    for (seed, run) in &NO_OBSTACLE_RUNS.runs {
        match run {
            Ok(art) => {
                let d = art.eval.final_distance;
                if d <= 2.0 {
                    successes += 1;
                }
                details.push(format!("seed {seed}: final distance {d:.3} m"));
            }
            Err(e) => details.push(format!("seed {seed}: {e}")),
        }
    }
    verdict(
        "1",
        successes >= 2,
        &format!(
            "{successes}/3 seeds ended within 2 m ({})",
            details.join("; ")
        ),
    );
}

/// Monolithic PPO on the full-dynamics obstacle task, 600k steps: never
/// comes within 5 m of the goal in deterministic evaluation, and per seed
/// its final normalized return is below half of the two-stage pipeline's.
#[test]
fn a02_monolithic_baseline_fails_where_two_stage_succeeds() {
    let mut details = Vec::new();
    let mut pass = true;
    for (seed, baseline) in &OBSTACLE_BASELINE_RUNS.runs {
        let closest = baseline.eval.min_goal_distance;
        let base_final = baseline.train.curve.final_normalized_return();
        let two_stage_final = OBSTACLE_RUNS
            .runs
            .iter()
            .find(|(s, _)| s == seed)
            .and_then(|(_, r)| r.as_ref().ok())
            .map(|art| art.imitation.curve.final_normalized_return());
        let ok = match two_stage_final {
            Some(ts) => closest > 5.0 && base_final < 0.5 * ts,
            None => false,
        };
        pass &= ok;
        details.push(format!(
            "seed {seed}: baseline closest {closest:.2} m, final normalized {base_final:.2e} \
             vs two-stage {}",
            two_stage_final.map_or("(no run)".to_string(), |ts| format!("{ts:.2e}")),
        ));
    }
    verdict("2", pass, &details.join("; "));
}

/// Obstacle variant: the reference trajectory clears both obstacle centers
/// by more than the obstacle radius and the imitation rollout collides with
/// nothing, in at least 2 of 3 seeds.
#[test]
fn a03_obstacle_runs_plan_clear_paths_and_track_without_collisions() {
    let world = RocketWorldConfig::with_obstacles();
    let mut details = Vec::new();
    let mut successes = 0;
    for (seed, run) in &OBSTACLE_RUNS.runs {
        match run {
            Ok(art) => {
                let clearances: Vec<f64> = world
                    .obstacles
                    .iter()
                    .map(|&c| art.trajectory.min_distance_to(c))
                    .collect();
                let clear = clearances.iter().all(|&d| d > world.obstacle_radius);
                let collisions = art.eval.collisions;
                if clear && collisions == 0 {
                    successes += 1;
                }
                details.push(format!(
                    "seed {seed}: clearances [{:.2}, {:.2}] m (radius {}), {} collisions",
                    clearances[0], clearances[1], world.obstacle_radius, collisions
                ));
            }
            Err(e) => details.push(format!("seed {seed}: {e}")),
        }
    }
    verdict("3", successes >= 2, &details.join("; "));
}

/// Quad kinematic planner with the trot preset, 500k steps: at least 2 of 3
/// seeds come within 0.3 m of the 2 m-distant goal inside 59 steps, and
/// every visited state obeys the footfall schedule exactly and the
/// per-component displacement caps.
#[test]
fn a04_quad_trot_planner_reaches_goal_on_schedule() {
    let mut details = Vec::new();
    let mut successes = 0;
    for (seed, art) in &QUAD_RUNS.runs {
        let cfg = QuadPlanConfig::trot();
        let body_cap = cfg.body_step_cap() + 1e-9;
        let ee_cap = cfg.ee_step_cap() + 1e-9;
        let mut env = QuadPlanEnv::new(cfg.clone());
        let mut obs = env.reset(None);
        let mut closest = env.state().distance_to_goal(&cfg);
        let mut steps = 0u64;
        let mut schedule_ok = true;
        let mut caps_ok = true;
        loop {
            let prev = env.state().clone();
            let action = art.train.policy.mean_action(&obs);
            let result = env.step(&action);
            let cur = env.state().clone();
            steps += 1;
            closest = closest.min(cur.distance_to_goal(&cfg));
            for i in 0..3 {
                caps_ok &= (cur.body[i] - prev.body[i]).abs() <= body_cap;
            }
            for j in 0..4 {
                caps_ok &= (cur.feet[j][0] - prev.feet[j][0]).abs() <= ee_cap;
                caps_ok &= (cur.feet[j][1] - prev.feet[j][1]).abs() <= ee_cap;
                // The schedule invariant is exact, so compare with ==.
                let want = desired_foot_z(cfg.pattern.contact_flag(j, cur.phase));
                schedule_ok &= cur.feet[j][2] == want;
            }
            if result.done() {
                break;
            }
        }
        let reached = closest <= 0.3 && steps <= 59;
        if reached && schedule_ok && caps_ok {
            successes += 1;
        }
        details.push(format!(
            "seed {seed}: closest {closest:.3} m in {steps} steps, schedule {}, caps {}",
            if schedule_ok { "exact" } else { "VIOLATED" },
            if caps_ok { "held" } else { "VIOLATED" },
        ));
    }
    verdict("4", successes >= 2, &details.join("; "));
}

/// Impulse robustness: a trained imitation policy's success rate under
/// 0.5 N / 0.1 s pushes (20 seeded trials) stays within 20 percentage
/// points of its unperturbed success rate.
#[test]
fn a05_imitation_policy_tolerates_impulse_perturbations() {
    let trained = NO_OBSTACLE_RUNS
        .runs
        .iter()
        .find_map(|(_, r)| r.as_ref().ok())
        .expect("at least one trained imitation policy");
    let world = RocketWorldConfig::no_obstacles();
    let trajectory = trained.trajectory.clone();
    let suite = RobustnessSuite {
        magnitudes: vec![0.0, 0.5],
        duration: 0.1,
        trials: 20,
        window: [0.3, 0.7],
        seed: 0,
        success_distance: 2.0,
    };
    let report = eval_robustness(
        &trained.imitation.policy,
        &|| {
            RocketImitationEnv::new(world.clone(), &trajectory, ImitationConfig::default())
                .expect("imitation env")
        },
        &suite,
    );
    let unperturbed = report.success_rate(0.0);
    let pushed = report.success_rate(0.5);
    let gap = (unperturbed - pushed).abs();
    verdict(
        "5",
        gap <= 0.20 + 1e-9,
        &format!(
            "success rate {:.0}% unperturbed vs {:.0}% under 0.5 N / 0.1 s pushes (gap {:.0} pp)",
            unperturbed * 100.0,
            pushed * 100.0,
            gap * 100.0
        ),
    );
}

// --- Properties of the code alone ---------------------------------------

/// Backpropagation matches central finite differences to a relative error
/// below 1e-5 on 50 randomly shaped, randomly initialized networks.
#[test]
fn a06_analytic_gradients_match_finite_differences() {
    fn finite_difference(net: &MlpParams, x: &[f64], g: &[f64], h: f64) -> MlpGradients {
        let mut out = MlpGradients::zeros_like(net);
        let loss =
            |n: &MlpParams| -> f64 { n.forward(x).iter().zip(g).map(|(o, gi)| o * gi).sum() };
        for l in 0..net.layers.len() {
            for w in 0..net.layers[l].weights.len() {
                let mut plus = net.clone();
                plus.layers[l].weights[w] += h;
                let mut minus = net.clone();
                minus.layers[l].weights[w] -= h;
                out.layers[l].weights[w] = (loss(&plus) - loss(&minus)) / (2.0 * h);
            }
            for b in 0..net.layers[l].biases.len() {
                let mut plus = net.clone();
                plus.layers[l].biases[b] += h;
                let mut minus = net.clone();
                minus.layers[l].biases[b] -= h;
                out.layers[l].biases[b] = (loss(&plus) - loss(&minus)) / (2.0 * h);
            }
        }
        out
    }

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for net_index in 0..50 {
        let mut sizes = vec![rng.random_range(1..=5)];
        for _ in 0..rng.random_range(1..=2) {
            sizes.push(rng.random_range(1..=8));
        }
        sizes.push(rng.random_range(1..=4));
        let spec = MlpSpec::new(sizes).unwrap();
        let net = MlpParams::init(&spec, 1000 + net_index);
        let x: Vec<f64> = (0..spec.input_dim())
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect();
        let g: Vec<f64> = (0..spec.output_dim())
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect();
        let analytic = net.backward(&x, &g);
        let numeric = finite_difference(&net, &x, &g, 1e-5);
        for (la, ln) in analytic.layers.iter().zip(&numeric.layers) {
            for (a, n) in la
                .weights
                .iter()
                .chain(&la.biases)
                .zip(ln.weights.iter().chain(&ln.biases))
            {
                let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
                worst = worst.max(rel);
            }
        }
    }
    verdict(
        "6",
        worst < 1e-5,
        &format!("worst relative gradient error {worst:.2e} over 50 networks (limit 1e-5)"),
    );
}

/// Generalized advantage estimation equals the brute-force discounted sum of
/// temporal-difference residuals on 200 random batches of length <= 50.
#[test]
fn a07_gae_matches_brute_force_recurrence() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let workers = rng.random_range(1..=3);
        let lengths: Vec<usize> = (0..workers).map(|_| rng.random_range(1..=17)).collect();
        let n: usize = lengths.iter().sum();
        let mut batch = RolloutBatch {
            obs_dim: 1,
            act_dim: 1,
            worker_lengths: lengths,
            observations: vec![0.0; n],
            actions: vec![0.0; n],
            log_probs: vec![0.0; n],
            rewards: (0..n).map(|_| rng.random_range(-2.0..=2.0)).collect(),
            values: (0..n).map(|_| rng.random_range(-2.0..=2.0)).collect(),
            next_values: (0..n).map(|_| rng.random_range(-2.0..=2.0)).collect(),
            terminated: (0..n).map(|_| rng.random_range(0..10) == 0).collect(),
            truncated: vec![false; n],
            episode_returns: Vec::new(),
            episode_lengths: Vec::new(),
        };
        for i in 0..n {
            if !batch.terminated[i] {
                batch.truncated[i] = rng.random_range(0..10) == 0;
            }
        }
        let gamma = rng.random_range(0.5..=1.0);
        let lambda = rng.random_range(0.0..=1.0);
        let (fast_adv, fast_ret) = compute_gae(&batch, gamma, lambda);

        for range in batch.worker_ranges() {
            for i in range.clone() {
                let mut advantage = 0.0;
                let mut coeff = 1.0;
                for j in i..range.end {
                    let not_terminated = !batch.terminated[j] as u8 as f64;
                    let delta = batch.rewards[j] + gamma * batch.next_values[j] * not_terminated
                        - batch.values[j];
                    advantage += coeff * delta;
                    if batch.terminated[j] || batch.truncated[j] {
                        break;
                    }
                    coeff *= gamma * lambda;
                }
                worst = worst.max((advantage - fast_adv[i]).abs());
                worst = worst.max((advantage + batch.values[i] - fast_ret[i]).abs());
            }
        }
    }
    verdict(
        "7",
        worst < 1e-9,
        &format!("worst |GAE - brute force| = {worst:.2e} over 200 batches (limit 1e-9)"),
    );
}

/// Physics closed forms: free fall settles at the 1.0 m/s terminal speed
/// within 1e-3, and with drag off the integrator reproduces the exact
/// discrete ballistic solution within 1e-9 per step.
#[test]
fn a08_dynamics_match_closed_forms() {
    // Terminal speed: gravity * mass / drag = 2.5 / 2.5 = 1.0 m/s.
    let world = RocketWorldConfig::no_obstacles();
    let mut state = RocketState {
        position: [0.0, 1000.0],
        heading: 0.0,
        velocity: [0.0, 0.0],
        angular_velocity: 0.0,
    };
    for _ in 0..2000 {
        state = dynamics_step(&state, &world, 0.0, 0.0, [0.0, 0.0]);
    }
    let terminal_err = (state.velocity[1] - (-1.0)).abs();

    // Drag-free ballistic flight: the semi-implicit update has the exact
    // closed form v_n = v0 + n g dt, y_n = y0 + n v0 dt + g dt^2 n(n+1)/2.
    let mut dragless = world.clone();
    dragless.drag_coefficient = 0.0;
    let v0 = 3.0;
    let y0 = 5.0;
    let mut ball = RocketState {
        position: [0.0, y0],
        heading: 0.0,
        velocity: [0.0, v0],
        angular_velocity: 0.0,
    };
    let mut ballistic_err = 0.0f64;
    for n in 1..=100u32 {
        ball = dynamics_step(&ball, &dragless, 0.0, 0.0, [0.0, 0.0]);
        let n_f = n as f64;
        let expect_y = y0
            + n_f * v0 * dragless.dt
            + dragless.gravity * dragless.dt * dragless.dt * n_f * (n_f + 1.0) / 2.0;
        ballistic_err = ballistic_err.max((ball.position[1] - expect_y).abs() / n_f);
    }
    verdict(
        "8",
        terminal_err <= 1e-3 && ballistic_err <= 1e-9,
        &format!(
            "terminal speed error {terminal_err:.1e} (limit 1e-3), \
             ballistic error {ballistic_err:.1e}/step (limit 1e-9)"
        ),
    );
}

/// Published reward constants reproduce exactly (within 1e-12): 0.9 at the
/// goal, the quad term values exp(-2.5), exp(-0.4), exp(-0.5), exp(-2), the
/// on-path tracking identity, and the -0.2 collision offset.
#[test]
fn a09_reward_unit_values_are_exact() {
    let tol = 1e-12;
    let mut checks: Vec<(String, f64)> = Vec::new();

    // Goal attractor peaks at its 0.9 weight.
    let world = RocketWorldConfig::no_obstacles();
    checks.push((
        "sparse reward at goal vs 0.9".into(),
        (sparse_reward(&world, world.goal) - 0.9).abs(),
    ));

    // Quad planning reward: body 1 m short of the goal, everything else
    // ideal (feet centered under the body at nominal lateral placements).
    let cfg = QuadPlanConfig::trot();
    let ideal_at = |body_y: f64, feet_y: f64| -> QuadPlanState {
        let mut feet = [[0.0; 3]; 4];
        for (j, foot) in feet.iter_mut().enumerate() {
            foot[0] = cfg.nominal_feet[j][0];
            foot[1] = feet_y;
            foot[2] = desired_foot_z(cfg.pattern.contact_flag(j, 0.0));
        }
        QuadPlanState {
            body: [0.0, body_y, cfg.com_height],
            feet,
            phase: 0.0,
        }
    };
    let one_meter_out = plan_reward(&ideal_at(cfg.goal[1] - 1.0, cfg.goal[1] - 1.0), &cfg);
    checks.push((
        "plan reward 1 m from goal vs exp(-2.5)".into(),
        (one_meter_out.total - (-2.5f64).exp()).abs(),
    ));

    // Body over the goal but the foot centroid trailing it by 0.1 m.
    let com_offset = plan_reward(&ideal_at(cfg.goal[1], cfg.goal[1] - 0.1), &cfg);
    checks.push((
        "plan reward with 0.1 m CoM offset vs exp(-0.4)".into(),
        (com_offset.total - (-0.4f64).exp()).abs(),
    ));

    // Original task terms on a consecutive state pair at the goal.
    let at_goal = ideal_at(cfg.goal[1], cfg.goal[1]);
    let stationary = original_quad_reward(&at_goal, &at_goal, &cfg);
    checks.push(("stationary original reward vs 1.0".into(), (stationary.total - 1.0).abs()));
    let mut slipped = at_goal.clone();
    assert!(cfg.pattern.contact_flag(0, slipped.phase), "leg 0 in stance");
    slipped.feet[0][1] += 0.05;
    let slip = original_quad_reward(&at_goal, &slipped, &cfg);
    checks.push((
        "no-slip term after a 0.05 m stance slip vs exp(-0.5)".into(),
        (slip.r_ns - (-0.5f64).exp()).abs(),
    ));
    let mut dropped = at_goal.clone();
    assert!(!cfg.pattern.contact_flag(1, dropped.phase), "leg 1 in swing");
    dropped.feet[1][2] = 0.0; // should be at the 0.10 m swing height
    let drop = original_quad_reward(&at_goal, &dropped, &cfg);
    checks.push((
        "foot-height term with a grounded swing foot vs exp(-2)".into(),
        (drop.r_ee_z - (-2f64).exp()).abs(),
    ));

    // Tracking reward: on the reference it returns the stored reward, and a
    // collision subtracts exactly 0.2.
    let imi = ImitationConfig::default();
    let matched = DensePoint {
        position: [1.0, 2.0],
        reward: 0.625,
    };
    checks.push((
        "on-path tracking reward vs stored reward".into(),
        (imitation_reward(&imi, &matched, 0.0, false) - matched.reward).abs(),
    ));
    checks.push((
        "collision offset vs -0.2".into(),
        (imitation_reward(&imi, &matched, 0.0, true) - (matched.reward - 0.2)).abs(),
    ));

    let worst = checks.iter().cloned().fold(
        ("none".to_string(), 0.0f64),
        |acc, c| if c.1 > acc.1 { c } else { acc },
    );
    verdict(
        "9",
        worst.1 <= tol,
        &format!(
            "{} unit values exact; worst deviation {:.1e} ({}; limit 1e-12)",
            checks.len(),
            worst.1,
            worst.0
        ),
    );
}

/// Determinism: running the pipeline twice with the same config and seed
/// produces byte-identical artifact manifests (hence identical hashes).
#[test]
fn a10_pipeline_reruns_bit_identically() {
    let mut cfg = rocket_config(false, 7);
    cfg.stages.planning_steps = 4096;
    cfg.stages.imitation_steps = 4096;
    cfg.stages.gate_distance = 1e9; // tiny budget: exercise both stages
    cfg.ppo.hidden_layers = Some(vec![16, 16]);
    cfg.ppo.steps_per_update = Some(256);
    let dir = TempDir::new().unwrap();
    let a = run_two_stage(&cfg, &dir.path().join("a"), false).expect("first run");
    let b = run_two_stage(&cfg, &dir.path().join("b"), false).expect("second run");
    let bytes_a = std::fs::read(dir.path().join("a").join(MANIFEST_FILE)).unwrap();
    let bytes_b = std::fs::read(dir.path().join("b").join(MANIFEST_FILE)).unwrap();
    verdict(
        "10",
        a.manifest == b.manifest && bytes_a == bytes_b,
        &format!(
            "two runs, {} manifest entries, byte-identical: {}",
            a.manifest.entries.len(),
            bytes_a == bytes_b
        ),
    );
}

/// Densification: on a 0.5 m grid over the arena, the share of positions
/// where the tracking reward against a straight start-to-goal reference
/// exceeds 0.05 is strictly larger than the share where the sparse reward
/// does.
#[test]
fn a11_tracking_reward_covers_more_of_the_arena_than_sparse() {
    let world = RocketWorldConfig::no_obstacles();
    let dt = 0.05;
    let step = 0.5;
    let total = ((world.goal[1] - world.start[1]) / step).round() as usize;
    let points: Vec<ReferencePoint> = (0..=total)
        .map(|i| {
            let position = [0.0, world.start[1] + i as f64 * step];
            ReferencePoint {
                t: i as f64 * dt,
                position,
                heading: 0.0,
                reward: sparse_reward(&world, position),
            }
        })
        .collect();
    let trajectory = ReferenceTrajectory::new(
        dt,
        world.goal,
        twostage::rocket::reward_layout_hash(&world),
        points,
    )
    .unwrap();
    let imi = ImitationConfig::default();
    let index = ReferenceIndex::build(&trajectory, &world, &imi).unwrap();

    let threshold = 0.05;
    let mut cells = 0u32;
    let mut sparse_cells = 0u32;
    let mut tracking_cells = 0u32;
    let mut y = world.y_bounds[0];
    while y <= world.y_bounds[1] + 1e-9 {
        let mut x = world.x_bounds[0];
        while x <= world.x_bounds[1] + 1e-9 {
            cells += 1;
            if sparse_reward(&world, [x, y]) > threshold {
                sparse_cells += 1;
            }
            let (idx, err) = index.probe([x, y]);
            if imitation_reward(&imi, &index.points()[idx], err, false) > threshold {
                tracking_cells += 1;
            }
            x += 0.5;
        }
        y += 0.5;
    }
    verdict(
        "11",
        tracking_cells > sparse_cells,
        &format!(
            "tracking reward > {threshold} on {tracking_cells}/{cells} grid cells, \
             sparse on {sparse_cells}/{cells}"
        ),
    );
}
