//! Seeded random hyperparameter search: sample configurations from a
//! declared space, run truncated trainings, rank by final normalized return.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::Environment;
use crate::ppo::{derive_seed, train, PpoConfig, TrainHooks};

use super::config::SearchSection;
use super::PipelineError;

/// The sampling space: continuous parameters are log-uniform ranges,
/// discrete ones are categorical choice lists.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub learning_rate: [f64; 2],
    pub clip_epsilon: [f64; 2],
    pub entropy_coef_choices: Vec<f64>,
    pub hidden_layer_choices: Vec<Vec<usize>>,
}

impl SearchSpace {
    pub fn from_config(section: &SearchSection) -> Self {
        SearchSpace {
            learning_rate: section.learning_rate,
            clip_epsilon: section.clip_epsilon,
            entropy_coef_choices: section.entropy_coef_choices.clone(),
            hidden_layer_choices: section.hidden_layer_choices.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub clip_epsilon: f64,
    pub entropy_coef: f64,
    pub hidden_layers: Vec<usize>,
    /// Last curve point's normalized return; 0.0 for failed trials.
    pub final_normalized_return: f64,
    /// True when the trial panicked or errored; such rows rank last.
    pub failed: bool,
}

fn log_uniform(rng: &mut impl Rng, range: [f64; 2]) -> f64 {
    let (lo, hi) = (range[0].ln(), range[1].ln());
    (lo + rng.random_range(0.0..=1.0) * (hi - lo)).exp()
}

fn sample_trial(base: &PpoConfig, space: &SearchSpace, master_seed: u64, trial: usize) -> (PpoConfig, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master_seed, 70_000 + trial as u64));
    let mut cfg = base.clone();
    cfg.learning_rate = log_uniform(&mut rng, space.learning_rate);
    cfg.clip_epsilon = log_uniform(&mut rng, space.clip_epsilon);
    cfg.entropy_coef =
        space.entropy_coef_choices[rng.random_range(0..space.entropy_coef_choices.len())];
    cfg.hidden_layers =
        space.hidden_layer_choices[rng.random_range(0..space.hidden_layer_choices.len())].clone();
    let seed = derive_seed(master_seed, 80_000 + trial as u64);
    (cfg, seed)
}

/// Order: successful trials by descending final return, failures at the
/// bottom; ties keep trial order.
pub(crate) fn rank_rows(rows: &mut [TrialRow]) {
    rows.sort_by(|a, b| {
        a.failed
            .cmp(&b.failed)
            .then(b.final_normalized_return.total_cmp(&a.final_normalized_return))
    });
}

/// Run `n_trials` sampled configurations of truncated training and rank the
/// outcomes. A panicking or erroring trial is recorded as failed and the
/// search moves on.
pub fn random_search(
    factory: &dyn Fn(usize) -> Box<dyn Environment>,
    base: &PpoConfig,
    space: &SearchSpace,
    n_trials: usize,
    master_seed: u64,
) -> Vec<TrialRow> {
    let mut rows = Vec::with_capacity(n_trials);
    for trial in 0..n_trials {
        let (cfg, seed) = sample_trial(base, space, master_seed, trial);
        let outcome = catch_unwind(AssertUnwindSafe(|| {
            train(factory, &cfg, seed, &mut TrainHooks::default())
        }));
        let (final_return, failed) = match outcome {
            Ok(Ok(out)) => (out.curve.final_normalized_return(), false),
            Ok(Err(e)) => {
                eprintln!("search trial {trial}: error: {e}");
                (0.0, true)
            }
            Err(_) => {
                eprintln!("search trial {trial}: panicked");
                (0.0, true)
            }
        };
        rows.push(TrialRow {
            trial,
            seed,
            learning_rate: cfg.learning_rate,
            clip_epsilon: cfg.clip_epsilon,
            entropy_coef: cfg.entropy_coef,
            hidden_layers: cfg.hidden_layers.clone(),
            final_normalized_return: final_return,
            failed,
        });
    }
    rank_rows(&mut rows);
    rows
}

pub fn write_search_csv(path: &Path, rows: &[TrialRow]) -> Result<(), PipelineError> {
    let mut out = String::from(
        "rank,trial,seed,learning_rate,clip_epsilon,entropy_coef,hidden_layers,\
         final_normalized_return,status\n",
    );
    for (rank, r) in rows.iter().enumerate() {
        let hidden = r
            .hidden_layers
            .iter()
            .map(|w| w.to_string())
            .collect::<Vec<_>>()
            .join("x");
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            rank + 1,
            r.trial,
            r.seed,
            r.learning_rate,
            r.clip_epsilon,
            r.entropy_coef,
            hidden,
            r.final_normalized_return,
            if r.failed { "failed" } else { "ok" }
        ));
    }
    fs::write(path, out).map_err(|e| PipelineError::runtime("search csv: write", e))
}
