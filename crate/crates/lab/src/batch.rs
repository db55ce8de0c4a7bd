//! Seeded parallel execution: batches of runs, averaged series, parallel
//! one-generation experiments, and the experimental-mode mean-value
//! iteration.
//!
//! Parallelism never changes results: run `i` takes seed `base + i`, trial
//! `j` takes a seed mixed from the experiment seed and `j`, and every
//! reduction consumes its inputs in index order, so output is independent
//! of the degree of parallelism (including none). Thread count follows
//! `RAYON_NUM_THREADS`.

use conelab_core::cone::ConeSpec;
use conelab_core::es::{
    self, aggregate_trials, average_series, run_seed, trial_rng, DynamicsSeries, EsConfig, EsError,
    LocalMeasures, TrialOutcome,
};
use conelab_core::mean_value::{self, CsaParams, IterateError, MeanState, StepError, StepRates};
use conelab_core::theory::TheoryParams;
use rayon::prelude::*;

/// Runs `repeats` seeded copies of the configured ES in parallel.
pub fn run_batch(
    cone: &ConeSpec,
    config: &EsConfig,
    repeats: u32,
) -> Result<Vec<DynamicsSeries>, EsError> {
    (0..repeats as u64)
        .into_par_iter()
        .map(|i| {
            let per_run = EsConfig {
                seed: run_seed(config.seed, i),
                ..config.clone()
            };
            es::run_es(cone, &per_run)
        })
        .collect()
}

/// Runs a batch and averages it per generation.
pub fn averaged_batch(
    cone: &ConeSpec,
    config: &EsConfig,
    repeats: u32,
) -> Result<DynamicsSeries, EsError> {
    let runs = run_batch(cone, config, repeats)?;
    average_series(&runs)
}

/// Parallel one-generation experiment; bit-identical to
/// [`es::one_generation_experiment`].
#[allow(clippy::too_many_arguments)]
pub fn parallel_experiment(
    cone: &ConeSpec,
    x: f64,
    r: f64,
    sigma: f64,
    mu: u32,
    lambda: u32,
    trials: u64,
    seed: u64,
) -> Result<LocalMeasures, EsError> {
    if trials == 0 {
        return Err(EsError::Argument("trials must be >= 1"));
    }
    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            es::one_generation_trial(cone, x, r, sigma, mu, lambda, &mut rng)
        })
        .collect();
    aggregate_trials(x, r, cone.n(), lambda, &outcomes)
}

/// Experimental-mode mean-value iteration with the per-generation Monte
/// Carlo estimates computed in parallel; matches
/// [`mean_value::iterate`] with [`mean_value::StepMode::Experimental`]
/// exactly.
pub fn iterate_experimental(
    initial: &MeanState,
    generations: usize,
    cone: &ConeSpec,
    params: &TheoryParams,
    csa: CsaParams,
    trials: u64,
    master_seed: u64,
) -> Result<Vec<MeanState>, IterateError> {
    let mut traj = Vec::with_capacity(generations + 1);
    traj.push(*initial);
    let mut state = *initial;
    for gen in 0..generations {
        let seed = master_seed.wrapping_add(gen as u64);
        let rates = if state.sigma_star_bar == 0.0 {
            StepRates {
                phi_x_star: 0.0,
                phi_r_star: 0.0,
                phi_r2: 0.0,
            }
        } else {
            let m = parallel_experiment(
                cone,
                state.x_bar,
                state.r_bar,
                state.sigma_bar,
                params.mu(),
                params.lambda(),
                trials,
                seed,
            )
            .map_err(|e| IterateError {
                gen,
                source: StepError::Experiment(e),
            })?;
            StepRates::from(&m)
        };
        state = mean_value::step_with_rates(&state, cone, params, csa, rates)
            .map_err(|source| IterateError { gen, source })?;
        traj.push(state);
    }
    Ok(traj)
}
