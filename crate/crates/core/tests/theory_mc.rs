//! Cross-validation of the closed-form local theory against the
//! one-generation Monte Carlo estimator, in the regime where the
//! approximations are designed to hold (boundary states, moderate-to-large
//! normalized mutation strength, large `xi` and `N`).

use conelab_core::cone::ConeSpec;
use conelab_core::es::{one_generation_experiment, one_generation_trial, trial_rng, LocalMeasures};
use conelab_core::theory::{
    expected_z_odot, progress_coefficient, r_dist_params, TheoryParams, TheoryState,
};

const N: usize = 400;
const XI: f64 = 10.0;
const TRIALS: u64 = 20_000;

fn setup(sigma_star: f64) -> (ConeSpec, TheoryParams, TheoryState, LocalMeasures) {
    let cone = ConeSpec::new(N, XI).unwrap();
    let params = TheoryParams::new(&cone, 3, 10).unwrap();
    let state = TheoryState::on_boundary(&cone, 1.0, sigma_star).unwrap();
    let mc = one_generation_experiment(&cone, state.x, state.r, state.sigma, 3, 10, TRIALS, 2024)
        .unwrap();
    (cone, params, state, mc)
}

fn within(theory: f64, mc: f64, se: f64, rel: f64) -> bool {
    let err = (theory - mc).abs();
    err <= rel * mc.abs().max(theory.abs()) || err <= 3.0 * se
}

#[test]
fn progress_rates_match_mc_at_moderate_sigma() {
    // the paper's own comparison regime: boundary state, sigma* = 6
    let (_, params, state, mc) = setup(6.0);
    let phi_x = params.phi_x_star(&state);
    let phi_r = params.phi_r_star(&state, phi_x.infeasible);
    let phi_r2 = params.phi_r2(&state);
    assert!(
        within(phi_x.combined, mc.phi_x_star.value, mc.phi_x_star.se, 0.10),
        "phi_x*: {} vs {} +- {}",
        phi_x.combined,
        mc.phi_x_star.value,
        mc.phi_x_star.se
    );
    assert!(
        within(phi_r, mc.phi_r_star.value, mc.phi_r_star.se, 0.10),
        "phi_r*: {} vs {} +- {}",
        phi_r,
        mc.phi_r_star.value,
        mc.phi_r_star.se
    );
    assert!(
        within(phi_r2, mc.phi_r2.value, mc.phi_r2.se, 0.10),
        "phi_r2: {} vs {} +- {}",
        phi_r2,
        mc.phi_r2.value,
        mc.phi_r2.se
    );
}

#[test]
fn feasibility_probability_matches_mc() {
    let (_, params, state, mc) = setup(6.0);
    let p = params.p_feas(&state);
    assert!(
        (p - mc.p_feas_hat.value).abs() <= 3.0 * mc.p_feas_hat.se + 2e-3,
        "p_feas: {} vs {} +- {}",
        p,
        mc.p_feas_hat.value,
        mc.p_feas_hat.se
    );
}

#[test]
fn feasibility_is_half_at_the_median_point() {
    // x = sqrt(xi) * r_bar puts the approximate feasibility at exactly 1/2
    let cone = ConeSpec::new(N, XI).unwrap();
    let sigma_star = 2.0;
    let r = 1.0;
    let rd = r_dist_params(r, sigma_star, N);
    let x = cone.sqrt_xi() * rd.r_bar;
    let mc = one_generation_experiment(&cone, x, r, sigma_star * r / N as f64, 3, 10, TRIALS, 7)
        .unwrap();
    assert!(
        (mc.p_feas_hat.value - 0.5).abs() <= 3.0 * mc.p_feas_hat.se,
        "{} +- {}",
        mc.p_feas_hat.value,
        mc.p_feas_hat.se
    );
}

#[test]
fn expected_z_odot_matches_mc() {
    let (_, params, state, mc) = setup(6.0);
    let phi_r2 = params.phi_r2(&state);
    let z = expected_z_odot(phi_r2, state.sigma_star, state.r, N, 3).unwrap();
    assert!(
        (z - mc.z_odot_hat.value).abs() <= 3.0 * mc.z_odot_hat.se + 0.03 * z.abs(),
        "z_odot: {} vs {} +- {}",
        z,
        mc.z_odot_hat.value,
        mc.z_odot_hat.se
    );
}

#[test]
fn expected_q_infeas_matches_conditioned_mc() {
    // at sigma* = 6 on the boundary nearly every generation has zero
    // feasible offspring, so conditioning on "all infeasible" is cheap
    let (cone, params, state, _) = setup(6.0);
    let mut sum = 0.0;
    let mut count = 0u64;
    for i in 0..TRIALS {
        let mut rng = trial_rng(55, i);
        let t = one_generation_trial(&cone, state.x, state.r, state.sigma, 3, 10, &mut rng);
        if t.feasible == 0 {
            sum += t.q;
            count += 1;
        }
    }
    assert!(count > TRIALS / 2);
    let mc_mean = sum / count as f64;
    let theory = params.expected_q_infeas(&state);
    assert!(
        (theory - mc_mean).abs() <= 0.05 * mc_mean.abs(),
        "{theory} vs {mc_mean}"
    );
}

#[test]
fn quadrature_matches_mc_oracle_smoke() {
    // the full 1e7-sample grid runs in the acceptance suite; this is a
    // quick 1e5-sample spot check at (3, 10)
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
    let samples = 100_000;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..samples {
        let mut z: Vec<f64> = (0..10)
            .map(|_| rng.sample(rand_distr::StandardNormal))
            .collect();
        z.sort_by(f64::total_cmp);
        let top3 = (z[7] + z[8] + z[9]) / 3.0;
        let delta = top3 - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (top3 - mean);
    }
    let se = (m2 / (samples - 1) as f64 / samples as f64).sqrt();
    let quad = progress_coefficient(3, 10).unwrap();
    assert!((quad - mean).abs() <= 4.0 * se, "{quad} vs {mean} +- {se}");
}
