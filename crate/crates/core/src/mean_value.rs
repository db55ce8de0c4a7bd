//! The deterministic six-component mean-value iteration: expected axis
//! position, distance from the axis, the two path components, the squared
//! path length, and the mutation strength.
//!
//! Each step consumes the local progress measures either from the
//! closed-form theory ([`crate::theory`]) or from one-generation Monte Carlo
//! experiments ([`crate::es`]). Fluctuations around the means are neglected
//! by construction.

use alloc::vec::Vec;

use crate::cone::ConeSpec;
use crate::es;
use crate::math::{exp, sqrt};
use crate::theory::{TheoryParams, TheoryState};

/// Cumulation parameter and damping of the step-size adaptation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CsaParams {
    pub c: f64,
    pub d: f64,
}

/// State of the mean-value iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanState {
    pub x_bar: f64,
    pub r_bar: f64,
    pub s1_bar: f64,
    pub s_odot_bar: f64,
    pub s_norm_sq_bar: f64,
    pub sigma_bar: f64,
    /// Derived: `N * sigma_bar / r_bar`.
    pub sigma_star_bar: f64,
}

/// Where a step takes its progress measures from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepMode {
    /// Closed-form rate expressions.
    ClosedForm,
    /// Monte Carlo one-generation experiments with `trials` samples; the
    /// seed is used as given (see [`iterate`] for the per-generation
    /// derivation from a master seed).
    Experimental { trials: u64, seed: u64 },
}

/// Errors from stepping the iteration.
#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
pub enum StepError {
    #[error("state component {0} is invalid")]
    InvalidState(&'static str),
    #[error("component {component} became non-finite (value {value})")]
    NonFinite { component: &'static str, value: f64 },
    #[error("experiment failed: {0}")]
    Experiment(#[from] es::EsError),
}

/// A step error with the generation it occurred at.
#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
#[error("iteration failed at generation {gen}: {source}")]
pub struct IterateError {
    pub gen: usize,
    #[source]
    pub source: StepError,
}

impl MeanState {
    /// Builds a state, deriving the normalized mutation strength.
    pub fn new(
        x_bar: f64,
        r_bar: f64,
        s1_bar: f64,
        s_odot_bar: f64,
        s_norm_sq_bar: f64,
        sigma_bar: f64,
        n: usize,
    ) -> Result<Self, StepError> {
        if !r_bar.is_finite() || r_bar <= 0.0 {
            return Err(StepError::InvalidState("r_bar must be positive"));
        }
        if !sigma_bar.is_finite() || sigma_bar < 0.0 {
            return Err(StepError::InvalidState("sigma_bar must be non-negative"));
        }
        if s_norm_sq_bar < 0.0 {
            return Err(StepError::InvalidState(
                "s_norm_sq_bar must be non-negative",
            ));
        }
        Ok(Self {
            x_bar,
            r_bar,
            s1_bar,
            s_odot_bar,
            s_norm_sq_bar,
            sigma_bar,
            sigma_star_bar: n as f64 * sigma_bar / r_bar,
        })
    }

    /// The conventional start: an interior point with zero path.
    pub fn initial(x0: f64, r0: f64, sigma0: f64, n: usize) -> Result<Self, StepError> {
        Self::new(x0, r0, 0.0, 0.0, 0.0, sigma0, n)
    }
}

/// The progress measures a step consumes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRates {
    pub phi_x_star: f64,
    pub phi_r_star: f64,
    pub phi_r2: f64,
}

impl From<&es::LocalMeasures> for StepRates {
    fn from(m: &es::LocalMeasures) -> Self {
        Self {
            phi_x_star: m.phi_x_star.value,
            phi_r_star: m.phi_r_star.value,
            phi_r2: m.phi_r2.value,
        }
    }
}

/// Advances the mean-value system by one generation.
pub fn step(
    state: &MeanState,
    cone: &ConeSpec,
    params: &TheoryParams,
    csa: CsaParams,
    mode: StepMode,
) -> Result<MeanState, StepError> {
    let rates = gather_rates(state, cone, params, mode, None)?;
    apply(state, cone, params, csa, rates)
}

/// Advances the system with externally supplied progress measures. This is
/// what both [`step`] modes reduce to; it also lets a harness evaluate the
/// measures in parallel and keep the update itself identical.
pub fn step_with_rates(
    state: &MeanState,
    cone: &ConeSpec,
    params: &TheoryParams,
    csa: CsaParams,
    rates: StepRates,
) -> Result<MeanState, StepError> {
    apply(state, cone, params, csa, rates)
}

/// As [`step`] in closed-form mode, with the offspring feasibility
/// probability pinned instead of evaluated from the state. Pinning it to 0
/// reproduces the boundary regime the steady-state theory is derived in.
pub fn step_with_p_feas(
    state: &MeanState,
    cone: &ConeSpec,
    params: &TheoryParams,
    csa: CsaParams,
    p_feas: f64,
) -> Result<MeanState, StepError> {
    let rates = gather_rates(state, cone, params, StepMode::ClosedForm, Some(p_feas))?;
    apply(state, cone, params, csa, rates)
}

/// Repeated [`step`]; returns the whole trajectory including the initial
/// state. In experimental mode, generation `g` re-seeds its estimator as
/// `seed + g` for reproducibility.
pub fn iterate(
    initial: &MeanState,
    generations: usize,
    cone: &ConeSpec,
    params: &TheoryParams,
    csa: CsaParams,
    mode: StepMode,
) -> Result<Vec<MeanState>, IterateError> {
    let mut traj = Vec::with_capacity(generations + 1);
    traj.push(*initial);
    let mut state = *initial;
    for gen in 0..generations {
        let step_mode = match mode {
            StepMode::ClosedForm => StepMode::ClosedForm,
            StepMode::Experimental { trials, seed } => StepMode::Experimental {
                trials,
                seed: seed.wrapping_add(gen as u64),
            },
        };
        state = step(&state, cone, params, csa, step_mode)
            .map_err(|source| IterateError { gen, source })?;
        traj.push(state);
    }
    Ok(traj)
}

fn gather_rates(
    state: &MeanState,
    cone: &ConeSpec,
    params: &TheoryParams,
    mode: StepMode,
    p_feas_override: Option<f64>,
) -> Result<StepRates, StepError> {
    if state.sigma_star_bar == 0.0 {
        // degenerate mutation strength: no selection information, all
        // progress measures vanish
        return Ok(StepRates {
            phi_x_star: 0.0,
            phi_r_star: 0.0,
            phi_r2: 0.0,
        });
    }
    match mode {
        StepMode::ClosedForm => {
            let ts = TheoryState {
                x: state.x_bar,
                r: state.r_bar,
                sigma: state.sigma_bar,
                sigma_star: state.sigma_star_bar,
            };
            let p = p_feas_override.unwrap_or_else(|| params.p_feas(&ts));
            let phi_x = params.phi_x_star_at(&ts, p);
            let phi_r = params.phi_r_star_at(&ts, phi_x.infeasible, p);
            let phi_r2 = params.phi_r2_at(&ts, p);
            Ok(StepRates {
                phi_x_star: phi_x.combined,
                phi_r_star: phi_r,
                phi_r2,
            })
        }
        StepMode::Experimental { trials, seed } => {
            let m = es::one_generation_experiment(
                cone,
                state.x_bar,
                state.r_bar,
                state.sigma_bar,
                params.mu(),
                params.lambda(),
                trials,
                seed,
            )?;
            Ok(StepRates {
                phi_x_star: m.phi_x_star.value,
                phi_r_star: m.phi_r_star.value,
                phi_r2: m.phi_r2.value,
            })
        }
    }
}

fn apply(
    state: &MeanState,
    cone: &ConeSpec,
    params: &TheoryParams,
    csa: CsaParams,
    rates: StepRates,
) -> Result<MeanState, StepError> {
    let nf = params.n() as f64;
    let (c, d) = (csa.c, csa.d);
    let ss = state.sigma_star_bar;
    let gain = sqrt(params.mu() as f64 * c * (2.0 - c));
    let mu = params.mu() as f64;

    let x_next = state.x_bar * (1.0 - rates.phi_x_star / nf);
    let r_next = state.r_bar * (1.0 - rates.phi_r_star / nf);

    // -N phi_x / (sigma* r) and E[z_odot]; both vanish with sigma*
    let (x_term, z_odot) = if ss == 0.0 {
        (0.0, 0.0)
    } else {
        (
            -(state.x_bar / state.r_bar) * rates.phi_x_star / ss,
            -nf * rates.phi_r2 / (2.0 * ss * state.r_bar * state.r_bar) - ss / (2.0 * mu),
        )
    };

    let s1_next = (1.0 - c) * state.s1_bar + gain * x_term;
    let s_odot_next =
        (1.0 - c) * (1.0 + ss / nf * z_odot) * state.s_odot_bar + gain * (z_odot + ss / mu);
    // the squared length consumes the pre-update path components
    let s_norm_sq_next = (1.0 - c) * (1.0 - c) * state.s_norm_sq_bar
        + 2.0 * (1.0 - c) * gain * (state.s1_bar * x_term + state.s_odot_bar * z_odot)
        + c * (2.0 - c) * nf;
    // the mutation strength consumes the post-update squared length
    let sigma_next = state.sigma_bar * exp((s_norm_sq_next - nf) / (2.0 * d * nf));

    let (x_next, r_next) = back_project(cone, x_next, r_next);

    let next = MeanState {
        x_bar: x_next,
        r_bar: r_next,
        s1_bar: s1_next,
        s_odot_bar: s_odot_next,
        s_norm_sq_bar: s_norm_sq_next,
        sigma_bar: sigma_next,
        sigma_star_bar: nf * sigma_next / r_next,
    };
    for (component, value) in [
        ("x_bar", next.x_bar),
        ("r_bar", next.r_bar),
        ("s1_bar", next.s1_bar),
        ("s_odot_bar", next.s_odot_bar),
        ("s_norm_sq_bar", next.s_norm_sq_bar),
        ("sigma_bar", next.sigma_bar),
        ("sigma_star_bar", next.sigma_star_bar),
    ] {
        if !value.is_finite() {
            return Err(StepError::NonFinite { component, value });
        }
    }
    Ok(next)
}

/// Orthogonal projection of an infeasible mean point onto the boundary line
/// `r = x / sqrt(xi)` in the `(x, r)` plane — the same Euclidean-nearest
/// semantics as the full-space repair, restricted to the reduced plane.
fn back_project(cone: &ConeSpec, x: f64, r: f64) -> (f64, f64) {
    let sq = cone.sqrt_xi();
    if x >= 0.0 && r <= x / sq {
        return (x, r);
    }
    let xi = cone.xi();
    let height = x + r / sq;
    if height <= 0.0 {
        return (0.0, 0.0);
    }
    let beta = xi / (xi + 1.0) * height;
    (beta, beta / sq)
}
