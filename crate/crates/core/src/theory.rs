//! Closed-form local (one-generation) theory: progress coefficient, offspring
//! feasibility probability, the normal approximation of the offspring
//! distance distribution, and the approximate progress rates.
//!
//! Rate expressions are evaluated in their full stated form with no
//! internal re-simplification, so that discrepancies against Monte Carlo
//! are attributable to the approximations themselves.

use crate::cone::ConeSpec;
use crate::math::{adaptive_simpson, exp, ln, ln_binomial, normal_cdf, sqrt};

/// Strategy-level constants entering every rate expression.
///
/// Construction computes and caches the progress coefficient, which is used
/// by every subsequent evaluation.
#[derive(Clone, Copy, Debug)]
pub struct TheoryParams {
    n: usize,
    xi: f64,
    mu: u32,
    lambda: u32,
    c_mu_lambda: f64,
}

/// A position/mutation-strength state in the `(x, r)` reduction.
#[derive(Clone, Copy, Debug)]
pub struct TheoryState {
    /// Distance along the cone axis, `> 0`.
    pub x: f64,
    /// Distance from the cone axis, `> 0`.
    pub r: f64,
    /// Mutation strength, `> 0`.
    pub sigma: f64,
    /// Normalized mutation strength `N * sigma / r`.
    pub sigma_star: f64,
}

/// Parameters of the normal approximation of the offspring distance from the
/// axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RDistParams {
    /// Mean offspring distance.
    pub r_bar: f64,
    /// Standard deviation of the offspring distance.
    pub sigma_r: f64,
}

/// Combined and infeasible-branch values of the normalized axial progress
/// rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiXStar {
    /// Feasibility-weighted mix.
    pub combined: f64,
    /// The infeasible-branch value, needed by the radial rate and by the
    /// steady-state derivation.
    pub infeasible: f64,
}

/// Errors from theory-parameter construction and evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TheoryError {
    #[error("mu must satisfy 1 <= mu <= lambda (got mu={mu}, lambda={lambda})")]
    Selection { mu: u32, lambda: u32 },
    #[error("argument out of domain: {0}")]
    Domain(&'static str),
}

/// Expected average of the `mu` largest of `lambda` i.i.d. standard normal
/// variates, by deterministic quadrature (absolute error well below 1e-8).
pub fn progress_coefficient(mu: u32, lambda: u32) -> Result<f64, TheoryError> {
    if mu < 1 || mu > lambda {
        return Err(TheoryError::Selection { mu, lambda });
    }
    if mu == lambda {
        // the (lambda - mu) prefactor kills the integral: no selection pressure
        return Ok(0.0);
    }
    let a = (lambda - mu - 1) as f64;
    let b = (mu - 1) as f64;
    let integrand = move |t: f64| {
        let phi = normal_cdf(t);
        let mut v = exp(-t * t);
        if a > 0.0 {
            v *= exp(a * ln(phi));
        }
        if b > 0.0 {
            v *= exp(b * ln(1.0 - phi));
        }
        v
    };
    // The integrand decays like e^{-t^2}; [-10, 10] truncates below 1e-40.
    let integral = adaptive_simpson(&integrand, -10.0, 10.0, 5e-13);
    let ln_pref =
        ln((lambda - mu) as f64) + ln_binomial(lambda, mu) - ln(2.0 * core::f64::consts::PI);
    Ok(exp(ln_pref) * integral)
}

/// Mean and standard deviation of the normal approximation of the offspring
/// distance from the axis, given the parental distance `r` and the
/// normalized mutation strength.
pub fn r_dist_params(r: f64, sigma_star: f64, n: usize) -> RDistParams {
    let nf = n as f64;
    let u = sigma_star * sigma_star / nf * (1.0 - 1.0 / nf);
    let r_bar = r * sqrt(1.0 + u);
    let half = sigma_star * sigma_star / (2.0 * nf) * (1.0 - 1.0 / nf);
    let sigma_r = r * sigma_star / nf * sqrt((1.0 + half) / (1.0 + u));
    RDistParams { r_bar, sigma_r }
}

impl TheoryParams {
    /// Builds the parameter bundle, computing the progress coefficient once.
    pub fn new(cone: &ConeSpec, mu: u32, lambda: u32) -> Result<Self, TheoryError> {
        let c_mu_lambda = progress_coefficient(mu, lambda)?;
        Ok(Self {
            n: cone.n(),
            xi: cone.xi(),
            mu,
            lambda,
            c_mu_lambda,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn xi(&self) -> f64 {
        self.xi
    }

    #[inline]
    pub fn mu(&self) -> u32 {
        self.mu
    }

    #[inline]
    pub fn lambda(&self) -> u32 {
        self.lambda
    }

    /// The cached progress coefficient.
    #[inline]
    pub fn c_mu_lambda(&self) -> f64 {
        self.c_mu_lambda
    }

    /// Offspring feasibility probability.
    pub fn p_feas(&self, state: &TheoryState) -> f64 {
        let rd = r_dist_params(state.r, state.sigma_star, self.n);
        normal_cdf((state.x / sqrt(self.xi) - rd.r_bar) / state.sigma)
    }

    /// Normalized axial progress rate: feasibility-weighted mix of the
    /// feasible term and the infeasible (projection-dominated) term.
    ///
    /// Returns both the mix and the infeasible branch on its own.
    pub fn phi_x_star(&self, state: &TheoryState) -> PhiXStar {
        self.phi_x_star_at(state, self.p_feas(state))
    }

    /// As [`Self::phi_x_star`] with the feasibility probability pinned, e.g.
    /// to study one branch in isolation.
    pub fn phi_x_star_at(&self, state: &TheoryState, p_feas: f64) -> PhiXStar {
        let nf = self.n as f64;
        let xi = self.xi;
        let ss = state.sigma_star;
        let ss2 = ss * ss;
        let rho = sqrt(xi) * state.r / state.x; // sqrt(xi) r / x, 1 on the boundary
        let feasible = state.r / state.x * ss * self.c_mu_lambda;
        let t1 = nf / (1.0 + xi) * (1.0 - rho * sqrt(1.0 + ss2 / nf));
        let kappa = (1.0 + ss2 / (2.0 * nf)) / (1.0 + ss2 / nf);
        let t2 = sqrt(xi) / (1.0 + xi) * rho * ss * self.c_mu_lambda * sqrt(1.0 + kappa / xi);
        let infeasible = t1 + t2;
        PhiXStar {
            combined: p_feas * feasible + (1.0 - p_feas) * infeasible,
            infeasible,
        }
    }

    /// Normalized radial progress rate; `phi_x_star_infeas` must come from
    /// [`Self::phi_x_star`] at the same state.
    pub fn phi_r_star(&self, state: &TheoryState, phi_x_star_infeas: f64) -> f64 {
        self.phi_r_star_at(state, phi_x_star_infeas, self.p_feas(state))
    }

    /// As [`Self::phi_r_star`] with the feasibility probability pinned.
    pub fn phi_r_star_at(&self, state: &TheoryState, phi_x_star_infeas: f64, p_feas: f64) -> f64 {
        let nf = self.n as f64;
        let ss2 = state.sigma_star * state.sigma_star;
        let mu = self.mu as f64;
        let feasible = nf * (1.0 - sqrt(1.0 + ss2 / (mu * nf)));
        let contraction = sqrt((1.0 + ss2 / (mu * nf)) / (1.0 + ss2 / nf));
        let infeasible = nf
            * (1.0
                - state.x / (sqrt(self.xi) * state.r)
                    * (1.0 - phi_x_star_infeas / nf)
                    * contraction);
        p_feas * feasible + (1.0 - p_feas) * infeasible
    }

    /// Closed-form approximation of the expected axial position of the
    /// recombined centroid when offspring are predominantly infeasible.
    pub fn expected_q_infeas(&self, state: &TheoryState) -> f64 {
        let xi = self.xi;
        let rd = r_dist_params(state.r, state.sigma_star, self.n);
        let w = xi / (1.0 + xi);
        w * (state.x + rd.r_bar / sqrt(xi))
            - w * sqrt(state.sigma * state.sigma + rd.sigma_r * rd.sigma_r / xi) * self.c_mu_lambda
    }

    /// Progress rate of the squared distance from the cone axis.
    pub fn phi_r2(&self, state: &TheoryState) -> f64 {
        self.phi_r2_at(state, self.p_feas(state))
    }

    /// As [`Self::phi_r2`] with the feasibility probability pinned.
    pub fn phi_r2_at(&self, state: &TheoryState, p_feas: f64) -> f64 {
        let nf = self.n as f64;
        let mu = self.mu as f64;
        let ss2 = state.sigma_star * state.sigma_star;
        let r2 = state.r * state.r;
        let feasible = r2 + state.sigma * state.sigma * (nf - 1.0) / mu;
        let q_inf = self.expected_q_infeas(state);
        let infeasible = q_inf * q_inf / self.xi * (1.0 + ss2 / (mu * nf)) / (1.0 + ss2 / nf);
        r2 - (p_feas * feasible + (1.0 - p_feas) * infeasible)
    }
}

/// Expected projection of the recombined mutation vector onto the parental
/// radial direction, recovered from the squared-distance progress rate.
pub fn expected_z_odot(
    phi_r2: f64,
    sigma_star: f64,
    r: f64,
    n: usize,
    mu: u32,
) -> Result<f64, TheoryError> {
    if sigma_star <= 0.0 {
        return Err(TheoryError::Domain(
            "expected_z_odot requires sigma_star > 0",
        ));
    }
    if r <= 0.0 {
        return Err(TheoryError::Domain("expected_z_odot requires r > 0"));
    }
    Ok(-(n as f64) * phi_r2 / (2.0 * sigma_star * r * r) - sigma_star / (2.0 * mu as f64))
}

impl TheoryState {
    /// Builds a state from `(x, r, sigma)`, deriving the normalized mutation
    /// strength for dimension `n`.
    pub fn new(x: f64, r: f64, sigma: f64, n: usize) -> Result<Self, TheoryError> {
        if !r.is_finite() || r <= 0.0 {
            return Err(TheoryError::Domain("r must be positive"));
        }
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(TheoryError::Domain("sigma must be positive"));
        }
        Ok(Self {
            x,
            r,
            sigma,
            sigma_star: n as f64 * sigma / r,
        })
    }

    /// Builds an on-boundary state (`x = sqrt(xi) * r`) from the normalized
    /// mutation strength.
    pub fn on_boundary(cone: &ConeSpec, r: f64, sigma_star: f64) -> Result<Self, TheoryError> {
        let sigma = sigma_star * r / cone.n() as f64;
        Self::new(cone.sqrt_xi() * r, r, sigma, cone.n())
    }
}
