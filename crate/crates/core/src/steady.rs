//! Steady state of the mean-value iteration: the fixed-point equation for
//! the normalized mutation strength, its bracketed-bisection solver, and the
//! closed-form approximation regimes, plus the derived stationary
//! quantities (progress, boundary-distance ratio, path statistics).
//!
//! Where a full expression and an asymptotically simplified one both exist,
//! the solver chain defaults to the full (finite-`N`) form and the
//! simplified forms are exposed as their own regimes, so the gap between
//! them stays measurable.

use crate::math::sqrt;
use crate::mean_value::CsaParams;
use crate::theory::TheoryParams;

/// The steady-state formula families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SsRegime {
    /// Bracketed-bisection root of the fixed-point residual.
    Numeric,
    /// Closed form under `c = O(1/sqrt(N))`, `N -> infinity`.
    SqrtN,
    /// The same with `c D = 1` inserted and `xi/sqrt(N)` terms dropped.
    SqrtNSimplified,
    /// Large-`xi` limit: `2 mu c_{mu/mu,lambda}`.
    SqrtNLargeXi,
    /// Closed form under `c = O(1/N)` (requires `c D = 1`, `c N ~ 1`).
    OneOverN,
    /// Its large-`xi` scaling `sqrt(xi) sqrt(2 mu (2 mu c^2 - 1))`.
    OneOverNLargeXi,
    /// Quadratic obtained by dropping the inverse term of the quartic.
    OneOverNNeglectInverse,
    /// Quadratic Taylor expansion of the quartic around the
    /// [`SsRegime::OneOverN`] value.
    OneOverNTaylorQuadratic,
}

impl SsRegime {
    /// All regimes, in presentation order.
    pub const ALL: [SsRegime; 8] = [
        SsRegime::Numeric,
        SsRegime::SqrtN,
        SsRegime::SqrtNSimplified,
        SsRegime::SqrtNLargeXi,
        SsRegime::OneOverN,
        SsRegime::OneOverNLargeXi,
        SsRegime::OneOverNNeglectInverse,
        SsRegime::OneOverNTaylorQuadratic,
    ];

    /// Stable kebab-ish name used by the CLI and reports.
    pub fn name(&self) -> &'static str {
        match self {
            SsRegime::Numeric => "numeric",
            SsRegime::SqrtN => "sqrtN",
            SsRegime::SqrtNSimplified => "sqrtN-simplified",
            SsRegime::SqrtNLargeXi => "sqrtN-large-xi",
            SsRegime::OneOverN => "oneOverN",
            SsRegime::OneOverNLargeXi => "oneOverN-large-xi",
            SsRegime::OneOverNNeglectInverse => "oneOverN-neglect-inverse",
            SsRegime::OneOverNTaylorQuadratic => "oneOverN-taylor-quadratic",
        }
    }
}

impl core::str::FromStr for SsRegime {
    type Err = SteadyError;

    fn from_str(s: &str) -> Result<Self, SteadyError> {
        SsRegime::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or(SteadyError::UnknownRegime)
    }
}

impl core::fmt::Display for SsRegime {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// The steady-state bundle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyState {
    pub sigma_ss_star: f64,
    /// Stationary normalized progress (axial = radial).
    pub phi_ss_star: f64,
    /// Boundary-distance ratio `(x / (sqrt(xi) r))_ss >= 1`.
    pub ratio_ss: f64,
    pub s1_ss: f64,
    pub s_odot_ss: f64,
    pub s_norm_sq_ss: f64,
    pub regime: SsRegime,
}

/// Stationary path statistics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathSs {
    pub s1_ss: f64,
    pub s_odot_ss: f64,
    pub s_norm_sq_ss: f64,
}

/// Errors from the steady-state computations.
#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
pub enum SteadyError {
    #[error(
        "no sign change of the residual on [{lo}, {hi}] (residuals {res_lo} and {res_hi}); \
         scanned {scanned} interior points without finding a bracket"
    )]
    NoRoot {
        lo: f64,
        hi: f64,
        res_lo: f64,
        res_hi: f64,
        scanned: u32,
    },
    #[error("regime has no real positive root here (discriminant {discriminant})")]
    NoRealRoot { discriminant: f64 },
    #[error("degenerate denominator in the stationary path expression")]
    SingularDenominator,
    #[error("invalid parameters: {0}")]
    BadParams(&'static str),
    #[error("unknown regime name")]
    UnknownRegime,
}

/// Stationary boundary-distance ratio
/// `(x / (sqrt(xi) r))_ss = sqrt((1 + s^2/N) / (1 + s^2/(mu N)))`.
pub fn ss_ratio(sigma_ss: f64, mu: u32, n: usize) -> f64 {
    1.0 / sqrt(q_factor(sigma_ss, mu, n))
}

/// `(1 + s^2/(mu N)) / (1 + s^2/N)`, the recurring selection-contraction
/// factor.
fn q_factor(sigma: f64, mu: u32, n: usize) -> f64 {
    let nf = n as f64;
    let s2 = sigma * sigma;
    (1.0 + s2 / (mu as f64 * nf)) / (1.0 + s2 / nf)
}

/// Stationary normalized progress, asymptotic (`N -> infinity`) form:
/// `-s^2 / (2 mu (1+xi)) + s c / sqrt(1+xi)`.
pub fn phi_star_ss(sigma_ss: f64, params: &TheoryParams) -> f64 {
    let xi = params.xi();
    -sigma_ss * sigma_ss / ((1.0 + xi) * 2.0 * params.mu() as f64)
        + sigma_ss * params.c_mu_lambda() / sqrt(1.0 + xi)
}

/// Stationary normalized progress, pre-Taylor finite-`N` form (kept for
/// comparison with the asymptotic default).
pub fn phi_star_ss_finite_n(sigma_ss: f64, params: &TheoryParams) -> f64 {
    let nf = params.n() as f64;
    let xi = params.xi();
    let s2 = sigma_ss * sigma_ss;
    nf / (1.0 + xi) * (1.0 - sqrt(1.0 + s2 / (params.mu() as f64 * nf)))
        + sigma_ss * params.c_mu_lambda() / sqrt(1.0 + xi)
            * sqrt(q_factor(sigma_ss, params.mu(), params.n()))
}

/// Steady-state progress for a given mutation strength; delegates to the
/// asymptotic stationary form.
pub fn phi_ss_from_sigma(sigma_ss: f64, params: &TheoryParams) -> f64 {
    phi_star_ss(sigma_ss, params)
}

/// The stationary helper terms entering the path and residual expressions.
struct SsTerms {
    /// `(-N phi_x / (sigma* r))_ss`
    x_term: f64,
    /// `(-N phi_{r^2} / (2 sigma* r^2))_ss`, in its expanded
    /// cancellation-free form `-phi/s + phi^2 / (2 s N)`.
    r2_term: f64,
}

fn ss_terms(sigma: f64, phi: f64, params: &TheoryParams) -> SsTerms {
    let xi = params.xi();
    let x_term = -sqrt(xi / q_factor(sigma, params.mu(), params.n())) * phi / sigma;
    let r2_term = -phi / sigma + phi * phi / (2.0 * sigma * params.n() as f64);
    SsTerms { x_term, r2_term }
}

/// Stationary path statistics at a given mutation strength (full,
/// unsimplified forms).
pub fn path_ss(
    sigma_ss: f64,
    params: &TheoryParams,
    csa: CsaParams,
) -> Result<PathSs, SteadyError> {
    if !sigma_ss.is_finite() || sigma_ss <= 0.0 {
        return Err(SteadyError::BadParams("sigma_ss must be positive"));
    }
    let phi = phi_star_ss_finite_n(sigma_ss, params);
    path_ss_with_phi(sigma_ss, phi, params, csa)
}

fn path_ss_with_phi(
    sigma: f64,
    phi: f64,
    params: &TheoryParams,
    csa: CsaParams,
) -> Result<PathSs, SteadyError> {
    let nf = params.n() as f64;
    let mu = params.mu() as f64;
    let (c, _) = (csa.c, csa.d);
    let terms = ss_terms(sigma, phi, params);
    let gain = sqrt(mu * c * (2.0 - c));
    let s1_ss = gain / c * terms.x_term;
    let half = sigma / (2.0 * mu);
    let denom = c - (1.0 - c) * (sigma / nf) * (terms.r2_term - half);
    if denom.abs() < 1e-14 {
        return Err(SteadyError::SingularDenominator);
    }
    let s_odot_ss = gain * (terms.r2_term + half) / denom;
    let s_norm_sq_ss = nf
        - (2.0 * (1.0 - c) * gain / (c * c - 2.0 * c))
            * (s1_ss * terms.x_term + s_odot_ss * (terms.r2_term - half));
    Ok(PathSs {
        s1_ss,
        s_odot_ss,
        s_norm_sq_ss,
    })
}

/// Left-minus-right of the stationary mutation-strength equation:
/// `s (r2_term - s/2mu) + s^2/2mu - (||s||^2_ss - N) / 2D`.
pub fn sigma_ss_residual(sigma: f64, params: &TheoryParams, csa: CsaParams) -> f64 {
    let phi = phi_star_ss_finite_n(sigma, params);
    let terms = ss_terms(sigma, phi, params);
    let mu = params.mu() as f64;
    let path = match path_ss_with_phi(sigma, phi, params, csa) {
        Ok(p) => p,
        Err(_) => return f64::NAN,
    };
    sigma * (terms.r2_term - sigma / (2.0 * mu)) + sigma * sigma / (2.0 * mu)
        - (path.s_norm_sq_ss - params.n() as f64) / (2.0 * csa.d)
}

/// Lower end of the bisection bracket; excludes the spurious root at zero.
const BRACKET_LO: f64 = 1e-3;

/// Upper end of the bisection bracket: dominates every closed-form regime.
fn bracket_hi(params: &TheoryParams) -> f64 {
    10.0 * params.mu() as f64 * sqrt(1.0 + params.xi()) * params.c_mu_lambda()
}

/// Solves the stationary mutation-strength equation by bracketed bisection
/// (to 1e-8 relative and beyond) and fills the full steady-state bundle.
pub fn solve_sigma_ss_numeric(
    params: &TheoryParams,
    csa: CsaParams,
) -> Result<SteadyState, SteadyError> {
    if params.mu() >= params.lambda() {
        return Err(SteadyError::BadParams("requires mu < lambda"));
    }
    if !csa.c.is_finite() || csa.c <= 0.0 || csa.c >= 1.0 || !csa.d.is_finite() || csa.d <= 0.0 {
        return Err(SteadyError::BadParams("requires 0 < c < 1 and D > 0"));
    }
    let root = bisect_residual(params, csa, BRACKET_LO, bracket_hi(params))?;
    steady_state_at(root, SsRegime::Numeric, params, csa)
}

fn bisect_residual(
    params: &TheoryParams,
    csa: CsaParams,
    lo: f64,
    hi: f64,
) -> Result<f64, SteadyError> {
    let f = |s: f64| sigma_ss_residual(s, params, csa);
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        // scan log-spaced interior points for a bracket before giving up
        const SCAN: u32 = 64;
        let ratio = b / a;
        let mut prev = (a, fa);
        let mut found = None;
        for i in 1..=SCAN {
            let s = a * libm::pow(ratio, i as f64 / SCAN as f64);
            let fs = f(s);
            if prev.1 * fs <= 0.0 && fs.is_finite() {
                found = Some((prev.0, s, prev.1));
                break;
            }
            prev = (s, fs);
        }
        match found {
            Some((na, nb, nfa)) => {
                a = na;
                b = nb;
                fa = nfa;
            }
            None => {
                return Err(SteadyError::NoRoot {
                    lo,
                    hi,
                    res_lo: fa,
                    res_hi: fb,
                    scanned: SCAN,
                })
            }
        }
    }
    // bisection: ~70 halvings take the relative width below 1e-12
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (b - a) <= 1e-13 * mid {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fa * fm < 0.0 {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
    }
    Ok(0.5 * (a + b))
}

fn steady_state_at(
    sigma: f64,
    regime: SsRegime,
    params: &TheoryParams,
    csa: CsaParams,
) -> Result<SteadyState, SteadyError> {
    let path = path_ss(sigma, params, csa)?;
    Ok(SteadyState {
        sigma_ss_star: sigma,
        phi_ss_star: phi_star_ss(sigma, params),
        ratio_ss: ss_ratio(sigma, params.mu(), params.n()),
        s1_ss: path.s1_ss,
        s_odot_ss: path.s_odot_ss,
        s_norm_sq_ss: path.s_norm_sq_ss,
        regime,
    })
}

/// Evaluates the selected regime's closed-form expression for the stationary
/// normalized mutation strength ([`SsRegime::Numeric`] delegates to the
/// bisection solver).
pub fn sigma_ss_closed(
    params: &TheoryParams,
    csa: CsaParams,
    regime: SsRegime,
) -> Result<f64, SteadyError> {
    let mu = params.mu() as f64;
    let xi = params.xi();
    let cml = params.c_mu_lambda();
    let (c, d) = (csa.c, csa.d);
    match regime {
        SsRegime::Numeric => Ok(solve_sigma_ss_numeric(params, csa)?.sigma_ss_star),
        SsRegime::SqrtN => {
            let disc = c * c * (d * d + xi + 1.0) - 2.0 * c * (xi + 1.0) + xi + 1.0;
            if disc < 0.0 {
                return Err(SteadyError::NoRealRoot { discriminant: disc });
            }
            let den = 2.0 * c * d - c * xi + xi;
            if den.abs() < 1e-12 {
                return Err(SteadyError::BadParams(
                    "degenerate denominator in SqrtN form",
                ));
            }
            Ok(2.0 * mu * sqrt(xi + 1.0) * cml * ((c * d + c - 1.0) + sqrt(disc)) / den)
        }
        SsRegime::SqrtNSimplified => Ok(2.0 * mu * sqrt(xi + 1.0) * cml / sqrt(xi + 2.0)),
        SsRegime::SqrtNLargeXi => Ok(2.0 * mu * cml),
        SsRegime::OneOverN => {
            let excess = 2.0 * mu * cml * cml - 1.0;
            if excess <= 0.0 {
                return Err(SteadyError::NoRealRoot {
                    discriminant: excess,
                });
            }
            Ok(sqrt(2.0 * mu * xi * excess * (1.0 + xi) / (2.0 + xi)))
        }
        SsRegime::OneOverNLargeXi => {
            let excess = 2.0 * mu * cml * cml - 1.0;
            if excess <= 0.0 {
                return Err(SteadyError::NoRealRoot {
                    discriminant: excess,
                });
            }
            Ok(sqrt(xi) * sqrt(2.0 * mu * excess))
        }
        SsRegime::OneOverNNeglectInverse => {
            let (a, b, c0) = quartic_coefficients(params);
            let disc = b * b - 4.0 * a * c0;
            if disc < 0.0 {
                return Err(SteadyError::NoRealRoot { discriminant: disc });
            }
            Ok((-b + sqrt(disc)) / (2.0 * a))
        }
        SsRegime::OneOverNTaylorQuadratic => {
            // expand the inverse term around the OneOverN root
            let at = sigma_ss_closed(params, csa, SsRegime::OneOverN)?;
            let (a, b, c0) = quartic_coefficients(params);
            let e = mu * cml / sqrt(1.0 + xi);
            let q2 = a + e / (at * at * at);
            let q1 = b - 3.0 * e / (at * at);
            let q0 = c0 + 3.0 * e / at;
            let disc = q1 * q1 - 4.0 * q2 * q0;
            if disc < 0.0 {
                return Err(SteadyError::NoRealRoot { discriminant: disc });
            }
            let roots = [
                (-q1 + sqrt(disc)) / (2.0 * q2),
                (-q1 - sqrt(disc)) / (2.0 * q2),
            ];
            roots
                .into_iter()
                .filter(|s| *s > 0.0)
                .min_by(|p, q| (p - at).abs().total_cmp(&(q - at).abs()))
                .ok_or(SteadyError::NoRealRoot { discriminant: disc })
        }
    }
}

/// Quadratic/linear/constant coefficients shared by the `c = O(1/N)`
/// regime reductions (the inverse term `mu c / sqrt(1+xi) / s` is handled
/// per regime).
fn quartic_coefficients(params: &TheoryParams) -> (f64, f64, f64) {
    let mu = params.mu() as f64;
    let xi = params.xi();
    let cml = params.c_mu_lambda();
    let a = (2.0 + xi) / ((1.0 + xi) * (1.0 + xi) * 4.0 * mu);
    let b = -cml / (sqrt(1.0 + xi) * (1.0 + xi));
    let c0 = (xi - 2.0 * mu * xi * cml * cml) / (2.0 * (1.0 + xi));
    (a, b, c0)
}

/// Full steady-state bundle for any regime.
pub fn steady_state_for(
    params: &TheoryParams,
    csa: CsaParams,
    regime: SsRegime,
) -> Result<SteadyState, SteadyError> {
    match regime {
        SsRegime::Numeric => solve_sigma_ss_numeric(params, csa),
        _ => {
            let sigma = sigma_ss_closed(params, csa, regime)?;
            steady_state_at(sigma, regime, params, csa)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::ConeSpec;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    fn assert_rel(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol * b.abs(), "{a} vs {b} (rel)");
    }

    fn params(n: usize, xi: f64) -> TheoryParams {
        TheoryParams::new(&ConeSpec::new(n, xi).unwrap(), 3, 10).unwrap()
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(ss_ratio(5.0, 1, 400), 1.0);
        assert_eq!(ss_ratio(0.0, 3, 400), 1.0);
        assert_close(ss_ratio(6.39, 3, 400), 1.03238, 2e-5);
        // mu >= 1 forces the radicand <= 1, so the ratio is always >= 1
        for mu in 1..6 {
            for s in [0.0, 1.0, 6.0, 30.0] {
                assert!(ss_ratio(s, mu, 1000) >= 1.0);
            }
        }
    }

    #[test]
    fn phi_star_ss_examples() {
        let p = params(400, 10.0);
        assert_eq!(phi_star_ss(0.0, &p), 0.0);
        // -6.39^2/66 + 6.39 c / sqrt(11)
        let v = phi_star_ss(6.39, &p);
        let direct = -6.39 * 6.39 / 66.0 + 6.39 * p.c_mu_lambda() / (11.0f64).sqrt();
        assert_close(v, direct, 1e-14);
        assert_close(v, 1.433, 2e-3);
    }

    #[test]
    fn phi_at_simplified_sigma_matches_the_projected_form() {
        // algebraic identity: phi(sigma_98) = 2 mu c^2/sqrt(xi+2) - 2 mu c^2/(xi+2)
        for xi in [1.0, 10.0, 100.0, 1e4] {
            let p = params(1000, xi);
            let sigma = sigma_ss_closed(
                &p,
                CsaParams { c: 0.03, d: 33.0 },
                SsRegime::SqrtNSimplified,
            )
            .unwrap();
            let lhs = phi_ss_from_sigma(sigma, &p);
            let c2 = 2.0 * 3.0 * p.c_mu_lambda() * p.c_mu_lambda();
            let rhs = c2 / (xi + 2.0f64).sqrt() - c2 / (xi + 2.0);
            assert_close(lhs, rhs, 1e-10);
        }
    }

    #[test]
    fn phi_decreases_toward_zero_in_the_sqrt_n_regime() {
        let csa = CsaParams { c: 0.01, d: 100.0 };
        let mut prev = f64::INFINITY;
        for xi in [10.0, 100.0, 1000.0, 1e5] {
            let p = params(10_000, xi);
            let sigma = sigma_ss_closed(&p, csa, SsRegime::SqrtNSimplified).unwrap();
            let phi = phi_ss_from_sigma(sigma, &p);
            assert!(phi > 0.0 && phi < prev);
            prev = phi;
        }
        assert!(prev < 0.1);
    }

    #[test]
    fn closed_form_reference_values() {
        let p = params(1000, 10.0);
        let csa = CsaParams {
            c: 1.0 / (1000.0f64).sqrt(),
            d: (1000.0f64).sqrt(),
        };
        assert_close(
            sigma_ss_closed(&p, csa, SsRegime::SqrtNLargeXi).unwrap(),
            6.392,
            2e-3,
        );
        assert_close(
            sigma_ss_closed(&p, csa, SsRegime::SqrtNSimplified).unwrap(),
            6.118,
            4e-3,
        );
        assert_close(
            sigma_ss_closed(&p, csa, SsRegime::SqrtN).unwrap(),
            6.1613,
            1e-3,
        );
        let one_over_n = CsaParams { c: 1e-3, d: 1e3 };
        assert_close(
            sigma_ss_closed(&p, one_over_n, SsRegime::OneOverN).unwrap(),
            17.88,
            2e-2,
        );
    }

    #[test]
    fn limit_chain_across_the_sqrt_n_regimes() {
        // SqrtN (with c = 1/sqrt(N), D = sqrt(N)) approaches the simplified
        // form as N grows, which in turn approaches 2 mu c at large xi
        let p = params(1000, 10.0);
        let n_large = 1e8f64;
        let csa = CsaParams {
            c: 1.0 / n_large.sqrt(),
            d: n_large.sqrt(),
        };
        let full = sigma_ss_closed(&p, csa, SsRegime::SqrtN).unwrap();
        let simplified = sigma_ss_closed(&p, csa, SsRegime::SqrtNSimplified).unwrap();
        assert_rel(full, simplified, 0.01);
        let p_wide = params(1000, 1e4);
        let s = sigma_ss_closed(&p_wide, csa, SsRegime::SqrtNSimplified).unwrap();
        let limit = sigma_ss_closed(&p_wide, csa, SsRegime::SqrtNLargeXi).unwrap();
        assert_rel(s, limit, 0.01);
    }

    #[test]
    fn phi_is_concave_with_a_unique_interior_maximizer() {
        let p = params(1000, 10.0);
        assert_eq!(phi_star_ss(0.0, &p), 0.0);
        // the asymptotic stationary progress is a downward parabola with
        // its peak at sigma = mu c sqrt(1+xi)
        let peak = 3.0 * p.c_mu_lambda() * (11.0f64).sqrt();
        let at_peak = phi_star_ss(peak, &p);
        for delta in [0.05, 0.5, 2.0] {
            assert!(phi_star_ss(peak - delta, &p) < at_peak);
            assert!(phi_star_ss(peak + delta, &p) < at_peak);
        }
        // concavity: midpoint value above the chord on a coarse grid
        for (a, b) in [(0.1, 4.0), (2.0, 12.0), (5.0, 20.0)] {
            let mid = phi_star_ss(0.5 * (a + b), &p);
            let chord = 0.5 * (phi_star_ss(a, &p) + phi_star_ss(b, &p));
            assert!(mid > chord);
        }
    }

    #[test]
    fn one_over_n_scaling_limit() {
        // sigma(OneOverN)/sqrt(xi) converges to sqrt(2 mu (2 mu c^2 - 1))
        let csa = CsaParams { c: 1e-3, d: 1e3 };
        let limit = {
            let p = params(1000, 10.0);
            (2.0 * 3.0 * (2.0 * 3.0 * p.c_mu_lambda() * p.c_mu_lambda() - 1.0)).sqrt()
        };
        let p = params(1000, 1000.0);
        let v = sigma_ss_closed(&p, csa, SsRegime::OneOverN).unwrap() / (1000.0f64).sqrt();
        assert_rel(v, limit, 0.02);
        let large = sigma_ss_closed(&p, csa, SsRegime::OneOverNLargeXi).unwrap();
        assert_close(large / (1000.0f64).sqrt(), limit, 1e-12);
    }

    #[test]
    fn one_over_n_regimes_signal_their_validity_boundary() {
        // 2 mu c^2 < 1 for (1, 2): no real positive root
        let cone = ConeSpec::new(100, 10.0).unwrap();
        let p = TheoryParams::new(&cone, 1, 2).unwrap();
        let csa = CsaParams { c: 0.01, d: 100.0 };
        for regime in [SsRegime::OneOverN, SsRegime::OneOverNLargeXi] {
            assert!(matches!(
                sigma_ss_closed(&p, csa, regime),
                Err(SteadyError::NoRealRoot { .. })
            ));
        }
    }

    #[test]
    fn quadratic_one_over_n_variants_stay_near_the_reference_form() {
        let csa = CsaParams { c: 1e-3, d: 1e3 };
        for xi in [10.0, 31.6, 100.0] {
            let p = params(1000, xi);
            let base = sigma_ss_closed(&p, csa, SsRegime::OneOverN).unwrap();
            let ni = sigma_ss_closed(&p, csa, SsRegime::OneOverNNeglectInverse).unwrap();
            let tq = sigma_ss_closed(&p, csa, SsRegime::OneOverNTaylorQuadratic).unwrap();
            assert_rel(ni, base, 0.15);
            assert_rel(tq, base, 0.15);
        }
    }

    #[test]
    fn residual_root_and_stability() {
        let p = params(400, 10.0);
        let csa = CsaParams { c: 0.05, d: 20.0 };
        let ss = solve_sigma_ss_numeric(&p, csa).unwrap();
        assert!(sigma_ss_residual(ss.sigma_ss_star, &p, csa).abs() < 1e-8);
        // sign change across the bracket
        let lo = sigma_ss_residual(BRACKET_LO, &p, csa);
        let hi = sigma_ss_residual(bracket_hi(&p), &p, csa);
        assert!(lo * hi < 0.0, "{lo} {hi}");
        // insensitive to bracket endpoints around the root
        let refined =
            bisect_residual(&p, csa, 0.1 * ss.sigma_ss_star, 10.0 * ss.sigma_ss_star).unwrap();
        assert_rel(refined, ss.sigma_ss_star, 1e-6);
        // frozen reference for this config
        assert_close(ss.sigma_ss_star, 7.1843, 1e-3);
    }

    #[test]
    fn numeric_approaches_two_mu_c_at_large_xi() {
        let p = params(10_000, 1000.0);
        let csa = CsaParams { c: 0.01, d: 100.0 };
        let ss = solve_sigma_ss_numeric(&p, csa).unwrap();
        assert_rel(ss.sigma_ss_star, 2.0 * 3.0 * p.c_mu_lambda(), 0.05);
        // and agrees with the SqrtN closed form within 5% at xi = 10
        let p10 = params(10_000, 10.0);
        let ss10 = solve_sigma_ss_numeric(&p10, csa).unwrap();
        let closed = sigma_ss_closed(&p10, csa, SsRegime::SqrtN).unwrap();
        assert_rel(closed, ss10.sigma_ss_star, 0.05);
    }

    #[test]
    fn path_ss_limits() {
        let p = params(400, 10.0);
        let csa = CsaParams { c: 0.05, d: 20.0 };
        // sigma -> 0+: phi/sigma -> c_ml/sqrt(1+xi), so the stationary path
        // tends to the selection-gain constants, not to zero
        let path = path_ss(1e-8, &p, csa).unwrap();
        let gain = (3.0f64 * 0.05 * 1.95).sqrt();
        let slope = p.c_mu_lambda() / (11.0f64).sqrt();
        assert_rel(path.s1_ss, -gain / 0.05 * (10.0f64).sqrt() * slope, 1e-4);
        assert_rel(path.s_odot_ss, -gain / 0.05 * slope, 1e-3);
        // s1 is proportional to phi: a zero-progress sigma nulls it
        // (phi(s) = 0 at s = 2 mu c sqrt(1+xi) ... use the finite-N zero)
        let mut lo = 1.0;
        let mut hi = 60.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi_star_ss_finite_n(mid, &p) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let zero_phi = 0.5 * (lo + hi);
        let path = path_ss(zero_phi, &p, csa).unwrap();
        assert!(path.s1_ss.abs() < 1e-6);
    }

    #[test]
    fn regime_names_round_trip() {
        for regime in SsRegime::ALL {
            let parsed: SsRegime = regime.name().parse().unwrap();
            assert_eq!(parsed, regime);
        }
        assert!("bogus".parse::<SsRegime>().is_err());
    }
}
