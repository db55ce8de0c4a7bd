//! The stochastic `(mu/mu_I, lambda)`-CSA-ES with repair by projection,
//! fully instrumented, plus one-generation Monte Carlo estimators of the
//! local progress measures and batch-averaging utilities.
//!
//! Randomness comes from a ChaCha8 stream generator with ziggurat normal
//! sampling; every run and every trial is seeded, so results are
//! reproducible bit for bit. Independent runs/trials carry independent
//! seeds and can be evaluated in any order (or in parallel) as long as the
//! aggregation consumes them in index order.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cone::ConeSpec;
use crate::math::{ceil, exp, ln, sqrt};

/// Name of the random stream and sampling scheme, recorded in output
/// metadata for reproducibility.
pub const GENERATOR: &str = "chacha8+ziggurat";

/// Bounds outside which a run is declared divergent and aborted.
const SIGMA_GUARD: (f64, f64) = (1e-300, 1e300);

/// Full ES parameterization.
#[derive(Clone, Debug, PartialEq)]
pub struct EsConfig {
    pub mu: u32,
    pub lambda: u32,
    /// Cumulation parameter, in `(0, 1)`.
    pub c: f64,
    /// Damping factor `D > 0`.
    pub d: f64,
    /// Initial mutation strength.
    pub sigma0: f64,
    /// Initial distance along the cone axis.
    pub x0: f64,
    /// Initial distance from the cone axis.
    pub r0: f64,
    /// Generation budget.
    pub max_gen: usize,
    pub seed: u64,
}

impl EsConfig {
    /// Default interior start: one tenth of the boundary distance.
    pub fn default_r0(cone: &ConeSpec, x0: f64) -> f64 {
        x0 / (10.0 * cone.sqrt_xi())
    }

    /// Validates every invariant against the cone the config will run on.
    pub fn validate(&self, cone: &ConeSpec) -> Result<(), EsError> {
        if self.mu < 1 || self.mu >= self.lambda {
            return Err(EsError::Config("requires 1 <= mu < lambda"));
        }
        if !self.c.is_finite() || self.c <= 0.0 || self.c >= 1.0 {
            return Err(EsError::Config("cumulation parameter must be in (0, 1)"));
        }
        if !self.d.is_finite() || self.d <= 0.0 {
            return Err(EsError::Config("damping D must be positive"));
        }
        if !self.sigma0.is_finite() || self.sigma0 <= 0.0 {
            return Err(EsError::Config("sigma0 must be positive"));
        }
        if !self.x0.is_finite() || self.x0 <= 0.0 || !self.r0.is_finite() || self.r0 < 0.0 {
            return Err(EsError::Config(
                "initial point must have x0 > 0 and r0 >= 0",
            ));
        }
        let start = cone.embed(self.x0, self.r0);
        if !cone.is_feasible(&start).unwrap_or(false) {
            return Err(EsError::Config("initial point (x0, r0) is infeasible"));
        }
        Ok(())
    }
}

/// Full-dimensional per-generation state of the strategy.
#[derive(Clone, Debug, PartialEq)]
pub struct StrategyState {
    /// Parental centroid.
    pub x_vec: Vec<f64>,
    /// Cumulative path.
    pub s_vec: Vec<f64>,
    pub sigma: f64,
    pub gen: usize,
}

/// Instrumented aggregates of one generation.
///
/// Position fields describe the state at the *start* of the generation;
/// `q_mean`/`qr_mean` are the axis/distance coordinates of the recombined
/// centroid produced *during* it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenerationSample {
    pub gen: usize,
    pub x: f64,
    pub r: f64,
    pub sigma: f64,
    /// `N sigma / r`; NaN sentinel when `r = 0`.
    pub sigma_star: f64,
    pub s1: f64,
    /// Path component along the parental radial direction; NaN when `r = 0`.
    pub s_odot: f64,
    pub s_norm_sq: f64,
    pub q_mean: f64,
    pub qr_mean: f64,
    /// Fraction of the `lambda` offspring that needed no repair.
    pub feasible_fraction: f64,
}

/// Why a run stopped before its generation budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Divergence {
    SigmaOutOfRange,
    NonFiniteCoordinate,
}

/// An instrumented run (or an average of runs).
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicsSeries {
    pub cone: ConeSpec,
    pub config: EsConfig,
    /// Seeds of the contributing runs.
    pub seeds: Vec<u64>,
    pub samples: Vec<GenerationSample>,
    /// Set when the run hit the divergence guard; carries the generation.
    pub diverged: Option<(usize, Divergence)>,
    /// True when averaging had to truncate runs to a common length.
    pub truncated: bool,
}

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

/// One-generation Monte Carlo estimates of the local progress measures.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalMeasures {
    pub trials: u64,
    pub phi_x: Estimate,
    pub phi_x_star: Estimate,
    pub phi_r: Estimate,
    pub phi_r_star: Estimate,
    pub phi_r2: Estimate,
    pub p_feas_hat: Estimate,
    pub z_odot_hat: Estimate,
}

/// Raw outcome of a single one-generation trial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialOutcome {
    /// Axis coordinate of the recombined centroid.
    pub q: f64,
    /// Distance of the recombined centroid from the axis.
    pub qr: f64,
    /// Radial component of the recombined mutation vector.
    pub z_odot: f64,
    /// Offspring that needed no repair, out of `lambda`.
    pub feasible: u32,
}

/// Errors from the runner and estimators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EsError {
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error("vectors must have equal length (got {0} and {1})")]
    Length(usize, usize),
    #[error("parental distance from the axis is zero; s_odot is undefined")]
    DegenerateRadius,
    #[error("invalid argument: {0}")]
    Argument(&'static str),
}

/// Path update: `(1 - c) s + sqrt(mu c (2 - c)) <z>`.
pub fn update_path(s: &[f64], c: f64, mu: u32, z_centroid: &[f64]) -> Result<Vec<f64>, EsError> {
    if s.len() != z_centroid.len() {
        return Err(EsError::Length(s.len(), z_centroid.len()));
    }
    let gain = sqrt(mu as f64 * c * (2.0 - c));
    Ok(s.iter()
        .zip(z_centroid)
        .map(|(si, zi)| (1.0 - c) * si + gain * zi)
        .collect())
}

/// Mutation-strength update: `sigma * exp((||s||^2 - N) / (2 D N))`.
pub fn update_sigma(sigma: f64, s_next_norm_sq: f64, n: usize, d: f64) -> f64 {
    sigma * exp((s_next_norm_sq - n as f64) / (2.0 * d * n as f64))
}

/// Splits the path into its axial component and its component along the
/// parental radial direction: `s_1 = s[0]`,
/// `s_odot = (1/r) sum_{k>=2} x_k s_k`.
pub fn decompose_path(x_vec: &[f64], s_vec: &[f64]) -> Result<(f64, f64), EsError> {
    if x_vec.len() != s_vec.len() {
        return Err(EsError::Length(x_vec.len(), s_vec.len()));
    }
    let r = sqrt(x_vec[1..].iter().map(|v| v * v).sum());
    if r == 0.0 {
        return Err(EsError::DegenerateRadius);
    }
    let dot: f64 = x_vec[1..].iter().zip(&s_vec[1..]).map(|(x, s)| x * s).sum();
    Ok((s_vec[0], dot / r))
}

/// Seed for run `run_index` of a batch rooted at `base`.
pub fn run_seed(base: u64, run_index: u64) -> u64 {
    base.wrapping_add(run_index)
}

/// Seed for trial `trial_index` of a one-generation experiment rooted at
/// `base`. Mixed so that experiments rooted at adjacent base seeds do not
/// share trial streams.
pub fn trial_seed(base: u64, trial_index: u64) -> u64 {
    splitmix64(base ^ trial_index.wrapping_mul(0xA24B_AED4_963E_E407))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Scratch buffers for a generation, reusable across generations and trials.
#[derive(Clone, Debug)]
pub(crate) struct GenWorkspace {
    /// `lambda` offspring, row-major.
    offspring: Vec<f64>,
    fitness: Vec<f64>,
    order: Vec<u32>,
    centroid: Vec<f64>,
}

impl GenWorkspace {
    pub(crate) fn new(n: usize, lambda: u32) -> Self {
        Self {
            offspring: vec![0.0; n * lambda as usize],
            fitness: vec![0.0; lambda as usize],
            order: vec![0; lambda as usize],
            centroid: vec![0.0; n],
        }
    }
}

/// Samples one generation from the parent `x_vec`: mutation, repair by
/// projection (with back-calculated mutation vectors), ranking by the first
/// coordinate, and recombination of the `mu` best. Returns the number of
/// offspring that were feasible before repair; the recombined centroid is
/// left in `ws.centroid`.
pub(crate) fn run_generation(
    cone: &ConeSpec,
    x_vec: &[f64],
    sigma: f64,
    mu: u32,
    lambda: u32,
    rng: &mut ChaCha8Rng,
    ws: &mut GenWorkspace,
) -> u32 {
    let n = cone.n();
    let mut feasible = 0u32;
    for l in 0..lambda as usize {
        let row = &mut ws.offspring[l * n..(l + 1) * n];
        for (o, p) in row.iter_mut().zip(x_vec) {
            let z: f64 = rng.sample(StandardNormal);
            *o = p + sigma * z;
        }
        if cone.is_feasible_unchecked(row) {
            feasible += 1;
        } else {
            cone.project_in_place(row);
        }
        ws.fitness[l] = row[0];
    }
    // rank ascending by fitness; ties broken by offspring index
    for (i, slot) in ws.order.iter_mut().enumerate() {
        *slot = i as u32;
    }
    let fitness = &ws.fitness;
    ws.order.sort_unstable_by(|&a, &b| {
        fitness[a as usize]
            .total_cmp(&fitness[b as usize])
            .then(a.cmp(&b))
    });
    ws.centroid.fill(0.0);
    for &l in &ws.order[..mu as usize] {
        let row = &ws.offspring[l as usize * n..(l as usize + 1) * n];
        for (c, o) in ws.centroid.iter_mut().zip(row) {
            *c += o;
        }
    }
    let inv = 1.0 / mu as f64;
    for c in &mut ws.centroid {
        *c *= inv;
    }
    feasible
}

/// Executes a full instrumented run; deterministic given `config.seed`.
pub fn run_es(cone: &ConeSpec, config: &EsConfig) -> Result<DynamicsSeries, EsError> {
    config.validate(cone)?;
    let n = cone.n();
    let nf = n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut ws = GenWorkspace::new(n, config.lambda);
    let mut x_vec = cone.embed(config.x0, config.r0);
    let mut s_vec = vec![0.0; n];
    let mut sigma = config.sigma0;
    let mut samples = Vec::with_capacity(config.max_gen);
    let mut diverged = None;

    for gen in 0..config.max_gen {
        let x = x_vec[0];
        let r = sqrt(x_vec[1..].iter().map(|v| v * v).sum());
        let sigma_star = if r > 0.0 { nf * sigma / r } else { f64::NAN };
        let s1 = s_vec[0];
        let s_odot = if r > 0.0 {
            x_vec[1..]
                .iter()
                .zip(&s_vec[1..])
                .map(|(xk, sk)| xk * sk)
                .sum::<f64>()
                / r
        } else {
            f64::NAN
        };
        let s_norm_sq: f64 = s_vec.iter().map(|v| v * v).sum();

        let feasible = run_generation(
            cone,
            &x_vec,
            sigma,
            config.mu,
            config.lambda,
            &mut rng,
            &mut ws,
        );
        let q_mean = ws.centroid[0];
        let qr_mean = sqrt(ws.centroid[1..].iter().map(|v| v * v).sum());

        samples.push(GenerationSample {
            gen,
            x,
            r,
            sigma,
            sigma_star,
            s1,
            s_odot,
            s_norm_sq,
            q_mean,
            qr_mean,
            feasible_fraction: feasible as f64 / config.lambda as f64,
        });

        // <z> = (centroid - parent) / sigma, exact also for repaired offspring
        let inv_sigma = 1.0 / sigma;
        for (s, (c, p)) in s_vec.iter_mut().zip(ws.centroid.iter().zip(&x_vec)) {
            let z = (c - p) * inv_sigma;
            *s = (1.0 - config.c) * *s + sqrt(config.mu as f64 * config.c * (2.0 - config.c)) * z;
        }
        let s_next_norm_sq: f64 = s_vec.iter().map(|v| v * v).sum();
        sigma = update_sigma(sigma, s_next_norm_sq, n, config.d);
        x_vec.copy_from_slice(&ws.centroid);

        if !(SIGMA_GUARD.0..=SIGMA_GUARD.1).contains(&sigma) {
            diverged = Some((gen, Divergence::SigmaOutOfRange));
            break;
        }
        if x_vec.iter().chain(s_vec.iter()).any(|v| !v.is_finite()) {
            diverged = Some((gen, Divergence::NonFiniteCoordinate));
            break;
        }
    }

    Ok(DynamicsSeries {
        cone: *cone,
        config: config.clone(),
        seeds: vec![config.seed],
        samples,
        diverged,
        truncated: false,
    })
}

/// RNG for trial `index` of the experiment rooted at `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(seed, index))
}

/// One independent single-generation trial from the state
/// `((x, r, 0, ..., 0), sigma)`.
pub fn one_generation_trial(
    cone: &ConeSpec,
    x: f64,
    r: f64,
    sigma: f64,
    mu: u32,
    lambda: u32,
    rng: &mut ChaCha8Rng,
) -> TrialOutcome {
    let mut ws = GenWorkspace::new(cone.n(), lambda);
    one_generation_trial_in(cone, x, r, sigma, mu, lambda, rng, &mut ws)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn one_generation_trial_in(
    cone: &ConeSpec,
    x: f64,
    r: f64,
    sigma: f64,
    mu: u32,
    lambda: u32,
    rng: &mut ChaCha8Rng,
    ws: &mut GenWorkspace,
) -> TrialOutcome {
    let parent = cone.embed(x, r);
    let feasible = run_generation(cone, &parent, sigma, mu, lambda, rng, ws);
    let q = ws.centroid[0];
    let qr = sqrt(ws.centroid[1..].iter().map(|v| v * v).sum());
    // parent tail is r e_2, so the radial path projection is <z>_2
    let z_odot = (ws.centroid[1] - r) / sigma;
    TrialOutcome {
        q,
        qr,
        z_odot,
        feasible,
    }
}

/// Aggregates trial outcomes (in trial order) into the local measures.
pub fn aggregate_trials(
    x: f64,
    r: f64,
    n: usize,
    lambda: u32,
    outcomes: &[TrialOutcome],
) -> Result<LocalMeasures, EsError> {
    if outcomes.is_empty() {
        return Err(EsError::Argument("trials must be >= 1"));
    }
    let t = outcomes.len() as f64;
    let nf = n as f64;
    let mut acc = [MeanVar::default(); 5];
    for o in outcomes {
        acc[0].push(x - o.q);
        acc[1].push(r - o.qr);
        acc[2].push(r * r - o.qr * o.qr);
        acc[3].push(o.feasible as f64 / lambda as f64);
        acc[4].push(o.z_odot);
    }
    let est = |m: &MeanVar, scale: f64| Estimate {
        value: scale * m.mean(),
        se: scale.abs() * sqrt(m.variance() / t),
    };
    Ok(LocalMeasures {
        trials: outcomes.len() as u64,
        phi_x: est(&acc[0], 1.0),
        phi_x_star: est(&acc[0], nf / x),
        phi_r: est(&acc[1], 1.0),
        phi_r_star: est(&acc[1], nf / r),
        phi_r2: est(&acc[2], 1.0),
        p_feas_hat: est(&acc[3], 1.0),
        z_odot_hat: est(&acc[4], 1.0),
    })
}

/// Monte Carlo estimates of the local progress measures from `trials`
/// independent single generations; deterministic given `seed`.
#[allow(clippy::too_many_arguments)]
pub fn one_generation_experiment(
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
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(EsError::Argument("sigma must be positive"));
    }
    if mu < 1 || mu >= lambda {
        return Err(EsError::Config("requires 1 <= mu < lambda"));
    }
    let start = cone.embed(x, r);
    if !cone
        .is_feasible(&start)
        .map_err(|_| EsError::Argument("bad state"))?
    {
        return Err(EsError::Argument("state (x, r) must be feasible"));
    }
    let mut ws = GenWorkspace::new(cone.n(), lambda);
    let outcomes: Vec<TrialOutcome> = (0..trials)
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            one_generation_trial_in(cone, x, r, sigma, mu, lambda, &mut rng, &mut ws)
        })
        .collect();
    aggregate_trials(x, r, cone.n(), lambda, &outcomes)
}

/// Streaming mean/variance accumulator (Welford).
#[derive(Clone, Copy, Debug, Default)]
struct MeanVar {
    count: u64,
    mean: f64,
    m2: f64,
}

impl MeanVar {
    fn push(&mut self, v: f64) {
        self.count += 1;
        let delta = v - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (v - self.mean);
    }

    fn mean(&self) -> f64 {
        self.mean
    }

    fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }
}

/// Per-generation arithmetic mean of a batch of runs.
///
/// Runs must share the cone and the config apart from seeds; series are
/// truncated to the shortest length, and the output records whether
/// truncation happened.
pub fn average_series(runs: &[DynamicsSeries]) -> Result<DynamicsSeries, EsError> {
    let first = runs
        .first()
        .ok_or(EsError::Argument("no runs to average"))?;
    for run in &runs[1..] {
        let mut a = run.config.clone();
        let mut b = first.config.clone();
        a.seed = 0;
        b.seed = 0;
        if run.cone != first.cone || a != b {
            return Err(EsError::Argument("runs do not share a config shape"));
        }
    }
    let len = runs.iter().map(|r| r.samples.len()).min().unwrap_or(0);
    let truncated = runs.iter().any(|r| r.samples.len() != len);
    let inv = 1.0 / runs.len() as f64;
    let samples = (0..len)
        .map(|g| {
            let mut acc = GenerationSample {
                gen: g,
                x: 0.0,
                r: 0.0,
                sigma: 0.0,
                sigma_star: 0.0,
                s1: 0.0,
                s_odot: 0.0,
                s_norm_sq: 0.0,
                q_mean: 0.0,
                qr_mean: 0.0,
                feasible_fraction: 0.0,
            };
            for run in runs {
                let s = &run.samples[g];
                acc.x += s.x;
                acc.r += s.r;
                acc.sigma += s.sigma;
                acc.sigma_star += s.sigma_star;
                acc.s1 += s.s1;
                acc.s_odot += s.s_odot;
                acc.s_norm_sq += s.s_norm_sq;
                acc.q_mean += s.q_mean;
                acc.qr_mean += s.qr_mean;
                acc.feasible_fraction += s.feasible_fraction;
            }
            acc.x *= inv;
            acc.r *= inv;
            acc.sigma *= inv;
            acc.sigma_star *= inv;
            acc.s1 *= inv;
            acc.s_odot *= inv;
            acc.s_norm_sq *= inv;
            acc.q_mean *= inv;
            acc.qr_mean *= inv;
            acc.feasible_fraction *= inv;
            acc
        })
        .collect();
    Ok(DynamicsSeries {
        cone: first.cone,
        config: first.config.clone(),
        seeds: runs.iter().flat_map(|r| r.seeds.iter().copied()).collect(),
        samples,
        diverged: None,
        truncated,
    })
}

/// Mean and standard deviation of one tail quantity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailStat {
    pub mean: f64,
    pub sd: f64,
}

/// Steady-state empirical estimates over the last
/// `ceil(tail_fraction * len)` generations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailStatistics {
    /// Number of tail generations used.
    pub generations: usize,
    pub sigma_star: TailStat,
    /// Boundary-distance ratio `x / (sqrt(xi) r)`.
    pub ratio: TailStat,
    /// Per-generation `N ln(x_g / x_{g+1})`, the empirical normalized axial
    /// progress.
    pub phi_x_star: TailStat,
    /// Per-generation `N ln(r_g / r_{g+1})`.
    pub phi_r_star: TailStat,
    pub s1: TailStat,
    pub s_odot: TailStat,
    pub s_norm_sq: TailStat,
}

/// Computes [`TailStatistics`] for a series.
pub fn tail_statistics(
    series: &DynamicsSeries,
    tail_fraction: f64,
) -> Result<TailStatistics, EsError> {
    if series.samples.is_empty() {
        return Err(EsError::Argument("series is empty"));
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(EsError::Argument("tail_fraction must be in (0, 1]"));
    }
    let len = series.samples.len();
    let count = (ceil(tail_fraction * len as f64) as usize).clamp(1, len);
    let tail = &series.samples[len - count..];
    let nf = series.cone.n() as f64;
    let sqrt_xi = series.cone.sqrt_xi();
    let stat = |vals: &mut dyn Iterator<Item = f64>| {
        let mut acc = MeanVar::default();
        for v in vals {
            acc.push(v);
        }
        TailStat {
            mean: acc.mean(),
            sd: sqrt(acc.variance()),
        }
    };
    Ok(TailStatistics {
        generations: count,
        sigma_star: stat(&mut tail.iter().map(|s| s.sigma_star)),
        ratio: stat(&mut tail.iter().map(|s| s.x / (sqrt_xi * s.r))),
        phi_x_star: stat(&mut tail.iter().map(|s| nf * ln(s.x / s.q_mean))),
        phi_r_star: stat(&mut tail.iter().map(|s| nf * ln(s.r / s.qr_mean))),
        s1: stat(&mut tail.iter().map(|s| s.s1)),
        s_odot: stat(&mut tail.iter().map(|s| s.s_odot)),
        s_norm_sq: stat(&mut tail.iter().map(|s| s.s_norm_sq)),
    })
}
