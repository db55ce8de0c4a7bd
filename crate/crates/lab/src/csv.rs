//! CSV emission and parsing for dynamics series and mean-value
//! trajectories.
//!
//! Schema (one row per generation):
//! `gen,x,r,sigma,sigma_star,s1,s_odot,s_norm_sq,q_mean,qr_mean,feasible_fraction`
//!
//! Floats are written as decimal with 17 significant digits, so parsing a
//! written file reproduces every `f64` bit for bit. Metadata (config, seeds,
//! generator, version, optional creation time) travels in `#`-prefixed
//! comment lines ahead of the header.

use std::io::{self, BufRead, Write};

use conelab_core::cone::ConeSpec;
use conelab_core::es::{Divergence, DynamicsSeries, EsConfig, GenerationSample, GENERATOR};
use conelab_core::mean_value::MeanState;
use conelab_core::theory::{TheoryParams, TheoryState};
use serde::{Deserialize, Serialize};

/// The pinned column schema.
pub const COLUMNS: &str =
    "gen,x,r,sigma,sigma_star,s1,s_odot,s_norm_sq,q_mean,qr_mean,feasible_fraction";

/// Errors from CSV reading/writing.
#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing `# config:` metadata line")]
    MissingConfig,
    #[error("cannot rebuild series: {0}")]
    Invalid(String),
}

#[derive(Serialize, Deserialize)]
struct MetaConfig {
    n: usize,
    xi: f64,
    mu: u32,
    lambda: u32,
    c: f64,
    d: f64,
    sigma0: f64,
    x0: f64,
    r0: f64,
    max_gen: usize,
    seed: u64,
}

/// Float formatting with 17 significant digits (exact `f64` round trip).
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_meta_common<W: Write + ?Sized>(
    w: &mut W,
    cone: &ConeSpec,
    config: &EsConfig,
    seeds: &[u64],
    created: Option<u64>,
) -> io::Result<()> {
    writeln!(w, "# version: {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(w, "# generator: {GENERATOR}")?;
    let meta = MetaConfig {
        n: cone.n(),
        xi: cone.xi(),
        mu: config.mu,
        lambda: config.lambda,
        c: config.c,
        d: config.d,
        sigma0: config.sigma0,
        x0: config.x0,
        r0: config.r0,
        max_gen: config.max_gen,
        seed: config.seed,
    };
    writeln!(
        w,
        "# config: {}",
        serde_json::to_string(&meta).expect("meta json")
    )?;
    let seed_list: Vec<String> = seeds.iter().map(u64::to_string).collect();
    writeln!(w, "# seeds: {}", seed_list.join(","))?;
    if let Some(ts) = created {
        writeln!(w, "# created: {ts}")?;
    }
    Ok(())
}

/// Emits a dynamics series. `created` carries a Unix timestamp; pass `None`
/// for reproducible output.
pub fn emit_series<W: Write + ?Sized>(
    w: &mut W,
    series: &DynamicsSeries,
    created: Option<u64>,
) -> Result<(), CsvError> {
    write_meta_common(w, &series.cone, &series.config, &series.seeds, created)?;
    if series.truncated {
        writeln!(w, "# truncated: true")?;
    }
    if let Some((gen, reason)) = series.diverged {
        let label = match reason {
            Divergence::SigmaOutOfRange => "sigma-out-of-range",
            Divergence::NonFiniteCoordinate => "non-finite-coordinate",
        };
        writeln!(w, "# diverged: gen={gen} reason={label}")?;
    }
    writeln!(w, "{COLUMNS}")?;
    for s in &series.samples {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            s.gen,
            fmt(s.x),
            fmt(s.r),
            fmt(s.sigma),
            fmt(s.sigma_star),
            fmt(s.s1),
            fmt(s.s_odot),
            fmt(s.s_norm_sq),
            fmt(s.q_mean),
            fmt(s.qr_mean),
            fmt(s.feasible_fraction),
        )?;
    }
    Ok(())
}

/// Emits a mean-value trajectory in the same schema. `q_mean`/`qr_mean`
/// carry the next state's position; `feasible_fraction` carries the model
/// feasibility probability at the row's state.
pub fn emit_mean_series<W: Write + ?Sized>(
    w: &mut W,
    traj: &[MeanState],
    cone: &ConeSpec,
    params: &TheoryParams,
    config: &EsConfig,
    seeds: &[u64],
    created: Option<u64>,
) -> Result<(), CsvError> {
    write_meta_common(w, cone, config, seeds, created)?;
    writeln!(w, "{COLUMNS}")?;
    for (g, pair) in traj.windows(2).enumerate() {
        let (s, next) = (&pair[0], &pair[1]);
        let p_feas = if s.sigma_bar > 0.0 {
            params.p_feas(&TheoryState {
                x: s.x_bar,
                r: s.r_bar,
                sigma: s.sigma_bar,
                sigma_star: s.sigma_star_bar,
            })
        } else {
            f64::NAN
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            g,
            fmt(s.x_bar),
            fmt(s.r_bar),
            fmt(s.sigma_bar),
            fmt(s.sigma_star_bar),
            fmt(s.s1_bar),
            fmt(s.s_odot_bar),
            fmt(s.s_norm_sq_bar),
            fmt(next.x_bar),
            fmt(next.r_bar),
            fmt(p_feas),
        )?;
    }
    Ok(())
}

/// Parses a series written by [`emit_series`].
pub fn parse_series(r: impl BufRead) -> Result<DynamicsSeries, CsvError> {
    let mut config: Option<MetaConfig> = None;
    let mut seeds: Vec<u64> = Vec::new();
    let mut truncated = false;
    let mut diverged = None;
    let mut samples = Vec::new();
    let mut header_seen = false;

    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let bad = |message: String| CsvError::Parse {
            line: lineno,
            message,
        };
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim_start();
            if let Some(json) = rest.strip_prefix("config:") {
                config = Some(serde_json::from_str(json.trim()).map_err(|e| bad(e.to_string()))?);
            } else if let Some(list) = rest.strip_prefix("seeds:") {
                for part in list.trim().split(',').filter(|p| !p.is_empty()) {
                    seeds.push(
                        part.trim()
                            .parse()
                            .map_err(|_| bad(format!("bad seed {part}")))?,
                    );
                }
            } else if rest.starts_with("truncated:") {
                truncated = rest.contains("true");
            } else if let Some(info) = rest.strip_prefix("diverged:") {
                diverged = Some(parse_divergence(info).map_err(bad)?);
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            if line != COLUMNS {
                return Err(bad(format!("unexpected header {line:?}")));
            }
            header_seen = true;
            continue;
        }
        let mut fields = line.split(',');
        let mut take = |name: &str| {
            fields
                .next()
                .ok_or_else(|| bad(format!("missing field {name}")))
        };
        let gen: usize = take("gen")?.parse().map_err(|_| bad("bad gen".into()))?;
        let mut float = |name: &str| -> Result<f64, CsvError> {
            let raw = take(name)?;
            raw.parse()
                .map_err(|_| bad(format!("bad float {name}={raw}")))
        };
        samples.push(GenerationSample {
            gen,
            x: float("x")?,
            r: float("r")?,
            sigma: float("sigma")?,
            sigma_star: float("sigma_star")?,
            s1: float("s1")?,
            s_odot: float("s_odot")?,
            s_norm_sq: float("s_norm_sq")?,
            q_mean: float("q_mean")?,
            qr_mean: float("qr_mean")?,
            feasible_fraction: float("feasible_fraction")?,
        });
    }

    let meta = config.ok_or(CsvError::MissingConfig)?;
    let cone = ConeSpec::new(meta.n, meta.xi).map_err(|e| CsvError::Invalid(e.to_string()))?;
    Ok(DynamicsSeries {
        cone,
        config: EsConfig {
            mu: meta.mu,
            lambda: meta.lambda,
            c: meta.c,
            d: meta.d,
            sigma0: meta.sigma0,
            x0: meta.x0,
            r0: meta.r0,
            max_gen: meta.max_gen,
            seed: meta.seed,
        },
        seeds,
        samples,
        diverged,
        truncated,
    })
}

fn parse_divergence(info: &str) -> Result<(usize, Divergence), String> {
    let mut gen = None;
    let mut reason = None;
    for part in info.split_whitespace() {
        if let Some(g) = part.strip_prefix("gen=") {
            gen = Some(g.parse().map_err(|_| format!("bad gen {g}"))?);
        } else if let Some(r) = part.strip_prefix("reason=") {
            reason = Some(match r {
                "sigma-out-of-range" => Divergence::SigmaOutOfRange,
                "non-finite-coordinate" => Divergence::NonFiniteCoordinate,
                other => return Err(format!("unknown divergence reason {other}")),
            });
        }
    }
    match (gen, reason) {
        (Some(g), Some(r)) => Ok((g, r)),
        _ => Err("divergence line needs gen= and reason=".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use conelab_core::es::run_es;

    fn sample_series() -> DynamicsSeries {
        let cone = ConeSpec::new(12, 10.0).unwrap();
        let config = EsConfig {
            mu: 2,
            lambda: 6,
            c: 0.3,
            d: 3.0,
            sigma0: 1e-3,
            x0: 10.0,
            r0: EsConfig::default_r0(&cone, 10.0),
            max_gen: 25,
            seed: 5,
        };
        run_es(&cone, &config).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let series = sample_series();
        let mut buf = Vec::new();
        emit_series(&mut buf, &series, None).unwrap();
        let parsed = parse_series(buf.as_slice()).unwrap();
        assert_eq!(parsed, series);
    }

    #[test]
    fn empty_series_emits_header_and_metadata_only() {
        let mut series = sample_series();
        series.samples.clear();
        let mut buf = Vec::new();
        emit_series(&mut buf, &series, None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.clone().all(|l| l.starts_with('#') || l == COLUMNS));
        assert_eq!(lines.next_back(), Some(COLUMNS));
        let parsed = parse_series(text.as_bytes()).unwrap();
        assert!(parsed.samples.is_empty());
    }

    #[test]
    fn timestamp_is_optional_for_reproducible_output() {
        let series = sample_series();
        let mut with = Vec::new();
        emit_series(&mut with, &series, Some(1_723_000_000)).unwrap();
        let mut without = Vec::new();
        emit_series(&mut without, &series, None).unwrap();
        let with = String::from_utf8(with).unwrap();
        assert!(with.contains("# created: 1723000000"));
        assert!(!String::from_utf8(without.clone())
            .unwrap()
            .contains("# created"));
        // and both parse to the same series
        assert_eq!(
            parse_series(with.as_bytes()).unwrap(),
            parse_series(without.as_slice()).unwrap()
        );
    }

    #[test]
    fn column_count_is_constant() {
        let series = sample_series();
        let mut buf = Vec::new();
        emit_series(&mut buf, &series, None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let want = COLUMNS.split(',').count();
        for line in text.lines().filter(|l| !l.starts_with('#')) {
            assert_eq!(line.split(',').count(), want);
        }
    }

    #[test]
    fn divergence_metadata_round_trips() {
        let mut series = sample_series();
        series.diverged = Some((7, Divergence::SigmaOutOfRange));
        let mut buf = Vec::new();
        emit_series(&mut buf, &series, None).unwrap();
        let parsed = parse_series(buf.as_slice()).unwrap();
        assert_eq!(parsed.diverged, Some((7, Divergence::SigmaOutOfRange)));
    }
}
