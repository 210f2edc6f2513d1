//! Monte Carlo codeword-error-rate simulation over quasi-static Rayleigh
//! fading.
//!
//! Codewords are scaled so that `E‖S‖_F² = n_t·T`, and `SNR = n_t / N₀`.
//! Every trial draws its channel, noise and data from its own ChaCha stream
//! keyed by `(seed, point, trial)`, so results do not depend on how trials are
//! spread over threads.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::random_channel;
use crate::codes::{CodeName, StbcCode};
use crate::constellation::{by_size, Constellation, ConstellationKind};
use crate::decoders::{decode, DecoderKind};
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// Environment variable read for the default worker count.
pub const THREADS_ENV: &str = "STBC_THREADS";

pub const CSV_HEADER: &str = "snr_db,trials,errors,cer,ci_low,ci_high,avg_metric_computations";

pub const SNR_DEFINITION: &str = "SNR = n_t / N0 with codewords scaled to E||S||_F^2 = n_t * T";

/// Trials per point must stay below this so stream ids do not collide.
pub const MAX_TRIALS: u64 = 1 << 40;

#[derive(Clone, Debug, Serialize)]
pub struct SimConfig {
    pub code: CodeName,
    pub decoder: DecoderKind,
    #[serde(rename = "M")]
    pub m: usize,
    pub kind: ConstellationKind,
    /// `f64::INFINITY` means noiseless.
    pub snr_db: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub n_r: usize,
}

impl SimConfig {
    pub fn new(code: CodeName, decoder: DecoderKind, m: usize, snr_db: Vec<f64>, trials: u64, seed: u64) -> Self {
        Self {
            code,
            decoder,
            m,
            kind: if m == 32 {
                ConstellationKind::Cross32Qam
            } else {
                ConstellationKind::SquareQam
            },
            snr_db,
            trials,
            seed,
            n_r: 2,
        }
    }

    pub fn constellation(&self) -> Result<Constellation> {
        by_size(self.m, self.kind == ConstellationKind::Cross32Qam)
    }

    /// Checks the configuration and returns the code and constellation.
    pub fn validate(&self) -> Result<(StbcCode, Constellation)> {
        if self.trials == 0 || self.trials >= MAX_TRIALS {
            return Err(Error::Config(format!("trials must be in 1..{MAX_TRIALS}")));
        }
        if self.snr_db.is_empty() {
            return Err(Error::Config("empty SNR list".into()));
        }
        if self.snr_db.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
            return Err(Error::Config("SNR values must be finite or +inf".into()));
        }
        if self.n_r == 0 {
            return Err(Error::Config("need at least one receive antenna".into()));
        }
        let code = StbcCode::new(self.code);
        let c = self.constellation()?;
        self.decoder.check(self.code, &c)?;
        Ok((code, c))
    }

    /// Multiplier giving `E‖S‖_F² = n_t·T`.
    pub fn energy_scale(&self, code: &StbcCode, c: &Constellation) -> f64 {
        ((code.n_t() * code.t()) as f64 / code.mean_energy(c)).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CerPoint {
    pub snr_db: f64,
    pub trials: u64,
    pub errors: u64,
    pub cer: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub avg_metric_computations: f64,
}

/// Independent generators for one trial.
pub struct TrialStreams {
    pub channel: ChaCha8Rng,
    pub noise: ChaCha8Rng,
    pub data: ChaCha8Rng,
}

/// Derives the streams of trial `trial` at sweep point `point`.
///
/// All streams share the key expanded from `seed`; the 64-bit ChaCha stream id
/// is `point << 42 | trial << 2 | purpose`.
pub fn rng_streams(seed: u64, point: usize, trial: u64) -> TrialStreams {
    debug_assert!(trial < MAX_TRIALS && (point as u64) < (1 << 22));
    let base = ChaCha8Rng::seed_from_u64(seed);
    let stream = |purpose: u64| {
        let mut rng = base.clone();
        rng.set_stream(((point as u64) << 42) | (trial << 2) | purpose);
        rng
    };
    TrialStreams {
        channel: stream(0),
        noise: stream(1),
        data: stream(2),
    }
}

/// Standard normal draws from a stream (ziggurat transform of uniform words).
pub fn standard_normals<R: Rng>(rng: R) -> impl Iterator<Item = f64> {
    rng.sample_iter(StandardNormal)
}

/// `N₀` for an SNR in dB: `n_t / 10^(snr/10)`; zero for `+inf`.
pub fn noise_variance(snr_db: f64, n_t: usize) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        n_t as f64 / 10f64.powf(snr_db / 10.0)
    }
}

/// Wilson score interval at 95 %.
pub fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    const Z: f64 = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // The interval always contains p; the clamps only absorb rounding.
    ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0))
}

struct TrialOutcome {
    error: bool,
    metric_computations: u64,
}

fn run_trial(
    cfg: &SimConfig,
    code: &StbcCode,
    c: &Constellation,
    scale: f64,
    n0: f64,
    point: usize,
    trial: u64,
) -> Result<TrialOutcome> {
    let mut streams = rng_streams(cfg.seed, point, trial);
    let h = random_channel(&mut streams.channel, cfg.n_r, code.n_t());
    let x: Vec<Complex64> = (0..code.k())
        .map(|_| c.points()[streams.data.random_range(0..c.size())])
        .collect();
    let s = code.encode(&x)?.scale_real(scale);
    let sigma = (n0 / 2.0).sqrt();
    let mut normals = standard_normals(&mut streams.noise);
    let noise = ComplexMatrix::from_fn(cfg.n_r, code.t(), |_, _| {
        let re = normals.next().expect("endless stream");
        let im = normals.next().expect("endless stream");
        Complex64::new(re, im) * sigma
    });
    let y = &(&h * &s) + &noise;
    let res = decode(cfg.decoder, code, &y, &h.scale_real(scale), c)?;
    Ok(TrialOutcome {
        error: res.x_hat != x,
        metric_computations: res.metric_computations,
    })
}

/// Runs every sweep point on the current rayon pool.
pub fn run_cer_sweep(cfg: &SimConfig) -> Result<Vec<CerPoint>> {
    let (code, c) = cfg.validate()?;
    let scale = cfg.energy_scale(&code, &c);
    cfg.snr_db
        .iter()
        .enumerate()
        .map(|(point, &snr)| {
            let n0 = noise_variance(snr, code.n_t());
            let (errors, work) = (0..cfg.trials)
                .into_par_iter()
                .map(|trial| {
                    run_trial(cfg, &code, &c, scale, n0, point, trial)
                        .map(|o| (o.error as u64, o.metric_computations as u128))
                })
                .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
            let (ci_low, ci_high) = wilson_interval(errors, cfg.trials);
            Ok(CerPoint {
                snr_db: snr,
                trials: cfg.trials,
                errors,
                cer: errors as f64 / cfg.trials as f64,
                ci_low,
                ci_high,
                avg_metric_computations: work as f64 / cfg.trials as f64,
            })
        })
        .collect()
}

/// Reads [`THREADS_ENV`]; `None` if unset or not a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs the sweep on a dedicated pool of `threads` workers (rayon's default
/// when `None`).
pub fn run_cer_sweep_with_threads(cfg: &SimConfig, threads: Option<usize>) -> Result<Vec<CerPoint>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_cer_sweep(cfg))
}

/// Fixed-point decimal with six significant digits; `inf` for infinity.
pub fn format_sig6(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0.00000".into();
    }
    // Round first so that e.g. 9.999996 is counted in the next decade.
    let sci = format!("{v:.5e}");
    let exp: i32 = sci.split('e').nth(1).and_then(|e| e.parse().ok()).unwrap_or(0);
    let decimals = (5 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

pub fn to_csv(points: &[CerPoint]) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            format_sig6(p.snr_db),
            p.trials,
            p.errors,
            format_sig6(p.cer),
            format_sig6(p.ci_low),
            format_sig6(p.ci_high),
            format_sig6(p.avg_metric_computations)
        );
    }
    out
}

pub fn to_json(cfg: &SimConfig, points: &[CerPoint]) -> serde_json::Value {
    let points: Vec<serde_json::Value> = points
        .iter()
        .map(|p| {
            let mut v = serde_json::to_value(p).expect("point serializes");
            if p.snr_db.is_infinite() {
                v["snr_db"] = "inf".into();
            }
            v
        })
        .collect();
    let mut config = serde_json::to_value(cfg).expect("config serializes");
    config["snr_db"] = cfg
        .snr_db
        .iter()
        .map(|&s| if s.is_infinite() { "inf".into() } else { serde_json::json!(s) })
        .collect();
    serde_json::json!({
        "config": config,
        "snr_definition": SNR_DEFINITION,
        "points": points,
    })
}

/// Parses `start:step:stop` (inclusive) or a single value; `inf` is allowed as
/// a single value.
pub fn parse_snr_range(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("bad SNR range `{spec}`, expected start:step:stop"));
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [one] => {
            let v: f64 = one.trim().parse().map_err(|_| bad())?;
            if v.is_nan() {
                return Err(bad());
            }
            Ok(vec![v])
        }
        [a, b, c] => {
            let (start, step, stop): (f64, f64, f64) = (
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
                c.trim().parse().map_err(|_| bad())?,
            );
            if !(start.is_finite() && step.is_finite() && stop.is_finite()) || step <= 0.0 || stop < start {
                return Err(bad());
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..n).map(|i| start + i as f64 * step).collect())
        }
        _ => Err(bad()),
    }
}
