//! Command-line front end. [`run`] is the whole program; the binary only
//! forwards its arguments and exit status.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    coding_gain, min_det_complexity_table, min_det_sampled, min_det_search_with_cap, min_det_table,
    normalized_min_det, rank_profile_with_cap, theoretical_min_det_zj, DEFAULT_SEARCH_CAP,
};
use crate::channel::{expected_r_pattern, observed_r_pattern, random_channel, theorem1_check};
use crate::codes::{CodeName, StbcCode};
use crate::constellation::by_size;
use crate::decoders::DecoderKind;
use crate::error::{Error, Result};
use crate::linalg::RealMatrix;
use crate::sim::{parse_snr_range, run_cer_sweep_with_threads, threads_from_env, to_csv, to_json, SimConfig, SNR_DEFINITION};
use crate::verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "stbc", version, about = "Space-time block codes: encoding, analysis and CER simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the codeword for a symbol vector.
    Encode {
        #[arg(long)]
        code: CodeName,
        /// Comma-separated symbols, e.g. `1+1j,-3j,1,0`.
        #[arg(long, allow_hyphen_values = true)]
        symbols: String,
        #[arg(long)]
        json: bool,
    },
    /// Minimum determinants, rank, R structure and generator checks
    #[command(subcommand)]
    Analyze(Analyze),
    /// Monte Carlo error-rate simulation
    #[command(subcommand)]
    Simulate(Simulate),
    /// Run every acceptance check and report pass/fail.
    Verify {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Subcommand)]
enum Analyze {
    /// Minimum determinant over all codeword differences.
    Mindet {
        #[command(flatten)]
        target: Target,
        /// Sample this many random differences instead of searching
        /// exhaustively; the result is an upper bound.
        #[arg(long)]
        sampled: Option<u64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Largest number of differences an exhaustive search may visit.
        #[arg(long, default_value_t = DEFAULT_SEARCH_CAP)]
        cap: f64,
        /// Print a table instead of key-value lines.
        #[arg(long)]
        table: bool,
        #[arg(long)]
        json: bool,
    },
    /// Minimum rank of the codeword difference matrices.
    Rank {
        #[command(flatten)]
        target: Target,
        /// Rotation angle in radians for the CIOD codes (default θ_g).
        #[arg(long, allow_hyphen_values = true)]
        rotation: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_SEARCH_CAP)]
        cap: f64,
        #[arg(long)]
        json: bool,
    },
    /// Observed sparsity of R over random channels.
    Rpattern {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long, default_value_t = 1e-9)]
        zero_tol: f64,
        #[arg(long)]
        json: bool,
    },
    /// Orthogonality of H_eq columns for anticommuting weight pairs.
    Theorem1 {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long)]
        json: bool,
    },
    /// Real generator matrix and its deviation from orthonormality.
    Generator {
        #[arg(long)]
        code: CodeName,
        #[arg(long)]
        json: bool,
    },
    /// |det S| of the proposed 2x2 code over a Gaussian-integer grid.
    Zj {
        /// Components range over [-l, l].
        #[arg(long, default_value_t = 3)]
        l: i32,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
struct Target {
    #[arg(long)]
    code: CodeName,
    /// Constellation size; 32 selects the cross constellation.
    #[arg(long, default_value_t = 4)]
    qam: usize,
}

#[derive(Debug, Args)]
struct ChannelArgs {
    #[arg(long)]
    code: CodeName,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long = "n-r", default_value_t = 2)]
    n_r: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum Simulate {
    /// Codeword error rate over an SNR sweep, as CSV.
    Cer {
        #[arg(long)]
        code: CodeName,
        #[arg(long, value_enum, default_value_t = DecoderKind::Fast)]
        decoder: DecoderKind,
        /// Constellation size; 32 selects the cross constellation.
        #[arg(long, default_value_t = 4)]
        qam: usize,
        /// `start:step:stop` in dB (inclusive), a single value, or `inf`.
        #[arg(long, allow_hyphen_values = true)]
        snr: String,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads; defaults to STBC_THREADS, then to all cores.
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long = "n-r", default_value_t = 2)]
        n_r: usize,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Emit JSON (configuration, SNR definition and points) instead of CSV.
        #[arg(long)]
        json: bool,
    },
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::UnknownCode(_)
        | Error::InvalidConstellationSize(_)
        | Error::ConstellationKind(_)
        | Error::SymbolCount { .. } => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// status: 0 on success, 1 for usage errors, 2 for numeric or verification
/// failures.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn io(e: std::io::Error) -> Error {
    Error::Config(format!("cannot write output: {e}"))
}

fn print_json(out: &mut dyn Write, v: &serde_json::Value) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string_pretty(v).expect("JSON renders")).map_err(io)
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Encode { code, symbols, json } => {
            let code = StbcCode::new(code);
            let x = parse_symbols(&symbols)?;
            let s = code.encode(&x)?;
            if json {
                let rows: Vec<Vec<[f64; 2]>> = (0..s.rows())
                    .map(|i| (0..s.cols()).map(|j| [s[(i, j)].re, s[(i, j)].im]).collect())
                    .collect();
                print_json(out, &serde_json::json!({ "code": code.name(), "codeword": rows }))?;
            } else {
                write!(out, "{s}").map_err(io)?;
            }
            Ok(EXIT_OK)
        }
        Command::Analyze(a) => analyze(a, out),
        Command::Simulate(Simulate::Cer {
            code,
            decoder,
            qam,
            snr,
            trials,
            seed,
            threads,
            n_r,
            out: path,
            json,
        }) => {
            let mut cfg = SimConfig::new(code, decoder, qam, parse_snr_range(&snr)?, trials, seed);
            cfg.n_r = n_r;
            cfg.validate()?;
            let threads = threads.or_else(threads_from_env);
            let points = run_cer_sweep_with_threads(&cfg, threads)?;
            let text = if json {
                format!("{}\n", serde_json::to_string_pretty(&to_json(&cfg, &points)).expect("JSON renders"))
            } else {
                to_csv(&points)
            };
            match path {
                Some(p) => {
                    std::fs::write(&p, text).map_err(io)?;
                    let _ = writeln!(err, "wrote {} ({SNR_DEFINITION})", p.display());
                }
                None => out.write_all(text.as_bytes()).map_err(io)?,
            }
            Ok(EXIT_OK)
        }
        Command::Verify { json } => {
            let results = verify::run_all(|r| {
                if !json {
                    let _ = writeln!(out, "{}", r.line());
                }
            });
            if json {
                print_json(out, &serde_json::to_value(&results).expect("results serialize"))?;
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            if !json {
                let _ = writeln!(out, "{} of {} criteria passed", results.len() - failed, results.len());
            }
            Ok(if failed == 0 { EXIT_OK } else { EXIT_FAILURE })
        }
    }
}

fn analyze(a: Analyze, out: &mut dyn Write) -> Result<i32> {
    match a {
        Analyze::Mindet {
            target,
            sampled,
            seed,
            cap,
            table,
            json,
        } => {
            let code = StbcCode::new(target.code);
            let c = by_size(target.qam, target.qam == 32)?;
            let report = match sampled {
                Some(n) => min_det_sampled(&code, &c, n, &mut ChaCha8Rng::seed_from_u64(seed))?,
                None => min_det_search_with_cap(&code, &c, cap)?,
            };
            let normalized = normalized_min_det(&report, &code, &c);
            if json {
                let mut v = report.to_json();
                v["normalized_delta_min"] = normalized.into();
                v["coding_gain"] = coding_gain(&report, code.n_t()).ok().into();
                print_json(out, &v)?;
            } else if table {
                let text = if code.n_t() == 2 {
                    min_det_table(&[report])
                } else {
                    min_det_complexity_table(&[report])
                };
                write!(out, "{text}").map_err(io)?;
            } else {
                let bound = if report.exhaustive { "" } else { " (upper bound, sampled)" };
                let lines = [
                    format!("code {}", report.code),
                    format!("M {}", report.m),
                    format!("delta_min {:.6}{bound}", report.delta_min),
                    format!("normalized_delta_min {normalized:.6}"),
                    match coding_gain(&report, code.n_t()) {
                        Ok(g) => format!("coding_gain {g:.6}"),
                        Err(_) => "coding_gain undefined (rank deficient)".into(),
                    },
                    format!("full_rank {}", report.full_rank),
                    format!("evaluations {}", report.evaluations),
                    format!("argmin_difference {}", format_symbols(&report.argmin_difference)),
                ];
                for l in lines {
                    writeln!(out, "{l}").map_err(io)?;
                }
            }
            Ok(EXIT_OK)
        }
        Analyze::Rank {
            target,
            rotation,
            cap,
            json,
        } => {
            let code = match (target.code, rotation) {
                (CodeName::Ciod2, Some(a)) => StbcCode::ciod2_with_rotation(a),
                (CodeName::Ciod4, Some(a)) => StbcCode::ciod4_with_rotation(a),
                (_, Some(_)) => return Err(Error::Config("--rotation applies to ciod2 and ciod4 only".into())),
                (name, None) => StbcCode::new(name),
            };
            let c = by_size(target.qam, target.qam == 32)?;
            let r = rank_profile_with_cap(&code, &c, cap)?;
            if json {
                print_json(out, &serde_json::to_value(&r).expect("report serializes"))?;
            } else {
                writeln!(out, "min_rank {}", r.min_rank).map_err(io)?;
                writeln!(out, "argmin_difference {}", format_symbols(&r.argmin_difference)).map_err(io)?;
                writeln!(out, "evaluations {}", r.evaluations).map_err(io)?;
            }
            Ok(EXIT_OK)
        }
        Analyze::Rpattern { channel, zero_tol, json } => {
            let code = StbcCode::new(channel.code);
            let mut rng = ChaCha8Rng::seed_from_u64(channel.seed);
            let observed = observed_r_pattern(&code, channel.n_r, channel.trials, zero_tol, &mut rng)?;
            let expected = expected_r_pattern(channel.code);
            if json {
                print_json(
                    out,
                    &serde_json::json!({
                        "code": channel.code,
                        "observed": observed.to_json(),
                        "expected": expected.as_ref().map(|p| p.to_json()),
                    }),
                )?;
            } else {
                writeln!(out, "observed ('0' = zero in all {} trials):", channel.trials).map_err(io)?;
                write!(out, "{}", observed.to_ascii()).map_err(io)?;
                if let Some(e) = expected {
                    let missing: Vec<_> = e.upper_zeros().into_iter().filter(|&(i, j)| !observed.is_zero(i, j)).collect();
                    let extra: Vec<_> = observed
                        .upper_zeros()
                        .into_iter()
                        .filter(|&(i, j)| i < e.size() && j < e.size() && !e.is_zero(i, j))
                        .collect();
                    writeln!(out, "expected zeros not observed: {missing:?}").map_err(io)?;
                    writeln!(out, "observed zeros beyond the expected structure: {extra:?}").map_err(io)?;
                }
            }
            Ok(EXIT_OK)
        }
        Analyze::Theorem1 { channel, json } => {
            let code = StbcCode::new(channel.code);
            let mut rng = ChaCha8Rng::seed_from_u64(channel.seed);
            let mut worst = 0.0f64;
            let mut report = None;
            for _ in 0..channel.trials.max(1) {
                let h = random_channel(&mut rng, channel.n_r, code.n_t());
                let r = theorem1_check(&code, &h)?;
                worst = worst.max(r.max_violation());
                report.get_or_insert(r);
            }
            let report = report.unwrap_or_default();
            if json {
                let mut v = serde_json::to_value(&report).expect("report serializes");
                v["max_violation_over_trials"] = worst.into();
                print_json(out, &v)?;
            } else {
                writeln!(out, "anticommuting pairs (0-based): {:?}", report.pairs).map_err(io)?;
                writeln!(out, "R entries forced to zero: {:?}", report.r_zero_pairs).map_err(io)?;
                writeln!(out, "max relative violation over {} channels: {worst:e}", channel.trials).map_err(io)?;
            }
            Ok(EXIT_OK)
        }
        Analyze::Generator { code, json } => {
            let code = StbcCode::new(code);
            let g = code.generator();
            let gtg = &g.transpose() * g;
            let dev = gtg.max_abs_diff(&RealMatrix::identity(g.cols()));
            if json {
                let rows: Vec<&[f64]> = (0..g.rows()).map(|i| g.row(i)).collect();
                print_json(
                    out,
                    &serde_json::json!({ "code": code.name(), "generator": rows, "max_gtg_minus_identity": dev }),
                )?;
            } else {
                write!(out, "{g}").map_err(io)?;
                writeln!(out, "max |G^T G - I| = {dev:e}").map_err(io)?;
            }
            Ok(EXIT_OK)
        }
        Analyze::Zj { l, json } => {
            if !(1..=4).contains(&l) {
                return Err(Error::Config("--l must be between 1 and 4".into()));
            }
            let r = theoretical_min_det_zj(l);
            if json {
                print_json(out, &serde_json::to_value(&r).expect("report serializes"))?;
            } else {
                writeln!(out, "min nonzero |det| {:.12}", r.min_abs_det).map_err(io)?;
                writeln!(out, "1/sqrt(5)         {:.12}", 1.0 / 5f64.sqrt()).map_err(io)?;
                writeln!(out, "zero determinants {}", r.zero_dets).map_err(io)?;
                writeln!(out, "evaluations {}", r.evaluations).map_err(io)?;
                writeln!(out, "closed form deviation {:e}", r.closed_form_deviation).map_err(io)?;
            }
            Ok(EXIT_OK)
        }
    }
}

fn format_symbols(x: &[Complex64]) -> String {
    x.iter().map(|z| format_complex(*z)).collect::<Vec<_>>().join(",")
}

fn format_complex(z: Complex64) -> String {
    format!("{}{:+}j", z.re, z.im)
}

/// Parses `a`, `bj`, `a+bj` or `a-bj` (an `i` suffix is accepted too).
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let bad = || Error::Config(format!("cannot parse symbol `{s}`"));
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('j').or_else(|| t.strip_suffix('i')) else {
        return t.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    // Split before the last sign that is not a leading sign or an exponent sign.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let imag = |p: &str| -> Result<f64> {
        match p {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => p.parse().map_err(|_| bad()),
        }
    };
    match split {
        Some(i) => Ok(Complex64::new(body[..i].parse().map_err(|_| bad())?, imag(&body[i..])?)),
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

pub fn parse_symbols(s: &str) -> Result<Vec<Complex64>> {
    s.split(',').map(parse_complex).collect()
}
