//! Code-quality analysis: minimum determinant, coding gain and rank over all
//! codeword differences.
//!
//! All in-scope codes are linear in `x̃`, so `S(x) − S(x′) = S(x − x′)` and it
//! is enough to walk the nonzero difference vectors. `Δx` and `−Δx` give the
//! same determinant modulus and rank, so only the half whose first nonzero
//! component is positive (real part first) is visited.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::codes::{proposed_2x2_encode, CodeName, StbcCode};
use crate::constellation::{Constellation, ConstellationKind};
use crate::error::{Error, Result};
use crate::linalg::{check_expand, det_square, ComplexMatrix};

/// Default limit on the number of difference vectors a search may visit.
pub const DEFAULT_SEARCH_CAP: f64 = 1e8;

#[derive(Clone, Debug, Serialize)]
pub struct MinDetReport {
    pub code: CodeName,
    #[serde(rename = "M")]
    pub m: usize,
    pub kind: ConstellationKind,
    /// `min det[(ΔS)(ΔS)ᴴ]`, without energy normalization.
    pub delta_min: f64,
    pub argmin_difference: Vec<Complex64>,
    pub full_rank: bool,
    pub evaluations: u64,
    /// `false` for randomly sampled searches, whose `delta_min` is only an
    /// upper bound.
    pub exhaustive: bool,
}

impl MinDetReport {
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v["argmin_difference"] = self
            .argmin_difference
            .iter()
            .map(|z| serde_json::json!([z.re, z.im]))
            .collect();
        v
    }
}

/// `det[(ΔS)(ΔS)ᴴ]`; `|det ΔS|²` when `ΔS` is square.
pub fn difference_metric(ds: &ComplexMatrix) -> f64 {
    if ds.is_square() {
        det_square(ds.as_slice(), ds.rows()).norm_sqr()
    } else {
        let gram = ds * &ds.hermitian();
        det_square(gram.as_slice(), gram.rows()).re
    }
}

/// Nonzero difference vectors of a linear code, half of each `±Δx` pair.
struct DifferenceSpace {
    k: usize,
    n_t: usize,
    t: usize,
    diffs: Vec<Complex64>,
    /// `contributions[i][d]`: row-major `A_{2i} Re d + A_{2i+1} Im d`.
    contributions: Vec<Vec<Vec<Complex64>>>,
}

fn is_positive(z: Complex64) -> bool {
    z.re > 0.0 || (z.re == 0.0 && z.im > 0.0)
}

impl DifferenceSpace {
    fn new(code: &StbcCode, c: &Constellation, cap: f64) -> Result<Self> {
        let diffs = c.difference_set();
        let k = code.k();
        let size = Self::count(diffs.len(), k);
        if size > cap {
            return Err(Error::SearchTooLarge { size, limit: cap });
        }
        let w = code.weights();
        let contributions = (0..k)
            .map(|i| {
                diffs
                    .iter()
                    .map(|d| {
                        let mut s = ComplexMatrix::zeros(code.n_t(), code.t());
                        s.axpy(d.re, &w[2 * i]);
                        s.axpy(d.im, &w[2 * i + 1]);
                        s.as_slice().to_vec()
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            k,
            n_t: code.n_t(),
            t: code.t(),
            diffs,
            contributions,
        })
    }

    /// Number of vectors visited: `(|D|^k − 1) / 2`.
    fn count(d: usize, k: usize) -> f64 {
        ((d as f64).powi(k as i32) - 1.0) / 2.0
    }

    /// Minimizes `f(ΔS)` over the half space. Returns the minimum, the
    /// lexicographically first minimizer and the number of evaluations.
    ///
    /// Work is split by the first symbol's difference; the reduction keeps the
    /// earliest minimizer, so the result does not depend on scheduling.
    fn minimize<F>(&self, f: F) -> (f64, Vec<usize>, u64)
    where
        F: Fn(&ComplexMatrix) -> f64 + Sync,
    {
        let f = &f;
        (0..self.diffs.len())
            .into_par_iter()
            .filter(|&d| self.diffs[d] == Complex64::new(0.0, 0.0) || is_positive(self.diffs[d]))
            .map(|d0| {
                let mut walk = Walk {
                    space: self,
                    f,
                    partial: vec![vec![Complex64::new(0.0, 0.0); self.n_t * self.t]; self.k + 1],
                    index: vec![0; self.k],
                    best: (f64::INFINITY, Vec::new()),
                    evaluations: 0,
                };
                walk.push(0, d0);
                walk.descend(1, self.diffs[d0] == Complex64::new(0.0, 0.0));
                (walk.best.0, walk.best.1, walk.evaluations)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold((f64::INFINITY, Vec::new(), 0), |acc, (v, idx, n)| {
                if v < acc.0 {
                    (v, idx, acc.2 + n)
                } else {
                    (acc.0, acc.1, acc.2 + n)
                }
            })
    }

    fn vector(&self, index: &[usize]) -> Vec<Complex64> {
        index.iter().map(|&i| self.diffs[i]).collect()
    }
}

struct Walk<'a, F> {
    space: &'a DifferenceSpace,
    f: &'a F,
    /// `partial[d]` holds `Σ_{i<d}` contributions.
    partial: Vec<Vec<Complex64>>,
    index: Vec<usize>,
    best: (f64, Vec<usize>),
    evaluations: u64,
}

impl<F: Fn(&ComplexMatrix) -> f64> Walk<'_, F> {
    fn push(&mut self, depth: usize, d: usize) {
        self.index[depth] = d;
        let (head, tail) = self.partial.split_at_mut(depth + 1);
        for ((out, a), b) in tail[0]
            .iter_mut()
            .zip(&head[depth])
            .zip(&self.space.contributions[depth][d])
        {
            *out = a + b;
        }
    }

    fn descend(&mut self, depth: usize, all_zero: bool) {
        let space = self.space;
        if depth == space.k {
            if all_zero {
                return;
            }
            let ds = ComplexMatrix::from_row_slice(space.n_t, space.t, &self.partial[depth]);
            let v = (self.f)(&ds);
            self.evaluations += 1;
            if v < self.best.0 {
                self.best = (v, self.index.clone());
            }
            return;
        }
        for d in 0..space.diffs.len() {
            let z = space.diffs[d];
            let zero = z == Complex64::new(0.0, 0.0);
            if all_zero && !zero && !is_positive(z) {
                continue;
            }
            self.push(depth, d);
            self.descend(depth + 1, all_zero && zero);
        }
    }
}

/// Exhaustive minimum-determinant search with the default cap.
pub fn min_det_search(code: &StbcCode, c: &Constellation) -> Result<MinDetReport> {
    min_det_search_with_cap(code, c, DEFAULT_SEARCH_CAP)
}

pub fn min_det_search_with_cap(code: &StbcCode, c: &Constellation, cap: f64) -> Result<MinDetReport> {
    let space = DifferenceSpace::new(code, c, cap)?;
    let (delta_min, index, evaluations) = space.minimize(difference_metric);
    Ok(MinDetReport {
        code: code.name(),
        m: c.size(),
        kind: c.kind(),
        delta_min,
        argmin_difference: space.vector(&index),
        full_rank: full_rank_at(delta_min, code, &space.vector(&index)),
        evaluations,
        exhaustive: true,
    })
}

fn full_rank_at(delta_min: f64, code: &StbcCode, dx: &[Complex64]) -> bool {
    match code.encode(dx) {
        Ok(ds) => delta_min > 0.0 && numerical_rank(&ds) == ds.rows().min(ds.cols()),
        Err(_) => false,
    }
}

/// Upper bound on `δ_min` from `samples` uniformly drawn nonzero difference
/// vectors. Not exhaustive.
pub fn min_det_sampled<R: Rng + ?Sized>(
    code: &StbcCode,
    c: &Constellation,
    samples: u64,
    rng: &mut R,
) -> Result<MinDetReport> {
    let diffs = c.difference_set();
    let mut best = (f64::INFINITY, Vec::new());
    let mut evaluations = 0;
    while evaluations < samples {
        let dx: Vec<Complex64> = (0..code.k()).map(|_| diffs[rng.random_range(0..diffs.len())]).collect();
        if dx.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
            continue;
        }
        let v = difference_metric(&code.encode(&dx)?);
        evaluations += 1;
        if v < best.0 {
            best = (v, dx);
        }
    }
    Ok(MinDetReport {
        code: code.name(),
        m: c.size(),
        kind: c.kind(),
        delta_min: best.0,
        full_rank: full_rank_at(best.0, code, &best.1),
        argmin_difference: best.1,
        evaluations,
        exhaustive: false,
    })
}

/// `δ_min^{1/n_t}`.
pub fn coding_gain(report: &MinDetReport, n_t: usize) -> Result<f64> {
    if !report.full_rank || report.delta_min <= 0.0 {
        return Err(Error::RankDeficientCode);
    }
    Ok(report.delta_min.powf(1.0 / n_t as f64))
}

/// `δ_min` after scaling codewords to `E‖S‖_F² = n_t·T`. The determinant has
/// degree `2·n_t` in the entries of `ΔS`.
pub fn normalized_min_det(report: &MinDetReport, code: &StbcCode, c: &Constellation) -> f64 {
    let scale_sqr = (code.n_t() * code.t()) as f64 / code.mean_energy(c);
    report.delta_min * scale_sqr.powi(code.n_t() as i32)
}

/// Singular values of a real matrix by one-sided Jacobi rotations.
fn singular_values(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    // `a` is a list of columns.
    let n = a.len();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = a[p].iter().map(|x| x * x).sum();
                let beta: f64 = a[q].iter().map(|x| x * x).sum();
                let gamma: f64 = a[p].iter().zip(&a[q]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                let (left, right) = a.split_at_mut(q);
                for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let (xp, yq) = (*x, *y);
                    *x = cs * xp - sn * yq;
                    *y = sn * xp + cs * yq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = a.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Number of singular values above `1e-9·σ_max`.
pub fn numerical_rank(x: &ComplexMatrix) -> usize {
    let real = check_expand(x);
    let columns: Vec<Vec<f64>> = (0..real.cols()).map(|j| real.column(j)).collect();
    let s = singular_values(columns);
    let top = s.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    // The real expansion repeats each singular value twice.
    s.iter().filter(|&&v| v > 1e-9 * top).count() / 2
}

#[derive(Clone, Debug, Serialize)]
pub struct RankReport {
    pub code: CodeName,
    #[serde(rename = "M")]
    pub m: usize,
    pub min_rank: usize,
    pub argmin_difference: Vec<Complex64>,
    pub evaluations: u64,
}

/// Minimum rank of `ΔS` over nonzero differences.
pub fn rank_profile(code: &StbcCode, c: &Constellation) -> Result<RankReport> {
    rank_profile_with_cap(code, c, DEFAULT_SEARCH_CAP)
}

pub fn rank_profile_with_cap(code: &StbcCode, c: &Constellation, cap: f64) -> Result<RankReport> {
    let space = DifferenceSpace::new(code, c, cap)?;
    let full = code.n_t().min(code.t());
    let (rank, index, evaluations) = space.minimize(|ds| {
        // A determinant well away from zero settles full rank without an SVD.
        if ds.is_square() {
            let scale = ds.norm_sqr().powf(ds.rows() as f64 / 2.0);
            if det_square(ds.as_slice(), ds.rows()).norm() > 1e-6 * scale {
                return full as f64;
            }
        }
        numerical_rank(ds) as f64
    });
    Ok(RankReport {
        code: code.name(),
        m: c.size(),
        min_rank: rank as usize,
        argmin_difference: space.vector(&index),
        evaluations,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ZjReport {
    /// Components range over `[−l, l]`.
    pub l: i32,
    pub min_abs_det: f64,
    pub argmin: Vec<Complex64>,
    /// Nonzero vectors with `|det S| < 1e-9`.
    pub zero_dets: u64,
    pub evaluations: u64,
    /// Largest `|4√5·det S − ((1+2j)(A²−jC²) − (1−2j)(B²−jD²))|` over the grid.
    pub closed_form_deviation: f64,
}

/// Evaluates `det S(x)` of the proposed 2x2 code over every nonzero Gaussian
/// integer vector with components in `[−l, l]`.
pub fn theoretical_min_det_zj(l: i32) -> ZjReport {
    let side = (2 * l + 1) as usize;
    let total = side.pow(8);
    let values: Vec<f64> = (-l..=l).map(f64::from).collect();
    let four_sqrt5 = 4.0 * 5f64.sqrt();
    let mut report = ZjReport {
        l,
        min_abs_det: f64::INFINITY,
        argmin: Vec::new(),
        zero_dets: 0,
        evaluations: 0,
        closed_form_deviation: 0.0,
    };
    let mut x = [Complex64::new(0.0, 0.0); 4];
    for n in 0..total {
        let mut rem = n;
        let mut digits = [0usize; 8];
        for d in digits.iter_mut().rev() {
            *d = rem % side;
            rem /= side;
        }
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = Complex64::new(values[digits[2 * i]], values[digits[2 * i + 1]]);
        }
        if x.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
            continue;
        }
        let s = proposed_2x2_encode(&x);
        let det = det_square(s.as_slice(), 2);
        let dev = (det * four_sqrt5 - closed_form(&x)).norm();
        report.closed_form_deviation = report.closed_form_deviation.max(dev);
        report.evaluations += 1;
        let a = det.norm();
        if a < 1e-9 {
            report.zero_dets += 1;
        }
        if a < report.min_abs_det {
            report.min_abs_det = a;
            report.argmin = x.to_vec();
        }
    }
    report
}

/// `(1+2j)(A²−jC²) − (1−2j)(B²−jD²)` with `A = x₁+x₂`, `B = (x₁−x₂)*`,
/// `C = x₃+x₄`, `D = (x₃−x₄)*`.
fn closed_form(x: &[Complex64; 4]) -> Complex64 {
    let j = Complex64::new(0.0, 1.0);
    let a = x[0] + x[1];
    let b = (x[0] - x[1]).conj();
    let c = x[2] + x[3];
    let d = (x[2] - x[3]).conj();
    Complex64::new(1.0, 2.0) * (a * a - j * c * c) - Complex64::new(1.0, -2.0) * (b * b - j * d * d)
}

/// ML-decoding complexity as `(square QAM, non-rectangular QAM)` formulas.
pub fn complexity_formulas(code: CodeName) -> (&'static str, &'static str) {
    match code {
        CodeName::Proposed2x2 => ("2M^2 sqrt(M)", "2M^3"),
        CodeName::Golden => ("2M^2 sqrt(M)", "M^4"),
        CodeName::Proposed4x2 => ("4M^4 sqrt(M)", "4M^5"),
        CodeName::Alamouti | CodeName::Ciod2 | CodeName::Ciod4 => ("-", "-"),
    }
}

fn display_name(code: CodeName) -> &'static str {
    match code {
        CodeName::Ciod2 => "CIOD (2 antennas)",
        CodeName::Proposed2x2 => "Proposed 2x2 code",
        CodeName::Ciod4 => "CIOD (4 antennas)",
        CodeName::Proposed4x2 => "Proposed 4x2 code",
        CodeName::Alamouti => "Alamouti code",
        CodeName::Golden => "Golden code",
    }
}

/// Two-column min-det table in the layout used for 2x2 codes.
pub fn min_det_table(reports: &[MinDetReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<24} | {:>12} | {:>6}", "Code", "Min det", "M");
    let _ = writeln!(out, "{:-<24}-+-{:->12}-+-{:->6}", "", "", "");
    for r in reports {
        let value = if r.exhaustive {
            format!("{:.4}", r.delta_min)
        } else {
            format!("<= {:.4}", r.delta_min)
        };
        let _ = writeln!(out, "{:<24} | {:>12} | {:>6}", display_name(r.code), value, r.m);
    }
    out
}

/// Min det plus decoding complexity, in the layout used for 4x2 codes.
pub fn min_det_complexity_table(reports: &[MinDetReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<24} | {:>12} | {:>6} | {:>14} | {:>14}",
        "Code", "Min det", "M", "Square QAM", "Non-rect QAM"
    );
    let _ = writeln!(out, "{:-<24}-+-{:->12}-+-{:->6}-+-{:->14}-+-{:->14}", "", "", "", "", "");
    for r in reports {
        let (sq, nr) = complexity_formulas(r.code);
        let value = if r.exhaustive {
            format!("{:.4}", r.delta_min)
        } else {
            format!("<= {:.4}", r.delta_min)
        };
        let _ = writeln!(
            out,
            "{:<24} | {:>12} | {:>6} | {:>14} | {:>14}",
            display_name(r.code),
            value,
            r.m,
            sq,
            nr
        );
    }
    out
}
