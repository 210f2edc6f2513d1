//! Maximum-likelihood detection.
//!
//! [`exhaustive_ml`] is the reference: it walks every symbol vector in
//! lexicographic order. The fast decoders condition on the trailing symbols
//! with a real sphere decoder and resolve the leading symbols with 1-D scans
//! and hard limiting, relying on the zeros of `R`. All of them return the same
//! argmin, with ties broken towards the lexicographically smaller symbol
//! vector (real part before imaginary part, symbol by symbol).

use std::cmp::Ordering;
use std::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{build_equivalent_channel, EquivalentChannel};
use crate::codes::{CodeName, StbcCode};
use crate::constellation::{hard_limit, Constellation};
use crate::error::{Error, Result};
use crate::linalg::{vec_stack, vec_tilde, ComplexMatrix, RealMatrix};

/// Largest candidate count [`exhaustive_ml`] will enumerate.
pub const EXHAUSTIVE_LIMIT: f64 = 4_294_967_296.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    pub x_hat: Vec<Complex64>,
    /// `‖Y − H·encode(x_hat)‖_F²`.
    pub metric: f64,
    pub metric_computations: u64,
}

impl DecodeResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "x_hat": self.x_hat.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            "metric": self.metric,
            "metric_computations": self.metric_computations,
        })
    }
}

/// `y′ = Qᵀ ṽec(Y)` together with `R`, so that minimizing `‖y′ − R x̃‖²` is
/// equivalent to minimizing `‖Y − HS‖_F²`.
#[derive(Clone, Debug)]
pub struct ReducedObservation {
    pub y_prime: Vec<f64>,
    pub r: RealMatrix,
}

impl ReducedObservation {
    pub fn new(y: &ComplexMatrix, eq: &EquivalentChannel) -> Result<Self> {
        let stacked = vec_tilde(&vec_stack(y));
        if stacked.len() != eq.qr.q.rows() {
            return Err(Error::DimensionMismatch(format!(
                "observation has {} real entries, equivalent channel expects {}",
                stacked.len(),
                eq.qr.q.rows()
            )));
        }
        Ok(Self {
            y_prime: eq.qr.q.tr_mul_vec(&stacked),
            r: eq.qr.r.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.y_prime.len()
    }

    /// `Σ_{i ∈ rows} (y′_i − Σ_j r_ij x_j)²`, using only `j ≥ i`.
    pub fn partial_cost(&self, x: &[f64], rows: Range<usize>) -> f64 {
        rows.map(|i| {
            let fit: f64 = (i..self.dim()).map(|j| self.r[(i, j)] * x[j]).sum();
            (self.y_prime[i] - fit).powi(2)
        })
        .sum()
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).unwrap_or(Ordering::Equal) {
            Ordering::Equal => {}
            other => return other,
        }
    }
    Ordering::Equal
}

fn better(cost: f64, x: &[f64], best_cost: f64, best_x: Option<&[f64]>) -> bool {
    match best_x {
        None => true,
        Some(bx) => cost < best_cost || (cost == best_cost && lex_cmp(x, bx) == Ordering::Less),
    }
}

/// `‖Y − H·encode(x)‖_F²`.
pub fn ml_metric(y: &ComplexMatrix, h: &ComplexMatrix, code: &StbcCode, x: &[Complex64]) -> Result<f64> {
    let s = code.encode(x)?;
    let hs = h.try_mul(&s)?;
    if hs.rows() != y.rows() || hs.cols() != y.cols() {
        return Err(Error::DimensionMismatch(format!(
            "observation is {}x{}, H·S is {}x{}",
            y.rows(),
            y.cols(),
            hs.rows(),
            hs.cols()
        )));
    }
    Ok((y - &hs).norm_sqr())
}

/// Brute-force ML over all `M^k` symbol vectors.
pub fn exhaustive_ml(
    y: &ComplexMatrix,
    h: &ComplexMatrix,
    code: &StbcCode,
    constellation: &Constellation,
) -> Result<DecodeResult> {
    let k = code.k();
    let m = constellation.size();
    let size = (m as f64).powi(k as i32);
    if size > EXHAUSTIVE_LIMIT {
        return Err(Error::SearchTooLarge {
            size,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    if h.cols() != code.n_t() || y.rows() != h.rows() || y.cols() != code.t() {
        return Err(Error::DimensionMismatch(format!(
            "Y is {}x{}, H is {}x{}, {} needs n_t = {} and T = {}",
            y.rows(),
            y.cols(),
            h.rows(),
            h.cols(),
            code.name(),
            code.n_t(),
            code.t()
        )));
    }

    // contributions[i][p] = H · (A_{2i} Re p + A_{2i+1} Im p), flattened.
    let w = code.weights();
    let contributions: Vec<Vec<Vec<Complex64>>> = (0..k)
        .map(|i| {
            constellation
                .points()
                .iter()
                .map(|p| {
                    let mut s = ComplexMatrix::zeros(code.n_t(), code.t());
                    s.axpy(p.re, &w[2 * i]);
                    s.axpy(p.im, &w[2 * i + 1]);
                    (h * &s).as_slice().to_vec()
                })
                .collect()
        })
        .collect();

    let mut search = Exhaustive {
        contributions: &contributions,
        residuals: vec![y.as_slice().to_vec(); k],
        index: vec![0; k],
        best: f64::INFINITY,
        best_index: vec![0; k],
    };
    search.descend(0);

    let points = constellation.points();
    let x_hat: Vec<Complex64> = search.best_index.iter().map(|&i| points[i]).collect();
    Ok(DecodeResult {
        metric: ml_metric(y, h, code, &x_hat)?,
        x_hat,
        metric_computations: size as u64,
    })
}

struct Exhaustive<'a> {
    contributions: &'a [Vec<Vec<Complex64>>],
    /// `residuals[d]` is `Y` minus the contributions of symbols `0..d`.
    residuals: Vec<Vec<Complex64>>,
    index: Vec<usize>,
    best: f64,
    best_index: Vec<usize>,
}

impl Exhaustive<'_> {
    fn descend(&mut self, depth: usize) {
        let k = self.index.len();
        let options = &self.contributions[depth];
        if depth + 1 == k {
            let base = &self.residuals[depth];
            for (p, c) in options.iter().enumerate() {
                let cost: f64 = base.iter().zip(c).map(|(r, c)| (r - c).norm_sqr()).sum();
                if cost < self.best {
                    self.best = cost;
                    self.index[depth] = p;
                    self.best_index.copy_from_slice(&self.index);
                }
            }
            return;
        }
        for (p, c) in options.iter().enumerate() {
            let (head, tail) = self.residuals.split_at_mut(depth + 1);
            for ((next, r), c) in tail[0].iter_mut().zip(&head[depth]).zip(c) {
                *next = r - c;
            }
            self.index[depth] = p;
            self.descend(depth + 1);
        }
    }
}

/// Exact minimizer of `Σ_{i ∈ active} (y′_i − Σ_{j ∈ active} r_ij x_j)²` with
/// every `x_j` drawn from `levels`.
///
/// Schnorr-Euchner depth-first enumeration from the last active dimension,
/// starting with an infinite radius that shrinks at each leaf.
pub fn real_sphere_decode(obs: &ReducedObservation, levels: &[f64], active: Range<usize>) -> (Vec<f64>, f64) {
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut radius = f64::INFINITY;
    let mut sd = SphereSearch::new(obs, levels, active.clone());
    sd.run(&mut radius, &mut |x, cost| {
        if better(cost, x, best.as_ref().map_or(f64::INFINITY, |b| b.1), best.as_ref().map(|b| b.0.as_slice())) {
            best = Some((x.to_vec(), cost));
        }
        cost
    });
    best.expect("infinite radius reaches a leaf")
}

/// Depth-first tree search over the real dimensions `active` of `R`.
struct SphereSearch<'a> {
    obs: &'a ReducedObservation,
    levels: &'a [f64],
    active: Range<usize>,
    /// Candidate values, indexed by absolute dimension.
    x: Vec<f64>,
}

impl<'a> SphereSearch<'a> {
    fn new(obs: &'a ReducedObservation, levels: &'a [f64], active: Range<usize>) -> Self {
        Self {
            obs,
            levels,
            x: vec![0.0; obs.dim()],
            active,
        }
    }

    /// Calls `leaf(x_active, cost)` for every leaf inside the radius. The
    /// callback returns the new radius.
    fn run(&mut self, radius: &mut f64, leaf: &mut dyn FnMut(&[f64], f64) -> f64) {
        if self.active.is_empty() {
            *radius = leaf(&[], 0.0);
            return;
        }
        let top = self.active.end - 1;
        self.level(top, 0.0, radius, leaf);
    }

    fn level(&mut self, i: usize, partial: f64, radius: &mut f64, leaf: &mut dyn FnMut(&[f64], f64) -> f64) {
        let r = &self.obs.r;
        let rii = r[(i, i)];
        let interference: f64 = (i + 1..self.active.end).map(|j| r[(i, j)] * self.x[j]).sum();
        let target = self.obs.y_prime[i] - interference;
        let center = target / rii;

        let mut order: Vec<(f64, f64)> = self
            .levels
            .iter()
            .map(|&v| (v, (target - rii * v).powi(2)))
            .collect();
        // Closest first; equal distances keep the smaller level first.
        order.sort_by(|a, b| {
            (a.0 - center)
                .abs()
                .partial_cmp(&(b.0 - center).abs())
                .unwrap_or(Ordering::Equal)
                .then(a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal))
        });

        for (v, inc) in order {
            let cost = partial + inc;
            if cost > *radius {
                break;
            }
            self.x[i] = v;
            if i == self.active.start {
                *radius = leaf(&self.x[self.active.clone()], cost);
            } else {
                self.level(i - 1, cost, radius, leaf);
            }
        }
    }
}

/// How a code's leading symbols decouple once the trailing ones are fixed.
#[derive(Clone, Copy, Debug)]
struct ConditionalPlan {
    /// Number of leading complex symbols resolved at each leaf.
    inner_symbols: usize,
    /// Real dimension pairs `(lead, scanned)`: `scanned` is swept over the PAM
    /// levels and `lead` is hard limited. Empty if the code has no square-QAM
    /// shortcut.
    pairs: &'static [(usize, usize)],
    /// Whether a non-square constellation may be decoded symbol by symbol.
    symbolwise: bool,
}

const PROPOSED_2X2_PLAN: ConditionalPlan = ConditionalPlan {
    inner_symbols: 2,
    pairs: &[(0, 1), (2, 3)],
    symbolwise: true,
};

const PROPOSED_4X2_PLAN: ConditionalPlan = ConditionalPlan {
    inner_symbols: 4,
    pairs: &[(0, 1), (2, 3), (4, 5), (6, 7)],
    symbolwise: true,
};

const GOLDEN_PLAN: ConditionalPlan = ConditionalPlan {
    inner_symbols: 2,
    pairs: &[(0, 2), (1, 3)],
    symbolwise: false,
};

fn plan_for(code: CodeName) -> Option<ConditionalPlan> {
    match code {
        CodeName::Proposed2x2 => Some(PROPOSED_2X2_PLAN),
        CodeName::Proposed4x2 => Some(PROPOSED_4X2_PLAN),
        CodeName::Golden => Some(GOLDEN_PLAN),
        _ => None,
    }
}

/// Conditional ML decoder for one channel realization. The QR factorization is
/// computed once and reused for every observation.
#[derive(Clone, Debug)]
pub struct FastDecoder {
    code: StbcCode,
    h: ComplexMatrix,
    eq: EquivalentChannel,
    plan: ConditionalPlan,
}

impl FastDecoder {
    pub fn new(code: &StbcCode, h: &ComplexMatrix) -> Result<Self> {
        let plan = plan_for(code.name())
            .ok_or_else(|| Error::Config(format!("no conditional decoder for {}", code.name())))?;
        Ok(Self {
            code: code.clone(),
            h: h.clone(),
            eq: build_equivalent_channel(h, code)?,
            plan,
        })
    }

    pub fn equivalent_channel(&self) -> &EquivalentChannel {
        &self.eq
    }

    pub fn decode(&self, y: &ComplexMatrix, constellation: &Constellation) -> Result<DecodeResult> {
        let obs = ReducedObservation::new(y, &self.eq)?;
        let (x_tilde, count) = if constellation.is_square() {
            self.decode_square(&obs, constellation)
        } else if self.plan.symbolwise {
            self.decode_symbolwise(&obs, constellation)
        } else {
            return Err(Error::ConstellationKind(format!(
                "{} has no simplified decoder for non-square constellations; use exhaustive ML",
                self.code.name()
            )));
        };
        let x_hat: Vec<Complex64> = x_tilde
            .chunks(2)
            .map(|c| Complex64::new(c[0], c[1]))
            .collect();
        Ok(DecodeResult {
            metric: ml_metric(y, &self.h, &self.code, &x_hat)?,
            x_hat,
            metric_computations: count,
        })
    }

    /// Real SD over the trailing dimensions; at each leaf every pair sweeps its
    /// scanned dimension over `√M` levels and hard limits its lead dimension.
    fn decode_square(&self, obs: &ReducedObservation, c: &Constellation) -> (Vec<f64>, u64) {
        let n = obs.dim();
        let split = 2 * self.plan.inner_symbols;
        let levels = c.pam_levels();
        let per_leaf = (self.plan.pairs.len() * levels.len()) as u64;

        let mut best_x: Option<Vec<f64>> = None;
        let mut best_cost = f64::INFINITY;
        let mut count = 0u64;
        let mut full = vec![0.0; n];
        let mut radius = f64::INFINITY;
        let mut sd = SphereSearch::new(obs, levels, split..n);
        sd.run(&mut radius, &mut |outer, outer_cost| {
            count += per_leaf;
            full[split..].copy_from_slice(outer);
            let mut total = outer_cost;
            for &(lead, scanned) in self.plan.pairs {
                let (xl, xs, cost) = best_pair(obs, &full, split, lead, scanned, levels);
                full[lead] = xl;
                full[scanned] = xs;
                total += cost;
            }
            if better(total, &full, best_cost, best_x.as_deref()) {
                best_cost = total;
                best_x = Some(full.clone());
            }
            best_cost
        });
        (best_x.expect("infinite radius reaches a leaf"), count)
    }

    /// Enumerates the trailing complex symbols over the constellation; at each
    /// leaf every leading symbol is scanned over all `M` points independently.
    fn decode_symbolwise(&self, obs: &ReducedObservation, c: &Constellation) -> (Vec<f64>, u64) {
        let k = self.code.k();
        let inner = self.plan.inner_symbols;
        let mut search = SymbolSearch {
            obs,
            points: c.points(),
            inner,
            x: vec![0.0; 2 * k],
            best_x: None,
            best_cost: f64::INFINITY,
            count: 0,
        };
        search.level(k - 1, 0.0);
        (search.best_x.expect("infinite radius reaches a leaf"), search.count)
    }
}

/// Minimizes rows `lead` and `scanned` of `‖y′ − R x̃‖²` with the trailing
/// dimensions fixed. Returns `(x_lead, x_scanned, cost)`.
fn best_pair(
    obs: &ReducedObservation,
    x: &[f64],
    split: usize,
    lead: usize,
    scanned: usize,
    levels: &[f64],
) -> (f64, f64, f64) {
    let r = &obs.r;
    let n = obs.dim();
    let fixed = |row: usize| -> f64 { obs.y_prime[row] - (split..n).map(|j| r[(row, j)] * x[j]).sum::<f64>() };
    let b_lead = fixed(lead);
    let b_scan = fixed(scanned);
    let (r_ll, r_ls, r_ss) = (r[(lead, lead)], r[(lead, scanned)], r[(scanned, scanned)]);

    let mut best = (0.0, 0.0, f64::INFINITY);
    for &v in levels {
        let scan_cost = (b_scan - r_ss * v).powi(2);
        let target = b_lead - r_ls * v;
        let mut xl = hard_limit(target / r_ll, levels);
        let mut lead_cost = (target - r_ll * xl).powi(2);
        // Keep the smaller level on an exact tie.
        if xl > levels[0] {
            let lower = xl - 2.0;
            let lower_cost = (target - r_ll * lower).powi(2);
            if lower_cost <= lead_cost {
                xl = lower;
                lead_cost = lower_cost;
            }
        }
        let cost = scan_cost + lead_cost;
        let wins = cost < best.2 || (cost == best.2 && (xl, v) < (best.0, best.1));
        if wins {
            best = (xl, v, cost);
        }
    }
    best
}

struct SymbolSearch<'a> {
    obs: &'a ReducedObservation,
    points: &'a [Complex64],
    inner: usize,
    x: Vec<f64>,
    best_x: Option<Vec<f64>>,
    best_cost: f64,
    count: u64,
}

impl SymbolSearch<'_> {
    fn row_cost(&self, row: usize, xi: f64, xq: f64, sym: usize) -> f64 {
        let r = &self.obs.r;
        let n = self.obs.dim();
        let (d_i, d_q) = (2 * sym, 2 * sym + 1);
        // Leading symbols are decoupled from each other; skip their stale values.
        let from = if sym < self.inner { (d_q + 1).max(2 * self.inner) } else { d_q + 1 };
        let rest: f64 = (from..n).map(|j| r[(row, j)] * self.x[j]).sum();
        let own = if row == d_i { r[(row, d_i)] * xi } else { 0.0 } + r[(row, d_q)] * xq;
        (self.obs.y_prime[row] - rest - own).powi(2)
    }

    fn symbol_cost(&self, sym: usize, p: Complex64) -> f64 {
        self.row_cost(2 * sym, p.re, p.im, sym) + self.row_cost(2 * sym + 1, p.re, p.im, sym)
    }

    fn level(&mut self, sym: usize, partial: f64) {
        let mut order: Vec<(usize, f64)> = self
            .points
            .iter()
            .enumerate()
            .map(|(idx, &p)| (idx, self.symbol_cost(sym, p)))
            .collect();
        order.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));

        for (idx, inc) in order {
            let cost = partial + inc;
            if cost > self.best_cost {
                break;
            }
            let p = self.points[idx];
            self.x[2 * sym] = p.re;
            self.x[2 * sym + 1] = p.im;
            if sym == self.inner {
                self.leaf(cost);
            } else {
                self.level(sym - 1, cost);
            }
        }
    }

    fn leaf(&mut self, outer_cost: f64) {
        self.count += (self.inner * self.points.len()) as u64;
        let mut total = outer_cost;
        for sym in 0..self.inner {
            // Points are sorted by (re, im), so the first minimum is the
            // lexicographically smallest.
            let mut best = (Complex64::new(0.0, 0.0), f64::INFINITY);
            for &p in self.points {
                let cost = self.symbol_cost(sym, p);
                if cost < best.1 {
                    best = (p, cost);
                }
            }
            self.x[2 * sym] = best.0.re;
            self.x[2 * sym + 1] = best.0.im;
            total += best.1;
        }
        if better(total, &self.x, self.best_cost, self.best_x.as_deref()) {
            self.best_cost = total;
            self.best_x = Some(self.x.clone());
        }
    }
}

/// Conditional decoder for the proposed 2x2 code.
pub fn decode_proposed_2x2(y: &ComplexMatrix, h: &ComplexMatrix, c: &Constellation) -> Result<DecodeResult> {
    FastDecoder::new(&StbcCode::new(CodeName::Proposed2x2), h)?.decode(y, c)
}

/// Conditional decoder for the proposed 4x2 code.
pub fn decode_proposed_4x2(y: &ComplexMatrix, h: &ComplexMatrix, c: &Constellation) -> Result<DecodeResult> {
    FastDecoder::new(&StbcCode::new(CodeName::Proposed4x2), h)?.decode(y, c)
}

/// Conditional decoder for the Golden code. Square QAM only.
pub fn decode_golden_fast(y: &ComplexMatrix, h: &ComplexMatrix, c: &Constellation) -> Result<DecodeResult> {
    FastDecoder::new(&StbcCode::new(CodeName::Golden), h)?.decode(y, c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    Fast,
    Ml,
}

impl DecoderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DecoderKind::Fast => "fast",
            DecoderKind::Ml => "ml",
        }
    }

    /// Whether this decoder can handle `code` with `constellation`.
    pub fn check(self, code: CodeName, constellation: &Constellation) -> Result<()> {
        match self {
            DecoderKind::Ml => Ok(()),
            DecoderKind::Fast => match plan_for(code) {
                None => Err(Error::Config(format!("no fast decoder for {code}; use --decoder ml"))),
                Some(plan) if !constellation.is_square() && !plan.symbolwise => Err(Error::Config(format!(
                    "{code} has no fast decoder for non-square constellations; use --decoder ml"
                ))),
                Some(_) => Ok(()),
            },
        }
    }
}

/// Upper bound on `metric_computations` for the fast decoder, if one exists.
pub fn complexity_bound(code: CodeName, constellation: &Constellation) -> Option<u64> {
    let m = constellation.size() as u64;
    let sqrt_m = constellation.pam_levels().len() as u64;
    match (code, constellation.is_square()) {
        (CodeName::Proposed2x2 | CodeName::Golden, true) => Some(2 * m * m * sqrt_m),
        (CodeName::Proposed2x2, false) => Some(2 * m.pow(3)),
        (CodeName::Proposed4x2, true) => Some(4 * m.pow(4) * sqrt_m),
        (CodeName::Proposed4x2, false) => Some(4 * m.pow(5)),
        _ => None,
    }
}

/// Decodes with the chosen decoder.
pub fn decode(
    kind: DecoderKind,
    code: &StbcCode,
    y: &ComplexMatrix,
    h: &ComplexMatrix,
    constellation: &Constellation,
) -> Result<DecodeResult> {
    match kind {
        DecoderKind::Ml => exhaustive_ml(y, h, code, constellation),
        DecoderKind::Fast => FastDecoder::new(code, h)?.decode(y, constellation),
    }
}
