//! Real-valued equivalent channel `H_eq = (I_T ⊗ Ȟ) G`, its QR factorization,
//! and the sparsity structure of `R` that the conditional decoders exploit.
//!
//! Column `2i` of `H_eq` multiplies `x_{i,I}` and column `2i + 1` multiplies
//! `x_{i,Q}` (0-based), the same order as the generator matrix.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::codes::{CodeName, StbcCode};
use crate::error::{Error, Result};
use crate::linalg::{check_expand, dot, gram_schmidt_qr, norm, ComplexMatrix, QrFactorization, RealMatrix};

/// Draws an `n_r x n_t` matrix with i.i.d. `CN(0, 1)` entries.
pub fn random_channel<R: Rng + ?Sized>(rng: &mut R, n_r: usize, n_t: usize) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(n_r, n_t, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * s, im * s)
    })
}

#[derive(Clone, Debug)]
pub struct EquivalentChannel {
    pub h_eq: RealMatrix,
    pub qr: QrFactorization,
    pub code: CodeName,
}

/// Builds `H_eq` for channel `h` (`n_r x n_t`) and factors it.
pub fn build_equivalent_channel(h: &ComplexMatrix, code: &StbcCode) -> Result<EquivalentChannel> {
    let h_eq = equivalent_matrix(h, code)?;
    let qr = gram_schmidt_qr(&h_eq)?;
    Ok(EquivalentChannel {
        h_eq,
        qr,
        code: code.name(),
    })
}

/// `(I_T ⊗ Ȟ) G` without the factorization.
pub fn equivalent_matrix(h: &ComplexMatrix, code: &StbcCode) -> Result<RealMatrix> {
    if h.cols() != code.n_t() {
        return Err(Error::DimensionMismatch(format!(
            "channel has {} transmit antennas, {} needs {}",
            h.cols(),
            code.name(),
            code.n_t()
        )));
    }
    let lifted = check_expand(h).kron_identity_left(code.t());
    lifted.try_mul(code.generator())
}

/// Index pairs `(i, j)`, `i < j`, 0-based, whose weight matrices satisfy
/// `A_i A_jᴴ + A_j A_iᴴ = 0`.
pub fn anticommutation_pairs(code: &StbcCode) -> Vec<(usize, usize)> {
    let w = code.weights();
    let mut pairs = Vec::new();
    for i in 0..w.len() {
        for j in i + 1..w.len() {
            let sum = &(&w[i] * &w[j].hermitian()) + &(&w[j] * &w[i].hermitian());
            if sum.max_abs() < 1e-12 {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// Structural-zero mask of an upper triangular `n x n` matrix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SparsityPattern {
    n: usize,
    /// Row-major; `true` marks a structural zero.
    mask: Vec<Vec<bool>>,
}

impl SparsityPattern {
    /// Upper triangle dense, strict lower triangle zero.
    pub fn upper_triangular(n: usize) -> Self {
        let mask = (0..n).map(|i| (0..n).map(|j| j < i).collect()).collect();
        Self { n, mask }
    }

    /// Upper triangular pattern with additional zeros at the given 0-based
    /// above-diagonal positions.
    pub fn with_zeros(n: usize, zeros: &[(usize, usize)]) -> Self {
        let mut p = Self::upper_triangular(n);
        for &(i, j) in zeros {
            p.mask[i][j] = true;
        }
        p
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self, i: usize, j: usize) -> bool {
        self.mask[i][j]
    }

    /// Above-diagonal structural zeros, 0-based.
    pub fn upper_zeros(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.mask[i][j] {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Leading `m x m` block.
    pub fn leading_block(&self, m: usize) -> Self {
        Self {
            n: m,
            mask: self.mask[..m].iter().map(|row| row[..m].to_vec()).collect(),
        }
    }

    /// One line per row, `a` for a possibly nonzero entry and `0` for a zero.
    pub fn to_ascii(&self) -> String {
        let mut out = String::new();
        for row in &self.mask {
            let cells: Vec<&str> = row.iter().map(|&z| if z { "0" } else { "a" }).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("pattern serializes")
    }
}

/// Largest `|R_ij| / max|H_eq|` seen for each entry over `trials` random
/// channels.
pub fn r_magnitudes<R: Rng + ?Sized>(code: &StbcCode, n_r: usize, trials: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    if trials == 0 {
        return Err(Error::Config("pattern estimation needs at least one trial".into()));
    }
    let n = 2 * code.k();
    let mut peak = vec![vec![0.0f64; n]; n];
    for _ in 0..trials {
        let h = random_channel(rng, n_r, code.n_t());
        let eq = build_equivalent_channel(&h, code)?;
        let scale = eq.h_eq.max_abs();
        for (i, row) in peak.iter_mut().enumerate() {
            for (j, p) in row.iter_mut().enumerate() {
                *p = p.max(eq.qr.r[(i, j)].abs() / scale);
            }
        }
    }
    Ok(peak)
}

/// Estimates which entries of `R` vanish for every channel realization.
///
/// An entry is a structural zero iff `|R_ij| < zero_tol · max|H_eq|` in every
/// trial; one large observation marks it dense.
pub fn observed_r_pattern<R: Rng + ?Sized>(
    code: &StbcCode,
    n_r: usize,
    trials: usize,
    zero_tol: f64,
    rng: &mut R,
) -> Result<SparsityPattern> {
    let peak = r_magnitudes(code, n_r, trials, rng)?;
    Ok(pattern_from_magnitudes(&peak, zero_tol))
}

/// Zero wherever the peak relative magnitude stays below `zero_tol`.
pub fn pattern_from_magnitudes(peak: &[Vec<f64>], zero_tol: f64) -> SparsityPattern {
    SparsityPattern {
        n: peak.len(),
        mask: peak.iter().map(|row| row.iter().map(|&p| p < zero_tol).collect()).collect(),
    }
}

/// The `R` structures the conditional decoders rely on, written out by hand.
pub fn expected_r_pattern(code: CodeName) -> Option<SparsityPattern> {
    match code {
        CodeName::Proposed2x2 => Some(SparsityPattern::with_zeros(8, &[(0, 2), (0, 3), (1, 2), (1, 3)])),
        CodeName::Golden => Some(SparsityPattern::with_zeros(8, &[(0, 1), (0, 3), (1, 2), (2, 3)])),
        CodeName::Proposed4x2 => {
            // Leading 8x8 block is 2x2 block diagonal.
            let mut zeros = Vec::new();
            for i in 0..8 {
                for j in i + 1..8 {
                    if !(i % 2 == 0 && j == i + 1) {
                        zeros.push((i, j));
                    }
                }
            }
            Some(SparsityPattern::with_zeros(16, &zeros))
        }
        _ => None,
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Theorem1Report {
    /// Anticommuting weight pairs checked (0-based).
    pub pairs: Vec<(usize, usize)>,
    /// `max |<h_i, h_j>| / (‖h_i‖ ‖h_j‖)` over the pairs.
    pub max_column_violation: f64,
    /// Pairs `(i, j)` where `h_j` is orthogonal to all of `h_0..=h_i`, so
    /// `<q_i, h_j>` must vanish as well.
    pub r_zero_pairs: Vec<(usize, usize)>,
    /// `max |<q_i, h_j>| / ‖h_j‖` over `r_zero_pairs`.
    pub max_q_violation: f64,
}

impl Theorem1Report {
    pub fn max_violation(&self) -> f64 {
        self.max_column_violation.max(self.max_q_violation)
    }
}

/// Checks numerically that anticommuting weight pairs give orthogonal
/// columns of `H_eq`.
pub fn theorem1_check(code: &StbcCode, h: &ComplexMatrix) -> Result<Theorem1Report> {
    let pairs = anticommutation_pairs(code);
    if pairs.is_empty() {
        return Ok(Theorem1Report::default());
    }
    let eq = build_equivalent_channel(h, code)?;
    let n = 2 * code.k();
    let cols: Vec<Vec<f64>> = (0..n).map(|j| eq.h_eq.column(j)).collect();
    let qs: Vec<Vec<f64>> = (0..n).map(|j| eq.qr.q.column(j)).collect();

    let mut report = Theorem1Report {
        pairs: pairs.clone(),
        ..Default::default()
    };
    for &(i, j) in &pairs {
        let v = dot(&cols[i], &cols[j]).abs() / (norm(&cols[i]) * norm(&cols[j]));
        report.max_column_violation = report.max_column_violation.max(v);
    }
    for j in 0..n {
        for i in 0..j {
            if (0..=i).all(|l| pairs.contains(&(l, j))) {
                report.r_zero_pairs.push((i, j));
                let v = dot(&qs[i], &cols[j]).abs() / norm(&cols[j]);
                report.max_q_violation = report.max_q_violation.max(v);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{vec_stack, vec_tilde};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_symbols(rng: &mut ChaCha8Rng, k: usize) -> Vec<Complex64> {
        (0..k)
            .map(|_| Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)))
            .collect()
    }

    #[test]
    fn identity_channel_gives_generator() {
        let code = StbcCode::new(CodeName::Proposed2x2);
        let eq = build_equivalent_channel(&ComplexMatrix::identity(2), &code).unwrap();
        assert_eq!(eq.h_eq, *code.generator());
    }

    #[test]
    fn equivalent_model_matches_direct_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for name in CodeName::ALL {
            let code = StbcCode::new(name);
            for _ in 0..50 {
                let h = random_channel(&mut rng, 2, code.n_t());
                let x = random_symbols(&mut rng, code.k());
                let eq = build_equivalent_channel(&h, &code).unwrap();
                let hs = &h * &code.encode(&x).unwrap();
                let direct = vec_tilde(&vec_stack(&hs));
                let via_eq = eq.h_eq.mul_vec(&vec_tilde(&x));
                let dev = direct.iter().zip(&via_eq).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(dev < 1e-10, "{name}: {dev}");
                assert!((norm(&via_eq) - hs.norm_sqr().sqrt()).abs() < 1e-10);
                assert!(eq.qr.reconstruct().max_abs_diff(&eq.h_eq) < 1e-10 * eq.h_eq.max_abs());
            }
        }
    }

    #[test]
    fn channel_dimension_is_checked() {
        let code = StbcCode::new(CodeName::Proposed4x2);
        assert!(matches!(
            build_equivalent_channel(&ComplexMatrix::identity(2), &code),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn proposed_2x2_orthogonal_columns() {
        let code = StbcCode::new(CodeName::Proposed2x2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let h = random_channel(&mut rng, 2, 2);
            let eq = build_equivalent_channel(&h, &code).unwrap();
            for (i, j) in [(0, 2), (0, 3), (1, 2), (1, 3)] {
                assert!(dot(&eq.h_eq.column(i), &eq.h_eq.column(j)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn proposed_2x2_anticommuting_pairs() {
        let pairs = anticommutation_pairs(&StbcCode::new(CodeName::Proposed2x2));
        let leading: Vec<_> = pairs.iter().copied().filter(|&(_, j)| j < 4).collect();
        assert_eq!(leading, vec![(0, 2), (0, 3), (1, 2), (1, 3)]);
        // The second CIOD layer anticommutes internally in the same way.
        let trailing: Vec<_> = pairs.iter().copied().filter(|&(i, _)| i >= 4).collect();
        assert_eq!(trailing, vec![(4, 6), (4, 7), (5, 6), (5, 7)]);
        assert_eq!(pairs.len(), 8);
    }

    #[test]
    fn proposed_4x2_anticommuting_pairs() {
        let pairs = anticommutation_pairs(&StbcCode::new(CodeName::Proposed4x2));
        let mut expected = Vec::new();
        for i in 0..8 {
            for j in i + 1..8 {
                if !(i % 2 == 0 && j == i + 1) {
                    expected.push((i, j));
                }
            }
        }
        let leading: Vec<_> = pairs.iter().copied().filter(|&(_, j)| j < 8).collect();
        assert_eq!(leading, expected);
    }

    #[test]
    fn alamouti_all_pairs_anticommute() {
        let pairs = anticommutation_pairs(&StbcCode::new(CodeName::Alamouti));
        assert_eq!(pairs, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
    }

    #[test]
    fn theorem1_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for name in CodeName::ALL {
            let code = StbcCode::new(name);
            for _ in 0..100 {
                let h = random_channel(&mut rng, 2, code.n_t());
                let rep = theorem1_check(&code, &h).unwrap();
                assert!(rep.max_violation() < 1e-10, "{name}: {rep:?}");
            }
        }
    }

    #[test]
    fn alamouti_equivalent_channel_is_orthogonal() {
        let code = StbcCode::new(CodeName::Alamouti);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let h = random_channel(&mut rng, 2, 2);
            let heq = equivalent_matrix(&h, &code).unwrap();
            let gram = &heq.transpose() * &heq;
            for i in 0..4 {
                for j in 0..4 {
                    if i != j {
                        assert!(gram[(i, j)].abs() < 1e-10 * gram[(i, i)]);
                    }
                }
            }
        }
    }

    #[test]
    fn empty_report_has_no_violation() {
        let rep = Theorem1Report::default();
        assert!(rep.pairs.is_empty() && rep.r_zero_pairs.is_empty());
        assert_eq!(rep.max_violation(), 0.0);
    }

    #[test]
    fn printed_zeros_are_structural() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for name in [CodeName::Proposed2x2, CodeName::Golden, CodeName::Proposed4x2] {
            let code = StbcCode::new(name);
            let observed = observed_r_pattern(&code, 2, 100, 1e-9, &mut rng).unwrap();
            let printed = expected_r_pattern(name).unwrap();
            for (i, j) in printed.upper_zeros() {
                assert!(observed.is_zero(i, j), "{name} ({i},{j})\n{}", observed.to_ascii());
            }
        }
    }

    #[test]
    fn observed_extra_zeros_come_from_trailing_layer_pairs() {
        // Beyond the printed structures, the second coordinate-interleaved
        // layer anticommutes with itself, which zeroes matching entries of the
        // trailing block of R.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let cases = [
            (CodeName::Proposed2x2, vec![(4, 6), (4, 7), (5, 6), (5, 7)]),
            (CodeName::Golden, vec![(4, 5), (4, 7), (5, 6), (6, 7)]),
        ];
        for (name, extra) in cases {
            let code = StbcCode::new(name);
            let observed = observed_r_pattern(&code, 2, 100, 1e-9, &mut rng).unwrap();
            let mut zeros = expected_r_pattern(name).unwrap().upper_zeros();
            zeros.extend(extra.iter().copied());
            assert_eq!(observed, SparsityPattern::with_zeros(8, &zeros), "{name}");
            let pairs = anticommutation_pairs(&code);
            assert!(extra.iter().all(|p| pairs.contains(p)));
        }
        let code = StbcCode::new(CodeName::Proposed4x2);
        let observed = observed_r_pattern(&code, 2, 100, 1e-9, &mut rng).unwrap();
        assert_eq!(observed.leading_block(8), expected_r_pattern(CodeName::Proposed4x2).unwrap().leading_block(8));
        for i in 8..16 {
            for j in i + 1..16 {
                assert_eq!(observed.is_zero(i, j), !(i % 2 == 0 && j == i + 1), "({i},{j})");
            }
        }
    }

    #[test]
    fn ascii_rendering() {
        let p = SparsityPattern::with_zeros(3, &[(0, 2)]);
        assert_eq!(p.to_ascii(), "a a 0\n0 a a\n0 0 a\n");
        let j = p.to_json();
        assert_eq!(j["n"], 3);
        assert_eq!(j["mask"][0][2], true);
    }

    #[test]
    fn zero_trials_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let code = StbcCode::new(CodeName::Golden);
        assert!(observed_r_pattern(&code, 2, 0, 1e-9, &mut rng).is_err());
    }
}
