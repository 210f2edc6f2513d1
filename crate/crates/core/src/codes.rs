//! Space-time block codes as data: direct encoders, weight (linear dispersion)
//! matrices and real generator matrices.
//!
//! Every code takes the *unrotated* integer symbol vector `x` as its public
//! input. Codes built on coordinate interleaving rotate internally by `θ_g`
//! before interleaving, so the generator matrix maps `x̃` (not the rotated
//! symbols) to the stacked codeword.

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constellation::{theta_g, Constellation};
use crate::error::{Error, Result};
use crate::linalg::{vec_stack, vec_tilde, ComplexMatrix, RealMatrix};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const J: Complex64 = Complex64::new(0.0, 1.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Registry names of the implemented codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeName {
    Ciod2,
    Proposed2x2,
    Ciod4,
    Proposed4x2,
    Alamouti,
    Golden,
}

impl CodeName {
    pub const ALL: [CodeName; 6] = [
        CodeName::Ciod2,
        CodeName::Proposed2x2,
        CodeName::Ciod4,
        CodeName::Proposed4x2,
        CodeName::Alamouti,
        CodeName::Golden,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CodeName::Ciod2 => "ciod2",
            CodeName::Proposed2x2 => "proposed2x2",
            CodeName::Ciod4 => "ciod4",
            CodeName::Proposed4x2 => "proposed4x2",
            CodeName::Alamouti => "alamouti",
            CodeName::Golden => "golden",
        }
    }
}

impl fmt::Display for CodeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CodeName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CodeName::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnknownCode(s.to_string()))
    }
}

/// A linear STBC: `S = Σ A_{2i-1} x_iI + A_{2i} x_iQ`.
#[derive(Clone, Debug)]
pub struct StbcCode {
    name: CodeName,
    n_t: usize,
    t: usize,
    k: usize,
    /// Angle applied to `x` before interleaving (0 for codes that don't rotate).
    rotation: f64,
    permutation: RealMatrix,
    weights: Vec<ComplexMatrix>,
    generator: RealMatrix,
}

impl StbcCode {
    pub fn new(name: CodeName) -> Self {
        match name {
            CodeName::Ciod2 => Self::ciod2_with_rotation(theta_g()),
            CodeName::Ciod4 => Self::ciod4_with_rotation(theta_g()),
            CodeName::Proposed2x2 => Self::build(name, 2, 2, 4, theta_g(), swap_permutation(2)),
            CodeName::Proposed4x2 => Self::build(name, 4, 4, 8, theta_g(), swap_permutation(4)),
            CodeName::Alamouti => Self::build(name, 2, 2, 2, 0.0, RealMatrix::identity(2)),
            CodeName::Golden => Self::build(name, 2, 2, 4, 0.0, RealMatrix::identity(2)),
        }
    }

    /// Looks a code up by its registry name.
    pub fn by_name(name: &str) -> Result<Self> {
        Ok(Self::new(name.parse()?))
    }

    /// Two-antenna CIOD whose symbols are rotated by `angle` before interleaving.
    pub fn ciod2_with_rotation(angle: f64) -> Self {
        Self::build(CodeName::Ciod2, 2, 2, 2, angle, RealMatrix::identity(2))
    }

    /// Four-antenna CIOD whose symbols are rotated by `angle` before interleaving.
    pub fn ciod4_with_rotation(angle: f64) -> Self {
        Self::build(CodeName::Ciod4, 4, 4, 4, angle, RealMatrix::identity(4))
    }

    fn build(name: CodeName, n_t: usize, t: usize, k: usize, rotation: f64, permutation: RealMatrix) -> Self {
        let mut code = Self {
            name,
            n_t,
            t,
            k,
            rotation,
            permutation,
            weights: Vec::new(),
            generator: RealMatrix::zeros(0, 0),
        };
        code.weights = (0..2 * k)
            .map(|l| {
                let mut x = vec![ZERO; k];
                x[l / 2] = if l % 2 == 0 { re(1.0) } else { J };
                code.encode_direct(&x)
            })
            .collect();
        let columns: Vec<Vec<f64>> = code.weights.iter().map(|a| vec_tilde(&vec_stack(a))).collect();
        code.generator = RealMatrix::from_columns(&columns);
        code
    }

    pub fn name(&self) -> CodeName {
        self.name
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    /// Channel uses per block.
    pub fn t(&self) -> usize {
        self.t
    }

    /// Complex symbols per block.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rotation(&self) -> f64 {
        self.rotation
    }

    pub fn permutation(&self) -> &RealMatrix {
        &self.permutation
    }

    /// Symbols per channel use.
    pub fn rate(&self) -> f64 {
        self.k as f64 / self.t as f64
    }

    /// `E‖S‖_F²` for i.i.d. uniform symbols from `c`, i.e. `(E_s / 2)·‖G‖_F²`.
    /// Relies on the constellation being symmetric with uncorrelated parts.
    pub fn mean_energy(&self, c: &Constellation) -> f64 {
        0.5 * c.average_energy() * self.generator.frobenius_sqr()
    }

    /// The `2k` weight matrices, ordered `x_1I, x_1Q, …, x_kQ`.
    pub fn weights(&self) -> &[ComplexMatrix] {
        &self.weights
    }

    /// `2·n_t·T × 2k` real generator matrix.
    pub fn generator(&self) -> &RealMatrix {
        &self.generator
    }

    /// Encodes the integer symbol vector with the code's direct formula.
    pub fn encode(&self, x: &[Complex64]) -> Result<ComplexMatrix> {
        if x.len() != self.k {
            return Err(Error::SymbolCount {
                code: self.name.to_string(),
                expected: self.k,
                got: x.len(),
            });
        }
        Ok(self.encode_direct(x))
    }

    /// Encodes through the weight matrices: `Σ A_l x̃_l`.
    pub fn encode_linear(&self, x_tilde: &[f64]) -> ComplexMatrix {
        assert_eq!(x_tilde.len(), 2 * self.k);
        let mut s = ComplexMatrix::zeros(self.n_t, self.t);
        for (a, &v) in self.weights.iter().zip(x_tilde) {
            if v != 0.0 {
                s.axpy(v, a);
            }
        }
        s
    }

    fn encode_direct(&self, x: &[Complex64]) -> ComplexMatrix {
        let w = Complex64::from_polar(1.0, self.rotation);
        match self.name {
            CodeName::Ciod2 => ciod2_encode(w * x[0], w * x[1]),
            CodeName::Ciod4 => ciod4_encode(&[w * x[0], w * x[1], w * x[2], w * x[3]]),
            CodeName::Proposed2x2 => proposed_2x2_encode(&[x[0], x[1], x[2], x[3]]),
            CodeName::Proposed4x2 => {
                let mut a = [ZERO; 8];
                a.copy_from_slice(x);
                proposed_4x2_encode(&a)
            }
            CodeName::Alamouti => alamouti_encode(x[0], x[1]),
            CodeName::Golden => golden_encode(&[x[0], x[1], x[2], x[3]]),
        }
    }
}

/// Cyclic block swap: exchanges the two halves of the columns.
fn swap_permutation(n: usize) -> RealMatrix {
    let h = n / 2;
    RealMatrix::from_fn(n, n, |i, j| if (i + h) % n == j { 1.0 } else { 0.0 })
}

fn apply_permutation(x: &ComplexMatrix, p: &RealMatrix) -> ComplexMatrix {
    let pc = ComplexMatrix::from_fn(p.rows(), p.cols(), |i, j| re(p[(i, j)]));
    x * &pc
}

/// Two-antenna coordinate-interleaved orthogonal design. Inputs are already rotated.
pub fn ciod2_encode(s1: Complex64, s2: Complex64) -> ComplexMatrix {
    ComplexMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(s1.re, s2.im),
            ZERO,
            ZERO,
            Complex64::new(s2.re, s1.im),
        ],
    )
}

/// Four-antenna coordinate-interleaved orthogonal design. Inputs are already rotated.
pub fn ciod4_encode(s: &[Complex64; 4]) -> ComplexMatrix {
    let [s1, s2, s3, s4] = *s;
    let c = Complex64::new;
    ComplexMatrix::from_row_slice(
        4,
        4,
        &[
            c(s1.re, s3.im),
            c(-s2.re, s4.im),
            ZERO,
            ZERO,
            c(s2.re, s4.im),
            c(s1.re, -s3.im),
            ZERO,
            ZERO,
            ZERO,
            ZERO,
            c(s3.re, s1.im),
            c(-s4.re, s2.im),
            ZERO,
            ZERO,
            c(s4.re, s2.im),
            c(s3.re, -s1.im),
        ],
    )
}

/// Full-rate 2x2 code: `X(s1, s2) + e^{jπ/4} X(s3, s4) P` with `s_i = e^{jθ_g} x_i`.
pub fn proposed_2x2_encode(x: &[Complex64; 4]) -> ComplexMatrix {
    let w = Complex64::from_polar(1.0, theta_g());
    let s = x.map(|xi| w * xi);
    let first = ciod2_encode(s[0], s[1]);
    let second = apply_permutation(&ciod2_encode(s[2], s[3]), &swap_permutation(2));
    &first + &second.scale(Complex64::from_polar(1.0, FRAC_PI_4))
}

/// Full-rate 4x2 code: `X(s1..s4) + e^{jπ/4} X(s5..s8) P` with `s_i = e^{jθ_g} x_i`.
pub fn proposed_4x2_encode(x: &[Complex64; 8]) -> ComplexMatrix {
    let w = Complex64::from_polar(1.0, theta_g());
    let s = x.map(|xi| w * xi);
    let first = ciod4_encode(&[s[0], s[1], s[2], s[3]]);
    let second = apply_permutation(&ciod4_encode(&[s[4], s[5], s[6], s[7]]), &swap_permutation(4));
    &first + &second.scale(Complex64::from_polar(1.0, FRAC_PI_4))
}

/// Alamouti code `[[s1, -s2*], [s2, s1*]]`.
pub fn alamouti_encode(s1: Complex64, s2: Complex64) -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[s1, -s2.conj(), s2, s1.conj()])
}

/// Golden code with `1/√5` normalization.
pub fn golden_encode(x: &[Complex64; 4]) -> ComplexMatrix {
    let sqrt5 = 5f64.sqrt();
    let tau = (1.0 + sqrt5) / 2.0;
    let mu = (1.0 - sqrt5) / 2.0;
    let alpha = Complex64::new(1.0, 1.0 - tau);
    let alpha_bar = Complex64::new(1.0, 1.0 - mu);
    let [x1, x2, x3, x4] = *x;
    let entries = [
        alpha * (x1 + x2 * tau),
        alpha * (x3 + x4 * tau),
        J * alpha_bar * (x3 + x4 * mu),
        alpha_bar * (x1 + x2 * mu),
    ];
    ComplexMatrix::from_row_slice(2, 2, &entries).scale_real(1.0 / sqrt5)
}

/// The code's weight matrices (see [`StbcCode::weights`]).
pub fn weight_matrices(code: &StbcCode) -> Vec<ComplexMatrix> {
    code.weights().to_vec()
}

/// The code's generator matrix (see [`StbcCode::generator`]).
pub fn generator_matrix(code: &StbcCode) -> RealMatrix {
    code.generator().clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::det_complex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_symbols(rng: &mut ChaCha8Rng, k: usize) -> Vec<Complex64> {
        (0..k)
            .map(|_| c(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)))
            .collect()
    }

    fn rotate_all(x: &[Complex64]) -> Vec<Complex64> {
        let w = Complex64::from_polar(1.0, theta_g());
        x.iter().map(|z| z * w).collect()
    }

    #[test]
    fn names_round_trip() {
        for n in CodeName::ALL {
            assert_eq!(n.as_str().parse::<CodeName>().unwrap(), n);
        }
        assert!(matches!("djabba".parse::<CodeName>(), Err(Error::UnknownCode(_))));
    }

    #[test]
    fn ciod2_examples() {
        assert_eq!(ciod2_encode(ZERO, ZERO), ComplexMatrix::zeros(2, 2));
        let s = ciod2_encode(c(1.0, 2.0), c(3.0, 4.0));
        assert_eq!(s, ComplexMatrix::from_row_slice(2, 2, &[c(1.0, 4.0), ZERO, ZERO, c(3.0, 2.0)]));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let v = random_symbols(&mut rng, 2);
            let d = det_complex(&ciod2_encode(v[0], v[1])).unwrap();
            let expected = c(v[0].re, v[1].im) * c(v[1].re, v[0].im);
            assert!((d - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn proposed_2x2_examples() {
        assert_eq!(proposed_2x2_encode(&[ZERO; 4]), ComplexMatrix::zeros(2, 2));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let x = random_symbols(&mut rng, 2);
            let s = proposed_2x2_encode(&[x[0], x[1], ZERO, ZERO]);
            let r = rotate_all(&x);
            assert!(s.max_abs_diff(&ciod2_encode(r[0], r[1])) < 1e-12);
        }
    }

    #[test]
    fn proposed_2x2_matches_explicit_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w4 = Complex64::from_polar(1.0, FRAC_PI_4);
        for _ in 0..100 {
            let x = random_symbols(&mut rng, 4);
            let s = rotate_all(&x);
            let expected = ComplexMatrix::from_row_slice(
                2,
                2,
                &[
                    c(s[0].re, s[1].im),
                    w4 * c(s[2].re, s[3].im),
                    w4 * c(s[3].re, s[2].im),
                    c(s[1].re, s[0].im),
                ],
            );
            let got = proposed_2x2_encode(&[x[0], x[1], x[2], x[3]]);
            assert!(got.max_abs_diff(&expected) < 1e-12);
        }
    }

    #[test]
    fn ciod4_structure() {
        assert_eq!(ciod4_encode(&[ZERO; 4]), ComplexMatrix::zeros(4, 4));
        let (s1, s2) = (c(0.3, -1.2), c(2.0, 0.7));
        let x = ciod4_encode(&[s1, s2, ZERO, ZERO]);
        let lower = [x[(2, 2)], x[(2, 3)], x[(3, 2)], x[(3, 3)]];
        assert_eq!(lower, [c(0.0, s1.im), c(0.0, s2.im), c(0.0, s2.im), c(0.0, -s1.im)]);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let s = random_symbols(&mut rng, 4);
            let x = ciod4_encode(&[s[0], s[1], s[2], s[3]]);
            // Alamouti-type block in a = s1I + j s3Q, b = s2I + j s4Q.
            let a = c(s[0].re, s[2].im);
            let b = c(s[1].re, s[3].im);
            assert_eq!(x[(0, 0)], a);
            assert_eq!(x[(1, 0)], b);
            assert_eq!(x[(0, 1)], -b.conj());
            assert_eq!(x[(1, 1)], a.conj());
            // Entry (4,4) is s3I - j s1Q.
            assert_eq!(x[(3, 3)], c(s[2].re, -s[0].im));
        }
    }

    #[test]
    fn proposed_4x2_examples() {
        assert_eq!(proposed_4x2_encode(&[ZERO; 8]), ComplexMatrix::zeros(4, 4));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w4 = Complex64::from_polar(1.0, FRAC_PI_4);
        for _ in 0..100 {
            let x = random_symbols(&mut rng, 8);
            let mut head = [ZERO; 8];
            head[..4].copy_from_slice(&x[..4]);
            let r = rotate_all(&x);
            assert!(proposed_4x2_encode(&head).max_abs_diff(&ciod4_encode(&[r[0], r[1], r[2], r[3]])) < 1e-12);

            let s = &r;
            let e = |a: f64, b: f64| c(a, b);
            let expected = ComplexMatrix::from_row_slice(
                4,
                4,
                &[
                    e(s[0].re, s[2].im),
                    e(-s[1].re, s[3].im),
                    w4 * e(s[4].re, s[6].im),
                    w4 * e(-s[5].re, s[7].im),
                    e(s[1].re, s[3].im),
                    e(s[0].re, -s[2].im),
                    w4 * e(s[5].re, s[7].im),
                    w4 * e(s[4].re, -s[6].im),
                    w4 * e(s[6].re, s[4].im),
                    w4 * e(-s[7].re, s[5].im),
                    e(s[2].re, s[0].im),
                    e(-s[3].re, s[1].im),
                    w4 * e(s[7].re, s[5].im),
                    w4 * e(s[6].re, -s[4].im),
                    e(s[3].re, s[1].im),
                    e(s[2].re, -s[0].im),
                ],
            );
            let mut all = [ZERO; 8];
            all.copy_from_slice(&x);
            assert!(proposed_4x2_encode(&all).max_abs_diff(&expected) < 1e-12);
        }
    }

    #[test]
    fn alamouti_examples() {
        let one = alamouti_encode(c(1.0, 0.0), ZERO);
        assert_eq!(one, ComplexMatrix::identity(2));
        let j = alamouti_encode(ZERO, J);
        assert_eq!(j, ComplexMatrix::from_row_slice(2, 2, &[ZERO, J, J, ZERO]));
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let v = random_symbols(&mut rng, 2);
            let s = alamouti_encode(v[0], v[1]);
            let gram = &s.hermitian() * &s;
            let e = v[0].norm_sqr() + v[1].norm_sqr();
            assert!(gram.max_abs_diff(&ComplexMatrix::identity(2).scale_real(e)) < 1e-12);
        }
    }

    #[test]
    fn golden_zero_and_first_weight() {
        assert_eq!(golden_encode(&[ZERO; 4]), ComplexMatrix::zeros(2, 2));
        let code = StbcCode::new(CodeName::Golden);
        assert_eq!(code.weights().len(), 8);
    }

    #[test]
    fn weight_matrix_shapes() {
        for name in CodeName::ALL {
            let code = StbcCode::new(name);
            assert_eq!(code.weights().len(), 2 * code.k());
            assert!(code.weights().iter().all(|a| a.rows() == code.n_t() && a.cols() == code.t()));
            assert_eq!(code.generator().rows(), 2 * code.n_t() * code.t());
            assert_eq!(code.generator().cols(), 2 * code.k());
        }
        assert_eq!(StbcCode::new(CodeName::Alamouti).weights()[0], ComplexMatrix::identity(2));
        assert_eq!(StbcCode::new(CodeName::Proposed2x2).weights().len(), 8);
    }

    #[test]
    fn reconstruction_and_generator_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for name in CodeName::ALL {
            let code = StbcCode::new(name);
            for _ in 0..1000 {
                let x = random_symbols(&mut rng, code.k());
                let s = code.encode(&x).unwrap();
                let xt = vec_tilde(&x);
                assert!(s.max_abs_diff(&code.encode_linear(&xt)) < 1e-12, "{name}");
                let g = code.generator().mul_vec(&xt);
                let direct = vec_tilde(&vec_stack(&s));
                let dev = g.iter().zip(&direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(dev < 1e-12, "{name}");
            }
        }
    }

    #[test]
    fn encoders_are_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for name in CodeName::ALL {
            let code = StbcCode::new(name);
            let x = random_symbols(&mut rng, code.k());
            let y = random_symbols(&mut rng, code.k());
            let sum: Vec<_> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
            let lhs = code.encode(&sum).unwrap();
            let rhs = &code.encode(&x).unwrap() + &code.encode(&y).unwrap();
            assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }
    }

    #[test]
    fn proposed_2x2_generator_matches_printed_matrix() {
        let (cg, sg) = (theta_g().cos(), theta_g().sin());
        let (a, b) = (cg * FRAC_1_SQRT_2, sg * FRAC_1_SQRT_2);
        #[rustfmt::skip]
        let printed = RealMatrix::from_row_slice(8, 8, &[
            cg, -sg, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, sg, cg, 0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0, -b, -a, a, -b,
            0.0, 0.0, 0.0, 0.0, b, a, a, -b,
            0.0, 0.0, 0.0, 0.0, a, -b, -b, -a,
            0.0, 0.0, 0.0, 0.0, a, -b, b, a,
            0.0, 0.0, cg, -sg, 0.0, 0.0, 0.0, 0.0,
            sg, cg, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        ]);
        let g = StbcCode::new(CodeName::Proposed2x2).generator().clone();
        assert!(g.max_abs_diff(&printed) < 1e-12);
        let gtg = &g.transpose() * &g;
        assert!(gtg.max_abs_diff(&RealMatrix::identity(8)) < 1e-12);
    }

    #[test]
    fn proposed_4x2_generator_is_not_unitary() {
        let g = StbcCode::new(CodeName::Proposed4x2).generator().clone();
        let gtg = &g.transpose() * &g;
        assert!(gtg.max_abs_diff(&RealMatrix::identity(16)) > 1e-3);
    }

    #[test]
    fn rates_and_encode_errors() {
        assert_eq!(StbcCode::new(CodeName::Proposed2x2).rate(), 2.0);
        assert_eq!(StbcCode::new(CodeName::Proposed4x2).rate(), 2.0);
        assert_eq!(StbcCode::new(CodeName::Alamouti).rate(), 1.0);
        let err = StbcCode::new(CodeName::Golden).encode(&[ZERO; 3]);
        assert!(matches!(err, Err(Error::SymbolCount { expected: 4, got: 3, .. })));
    }

    #[test]
    fn permutations() {
        let p2 = StbcCode::new(CodeName::Proposed2x2).permutation().clone();
        assert_eq!(p2, RealMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let p4 = StbcCode::new(CodeName::Proposed4x2).permutation().clone();
        #[rustfmt::skip]
        let expected = RealMatrix::from_row_slice(4, 4, &[
            0.0, 0.0, 1.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            1.0, 0.0, 0.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
        ]);
        assert_eq!(p4, expected);
    }
}
