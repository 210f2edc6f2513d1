//! Integer-lattice QAM signal sets, the coordinate-interleaving rotation, and the
//! PAM hard limiter used by the conditional decoders.
//!
//! Constellations are unnormalized: points have odd-integer coordinates, so any
//! two points differ by a vector with even-integer components.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rotation angle `½·atan(2)` for coordinate-interleaved designs.
pub fn theta_g() -> f64 {
    0.5 * 2f64.atan()
}

/// `e^{jθ_g}`.
pub fn rotation_phasor() -> Complex64 {
    Complex64::from_polar(1.0, theta_g())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstellationKind {
    SquareQam,
    Cross32Qam,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    kind: ConstellationKind,
    pam_levels: Vec<f64>,
    rotation: f64,
}

impl Constellation {
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn kind(&self) -> ConstellationKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.points.len()
    }

    /// PAM levels in ascending order; empty for non-square sets.
    pub fn pam_levels(&self) -> &[f64] {
        &self.pam_levels
    }

    pub fn rotation(&self) -> f64 {
        self.rotation
    }

    pub fn is_square(&self) -> bool {
        self.kind == ConstellationKind::SquareQam
    }

    /// Mean of `|p|²` over the points.
    pub fn average_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.points.iter().any(|p| (p - z).norm() < 1e-9)
    }

    /// All distinct pairwise differences `p - q`, including zero, sorted by
    /// `(re, im)`.
    pub fn difference_set(&self) -> Vec<Complex64> {
        let mut diffs: Vec<Complex64> = Vec::new();
        for p in &self.points {
            for q in &self.points {
                let d = p - q;
                if !diffs.iter().any(|e| (e - d).norm() < 1e-9) {
                    diffs.push(d);
                }
            }
        }
        diffs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        diffs
    }

    pub fn to_json(&self) -> serde_json::Value {
        let dto = ConstellationJson {
            kind: self.kind,
            m: self.size(),
            points: self.points.iter().map(|p| [p.re, p.im]).collect(),
        };
        serde_json::to_value(dto).expect("constellation serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct ConstellationJson {
    kind: ConstellationKind,
    #[serde(rename = "M")]
    m: usize,
    points: Vec<[f64; 2]>,
}

fn sort_points(points: &mut [Complex64]) {
    points.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Square M-QAM with PAM levels `±1, ±3, …, ±(√M−1)`.
pub fn square_qam(m: usize) -> Result<Constellation> {
    if !matches!(m, 4 | 16 | 64 | 256) {
        return Err(Error::InvalidConstellationSize(m));
    }
    let side = (m as f64).sqrt().round() as i64;
    let pam_levels: Vec<f64> = (0..side).map(|i| (2 * i - side + 1) as f64).collect();
    let mut points = Vec::with_capacity(m);
    for &re in &pam_levels {
        for &im in &pam_levels {
            points.push(Complex64::new(re, im));
        }
    }
    Ok(Constellation {
        points,
        kind: ConstellationKind::SquareQam,
        pam_levels,
        rotation: 0.0,
    })
}

/// 32-point cross constellation: `{±1, ±3, ±5}²` without the four `(±5, ±5)` corners.
pub fn cross_qam_32() -> Constellation {
    let coords = [-5.0, -3.0, -1.0, 1.0, 3.0, 5.0];
    let mut points: Vec<Complex64> = coords
        .iter()
        .flat_map(|&re| coords.iter().map(move |&im| Complex64::new(re, im)))
        .filter(|p| !(p.re.abs() == 5.0 && p.im.abs() == 5.0))
        .collect();
    sort_points(&mut points);
    Constellation {
        points,
        kind: ConstellationKind::Cross32Qam,
        pam_levels: Vec::new(),
        rotation: 0.0,
    }
}

/// Square QAM of size `m`, or the 32-point cross set when `cross` is set or `m == 32`.
pub fn by_size(m: usize, cross: bool) -> Result<Constellation> {
    if cross {
        if m != 32 {
            return Err(Error::Config(format!("cross constellation only exists for M = 32, got {m}")));
        }
        return Ok(cross_qam_32());
    }
    if m == 32 {
        return Ok(cross_qam_32());
    }
    square_qam(m)
}

/// Rotates every point by `θ_g` and checks that the in-phase parts (and the
/// quadrature parts) stay pairwise distinct.
pub fn rotate(c: &Constellation) -> Result<Constellation> {
    let w = rotation_phasor();
    let points: Vec<Complex64> = c.points.iter().map(|p| p * w).collect();
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            if (a.re - b.re).abs() < 1e-9 {
                return Err(Error::RotationCollision { component: "real" });
            }
            if (a.im - b.im).abs() < 1e-9 {
                return Err(Error::RotationCollision { component: "imaginary" });
            }
        }
    }
    Ok(Constellation {
        points,
        kind: c.kind,
        pam_levels: c.pam_levels.clone(),
        rotation: c.rotation + theta_g(),
    })
}

/// Nearest PAM level to `u`, clamped to the outermost levels. Midpoint ties
/// go to the larger level.
///
/// `levels` must be the ascending, uniformly spaced (step 2) odd-integer set
/// of a square QAM.
pub fn hard_limit(u: f64, levels: &[f64]) -> f64 {
    let top = *levels.last().expect("non-empty PAM level set");
    let bottom = levels[0];
    // Odd integers: nearest is 2·floor(u/2) + 1, with ties at even u going up.
    let q = 2.0 * (u / 2.0).floor() + 1.0;
    q.clamp(bottom, top)
}

/// [`hard_limit`] against a square constellation's levels.
pub fn hard_limit_pam(u: f64, c: &Constellation) -> Result<f64> {
    if !c.is_square() {
        return Err(Error::ConstellationKind(
            "hard limiting needs a square QAM constellation".into(),
        ));
    }
    Ok(hard_limit(u, &c.pam_levels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn is_even_int(x: f64) -> bool {
        (x / 2.0).fract().abs() < 1e-12
    }

    #[test]
    fn qam4_points() {
        let q = square_qam(4).unwrap();
        let mut expected = vec![c(1.0, 1.0), c(1.0, -1.0), c(-1.0, 1.0), c(-1.0, -1.0)];
        sort_points(&mut expected);
        assert_eq!(q.points(), expected.as_slice());
        assert_eq!(q.pam_levels(), &[-1.0, 1.0]);
    }

    #[test]
    fn qam16_points_and_regularity() {
        let q = square_qam(16).unwrap();
        assert_eq!(q.size(), 16);
        assert!(q.points().iter().all(|p| [1.0, 3.0].contains(&p.re.abs()) && [1.0, 3.0].contains(&p.im.abs())));
        for a in q.points() {
            for b in q.points() {
                let d = a - b;
                assert!(is_even_int(d.re) && is_even_int(d.im));
            }
        }
        assert_eq!(q.difference_set().len(), 49);
    }

    #[test]
    fn square_qam_rejects_bad_sizes() {
        for m in [0, 2, 8, 32, 100] {
            assert!(matches!(square_qam(m), Err(Error::InvalidConstellationSize(_))));
        }
    }

    #[test]
    fn cross32_geometry() {
        let x = cross_qam_32();
        assert_eq!(x.size(), 32);
        assert!(!x.contains(c(5.0, 5.0)));
        assert!(x.contains(c(5.0, 3.0)));
        for a in x.points() {
            for b in x.points() {
                let d = a - b;
                assert!(is_even_int(d.re) && is_even_int(d.im));
            }
        }
        assert!(x.pam_levels().is_empty());
        assert!(hard_limit_pam(0.0, &x).is_err());
    }

    #[test]
    fn rotation_angle_squares_to_one_plus_two_j() {
        let w = rotation_phasor();
        let target = c(1.0, 2.0) / 5f64.sqrt();
        assert!((w * w - target).norm() < 1e-12);
        assert!((theta_g() - 0.553574).abs() < 1e-6);
    }

    #[test]
    fn rotated_qam4_has_distinct_components() {
        let r = rotate(&square_qam(4).unwrap()).unwrap();
        let pts = r.points();
        for i in 0..4 {
            for j in i + 1..4 {
                assert!((pts[i].re - pts[j].re).abs() > 1e-6);
                assert!((pts[i].im - pts[j].im).abs() > 1e-6);
            }
        }
        assert!((r.rotation() - theta_g()).abs() < 1e-15);
    }

    #[test]
    fn rotation_fixes_origin_and_distances() {
        let w = rotation_phasor();
        assert_eq!(c(0.0, 0.0) * w, c(0.0, 0.0));
        let q = square_qam(16).unwrap();
        let r = rotate(&q).unwrap();
        for i in 0..16 {
            assert!((q.points()[i].norm() - r.points()[i].norm()).abs() < 1e-12);
            for j in 0..16 {
                let d0 = (q.points()[i] - q.points()[j]).norm();
                let d1 = (r.points()[i] - r.points()[j]).norm();
                assert!((d0 - d1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rotate_detects_collisions() {
        let w = rotation_phasor();
        // Both land on real part 1 after rotation.
        let same_re = Constellation {
            points: vec![w.conj() * c(1.0, 2.0), w.conj() * c(1.0, -3.0)],
            kind: ConstellationKind::Cross32Qam,
            pam_levels: vec![],
            rotation: 0.0,
        };
        assert!(matches!(rotate(&same_re), Err(Error::RotationCollision { component: "real" })));
        let same_im = Constellation {
            points: vec![w.conj() * c(2.0, 1.0), w.conj() * c(-3.0, 1.0)],
            ..same_re
        };
        assert!(matches!(rotate(&same_im), Err(Error::RotationCollision { component: "imaginary" })));
    }

    #[test]
    fn hard_limit_examples() {
        let q4 = square_qam(4).unwrap();
        let q16 = square_qam(16).unwrap();
        assert_eq!(hard_limit_pam(0.2, &q4).unwrap(), 1.0);
        assert_eq!(hard_limit_pam(0.0, &q4).unwrap(), 1.0);
        assert_eq!(hard_limit_pam(-7.3, &q16).unwrap(), -3.0);
        assert_eq!(hard_limit_pam(2.0, &q16).unwrap(), 3.0);
        assert_eq!(hard_limit_pam(-2.0, &q16).unwrap(), -1.0);
    }

    #[test]
    fn hard_limit_matches_exhaustive_search() {
        let q64 = square_qam(64).unwrap();
        let levels = q64.pam_levels();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1_000_000 {
            let u: f64 = rng.random_range(-10.0..10.0);
            let mut best = levels[0];
            for &p in levels {
                // `<=` keeps the larger of two equidistant levels.
                if (u - p).abs() <= (u - best).abs() {
                    best = p;
                }
            }
            assert_eq!(hard_limit(u, levels), best, "u = {u}");
        }
    }

    #[test]
    fn independent_quantization_gives_nearest_point() {
        let q = square_qam(16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10_000 {
            let z = c(rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0));
            let fast = c(hard_limit(z.re, q.pam_levels()), hard_limit(z.im, q.pam_levels()));
            let d_fast = (z - fast).norm();
            let d_best = q.points().iter().map(|p| (z - p).norm()).fold(f64::INFINITY, f64::min);
            assert!((d_fast - d_best).abs() < 1e-12);
        }
    }

    #[test]
    fn json_shape() {
        let v = square_qam(4).unwrap().to_json();
        assert_eq!(v["kind"], "square-qam");
        assert_eq!(v["M"], 4);
        assert_eq!(v["points"].as_array().unwrap().len(), 4);
        assert_eq!(v["points"][0], serde_json::json!([-1.0, -1.0]));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn hard_limit_is_idempotent_on_levels(idx in 0usize..16) {
                let q = square_qam(256).unwrap();
                let p = q.pam_levels()[idx];
                prop_assert_eq!(hard_limit(p, q.pam_levels()), p);
            }

            #[test]
            fn hard_limit_is_monotone(a in -40.0f64..40.0, b in -40.0f64..40.0) {
                let q = square_qam(64).unwrap();
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                prop_assert!(hard_limit(lo, q.pam_levels()) <= hard_limit(hi, q.pam_levels()));
            }
        }
    }
}
