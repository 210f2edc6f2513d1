use stbc::codes::CodeName;
use stbc::decoders::DecoderKind;
use stbc::sim::{run_cer_sweep, to_csv, SimConfig};

#[test]
fn cer_is_statistically_nonincreasing() {
    let cfg = SimConfig::new(CodeName::Proposed2x2, DecoderKind::Fast, 4, vec![0.0, 4.0, 8.0, 12.0], 10_000, 21);
    let pts = run_cer_sweep(&cfg).unwrap();
    for w in pts.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let sigma = (a.cer * (1.0 - a.cer) / a.trials as f64).sqrt();
        assert!(b.cer <= a.cer + 3.0 * sigma, "{a:?} -> {b:?}");
    }
    assert!(pts[0].cer > pts[3].cer);
}

#[test]
fn fast_and_ml_give_identical_error_counts() {
    for code in [CodeName::Proposed2x2, CodeName::Golden] {
        let mk = |d| SimConfig::new(code, d, 4, vec![2.0, 8.0], 400, 5);
        let fast = run_cer_sweep(&mk(DecoderKind::Fast)).unwrap();
        let ml = run_cer_sweep(&mk(DecoderKind::Ml)).unwrap();
        for (f, m) in fast.iter().zip(&ml) {
            assert_eq!(f.errors, m.errors, "{code}");
            assert!(f.avg_metric_computations < m.avg_metric_computations);
        }
    }
}

#[test]
fn repeated_runs_are_identical() {
    let cfg = SimConfig::new(CodeName::Proposed4x2, DecoderKind::Fast, 4, vec![6.0, 10.0], 200, 99);
    assert_eq!(to_csv(&run_cer_sweep(&cfg).unwrap()), to_csv(&run_cer_sweep(&cfg).unwrap()));
}

#[test]
fn noiseless_cross_constellation() {
    let mut cfg = SimConfig::new(CodeName::Proposed2x2, DecoderKind::Fast, 32, vec![f64::INFINITY], 50, 1);
    cfg.n_r = 2;
    let pts = run_cer_sweep(&cfg).unwrap();
    assert_eq!(pts[0].errors, 0);
    assert!(pts[0].avg_metric_computations <= 2.0 * 32f64.powi(3));
}
