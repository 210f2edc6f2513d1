use std::process::Command;

fn stbc(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_stbc"))
        .args(args)
        .env_remove("STBC_THREADS")
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn mindet_proposed_2x2() {
    let (code, out, _) = stbc(&["analyze", "mindet", "--code", "proposed2x2", "--qam", "4"]);
    assert_eq!(code, 0);
    assert!(out.contains("3.200000"), "{out}");
}

#[test]
fn mindet_json_and_table() {
    let (_, out, _) = stbc(&["analyze", "mindet", "--code", "golden", "--qam", "4", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v["delta_min"].as_f64().unwrap() - 3.2).abs() < 1e-9);
    assert_eq!(v["exhaustive"], true);
    let (_, out, _) = stbc(&["analyze", "mindet", "--code", "golden", "--qam", "4", "--table"]);
    assert!(out.contains("Golden code") && out.contains("3.2000"));
}

#[test]
fn encode_zero_symbols_gives_zero_matrix() {
    let (code, out, _) = stbc(&["encode", "--code", "proposed2x2", "--symbols", "0,0,0,0", "--json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let rows = v["codeword"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for row in rows {
        for z in row.as_array().unwrap() {
            assert_eq!(z[0].as_f64().unwrap().abs() + z[1].as_f64().unwrap().abs(), 0.0);
        }
    }
}

#[test]
fn encode_negative_symbols() {
    let (code, out, _) = stbc(&["encode", "--code", "alamouti", "--symbols", "-1-1j,3j", "--json"]);
    assert_eq!(code, 0, "{out}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["codeword"][0][0], serde_json::json!([-1.0, -1.0]));
}

#[test]
fn rpattern_and_theorem1() {
    let (code, out, _) = stbc(&["analyze", "rpattern", "--code", "proposed4x2", "--trials", "20"]);
    assert_eq!(code, 0);
    assert!(out.contains("expected zeros not observed: []"), "{out}");
    let (code, out, _) = stbc(&["analyze", "theorem1", "--code", "alamouti", "--json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["max_violation_over_trials"].as_f64().unwrap() < 1e-10);
}

#[test]
fn generator_and_rank() {
    let (code, out, _) = stbc(&["analyze", "generator", "--code", "proposed4x2"]);
    assert_eq!(code, 0);
    let dev: f64 = out.lines().last().unwrap().rsplit(' ').next().unwrap().parse().unwrap();
    assert!(dev > 1e-3);
    let (code, out, _) = stbc(&["analyze", "rank", "--code", "ciod2", "--qam", "4", "--rotation", "0"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("min_rank 1"), "{out}");
}

#[test]
fn simulate_csv_header_and_rows() {
    let (code, out, _) = stbc(&[
        "simulate", "cer", "--code", "proposed2x2", "--decoder", "fast", "--qam", "4", "--snr", "4:4:12", "--trials",
        "200", "--seed", "7", "--threads", "2",
    ]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "snr_db,trials,errors,cer,ci_low,ci_high,avg_metric_computations");
    assert_eq!(lines.len(), 4);
    for line in &lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 7);
        assert_eq!(fields[1], "200");
    }
}

#[test]
fn simulate_thread_env_does_not_change_output() {
    let args = [
        "simulate", "cer", "--code", "golden", "--qam", "16", "--snr", "10:5:20", "--trials", "300", "--seed", "3",
    ];
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_stbc"))
            .args(args)
            .env("STBC_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn simulate_json_carries_snr_definition() {
    let (code, out, _) = stbc(&[
        "simulate", "cer", "--code", "proposed2x2", "--snr", "inf", "--trials", "50", "--json",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["snr_definition"].as_str().unwrap().contains("n_t / N0"));
    assert_eq!(v["points"][0]["snr_db"], "inf");
    assert_eq!(v["points"][0]["errors"], 0);
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(stbc(&[]).0, 1);
    assert_eq!(stbc(&["simulate", "cer", "--code", "golden", "--snr", "1:2"]).0, 1);
    assert_eq!(stbc(&["simulate", "cer", "--code", "ciod2", "--snr", "10"]).0, 1);
    assert_eq!(stbc(&["analyze", "mindet", "--code", "xyz"]).0, 1);
}

#[test]
fn numeric_failure_exits_2() {
    let (code, _, err) = stbc(&["analyze", "mindet", "--code", "proposed2x2", "--qam", "16", "--cap", "1000"]);
    assert_eq!(code, 2);
    assert!(err.contains("search space"));
}
