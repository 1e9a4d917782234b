mod common;

use common::{num, run};

const RECORD_FIELDS: [&str; 9] = [
    "inequality",
    "s",
    "dim",
    "seed",
    "index",
    "margin",
    "kind",
    "imag_residual",
    "status",
];

#[test]
fn help_and_usage_errors() {
    let r = run(&["--help"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("verify"));
    assert_eq!(run(&[]).code, 2);
    assert_eq!(run(&["frobnicate"]).code, 2);
    assert_eq!(run(&["verify", "--inequality", "thm1", "--seed", "1", "--bogus"]).code, 2);
    let r = run(&["verify", "--inequality", "nosuch", "--seed", "1"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("thm2-operator"), "{}", r.stderr);
    assert!(r.stdout.is_empty());
}

#[test]
fn seed_is_required_for_campaigns() {
    for sub in ["verify", "search"] {
        let r = run(&[sub, "--inequality", "thm1", "--samples", "2"]);
        assert_eq!(r.code, 2);
        assert!(r.stderr.contains("--seed"));
    }
}

#[test]
fn invalid_values_are_usage_errors() {
    let base = ["verify", "--inequality", "eq3", "--seed", "1", "--samples", "2"];
    for extra in [
        &["--s", "1.5"][..],
        &["--tol", "-1"],
        &["--min-eig", "2"],
        &["--sampler", "ginibre_density", "--inequality", "lemma1-jensen"],
        &["--sampler", "unknown"],
        &["--dim", "0"],
    ] {
        let args: Vec<&str> = base.iter().chain(extra).copied().collect();
        assert_eq!(run(&args).code, 2, "{extra:?}");
    }
    let r = run(&["verify", "--inequality", "thm1", "--seed", "1", "--s", "0.5"]);
    assert_eq!(r.code, 2);
}

#[test]
fn spec_example_thm1() {
    let r = run(&["verify", "--inequality", "thm1", "--dim", "4", "--samples", "1000", "--seed", "42", "--tol", "1e-9"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let lines = r.lines();
    assert_eq!(lines.len(), 1001);
    for ((k, rec), text) in lines[..1000].iter().enumerate().zip(r.stdout.lines()) {
        let positions: Vec<usize> = RECORD_FIELDS
            .iter()
            .map(|f| text.find(&format!("\"{f}\":")).expect(f))
            .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]), "{text}");
        assert_eq!(rec["index"], k as u64);
        assert_eq!(rec["kind"], "TRACE");
    }
    let s = r.summary();
    assert_eq!(s["evaluated"], 1000);
    assert_eq!(s["violations"], 0);
    assert!(num(&s["min_margin"]) >= 0.0);
}

#[test]
fn records_use_seventeen_significant_digits() {
    let r = run(&["verify", "--inequality", "eq3", "--seed", "3", "--samples", "2", "--s", "0.1"]);
    let line = r.stdout.lines().next().unwrap();
    let margin = line.split("\"margin\":").nth(1).unwrap().split(',').next().unwrap();
    let mantissa = margin.split('e').next().unwrap().trim_start_matches('-');
    assert_eq!(mantissa.replace('.', "").len(), 17, "{margin}");
}

#[test]
fn one_record_per_s_value() {
    let r = run(&["verify", "--inequality", "eq3", "--seed", "5", "--samples", "4", "--s", "0", "--s", "0.5", "--s", "1"]);
    assert_eq!(r.code, 0);
    let lines = r.lines();
    assert_eq!(lines.len(), 13);
    assert_eq!(num(&lines[1]["s"]), 0.5);
    assert_eq!(lines[3]["index"], 1);
    let r = run(&["verify", "--inequality", "eq3", "--seed", "5", "--samples", "2", "--s-grid-step", "0.25"]);
    assert_eq!(r.lines().len(), 11);
}

#[test]
fn summary_only_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.jsonl");
    let p = path.to_str().unwrap();
    let r = run(&["verify", "--inequality", "q1", "--dim", "3", "--seed", "9", "--samples", "20", "--out", p]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 21);
    let r = run(&["verify", "--inequality", "q1", "--dim", "3", "--seed", "9", "--samples", "20", "--summary-only"]);
    assert_eq!(r.stdout.lines().count(), 1);
    assert_eq!(r.stdout.lines().next(), text.lines().last());
}

#[test]
fn config_file_with_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"inequality": "thm2-trace", "dim": 3, "samples": 6, "seed": 11}"#).unwrap();
    let c = cfg.to_str().unwrap();
    let r = run(&["verify", "--config", c]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.lines().len(), 7);
    assert_eq!(r.summary()["dim"], 3);
    let r = run(&["verify", "--config", c, "--samples", "2", "--dim", "2"]);
    assert_eq!(r.lines().len(), 3);
    assert_eq!(r.summary()["dim"], 2);
    assert_eq!(r.summary()["seed"], 11);

    std::fs::write(&cfg, r#"{"inequality": "thm1", "seed": 1, "colour": "red"}"#).unwrap();
    assert_eq!(run(&["verify", "--config", c]).code, 2);
    assert_eq!(run(&["verify", "--config", "/nonexistent/cfg.json"]).code, 2);
}

#[test]
fn witness_round_trip_through_repro() {
    let dir = tempfile::tempdir().unwrap();
    for (ineq, dim) in [("thm1", "3"), ("remark2", "2"), ("lemma2", "3"), ("lemma1-jensen", "2"), ("thm4-2", "3")] {
        let path = dir.path().join(format!("{ineq}.json"));
        let p = path.to_str().unwrap();
        let r = run(&["search", "--inequality", ineq, "--dim", dim, "--seed", "4", "--samples", "6", "--refine-steps", "5", "--emit-witness", p, "--summary-only"]);
        assert!(r.code == 0, "{ineq}: {}", r.stderr);
        let min_margin = num(&r.summary()["min_margin"]);
        let r = run(&["repro", p, "--strict"]);
        assert_eq!(r.code, 0, "{ineq}: {}", r.stderr);
        let rec = &r.lines()[0];
        assert_eq!(rec["status"], "reproduced");
        assert!(num(&rec["discrepancy"]) <= 1e-12);
        assert_eq!(num(&rec["recorded_margin"]), min_margin);
    }
}

#[test]
fn tampered_witness_fails_in_strict_mode() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.json");
    let p = path.to_str().unwrap();
    run(&["verify", "--inequality", "thm1", "--seed", "4", "--samples", "3", "--emit-witness", p]);
    let mut w: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    w["margin"] = serde_json::json!(123.0);
    std::fs::write(&path, w.to_string()).unwrap();
    let r = run(&["repro", p]);
    assert_eq!(r.code, 0);
    assert_eq!(r.lines()[0]["status"], "mismatch");
    assert_eq!(run(&["repro", p, "--strict"]).code, 3);
    assert_eq!(run(&["repro", "no-such-target"]).code, 2);
}

#[test]
fn open_questions_never_fail() {
    let r = run(&["verify", "--inequality", "lemma2", "--dim", "3", "--seed", "1", "--samples", "2000", "--summary-only"]);
    assert_eq!(r.code, 0);
    let s = r.summary();
    assert_eq!(s["asserted"], false);
    assert!(s["violations"].as_u64().unwrap() > 0);
}

#[test]
fn oracle_and_concavity_run() {
    let r = run(&["oracle", "--dim", "2", "--samples", "30", "--seed", "2", "--strict"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let lines = r.lines();
    assert_eq!(lines.len(), 5 + 6 + 1);
    assert!(num(&r.summary()["max_rel_discrepancy"]) < 1e-10);

    let r = run(&["concavity", "--dim", "2", "--samples", "4", "--seed", "3", "--s-grid-step", "0.1"]);
    assert_eq!(r.code, 0);
    let lines = r.lines();
    assert_eq!(lines.len(), 4 * 11 + 1);
    assert!(lines[..44].iter().all(|l| l["E"].is_number() && l["second_difference"].is_number()));
    assert!(num(&r.summary()["max_second_difference"]) <= 1e-6);

    // general dimension: reported, never asserted
    let r = run(&["concavity", "--dim", "3", "--samples", "2", "--seed", "3", "--s-grid-step", "0.5", "--summary-only"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.summary()["asserted"], false);
}

#[test]
fn empty_campaign_reports_infinite_sentinel() {
    let r = run(&["verify", "--inequality", "thm1", "--seed", "1", "--samples", "0"]);
    assert_eq!(r.code, 0);
    let s = r.summary();
    assert_eq!(s["min_margin"], "inf");
    assert_eq!(s["evaluated"], 0);
    assert!(s["argmin_index"].is_null());
}

#[test]
fn repro_counterexample_prints_values() {
    let r = run(&["repro", "lemma2-counterexample"]);
    assert_eq!(r.code, 0);
    let rec = &r.lines()[0];
    assert!((num(&rec["lhs"]) - 4.068914).abs() <= 1e-5);
    assert!((num(&rec["margin"]) + 0.048188).abs() <= 1e-6);
}
