use clap::Parser;
use realmono::cli::{main_with_args, run, Cli, ExperimentReport};
use serde_json::Value;
use std::sync::atomic::{AtomicUsize, Ordering};

fn report(args: &[&str]) -> ExperimentReport {
    let cli = Cli::try_parse_from(std::iter::once("realmono").chain(args.iter().copied())).unwrap();
    run(&cli).unwrap().0
}

static NEXT: AtomicUsize = AtomicUsize::new(0);

fn exit(args: &[&str]) -> i32 {
    let id = NEXT.fetch_add(1, Ordering::Relaxed);
    let out = std::env::temp_dir().join(format!("realmono-cli-{}-{id}.json", std::process::id()));
    let mut full = vec!["realmono"];
    full.extend_from_slice(args);
    let path = out.to_string_lossy().into_owned();
    if !matches!(args.first(), Some(&"zoo") | None) && !args.contains(&"--out") {
        full.extend_from_slice(&["--out", &path]);
    }
    let code = main_with_args(full);
    let _ = std::fs::remove_file(&out);
    code
}

#[test]
fn affine_member_passes() {
    assert_eq!(exit(&["check-monotone", "--zoo", "affine-pos", "--dims", "1,2,3", "--trials", "1000", "--seed", "7"]), 0);
}

#[test]
fn negative_inverse_fails_with_scalar_witness() {
    let args = ["check-monotone", "--zoo", "neg-inverse", "--dims", "1", "--trials", "100", "--seed", "7"];
    assert_eq!(exit(&args), 1);
    let rep = report(&args);
    assert!(!rep.passed);
    let a = &rep.result["witness"]["inputs"]["A"][0];
    assert_eq!((a["rows"].as_u64(), a["cols"].as_u64()), (Some(1), Some(1)));
}

#[test]
fn transpose_is_not_cp() {
    assert_eq!(exit(&["choi", "--map", "transpose", "--n", "2"]), 1);
    let rep = report(&["choi", "--map", "transpose", "--n", "2"]);
    let eig = rep.result["cp"]["eigenvalues"].as_array().unwrap();
    assert!(eig.iter().any(|e| e.as_f64().unwrap() < -0.5));
}

#[test]
fn input_errors_exit_two() {
    assert_eq!(exit(&["check-monotone", "--zoo", "no-such-member"]), 2);
    assert_eq!(exit(&["check-monotone"]), 2);
    assert_eq!(exit(&["check-monotone", "--zoo", "square", "--spec", "x.json"]), 2);
    assert_eq!(exit(&["check-monotone", "--zoo", "square", "--dims", "0"]), 2);
    assert_eq!(exit(&["check-monotone", "--spec", "/nonexistent/spec.json"]), 2);
    assert_eq!(exit(&["frobnicate"]), 2);
}

#[test]
fn replays_match_up_to_timestamp() {
    let cases: &[&[&str]] = &[
        &["check-monotone", "--zoo", "neg-inverse", "--trials", "50", "--seed", "3"],
        &["check-concave", "--zoo", "sqrt-re", "--trials", "30", "--seed", "3"],
        &["hypograph-convexity", "--zoo", "square", "--trials", "20", "--seed", "3"],
        &["linearity-test", "--field", "z^2", "--seed", "3"],
    ];
    for args in cases {
        assert_eq!(report(args).replay_key(), report(args).replay_key(), "{args:?}");
    }
}

#[test]
fn reports_carry_schema_keys() {
    let schema: Value =
        serde_json::from_str(include_str!("../../../schemas/experiment_report.schema.json")).unwrap();
    let top: Vec<&str> = schema["required"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    let cfg: Vec<&str> =
        schema["properties"]["config"]["required"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    let cases: &[&[&str]] = &[
        &["zoo"],
        &["check-monotone", "--zoo", "affine-pos", "--trials", "10"],
        &["check-free-axioms", "--zoo", "square", "--trials", "5"],
        &["check-similarity", "--zoo", "square", "--trials", "5"],
        &["derivative-criterion", "--zoo", "neg-inverse", "--trials", "10"],
        &["choi", "--map", "identity"],
        &["re-independence", "--zoo", "neg-re-inverse", "--trials", "10"],
        &["affine-fit", "--zoo", "affine-imag"],
        &["block-construction", "--trials", "5"],
        &["lipschitz-probe", "--zoo", "sqrt-re", "--trials", "10"],
        &["agh-probe", "--trials", "10"],
        &["pluriharmonic", "--field", "z^3", "--trials", "3"],
    ];
    for args in cases {
        let v = serde_json::to_value(report(args)).unwrap();
        for k in &top {
            assert!(v.get(k).is_some(), "{args:?} lacks {k}");
        }
        for k in &cfg {
            assert!(v["config"].get(k).is_some(), "{args:?} lacks config.{k}");
        }
        assert_eq!(v["config"]["command"], args[0]);
        let back: ExperimentReport = serde_json::from_value(v).unwrap();
        assert_eq!(back.config.command, args[0]);
    }
}

#[test]
fn csv_has_one_row_per_trial() {
    let path = std::env::temp_dir().join(format!("realmono-margins-{}.csv", std::process::id()));
    let p = path.to_string_lossy().into_owned();
    let out = std::env::temp_dir().join(format!("realmono-csv-{}.json", std::process::id()));
    let o = out.to_string_lossy().into_owned();
    let code = main_with_args(["realmono", "check-monotone", "--zoo", "square", "--trials", "25", "--csv", &p, "--out", &o]);
    assert!(code == 0 || code == 1);
    let csv = std::fs::read_to_string(&path).unwrap();
    assert_eq!(csv.lines().count(), 26);
    let written: ExperimentReport = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(written.config.trials, 25);
    let _ = std::fs::remove_file(path);
    let _ = std::fs::remove_file(out);
}
