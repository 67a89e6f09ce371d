use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;
use sheafplectic_cli::manifest::{emit, parse_manifest};
use sheafplectic_cli::run;

fn manifest(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../manifests")
        .join(name)
}

fn json_run(args: &[&str]) -> (i32, Value) {
    let mut full = vec!["sheafplectic".to_string(), "--json".to_string()];
    full.extend(args.iter().map(|s| s.to_string()));
    let out = run(full);
    let value = serde_json::from_str(&out.stdout).unwrap_or(Value::Null);
    (out.code, value)
}

fn temp_manifest(tag: &str, text: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("sheafplectic-{}-{tag}.json", std::process::id()));
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn example_manifests_round_trip() {
    for name in [
        "j4-lagrangian.json",
        "darboux-rank4.json",
        "sierpinski.json",
    ] {
        let text = std::fs::read_to_string(manifest(name)).unwrap();
        let m = parse_manifest(&text).unwrap();
        let emitted = emit(&m);
        assert_eq!(parse_manifest(&emitted).unwrap(), m, "{name}");
        assert_eq!(emit(&parse_manifest(&emitted).unwrap()), emitted, "{name}");
    }
}

#[test]
fn classify_lagrangian_exits_zero() {
    let path = manifest("j4-lagrangian.json");
    let (code, report) = json_run(&["classify", path.to_str().unwrap(), "--sub", "L"]);
    assert_eq!(code, 0);
    assert_eq!(report["verdict"], "value");
    assert_eq!(report["result"]["lagrangian"], true);
    assert_eq!(report["result"]["isotropic"], true);
    assert_eq!(report["result"]["coisotropic"], true);
    assert_eq!(report["result"]["symplectic"], false);
}

#[test]
fn darboux_on_rank_four_form() {
    let path = manifest("darboux-rank4.json");
    let (code, report) = json_run(&["darboux", path.to_str().unwrap(), "--at", "p0"]);
    assert_eq!(code, 0);
    assert_eq!(report["result"]["m"], 2);
    assert_eq!(report["result"]["reconstructs"], true);
    // s¹∧s² + s³∧s⁴ = e¹∧e² + e³∧(2e⁴)
    assert_eq!(
        report["result"]["covectors"]["p0"],
        serde_json::json!([
            ["1", "0", "0", "0"],
            ["0", "1", "0", "0"],
            ["0", "0", "1", "0"],
            ["0", "0", "0", "2"]
        ])
    );
}

#[test]
fn seeded_darboux_puts_seed_second() {
    let path = manifest("darboux-rank4.json");
    let (code, report) = json_run(&[
        "darboux",
        path.to_str().unwrap(),
        "--at",
        "p0",
        "--seed",
        "seed",
    ]);
    assert_eq!(code, 0);
    assert_eq!(
        report["result"]["covectors"]["p0"][1],
        serde_json::json!(["0", "0", "-2", "0"])
    );
}

#[test]
fn sierpinski_darboux_reorders_pivots() {
    let path = manifest("sierpinski.json");
    let (code, report) = json_run(&["darboux", path.to_str().unwrap(), "--at", "b"]);
    assert_eq!(code, 0);
    assert_eq!(
        report["result"]["neighborhood"],
        serde_json::json!(["a", "b"])
    );
    assert_eq!(
        report["result"]["trace"][0]["pivot"]["indices"],
        serde_json::json!([1, 3])
    );
}

#[test]
fn reduce_rejects_non_coisotropic() {
    let path = manifest("j4-lagrangian.json");
    let (code, report) = json_run(&["reduce", path.to_str().unwrap(), "--sub", "G"]);
    assert_eq!(code, 1);
    assert_eq!(report["witnesses"][0]["error"], "not coisotropic");
    assert_eq!(report["witnesses"][0]["point"], "p0");
    let (code, report) = json_run(&[
        "reduce",
        path.to_str().unwrap(),
        "--sub",
        "F",
        "--lagrangian",
        "L",
    ]);
    assert_eq!(code, 0);
    assert_eq!(report["result"]["dim"]["p0"], 2);
    assert_eq!(
        report["result"]["reduced_form"]["p0"],
        serde_json::json!([["0", "1"], ["-1", "0"]])
    );
    assert_eq!(report["result"]["lagrangian_image"]["half_dimension"], true);
}

#[test]
fn check_suites_pass_on_symplectic_manifest() {
    let path = manifest("j4-lagrangian.json");
    for suite in [
        "annihilator-theorem",
        "transpose",
        "hom-exactness",
        "reduction",
    ] {
        let (code, report) = json_run(&[
            "check",
            path.to_str().unwrap(),
            "--suite",
            suite,
            "--seed-rng",
            "7",
        ]);
        assert_eq!(code, 0, "{suite}: {report}");
        assert_eq!(report["verdict"], "pass");
    }
}

#[test]
fn unknown_names_exit_one() {
    let path = manifest("j4-lagrangian.json");
    let (code, report) = json_run(&[
        "annihilator",
        path.to_str().unwrap(),
        "--pairing",
        "Q",
        "--sub",
        "L",
    ]);
    assert_eq!(code, 1);
    assert_eq!(report["witnesses"][0]["kind"], "pairing");
    assert_eq!(report["witnesses"][0]["symbol"], "Q");
}

#[test]
fn usage_and_input_errors() {
    let out = run(["sheafplectic", "frobnicate"]);
    assert_eq!(out.code, 2);
    let out = run(["sheafplectic", "validate", "/nonexistent/manifest.json"]);
    assert_eq!(out.code, 3);
    let bad = temp_manifest(
        "zero-denominator",
        r#"{"format": "sheafplectic-manifest/1", "space": {"points": ["a"]}, "field": "Q", "rank": 1,
            "morphisms": {"S": {"a": [["1/0"]]}}}"#,
    );
    let out = run(["sheafplectic", "validate", bad.to_str().unwrap()]);
    assert_eq!(out.code, 3);
    assert!(out.stderr.contains("line 2"), "{}", out.stderr);
    std::fs::remove_file(bad).unwrap();
}

#[test]
fn point_cap_can_be_lowered_from_the_environment() {
    let path = manifest("sierpinski.json");
    let status = |cap: &str| {
        Command::new(env!("CARGO_BIN_EXE_sheafplectic"))
            .env("SHEAFPLECTIC_MAX_POINTS", cap)
            .args(["validate", path.to_str().unwrap()])
            .output()
            .unwrap()
    };
    let low = status("1");
    assert_eq!(low.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&low.stderr).contains("space.points"));
    assert_eq!(status("2").status.code(), Some(0));
    // raising above the built-in cap has no effect
    assert_eq!(status("100").status.code(), Some(0));
}

#[test]
fn timing_is_opt_in() {
    let path = manifest("j4-lagrangian.json");
    let (_, plain) = json_run(&["validate", path.to_str().unwrap()]);
    assert!(plain.get("timing_ms").is_none());
    let (_, timed) = json_run(&["--timing", "validate", path.to_str().unwrap()]);
    assert!(timed["timing_ms"].is_u64());
}
