//! End-to-end tests driving the compiled `qutel` binary.

use std::path::PathBuf;
use std::process::Command;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

struct Run {
    code: i32,
    envelope: Option<serde_json::Value>,
    stderr: String,
}

impl Run {
    fn result(&self) -> &serde_json::Value {
        &self.envelope.as_ref().expect("stdout should carry a JSON envelope")["result"]
    }
}

fn qutel(args: &[&str]) -> Run {
    let output = Command::new(env!("CARGO_BIN_EXE_qutel"))
        .args(args)
        .output()
        .expect("binary should run");
    let stdout = String::from_utf8_lossy(&output.stdout).into_owned();
    Run {
        code: output.status.code().expect("no exit code"),
        envelope: serde_json::from_str(&stdout).ok(),
        stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
    }
}

#[test]
fn classify_reports_the_bell_pair_capable_with_exit_zero() {
    let run = qutel(&["classify", "--resource", &fixture("bell.json")]);
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    let result = run.result();
    assert_eq!(result["verdict"], "capable");
    assert_eq!(result["kind"], "pure-max-ent");
    assert!((result["entanglement"]["bits"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(result["entanglement"]["threshold_met"], true);
    assert_eq!(result["certificate"]["protocol"], "sender-first");
    assert_eq!(result["certificate"]["outcomes"], 4);
}

#[test]
fn classify_rejects_the_product_state_with_exit_two() {
    let run = qutel(&["classify", "--resource", &fixture("product.json")]);
    assert_eq!(run.code, 2, "stderr: {}", run.stderr);
    let result = run.result();
    assert_eq!(result["verdict"], "not-capable");
    assert!(result["reason"].as_str().unwrap().contains("Schmidt"));
}

#[test]
fn classify_recovers_the_two_block_structure() {
    let run = qutel(&["classify", "--resource", &fixture("two_block.json")]);
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    let result = run.result();
    assert_eq!(result["kind"], "mixed-max-ent");
    assert_eq!(result["detail"]["blocks"], 2);
    assert_eq!(result["detail"]["blocks_on"], "sender");
    assert_eq!(result["entanglement"]["exact"], true);
    assert!((result["entanglement"]["bits"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn simulating_through_the_bell_pair_is_faithful() {
    let run = qutel(&["simulate", "--resource", &fixture("bell.json")]);
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    let result = run.result();
    assert_eq!(result["mode"], "sender-first");
    assert_eq!(result["faithful"], true);
    let outcomes = result["outcomes"].as_array().unwrap();
    assert_eq!(outcomes.len(), 4);
    for o in outcomes {
        assert!((o["probability"].as_f64().unwrap() - 0.25).abs() < 1e-10);
        assert!((o["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    }
    assert!((result["expected_fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn simulating_through_the_five_level_resource_shows_the_block_profile() {
    let run = qutel(&["simulate", "--resource", &fixture("five_level.json")]);
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    let result = run.result();
    assert_eq!(result["mode"], "sender-first");
    let outcomes = result["outcomes"].as_array().unwrap();
    assert_eq!(outcomes.len(), 10);
    let quarter_weight = outcomes
        .iter()
        .filter(|o| (o["probability"].as_f64().unwrap() - 0.125).abs() < 1e-9)
        .count();
    let sixth_weight = outcomes
        .iter()
        .filter(|o| (o["probability"].as_f64().unwrap() - 1.0 / 12.0).abs() < 1e-9)
        .count();
    assert_eq!((quarter_weight, sixth_weight), (4, 6));
    assert!((result["expected_fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn simulating_through_a_product_state_falls_back_to_best_effort() {
    let run = qutel(&[
        "simulate",
        "--resource",
        &fixture("product.json"),
        "--trials",
        "600",
        "--seed",
        "9",
    ]);
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    let result = run.result();
    assert_eq!(result["mode"], "best-effort");
    assert_eq!(result["faithful"], false);
    let average = result["average_fidelity"].as_f64().unwrap();
    assert!(
        (average - 2.0 / 3.0).abs() < 0.05,
        "average fidelity {average} far from the 2/3 no-resource baseline"
    );
}

#[test]
fn an_input_file_is_accepted_and_echoed() {
    let run = qutel(&[
        "simulate",
        "--resource",
        &fixture("bell.json"),
        "--input",
        &fixture("input_plus_i.json"),
    ]);
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    let result = run.result();
    assert_eq!(result["input"]["source"], "file");
    assert!((result["expected_fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn an_input_of_the_wrong_dimension_is_rejected() {
    let run = qutel(&[
        "simulate",
        "--resource",
        &fixture("bell.json"),
        "--input",
        &fixture("input_plus_i.json"),
        "--input-dim",
        "3",
    ]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("dimension"));
}

#[test]
fn entanglement_of_the_five_level_resource_matches_the_closed_form() {
    let run = qutel(&[
        "entanglement",
        "--resource",
        &fixture("five_level.json"),
    ]);
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    let ent = &run.result()["entanglement"];
    let expected = 1.0 + 0.5 * 6.0_f64.log2();
    assert!((ent["bits"].as_f64().unwrap() - expected).abs() < 1e-10);
    assert_eq!(ent["exact"], true);
    assert_eq!(ent["threshold_met"], true);
}

#[test]
fn the_two_block_demo_succeeds() {
    let run = qutel(&["demo", "two-block"]);
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    let result = run.result();
    assert_eq!(result["classification"]["kind"], "mixed-max-ent");
    assert_eq!(result["simulation"]["faithful"], true);
}

#[test]
fn the_channel_demo_folds_exactly_and_shows_the_noise_contrast() {
    let run = qutel(&["demo", "channel"]);
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    let stages = run.result()["stages"].as_array().unwrap();
    assert_eq!(stages.len(), 3);
    assert_eq!(stages[0]["classification"]["verdict"], "capable");
    let residual = stages[1]["residual_vs_reference_mixture"].as_f64().unwrap();
    assert!(residual <= 1e-12, "fold residual {residual}");
    assert_eq!(stages[1]["classification"]["kind"], "mixed-max-ent");
    assert_eq!(stages[2]["classification"]["verdict"], "not-capable");
}

#[test]
fn the_five_level_demo_reports_the_grouped_profile() {
    let run = qutel(&["demo", "five-level", "--mixing", "0.3"]);
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    let result = run.result();
    assert_eq!(result["classification"]["kind"], "grouped-schmidt");
    let groups = result["classification"]["detail"]["groups"].as_array().unwrap();
    assert_eq!(groups.len(), 2);
}

#[test]
fn the_check_command_passes_and_exits_zero() {
    let run = qutel(&["check", "--samples", "2", "--seed", "3"]);
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    let result = run.result();
    assert_eq!(result["all_passed"], true);
    assert_eq!(result["suites"].as_array().unwrap().len(), 5);
}

#[test]
fn repeated_runs_produce_identical_result_subtrees() {
    let first = qutel(&["classify", "--resource", &fixture("two_block.json")]);
    let second = qutel(&["classify", "--resource", &fixture("two_block.json")]);
    assert_eq!(first.result(), second.result());

    let args = [
        "simulate",
        "--resource",
        &fixture("product.json"),
        "--trials",
        "200",
        "--seed",
        "11",
    ];
    let first = qutel(&args);
    let second = qutel(&args);
    assert_eq!(first.result(), second.result());
}

#[test]
fn malformed_state_files_fail_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(
        &path,
        r#"{ "kind": "pure", "dims": [2, 2], "data": [[0.9, 0], [0, 0], [0, 0], [0.1, 0]] }"#,
    )
    .unwrap();
    let run = qutel(&["classify", "--resource", path.to_str().unwrap()]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("norm"), "stderr: {}", run.stderr);
}
