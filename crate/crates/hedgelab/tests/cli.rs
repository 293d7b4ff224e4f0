//! End-to-end runs of the compiled binary against the bundled fixtures:
//! verdicts, certificates, exit codes, determinism, and document
//! round-trips.

use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::Command;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn run_with_env(args: &[&str], envs: &[(&str, &str)]) -> (i32, String, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hedgelab"));
    cmd.args(args);
    cmd.env_remove("HEDGELAB_SEED");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("the binary runs");
    (
        out.status.code().expect("no signal"),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn report(args: &[&str]) -> Value {
    let (code, stdout, stderr) = run_with_env(args, &[]);
    assert_eq!(code, 0, "command {args:?} failed: {stderr}");
    serde_json::from_str(&stdout).expect("reports are JSON")
}

const GOOD_FIXTURES: [&str; 5] = [
    "four_state_menu.json",
    "binomial_call.json",
    "aip_fails.json",
    "alternating_sequence.json",
    "shrinking_support.json",
];

#[test]
fn bundled_fixtures_validate_and_round_trip() {
    for name in GOOD_FIXTURES {
        let path = fixture(name);
        let r = report(&["validate", "--model", path.to_str().unwrap()]);
        assert_eq!(r["verdict"], "valid", "{name}: {r}");
        assert_eq!(r["certificates"]["violations"], json!([]));

        // Value-identical round trip through the document model.
        let text = std::fs::read_to_string(&path).unwrap();
        let doc = hedgelab::document::parse_document(&text).unwrap();
        let rendered = hedgelab::document::render_document(&doc);
        assert_eq!(hedgelab::document::parse_document(&rendered).unwrap(), doc);
        assert!(hedgelab::document::validate(&doc).is_empty());
    }
}

#[test]
fn broken_fixtures_report_every_violation() {
    let path = fixture("broken/bad_mass.json");
    let r = report(&["validate", "--model", path.to_str().unwrap()]);
    assert_eq!(r["verdict"], "invalid");
    let violations = r["certificates"]["violations"].as_array().unwrap();
    assert!(violations
        .iter()
        .any(|v| v.as_str().unwrap() == "probabilities sum to 9/10 != 1"));

    let path = fixture("broken/bad_partition.json");
    let r = report(&["validate", "--model", path.to_str().unwrap()]);
    assert_eq!(r["verdict"], "invalid");
    let text = r["certificates"]["violations"].to_string();
    assert!(text.contains("atom {u, d} at time 1 splits across earlier atoms"));
    assert!(text.contains("terminal atom {u, d} is not a single outcome"));

    // Any other command refuses the broken document up front.
    let (code, _, stderr) = run_with_env(
        &["check-aip", "--model", fixture("broken/bad_mass.json").to_str().unwrap()],
        &[],
    );
    assert_eq!(code, 2);
    assert!(stderr.contains("invalid input"));
}

#[test]
fn menu_pricing_reproduces_the_worked_example() {
    let path = fixture("four_state_menu.json");
    let r = report(&["price-menu", "--model", path.to_str().unwrap()]);
    assert_eq!(r["verdict"], "infimum [1, 1, 0, 0]");
    let set = &r["certificates"]["price_set"];
    assert_eq!(
        set["entry_prices"],
        json!([
            { "name": "V1", "price": ["1", "1", "1", "1"] },
            { "name": "V2", "price": ["2", "2", "0", "0"] },
        ])
    );
    assert_eq!(set["attained_on"], json!([true, true, true, true]));
    assert_eq!(set["uniform_attainer"], Value::Null);
    assert_eq!(r["certificates"]["assignment"], json!(["V1", "V2"]));
    assert_eq!(
        r["certificates"]["glued_attainer"],
        json!(["0", "1", "3", "4"])
    );
}

#[test]
fn membership_rejects_an_entry_against_the_rest_of_its_menu() {
    let path = fixture("four_state_menu.json");
    let r = report(&[
        "price-membership",
        "--model",
        path.to_str().unwrap(),
        "--claim",
        "V1",
    ]);
    assert_eq!(r["verdict"], "outside the price set");
    assert_eq!(r["certificates"]["candidate"], "V1");
    assert_eq!(
        r["certificates"]["candidate_price"],
        json!(["1", "1", "1", "1"])
    );
    assert_eq!(r["certificates"]["shortfall_outcome"], "w1");

    let (code, _, stderr) = run_with_env(
        &[
            "price-membership",
            "--model",
            path.to_str().unwrap(),
            "--claim",
            "V9",
        ],
        &[],
    );
    assert_eq!(code, 2);
    assert!(stderr.contains("no menu entry named V9"));
}

#[test]
fn the_price_infimum_survives_its_sequence_closure() {
    let path = fixture("four_state_menu.json");
    let r = report(&["closed-price", "--model", path.to_str().unwrap()]);
    assert_eq!(r["verdict"], "invariant");
    assert_eq!(r["certificates"]["infimum"], json!(["1", "1", "0", "0"]));
    let fates = r["certificates"]["sequences"].as_array().unwrap();
    assert_eq!(fates.len(), 1);
    assert_eq!(fates[0]["convergent"], true);
    assert_eq!(fates[0]["lowered_infimum"], false);
}

#[test]
fn the_binomial_call_prices_to_a_third() {
    let path = fixture("binomial_call.json");
    let r = report(&["find-emm", "--model", path.to_str().unwrap()]);
    assert_eq!(r["verdict"], "found");
    assert_eq!(r["certificates"]["q"], json!(["1/3", "2/3"]));
    assert_eq!(r["certificates"]["margin"], "1/3");

    let r = report(&["price", "--model", path.to_str().unwrap()]);
    assert_eq!(r["verdict"], "initial price 1/3");
    assert_eq!(
        r["certificates"]["prices"],
        json!([["1/3", "1/3"], ["1", "0"]])
    );
    assert_eq!(
        r["certificates"]["strategy"]["positions"],
        json!([[["2/3"], ["2/3"]]])
    );

    for cmd in ["check-aip", "check-na", "check-nupbr", "check-aip-stopping"] {
        let r = report(&[cmd, "--model", path.to_str().unwrap()]);
        assert_eq!(r["verdict"], "holds", "{cmd}");
    }
    let r = report(&["maxingale", "sub", "--model", path.to_str().unwrap()]);
    assert_eq!(r["verdict"], "sub-maxingale");
}

#[test]
fn a_price_above_every_tomorrow_is_flagged_with_a_replayable_witness() {
    let path = fixture("aip_fails.json");
    let r = report(&["check-aip", "--model", path.to_str().unwrap()]);
    assert_eq!(r["verdict"], "fails");
    assert_eq!(r["certificates"]["failure"], json!({ "time": 0, "atom": 0 }));
    let witness = &r["certificates"]["witness"];
    assert_eq!(witness["kind"]["type"], "instantaneous-profit");
    assert_eq!(witness["kind"]["floor"], "1");
    assert_eq!(witness["terminal_value"], json!(["1", "2"]));

    for cmd in ["check-na", "check-nupbr"] {
        let r = report(&[cmd, "--model", path.to_str().unwrap()]);
        assert_eq!(r["verdict"], "fails", "{cmd}");
    }
    let r = report(&["find-emm", "--model", path.to_str().unwrap()]);
    assert_eq!(r["verdict"], "none");
}

#[test]
fn sequence_commands_follow_the_alternating_fixture() {
    let path = fixture("alternating_sequence.json");
    let r = report(&["topology", "converges", "--model", path.to_str().unwrap()]);
    assert_eq!(r["verdict"], "all converge");
    let row = &r["certificates"]["sequences"][0];
    assert_eq!(row["canonical_limit"], json!(["-1", "-1"]));

    let r = report(&[
        "topology",
        "is-limit",
        "--model",
        path.to_str().unwrap(),
        "--claim",
        "lower",
    ]);
    assert_eq!(r["verdict"], "limit");
    let r = report(&[
        "topology",
        "is-limit",
        "--model",
        path.to_str().unwrap(),
        "--claim",
        "upper",
    ]);
    assert_eq!(r["verdict"], "not a limit");

    let r = report(&["topology", "cauchy", "--model", path.to_str().unwrap()]);
    assert_eq!(r["verdict"], "not cauchy");
    let witness = &r["certificates"]["sequences"][0]["witness"];
    assert_eq!(witness["kind"], "separated-pair");

    let r = report(&["topology", "pdist", "--model", path.to_str().unwrap()]);
    assert_eq!(r["verdict"], "gauge 0, atomwise 0");
}

#[test]
fn vanishing_support_leaves_the_lower_members_as_the_only_limits() {
    let path = fixture("shrinking_support.json");
    let r = report(&[
        "topology",
        "is-limit",
        "--model",
        path.to_str().unwrap(),
        "--claim",
        "zero",
    ]);
    assert_eq!(r["verdict"], "not a limit");
    // Every prefix excess sits at one, uniformly: the candidate never gets
    // close in probability even though it does pointwise.
    let rows = r["certificates"]["sequences"][0]["prefix_excesses"]
        .as_array()
        .unwrap();
    assert!(!rows.is_empty());
    for row in rows {
        for v in row.as_array().unwrap() {
            assert_eq!(v, "1");
        }
    }

    let r = report(&[
        "topology",
        "is-limit",
        "--model",
        path.to_str().unwrap(),
        "--claim",
        "late-member",
    ]);
    assert_eq!(r["verdict"], "limit");

    let r = report(&["topology", "cauchy", "--model", path.to_str().unwrap()]);
    assert_eq!(r["verdict"], "cauchy");
}

#[test]
fn reports_are_deterministic_apart_from_timing() {
    let path = fixture("four_state_menu.json");
    let args = ["price-menu", "--model", path.to_str().unwrap()];
    let mut first = report(&args);
    let mut second = report(&args);
    first["timing_ms"] = json!(0);
    second["timing_ms"] = json!(0);
    assert_eq!(first, second);
}

#[test]
fn the_seed_comes_from_the_environment_and_is_echoed() {
    let path = fixture("binomial_call.json");
    let (code, stdout, _) = run_with_env(
        &["check-aip-stopping", "--model", path.to_str().unwrap()],
        &[("HEDGELAB_SEED", "7")],
    );
    assert_eq!(code, 0);
    let r: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(r["seed"], 7);
    assert_eq!(r["certificates"]["exhaustive"], true);

    let (code, _, stderr) = run_with_env(
        &["check-aip-stopping", "--model", path.to_str().unwrap()],
        &[("HEDGELAB_SEED", "pancake")],
    );
    assert_eq!(code, 2);
    assert!(stderr.contains("HEDGELAB_SEED"));
}

#[test]
fn input_errors_exit_with_a_diagnostic() {
    let (code, _, stderr) = run_with_env(&["price", "--model", "/no/such/file.json"], &[]);
    assert_eq!(code, 2);
    assert!(stderr.contains("cannot read"));

    let path = fixture("alternating_sequence.json");
    let (code, _, stderr) =
        run_with_env(&["price", "--model", path.to_str().unwrap()], &[]);
    assert_eq!(code, 2);
    assert!(stderr.contains("no payoff"));
}

#[test]
fn the_human_rendering_is_a_readable_summary() {
    let path = fixture("binomial_call.json");
    let (code, stdout, _) = run_with_env(
        &["find-emm", "--model", path.to_str().unwrap(), "--human"],
        &[],
    );
    assert_eq!(code, 0);
    assert!(stdout.starts_with("find-emm: found\n"));
    assert!(stdout.contains("[1/3, 2/3]"));
    assert!(stdout.contains("elapsed:"));
}
