use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_locality")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn consensus_feasibility_certificate_exits_two() {
    let out = run(&["consensus", "feasibility", "--n", "8", "--b", "1", "--measure", "ave"]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["verdict"], "Infeasible");
    assert_eq!(v["rank"], 7);
    assert_eq!(v["threshold"], 3);
    assert!(v["witnessRowSums"].as_array().unwrap().iter().all(|s| (s.as_f64().unwrap() - 1.0).abs() < 1e-9));
}

#[test]
fn consensus_h2_of_static_gain() {
    let out = run(&["consensus", "h2", "--n", "4", "--gamma", "1", "--controller", "ks"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), r#"{"h2Squared":4.625}"#);
}

#[test]
fn consensus_h2_of_proper_approximation_approaches_static() {
    let ks = json(&run(&["consensus", "h2", "--n", "4", "--controller", "ks"]))["h2Squared"].as_f64().unwrap();
    let gaps: Vec<f64> = ["-10", "-100", "-1000"]
        .iter()
        .map(|a| {
            let v = json(&run(&["consensus", "h2", "--n", "4", "--controller", "ka", "--a", a]));
            (v["h2Squared"].as_f64().unwrap() - ks).abs()
        })
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2]);
}

#[test]
fn gap_demo_reports_and_exits_zero() {
    let out = run(&["consensus", "gap-demo", "--n", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verdict"], "Infeasible");
    assert!((v["h2Values"]["ks"].as_f64().unwrap() - 10.625).abs() < 1e-9);
    assert_eq!(v["structureWitnesses"]["ksClosedLoopTfStructured"], false);
}

#[test]
fn tridiag_counterexample_is_not_tf_structured() {
    let out = run(&["structure", "check", "--input", &data("tridiag3.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["tfStructured"], false);
    assert_eq!(v["realization"]["structured"], true);
    assert_eq!(v["realization"]["network"], true);
}

#[test]
fn three_node_phi_u_realizes_on_the_path() {
    let v = json(&run(&["structure", "realize", "--input", &data("three_node_phi_u.json")]));
    assert_eq!(v["witness"]["structured"], true);
    assert_eq!(v["witness"]["network"], true);
    assert_eq!(v["realization"]["A"].as_array().unwrap().len(), 4);
}

#[test]
fn three_node_closed_loops_check_recover_implement() {
    let input = data("three_node_loops.json");
    let chk = json(&run(&["sls", "check", "--input", &input]));
    assert_eq!(chk["satisfied"], true);
    assert!(chk["residual"].as_f64().unwrap() < 1e-10);

    let rec = json(&run(&["sls", "recover", "--input", &input]));
    let k = &rec["controller"]["rational"]["entries"];
    // K(0) = 0: every numerator has a zero constant term
    for row in k.as_array().unwrap() {
        for e in row.as_array().unwrap() {
            assert!(e["num"][0].as_f64().unwrap().abs() < 1e-9);
        }
    }

    let imp = json(&run(&["sls", "implement", "--input", &input]));
    assert_eq!(imp["witness"]["structured"], true);
}

#[test]
fn static_ring_loop_has_shared_realization() {
    let v = json(&run(&["sls", "closed-loops", "--input", &data("ring4_ks_loop.json")]));
    assert_eq!(v["phiX"]["A"], v["phiU"]["A"]);
    assert_eq!(v["phiX"]["A"][0], serde_json::json!([-2.0, 1.0, 0.0, 1.0]));
}

#[test]
fn relative_check_and_decompose() {
    let input = data("ks4.json");
    assert_eq!(json(&run(&["relative", "check", "--input", &input]))["relative"], true);
    let v = json(&run(&["relative", "decompose", "--input", &input]));
    assert!(v["reconstructionError"].as_f64().unwrap() < 1e-10);
    for t in v["terms"].as_array().unwrap() {
        let (i, j) = (t["i"].as_u64().unwrap(), t["j"].as_u64().unwrap());
        assert!(i < j && (j - i == 1 || j - i == 3), "edge ({i}, {j}) not on the ring");
    }
}

#[test]
fn spatial_commands() {
    let out = run(&["spatial", "feasibility", "--d", "2", "--n", "5", "--b", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["excludedCount"], 16);
    let v = json(&run(&["spatial", "h2", "--input", &data("stencil2d.json")]));
    assert!((v["h2Squared"].as_f64().unwrap() - 5.0 / 6.0).abs() < 1e-12);
    assert!((v["parsevalH2Squared"].as_f64().unwrap() - 5.0 / 6.0).abs() < 1e-8);
}

#[test]
fn csv_output_flattens_with_dotted_keys() {
    let out = run(&["spatial", "feasibility", "--d", "1", "--n", "8", "--b", "1", "--output", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("key,value"));
    assert!(text.lines().any(|l| l == "excludedCount,5"));
    assert!(text.lines().any(|l| l.starts_with("excludedOffsets.0.0,")));
}

#[test]
fn errors_exit_one() {
    assert_eq!(run(&["consensus", "feasibility", "--n", "8", "--b", "4"]).status.code(), Some(1));
    assert_eq!(run(&["structure", "check"]).status.code(), Some(1));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["relative", "check", "--input", "/nonexistent.json"]).status.code(), Some(1));
}

#[test]
fn output_is_deterministic() {
    let cases: [&[&str]; 3] = [
        &["consensus", "gap-demo", "--n", "6"],
        &["relative", "decompose", "--input", &data("ks4.json"), "--seed", "3"],
        &["sls", "recover", "--input", &data("three_node_loops.json")],
    ];
    for args in cases {
        assert_eq!(run(args).stdout, run(args).stdout, "{args:?}");
    }
}
