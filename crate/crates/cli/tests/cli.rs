use std::process::{Command, Output};

use serde_json::Value;

fn ars2lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ars2lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_stdout(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("JSON on stdout")
}

#[test]
fn gauss_bonnet_round_sphere() {
    let o = ars2lab(&["gauss-bonnet", "--surface", "round-sphere"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_stdout(&o);
    let integral = v["integral"].as_f64().unwrap();
    assert!((integral - 12.56637).abs() < 1e-4);
    assert!(v["residual"].as_f64().unwrap() < 1e-3);
}

#[test]
fn topology_torus() {
    let o = ars2lab(&["topology", "--surface", "torus-tangency", "--a", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let r = &json_stdout(&o)["report"];
    assert_eq!(r["tau_total"], 0);
    assert_eq!(r["tangencies"].as_array().unwrap().len(), 8);
    assert_eq!(r["chi_plus"], 0);
    assert_eq!(r["chi_minus"], 0);
    assert_eq!(r["residual"], 0);
}

#[test]
fn divergence_csv_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let p = path.to_str().unwrap();
        let o = ars2lab(&["divergence-experiment", "--a", "0.1", "--eps", "0.02:0.03:0.01", "--out", p]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        (std::fs::read(&path).unwrap(), std::fs::read(format!("{p}.json")).unwrap())
    };
    let (a, side_a) = run("a.csv");
    let (b, side_b) = run("b.csv");
    assert_eq!(a, b);
    assert_eq!(side_a, side_b);
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("eps,scaled_kg_difference"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "2.000000000000e-02");
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn geodesic_columns() {
    let o = ars2lab(&[
        "geodesic", "--surface", "grushin-plane", "--x", "0.3", "--y", "-0.2", "--px", "0", "--py", "1",
        "--length", "0.5", "--step", "0.01",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,x,y,p_x,p_y,h");
    assert_eq!(text.lines().count(), 52);
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert!((last[0] - 0.5).abs() < 1e-12);
    assert!((last[5] - 0.5).abs() < 1e-9);
}

#[test]
fn seeded_random_distances_repeat() {
    let args = ["distance", "--surface", "grushin-plane", "--random", "3", "--seed", "7", "--fan", "180"];
    let a = ars2lab(&args);
    let b = ars2lab(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    for line in String::from_utf8(a.stdout).unwrap().lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert!((v[2] - v[0].abs()).abs() < 1e-6, "{line}");
    }
}

#[test]
fn validation_failures_exit_2_with_json() {
    let o = ars2lab(&["validate", "--surface", "no-such-surface"]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "unknown_surface");

    let o = ars2lab(&["box-limit", "--eps", "1e-3,2e-3,3e-3,4e-3"]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "precondition");
}

#[test]
fn numeric_failures_exit_3() {
    // the round sphere has no singular locus to reach
    let o = ars2lab(&["distance", "--surface", "round-sphere", "--point", "1.0,1.0", "--fan", "16"]);
    assert_eq!(o.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "no_hit");
}

#[test]
fn validate_builtin_passes() {
    let o = ars2lab(&["validate", "--surface", "tangency-plane"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json_stdout(&o)["passed"], true);
}
