use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cloudbench::elasticity::{ElasticityMetrics, Ranking};
use cloudbench::isolation::IsolationReport;
use cloudbench::risk::ServiceRisk;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cloudbench"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON report")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn core_fixture(rel: &str) -> String {
    format!("{}/../core/fixtures/{rel}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn perfect_trace_reports_zero_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "perfect.csv", "time,demand,supply\n0,2,2\n600,3,3\n1200,3,3\n");
    let report = json(&run(&["elasticity", s(&t)]));
    let m: ElasticityMetrics = serde_json::from_value(report["traces"][0]["metrics"].clone()).unwrap();
    assert!(m.is_zero());
}

#[test]
fn two_traces_are_ranked_against_the_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "slow.csv", "time,demand,supply\n0,2,2\n600,3,2\n900,3,3\n1200,3,3\n");
    let b = write(dir.path(), "fast.csv", "time,demand,supply\n0,2,2\n600,3,2\n660,3,4\n720,3,3\n1200,3,3\n");
    let report = json(&run(&["elasticity", s(&a), s(&b), "--baseline", "slow"]));
    let ranking: Ranking = serde_json::from_value(report["ranking"].clone()).unwrap();
    assert_eq!(ranking.baseline_id, "slow");
    assert_eq!(ranking.order(), vec!["fast", "slow"]);

    let table = run(&["--format", "table", "elasticity", s(&a), s(&b), "--baseline", "1"]);
    let text = String::from_utf8(table.stdout).unwrap();
    assert!(text.contains("acc_O [#res.]") && text.contains("baseline: slow"), "{text}");
}

#[test]
fn malformed_row_exits_2_with_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "bad.csv", "time,demand,supply\n# comment\n0,2,2\n60,x,2\n120,2,2\n");
    let out = run(&["elasticity", s(&t)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.csv:4:"), "{err}");
}

#[test]
fn malformed_json_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "sla.json", "{\n  \"quantum_min\": 5,\n  oops\n}");
    let out = run(&["availability", "--sla", s(&p)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sla.json:3"));
}

#[test]
fn missing_file_exits_1() {
    assert_eq!(run(&["elasticity", "/nonexistent/trace.csv"]).status.code(), Some(1));
}

#[test]
fn domain_error_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "r.csv", "time,provisioned,demanded,used\n0,4,2,3\n100,4,2,3\n");
    let out = run(&["risk", s(&t)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("U <= D"));
}

fn isolation_report(points: &str) -> IsolationReport {
    let dir = tempfile::tempdir().unwrap();
    let c = write(dir.path(), "curve.csv", points);
    serde_json::from_value(json(&run(&["isolation", "--curve", s(&c)]))).unwrap()
}

#[test]
fn isolation_curve_extremes() {
    let diagonal = isolation_report("W_d,W_a\n10,20\n20,10\n30,0\n40,0\n");
    assert!(diagonal.i_int_base.value().unwrap().abs() < 1e-12);
    let constant = isolation_report("W_d,W_a\n10,20\n20,20\n30,20\n");
    assert!((constant.i_int_base.value().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn curve_short_of_w_d_base_marks_i_base() {
    let r = isolation_report("W_d,W_a\n10,20\n15,16\n20,12\n");
    assert!(r.i_base.value().is_none());
    assert!(r.i_end.value().is_none());
    assert!(r.i_int_base.value().is_none());
}

#[test]
fn isolation_from_observations_only() {
    let dir = tempfile::tempdir().unwrap();
    let obs = |d: f64, z: f64| {
        format!(r#"{{"workloads": {{"abiding": {{"a": 10}}, "disruptive": {{"d": {d}}}}}, "qos": {{"a": {z}, "d": null}}}}"#)
    };
    let text = format!(
        "[{{\"reference\": {}, \"disrupted\": {}}}, {{\"reference\": {}, \"disrupted\": {}}}]",
        obs(10.0, 0.1),
        obs(15.0, 0.11),
        obs(10.0, 0.1),
        obs(20.0, 0.12)
    );
    let p = write(dir.path(), "obs.json", &text);
    let r: IsolationReport = serde_json::from_value(json(&run(&["isolation", "--observations", s(&p), "--m", "2"]))).unwrap();
    // Δz = 0.1, Δw = 0.25 and Δz = 0.2, Δw = 0.5: both 0.4.
    assert!((r.i_avg.value().unwrap() - 0.4).abs() < 1e-12);
    assert!(r.i_int_base.value().is_none());
    assert_eq!(run(&["isolation", "--observations", s(&p), "--m", "3"]).status.code(), Some(3));
}

#[test]
fn sla_fixture_strictness() {
    let slas = ["sla/google_compute.json", "sla/amazon_ec2.json", "sla/azure.json"].map(core_fixture);
    let mut args = vec!["availability"];
    for s in &slas {
        args.extend(["--sla", s.as_str()]);
    }
    let report = json(&run(&args));
    let values: Vec<f64> = report["slas"].as_array().unwrap().iter().map(|e| e["strictness"].as_f64().unwrap()).collect();
    assert_eq!(values.len(), 3);
    for (v, want) in values.iter().zip([1.0, 1.4, 2.4]) {
        assert!((v - want).abs() < 1e-12, "{values:?}");
    }
}

#[test]
fn availability_log_with_adherence() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("timestamp,status\n");
    // June 2024, one 3-minute outage.
    let start = 1_717_200_000u64;
    for i in 0..43_200u64 {
        let down = (1000..1003).contains(&i);
        text.push_str(&format!("{},{}\n", start + 60 * i, if down { "down" } else { "up" }));
    }
    let log = write(dir.path(), "log.csv", &text);
    let ec2 = core_fixture("sla/amazon_ec2.json");
    let gce = core_fixture("sla/google_compute.json");
    let report = json(&run(&["availability", "--log", s(&log), "--sla", &ec2, "--sla", &gce]));
    let month = |i: usize| report["slas"][i]["months"][0]["availability"].as_f64().unwrap();
    assert!((month(0) - (43_200.0 - 3.0) / 43_200.0).abs() < 1e-12);
    assert_eq!(month(1), 1.0);
    assert_eq!(report["slas"][0]["adherence"]["observed"], 1);
    assert_eq!(report["log"]["downtime_periods"].as_array().unwrap().len(), 1);
}

#[test]
fn perfect_risk_trace_has_zero_risk() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "r.csv", "time,provisioned,demanded,used\n0,4,4,4\n50,6,6,6\n100,6,6,6\n");
    let report = json(&run(&["risk", s(&t)]));
    let r: ServiceRisk = serde_json::from_value(report["services"][0]["risk"].clone()).unwrap();
    assert_eq!((r.r_p, r.r_c, r.r_e), (0.0, 0.0, 0.0));
}

#[test]
fn rank_command_reads_metrics_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "m.json",
        r#"[{"id": "a", "metrics": {"acc_U": 0.2, "acc_O": 1.0, "ts_U": 0.1, "ts_O": 0.5, "jitter": 0}},
            {"id": "b", "metrics": {"acc_U": 0.1, "acc_O": 0.5, "ts_U": 0.05, "ts_O": 0.25, "jitter": 0}}]"#,
    );
    let report = json(&run(&["rank", s(&p)]));
    let ranking: Ranking = serde_json::from_value(report["ranking"].clone()).unwrap();
    assert_eq!(ranking.order(), vec!["b", "a"]);
    assert!((ranking.ranked[0].elastic_speedup - 2.0).abs() < 1e-12);
}

#[test]
fn sim_is_deterministic_and_writes_traces() {
    let scenario = format!("{}/fixtures/scenario.json", env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::tempdir().unwrap();
    let outputs: Vec<(String, Vec<u8>)> = ["a", "b"]
        .iter()
        .map(|name| {
            let report = dir.path().join(format!("{name}.json"));
            let out = run(&["sim", &scenario, "--out", s(&report)]);
            assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
            let mut files = Vec::new();
            for suffix in ["intensity.csv", "elasticity.csv", "risk.csv", "isolation.csv", "availability.csv"] {
                files.extend(fs::read(dir.path().join(format!("{name}.{suffix}"))).unwrap());
            }
            (fs::read_to_string(&report).unwrap(), files)
        })
        .collect();
    let strip = |r: &str| r.replace("a.", "X.").replace("b.", "X.");
    assert_eq!(strip(&outputs[0].0), strip(&outputs[1].0));
    assert_eq!(outputs[0].1, outputs[1].1);

    // The emitted traces feed straight back into the metric commands.
    let trace = dir.path().join("a.elasticity.csv");
    let back = json(&run(&["elasticity", s(&trace)]));
    let report: Value = serde_json::from_str(&outputs[0].0).unwrap();
    assert_eq!(back["traces"][0]["metrics"], report["elasticity"]["metrics"]);
    let risk = dir.path().join("a.risk.csv");
    assert!(run(&["risk", s(&risk)]).status.success());
    let curve = dir.path().join("a.isolation.csv");
    let marks = dir.path().join("a.isolation.marks.json");
    assert!(run(&["isolation", "--curve", s(&curve), "--marks", s(&marks)]).status.success());

    let reseeded = dir.path().join("c.json");
    assert!(run(&["sim", &scenario, "--out", s(&reseeded), "--seed", "99"]).status.success());
    assert_ne!(fs::read(dir.path().join("c.intensity.csv")).unwrap(), fs::read(dir.path().join("a.intensity.csv")).unwrap());
}
