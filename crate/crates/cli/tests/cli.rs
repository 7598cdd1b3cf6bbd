use std::path::Path;
use std::process::{Command, Output};

fn lhvbell(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lhvbell"))
        .args(args)
        .current_dir(dir)
        .env_remove("LHVBELL_GRID_N")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

#[test]
fn bound_deviating_branch() {
    let dir = tempfile::tempdir().unwrap();
    let out = lhvbell(&["bound", "--eta", "0.214", "--v", "0.970"], dir.path());
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["branch"], "DEVIATE");
    let vm: f64 = v["v_max"].as_f64().unwrap();
    let d = v["d"].as_f64().unwrap();
    // Closed form for D, evaluated independently.
    let expect = 4.0 / (3.0 * std::f64::consts::PI)
        * (2.0 / (3.0 * 0.214) - 0.5 - vm * vm).sqrt()
        * (0.970 - vm).powf(1.5);
    assert!((d - expect).abs() < 1e-15, "{d} vs {expect}");
}

#[test]
fn bound_agreeing_branch_and_range_error() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&lhvbell(&["bound", "--eta", "0.2", "--v", "0.5"], dir.path()));
    assert_eq!(v["branch"], "AGREE");
    assert_eq!(v["d"], 0.0);
    let out = lhvbell(&["bound", "--eta", "1.1", "--v", "0.9"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("efficiency out of range"));
}

#[test]
fn nonideal_bound_flags_violation() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["bound", "--eta1", "0.214", "--eta2", "0.214", "--vmax-obs", "0.982", "--vmin-obs", "0.970"];
    let v = json(&lhvbell(&args, dir.path()));
    assert_eq!(v["violated"], true);
    assert!(v["bound"].as_f64().unwrap() < 0.982);
}

#[test]
fn model_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = lhvbell(
        &["model", "--eta", "0.2", "--v", "0.98", "--grid", "512", "--out", "m", "--two-channel"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = dir.path().join("m");
    let mut rdr = csv::Reader::from_path(m.join("delta.csv")).unwrap();
    let deltas: Vec<f64> = rdr.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
    let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
    assert!(mean.abs() < 1e-12, "mean δ = {mean}");

    // Minus-port curves are the plus-port curve shifted by π/2.
    let mut rdr = csv::Reader::from_path(m.join("channels.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["phi_rad", "p_pp", "p_pm", "p_mp", "p_mm"]);
    let rows: Vec<Vec<f64>> = rdr
        .records()
        .map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect())
        .collect();
    let n = rows.len();
    for (j, row) in rows.iter().enumerate() {
        let shifted = &rows[(j + n / 2) % n];
        assert!((row[2] - shifted[1]).abs() < 1e-12);
        assert!((row[3] - shifted[1]).abs() < 1e-12);
        assert!((row[4] - row[1]).abs() < 1e-12);
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(m.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["branch"], "DEVIATE");
    assert_eq!(summary["config_echo"]["grid"], 512);
}

#[test]
fn zero_visibility_model_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let out = lhvbell(&["model", "--eta", "0.3", "--v", "0", "--grid", "256", "--out", "flat"], dir.path());
    assert!(out.status.success());
    let mut rdr = csv::Reader::from_path(dir.path().join("flat/p12.csv")).unwrap();
    for r in rdr.records() {
        let p: f64 = r.unwrap()[1].parse().unwrap();
        assert!((p - 0.0225).abs() < 1e-12, "{p}");
    }
}

#[test]
fn simulate_smoke_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.json"),
        r#"{"mode":"lhv","pairs":10000,"eta":0.2,"v":0.98,"n_angles":16,"seed":3,"grid":512}"#,
    )
    .unwrap();
    for name in ["a.csv", "b.csv"] {
        let out = lhvbell(&["simulate", "--config", "c.json", "--out", name], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());

    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(dir.path().join("a.csv"))
        .unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["angle_rad", "singles_1", "singles_2", "coincidences"]);
    let rows: Vec<Vec<u64>> = rdr
        .records()
        .map(|r| r.unwrap().iter().skip(1).map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 16);
    for r in rows {
        assert!(r[0] <= 10000 && r[1] <= 10000);
        assert!(r[2] <= r[0].min(r[1]));
    }

    let echo: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.csv.config.json")).unwrap()).unwrap();
    assert_eq!(echo["seed"], 3);
    assert_eq!(echo["angles"].as_array().unwrap().len(), 16);
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), "{\"mode\":\"qm\",\n\"pairs\":10,\"eta\":0.2,\"v\":0.9,\"sed\":1}").unwrap();
    let out = lhvbell(&["simulate", "--config", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("sed") && msg.contains("line 2"), "{msg}");
    std::fs::write(dir.path().join("z.json"), r#"{"mode":"qm","pairs":0,"eta":0.2,"v":0.9}"#).unwrap();
    let out = lhvbell(&["simulate", "--config", "z.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn quantum_data_violates_and_local_data_is_consistent() {
    let dir = tempfile::tempdir().unwrap();
    for (mode, code, verdict) in [("qm", 3, "VIOLATES_LHV_FAMILY"), ("lhv", 0, "CONSISTENT_WITH_LHV_FAMILY")] {
        let cfg = format!(
            r#"{{"mode":"{mode}","pairs":1000000000,"eta":0.2,"v":0.98,"n_angles":16,"seed":11,"method":"multinomial","grid":2048}}"#
        );
        std::fs::write(dir.path().join("c.json"), cfg).unwrap();
        assert!(lhvbell(&["simulate", "--config", "c.json", "--out", "d.csv"], dir.path()).status.success());
        let out = lhvbell(&["analyze", "--data", "d.csv", "--config", "c.json"], dir.path());
        assert_eq!(out.status.code(), Some(code), "{}", String::from_utf8_lossy(&out.stderr));
        let report = json(&out);
        assert_eq!(report["verdict"], verdict);
        assert_eq!(report["config_echo"]["eta"], 0.2);
        for key in ["delta_min", "v_fit", "b", "d_bound", "eps", "v_max", "sigma_delta_min"] {
            assert!(!report[key].is_null(), "missing {key}");
        }
    }
}

#[test]
fn two_channel_counts_are_analyzed() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.json"),
        r#"{"mode":"qm","pairs":100000000,"eta":0.2,"v":0.98,"n_angles":16,"seed":2,"two_channel":true,"method":"multinomial"}"#,
    )
    .unwrap();
    assert!(lhvbell(&["simulate", "--config", "c.json", "--out", "d.csv"], dir.path()).status.success());
    let head = std::fs::read_to_string(dir.path().join("d.csv")).unwrap();
    assert!(head.lines().any(|l| l == "angle_rad,n_pp,n_pm,n_mp,n_mm"));
    let out = lhvbell(&["analyze", "--data", "d.csv", "--eta", "0.2"], dir.path());
    let report = json(&out);
    let s = report["s"].as_f64().unwrap();
    assert!((s - 2.0 * 2f64.sqrt() * 0.98).abs() < 0.01, "S = {s}");
}

#[test]
fn ideal_cosine_rates() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = String::from("angle_rad,rate\n");
    for j in 0..=4 {
        let phi = j as f64 * std::f64::consts::PI / 8.0;
        body += &format!("{phi},{}\n", 1.0 + 0.9 * (2.0 * phi).cos());
    }
    std::fs::write(dir.path().join("r.csv"), body).unwrap();
    let out = lhvbell(&["analyze", "--data", "r.csv", "--eta", "0.2", "--visibilities"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert!(report["delta_min"].as_f64().unwrap() < 1e-7);
    assert_eq!(report["verdict"], "CONSISTENT_WITH_LHV_FAMILY");

    let out = lhvbell(&["analyze", "--data", "r.csv", "--eta", "0.2", "--v", "0.98"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn visibilities_need_the_eighth_angles() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("r.csv"), "angle_rad,rate\n0,2\n0.7853981633974483,1\n1.5707963267948966,0.2\n").unwrap();
    let out = lhvbell(&["analyze", "--data", "r.csv", "--eta", "0.2", "--visibilities"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bound_only_reproduces_feasibility() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["analyze", "--bound-only", "--eta", "0.214", "--vmax-obs", "0.982", "--vmin-obs", "0.970"];
    let out = lhvbell(&args, dir.path());
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["test_possible"], true);
    assert!(v["v_max"].as_f64().unwrap() < 0.970);
}

#[test]
fn validate_passes_and_coarse_grid_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = lhvbell(&["validate", "--grid", "1024", "--sweep", "sweep.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    let sweep = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(sweep.starts_with("eta,v,v_max,eps,branch,d"));
    assert!(sweep.contains("DEVIATE"));

    let out = lhvbell(&["validate", "--grid", "64"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("too coarse"));
}
