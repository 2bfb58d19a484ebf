use std::collections::HashMap;
use std::process::{Command, Output};

fn weakmet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weakmet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_ok(args: &[&str]) -> String {
    let out = weakmet(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json_ok(args: &[&str]) -> serde_json::Value {
    serde_json::from_str(&stdout_ok(args)).unwrap()
}

fn metadata(csv: &str) -> HashMap<String, String> {
    let first = csv.lines().next().unwrap();
    first
        .strip_prefix("# ")
        .expect("metadata line starts with '# '")
        .split(' ')
        .map(|kv| {
            let (k, v) = kv.split_once('=').unwrap();
            (k.to_string(), v.to_string())
        })
        .collect()
}

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(2)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

#[test]
fn fig1_rows_sum_to_joint_information() {
    let csv = stdout_ok(&["fig1", "--n", "4", "--points", "5"]);
    assert_eq!(csv.lines().nth(1).unwrap(), "g,F_p,pdQd,prQr,F_tot,Q_j");
    let meta = metadata(&csv);
    assert_eq!(meta["command"], "fig1");
    assert_eq!(meta["n"].parse::<f64>().unwrap(), 4.0);
    let data = rows(&csv);
    assert_eq!(data.len(), 5);
    assert_eq!(data[0][0], 0.0);
    assert_eq!(data[4][0], std::f64::consts::FRAC_PI_2);
    for r in &data {
        let sum = r[1] + r[2] + r[3];
        assert!((sum - 80.0).abs() <= 1e-6 * 80.0, "row {r:?}");
        assert_eq!(r[5], 80.0);
    }
}

#[test]
fn fig2_columns() {
    let csv = stdout_ok(&["fig2", "--n-max", "6"]);
    assert_eq!(csv.lines().nth(1).unwrap(), "n,pdQd,prQr,Q_j,classical_4n");
    let data = rows(&csv);
    assert_eq!(data.len(), 6);
    for (i, r) in data.iter().enumerate() {
        let n = (i + 1) as f64;
        assert_eq!(r[0], n);
        assert_eq!(r[4], 4.0 * n);
        assert!((r[3] - (4.0 * n * n + 4.0 * n)).abs() < 1e-9 * r[3]);
    }
}

#[test]
fn eigenstate_breakdown() {
    let v = json_ok(&[
        "breakdown", "--scenario", "config-gauss", "--sigma", "1", "--theta-i", "0", "--theta-f", "0", "--phi0",
        "0", "--g", "0.3",
    ]);
    assert!((v["breakdown"]["f_tot"].as_f64().unwrap() - 4.0).abs() < 1e-12);
    let inputs = &v["inputs"];
    assert_eq!(inputs["scenario"], "config-gauss");
    for (key, value) in [("sigma", 1.0), ("theta_i", 0.0), ("theta_f", 0.0), ("phi0", 0.0), ("g", 0.3)] {
        assert_eq!(inputs[key].as_f64().unwrap(), value, "{key}");
    }
}

#[test]
fn sampled_profile_matches_closed_form() {
    let common = ["--sigma", "1", "--theta-i", "1.2", "--theta-f", "0.7", "--phi0", "-0.4", "--g", "0.5"];
    let sampled: Vec<&str> = ["breakdown", "--scenario", "sampled", "--profile", "gaussian"]
        .into_iter()
        .chain(common)
        .collect();
    let closed: Vec<&str> = ["breakdown", "--scenario", "config-gauss"].into_iter().chain(common).collect();
    let a = json_ok(&sampled)["breakdown"].clone();
    let b = json_ok(&closed)["breakdown"].clone();
    for key in ["p_d", "q_d", "q_r", "f_p", "f_tot"] {
        let (x, y) = (a[key].as_f64().unwrap(), b[key].as_f64().unwrap());
        assert!((x - y).abs() <= 1e-6 * y.abs().max(1e-12), "{key}: {x} vs {y}");
    }
}

#[test]
fn qfi_check_reports_small_errors() {
    for scenario in [["--scenario", "config-gauss", "--sigma", "0.8"], ["--scenario", "phase", "--n", "3"]] {
        let args: Vec<&str> = ["qfi-check"]
            .into_iter()
            .chain(scenario)
            .chain(["--theta-i", "1", "--theta-f", "2", "--phi0", "0.4", "--g", "0.3"])
            .collect();
        let v = json_ok(&args);
        assert_eq!(v["report"]["checks"].as_array().unwrap().len(), 5);
        assert!(v["report"]["max_relative_error"].as_f64().unwrap() < 1e-6);
    }
}

#[test]
fn monte_carlo_example() {
    let v = json_ok(&[
        "mc", "--scenario", "phase", "--n", "4", "--theta-i", "1.5708", "--theta-f", "1.5708", "--phi0", "1.5708",
        "--g", "0.05", "--trials", "100000", "--repeats", "200", "--seed", "42",
    ]);
    let s = &v["summary"];
    let ratio = s["variance_over_crb"].as_f64().unwrap();
    assert!((0.8..=1.2).contains(&ratio), "ratio {ratio}");
    let direct = s["g_hat_variance"].as_f64().unwrap() / s["crb"].as_f64().unwrap();
    assert!((ratio - direct).abs() < 1e-12 * ratio);
    assert_eq!(s["repeats"].as_u64().unwrap(), 200);
    assert_eq!(v["inputs"]["seed"].as_u64().unwrap(), 42);
    assert_eq!(v["inputs"]["trials"].as_u64().unwrap(), 100_000);
}

#[test]
fn csv_output_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let requests: [&[&str]; 3] = [
        &["fig1", "--n", "7.5", "--points", "33"],
        &["fig2", "--n-max", "12", "--phi0", "2.5"],
        &[
            "sweep", "--scenario", "phase", "--n", "2", "--theta-i", "0.9", "--theta-f", "2.1", "--phi0", "1",
            "--g-min", "-1", "--g-max", "2", "--points", "40",
        ],
    ];
    for (i, req) in requests.iter().enumerate() {
        let mut texts = Vec::new();
        for run in 0..2 {
            let path = dir.path().join(format!("out{i}_{run}.csv"));
            let mut args = req.to_vec();
            let p = path.to_str().unwrap().to_string();
            args.extend(["--output", &p]);
            let out = weakmet(&args);
            assert!(out.status.success() && out.stdout.is_empty());
            texts.push(std::fs::read(&path).unwrap());
        }
        assert_eq!(texts[0], texts[1]);
        let text = String::from_utf8(texts.swap_remove(0)).unwrap();
        assert!(!text.contains('\r') && text.ends_with('\n'));
        assert_eq!(text, stdout_ok(req));
    }
}

#[test]
fn numeric_flags_round_trip_into_metadata() {
    let csv = stdout_ok(&[
        "sweep", "--scenario", "sampled", "--profile", "chirped", "--sigma", "0.7", "--beta", "-1.3", "--p0",
        "0.25", "--theta-i", "0.1", "--theta-f", "3.0", "--phi0", "-2.75", "--g-min", "0", "--g-max", "0.5",
        "--points", "3", "--regime", "general",
    ]);
    let meta = metadata(&csv);
    for (key, value) in [
        ("sigma", 0.7),
        ("beta", -1.3),
        ("p0", 0.25),
        ("theta_i", 0.1),
        ("theta_f", 3.0),
        ("phi0", -2.75),
        ("g_min", 0.0),
        ("g_max", 0.5),
        ("points", 3.0),
    ] {
        assert_eq!(meta[key].parse::<f64>().unwrap(), value, "{key}");
    }
    assert_eq!(meta["profile"], "chirped");
    assert_eq!(meta["regime"], "general");
    assert_eq!(rows(&csv).len(), 3);
}

#[test]
fn validation_failures_exit_with_2() {
    let cases: [&[&str]; 7] = [
        &["breakdown", "--scenario", "config-gauss", "--theta-i", "0", "--theta-f", "0", "--phi0", "0", "--g", "0"],
        &["breakdown", "--scenario", "phase", "--n", "1", "--theta-i", "4", "--theta-f", "0", "--phi0", "0", "--g", "0"],
        &["breakdown", "--scenario", "wave", "--theta-i", "0", "--theta-f", "0", "--phi0", "0", "--g", "0"],
        &["fig1", "--n", "-1"],
        &["fig2", "--n-max", "3", "--output", "/definitely/not/a/dir/out.csv"],
        &["sweep", "--scenario", "phase", "--n", "1", "--theta-i", "0", "--theta-f", "0", "--phi0", "0",
          "--g-min", "1", "--g-max", "0"],
        &["mc", "--scenario", "phase", "--n", "1", "--theta-i", "1", "--theta-f", "1", "--phi0", "1", "--g", "0.1",
          "--trials", "10", "--g-lo", "0"],
    ];
    for args in cases {
        let out = weakmet(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn numerical_failures_exit_with_3_and_name_the_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "p,re,im\n0,1\n").unwrap();
    let out = weakmet(&[
        "breakdown", "--scenario", "sampled", "--wavefunction", bad.to_str().unwrap(), "--theta-i", "0",
        "--theta-f", "0", "--phi0", "0", "--g", "0",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("WavefunctionFormat"));

    // With the system prepared in an eigenstate the success rate does not depend on g.
    let out = weakmet(&[
        "mc", "--scenario", "phase", "--n", "4", "--theta-i", "0", "--theta-f", "1.2", "--phi0", "0", "--g", "0.2",
        "--trials", "100", "--repeats", "4",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("NonIdentifiable"));
}
