//! End-to-end checks of the `slope` binary: exit codes, output formats, and
//! byte-level determinism of seeded runs.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn slope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slope"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn temp_path(name: &str) -> PathBuf {
    let mut path = std::env::temp_dir();
    path.push(format!("slope-cli-test-{}-{name}", std::process::id()));
    path
}

#[test]
fn gen_is_deterministic_and_fit_consumes_it() {
    let data_a = temp_path("gen-a.csv");
    let data_b = temp_path("gen-b.csv");
    for out in [&data_a, &data_b] {
        let r = slope(&[
            "gen",
            "--design",
            "equicorrelated",
            "--n",
            "40",
            "--p",
            "20",
            "--k",
            "5",
            "--rho",
            "0.3",
            "--family",
            "gaussian",
            "--seed",
            "11",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    assert_eq!(fs::read(&data_a).unwrap(), fs::read(&data_b).unwrap());

    let report = temp_path("fit.json");
    let r = slope(&[
        "fit",
        "--data",
        data_a.to_str().unwrap(),
        "--family",
        "gaussian",
        "--path-length",
        "15",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["n"], 40);
    assert_eq!(json["p"], 20);
    let steps = json["steps"].as_array().unwrap();
    assert!(!steps.is_empty());
    assert_eq!(steps[0]["active"], 0);
    for pair in steps.windows(2) {
        assert!(pair[1]["sigma"].as_f64().unwrap() < pair[0]["sigma"].as_f64().unwrap());
    }

    for p in [data_a, data_b, report] {
        fs::remove_file(p).ok();
    }
}

#[test]
fn fit_reads_sparse_format() {
    let data = temp_path("sparse.svm");
    let mut lines = String::new();
    // Three features, the last present only on every other row.
    for i in 0..20 {
        let y = i % 2;
        let x1 = if y == 1 { 1.0 + 0.1 * i as f64 } else { -1.0 };
        let x2 = 0.5 - 0.05 * i as f64;
        if i % 2 == 0 {
            let x3 = 0.2 + 0.01 * i as f64;
            lines.push_str(&format!("{y} 1:{x1} 2:{x2} 3:{x3}\n"));
        } else {
            lines.push_str(&format!("{y} 1:{x1} 2:{x2}\n"));
        }
    }
    fs::write(&data, lines).unwrap();
    let report = temp_path("sparse.json");
    let r = slope(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--format",
        "libsvm",
        "--family",
        "logistic",
        "--path-length",
        "10",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["p"], 3);
    assert_eq!(json["centered"], false);
    fs::remove_file(data).ok();
    fs::remove_file(report).ok();
}

#[test]
fn bad_input_exits_one() {
    let r = slope(&[
        "fit",
        "--data",
        "/nonexistent/file.csv",
        "--family",
        "gaussian",
    ]);
    assert_eq!(r.status.code(), Some(1));

    let data = temp_path("bad.csv");
    fs::write(&data, "x1,y\n1.0,2.0\noops,1.0\n").unwrap();
    let r = slope(&["fit", "--data", data.to_str().unwrap(), "--family", "gaussian"]);
    assert_eq!(r.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&r.stderr);
    assert!(stderr.contains("line 3"), "stderr: {stderr}");
    fs::remove_file(data).ok();
}

#[test]
fn solver_failure_exits_two() {
    let data = temp_path("hard.csv");
    let r = slope(&[
        "gen",
        "--design",
        "equicorrelated",
        "--n",
        "30",
        "--p",
        "40",
        "--k",
        "10",
        "--rho",
        "0.6",
        "--family",
        "gaussian",
        "--seed",
        "3",
        "--out",
        data.to_str().unwrap(),
    ]);
    assert!(r.status.success());
    // An unreachable gap tolerance with a one-iteration budget fails every
    // solved step.
    let r = slope(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--family",
        "gaussian",
        "--max-iterations",
        "1",
        "--gap-tol",
        "1e-300",
        "--path-length",
        "5",
        "--out",
        temp_path("hard.json").to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(2), "{}", String::from_utf8_lossy(&r.stderr));
    fs::remove_file(data).ok();
    fs::remove_file(temp_path("hard.json")).ok();
}

fn strip_timing_columns(csv: &str) -> String {
    let mut out = String::new();
    for line in csv.lines() {
        let cells: Vec<&str> = line.split(',').collect();
        // The last two columns are the timing columns.
        out.push_str(&cells[..cells.len() - 2].join(","));
        out.push('\n');
    }
    out
}

#[test]
fn bench_runs_matrix_and_is_deterministic_apart_from_timing() {
    let config = temp_path("bench.toml");
    fs::write(
        &config,
        r#"
[[experiment]]
name = "tiny"
design = "equicorrelated"
family = "gaussian"
n = 40
p = 30
k = 7
rho = 0.5
beta = "pm2"
seed = 5
replicates = 1
path_length = 12
screening = ["strong", "none"]
"#,
    )
    .unwrap();
    let out_a = temp_path("bench-a.csv");
    let out_b = temp_path("bench-b.csv");
    for out in [&out_a, &out_b] {
        let r = slope(&[
            "bench",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    let a = fs::read_to_string(&out_a).unwrap();
    let b = fs::read_to_string(&out_b).unwrap();
    assert_eq!(strip_timing_columns(&a), strip_timing_columns(&b));

    // Screened and unscreened rows of the same replicate carry the same
    // dataset checksum.
    let mut checksums = std::collections::HashSet::new();
    for line in a.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        checksums.insert(cells[13].to_string());
    }
    assert_eq!(checksums.len(), 1, "checksums: {checksums:?}");

    let manifest: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(temp_path("bench-a.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["cells"].as_array().unwrap().len(), 2);

    for p in [config, out_a.clone(), out_b, temp_path("bench-a.json"), temp_path("bench-b.json")] {
        fs::remove_file(p).ok();
    }
}

#[test]
fn bench_records_cell_failures_and_continues() {
    let config = temp_path("bench-fail.toml");
    fs::write(
        &config,
        r#"
[[experiment]]
name = "overflowing"
design = "equicorrelated"
family = "poisson"
n = 30
p = 10
k = 10
rho = 0.0
beta = "grid-1-20"
noise_scale = 0.0
path_length = 5

[[experiment]]
name = "fine"
design = "equicorrelated"
family = "gaussian"
n = 30
p = 10
k = 3
rho = 0.0
beta = "gaussian-unit"
path_length = 5
"#,
    )
    .unwrap();
    let out = temp_path("bench-fail.csv");
    let r = slope(&[
        "bench",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.lines().any(|l| l.contains("error: ")));
    assert!(text.lines().any(|l| l.contains("fine") && l.contains(",ok,")));
    for p in [config, out, temp_path("bench-fail.json")] {
        fs::remove_file(p).ok();
    }
}
