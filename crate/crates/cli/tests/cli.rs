//! End-to-end tests of the stcut binary: artifacts, exit codes, config
//! precedence, and cross-worker determinism of emitted files.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stcut"))
}

fn gen_grid(dir: &Path, name: &str, rows: usize, cols: usize) -> std::path::PathBuf {
    let path = dir.join(name);
    let status = bin()
        .args([
            "gen",
            "--kind",
            "grid2d",
            "--rows",
            &rows.to_string(),
            "--cols",
            &cols.to_string(),
            "--seed",
            "9",
            "--out",
        ])
        .arg(&path)
        .status()
        .unwrap();
    assert!(status.success());
    path
}

#[test]
fn solve_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_grid(dir.path(), "g.dimacs", 8, 8);
    let out_dir = dir.path().join("out");
    let output = bin()
        .args(["solve"])
        .arg(&input)
        .args(["--workers", "1", "--oracle", "--out-dir"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    for file in ["report.json", "trace.csv", "cut_sweep.txt", "cut_two_level.txt"] {
        assert!(out_dir.join(file).exists(), "missing {file}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["nodes"], 66);
    assert!(report["best"]["cut_value"].as_f64().unwrap() > 0.0);
    assert!(report["optimum"].as_f64().is_some());
    // the emitted labeling covers every node with a 0/1 side
    let cut = std::fs::read_to_string(out_dir.join("cut_two_level.txt")).unwrap();
    assert_eq!(cut.lines().count(), 66);
    for line in cut.lines() {
        let side: u32 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
        assert!(side <= 1);
    }
}

#[test]
fn phase_times_cover_the_total() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_grid(dir.path(), "g.dimacs", 60, 60);
    let out_dir = dir.path().join("out");
    let output = bin()
        .args(["solve"])
        .arg(&input)
        .args(["--workers", "1", "--early-exit", "false", "--out-dir"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    let phases = &report["phases_ms"];
    let total = phases["total"].as_f64().unwrap();
    let sum = ["partition", "irls", "sweep", "two_level", "oracle"]
        .iter()
        .map(|k| phases[k].as_f64().unwrap())
        .sum::<f64>();
    // phases account for the run up to 5% plus a small absolute allowance
    // for process startup on tiny instances
    assert!(
        (total - sum).abs() <= 0.05 * total + 5.0,
        "phase sum {sum} vs total {total}"
    );
}

#[test]
fn missing_input_exits_2() {
    let output = bin().args(["solve", "/nonexistent/file.dimacs"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.dimacs");
    std::fs::write(&path, "p max 2 1\nn 1 s\nn 2 t\na 1 2 not_a_number\n").unwrap();
    let output = bin().args(["solve"]).arg(&path).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("line 4"), "stderr: {stderr}");
}

#[test]
fn disconnected_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("disc.txt");
    std::fs::write(&path, "1 4\n1 2 1.0\n3 4 1.0\n").unwrap();
    let output = bin().args(["solve"]).arg(&path).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn bad_flag_value_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_grid(dir.path(), "g.dimacs", 4, 4);
    let output = bin()
        .args(["solve"])
        .arg(&input)
        .args(["--strategy", "cholesky"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn config_file_applies_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_grid(dir.path(), "g.dimacs", 6, 6);
    let cfg_path = dir.path().join("solver.conf");
    std::fs::write(
        &cfg_path,
        "# solver settings\niterations = 3\nrounding = sweep\nworkers = 1\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let output = bin()
        .args(["solve"])
        .arg(&input)
        .args(["--config"])
        .arg(&cfg_path)
        .args(["--iterations", "5", "--early-exit", "false", "--out-dir"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    // flag wins over the file
    assert_eq!(report["config"]["iterations"], 5);
    assert_eq!(report["irls_iterations_run"], 5);
    // file-only settings still apply
    assert!(out_dir.join("cut_sweep.txt").exists());
    assert!(!out_dir.join("cut_two_level.txt").exists());
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_grid(dir.path(), "g.dimacs", 4, 4);
    let cfg_path = dir.path().join("solver.conf");
    std::fs::write(&cfg_path, "iterationz = 3\n").unwrap();
    let output = bin()
        .args(["solve"])
        .arg(&input)
        .args(["--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn worker_count_does_not_change_emitted_files() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_grid(dir.path(), "g.dimacs", 12, 12);
    let mut artifacts = Vec::new();
    for workers in ["1", "4"] {
        let out_dir = dir.path().join(format!("out{workers}"));
        let output = bin()
            .args(["solve"])
            .arg(&input)
            .args(["--workers", workers, "--early-exit", "false", "--out-dir"])
            .arg(&out_dir)
            .output()
            .unwrap();
        assert!(output.status.success());
        let trace = std::fs::read_to_string(out_dir.join("trace.csv")).unwrap();
        // strip the wall-clock column; everything else must be bitwise equal
        let stripped: String = trace
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0)
            .collect::<Vec<_>>()
            .join("\n");
        let cut = std::fs::read_to_string(out_dir.join("cut_two_level.txt")).unwrap();
        artifacts.push((stripped, cut));
    }
    assert_eq!(artifacts[0].0, artifacts[1].0, "trace values differ");
    assert_eq!(artifacts[0].1, artifacts[1].1, "cut labelings differ");
}

#[test]
fn oracle_reports_exact_value() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p3.txt");
    std::fs::write(&path, "1 3\n1 2 2.0\n2 3 1.0\n").unwrap();
    let output = bin().args(["oracle"]).arg(&path).output().unwrap();
    assert!(output.status.success());
    let v: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&output.stdout).trim()).unwrap();
    assert_eq!(v["max_flow"].as_f64().unwrap(), 1.0);
    assert_eq!(v["cut_value"].as_f64().unwrap(), 1.0);
}

#[test]
fn spectral_emits_the_sandwich() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("edge.txt");
    std::fs::write(&path, "1 2\n1 2 3.0\n").unwrap();
    let output = bin().args(["spectral"]).arg(&path).output().unwrap();
    assert!(output.status.success());
    let v: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&output.stdout).trim()).unwrap();
    assert!((v["lambda2"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!((v["phi"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(v["holds"], true);
}

#[test]
fn bench_writes_rows_and_voltage_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_grid(dir.path(), "g.dimacs", 6, 6);
    let csv = dir.path().join("bench.csv");
    let volts = dir.path().join("volts");
    let output = bin()
        .args(["bench", "--instance"])
        .arg(&input)
        .args(["--workers-list", "1", "--warm-and-cold", "--iterations", "10"])
        .args(["--early-exit", "false", "--out"])
        .arg(&csv)
        .args(["--voltages-dir"])
        .arg(&volts)
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3); // header + warm + cold
    assert!(lines[0].starts_with("instance,nodes,edges,workers,warm_start"));
    // total PCG iterations: warm (column 24) never exceeds cold
    let col = |line: &str, idx: usize| -> String {
        line.split(',').nth(idx).unwrap().to_string()
    };
    let warm_iters: usize = col(lines[1], 23).parse().unwrap();
    let cold_iters: usize = col(lines[2], 23).parse().unwrap();
    assert!(warm_iters <= cold_iters);
    // voltage matrix: 11 rows (initialization + 10 iterations), each sorted
    let volt_file = volts.join("g_w1_warm.csv");
    let matrix = std::fs::read_to_string(&volt_file).unwrap();
    let rows: Vec<&str> = matrix.lines().collect();
    assert_eq!(rows.len(), 11);
    for row in rows {
        let vals: Vec<f64> = row.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(vals.len(), 38);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]), "row not sorted");
    }
}

#[test]
fn partition_export_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_grid(dir.path(), "g.dimacs", 8, 8);
    let part_path = dir.path().join("blocks.txt");
    let out1 = dir.path().join("out1");
    let output = bin()
        .args(["solve"])
        .arg(&input)
        .args(["--workers", "1", "--export-partition"])
        .arg(&part_path)
        .args(["--out-dir"])
        .arg(&out1)
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = std::fs::read_to_string(&part_path).unwrap();
    assert_eq!(text.lines().count(), 64);
    // feeding the exported partition back reproduces the same cut
    let out2 = dir.path().join("out2");
    let output = bin()
        .args(["solve"])
        .arg(&input)
        .args(["--workers", "1", "--partition-file"])
        .arg(&part_path)
        .args(["--out-dir"])
        .arg(&out2)
        .output()
        .unwrap();
    assert!(output.status.success());
    let a = std::fs::read_to_string(out1.join("cut_two_level.txt")).unwrap();
    let b = std::fs::read_to_string(out2.join("cut_two_level.txt")).unwrap();
    assert_eq!(a, b);
}
