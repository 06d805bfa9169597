//! Binary-level acceptance tests: determinism of the prune command
//! (criterion 8), exit-code contracts, the shipped demo's oracle gap, and
//! the plot-data projection.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spap_core::{ReportFile, Rng, ToyModel};

fn spap() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spap"))
}

fn run(args: &[&str]) -> Output {
    spap().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const BASE_CONFIG: &str = r#"
seed = 15
variant = "full"

[model]
layers = 2
model_dim = 6
hidden_dim = 10

[calibration]
samples = 64

[sparsity]
overall = 0.3
"#;

#[test]
fn c8_prune_is_bitwise_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "run.toml", BASE_CONFIG);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let output = run(&[
            "prune",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    }
    for name in ["pruned_s30_full.spap", "report.json"] {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    println!("[PASS] criterion 8: identical config and seed reproduce containers and reports bitwise");
}

#[test]
fn zero_sparsity_outputs_the_input_weights_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "zero.toml",
        &BASE_CONFIG.replace("overall = 0.3", "overall = 0.0"),
    );
    let out = dir.path().join("out");
    let output = run(&[
        "prune",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());

    // The model the CLI generates from seed 15, serialized independently.
    let mut rng = Rng::new(15);
    let model = ToyModel::random(2, 6, 10, false, &mut rng).unwrap();
    let expected = dir.path().join("expected.spap");
    model.to_container().unwrap().write_to(&expected).unwrap();

    let got = std::fs::read(out.join("pruned_s0_full.spap")).unwrap();
    let want = std::fs::read(&expected).unwrap();
    assert_eq!(got, want, "zero-sparsity container is not bitwise-equal to the input");
}

#[test]
fn unreachable_sparsity_exits_one_naming_both_values() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "bad.toml",
        &BASE_CONFIG.replace(
            "overall = 0.3",
            "overall = 0.9\nmlp_param_share = 0.8",
        ),
    );
    let out = dir.path().join("out");
    let output = run(&[
        "prune",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("0.9") && stderr.contains("0.8"), "stderr: {stderr}");
}

#[test]
fn missing_config_exits_three() {
    let output = run(&["prune", "--config", "/nonexistent/x.toml", "--out", "/tmp/unused"]);
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn shipped_demo_config_meets_its_oracle_gap() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let demo = manifest.join("../../configs/demo.toml");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let output = run(&[
        "prune",
        "--config",
        demo.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let report = ReportFile::read_from(&out.join("report.json")).unwrap();
    for run in &report.runs {
        for layer in &run.report.layers {
            let gap = layer.oracle_gap.expect("demo config enables oracle gaps");
            assert!(gap <= 0.05, "layer {} gap {gap} above 5%", layer.layer);
        }
    }
    println!("[PASS] demo config: every per-layer oracle gap within 5%");
}

#[test]
fn seed_override_changes_outputs_and_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "run.toml", BASE_CONFIG);
    let out = dir.path().join("out");
    let output = run(&[
        "prune",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "99",
        "--variant",
        "no-update",
    ]);
    assert!(output.status.success());
    let report = ReportFile::read_from(&out.join("report.json")).unwrap();
    assert_eq!(report.config.seed, 99);
    assert_eq!(report.runs.len(), 1);
    assert!(out.join("pruned_s30_no-update.spap").exists());
}

#[test]
fn oracle_compare_guard_exits_one_with_subset_count() {
    let dir = tempfile::tempdir().unwrap();
    // 50 hidden channels at 40% sparsity: C(50, 20) is far past the guard.
    let config = write_config(
        dir.path(),
        "big.toml",
        &BASE_CONFIG
            .replace("hidden_dim = 10", "hidden_dim = 50")
            .replace("overall = 0.3", "overall = 0.4"),
    );
    let output = run(&["oracle-compare", "--config", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("47129212243960"),
        "stderr should carry C(50,20): {stderr}"
    );
}

#[test]
fn oracle_compare_emits_gap_table() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let demo = manifest.join("../../configs/demo.toml");
    let output = run(&["oracle-compare", "--config", demo.to_str().unwrap()]);
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("oracle_obj"));
    assert!(stdout.lines().count() >= 3, "expected a header and one row per layer");
}

#[test]
fn bench_reports_exact_cost_ratios() {
    let dir = tempfile::tempdir().unwrap();
    // Large enough that a forward pass dominates timer noise.
    let config = write_config(
        dir.path(),
        "bench.toml",
        r#"
seed = 1

[model]
layers = 2
model_dim = 64
hidden_dim = 260

[calibration]
samples = 16

[sparsity]
overall = 0.3

[bench]
seq_len = 256
repetitions = 15
"#,
    );
    let output = run(&["bench", "--config", config.to_str().unwrap()]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8_lossy(&output.stdout);
    let line = |pct: &str| {
        stdout
            .lines()
            .find(|l| l.starts_with(&format!("sparsity={pct}%")))
            .unwrap_or_else(|| panic!("missing {pct}% line in: {stdout}"))
            .to_string()
    };
    assert!(line("0").contains("flops_ratio=1.000"));
    assert!(line("0").contains("bytes_ratio=1.000"));
    let l30 = line("30");
    assert!(l30.contains("flops_ratio=0.700"), "line: {l30}");
    assert!(l30.contains("bytes_ratio=0.700"), "line: {l30}");
    let wall: f64 = l30
        .split("wallclock_ratio=")
        .nth(1)
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!(
        (0.5..=1.1).contains(&wall),
        "30% wall-clock ratio {wall} far outside the expected band"
    );
}

#[test]
fn plot_data_emits_monotone_sweep_series() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "sweep.toml",
        r#"
seed = 3001
variant = ["full", "no-update"]

[model]
layers = 3
model_dim = 8
hidden_dim = 30
residual = true

[calibration]
samples = 320

[sparsity]
overall = [0.1, 0.2, 0.3, 0.4, 0.5]
"#,
    );
    let out = dir.path().join("out");
    let output = run(&[
        "prune",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));

    let report_path = out.join("report.json");
    let plotted = run(&["plot-data", "--report", report_path.to_str().unwrap()]);
    assert!(plotted.status.success());
    let csv = String::from_utf8_lossy(&plotted.stdout);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("variant,sparsity,error"));

    let mut full_series = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 3, "row: {line}");
        if fields[0] == "full" {
            full_series.push((
                fields[1].parse::<f64>().unwrap(),
                fields[2].parse::<f64>().unwrap(),
            ));
        } else {
            assert_eq!(fields[0], "no-update");
        }
    }
    assert_eq!(full_series.len(), 5);
    for pair in full_series.windows(2) {
        assert!(pair[0].0 < pair[1].0, "sparsity column out of order");
        assert!(
            pair[0].1 <= pair[1].1,
            "full-variant error series not monotone: {full_series:?}"
        );
    }
}

#[test]
fn plot_data_error_paths() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("report.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let output = run(&["plot-data", "--report", bad.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));

    let missing = run(&["plot-data", "--report", "/nonexistent/report.json"]);
    assert_eq!(missing.status.code(), Some(3));
}

#[test]
fn rerunning_a_reports_embedded_config_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "run.toml", BASE_CONFIG);
    let out_a = dir.path().join("a");
    let output = run(&[
        "prune",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_a.to_str().unwrap(),
    ]);
    assert!(output.status.success());

    let report = ReportFile::read_from(&out_a.join("report.json")).unwrap();
    let replay = write_config(
        dir.path(),
        "replay.toml",
        &report.config.to_toml_string().unwrap(),
    );
    let out_b = dir.path().join("b");
    let output = run(&[
        "prune",
        "--config",
        replay.to_str().unwrap(),
        "--out",
        out_b.to_str().unwrap(),
    ]);
    assert!(output.status.success());

    let a = std::fs::read(out_a.join("pruned_s30_full.spap")).unwrap();
    let b = std::fs::read(out_b.join("pruned_s30_full.spap")).unwrap();
    assert_eq!(a, b, "replayed config produced different weights");
}

#[test]
fn prune_accepts_container_input() {
    let dir = tempfile::tempdir().unwrap();
    // Write a model container, then prune from it instead of generating.
    let mut rng = Rng::new(77);
    let model = ToyModel::random(2, 6, 10, false, &mut rng).unwrap();
    let container_path = dir.path().join("model.spap");
    model.to_container().unwrap().write_to(&container_path).unwrap();

    let config = write_config(
        dir.path(),
        "cont.toml",
        &BASE_CONFIG.replace(
            "hidden_dim = 10",
            &format!(
                "hidden_dim = 10\ncontainer = \"{}\"",
                container_path.to_str().unwrap().replace('\\', "/")
            ),
        ),
    );
    let out = dir.path().join("out");
    let output = run(&[
        "prune",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let report = ReportFile::read_from(&out.join("report.json")).unwrap();
    assert_eq!(report.runs[0].report.dense_params, model.param_count());
}
