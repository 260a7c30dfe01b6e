use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = r#"
seed = 3
output_dir = "out"

[dictionary]
excitations = 32
t1_steps = 12
t2_steps = 12

[phantom]
height = 16
width = 16

[sampling]
ratios = [4]

[solver]
max_iters = 8
epsilons = [0.0, 0.4]

[solve]
method = "tree-ann"
epsilon = 0.4
ratio = 4
"#;

fn cli(args: &[&str], config: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cover-ipg"))
        .args(args)
        .arg("--config")
        .arg(config)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("exp.toml");
    fs::write(&path, text).unwrap();
    path
}

fn ok(args: &[&str], config: &Path) -> String {
    let out = cli(args, config);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn prepare(dir: &Path) -> PathBuf {
    let cfg = write_config(dir, SMALL);
    ok(&["gen-dict"], &cfg);
    ok(&["build-tree"], &cfg);
    ok(&["gen-phantom"], &cfg);
    cfg
}

#[test]
fn pipeline_and_validate_tree_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = prepare(dir.path());
    let report = ok(&["validate-tree"], &cfg);
    for name in ["nesting", "covering", "separation", "maxdist"] {
        assert!(report.contains(&format!("{name}: pass")), "{report}");
    }
    assert!(dir.path().join("out/dictionary.bin").exists());
    assert!(dir.path().join("out/tree.bin").exists());
}

#[test]
fn missing_artifact_names_the_producer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = cli(&["solve"], &cfg);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gen-dict"));

    ok(&["gen-dict"], &cfg);
    let out = cli(&["validate-tree"], &cfg);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("build-tree"));
}

#[test]
fn bad_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("ratios = [4]", "ratios = [5]"));
    let out = cli(&["gen-dict"], &cfg);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("ratio 5"));

    let cfg = write_config(dir.path(), "output_dir = \"out\"\nunknown_key = 1\n");
    assert!(!cli(&["gen-dict"], &cfg).status.success());

    let missing = dir.path().join("nope.toml");
    assert!(!cli(&["gen-dict"], &missing).status.success());
}

#[test]
fn truncated_tree_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = prepare(dir.path());
    let tree = dir.path().join("out/tree.bin");
    let mut bytes = fs::read(&tree).unwrap();
    let n = bytes.len();
    bytes.truncate(n / 2);
    fs::write(&tree, bytes).unwrap();
    let out = cli(&["validate-tree"], &cfg);
    assert!(!out.status.success());
}

#[test]
fn solve_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = prepare(dir.path());
    let telemetry = dir.path().join("out/runs/tree-ann_eps0.4_r4/telemetry.csv");
    ok(&["solve"], &cfg);
    let first = fs::read(&telemetry).unwrap();
    ok(&["solve"], &cfg);
    assert_eq!(first, fs::read(&telemetry).unwrap());

    let header = String::from_utf8(first).unwrap();
    assert!(
        header.starts_with("iter,objective,rel_solution_mse,t1_mae,t2_mae,epsilon_t,distances_iter,distances_cum\n")
    );
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("out/runs/tree-ann_eps0.4_r4/summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["method"], "tree-ann");
}

#[test]
fn sweep_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = prepare(dir.path());
    let out = ok(&["sweep"], &cfg);
    assert!(out.contains("sweep: 6 rows"), "{out}");
    let table = ok(&["report"], &cfg);
    assert_eq!(table.lines().count(), 7, "{table}");
    let csv = fs::read_to_string(dir.path().join("out/report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert!(dir.path().join("out/report.json").exists());
    assert!(dir.path().join("out/sweep.csv").exists());
}
