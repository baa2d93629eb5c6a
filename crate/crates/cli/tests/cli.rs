use std::path::Path;
use std::process::{Command, Output};

fn randcluster(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_randcluster"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn data_lines(out: &[u8]) -> Vec<String> {
    String::from_utf8_lossy(out)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(String::from)
        .collect()
}

#[test]
fn missing_graph_file_is_a_validation_error() {
    let out = randcluster(&["sample", "--graph", "/no/such/graph.json", "--samples", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not exist"));
}

#[test]
fn bad_flags_are_validation_errors() {
    assert_eq!(randcluster(&["sample", "--p", "1.5"]).status.code(), Some(2));
    assert_eq!(randcluster(&["sample", "--rule", "sideways:1"]).status.code(), Some(2));
    assert_eq!(randcluster(&["exact", "--graph", "box:2,8,1"]).status.code(), Some(2));
    assert_eq!(randcluster(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let out = randcluster(&["sample", "--samples", "2", "--out", "/no/such/dir/out.csv"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let run = || {
        let p = path.to_str().unwrap();
        let out = randcluster(&[
            "sample", "--graph", "box:2,4,2", "--rule", "wired:2", "--q", "2", "--seed", "17", "--samples", "50",
            "--spins", "--out", p,
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(&path).unwrap()
    };
    let a = run();
    let b = run();
    assert!(a == b, "reruns differ");
    assert_eq!(data_lines(&a).len(), 51);
}

#[test]
fn sweep_writes_one_row_per_grid_point() {
    let out = randcluster(&[
        "sweep", "--graph", "box:2,6,2", "--p", "0.3,0.5,0.7", "--q", "1,2,4", "--samples", "10", "--seed", "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = data_lines(&out.stdout);
    assert!(lines[0].starts_with("p,q,rule,samples,edge_density"));
    assert_eq!(lines.len() - 1, 9);
}

#[test]
fn output_embeds_config_that_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let first = randcluster(&["grand", "--graph", "box:2,6,2", "--p", "0.3,0.6", "--q", "1,2", "--tmax", "16", "--format", "json"]);
    assert!(first.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
    assert_eq!(doc["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(doc["order_checks_passed"], true);
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, doc["config"].to_string()).unwrap();
    let again = randcluster(&["grand", "--config", cfg.to_str().unwrap()]);
    assert_eq!(again.stdout, first.stdout);
}

#[test]
fn injected_fault_fails_verification() {
    let out = randcluster(&["verify", "--quick", "--check", "5", "--inject-fault", "flip-order"]);
    assert_eq!(out.status.code(), Some(1));
    let ok = randcluster(&["verify", "--quick", "--check", "2,5"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
}

#[test]
fn exact_law_sums_to_one() {
    let out = randcluster(&["exact", "--graph", "complete:3", "--p", "0.5", "--q", "2"]);
    assert!(out.status.success());
    let total: f64 = data_lines(&out.stdout)[1..]
        .iter()
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn other_commands_run() {
    for args in [
        &["forward", "--graph", "cycle:5", "--tmax", "4", "--every", "1"][..],
        &["factor", "--graph", "torus:2,4", "--q", "3", "--tmax", "8"][..],
        &["audit-rng", "--samples", "10000"][..],
        &["cftp", "--graph", "tree:3,3,2", "--rule", "wired:2", "--samples", "5"][..],
    ] {
        let out = randcluster(args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert!(!Path::new("out.csv").exists());
}
