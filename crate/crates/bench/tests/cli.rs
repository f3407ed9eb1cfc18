use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_stap-bench");

const SMALL: &str = r#"[radar]
crab_angle_deg = 45.0
num_pulses = 4
num_elements = 4
num_patches = 90

[experiment]
methods = ["optimal", "smi", "focuss"]
num_snapshots = 3
monte_carlo_runs = 2
doppler_points = 21
heatmap_points = 8
"#;

fn stap(args: &[&str], cwd: &Path) -> Output {
    Command::new(BIN).args(args).current_dir(cwd).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("small.cfg");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_writes_tables_heatmaps_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let res = stap(&["run", &cfg, "--quiet", "--out", out.to_str().unwrap()], dir.path());
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));

    let loss = fs::read_to_string(out.join("sinr_loss.csv")).unwrap();
    assert_eq!(loss.lines().next().unwrap(), "doppler,loss_db_optimal,loss_db_smi,loss_db_focuss");
    assert_eq!(loss.lines().count(), 22);
    let eig = fs::read_to_string(out.join("eigenspectrum.csv")).unwrap();
    assert!(eig.starts_with("index,eig_db_optimal,eig_db_smi,eig_db_focuss\n1,"));
    assert_eq!(eig.lines().count(), 17);

    let pgm = fs::read(out.join("capon_smi.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n8 8\n255\n"));
    assert_eq!(pgm.len(), b"P5\n8 8\n255\n".len() + 64);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"], serde_json::json!([0, 1]));
    let files = manifest["files"].as_array().unwrap();
    assert!(files.len() >= 9);
    for f in files {
        let bytes = fs::read(out.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["bytes"].as_u64().unwrap() as usize, bytes.len());
        assert_eq!(f["sha256"].as_str().unwrap(), stap_bench::emit::sha256_hex(&bytes));
    }
    assert!(fs::read_dir(&out).unwrap().all(|e| !e.unwrap().file_name().to_string_lossy().ends_with(".tmp")));
}

#[test]
fn repeated_runs_are_identical_and_compare_clean() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    for name in ["a", "b"] {
        let res = stap(&["run", &cfg, "-q", "--seed", "7", "--out", name], dir.path());
        assert_eq!(res.status.code(), Some(0));
    }
    for file in ["sinr_loss.csv", "eigenspectrum.csv", "capon_focuss.csv"] {
        assert_eq!(
            fs::read(dir.path().join("a").join(file)).unwrap(),
            fs::read(dir.path().join("b").join(file)).unwrap(),
            "{file}"
        );
    }
    let res = stap(&["compare", "a", "b"], dir.path());
    assert_eq!(res.status.code(), Some(0));

    let res = stap(&["run", &cfg, "-q", "--seed", "8", "--out", "c"], dir.path());
    assert_eq!(res.status.code(), Some(0));
    let res = stap(&["compare", "a", "c"], dir.path());
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stdout).contains("loss_db_smi"));
}

#[test]
fn method_failures_exit_with_two_and_are_recorded() {
    let dir = tempfile::tempdir().unwrap();
    // without diagonal loading the three-snapshot SMI estimate is singular
    let text = SMALL.replace("heatmap_points = 8", "heatmap_points = 8\nloading = 0.0");
    let cfg = write_config(dir.path(), &text);
    let res = stap(&["run", &cfg, "-q", "--out", "out"], dir.path());
    assert_eq!(res.status.code(), Some(2), "{}", String::from_utf8_lossy(&res.stderr));
    let loss = fs::read_to_string(dir.path().join("out/sinr_loss.csv")).unwrap();
    assert_eq!(loss.lines().next().unwrap(), "doppler,loss_db_optimal,loss_db_focuss");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    let smi = manifest["methods"].as_array().unwrap().iter().find(|m| m["method"] == "smi").unwrap();
    assert_eq!(smi["failed_runs"], 2);
    assert_eq!(smi["errors"].as_array().unwrap().len(), 2);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("num_snapshots = 3", "num_snapshot = 3"));
    let res = stap(&["run", &cfg], dir.path());
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("num_snapshot"), "{err}");
    assert!(err.contains("line"), "{err}");

    let cfg = write_config(dir.path(), SMALL);
    let res = stap(&["run", &cfg, "--methods", "optimal,music"], dir.path());
    assert_eq!(res.status.code(), Some(1));
    let res = stap(&["run", &cfg, "--runs", "0"], dir.path());
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn io_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let res = stap(&["run", "does/not/exist.cfg"], dir.path());
    assert_eq!(res.status.code(), Some(3));

    let cfg = write_config(dir.path(), SMALL);
    fs::write(dir.path().join("blocker"), "").unwrap();
    let res = stap(&["run", &cfg, "-q", "--methods", "optimal", "--out", "blocker/out"], dir.path());
    assert_eq!(res.status.code(), Some(3));

    let res = stap(&["compare", "nope", "nada"], dir.path());
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn show_config_lists_and_resolves() {
    let dir = tempfile::tempdir().unwrap();
    let res = stap(&["show-config"], dir.path());
    assert_eq!(res.status.code(), Some(0));
    let listing = String::from_utf8_lossy(&res.stdout);
    for name in ["sidelooking", "psi45", "psi90_k1"] {
        assert!(listing.lines().any(|l| l == name), "{listing}");
    }

    let cfg = write_config(dir.path(), SMALL);
    let res = stap(&["show-config", &cfg], dir.path());
    assert_eq!(res.status.code(), Some(0));
    let text = String::from_utf8_lossy(&res.stdout);
    assert!(text.contains("monte_carlo_runs = 2"));
    assert!(text.contains("[ram]"));
}
