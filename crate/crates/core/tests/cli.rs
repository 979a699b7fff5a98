use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_wavedens");

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("WAVEDENS_OUT")
        .output()
        .unwrap()
}

fn run_ok(out: &Path, args: &[&str]) {
    let o = run(out, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

/// Compares with a checked-in file; `WAVEDENS_BLESS=1` rewrites it instead.
fn assert_golden(actual: &Path, name: &str) {
    let got = fs::read_to_string(actual).unwrap();
    if std::env::var_os("WAVEDENS_BLESS").is_some() {
        fs::write(golden(name), &got).unwrap();
        return;
    }
    let want = fs::read_to_string(golden(name)).unwrap();
    assert_eq!(got, want, "{name} drifted; rerun with WAVEDENS_BLESS=1 if intended");
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

fn config_of(dir: &Path) -> serde_json::Value {
    let m: serde_json::Value = serde_json::from_str(&read(dir, "manifest.json")).unwrap();
    m["config"].clone()
}

#[test]
fn estimate_matches_golden() {
    let tmp = TempDir::new().unwrap();
    let input = data("bumps_300.csv");
    run_ok(tmp.path(), &["estimate", "--input", input.to_str().unwrap(), "--basis", "haar"]);
    assert_golden(&tmp.path().join("estimate.json"), "bumps_300_haar_estimate.json");
    let grid = read(tmp.path(), "grid.csv");
    assert!(grid.starts_with("x,density\n"));
}

#[test]
fn estimate_is_byte_identical_across_runs() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let input = data("bumps_300.csv");
    let args = ["estimate", "--input", input.to_str().unwrap(), "--mode", "practical-gamma", "--gamma", "0.5"];
    run_ok(a.path(), &args);
    run_ok(b.path(), &args);
    for f in ["estimate.json", "grid.csv"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
    }
    assert_eq!(config_of(a.path()), config_of(b.path()));
}

#[test]
fn rescale_divides_the_data() {
    let tmp = TempDir::new().unwrap();
    let raw = tmp.path().join("raw.csv");
    let divided = tmp.path().join("divided.csv");
    let values = [1.0, 2.0, 5.0, 6.0, 7.0, 9.0, 14.0, 21.0, 30.0, 35.0, 42.0, 60.0];
    let text = |f: &dyn Fn(f64) -> f64| {
        std::iter::once("days".to_string())
            .chain(values.iter().map(|&v| format!("{}", f(v))))
            .collect::<Vec<_>>()
            .join("\n")
    };
    fs::write(&raw, text(&|v| v * 250.0)).unwrap();
    fs::write(&divided, text(&|v| v)).unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_ok(&a, &["estimate", "--input", raw.to_str().unwrap(), "--rescale", "250"]);
    run_ok(&b, &["estimate", "--input", divided.to_str().unwrap()]);
    assert_eq!(read(&a, "estimate.json"), read(&b, "estimate.json"));
    assert_eq!(config_of(&a)["rescale"], serde_json::json!(250.0));
}

#[test]
fn bad_inputs_exit_nonzero() {
    let tmp = TempDir::new().unwrap();
    let empty = tmp.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let o = run(&tmp.path().join("o"), &["estimate", "--input", empty.to_str().unwrap()]);
    assert!(!o.status.success());

    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "1.5\n2.5\nthree\n").unwrap();
    let o = run(&tmp.path().join("o"), &["estimate", "--input", bad.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let one = tmp.path().join("one.csv");
    fs::write(&one, "1.5\n").unwrap();
    assert!(!run(&tmp.path().join("o"), &["estimate", "--input", one.to_str().unwrap()]).status.success());
}

#[test]
fn unknown_method_lists_valid_ones() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["bench", "--sweep", "support", "--methods", "S,RU"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("S, H, S*, K"));
}

#[test]
fn single_replication_outputs() {
    let tmp = TempDir::new().unwrap();
    let c = tmp.path().join("cal");
    run_ok(&c, &["calibrate", "--signal", "uniform", "--n", "256", "--gammas", "1", "--reps", "1"]);
    assert_eq!(read(&c, "calibration.csv").lines().count(), 2);
    assert_eq!(read(&c, "replications.csv").lines().count(), 2);
    assert_eq!(config_of(&c)["basis"], "haar");

    let b = tmp.path().join("bench");
    run_ok(&b, &["bench", "--sweep", "support", "--methods", "S", "--values", "10", "--n", "256", "--reps", "1"]);
    assert_eq!(read(&b, "replications.csv").lines().count(), 2);
    assert_eq!(read(&b, "quartiles.csv").lines().count(), 2);
}

#[test]
fn bench_matches_golden() {
    let tmp = TempDir::new().unwrap();
    run_ok(
        tmp.path(),
        &["bench", "--sweep", "support", "--values", "10,30", "--methods", "S,H,S*", "--n", "256", "--reps", "3", "--seed", "5"],
    );
    assert_golden(&tmp.path().join("quartiles.csv"), "support_quartiles.csv");
}

#[test]
fn replay_reproduces_every_output() {
    let tmp = TempDir::new().unwrap();
    let (first, second) = (tmp.path().join("first"), tmp.path().join("second"));
    run_ok(&first, &["bench", "--sweep", "tail", "--values", "4", "--methods", "H,K", "--n", "200", "--reps", "2"]);
    let manifest = first.join("manifest.json");
    run_ok(&second, &["replay", manifest.to_str().unwrap()]);
    for f in ["replications.csv", "plot.csv", "summary.json", "quartiles.csv"] {
        assert_eq!(read(&first, f), read(&second, f), "{f}");
    }
    assert_eq!(config_of(&first), config_of(&second));

    let est = tmp.path().join("est");
    let input = data("bumps_300.csv");
    run_ok(&est, &["estimate", "--input", input.to_str().unwrap(), "--j0", "5"]);
    let again = tmp.path().join("again");
    run_ok(&again, &["replay", est.join("manifest.json").to_str().unwrap()]);
    assert_eq!(read(&est, "estimate.json"), read(&again, "estimate.json"));
    assert_eq!(read(&est, "grid.csv"), read(&again, "grid.csv"));
}

#[test]
fn output_directory_from_environment() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("from-env");
    let o = Command::new(BIN)
        .args(["sample", "--signal", "gauss", "--n", "50"])
        .env("WAVEDENS_OUT", &out)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(read(&out, "sample.csv").lines().count(), 51);
    assert!(out.join("manifest.json").exists());
}

#[test]
fn basis_cache_round_trips() {
    let tmp = TempDir::new().unwrap();
    run_ok(tmp.path(), &["basis-cache", "--grid-exponent", "10"]);
    let file = fs::File::open(tmp.path().join("basis-spline.cache")).unwrap();
    let b = wavedens::basis::BiorthogonalBasis::read_cache(std::io::BufReader::new(file)).unwrap();
    assert_eq!(b, wavedens::basis::BiorthogonalBasis::spline(10).unwrap());
}
