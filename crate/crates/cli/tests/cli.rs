use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use zeta_recurrence_cli::output::parse_series;

const DOMAIN: &str = "[domain]\nsigma_lo = 0.73\nsigma_hi = 0.77\nt_lo = -0.03\nt_hi = 0.03\nresolution = 4\n";

fn zrec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zrec")).args(args).output().expect("zrec runs")
}

fn config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let out = dir.join(format!("{name}-out"));
    let text = format!("[run]\noutput_dir = {}\n{body}", out.display());
    let path = dir.join(format!("{name}.ini"));
    fs::write(&path, text).unwrap();
    path
}

fn run_ok(args: &[&str]) -> String {
    let o = zrec(args);
    assert!(o.status.success(), "zrec {args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn oracle() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/zeta_oracle.txt")
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn self_identity_reports_density_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "id", &format!("mode = self\n{DOMAIN}[targets]\nd = 1\n[search]\nepsilon = 0.8\nT = 100\n"));
    run_ok(&["run", cfg.to_str().unwrap()]);
    let out = tmp.path().join("id-out");
    let csv = fs::read_to_string(out.join("scan.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "self");
    assert_eq!(row[9].parse::<f64>().unwrap(), 1.0);
    assert_eq!(row[11].parse::<f64>().unwrap(), 0.0);
    let m = manifest(&out);
    assert_eq!(m["status"], "completed");
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    assert!(m["wall_time_s"].as_f64().is_some());
}

#[test]
fn unknown_key_exits_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "bad", &format!("mode = self\n{DOMAIN}[targets]\nd = 1\n[search]\nepsilonn = 0.8\n"));
    let o = zrec(&["run", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("unknown key") && err.contains("epsilonn"), "{err}");

    let good = config(tmp.path(), "good", &format!("mode = self\n{DOMAIN}[targets]\nd = 1\n[search]\nepsilon = 0.8\nT = 10\n"));
    let o = zrec(&["run", good.to_str().unwrap(), "--epsilonn", "0.5"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key `epsilonn`"));
}

#[test]
fn invalid_physics_names_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "deg", &format!("mode = joint\n{DOMAIN}[targets]\na = 2\nb = -2\n[search]\nepsilon = 0.8\n"));
    let o = zrec(&["run", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("`a`") && err.contains("conjugat"), "{err}");
    // the manifest exists even though the run failed
    assert_eq!(manifest(&tmp.path().join("deg-out"))["status"], "failed");
}

#[test]
fn verify_against_oracle_table() {
    let tmp = tempfile::tempdir().unwrap();
    let body = format!("oracle_table = {}\n", oracle().display());
    let cfg = config(tmp.path(), "v", &body);
    let stdout = run_ok(&["verify", cfg.to_str().unwrap()]);
    assert!(stdout.contains("240 rows"), "{stdout}");
    let csv = fs::read_to_string(tmp.path().join("v-out/verify.csv")).unwrap();
    assert_eq!(csv.lines().count(), 241);

    let o = zrec(&["verify", cfg.to_str().unwrap(), "--verify_tol", "1e-30"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("exceeds tolerance"));

    let missing = config(tmp.path(), "m", "oracle_table = /nonexistent/table.txt\n");
    let o = zrec(&["verify", missing.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("oracle table"));
    let none = config(tmp.path(), "n", "");
    assert!(!zrec(&["verify", none.to_str().unwrap()]).status.success());
}

#[test]
fn identical_configs_give_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let body = format!("mode = self\nseed = 7\n{DOMAIN}[targets]\nd = 2\n[search]\nepsilon = 0.8\nT = 500\n");
    let c1 = config(tmp.path(), "r1", &body);
    let c2 = config(tmp.path(), "r2", &body);
    run_ok(&["scan", c1.to_str().unwrap()]);
    run_ok(&["scan", c2.to_str().unwrap()]);
    for f in ["scan.csv", "hits.csv", "trace.dat"] {
        let a = fs::read(tmp.path().join("r1-out").join(f)).unwrap();
        let b = fs::read(tmp.path().join("r2-out").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
    let (cols, rows) = parse_series(&fs::read_to_string(tmp.path().join("r1-out/trace.dat")).unwrap()).unwrap();
    assert_eq!(cols, ["tau", "E"]);
    assert!(!rows.is_empty());

    // reports merge run directories
    let stdout = run_ok(&["report", tmp.path().join("r1-out").to_str().unwrap(), tmp.path().join("r2-out").to_str().unwrap()]);
    assert_eq!(stdout.lines().count(), 3);
    assert!(stdout.starts_with("mode,a,b,d,epsilon,T,step,samples,hits,density,best_tau,best_err\n"));
}

#[test]
fn phase_scan_and_lattice_search() {
    let tmp = tempfile::tempdir().unwrap();
    let body = "[search]\nprimes = 2, 3\ntheta = 0.3, 0.7\ndelta = 0.1\nT = 10000\ntau_step = 0.01\n";
    let cfg = config(tmp.path(), "ph", body);
    run_ok(&["scan", cfg.to_str().unwrap()]);
    let summary = fs::read_to_string(tmp.path().join("ph-out/phase_scan.csv")).unwrap();
    let row: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
    let density: f64 = row[7].parse().unwrap();
    assert!((density - 0.04).abs() < 0.01, "{density}");

    let body = "[search]\nprimes = 2, 3, 5, 7, 11, 13\ntheta = 0.1, 0.9, 0.25, 0.5, 0.75, 0.3\ndelta = 0.05\ntau_max = 1e8\n";
    let cfg = config(tmp.path(), "lat", body);
    run_ok(&["find-tau", cfg.to_str().unwrap()]);
    let csv = fs::read_to_string(tmp.path().join("lat-out/candidates.csv")).unwrap();
    assert!(csv.lines().count() > 1);
    for line in csv.lines().skip(1) {
        let dev: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(dev < 0.05);
    }
}

#[test]
fn fit_writes_record_and_monotone_history() {
    let tmp = tempfile::tempdir().unwrap();
    let body = format!("{DOMAIN}[targets]\na = 1\nb = 2\nf_a = 1\nf_b = 2; 0.1i\n[fit]\nl = 8\ny = 5\nmax_primes = 20\nepsilon_fit = 0.01\n");
    let cfg = config(tmp.path(), "fit", &body);
    run_ok(&["fit", cfg.to_str().unwrap()]);
    let out = tmp.path().join("fit-out");
    let record: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("fit.json")).unwrap()).unwrap();
    assert_eq!(record["l"], 8);
    let (_, rows) = parse_series(&fs::read_to_string(out.join("fit_history.dat")).unwrap()).unwrap();
    assert!(!rows.is_empty());
    assert!(rows.windows(2).all(|w| w[1][1] <= w[0][1]));
    let targets: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("targets.json")).unwrap()).unwrap();
    assert_eq!(targets["nodes"].as_array().unwrap().len(), targets["f_a"].as_array().unwrap().len());
    assert_eq!(manifest(&out)["mode"], "fit-only");
}
