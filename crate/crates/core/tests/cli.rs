//! End-to-end runs of the `roughlab` binary.

use std::path::Path;
use std::process::{Command, Output};

fn roughlab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roughlab")).args(args).current_dir(dir).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Data rows of a CSV artifact, skipping `#` metadata and the header.
fn rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    lines.next().expect("header");
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn report_on_empty_directory_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = roughlab(&["report", "."], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("manifest"));
}

#[test]
fn unknown_scenario_lists_registered_names() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", "scenario = \"nope\"\n");
    let o = roughlab(&["run", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    for name in ["lift-check", "weight-field", "tensor-energy"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn unknown_keys_and_bad_worker_counts_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", "scenario = \"lift-check\"\n[driver]\nwobble = 3\n");
    assert_eq!(roughlab(&["run", &cfg], tmp.path()).status.code(), Some(1));
    let cfg = write(tmp.path(), "d.toml", "scenario = \"lift-check\"\n");
    let o = Command::new(env!("CARGO_BIN_EXE_roughlab"))
        .args(["run", &cfg])
        .env("ROUGHLAB_WORKERS", "many")
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn linear_path_lift_check_has_zero_defects() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.toml",
        "scenario = \"lift-check\"\noutput = \"out\"\n[driver]\nkind = \"linear\"\ndim = 2\nsteps = 256\nlevels = [8]\n",
    );
    let o = roughlab(&["run", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = tmp.path().join("out");
    let csv = std::fs::read_to_string(out.join("chen_defect.csv")).unwrap();
    assert!(csv.starts_with("# "));
    let driver: Vec<_> = rows(&out.join("chen_defect.csv")).into_iter().filter(|r| r[0] == "driver").collect();
    assert!(!driver.is_empty());
    assert!(driver.iter().all(|r| r[4].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn constant_beta_weight_is_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.toml",
        "scenario = \"weight-field\"\noutput = \"out\"\n[grid]\npoints = 16\n[driver]\nsteps = 64\nlevels = [6]\n\
         [beta]\nfamily = \"constant\"\n[monte_carlo]\nsamples = 32\nsample_sweep = [16, 64]\n",
    );
    let o = roughlab(&["run", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let m = rows(&tmp.path().join("out/weight.csv"));
    assert_eq!(m.len(), 16);
    assert!(m.iter().all(|r| r[1].parse::<f64>().unwrap() == 1.0 && r[2].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn unperturbed_burgers_energy_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.toml",
        "scenario = \"burgers-energy\"\noutput = \"out\"\n[grid]\npoints = 32\n[driver]\nsteps = 64\nlevels = [5, 6]\n\
         [beta]\nfamily = \"zero\"\n[monte_carlo]\nsamples = 4\n[report]\ntimes = 9\n",
    );
    let o = roughlab(&["run", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let order = rows(&tmp.path().join("out/energy_order.csv"));
    let r: Vec<f64> = order.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(r.windows(2).all(|w| w[1] < w[0]), "{r:?}");
}

#[test]
fn report_prints_table_and_json() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", "scenario = \"sewing-rate\"\noutput = \"out\"\n[driver]\nsteps = 256\nlevels = [8]\n");
    assert_eq!(roughlab(&["run", &cfg], tmp.path()).status.code(), Some(0));
    let o = roughlab(&["report", "out"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let row = text.lines().find(|l| l.starts_with("sewing-power-rate")).expect("rate row");
    assert!(row.contains("slope=1.5") && row.contains("expected=1.5±0.15") && row.ends_with("PASS"), "{row}");
    let json_start = text.find('{').unwrap();
    let json: serde_json::Value = serde_json::from_str(&text[json_start..]).unwrap();
    assert_eq!(json["status"], "passed");
    assert_eq!(json["failed"], 0);
}

#[test]
fn remainder_report_names_zeta() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.toml",
        "scenario = \"remainder-fit\"\noutput = \"out\"\n[driver]\nsteps = 128\nlevels = [7]\n",
    );
    let run = roughlab(&["run", &cfg], tmp.path());
    assert!(matches!(run.status.code(), Some(0) | Some(2)));
    let text = stdout(&roughlab(&["report", "out"], tmp.path()));
    let row = text.lines().find(|l| l.starts_with("remainder-zeta")).expect("zeta row");
    assert!(row.contains("zeta=") && row.contains("expected>1"), "{row}");
}

#[test]
fn failed_check_exits_2_and_names_it() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.toml",
        "scenario = \"flow-convergence\"\noutput = \"out\"\n[driver]\nsteps = 256\nlevels = [8]\n\
         [flow]\nlevels = [4, 5, 6]\nslack = -5.0\n",
    );
    let o = roughlab(&["run", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("flow-self-convergence"), "{}", stderr(&o));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "failed");
}

#[test]
fn manifest_records_hashes_and_replays() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", "scenario = \"lift-check\"\noutput = \"a\"\n[driver]\nsteps = 128\nlevels = [7]\n");
    assert_eq!(roughlab(&["run", &cfg], tmp.path()).status.code(), Some(0));
    let o = roughlab(&["run", "a/manifest.json", "--output", "b"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let read = |d: &str| -> serde_json::Value {
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join(d).join("manifest.json")).unwrap()).unwrap()
    };
    let (a, b) = (read("a"), read("b"));
    assert_eq!(a["artifacts"], b["artifacts"]);
    assert!(a["rough_path_sha256"].is_string());
    for (name, hash) in a["artifacts"].as_object().unwrap() {
        let bytes = std::fs::read(tmp.path().join("b").join(name)).unwrap();
        assert_eq!(roughlab::scenario::sha256_hex(&bytes), hash.as_str().unwrap());
    }
}
