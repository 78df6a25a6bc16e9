use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &str = r#"
name = "small"
kind = "covariance"

[trap]
chemical_potential = 2.0
grid_points = 256
half_width = 8.0

[basis]
modes = 4

[probe]
rayleigh_length = 0.3

[time]
t_end = 1.0
samples = 10

[observe]
modes = [1, 2]
purity_m = [2]
purity_times = [0.5]
"#;

const ENSEMBLE: &str = r#"
name = "ens"
kind = "ensemble"
seed = 7

[trap]
chemical_potential = 2.0
grid_points = 256
half_width = 8.0

[basis]
modes = 3

[probe]
normalize = { mode = 1, kappa2_bar = 1.0 }

[feedback]
targets = [1]
gain = 1.0

[time]
t_end = 1.0
samples = 5

[observe]
modes = [1, 2]

[ensemble]
trajectories = 64
keep = 2
"#;

fn becprobe(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_becprobe"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn run_writes_tables_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("out");
    let o = becprobe(&["run", &cfg, "--out", out.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert_eq!(m["name"], "small");
    assert_eq!(m["kind"], "covariance");
    let outputs: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    for f in ["moments.csv", "physicality.csv", "purity.csv", "covariance_final.csv"] {
        assert!(outputs.contains(&f), "{f} missing from {outputs:?}");
        assert!(out.join(f).exists());
    }
    let moments = fs::read_to_string(out.join("moments.csv")).unwrap();
    assert!(moments.starts_with("# experiment=small\n"));
    assert!(moments.contains("t,strength,var_x_1,var_p_1"));
    assert!(m["summary"]["min_symplectic_eigenvalue"].as_f64().unwrap() >= 0.5 - 1e-6);
}

#[test]
fn manifest_reruns_to_identical_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let first = dir.path().join("a");
    let o = becprobe(&["run", &cfg, "--out", first.to_str().unwrap(), "--override", "probe.pixel_width=0.2"], dir.path());
    assert!(o.status.success());
    let second = dir.path().join("b");
    let man = first.join("manifest.json");
    let o = becprobe(&["run", man.to_str().unwrap(), "--out", second.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(manifest(&second)["config"]["probe"]["pixel_width"], 0.2);
    for f in ["moments.csv", "purity.csv", "covariance_final.csv"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(second.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn ensembles_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ens.toml", ENSEMBLE);
    let mut tables = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("t{threads}"));
        let o = becprobe(&["run", &cfg, "--out", out.to_str().unwrap(), "--threads", threads], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        tables.push((fs::read(out.join("sigma2.csv")).unwrap(), fs::read(out.join("examples.csv")).unwrap()));
    }
    assert_eq!(tables[0], tables[1]);
}

#[test]
fn seed_flag_changes_the_ensemble() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ens.toml", ENSEMBLE);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(becprobe(&["run", &cfg, "--out", a.to_str().unwrap()], dir.path()).status.success());
    assert!(becprobe(&["run", &cfg, "--out", b.to_str().unwrap(), "--seed", "8"], dir.path()).status.success());
    assert_eq!(manifest(&b)["seed"], 8);
    assert_ne!(fs::read(a.join("sigma2.csv")).unwrap(), fs::read(b.join("sigma2.csv")).unwrap());
}

#[test]
fn scans_write_per_point_and_stacked_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("scan");
    let o = becprobe(
        &[
            "run",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--override",
            "scan.key=probe.pixel_width",
            "--override",
            "scan.values=[0.0, 1.0]",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("probe.pixel_width=0.0").join("purity.csv").exists());
    let stacked = fs::read_to_string(out.join("scan_purity.csv")).unwrap();
    assert!(stacked.contains("pixel_width,t,m,purity"));
    assert_eq!(manifest(&out)["summary"].as_array().unwrap().len(), 2);
}

#[test]
fn invalid_configs_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let o = becprobe(&["validate", &cfg, "--override", "basis.modes=60"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("unresolvable modes"));
    let out = dir.path().join("never");
    let o = becprobe(&["run", &cfg, "--out", out.to_str().unwrap(), "--override", "basis.modes=60"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = becprobe(&["run", &cfg, "--override", "trap.bogus=1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = becprobe(&["validate", "no-such-preset"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_reports_ok_for_a_clean_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let o = becprobe(&["validate", &cfg], dir.path());
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "ok");
}

#[test]
fn presets_list_and_dump() {
    let dir = tempfile::tempdir().unwrap();
    let o = becprobe(&["presets"], dir.path());
    assert!(o.status.success());
    let list = String::from_utf8_lossy(&o.stdout);
    for name in ["fig2", "fig5", "fig8-j3"] {
        assert!(list.contains(name), "{name}");
    }
    let o = becprobe(&["presets", "--dump", "fig3"], dir.path());
    assert!(String::from_utf8_lossy(&o.stdout).contains("kind = \"covariance\""));
}

#[test]
fn default_output_directory_follows_the_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let o = becprobe(&["run", &cfg, "--override", "basis.modes=2", "--override", "observe.modes=[1]"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("out").join("small").join("manifest.json").exists());
}
