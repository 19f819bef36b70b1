use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_freejc"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sp.toml", "scenario = \"single_photon\"\n[sweep]\ngq_points = 3\n");
    let out = dir.path().join("out");
    let status = bin().arg("run").arg(&cfg).arg("--out-dir").arg(&out).status().unwrap();
    assert!(status.success());
    let csv = fs::read_to_string(out.join("single_photon_sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "g_Q,P_E1_0,P_E0_1,P_other,fidelity");
    assert_eq!(lines.count(), 3);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("single_photon_manifest.json")).unwrap()).unwrap();
    for key in [
        "kinetic_energy_ev",
        "derived_grating_period_m",
        "derived_beta",
        "derived_transit_time_s",
        "derived_detuning_fraction",
        "derived_delta_min_t",
        "integrator_max_norm_drift",
        "integrator_accepted_steps",
    ] {
        assert!(manifest.get(key).is_some(), "manifest lacks {key}");
    }
    assert!(manifest.as_object().unwrap().values().all(|v| !v.is_object() && !v.is_array()));
}

#[test]
fn identical_config_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "pp.toml", "scenario = \"photon_pair\"\n[sweep]\ngq_points = 4\n");
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        assert!(bin().arg("run").arg(&cfg).arg("--out-dir").arg(&out).status().unwrap().success());
        let mut files: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().path()).collect();
        files.sort();
        outputs.push(files.iter().map(|f| fs::read(f).unwrap()).collect::<Vec<_>>());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn criterion_failure_needs_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        "scenario = \"single_photon\"\n[numerics]\ndetuning_fraction = 0.95\n[sweep]\ngq_points = 2\n",
    );
    let out = dir.path().join("out");
    let failed = bin().arg("run").arg(&cfg).arg("--out-dir").arg(&out).output().unwrap();
    assert!(!failed.status.success());
    assert!(String::from_utf8_lossy(&failed.stderr).contains("criterion"));
    let ok = bin()
        .arg("run")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out)
        .arg("--override-criterion")
        .status()
        .unwrap();
    assert!(ok.success());
}

#[test]
fn report_and_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sp.toml", "scenario = \"single_photon\"\n");
    let out = dir.path().join("out");
    assert!(bin().arg("report").arg(&cfg).arg("--out-dir").arg(&out).status().unwrap().success());
    assert!(out.join("phase_match_detunings.csv").exists());
    assert!(out.join("phase_match_report_manifest.json").exists());

    let bad = write_config(dir.path(), "bad.toml", "scenario = \"single_photon\"\n[physical]\nloss_probability = 1.5\n");
    assert!(!bin().arg("run").arg(&bad).status().unwrap().success());
    assert!(!bin().arg("run").arg(&cfg).arg("--tol").arg("1e-2").status().unwrap().success());
    assert!(!bin().arg("run").arg(dir.path().join("missing.toml")).status().unwrap().success());
}

#[test]
fn selftest_passes() {
    let out = bin().arg("selftest").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}
