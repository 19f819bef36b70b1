use std::path::PathBuf;

use freejc::config::load_config;
use freejc::scenario::{run_scenario, ScenarioKind};

fn shipped(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

#[test]
fn shipped_configs_validate() {
    for (file, kind) in [
        ("single_photon.toml", ScenarioKind::SinglePhoton),
        ("detuning_sweep.toml", ScenarioKind::DetuningSweep),
        ("photon_pair.toml", ScenarioKind::PhotonPair),
        ("swap.toml", ScenarioKind::Swap),
        ("symmetric_n.toml", ScenarioKind::SymmetricN),
        ("phase_match_report.toml", ScenarioKind::PhaseMatchReport),
    ] {
        let cfg = load_config(&shipped(file)).unwrap();
        assert_eq!(cfg.kind, kind, "{file}");
    }
}

#[test]
fn symmetric_scenario_tracks_closed_form() {
    let cfg = load_config(&shipped("symmetric_n.toml")).unwrap();
    let result = run_scenario(&cfg).unwrap();
    let dynamics = result.table("symmetric_n_dynamics").unwrap();
    let err = dynamics.column("amplitude_error").unwrap();
    assert!(err.iter().all(|&e| e < 1e-10));
    let summary = result.table("symmetric_n_summary").unwrap();
    let required = summary.column("g_q_required").unwrap();
    let electrons = summary.column("electrons").unwrap();
    for (n, gq) in electrons.iter().zip(&required) {
        assert!((gq * n.sqrt() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }
}

#[test]
fn manifest_reruns_to_same_result() {
    let cfg = load_config(&shipped("phase_match_report.toml")).unwrap();
    let first = run_scenario(&cfg).unwrap();
    let m = &first.manifest;
    let text = format!(
        "scenario = \"phase_match_report\"\n[physical]\nkinetic_energy_ev = {:e}\nenergy_uncertainty_ev = {:e}\ncavity_length_m = {:e}\ndesign_wavelength_m = {:e}\nrefractive_index = {:e}\ngrating_period_m = {:e}\nfree_spectral_range_thz = {:e}\ncoupling_gq = {:e}\nloss_probability = {:e}\n",
        m["kinetic_energy_ev"].as_f64().unwrap(),
        m["energy_uncertainty_ev"].as_f64().unwrap(),
        m["cavity_length_m"].as_f64().unwrap(),
        m["design_wavelength_m"].as_f64().unwrap(),
        m["refractive_index"].as_f64().unwrap(),
        m["grating_period_m"].as_f64().unwrap(),
        m["free_spectral_range_thz"].as_f64().unwrap(),
        m["coupling_gq"].as_f64().unwrap(),
        m["loss_probability"].as_f64().unwrap(),
    );
    let raw = freejc::config::parse_config(&text).unwrap();
    let second = run_scenario(&freejc::config::validate_config(&raw).unwrap()).unwrap();
    assert_eq!(first.tables, second.tables);
}
