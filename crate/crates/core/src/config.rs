//! TOML run configuration. Every key carries its unit in the name.
//!
//! ```toml
//! scenario = "single_photon"
//! override_criterion = false
//!
//! [physical]
//! kinetic_energy_ev = 100.0
//! free_spectral_range_thz = 13.0
//!
//! [numerics]
//! points_per_recoil = 8
//!
//! [sweep]
//! gq_points = 33
//! ```

use std::f64::consts::PI;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{Dispersion, PhysicalSetup};
use crate::scenario::{Numerics, ScenarioConfig, ScenarioKind, SweepSpec};

/// Largest relative mismatch in Q tolerated between a given grating period
/// and the one phase matching requires.
pub const GRATING_CONFLICT_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub scenario: Option<ScenarioKind>,
    #[serde(default)]
    pub override_criterion: bool,
    #[serde(default)]
    pub physical: RawPhysical,
    #[serde(default)]
    pub numerics: RawNumerics,
    #[serde(default)]
    pub sweep: RawSweep,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPhysical {
    pub kinetic_energy_ev: Option<f64>,
    pub energy_uncertainty_ev: Option<f64>,
    pub cavity_length_m: Option<f64>,
    pub design_wavelength_m: Option<f64>,
    pub refractive_index: Option<f64>,
    pub grating_period_m: Option<f64>,
    /// Δω/2π in THz.
    pub free_spectral_range_thz: Option<f64>,
    pub coupling_gq: Option<f64>,
    pub loss_probability: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawNumerics {
    pub points_per_recoil: Option<usize>,
    pub photon_cutoff: Option<usize>,
    pub signal_modes: Option<usize>,
    pub loss_modes: Option<usize>,
    pub tolerance: Option<f64>,
    pub samples: Option<usize>,
    pub sinc_prune: Option<f64>,
    pub adiabatic_prune: Option<f64>,
    pub dispersion: Option<Dispersion>,
    pub detuning_fraction: Option<f64>,
    pub lambda_recoil_split_rad_per_m: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSweep {
    pub gq_min: Option<f64>,
    pub gq_max: Option<f64>,
    pub gq_points: Option<usize>,
    pub fraction_min: Option<f64>,
    pub fraction_max: Option<f64>,
    pub fraction_points: Option<usize>,
    pub electrons: Option<Vec<u32>>,
}

pub fn parse_config(text: &str) -> Result<RawConfig> {
    Ok(toml::from_str(text)?)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    validate_config(&parse_config(&text)?)
}

/// Fill defaults, resolve the grating and check consistency.
pub fn validate_config(raw: &RawConfig) -> Result<ScenarioConfig> {
    let kind = raw.scenario.ok_or_else(|| Error::Config("missing required field `scenario`".into()))?;
    let mut setup = match kind {
        ScenarioKind::PhotonPair | ScenarioKind::Swap => PhysicalSetup::three_level_defaults()?,
        _ => PhysicalSetup::single_photon_defaults()?,
    };
    let p = &raw.physical;
    let set = |slot: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut setup.kinetic_energy_ev, p.kinetic_energy_ev);
    set(&mut setup.energy_uncertainty_ev, p.energy_uncertainty_ev);
    set(&mut setup.cavity_length_m, p.cavity_length_m);
    set(&mut setup.design_wavelength_m, p.design_wavelength_m);
    set(&mut setup.refractive_index, p.refractive_index);
    set(&mut setup.coupling_gq, p.coupling_gq);
    set(&mut setup.loss_probability, p.loss_probability);
    if let Some(f) = p.free_spectral_range_thz {
        setup.free_spectral_range_rad_s = 2.0 * PI * f * 1e12;
    }
    if !(0.0..1.0).contains(&setup.loss_probability) {
        return Err(Error::Config(format!("loss_probability {} outside [0, 1)", setup.loss_probability)));
    }
    let design = setup.design()?;
    setup.grating_period_m = match p.grating_period_m {
        None => design.grating.period,
        Some(period) => {
            if !(period > 0.0) {
                return Err(Error::Config("grating_period_m must be positive".into()));
            }
            let q = design.grating.mode_wavenumber + 2.0 * PI / period;
            let rel = (q - design.grating.total_recoil).abs() / design.grating.total_recoil;
            if rel > GRATING_CONFLICT_TOLERANCE {
                return Err(Error::Config(format!(
                    "grating_period_m {period:e} conflicts with phase matching (Q off by {:.2}%, derived period {:e} m)",
                    100.0 * rel,
                    design.grating.period
                )));
            }
            period
        }
    };
    setup.validate()?;

    let mut numerics = if kind == ScenarioKind::Swap { Numerics::lambda_defaults() } else { Numerics::default() };
    let n = &raw.numerics;
    let set_usize = |slot: &mut usize, v: Option<usize>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set_usize(&mut numerics.points_per_recoil, n.points_per_recoil);
    set_usize(&mut numerics.photon_cutoff, n.photon_cutoff);
    set_usize(&mut numerics.signal_modes, n.signal_modes);
    set_usize(&mut numerics.loss_modes, n.loss_modes);
    set_usize(&mut numerics.samples, n.samples);
    set(&mut numerics.tolerance, n.tolerance);
    set(&mut numerics.sinc_prune, n.sinc_prune);
    set(&mut numerics.adiabatic_prune, n.adiabatic_prune);
    if let Some(d) = n.dispersion {
        numerics.dispersion = d;
    }
    numerics.detuning_fraction = n.detuning_fraction;
    numerics.lambda_recoil_split = n.lambda_recoil_split_rad_per_m;
    numerics.integrator().validate()?;
    if let Some(f) = numerics.detuning_fraction {
        if !(f > 0.0) {
            return Err(Error::Config(format!("detuning_fraction {f} must be positive")));
        }
    }

    let mut sweep = SweepSpec::defaults_for(kind);
    let s = &raw.sweep;
    set(&mut sweep.gq_min, s.gq_min);
    set(&mut sweep.gq_max, s.gq_max);
    set_usize(&mut sweep.gq_points, s.gq_points);
    set(&mut sweep.fraction_min, s.fraction_min);
    set(&mut sweep.fraction_max, s.fraction_max);
    set_usize(&mut sweep.fraction_points, s.fraction_points);
    if let Some(e) = &s.electrons {
        sweep.electrons = e.clone();
    }
    if sweep.electrons.contains(&0) {
        return Err(Error::Config("electron counts must be at least 1".into()));
    }
    if !(sweep.fraction_min > 0.0 && sweep.fraction_max >= sweep.fraction_min) {
        return Err(Error::Config("fraction range must be positive and ordered".into()));
    }

    Ok(ScenarioConfig { kind, setup, numerics, sweep, override_criterion: raw.override_criterion })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_block_gives_defaults() {
        let cfg = validate_config(&parse_config("scenario = \"single_photon\"").unwrap()).unwrap();
        let s = cfg.setup;
        assert_eq!(s.kinetic_energy_ev, 100.0);
        assert_eq!(s.cavity_length_m, 10e-6);
        assert_eq!(s.design_wavelength_m, 532e-9);
        assert_eq!(s.refractive_index, 1.5);
        assert_eq!(s.free_spectral_range_rad_s, 2.0 * PI * 13e12);
        assert_eq!(s.energy_uncertainty_ev, 0.01);
        assert_eq!(s.loss_probability, 1e-2);
        assert_eq!(s.coupling_gq, PI / 2.0);
        assert!(s.grating_period_m > 10e-9 && s.grating_period_m < 12e-9);
        assert_eq!(cfg.numerics, Numerics::default());
    }

    #[test]
    fn three_level_defaults() {
        let cfg = validate_config(&parse_config("scenario = \"swap\"").unwrap()).unwrap();
        assert_eq!(cfg.setup.coupling_gq, PI / 2f64.sqrt());
        assert_eq!(cfg.numerics.points_per_recoil, 32);
    }

    #[test]
    fn rejects_bad_input() {
        let bad = |text: &str| validate_config(&parse_config(text)?);
        assert!(bad("scenario = \"single_photon\"\n[physical]\nloss_probability = 1.5").is_err());
        assert!(bad("[physical]\nkinetic_energy_ev = 100.0").is_err());
        assert!(bad("scenario = \"single_photon\"\n[physical]\nkinetic_energy = 100.0").is_err());
        assert!(bad("scenario = \"bogus\"").is_err());
        assert!(bad("scenario = \"single_photon\"\n[physical]\ngrating_period_m = 12e-9").is_err());
        assert!(bad("scenario = \"single_photon\"\n[numerics]\ntolerance = 1e-3").is_err());
    }

    #[test]
    fn consistent_grating_accepted() {
        let derived = PhysicalSetup::single_photon_defaults().unwrap().grating_period_m;
        let text = format!("scenario = \"single_photon\"\n[physical]\ngrating_period_m = {:e}", derived * 1.001);
        let cfg = validate_config(&parse_config(&text).unwrap()).unwrap();
        assert_eq!(cfg.setup.grating_period_m, derived * 1.001);
    }
}
