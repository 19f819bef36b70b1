//! Phase matching and detuning algebra for a slow electron over a grating.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CavityMode, CavityModeSet, ModeRole, PhysicalSetup, CONSTANTS};

/// δ_min·T must reach this many radians for the two-level reduction to be
/// accepted (ten full oscillations).
pub const DEFAULT_CRITERION_THRESHOLD: f64 = 10.0 * 2.0 * PI;

/// Largest β accepted by the nonrelativistic model.
pub const MAX_BETA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ElectronKinematics {
    pub beta: f64,
    /// m/s
    pub velocity: f64,
    /// Central wavenumber m·v/ħ, rad/m.
    pub k0: f64,
    /// 1/v, s/m. Multiply by a length to get a transit time.
    pub time_per_length: f64,
}

/// Nonrelativistic kinematics of an electron with kinetic energy `energy_ev`.
pub fn electron_kinematics(energy_ev: f64) -> Result<ElectronKinematics> {
    if !(energy_ev > 0.0) || !energy_ev.is_finite() {
        return Err(Error::InvalidParameter(format!("kinetic energy must be positive, got {energy_ev}")));
    }
    let beta = (2.0 * energy_ev / CONSTANTS.electron_rest_energy).sqrt();
    if beta >= MAX_BETA {
        return Err(Error::Relativistic { energy_ev, beta });
    }
    let velocity = beta * CONSTANTS.light_speed;
    Ok(ElectronKinematics {
        beta,
        velocity,
        k0: CONSTANTS.electron_mass * velocity / CONSTANTS.hbar,
        time_per_length: 1.0 / velocity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GratingSolution {
    /// Λ in m.
    pub period: f64,
    /// Q = q0 + 2π/Λ in rad/m.
    pub total_recoil: f64,
    /// q0 = n ω0 / c in rad/m.
    pub mode_wavenumber: f64,
    /// ω0 = 2πc/λ0 in rad/s.
    pub frequency: f64,
    /// (ħ/m)k0·Q − ħQ²/2m − ω0 in rad/s.
    pub residual: f64,
}

/// Grating period that phase-matches an electron of energy `energy_ev` to a
/// cavity mode of vacuum wavelength `wavelength` in a medium of index `n`.
///
/// Solves (ħ/m)k0·Q − ħQ²/2m = ω0 for the smaller positive root Q and sets
/// Λ = 2π/(Q − q0).
pub fn solve_grating_period(energy_ev: f64, wavelength: f64, n: f64) -> Result<GratingSolution> {
    if !(wavelength > 0.0) || !(n > 0.0) {
        return Err(Error::InvalidParameter("wavelength and refractive index must be positive".into()));
    }
    let kin = electron_kinematics(energy_ev)?;
    let hm = CONSTANTS.hbar_over_mass();
    let c = CONSTANTS.light_speed;
    let w0 = 2.0 * PI * c / wavelength;
    let v = hm * kin.k0;
    let disc = v * v - 2.0 * hm * w0;
    if disc < 0.0 {
        return Err(Error::NoPhaseMatch(format!(
            "a {energy_ev} eV electron cannot emit at {wavelength:e} m"
        )));
    }
    // smaller root of (ħ/2m)Q² − vQ + ω0 = 0, in the cancellation-free form
    let recoil = 2.0 * w0 / (v + disc.sqrt());
    let q0 = n * w0 / c;
    if recoil <= q0 {
        return Err(Error::NoPhaseMatch(format!(
            "recoil {recoil:e} rad/m does not exceed the mode wavenumber {q0:e} rad/m"
        )));
    }
    Ok(GratingSolution {
        period: 2.0 * PI / (recoil - q0),
        total_recoil: recoil,
        mode_wavenumber: q0,
        frequency: w0,
        residual: hm * kin.k0 * recoil - 0.5 * hm * recoil * recoil - w0,
    })
}

/// Exact recoil detuning ħQ²/m of a second emission with the same recoil.
pub fn recoil_detuning(recoil: f64) -> f64 {
    CONSTANTS.hbar_over_mass() * recoil * recoil
}

/// Free spectral range πc/(nL) of an ideal Fabry-Perot cavity.
pub fn ideal_free_spectral_range(n: f64, length: f64) -> f64 {
    PI * CONSTANTS.light_speed / (n * length)
}

/// δ_min·T written through the detuning fraction: p·π/(n·β). Equal to the
/// direct product when Δω = πc/nL.
pub fn closed_form_criterion(fraction: f64, n: f64, beta: f64) -> f64 {
    fraction * PI / (n * beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetuningEntry {
    /// j − j0
    pub index: i32,
    /// rad/s
    pub emission: f64,
    /// rad/s
    pub absorption: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetuningReport {
    pub entries: Vec<DetuningEntry>,
    /// (ħ/m)(2π/Λ)², rad/s.
    pub recoil_detuning: f64,
    /// ħQ²/m with the full recoil Q, rad/s.
    pub recoil_detuning_exact: f64,
    pub free_spectral_range: f64,
    /// Distance of the recoil detuning to the nearest point of the FSR comb.
    pub delta_min: f64,
    /// δ_min / Δω, in [0, 1/2].
    pub fraction: f64,
    pub transit_time: f64,
    /// δ_min·T
    pub criterion: f64,
    pub threshold: f64,
    pub passes: bool,
}

/// Detuning of the first neglected transitions from every mode in the set:
/// emission δ_j = |(ħ/m)(2π/Λ)² + (j−j0)Δω|, absorption
/// δ_j = |(ħ/m)(2π/Λ)² − (j−j0)Δω|.
///
/// The cavity supports the whole FSR comb, so δ_min is the distance to the
/// nearest comb line even when that line is not among the listed modes.
pub fn detuning_table(setup: &PhysicalSetup, modes: &CavityModeSet) -> Result<DetuningReport> {
    detuning_table_with_threshold(setup, modes, DEFAULT_CRITERION_THRESHOLD)
}

pub fn detuning_table_with_threshold(
    setup: &PhysicalSetup,
    modes: &CavityModeSet,
    threshold: f64,
) -> Result<DetuningReport> {
    let kin = electron_kinematics(setup.kinetic_energy_ev)?;
    let fsr = setup.free_spectral_range_rad_s;
    let grating_k = 2.0 * PI / setup.grating_period_m;
    let recoil = CONSTANTS.hbar_over_mass() * grating_k * grating_k;
    let entries: Vec<DetuningEntry> = modes
        .modes
        .iter()
        .filter(|m| m.role == ModeRole::Signal)
        .map(|m| {
            let shift = m.index as f64 * fsr;
            DetuningEntry { index: m.index, emission: (recoil + shift).abs(), absorption: (recoil - shift).abs() }
        })
        .collect();
    let lattice = (recoil - fsr * (recoil / fsr).round()).abs();
    let listed = entries
        .iter()
        .flat_map(|e| [e.emission, e.absorption])
        .fold(f64::INFINITY, f64::min);
    let delta_min = lattice.min(listed);
    let transit_time = setup.cavity_length_m * kin.time_per_length;
    let criterion = delta_min * transit_time;
    Ok(DetuningReport {
        entries,
        recoil_detuning: recoil,
        recoil_detuning_exact: recoil_detuning(modes.target_mode().total_recoil),
        free_spectral_range: fsr,
        delta_min,
        fraction: delta_min / fsr,
        transit_time,
        criterion,
        threshold,
        passes: criterion >= threshold,
    })
}

/// Normalized sinc weight sinc[(Q_j − q)·L/2] of a momentum transfer `q`
/// into `mode` for a cavity of length `length`.
pub fn coupling_kernel(q: f64, mode: &CavityMode, length: f64) -> f64 {
    sinc((mode.total_recoil - q) * 0.5 * length)
}

pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}
