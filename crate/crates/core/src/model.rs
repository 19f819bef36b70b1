//! Domain types: physical constants, experiment parameters, cavity modes and
//! the truncated momentum ⊗ Fock basis.
//!
//! Basis layout: the flat index of `|k_i, n⃗⟩` is `i * fock.dim() + f(n⃗)` with
//! `f(n⃗) = Σ_j n_j (N_max + 1)^j`, i.e. occupation tuples are little-endian by
//! mode index and the momentum index is the slowest-varying coordinate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::phasematch::{self, ElectronKinematics, GratingSolution};
use crate::C64;

/// Physical constants in SI units (CODATA 2018).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub electron_mass: f64,
    pub electron_charge: f64,
    pub hbar: f64,
    pub light_speed: f64,
    /// Electron rest energy in eV.
    pub electron_rest_energy: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    electron_mass: 9.109_383_701_5e-31,
    electron_charge: 1.602_176_634e-19,
    hbar: 1.054_571_817e-34,
    light_speed: 299_792_458.0,
    electron_rest_energy: 510_998.950_00,
};

impl PhysicalConstants {
    /// ħ/m in m²/s.
    pub fn hbar_over_mass(&self) -> f64 {
        self.hbar / self.electron_mass
    }

    /// Rest energy recomputed from m·c², in eV.
    pub fn rest_energy_from_mass(&self) -> f64 {
        self.electron_mass * self.light_speed * self.light_speed / self.electron_charge
    }

    /// Convert an angular frequency (rad/s) to a photon energy in eV.
    pub fn frequency_to_ev(&self, omega: f64) -> f64 {
        self.hbar * omega / self.electron_charge
    }
}

/// All scalar parameters of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalSetup {
    pub kinetic_energy_ev: f64,
    /// Standard deviation of the electron energy, eV.
    pub energy_uncertainty_ev: f64,
    pub cavity_length_m: f64,
    pub design_wavelength_m: f64,
    pub refractive_index: f64,
    pub grating_period_m: f64,
    pub free_spectral_range_rad_s: f64,
    /// g·T, dimensionless.
    pub coupling_gq: f64,
    pub loss_probability: f64,
}

impl PhysicalSetup {
    /// Single-photon experiment parameters: 100 eV electron with 10 meV
    /// spread, 10 μm cavity, 532 nm design wavelength, n = 1.5,
    /// FSR 2π × 13 THz, g_Q = π/2, loss probability 1e-2. The grating period
    /// is derived from phase matching.
    pub fn single_photon_defaults() -> Result<Self> {
        let mut setup = PhysicalSetup {
            kinetic_energy_ev: 100.0,
            energy_uncertainty_ev: 0.01,
            cavity_length_m: 10e-6,
            design_wavelength_m: 532e-9,
            refractive_index: 1.5,
            grating_period_m: f64::NAN,
            free_spectral_range_rad_s: 2.0 * PI * 13e12,
            coupling_gq: PI / 2.0,
            loss_probability: 1e-2,
        };
        setup.grating_period_m = setup.design()?.grating.period;
        setup.validate()?;
        Ok(setup)
    }

    /// Same as [`single_photon_defaults`](Self::single_photon_defaults) with
    /// g_Q = π/√2, the three-level operating point.
    pub fn three_level_defaults() -> Result<Self> {
        let mut setup = Self::single_photon_defaults()?;
        setup.coupling_gq = PI / 2f64.sqrt();
        Ok(setup)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.kinetic_energy_ev > 0.0) {
            return bad("kinetic energy must be positive");
        }
        phasematch::electron_kinematics(self.kinetic_energy_ev)?;
        if !(self.energy_uncertainty_ev >= 0.0) {
            return bad("energy uncertainty must be non-negative");
        }
        if !(self.cavity_length_m > 0.0) {
            return bad("cavity length must be positive");
        }
        if !(self.design_wavelength_m > 0.0) {
            return bad("design wavelength must be positive");
        }
        if !(self.refractive_index > 0.0) {
            return bad("refractive index must be positive");
        }
        if !(self.grating_period_m > 0.0) {
            return bad("grating period must be positive");
        }
        if !(self.free_spectral_range_rad_s > 0.0) {
            return bad("free spectral range must be positive");
        }
        if !self.coupling_gq.is_finite() {
            return bad("coupling g_Q must be finite");
        }
        if !(0.0..1.0).contains(&self.loss_probability) {
            return bad("loss probability must lie in [0, 1)");
        }
        Ok(())
    }

    /// Electron kinematics plus the phase-matched grating for this setup.
    pub fn design(&self) -> Result<Design> {
        let kinematics = phasematch::electron_kinematics(self.kinetic_energy_ev)?;
        let grating = phasematch::solve_grating_period(
            self.kinetic_energy_ev,
            self.design_wavelength_m,
            self.refractive_index,
        )?;
        Ok(Design {
            kinematics,
            grating,
            transit_time: self.cavity_length_m * kinematics.time_per_length,
        })
    }

    /// Interaction time T = L/v.
    pub fn transit_time(&self) -> Result<f64> {
        Ok(self.cavity_length_m * phasematch::electron_kinematics(self.kinetic_energy_ev)?.time_per_length)
    }
}

/// Derived design quantities shared by the builders below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Design {
    pub kinematics: ElectronKinematics,
    pub grating: GratingSolution,
    pub transit_time: f64,
}

/// Electron energy-momentum relation used for transition frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Dispersion {
    /// E_k = ħ²k²/2m.
    #[default]
    Parabolic,
    /// Linearized about the grid center: the recoil curvature is dropped.
    Linear,
}

impl Dispersion {
    /// (E_k − E_{k−q})/ħ for an electron at `k` losing momentum `q`.
    /// `k0` is the linearization point of [`Dispersion::Linear`].
    pub fn transition_frequency(self, k: f64, q: f64, k0: f64) -> f64 {
        let hm = CONSTANTS.hbar_over_mass();
        match self {
            Dispersion::Parabolic => hm * q * (k - 0.5 * q),
            Dispersion::Linear => hm * k0 * q,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeRole {
    Signal,
    Loss,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityMode {
    /// Longitudinal index relative to the target mode (target = 0).
    pub index: i32,
    /// ω_j in rad/s.
    pub frequency: f64,
    /// q_j in rad/m.
    pub wavenumber: f64,
    /// Q_j = q_j + 2π/Λ in rad/m.
    pub total_recoil: f64,
    pub role: ModeRole,
    /// Coupling amplitude relative to the target mode (signal modes only).
    pub coupling_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CavityModeSet {
    pub modes: Vec<CavityMode>,
    /// Position of the phase-matched target mode j0 in `modes`.
    pub target: usize,
}

impl CavityModeSet {
    pub fn new(modes: Vec<CavityMode>, target: usize) -> Result<Self> {
        if modes.is_empty() || target >= modes.len() {
            return Err(Error::InvalidParameter("mode set needs a target mode".into()));
        }
        if modes[target].role != ModeRole::Signal {
            return Err(Error::InvalidParameter("target mode must have the signal role".into()));
        }
        for m in &modes {
            if !(m.frequency > 0.0) {
                return Err(Error::InvalidParameter("mode frequencies must be positive".into()));
            }
        }
        Ok(CavityModeSet { modes, target })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn target_mode(&self) -> &CavityMode {
        &self.modes[self.target]
    }

    pub fn loss_count(&self) -> usize {
        self.modes.iter().filter(|m| m.role == ModeRole::Loss).count()
    }

    /// Fabry-Perot comb: `signal` consecutive longitudinal modes around the
    /// phase-matched one (ω_j = ω_j0 + jΔω) followed by `loss` free-space loss
    /// channels resonant with the first electron transition.
    ///
    /// The target frequency is set to the electron transition frequency at
    /// k0 for the recoil Q returned by the grating solver, so the first
    /// emission is exactly resonant under the chosen dispersion.
    pub fn fabry_perot(
        setup: &PhysicalSetup,
        design: &Design,
        signal: usize,
        loss: usize,
        dispersion: Dispersion,
    ) -> Result<Self> {
        if signal == 0 {
            return Err(Error::InvalidParameter("at least one signal mode is required".into()));
        }
        let c = CONSTANTS.light_speed;
        let n = setup.refractive_index;
        let k0 = design.kinematics.k0;
        let recoil = design.grating.total_recoil;
        let grating_k = recoil - design.grating.mode_wavenumber;
        let w0 = dispersion.transition_frequency(k0, recoil, k0);
        let first = -((signal as i32 - 1) / 2);
        let mut modes = Vec::with_capacity(signal + loss);
        for s in 0..signal as i32 {
            let j = first + s;
            let w = w0 + j as f64 * setup.free_spectral_range_rad_s;
            if !(w > 0.0) {
                return Err(Error::InvalidParameter(format!("mode {j} has non-positive frequency")));
            }
            // anchored to the design wavenumber so the target recoil stays on the grid
            let q = design.grating.mode_wavenumber + n * (w - w0) / c;
            modes.push(CavityMode {
                index: j,
                frequency: w,
                wavenumber: q,
                total_recoil: q + grating_k,
                role: ModeRole::Signal,
                coupling_scale: w0 / w,
            });
        }
        let target = (-first) as usize;
        push_loss_modes(&mut modes, target, loss);
        CavityModeSet::new(modes, target)
    }

    /// Ladder pair: mode 0 drives E2→E1 (the phase-matched design mode),
    /// mode 1 sits exactly one recoil detuning ħQ²/m below it so the second
    /// transition E1→E0 is resonant. The pair is assumed isolated from the
    /// rest of the cavity spectrum.
    pub fn ladder(setup: &PhysicalSetup, design: &Design, loss: usize, dispersion: Dispersion) -> Result<Self> {
        let k0 = design.kinematics.k0;
        let recoil = design.grating.total_recoil;
        let w_first = dispersion.transition_frequency(k0, recoil, k0);
        let w_second = dispersion.transition_frequency(k0 - recoil, recoil, k0);
        let q_first = design.grating.mode_wavenumber;
        let q_second = q_first + setup.refractive_index * (w_second - w_first) / CONSTANTS.light_speed;
        let grating_k = recoil - q_first;
        let mut modes = vec![
            CavityMode {
                index: 0,
                frequency: w_first,
                wavenumber: q_first,
                total_recoil: recoil,
                role: ModeRole::Signal,
                coupling_scale: 1.0,
            },
            CavityMode {
                index: 1,
                frequency: w_second,
                wavenumber: q_second,
                total_recoil: q_second + grating_k,
                role: ModeRole::Signal,
                coupling_scale: 1.0,
            },
        ];
        push_loss_modes(&mut modes, 0, loss);
        CavityModeSet::new(modes, 0)
    }

    /// Lambda pair sharing the excited level E1 = E. Mode 1 (the target)
    /// couples E1↔E0 with the design recoil Q; mode 0 couples E1↔E2 through
    /// a counter-propagating standing-wave component with recoil
    /// Q + `recoil_split`, snapped to the momentum grid of
    /// `points_per_recoil`. Both mode frequencies are placed on resonance.
    ///
    /// Occupations are written (n_0, n_1), so `|E0,0,1⟩` carries its photon
    /// in the E1↔E0 mode.
    pub fn lambda(
        design: &Design,
        recoil_split: f64,
        points_per_recoil: usize,
        loss: usize,
        dispersion: Dispersion,
    ) -> Result<Self> {
        if points_per_recoil == 0 {
            return Err(Error::InvalidParameter("points_per_recoil must be at least 1".into()));
        }
        let k0 = design.kinematics.k0;
        let recoil = design.grating.total_recoil;
        let spacing = recoil / points_per_recoil as f64;
        let cells = ((recoil + recoil_split) / spacing).round();
        if cells as usize == points_per_recoil {
            return Err(Error::InvalidParameter(
                "lambda recoil split is below one grid cell; increase points_per_recoil".into(),
            ));
        }
        let recoil_b = cells * spacing;
        let grating_k = recoil - design.grating.mode_wavenumber;
        let w_a = dispersion.transition_frequency(k0, recoil, k0);
        let w_b = dispersion.transition_frequency(k0, recoil_b, k0);
        let mut modes = vec![
            CavityMode {
                index: 1,
                frequency: w_b,
                wavenumber: recoil_b - grating_k,
                total_recoil: recoil_b,
                role: ModeRole::Signal,
                coupling_scale: 1.0,
            },
            CavityMode {
                index: 0,
                frequency: w_a,
                wavenumber: design.grating.mode_wavenumber,
                total_recoil: recoil,
                role: ModeRole::Signal,
                coupling_scale: 1.0,
            },
        ];
        push_loss_modes(&mut modes, 1, loss);
        CavityModeSet::new(modes, 1)
    }
}

fn push_loss_modes(modes: &mut Vec<CavityMode>, resonant_with: usize, count: usize) {
    let resonant_with = modes[resonant_with];
    for _ in 0..count {
        modes.push(CavityMode {
            role: ModeRole::Loss,
            coupling_scale: 0.0,
            ..resonant_with
        });
    }
}

/// Uniform electron momentum grid, `len` points spaced `spacing`, with `k0`
/// at `center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumGrid {
    pub k0: f64,
    pub spacing: f64,
    pub center: usize,
    pub len: usize,
}

impl MomentumGrid {
    pub fn value(&self, i: usize) -> f64 {
        self.k0 + (i as f64 - self.center as f64) * self.spacing
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.value(i)).collect()
    }

    pub fn span(&self) -> f64 {
        (self.len - 1) as f64 * self.spacing
    }

    /// Nearest whole number of cells for a momentum transfer, and the
    /// residual offset in cells.
    pub fn cells(&self, q: f64) -> (isize, f64) {
        let r = q / self.spacing;
        let n = r.round();
        (n as isize, (r - n).abs())
    }

    /// Grid index shifted by `cells`, if it stays on the grid.
    pub fn shifted(&self, i: usize, cells: isize) -> Option<usize> {
        let j = i as isize + cells;
        (0..self.len as isize).contains(&j).then_some(j as usize)
    }
}

/// Build the recoil-commensurate grid: span 7·Q_{j0}, spacing
/// Q_{j0}/points_per_recoil, k0 = m·v/ħ on a grid point with 3.5 recoils of
/// room below it (rounded up) for successive emissions.
pub fn build_momentum_grid(
    setup: &PhysicalSetup,
    modes: &CavityModeSet,
    points_per_recoil: usize,
) -> Result<MomentumGrid> {
    if points_per_recoil == 0 {
        return Err(Error::InvalidParameter("points_per_recoil must be at least 1".into()));
    }
    let kin = phasematch::electron_kinematics(setup.kinetic_energy_ev)?;
    let recoil = modes.target_mode().total_recoil;
    if !(recoil > 0.0) {
        return Err(Error::InvalidParameter("target recoil must be positive".into()));
    }
    let cells = 7 * points_per_recoil;
    let grid = MomentumGrid {
        k0: kin.k0,
        spacing: recoil / points_per_recoil as f64,
        center: cells.div_ceil(2),
        len: cells + 1,
    };
    for (mode, m) in modes.modes.iter().enumerate() {
        let (n, offset) = grid.cells(m.total_recoil);
        if offset >= 0.5 - 1e-12 || n <= 0 || n as usize >= grid.len {
            return Err(Error::IncommensurateGrid { mode, offset_cells: offset });
        }
    }
    Ok(grid)
}

/// Photon-number truncation shared by all modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    pub modes: usize,
    pub cutoff: usize,
}

impl FockSpace {
    pub fn new(modes: usize, cutoff: usize) -> Result<Self> {
        if modes == 0 || cutoff == 0 {
            return Err(Error::InvalidParameter("Fock space needs at least one mode and cutoff >= 1".into()));
        }
        let fock = FockSpace { modes, cutoff };
        if (cutoff as u128 + 1).checked_pow(modes as u32).is_none_or(|d| d > u32::MAX as u128) {
            return Err(Error::InvalidParameter("Fock space too large".into()));
        }
        Ok(fock)
    }

    pub fn dim(&self) -> usize {
        (self.cutoff + 1).pow(self.modes as u32)
    }

    pub fn stride(&self, mode: usize) -> usize {
        (self.cutoff + 1).pow(mode as u32)
    }

    pub fn index(&self, occupation: &[u8]) -> Result<usize> {
        if occupation.len() != self.modes || occupation.iter().any(|&n| n as usize > self.cutoff) {
            return Err(Error::OccupationOutOfRange(occupation.to_vec()));
        }
        Ok(occupation
            .iter()
            .enumerate()
            .map(|(j, &n)| n as usize * self.stride(j))
            .sum())
    }

    pub fn occupation(&self, mut index: usize) -> Vec<u8> {
        let radix = self.cutoff + 1;
        (0..self.modes)
            .map(|_| {
                let n = index % radix;
                index /= radix;
                n as u8
            })
            .collect()
    }

    /// Occupation of a single mode from a flat Fock index.
    pub fn mode_occupation(&self, index: usize, mode: usize) -> usize {
        (index / self.stride(mode)) % (self.cutoff + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Basis {
    pub grid: MomentumGrid,
    pub fock: FockSpace,
}

impl Basis {
    pub fn dim(&self) -> usize {
        self.grid.len * self.fock.dim()
    }

    pub fn flatten(&self, momentum: usize, fock_index: usize) -> usize {
        momentum * self.fock.dim() + fock_index
    }

    pub fn unflatten(&self, index: usize) -> (usize, usize) {
        (index / self.fock.dim(), index % self.fock.dim())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub basis: Basis,
    pub amplitudes: Vec<C64>,
}

impl JointState {
    pub fn zeros(basis: Basis) -> Self {
        JointState { basis, amplitudes: vec![C64::new(0.0, 0.0); basis.dim()] }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &JointState) -> Result<C64> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch);
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn amplitude(&self, momentum: usize, occupation: &[u8]) -> Result<C64> {
        let f = self.basis.fock.index(occupation)?;
        Ok(self.amplitudes[self.basis.flatten(momentum, f)])
    }

    /// Indices of nonzero amplitudes.
    pub fn support(&self) -> Vec<usize> {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm_sqr() > 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Probability of one labeled joint electron-photon state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledStateProbability {
    pub label: String,
    pub probability: f64,
}

/// Momentum width σ_k = σ_E/(ħv) for an energy spread given in eV.
pub fn momentum_width(grid: &MomentumGrid, sigma_e_ev: f64) -> f64 {
    let v = CONSTANTS.hbar_over_mass() * grid.k0;
    sigma_e_ev * CONSTANTS.electron_charge / (CONSTANTS.hbar * v)
}

/// Electron wavepacket amplitudes over the grid, centered `offset` cells
/// from k0. Amplitudes below 1e-12 of the peak are set to zero so the state
/// support stays compact.
pub fn wavepacket(grid: &MomentumGrid, sigma_e_ev: f64, offset: isize) -> Result<Vec<C64>> {
    if !(sigma_e_ev >= 0.0) {
        return Err(Error::InvalidParameter("energy uncertainty must be non-negative".into()));
    }
    let center = grid
        .shifted(grid.center, offset)
        .ok_or_else(|| Error::InvalidParameter("wavepacket center outside the grid".into()))?;
    let mut amps = vec![C64::new(0.0, 0.0); grid.len];
    let sigma_k = momentum_width(grid, sigma_e_ev);
    if sigma_k == 0.0 {
        amps[center] = C64::new(1.0, 0.0);
        return Ok(amps);
    }
    let below = (center as f64 + 0.5) * grid.spacing;
    let above = ((grid.len - 1 - center) as f64 + 0.5) * grid.spacing;
    let tail = |d: f64| 0.5 * erfc(d / (std::f64::consts::SQRT_2 * sigma_k));
    let lost = tail(below) + tail(above);
    if lost > 1e-6 {
        return Err(Error::WavepacketTruncated { lost_norm: lost });
    }
    let kc = grid.value(center);
    let mut norm = 0.0;
    for (i, a) in amps.iter_mut().enumerate() {
        let d = grid.value(i) - kc;
        let x = (-d * d / (4.0 * sigma_k * sigma_k)).exp();
        if x >= 1e-12 {
            *a = C64::new(x, 0.0);
            norm += x * x;
        }
    }
    let s = norm.sqrt();
    amps.iter_mut().for_each(|a| *a /= s);
    Ok(amps)
}

/// Gaussian electron wavepacket at k0 with energy spread σ_E (standard
/// deviation), tensored with a Fock occupation.
pub fn initial_state(grid: &MomentumGrid, fock: &FockSpace, sigma_e_ev: f64, occupation: &[u8]) -> Result<JointState> {
    initial_state_at(grid, fock, sigma_e_ev, occupation, 0)
}

/// As [`initial_state`], with the wavepacket centered `offset` cells from k0.
pub fn initial_state_at(
    grid: &MomentumGrid,
    fock: &FockSpace,
    sigma_e_ev: f64,
    occupation: &[u8],
    offset: isize,
) -> Result<JointState> {
    let f = fock.index(occupation)?;
    let basis = Basis { grid: *grid, fock: *fock };
    let mut state = JointState::zeros(basis);
    for (i, a) in wavepacket(grid, sigma_e_ev, offset)?.into_iter().enumerate() {
        state.amplitudes[basis.flatten(i, f)] = a;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fig2() -> (PhysicalSetup, Design) {
        let s = PhysicalSetup::single_photon_defaults().unwrap();
        let d = s.design().unwrap();
        (s, d)
    }

    #[test]
    fn constants_are_consistent() {
        let c = CONSTANTS;
        assert!(c.electron_mass > 0.0 && c.electron_charge > 0.0 && c.hbar > 0.0 && c.light_speed > 0.0);
        assert_relative_eq!(c.rest_energy_from_mass(), c.electron_rest_energy, max_relative = 1e-6);
    }

    #[test]
    fn setup_validation() {
        let (s, _) = fig2();
        assert!(s.validate().is_ok());
        let bad = PhysicalSetup { loss_probability: 1.5, ..s };
        assert!(bad.validate().is_err());
        let bad = PhysicalSetup { kinetic_energy_ev: 5000.0, ..s };
        assert!(matches!(bad.validate(), Err(Error::Relativistic { .. })));
        let bad = PhysicalSetup { cavity_length_m: 0.0, ..s };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn grid_at_100ev() {
        let (s, d) = fig2();
        let modes = CavityModeSet::fabry_perot(&s, &d, 3, 1, Dispersion::Parabolic).unwrap();
        let grid = build_momentum_grid(&s, &modes, 8).unwrap();
        // k0 = m v / ħ with v = c sqrt(2E/mc²)
        let v = CONSTANTS.light_speed * (200.0 / CONSTANTS.electron_rest_energy).sqrt();
        let k0 = CONSTANTS.electron_mass * v / CONSTANTS.hbar;
        assert_relative_eq!(grid.k0, k0, max_relative = 1e-12);
        assert!((grid.k0 - 5.12e10).abs() < 0.01e10);
        // de Broglie wavelength 12.3/sqrt(E) Å
        let lambda_db = 2.0 * PI / grid.k0;
        assert!((lambda_db - 1.226e-10).abs() < 0.005e-10);
        assert_relative_eq!(grid.span(), 7.0 * d.grating.total_recoil, max_relative = 1e-12);
        assert_eq!(grid.len, 57);
        assert_eq!(grid.value(grid.center), grid.k0);
    }

    #[test]
    fn one_point_per_recoil() {
        let (s, d) = fig2();
        let mut modes = CavityModeSet::fabry_perot(&s, &d, 1, 0, Dispersion::Parabolic).unwrap();
        modes.modes[0].total_recoil = 6.0e8;
        let grid = build_momentum_grid(&s, &modes, 1).unwrap();
        assert_eq!(grid.len, 8);
        assert_eq!(grid.spacing, 6.0e8);
        assert_relative_eq!(grid.span(), 7.0 * 6.0e8);
    }

    #[test]
    fn incommensurate_recoil_rejected() {
        let (s, d) = fig2();
        let mut modes = CavityModeSet::fabry_perot(&s, &d, 2, 0, Dispersion::Parabolic).unwrap();
        let q0 = modes.target_mode().total_recoil;
        let other = if modes.target == 0 { 1 } else { 0 };
        modes.modes[other].total_recoil = 1.5 * q0;
        assert!(matches!(
            build_momentum_grid(&s, &modes, 1),
            Err(Error::IncommensurateGrid { .. })
        ));
        // refining the grid resolves it
        assert!(build_momentum_grid(&s, &modes, 2).is_ok());
    }

    #[test]
    fn accepted_grids_are_commensurate() {
        let (s, d) = fig2();
        let modes = CavityModeSet::fabry_perot(&s, &d, 3, 2, Dispersion::Parabolic).unwrap();
        for ppr in [1, 2, 8, 16] {
            let grid = build_momentum_grid(&s, &modes, ppr).unwrap();
            for m in &modes.modes {
                let (n, _) = grid.cells(m.total_recoil);
                assert!((n as f64 * grid.spacing - m.total_recoil).abs() <= 0.5 * grid.spacing);
            }
        }
    }

    #[test]
    fn fock_index_bijection() {
        for (modes, cutoff) in [(1, 1), (2, 3), (3, 2), (4, 3)] {
            let fock = FockSpace::new(modes, cutoff).unwrap();
            let mut seen = vec![false; fock.dim()];
            for (idx, slot) in seen.iter_mut().enumerate() {
                let occ = fock.occupation(idx);
                assert_eq!(fock.index(&occ).unwrap(), idx);
                for (j, &n) in occ.iter().enumerate() {
                    assert_eq!(fock.mode_occupation(idx, j), n as usize);
                }
                *slot = true;
            }
            assert!(seen.iter().all(|&s| s));
        }
        let fock = FockSpace::new(2, 3).unwrap();
        assert_eq!(fock.index(&[0, 1]).unwrap(), 4);
        assert!(fock.index(&[4, 0]).is_err());
        assert!(fock.index(&[0]).is_err());
    }

    #[test]
    fn basis_bijection() {
        let (s, d) = fig2();
        let modes = CavityModeSet::fabry_perot(&s, &d, 2, 0, Dispersion::Parabolic).unwrap();
        let grid = build_momentum_grid(&s, &modes, 1).unwrap();
        let basis = Basis { grid, fock: FockSpace::new(2, 2).unwrap() };
        for idx in 0..basis.dim() {
            let (i, f) = basis.unflatten(idx);
            assert_eq!(basis.flatten(i, f), idx);
        }
    }

    #[test]
    fn delta_initial_state() {
        let (s, d) = fig2();
        let modes = CavityModeSet::fabry_perot(&s, &d, 2, 0, Dispersion::Parabolic).unwrap();
        let grid = build_momentum_grid(&s, &modes, 8).unwrap();
        let fock = FockSpace::new(2, 3).unwrap();
        let psi = initial_state(&grid, &fock, 0.0, &[0, 0]).unwrap();
        assert_eq!(psi.amplitude(grid.center, &[0, 0]).unwrap(), C64::new(1.0, 0.0));
        assert_eq!(psi.support().len(), 1);

        let psi = initial_state(&grid, &fock, 0.0, &[0, 1]).unwrap();
        let idx = psi.basis.flatten(grid.center, 4);
        assert_eq!(psi.amplitudes[idx], C64::new(1.0, 0.0));
        assert!(initial_state(&grid, &fock, 0.0, &[0, 4]).is_err());
    }

    #[test]
    fn momentum_width_at_10mev() {
        let (s, d) = fig2();
        let modes = CavityModeSet::fabry_perot(&s, &d, 1, 0, Dispersion::Parabolic).unwrap();
        let grid = build_momentum_grid(&s, &modes, 8).unwrap();
        let v = CONSTANTS.light_speed * (200.0 / CONSTANTS.electron_rest_energy).sqrt();
        let expect = 0.01 * CONSTANTS.electron_charge / (CONSTANTS.hbar * v);
        assert_relative_eq!(momentum_width(&grid, 0.01), expect, max_relative = 1e-12);
        assert!((expect - 2.56e6).abs() < 0.01e6);
    }

    #[test]
    fn resolved_gaussian_is_normalized() {
        let (s, d) = fig2();
        let modes = CavityModeSet::fabry_perot(&s, &d, 1, 0, Dispersion::Parabolic).unwrap();
        // spacing well below σ_k so the packet covers many points
        let grid = build_momentum_grid(&s, &modes, 1024).unwrap();
        let fock = FockSpace::new(1, 1).unwrap();
        let psi = initial_state(&grid, &fock, 0.01, &[0]).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-9);
        assert!(psi.support().len() > 10);
        // second moment matches σ_k
        let sigma_k = momentum_width(&grid, 0.01);
        let var: f64 = (0..grid.len)
            .map(|i| (grid.value(i) - grid.k0).powi(2) * psi.amplitude(i, &[0]).unwrap().norm_sqr())
            .sum();
        assert_relative_eq!(var.sqrt(), sigma_k, max_relative = 1e-3);
    }

    #[test]
    fn wide_wavepacket_rejected() {
        let (s, d) = fig2();
        let modes = CavityModeSet::fabry_perot(&s, &d, 1, 0, Dispersion::Parabolic).unwrap();
        let grid = build_momentum_grid(&s, &modes, 8).unwrap();
        let fock = FockSpace::new(1, 1).unwrap();
        assert!(matches!(
            initial_state(&grid, &fock, 500.0, &[0]),
            Err(Error::WavepacketTruncated { .. })
        ));
    }

    #[test]
    fn fabry_perot_modes() {
        let (s, d) = fig2();
        let modes = CavityModeSet::fabry_perot(&s, &d, 3, 2, Dispersion::Parabolic).unwrap();
        assert_eq!(modes.len(), 5);
        assert_eq!(modes.loss_count(), 2);
        assert_eq!(modes.target_mode().index, 0);
        let t = modes.target_mode();
        assert_relative_eq!(t.total_recoil, d.grating.total_recoil, max_relative = 1e-12);
        for m in &modes.modes {
            let grating = 2.0 * PI / s.grating_period_m;
            assert_relative_eq!(m.total_recoil, m.wavenumber + grating, max_relative = 1e-9);
        }
        assert_relative_eq!(
            modes.modes[2].frequency - modes.modes[1].frequency,
            s.free_spectral_range_rad_s,
            max_relative = 1e-9
        );
    }

    #[test]
    fn linear_target_recoil_stays_on_design() {
        let (s, d) = fig2();
        let modes = CavityModeSet::fabry_perot(&s, &d, 3, 1, Dispersion::Linear).unwrap();
        assert_eq!(modes.target_mode().total_recoil, d.grating.total_recoil);
        let w = Dispersion::Linear.transition_frequency(d.kinematics.k0, d.grating.total_recoil, d.kinematics.k0);
        assert_eq!(modes.target_mode().frequency, w);
        let ladder = CavityModeSet::ladder(&s, &d, 0, Dispersion::Linear).unwrap();
        assert_eq!(ladder.target_mode().total_recoil, d.grating.total_recoil);
    }
}
