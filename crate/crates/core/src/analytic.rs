//! Closed-form few-level solutions, the SWAP map and symmetric-state algebra.

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::model::CONSTANTS;
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct FewLevelState {
    pub labels: Vec<String>,
    pub amplitudes: Vec<C64>,
}

impl FewLevelState {
    pub fn new(labels: &[&str], amplitudes: Vec<C64>) -> Self {
        FewLevelState { labels: labels.iter().map(|s| s.to_string()).collect(), amplitudes }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn amplitude(&self, label: &str) -> Option<C64> {
        self.labels.iter().position(|l| l == label).map(|i| self.amplitudes[i])
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn scaled(&self, factor: C64) -> Self {
        FewLevelState { labels: self.labels.clone(), amplitudes: self.amplitudes.iter().map(|a| a * factor).collect() }
    }
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// cos|g|t |E1,0⟩ − e^{−i arg g} sin|g|t |E0,1⟩.
pub fn jc_two_level(g: C64, t: f64) -> FewLevelState {
    let theta = g.norm() * t;
    let phase = C64::from_polar(1.0, -g.arg());
    FewLevelState::new(&["E1,0", "E0,1"], vec![re(theta.cos()), -phase * theta.sin()])
}

/// Ladder E2 → E1 → E0 with equal real couplings, starting in |E2,0,0⟩.
pub fn ladder_three_level(g: f64, t: f64) -> FewLevelState {
    let half = g * t / SQRT_2;
    FewLevelState::new(
        &["E2,0,0", "E1,1,0", "E0,1,1"],
        vec![re(half.cos().powi(2)), re(-(SQRT_2 * g * t).sin() / SQRT_2), re(half.sin().powi(2))],
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaInitial {
    /// Electron in E0 with a photon in the E1↔E0 mode.
    E0_0_1,
    /// Electron in E2 with a photon in the E1↔E2 mode.
    E2_1_0,
}

/// Lambda system with shared excited level E1, equal real couplings.
/// Labels are always ordered (E0,0,1), (E1,0,0), (E2,1,0).
pub fn lambda_three_level(g: f64, t: f64, initial: LambdaInitial) -> FewLevelState {
    let half = g * t / SQRT_2;
    let stay = re(half.cos().powi(2));
    let mid = re((SQRT_2 * g * t).sin() / SQRT_2);
    let cross = re(-half.sin().powi(2));
    let amplitudes = match initial {
        LambdaInitial::E0_0_1 => vec![stay, mid, cross],
        LambdaInitial::E2_1_0 => vec![cross, mid, stay],
    };
    FewLevelState::new(&["E0,0,1", "E1,0,0", "E2,1,0"], amplitudes)
}

/// Electron qubit (α_el|E0⟩ + β_el|E2⟩) and photon qubit
/// (α_ph|0,1⟩ + β_ph|1,0⟩) after a full lambda transit:
/// (−β_ph, α_ph) ⊗ (β_el, −α_el).
pub fn swap_gate(electron: [C64; 2], photon: [C64; 2]) -> Result<([C64; 2], [C64; 2])> {
    for (name, q) in [("electron", electron), ("photon", photon)] {
        let n = q[0].norm_sqr() + q[1].norm_sqr();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(format!("{name} qubit has norm² {n}")));
        }
    }
    let [a_el, b_el] = electron;
    let [a_ph, b_ph] = photon;
    Ok(([-b_ph, a_ph], [b_el, -a_el]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderDirection {
    Raise,
    Lower,
}

/// Matrix element of S± on the symmetric state |n⟩_S of N two-level
/// emitters (n excited).
pub fn symmetric_ladder_coefficient(electrons: u32, n: u32, direction: LadderDirection) -> Result<f64> {
    let (big, n) = (electrons as f64, n as f64);
    if n > big {
        return Err(Error::InvalidParameter(format!("n = {n} exceeds N = {big}")));
    }
    match direction {
        LadderDirection::Raise if n < big => Ok(((big - n) * (n + 1.0)).sqrt()),
        LadderDirection::Lower if n > 0.0 => Ok(((big - n + 1.0) * n).sqrt()),
        _ => Err(Error::InvalidParameter(format!("{direction:?} is undefined at n = {n}, N = {big}"))),
    }
}

/// Single-excitation Tavis-Cummings evolution from |1⟩_S|0⟩.
pub fn tavis_cummings_single_excitation(electrons: u32, g: C64, t: f64) -> Result<FewLevelState> {
    if electrons == 0 {
        return Err(Error::InvalidParameter("need at least one electron".into()));
    }
    let theta = (electrons as f64).sqrt() * g.norm() * t;
    let phase = C64::from_polar(1.0, -g.arg());
    Ok(FewLevelState::new(&["1S,0", "0S,1"], vec![re(theta.cos()), -phase * theta.sin()]))
}

/// Eigenpair of a JC excitation manifold. Energies in joules relative to
/// the bare level.
#[derive(Debug, Clone, PartialEq)]
pub struct JcEigenpair {
    pub energy: f64,
    /// Components on (|E, n−1⟩, |E−ħω, n⟩), or on (|E−ħω, 0⟩) for n = 0.
    pub vector: Vec<C64>,
}

/// Polariton pair of the n-excitation manifold for H = iħ(g σ₊a − g* σ₋a†),
/// ordered by energy; n = 0 gives the uncoupled ground state.
pub fn jc_eigensystem(n: u32, g: C64) -> Vec<JcEigenpair> {
    if n == 0 {
        return vec![JcEigenpair { energy: 0.0, vector: vec![re(1.0)] }];
    }
    let e = CONSTANTS.hbar * g.norm() * (n as f64).sqrt();
    // H = ħ|g|√n [[0, i e^{iφ}], [−i e^{−iφ}, 0]]
    let u = C64::new(0.0, -1.0) * C64::from_polar(1.0, -g.arg());
    let s = 1.0 / SQRT_2;
    vec![
        JcEigenpair { energy: -e, vector: vec![re(s), -u * s] },
        JcEigenpair { energy: e, vector: vec![re(s), u * s] },
    ]
}
