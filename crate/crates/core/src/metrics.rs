//! Observables on joint electron-photon states.

use crate::analytic::FewLevelState;
use crate::error::{Error, Result};
use crate::model::{Basis, CavityModeSet, JointState, LabeledStateProbability, MomentumGrid};
use crate::C64;

/// A joint electron-photon label: an electron momentum window centered
/// `shift_cells` from k0 and a photon occupation tuple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateLabel {
    pub name: String,
    pub shift_cells: isize,
    pub occupation: Vec<u8>,
}

/// Labels with recoil-centered windows of total width Q/2.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    pub labels: Vec<StateLabel>,
    /// Half-width of each window in rad/m.
    pub half_width: f64,
}

fn unit(modes: usize, set: &[usize]) -> Vec<u8> {
    let mut occ = vec![0u8; modes];
    for &m in set {
        occ[m] += 1;
    }
    occ
}

impl LabelMap {
    pub fn new(labels: Vec<StateLabel>, grid: &MomentumGrid, recoil: f64) -> Result<Self> {
        let map = LabelMap { labels, half_width: 0.25 * recoil };
        map.check(grid)?;
        Ok(map)
    }

    fn recoil_cells(grid: &MomentumGrid, modes: &CavityModeSet, j: usize) -> isize {
        grid.cells(modes.modes[j].total_recoil).0
    }

    /// |E1,0⟩ and |E0,1⟩ for the target mode.
    pub fn two_level(grid: &MomentumGrid, modes: &CavityModeSet) -> Result<Self> {
        let m = modes.len();
        let j = modes.target;
        let labels = vec![
            StateLabel { name: "E1,0".into(), shift_cells: 0, occupation: unit(m, &[]) },
            StateLabel {
                name: "E0,1".into(),
                shift_cells: -Self::recoil_cells(grid, modes, j),
                occupation: unit(m, &[j]),
            },
        ];
        Self::new(labels, grid, modes.target_mode().total_recoil)
    }

    /// |E2,0,0⟩, |E1,1,0⟩, |E0,1,1⟩ for a ladder pair (modes 0 and 1).
    pub fn ladder(grid: &MomentumGrid, modes: &CavityModeSet) -> Result<Self> {
        let m = modes.len();
        let (s0, s1) = (Self::recoil_cells(grid, modes, 0), Self::recoil_cells(grid, modes, 1));
        let labels = vec![
            StateLabel { name: "E2,0,0".into(), shift_cells: 0, occupation: unit(m, &[]) },
            StateLabel { name: "E1,1,0".into(), shift_cells: -s0, occupation: unit(m, &[0]) },
            StateLabel { name: "E0,1,1".into(), shift_cells: -s0 - s1, occupation: unit(m, &[0, 1]) },
        ];
        Self::new(labels, grid, modes.modes[0].total_recoil)
    }

    /// |E0,0,1⟩, |E1,0,0⟩, |E2,1,0⟩ for a lambda pair: mode 1 couples
    /// E1↔E0, mode 0 couples E1↔E2.
    pub fn lambda(grid: &MomentumGrid, modes: &CavityModeSet) -> Result<Self> {
        let m = modes.len();
        let (sb, sa) = (Self::recoil_cells(grid, modes, 0), Self::recoil_cells(grid, modes, 1));
        let labels = vec![
            StateLabel { name: "E0,0,1".into(), shift_cells: -sa, occupation: unit(m, &[1]) },
            StateLabel { name: "E1,0,0".into(), shift_cells: 0, occupation: unit(m, &[]) },
            StateLabel { name: "E2,1,0".into(), shift_cells: -sb, occupation: unit(m, &[0]) },
        ];
        Self::new(labels, grid, modes.modes[1].total_recoil)
    }

    pub fn get(&self, name: &str) -> Result<&StateLabel> {
        self.labels
            .iter()
            .find(|l| l.name == name)
            .ok_or_else(|| Error::Label(format!("unknown label {name}")))
    }

    /// Grid indices inside the window of `label`.
    pub fn window(&self, grid: &MomentumGrid, label: &StateLabel) -> Vec<usize> {
        let center = grid.center as isize + label.shift_cells;
        (0..grid.len)
            .filter(|&i| {
                let d = (i as isize - center) as f64 * grid.spacing;
                d >= -self.half_width && d < self.half_width
            })
            .collect()
    }

    fn check(&self, grid: &MomentumGrid) -> Result<()> {
        for (a, la) in self.labels.iter().enumerate() {
            if self.window(grid, la).is_empty() {
                return Err(Error::Label(format!("window of {} lies off the grid", la.name)));
            }
            for lb in &self.labels[a + 1..] {
                if la.name == lb.name {
                    return Err(Error::Label(format!("duplicate label {}", la.name)));
                }
                if la.occupation != lb.occupation {
                    continue;
                }
                let wb = self.window(grid, lb);
                if self.window(grid, la).iter().any(|i| wb.contains(i)) {
                    return Err(Error::Label(format!("windows of {} and {} overlap", la.name, lb.name)));
                }
            }
        }
        Ok(())
    }
}

/// Probability in each labeled window, followed by the remainder under
/// "other".
pub fn labeled_probabilities(psi: &JointState, map: &LabelMap) -> Result<Vec<LabeledStateProbability>> {
    let basis = psi.basis;
    map.check(&basis.grid)?;
    let mut out = Vec::with_capacity(map.labels.len() + 1);
    let mut total = 0.0;
    for label in &map.labels {
        if label.occupation.len() != basis.fock.modes {
            return Err(Error::Label(format!("label {} has the wrong number of modes", label.name)));
        }
        let f = basis.fock.index(&label.occupation)?;
        let p: f64 = map
            .window(&basis.grid, label)
            .into_iter()
            .map(|i| psi.amplitudes[basis.flatten(i, f)].norm_sqr())
            .sum();
        total += p;
        out.push(LabeledStateProbability { label: label.name.clone(), probability: p });
    }
    let other = (psi.norm_sqr() - total).max(0.0);
    out.push(LabeledStateProbability { label: "other".into(), probability: other });
    Ok(out)
}

/// |⟨ψ|φ⟩|² for pure states on the same basis.
pub fn fidelity(psi: &JointState, phi: &JointState) -> Result<f64> {
    Ok(psi.inner(phi)?.norm_sqr())
}

/// Embed a few-level state: each label's amplitude multiplies `reference`
/// (a wavepacket centered at k0) rigidly shifted onto the label's window.
pub fn embed(few: &FewLevelState, map: &LabelMap, basis: Basis, reference: &[C64]) -> Result<JointState> {
    let grid = basis.grid;
    if reference.len() != grid.len {
        return Err(Error::BasisMismatch);
    }
    let mut state = JointState::zeros(basis);
    for (name, &amp) in few.labels.iter().zip(&few.amplitudes) {
        let label = map.get(name)?;
        let f = basis.fock.index(&label.occupation)?;
        for (i, &w) in reference.iter().enumerate() {
            if w == C64::new(0.0, 0.0) {
                continue;
            }
            let j = grid
                .shifted(i, label.shift_cells)
                .ok_or_else(|| Error::Label(format!("shifted wavepacket for {name} leaves the grid")))?;
            state.amplitudes[basis.flatten(j, f)] += amp * w;
        }
    }
    Ok(state)
}

pub fn fidelity_to_few(psi: &JointState, few: &FewLevelState, map: &LabelMap, reference: &[C64]) -> Result<f64> {
    fidelity(psi, &embed(few, map, psi.basis, reference)?)
}

/// Marginal photon-number distribution of one mode, n = 0..=cutoff.
pub fn photon_number_distribution(psi: &JointState, mode: usize) -> Result<Vec<f64>> {
    let fock = psi.basis.fock;
    if mode >= fock.modes {
        return Err(Error::InvalidParameter(format!("mode {mode} out of range")));
    }
    let mut p = vec![0.0; fock.cutoff + 1];
    for (idx, a) in psi.amplitudes.iter().enumerate() {
        let (_, f) = psi.basis.unflatten(idx);
        p[fock.mode_occupation(f, mode)] += a.norm_sqr();
    }
    Ok(p)
}

/// Poisson distribution of the given mean truncated at `cutoff` and
/// renormalized.
pub fn poissonian_reference(mean: f64, cutoff: usize) -> Result<Vec<f64>> {
    if !(mean >= 0.0) || !mean.is_finite() {
        return Err(Error::InvalidParameter(format!("mean {mean} must be non-negative")));
    }
    let mut p = Vec::with_capacity(cutoff + 1);
    let mut term = (-mean).exp();
    for n in 0..=cutoff {
        if n > 0 {
            term *= mean / n as f64;
        }
        p.push(term);
    }
    let s: f64 = p.iter().sum();
    Ok(p.into_iter().map(|x| x / s).collect())
}

/// ½ Σ |p − q| over the common support.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    0.5 * (0..n).map(|i| (at(p, i) - at(q, i)).abs()).sum::<f64>()
}
