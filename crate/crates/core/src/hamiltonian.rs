//! Interaction-picture Hamiltonian of the electron-cavity system.
//!
//! The generator A(t) = −(i/ħ)H(t) acts on amplitudes as
//!
//! ψ̇_{k,n⃗} = Σ_j Σ_q [ G_{q,j} e^{iΔ t} √(n_j+1) ψ_{k−q, n⃗+e_j}
//!                    − G*_{q,j} e^{−iΔ' t} √n_j ψ_{k+q, n⃗−e_j} ]
//!
//! with Δ = (E_k − E_{k−q})/ħ − ω_j. Every emission link (upper state
//! `|k, n⃗⟩`, lower state `|k−q, n⃗+e_j⟩`) contributes one entry and its
//! negated conjugate, so the generator is anti-Hermitian by construction.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::analytic::FewLevelState;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{
    Basis, CavityMode, CavityModeSet, Dispersion, FockSpace, JointState, ModeRole, MomentumGrid, PhysicalSetup,
    CONSTANTS,
};
use crate::phasematch::{self, sinc};
use crate::C64;

/// Largest basis materialized as a dense matrix.
pub const MAX_DENSE_DIM: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableOptions {
    pub dispersion: Dispersion,
    /// Transfers with |sinc| below this are dropped.
    pub sinc_prune: f64,
    /// Off-resonant transfers whose coupling-to-detuning ratio |G|/Δ is
    /// below this are dropped. Zero keeps every transfer passing the sinc
    /// test.
    pub adiabatic_prune: f64,
}

impl Default for TableOptions {
    fn default() -> Self {
        TableOptions { dispersion: Dispersion::Parabolic, sinc_prune: 1e-4, adiabatic_prune: 1e-4 }
    }
}

/// One retained momentum transfer of a mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transfer {
    pub cells: isize,
    /// q in rad/m.
    pub momentum: f64,
    /// sinc weight relative to the phase-matched transfer.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeChannel {
    pub mode: CavityMode,
    /// Recoil snapped to the grid, in cells.
    pub recoil_cells: isize,
    /// Coupling at the phase-matched transfer, 1/s.
    pub amplitude: C64,
    pub transfers: Vec<Transfer>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTable {
    pub basis: Basis,
    pub channels: Vec<ModeChannel>,
    pub dispersion: Dispersion,
    /// Resonant two-level coupling g = g_Q/T, 1/s.
    pub resonant_coupling: f64,
    pub transit_time: f64,
    pub cavity_length: f64,
}

/// Coupling table with default pruning and parabolic dispersion.
pub fn build_coupling_table(
    setup: &PhysicalSetup,
    modes: &CavityModeSet,
    grid: &MomentumGrid,
    fock: &FockSpace,
) -> Result<CouplingTable> {
    build_coupling_table_with(setup, modes, grid, fock, &TableOptions::default())
}

/// Tabulate G_{q,j} on the grid. Signal modes carry g·(coupling scale) with
/// g·T = g_Q; each of the L loss modes carries g_loss with
/// g_loss·T = arcsin(√(p_loss/L)). Each mode's recoil is snapped to the
/// grid and the sinc kernel is evaluated relative to the snapped value.
pub fn build_coupling_table_with(
    setup: &PhysicalSetup,
    modes: &CavityModeSet,
    grid: &MomentumGrid,
    fock: &FockSpace,
    opts: &TableOptions,
) -> Result<CouplingTable> {
    if fock.modes != modes.len() {
        return Err(Error::InvalidParameter(format!(
            "Fock space has {} modes, mode set has {}",
            fock.modes,
            modes.len()
        )));
    }
    let transit_time = setup.transit_time()?;
    let g = setup.coupling_gq / transit_time;
    let losses = modes.loss_count();
    let g_loss = if losses > 0 {
        (setup.loss_probability / losses as f64).sqrt().asin() / transit_time
    } else {
        0.0
    };
    let velocity = CONSTANTS.hbar_over_mass() * grid.k0;
    let length = setup.cavity_length_m;
    let span = grid.len as isize - 1;

    let mut channels = Vec::with_capacity(modes.len());
    for (j, mode) in modes.modes.iter().enumerate() {
        let (recoil_cells, offset) = grid.cells(mode.total_recoil);
        if offset >= 0.5 - 1e-12 || recoil_cells <= 0 || recoil_cells > span {
            return Err(Error::IncommensurateGrid { mode: j, offset_cells: offset });
        }
        let amplitude = match mode.role {
            ModeRole::Signal => g * mode.coupling_scale,
            ModeRole::Loss => g_loss,
        };
        let mut transfers = Vec::new();
        for cells in -span..=span {
            let off = (recoil_cells - cells) as f64 * grid.spacing;
            let weight = sinc(0.5 * off * length);
            if cells != recoil_cells {
                if weight.abs() < opts.sinc_prune {
                    continue;
                }
                let leak = (amplitude * weight).abs() / (velocity * off.abs());
                if opts.adiabatic_prune > 0.0 && leak < opts.adiabatic_prune {
                    continue;
                }
            }
            transfers.push(Transfer { cells, momentum: cells as f64 * grid.spacing, weight });
        }
        channels.push(ModeChannel { mode: *mode, recoil_cells, amplitude: C64::new(amplitude, 0.0), transfers });
    }
    Ok(CouplingTable {
        basis: Basis { grid: *grid, fock: *fock },
        channels,
        dispersion: opts.dispersion,
        resonant_coupling: g,
        transit_time,
        cavity_length: length,
    })
}

impl CouplingTable {
    /// G_{q,j} for an arbitrary transfer q, evaluated from the kernel whether
    /// or not the transfer was retained.
    pub fn coupling(&self, mode: usize, q: f64) -> C64 {
        let ch = &self.channels[mode];
        let snapped = CavityMode { total_recoil: ch.recoil_cells as f64 * self.basis.grid.spacing, ..ch.mode };
        ch.amplitude * phasematch::coupling_kernel(q, &snapped, self.cavity_length)
    }

    /// Detuning (E_k − E_{k−q})/ħ − ω_j for an electron at grid index `i`.
    pub fn detuning(&self, i: usize, mode: usize, transfer: &Transfer) -> f64 {
        let grid = &self.basis.grid;
        let ch = &self.channels[mode];
        self.dispersion.transition_frequency(grid.value(i), transfer.momentum, grid.k0) - ch.mode.frequency
    }

    pub fn transfer_count(&self) -> usize {
        self.channels.iter().map(|c| c.transfers.len()).sum()
    }
}

#[derive(Debug, Clone, Copy)]
struct Link {
    upper: usize,
    lower: usize,
    coupling: C64,
    freq: usize,
}

/// Sparse generator restricted to a set of basis states closed under the
/// couplings. Amplitudes outside the set stay exactly zero.
#[derive(Debug, Clone)]
pub struct Generator {
    basis: Basis,
    indices: Arc<Vec<usize>>,
    links: Vec<Link>,
    frequencies: Vec<f64>,
}

impl Generator {
    /// Generator over the full truncated basis.
    pub fn full(table: &CouplingTable) -> Self {
        let indices: Vec<usize> = (0..table.basis.dim()).collect();
        Self::over(table, indices)
    }

    /// Generator over the states reachable from the support of `state`.
    pub fn reachable(table: &CouplingTable, state: &JointState) -> Result<Self> {
        if state.basis != table.basis {
            return Err(Error::BasisMismatch);
        }
        let basis = table.basis;
        let fock = basis.fock;
        let mut seen = vec![false; basis.dim()];
        let mut stack = state.support();
        for &s in &stack {
            seen[s] = true;
        }
        while let Some(s) = stack.pop() {
            let (i, f) = basis.unflatten(s);
            for (j, ch) in table.channels.iter().enumerate() {
                if ch.amplitude == C64::new(0.0, 0.0) {
                    continue;
                }
                let n = fock.mode_occupation(f, j);
                let stride = fock.stride(j);
                for t in &ch.transfers {
                    if t.weight == 0.0 {
                        continue;
                    }
                    if n < fock.cutoff {
                        if let Some(lo) = basis.grid.shifted(i, -t.cells) {
                            let idx = basis.flatten(lo, f + stride);
                            if !seen[idx] {
                                seen[idx] = true;
                                stack.push(idx);
                            }
                        }
                    }
                    if n > 0 {
                        if let Some(up) = basis.grid.shifted(i, t.cells) {
                            let idx = basis.flatten(up, f - stride);
                            if !seen[idx] {
                                seen[idx] = true;
                                stack.push(idx);
                            }
                        }
                    }
                }
            }
        }
        let indices = seen.iter().enumerate().filter(|(_, &s)| s).map(|(i, _)| i).collect();
        Ok(Self::over(table, indices))
    }

    fn over(table: &CouplingTable, indices: Vec<usize>) -> Self {
        let basis = table.basis;
        let fock = basis.fock;
        let local: HashMap<usize, usize> = indices.iter().enumerate().map(|(l, &g)| (g, l)).collect();
        let mut freq_ids: HashMap<(usize, usize, usize), usize> = HashMap::new();
        let mut frequencies = Vec::new();
        let mut links = Vec::new();
        for (u_local, &u) in indices.iter().enumerate() {
            let (i, f) = basis.unflatten(u);
            for (j, ch) in table.channels.iter().enumerate() {
                let n = fock.mode_occupation(f, j);
                if n >= fock.cutoff || ch.amplitude == C64::new(0.0, 0.0) {
                    continue;
                }
                let root = ((n + 1) as f64).sqrt();
                for (ti, t) in ch.transfers.iter().enumerate() {
                    if t.weight == 0.0 {
                        continue;
                    }
                    let Some(lo) = basis.grid.shifted(i, -t.cells) else { continue };
                    let Some(&l_local) = local.get(&basis.flatten(lo, f + fock.stride(j))) else { continue };
                    let freq = *freq_ids.entry((j, ti, i)).or_insert_with(|| {
                        frequencies.push(table.detuning(i, j, t));
                        frequencies.len() - 1
                    });
                    links.push(Link { upper: u_local, lower: l_local, coupling: ch.amplitude * t.weight * root, freq });
                }
            }
        }
        Generator { basis, indices: Arc::new(indices), links, frequencies }
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    /// Number of active basis states.
    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    /// Full-basis indices of the active states, ascending.
    pub fn indices(&self) -> &Arc<Vec<usize>> {
        &self.indices
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    /// Active-subspace amplitudes of a full state. Fails if the state has
    /// weight outside the active set.
    pub fn gather(&self, state: &JointState) -> Result<Vec<C64>> {
        if state.basis != self.basis {
            return Err(Error::BasisMismatch);
        }
        let local: Vec<C64> = self.indices.iter().map(|&i| state.amplitudes[i]).collect();
        let inside: f64 = local.iter().map(|a| a.norm_sqr()).sum();
        if (state.norm_sqr() - inside).abs() > 0.0 {
            return Err(Error::InvalidParameter("state has support outside the active subspace".into()));
        }
        Ok(local)
    }

    pub fn scatter(&self, local: &[C64]) -> JointState {
        let mut state = JointState::zeros(self.basis);
        for (&i, &a) in self.indices.iter().zip(local) {
            state.amplitudes[i] = a;
        }
        state
    }

    /// out = scale · A(t) ψ on active-subspace vectors.
    pub fn apply_scaled(&self, t: f64, scale: f64, psi: &[C64], out: &mut [C64]) {
        let phasors: Vec<C64> = self.frequencies.iter().map(|&w| C64::from_polar(scale, w * t)).collect();
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        for l in &self.links {
            let c = l.coupling * phasors[l.freq];
            out[l.upper] += c * psi[l.lower];
            out[l.lower] -= c.conj() * psi[l.upper];
        }
    }

    /// dψ/dt on active-subspace vectors.
    pub fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        self.apply_scaled(t, 1.0, psi, out)
    }

    /// Dense generator A(t) in 1/s.
    pub fn dense_generator(&self, t: f64) -> Result<DMatrix<C64>> {
        let d = self.dim();
        if d > MAX_DENSE_DIM {
            return Err(Error::DimensionGuard { dim: d, limit: MAX_DENSE_DIM });
        }
        let mut a = DMatrix::zeros(d, d);
        for l in &self.links {
            let c = l.coupling * C64::from_polar(1.0, self.frequencies[l.freq] * t);
            a[(l.upper, l.lower)] += c;
            a[(l.lower, l.upper)] -= c.conj();
        }
        Ok(a)
    }
}

/// dψ/dt over the full truncated basis.
pub fn rhs(t: f64, psi: &JointState, table: &CouplingTable) -> Result<Vec<C64>> {
    if psi.basis != table.basis {
        return Err(Error::BasisMismatch);
    }
    let gen = Generator::full(table);
    let mut out = vec![C64::new(0.0, 0.0); psi.amplitudes.len()];
    gen.apply(t, &psi.amplitudes, &mut out);
    Ok(out)
}

/// H(t) in joules on the generator's active subspace, with
/// dψ/dt = −(i/ħ) H ψ.
pub fn build_dense_hamiltonian(t: f64, gen: &Generator) -> Result<DMatrix<C64>> {
    let a = gen.dense_generator(t)?;
    Ok(a * C64::new(0.0, CONSTANTS.hbar))
}

/// Few-level reduction kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    TwoLevel,
    Ladder,
    Lambda,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub label: String,
    pub energy_ev: f64,
}

/// Rotating-wave few-level model: electron levels, transition couplings and
/// the generator on the manifold reached from the natural initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveModel {
    pub kind: Option<Reduction>,
    pub levels: Vec<Level>,
    /// Coupling of each transition, 1/s.
    pub couplings: Vec<C64>,
    /// Joint electron-photon labels spanning the manifold.
    pub labels: Vec<String>,
    /// Anti-Hermitian generator on `labels`, 1/s.
    pub generator: DMatrix<C64>,
    /// δ·T of the neglected transitions.
    pub criterion: f64,
}

/// Reduce the multimode problem to a two- or three-level model. Refuses when
/// the neglected transitions are not detuned enough, unless `allow_invalid`.
///
/// Criterion: for the two-level model δ_min·T from
/// [`phasematch::detuning_table`]; for the isolated three-level pairs every
/// neglected transition sits one recoil detuning (ħ/m)(2π/Λ)² off, so the
/// criterion is that detuning times T. Both must reach
/// [`phasematch::DEFAULT_CRITERION_THRESHOLD`].
pub fn rwa_reduce(
    setup: &PhysicalSetup,
    modes: &CavityModeSet,
    kind: Reduction,
    allow_invalid: bool,
) -> Result<EffectiveModel> {
    let t = setup.transit_time()?;
    let g = setup.coupling_gq / t;
    let ev = |w: f64| CONSTANTS.frequency_to_ev(w);
    let e = setup.kinetic_energy_ev;
    let criterion = match kind {
        Reduction::TwoLevel => phasematch::detuning_table(setup, modes)?.criterion,
        Reduction::Ladder | Reduction::Lambda => {
            phasematch::recoil_detuning(2.0 * std::f64::consts::PI / setup.grating_period_m) * t
        }
    };
    let threshold = phasematch::DEFAULT_CRITERION_THRESHOLD;
    if criterion < threshold && !allow_invalid {
        return Err(Error::CriterionFailed { value: criterion, threshold });
    }
    let signal: Vec<&CavityMode> = modes.modes.iter().filter(|m| m.role == ModeRole::Signal).collect();
    let coupling = |m: &CavityMode| C64::new(g * m.coupling_scale, 0.0);
    let level = |label: &str, energy_ev: f64| Level { label: label.into(), energy_ev };
    let (levels, couplings, labels, gen) = match kind {
        Reduction::TwoLevel => {
            let m = modes.target_mode();
            let g0 = coupling(m);
            (
                vec![level("E1", e), level("E0", e - ev(m.frequency))],
                vec![g0],
                vec!["E1,0", "E0,1"],
                vec![(0, 1, g0)],
            )
        }
        Reduction::Ladder => {
            if signal.len() < 2 {
                return Err(Error::InvalidParameter("ladder needs two signal modes".into()));
            }
            let (first, second) = (signal[0], signal[1]);
            let e1 = e - ev(first.frequency);
            let (g0, g1) = (coupling(first), coupling(second));
            (
                vec![level("E2", e), level("E1", e1), level("E0", e1 - ev(second.frequency))],
                vec![g0, g1],
                vec!["E2,0,0", "E1,1,0", "E0,1,1"],
                vec![(0, 1, g0), (1, 2, g1)],
            )
        }
        Reduction::Lambda => {
            if signal.len() < 2 {
                return Err(Error::InvalidParameter("lambda needs two signal modes".into()));
            }
            let (to_e2, to_e0) = (signal[0], signal[1]);
            let (ga, gb) = (coupling(to_e0), coupling(to_e2));
            (
                vec![level("E1", e), level("E0", e - ev(to_e0.frequency)), level("E2", e - ev(to_e2.frequency))],
                vec![ga, gb],
                vec!["E0,0,1", "E1,0,0", "E2,1,0"],
                vec![(1, 0, ga), (1, 2, gb)],
            )
        }
    };
    let mut generator = DMatrix::zeros(labels.len(), labels.len());
    for (upper, lower, c) in gen {
        generator[(upper, lower)] += c;
        generator[(lower, upper)] -= c.conj();
    }
    Ok(EffectiveModel {
        kind: Some(kind),
        levels,
        couplings,
        labels: labels.into_iter().map(String::from).collect(),
        generator,
        criterion,
    })
}

impl EffectiveModel {
    /// Single-excitation Tavis-Cummings block for N electrons on
    /// {|1⟩_S|0⟩, |0⟩_S|1⟩}: the collective coupling is √N·g.
    pub fn tavis_cummings(electrons: u32, g: C64) -> Result<Self> {
        if electrons == 0 {
            return Err(Error::InvalidParameter("need at least one electron".into()));
        }
        let gn = g * (electrons as f64).sqrt();
        let mut generator = DMatrix::zeros(2, 2);
        generator[(0, 1)] = gn;
        generator[(1, 0)] = -gn.conj();
        Ok(EffectiveModel {
            kind: None,
            levels: Vec::new(),
            couplings: vec![gn],
            labels: vec!["1S,0".into(), "0S,1".into()],
            generator,
            criterion: f64::INFINITY,
        })
    }

    /// H = iħA in joules.
    pub fn hamiltonian(&self) -> DMatrix<C64> {
        &self.generator * C64::new(0.0, CONSTANTS.hbar)
    }

    /// Evolve `initial` (amplitudes on `labels`) for time `t` by exact
    /// exponentiation.
    pub fn evolve(&self, t: f64, initial: &[C64]) -> Result<FewLevelState> {
        if initial.len() != self.labels.len() {
            return Err(Error::InvalidParameter("initial amplitudes do not match the manifold".into()));
        }
        let k = &self.generator * C64::new(0.0, 1.0);
        let u = linalg::unitary_from_hermitian(&k, t);
        let psi = u * nalgebra::DVector::from_column_slice(initial);
        Ok(FewLevelState { labels: self.labels.clone(), amplitudes: psi.iter().copied().collect() })
    }
}

/// Hamiltonian of the n-excitation JC block on {|E, n−1⟩, |E−ħω, n⟩}, joules.
pub fn jc_block_hamiltonian(g: C64, n: u32) -> DMatrix<C64> {
    let c = g * (n as f64).sqrt();
    let i_hbar = C64::new(0.0, CONSTANTS.hbar);
    DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), i_hbar * c, -i_hbar * c.conj(), C64::new(0.0, 0.0)])
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    linalg::hermitian_eigenvalues(m)
}
