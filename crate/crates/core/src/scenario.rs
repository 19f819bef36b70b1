//! Assembled experiments: single-photon emission, detuning sweeps, photon
//! pairs, the electron-photon SWAP, collective emission and phase-matching
//! reports.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analytic::{self, FewLevelState, LambdaInitial};
use crate::dynamics::{self, Diagnostics, IntegratorOptions, Trajectory};
use crate::error::{Error, Result};
use crate::hamiltonian::{self, CouplingTable, EffectiveModel, Reduction, TableOptions};
use crate::metrics::{self, LabelMap};
use crate::model::{
    self, build_momentum_grid, CavityModeSet, Design, Dispersion, FockSpace, JointState, LabeledStateProbability,
    MomentumGrid, PhysicalSetup, CONSTANTS,
};
use crate::phasematch::{self, DetuningReport};
use crate::C64;

/// Truncation and solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Numerics {
    pub points_per_recoil: usize,
    pub photon_cutoff: usize,
    pub signal_modes: usize,
    pub loss_modes: usize,
    pub tolerance: f64,
    pub samples: usize,
    pub sinc_prune: f64,
    pub adiabatic_prune: f64,
    pub dispersion: Dispersion,
    /// When set, the FSR is replaced by (ħ/m)(2π/Λ)² / fraction.
    pub detuning_fraction: Option<f64>,
    /// Extra recoil of the E1↔E2 mode in the lambda layout, rad/m. Defaults
    /// to 2·n·ω0/c.
    pub lambda_recoil_split: Option<f64>,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            points_per_recoil: 8,
            photon_cutoff: 3,
            signal_modes: 3,
            loss_modes: 1,
            tolerance: 1e-10,
            samples: 200,
            sinc_prune: 1e-4,
            adiabatic_prune: 1e-4,
            dispersion: Dispersion::Parabolic,
            detuning_fraction: None,
            lambda_recoil_split: None,
        }
    }
}

impl Numerics {
    /// Defaults for the lambda layout, whose recoil split needs a finer grid.
    pub fn lambda_defaults() -> Self {
        Numerics { points_per_recoil: 32, ..Numerics::default() }
    }

    pub fn integrator(&self) -> IntegratorOptions {
        IntegratorOptions { tol: self.tolerance, samples: self.samples, ..IntegratorOptions::default() }
    }

    pub fn table_options(&self) -> TableOptions {
        TableOptions { dispersion: self.dispersion, sinc_prune: self.sinc_prune, adiabatic_prune: self.adiabatic_prune }
    }
}

/// FSR that puts the recoil detuning (ħ/m)(2π/Λ)² at `fraction` of it.
pub fn free_spectral_range_for_fraction(setup: &PhysicalSetup, fraction: f64) -> Result<f64> {
    if !(fraction > 0.0) {
        return Err(Error::InvalidParameter(format!("detuning fraction {fraction} must be positive")));
    }
    Ok(phasematch::recoil_detuning(2.0 * PI / setup.grating_period_m) / fraction)
}

/// Electron energy at which the recoil detuning is `fraction` of the FSR,
/// with the grating re-derived for each energy. Solved by bisection in
/// log-energy.
pub fn energy_for_fraction(setup: &PhysicalSetup, fraction: f64) -> Result<f64> {
    if !(fraction > 0.0) {
        return Err(Error::InvalidParameter(format!("detuning fraction {fraction} must be positive")));
    }
    let ratio = |e: f64| -> Result<f64> {
        let g = phasematch::solve_grating_period(e, setup.design_wavelength_m, setup.refractive_index)?;
        let k = 2.0 * PI / g.period;
        Ok(phasematch::recoil_detuning(k) / setup.free_spectral_range_rad_s)
    };
    let e_max = 0.5 * (0.099f64).powi(2) * CONSTANTS.electron_rest_energy;
    let (mut lo, mut hi) = (setup.kinetic_energy_ev, setup.kinetic_energy_ev);
    while ratio(lo)? < fraction {
        lo *= 0.5;
    }
    while ratio(hi)? > fraction {
        hi *= 2.0;
        if hi > e_max {
            hi = e_max;
            if ratio(hi)? > fraction {
                return Err(Error::InvalidParameter(format!(
                    "detuning fraction {fraction} needs a relativistic electron"
                )));
            }
        }
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if ratio(mid)? > fraction {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-15 {
            break;
        }
    }
    Ok((lo * hi).sqrt())
}

/// A fully resolved simulation: modes, grid, couplings and labels.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub setup: PhysicalSetup,
    pub design: Design,
    pub kind: Reduction,
    pub numerics: Numerics,
    pub modes: CavityModeSet,
    pub grid: MomentumGrid,
    pub fock: FockSpace,
    pub table: CouplingTable,
    pub labels: LabelMap,
    /// Electron wavepacket at k0, the template every label is embedded with.
    pub reference: Vec<C64>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub final_state: JointState,
    pub probabilities: Vec<LabeledStateProbability>,
    /// Fidelity of the final state with the closed-form prediction.
    pub fidelity: f64,
    pub diagnostics: Diagnostics,
}

impl RunOutcome {
    pub fn probability(&self, label: &str) -> f64 {
        self.probabilities.iter().find(|p| p.label == label).map_or(0.0, |p| p.probability)
    }
}

impl Experiment {
    pub fn new(setup: &PhysicalSetup, kind: Reduction, numerics: &Numerics) -> Result<Self> {
        let mut setup = *setup;
        setup.validate()?;
        if let Some(f) = numerics.detuning_fraction {
            setup.free_spectral_range_rad_s = free_spectral_range_for_fraction(&setup, f)?;
        }
        let design = setup.design()?;
        let dispersion = numerics.dispersion;
        let modes = match kind {
            Reduction::TwoLevel => {
                CavityModeSet::fabry_perot(&setup, &design, numerics.signal_modes, numerics.loss_modes, dispersion)?
            }
            Reduction::Ladder => CavityModeSet::ladder(&setup, &design, numerics.loss_modes, dispersion)?,
            Reduction::Lambda => {
                let split = numerics
                    .lambda_recoil_split
                    .unwrap_or(2.0 * design.grating.mode_wavenumber);
                CavityModeSet::lambda(&design, split, numerics.points_per_recoil, numerics.loss_modes, dispersion)?
            }
        };
        let grid = build_momentum_grid(&setup, &modes, numerics.points_per_recoil)?;
        let fock = FockSpace::new(modes.len(), numerics.photon_cutoff)?;
        let table = hamiltonian::build_coupling_table_with(&setup, &modes, &grid, &fock, &numerics.table_options())?;
        let labels = match kind {
            Reduction::TwoLevel => LabelMap::two_level(&grid, &modes)?,
            Reduction::Ladder => LabelMap::ladder(&grid, &modes)?,
            Reduction::Lambda => LabelMap::lambda(&grid, &modes)?,
        };
        let reference = model::wavepacket(&grid, setup.energy_uncertainty_ev, 0)?;
        Ok(Experiment { setup, design, kind, numerics: *numerics, modes, grid, fock, table, labels, reference })
    }

    /// Label the closed-form evolution starts from.
    pub fn initial_label(&self) -> &'static str {
        match self.kind {
            Reduction::TwoLevel => "E1,0",
            Reduction::Ladder => "E2,0,0",
            Reduction::Lambda => "E0,0,1",
        }
    }

    /// Wavepacket placed on a label's momentum window and occupation.
    pub fn state_for(&self, label: &str) -> Result<JointState> {
        let l = self.labels.get(label)?;
        model::initial_state_at(&self.grid, &self.fock, self.setup.energy_uncertainty_ev, &l.occupation, l.shift_cells)
    }

    pub fn initial_state(&self) -> Result<JointState> {
        self.state_for(self.initial_label())
    }

    pub fn transit_time(&self) -> f64 {
        self.design.transit_time
    }

    /// Closed-form state at time `t` for the resonant coupling g = g_Q/T.
    pub fn analytic(&self, t: f64) -> FewLevelState {
        let g = self.table.resonant_coupling;
        match self.kind {
            Reduction::TwoLevel => analytic::jc_two_level(C64::new(g, 0.0), t),
            Reduction::Ladder => analytic::ladder_three_level(g, t),
            Reduction::Lambda => analytic::lambda_three_level(g, t, LambdaInitial::E0_0_1),
        }
    }

    pub fn fidelity_to(&self, psi: &JointState, few: &FewLevelState) -> Result<f64> {
        metrics::fidelity_to_few(psi, few, &self.labels, &self.reference)
    }

    /// ⟨label|ψ⟩ with the label embedded as the reference wavepacket.
    pub fn projection(&self, psi: &JointState, label: &str) -> Result<C64> {
        let few = FewLevelState::new(&[label], vec![C64::new(1.0, 0.0)]);
        let phi = metrics::embed(&few, &self.labels, psi.basis, &self.reference)?;
        phi.inner(psi)
    }

    pub fn detuning_report(&self) -> Result<DetuningReport> {
        phasematch::detuning_table(&self.setup, &self.modes)
    }

    /// Refuse when the few-level reduction behind the comparison is invalid.
    pub fn check_criterion(&self) -> Result<EffectiveModel> {
        hamiltonian::rwa_reduce(&self.setup, &self.modes, self.kind, false)
    }

    pub fn run(&self) -> Result<RunOutcome> {
        let psi0 = self.initial_state()?;
        let t = self.transit_time();
        let trajectory = dynamics::integrate(&psi0, &self.table, t, &self.numerics.integrator())?;
        let final_state = trajectory.final_state();
        let probabilities = metrics::labeled_probabilities(&final_state, &self.labels)?;
        let fidelity = self.fidelity_to(&final_state, &self.analytic(t))?;
        let diagnostics = trajectory.diagnostics;
        Ok(RunOutcome { trajectory, final_state, probabilities, fidelity, diagnostics })
    }

    /// Same experiment with a different g_Q.
    pub fn with_coupling(&self, gq: f64) -> Result<Self> {
        let setup = PhysicalSetup { coupling_gq: gq, ..self.setup };
        let numerics = Numerics { detuning_fraction: None, ..self.numerics };
        Experiment::new(&setup, self.kind, &numerics)
    }
}

/// Evenly spaced values including both ends.
pub fn linspace(start: f64, end: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..points).map(|i| start + (end - start) * i as f64 / (points - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    SinglePhoton,
    DetuningSweep,
    PhotonPair,
    Swap,
    SymmetricN,
    PhaseMatchReport,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::SinglePhoton => "single_photon",
            ScenarioKind::DetuningSweep => "detuning_sweep",
            ScenarioKind::PhotonPair => "photon_pair",
            ScenarioKind::Swap => "swap",
            ScenarioKind::SymmetricN => "symmetric_n",
            ScenarioKind::PhaseMatchReport => "phase_match_report",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub gq_min: f64,
    pub gq_max: f64,
    pub gq_points: usize,
    pub fraction_min: f64,
    pub fraction_max: f64,
    pub fraction_points: usize,
    pub electrons: Vec<u32>,
}

impl SweepSpec {
    pub fn defaults_for(kind: ScenarioKind) -> Self {
        let gq_max = match kind {
            ScenarioKind::PhotonPair | ScenarioKind::Swap => PI * 2f64.sqrt(),
            _ => PI,
        };
        SweepSpec {
            gq_min: 0.0,
            gq_max,
            gq_points: 33,
            fraction_min: 0.05,
            fraction_max: 0.5,
            fraction_points: 12,
            electrons: vec![1, 2, 4, 9],
        }
    }
}

/// Everything needed to run one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub setup: PhysicalSetup,
    pub numerics: Numerics,
    pub sweep: SweepSpec,
    pub override_criterion: bool,
}

/// Rows of one output file, columns in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub kind: ScenarioKind,
    pub tables: Vec<Table>,
    /// Flat map of resolved parameters, derived quantities and diagnostics.
    pub manifest: BTreeMap<String, Value>,
}

impl ScenarioResult {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct DiagnosticsSummary {
    runs: usize,
    max_norm_drift: f64,
    accepted_steps: usize,
    rejected_steps: usize,
    max_active_dim: usize,
}

impl DiagnosticsSummary {
    fn add(&mut self, d: &Diagnostics) {
        self.runs += 1;
        self.max_norm_drift = self.max_norm_drift.max(d.max_norm_drift);
        self.accepted_steps += d.accepted_steps;
        self.rejected_steps += d.rejected_steps;
        self.max_active_dim = self.max_active_dim.max(d.active_dim);
    }

    fn write(&self, m: &mut BTreeMap<String, Value>) {
        m.insert("integrator_runs".into(), json!(self.runs));
        m.insert("integrator_max_norm_drift".into(), json!(self.max_norm_drift));
        m.insert("integrator_accepted_steps".into(), json!(self.accepted_steps));
        m.insert("integrator_rejected_steps".into(), json!(self.rejected_steps));
        m.insert("integrator_max_active_dim".into(), json!(self.max_active_dim));
    }
}

fn base_manifest(cfg: &ScenarioConfig) -> BTreeMap<String, Value> {
    let mut m = BTreeMap::new();
    let s = &cfg.setup;
    let n = &cfg.numerics;
    m.insert("scenario".into(), json!(cfg.kind.name()));
    m.insert("kinetic_energy_ev".into(), json!(s.kinetic_energy_ev));
    m.insert("energy_uncertainty_ev".into(), json!(s.energy_uncertainty_ev));
    m.insert("cavity_length_m".into(), json!(s.cavity_length_m));
    m.insert("design_wavelength_m".into(), json!(s.design_wavelength_m));
    m.insert("refractive_index".into(), json!(s.refractive_index));
    m.insert("grating_period_m".into(), json!(s.grating_period_m));
    m.insert("free_spectral_range_rad_s".into(), json!(s.free_spectral_range_rad_s));
    m.insert("free_spectral_range_thz".into(), json!(s.free_spectral_range_rad_s / (2.0 * PI * 1e12)));
    m.insert("coupling_gq".into(), json!(s.coupling_gq));
    m.insert("loss_probability".into(), json!(s.loss_probability));
    m.insert("points_per_recoil".into(), json!(n.points_per_recoil));
    m.insert("photon_cutoff".into(), json!(n.photon_cutoff));
    m.insert("signal_modes".into(), json!(n.signal_modes));
    m.insert("loss_modes".into(), json!(n.loss_modes));
    m.insert("tolerance".into(), json!(n.tolerance));
    m.insert("samples".into(), json!(n.samples));
    m.insert("sinc_prune".into(), json!(n.sinc_prune));
    m.insert("adiabatic_prune".into(), json!(n.adiabatic_prune));
    m.insert(
        "dispersion".into(),
        json!(match n.dispersion {
            Dispersion::Parabolic => "parabolic",
            Dispersion::Linear => "linear",
        }),
    );
    m.insert("detuning_fraction".into(), json!(n.detuning_fraction));
    m.insert("lambda_recoil_split_rad_per_m".into(), json!(n.lambda_recoil_split));
    m.insert("sweep_gq_min".into(), json!(cfg.sweep.gq_min));
    m.insert("sweep_gq_max".into(), json!(cfg.sweep.gq_max));
    m.insert("sweep_gq_points".into(), json!(cfg.sweep.gq_points));
    m.insert("sweep_fraction_min".into(), json!(cfg.sweep.fraction_min));
    m.insert("sweep_fraction_max".into(), json!(cfg.sweep.fraction_max));
    m.insert("sweep_fraction_points".into(), json!(cfg.sweep.fraction_points));
    m.insert(
        "sweep_electrons".into(),
        json!(cfg.sweep.electrons.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" ")),
    );
    m.insert("override_criterion".into(), json!(cfg.override_criterion));
    m
}

fn derived_manifest(m: &mut BTreeMap<String, Value>, setup: &PhysicalSetup, modes: &CavityModeSet) -> Result<()> {
    let d = setup.design()?;
    let r = phasematch::detuning_table(setup, modes)?;
    m.insert("derived_beta".into(), json!(d.kinematics.beta));
    m.insert("derived_velocity_m_s".into(), json!(d.kinematics.velocity));
    m.insert("derived_k0_rad_m".into(), json!(d.kinematics.k0));
    m.insert("derived_transit_time_s".into(), json!(d.transit_time));
    m.insert("derived_grating_period_m".into(), json!(d.grating.period));
    m.insert("derived_total_recoil_rad_m".into(), json!(d.grating.total_recoil));
    m.insert("derived_mode_frequency_rad_s".into(), json!(d.grating.frequency));
    m.insert("derived_free_spectral_range_rad_s".into(), json!(setup.free_spectral_range_rad_s));
    m.insert("derived_recoil_detuning_rad_s".into(), json!(r.recoil_detuning));
    m.insert("derived_recoil_detuning_exact_rad_s".into(), json!(r.recoil_detuning_exact));
    m.insert("derived_detuning_fraction".into(), json!(r.recoil_detuning / r.free_spectral_range));
    m.insert("derived_delta_min_rad_s".into(), json!(r.delta_min));
    m.insert("derived_delta_min_fraction".into(), json!(r.fraction));
    m.insert("derived_delta_min_t".into(), json!(r.criterion));
    m.insert("derived_criterion_threshold".into(), json!(r.threshold));
    m.insert("derived_criterion_passes".into(), json!(r.passes));
    m.insert("derived_resonant_coupling_rad_s".into(), json!(setup.coupling_gq / d.transit_time));
    Ok(())
}

/// Sweep g_Q in parallel; results keep sweep order.
fn coupling_sweep(base: &Experiment, values: &[f64]) -> Result<Vec<RunOutcome>> {
    values
        .par_iter()
        .map(|&gq| base.with_coupling(gq)?.run())
        .collect::<Result<Vec<_>>>()
}

fn gate(exp: &Experiment, cfg: &ScenarioConfig, m: &mut BTreeMap<String, Value>) -> Result<()> {
    match hamiltonian::rwa_reduce(&exp.setup, &exp.modes, exp.kind, true) {
        Ok(reduced) => {
            let threshold = phasematch::DEFAULT_CRITERION_THRESHOLD;
            m.insert("reduction_criterion".into(), json!(reduced.criterion));
            m.insert("reduction_criterion_passes".into(), json!(reduced.criterion >= threshold));
            if reduced.criterion < threshold && !cfg.override_criterion {
                return Err(Error::CriterionFailed { value: reduced.criterion, threshold });
            }
            Ok(())
        }
        Err(e) => Err(e),
    }
}

fn sweep_table(name: &str, labels: &[&str], values: &[f64], outcomes: &[RunOutcome]) -> Table {
    let mut columns = vec!["g_Q".to_string()];
    columns.extend(labels.iter().map(|l| format!("P_{}", l.replace(',', "_"))));
    columns.push("P_other".into());
    columns.push("fidelity".into());
    let rows = values
        .iter()
        .zip(outcomes)
        .map(|(&gq, o)| {
            let mut row = vec![gq];
            row.extend(labels.iter().map(|l| o.probability(l)));
            row.push(o.probability("other"));
            row.push(o.fidelity);
            row
        })
        .collect();
    Table { name: name.into(), columns, rows }
}

fn trajectory_table(name: &str, exp: &Experiment, outcome: &RunOutcome) -> Result<Table> {
    let labels: Vec<String> = exp.labels.labels.iter().map(|l| l.name.clone()).collect();
    let mut columns = vec!["time_s".to_string()];
    columns.extend(labels.iter().map(|l| format!("P_{}", l.replace(',', "_"))));
    columns.push("P_other".into());
    columns.push("fidelity".into());
    let mut rows = Vec::with_capacity(outcome.trajectory.times.len());
    for (i, &t) in outcome.trajectory.times.iter().enumerate() {
        let psi = outcome.trajectory.state(i);
        let probs = metrics::labeled_probabilities(&psi, &exp.labels)?;
        let mut row = vec![t];
        row.extend(probs.iter().map(|p| p.probability));
        row.push(exp.fidelity_to(&psi, &exp.analytic(t))?);
        rows.push(row);
    }
    Ok(Table { name: name.into(), columns, rows })
}

fn photon_table(name: &str, exp: &Experiment, psi: &JointState) -> Result<Table> {
    let mut columns = vec!["mode".to_string(), "mode_index".to_string(), "loss".to_string()];
    columns.extend((0..=exp.fock.cutoff).map(|n| format!("p_{n}")));
    let mut rows = Vec::new();
    for (j, mode) in exp.modes.modes.iter().enumerate() {
        let mut row = vec![j as f64, mode.index as f64, (mode.role == model::ModeRole::Loss) as u8 as f64];
        row.extend(metrics::photon_number_distribution(psi, j)?);
        rows.push(row);
    }
    Ok(Table { name: name.into(), columns, rows })
}

fn run_single_photon(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    let exp = Experiment::new(&cfg.setup, Reduction::TwoLevel, &cfg.numerics)?;
    let mut m = base_manifest(cfg);
    derived_manifest(&mut m, &exp.setup, &exp.modes)?;
    gate(&exp, cfg, &mut m)?;
    let mut diag = DiagnosticsSummary::default();
    let main = exp.run()?;
    diag.add(&main.diagnostics);
    let values = linspace(cfg.sweep.gq_min, cfg.sweep.gq_max, cfg.sweep.gq_points);
    let outcomes = coupling_sweep(&exp, &values)?;
    outcomes.iter().for_each(|o| diag.add(&o.diagnostics));
    m.insert("final_fidelity".into(), json!(main.fidelity));
    m.insert("final_p_E1_0".into(), json!(main.probability("E1,0")));
    m.insert("final_p_E0_1".into(), json!(main.probability("E0,1")));
    diag.write(&mut m);
    let tables = vec![
        sweep_table("single_photon_sweep", &["E1,0", "E0,1"], &values, &outcomes),
        trajectory_table("single_photon_trajectory", &exp, &main)?,
        photon_table("single_photon_photons", &exp, &main.final_state)?,
    ];
    Ok(ScenarioResult { kind: cfg.kind, tables, manifest: m })
}

/// One point of a detuning sweep.
#[derive(Debug, Clone)]
pub struct DetuningPoint {
    pub fraction: f64,
    pub kinetic_energy_ev: f64,
    pub report: DetuningReport,
    pub outcome: RunOutcome,
}

/// Fidelity against the two-level prediction while the recoil detuning is
/// swept across the FSR. The FSR and design wavelength stay fixed; the
/// electron energy (and with it the grating) is re-derived per point.
pub fn detuning_sweep(setup: &PhysicalSetup, numerics: &Numerics, fractions: &[f64]) -> Result<Vec<DetuningPoint>> {
    let numerics = Numerics { detuning_fraction: None, ..*numerics };
    fractions
        .par_iter()
        .map(|&fraction| {
            let energy = energy_for_fraction(setup, fraction)?;
            let mut point = PhysicalSetup { kinetic_energy_ev: energy, ..*setup };
            point.grating_period_m = point.design()?.grating.period;
            let exp = Experiment::new(&point, Reduction::TwoLevel, &numerics)?;
            let report = exp.detuning_report()?;
            let outcome = exp.run()?;
            Ok(DetuningPoint { fraction, kinetic_energy_ev: energy, report, outcome })
        })
        .collect()
}

fn run_detuning_sweep(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    let mut m = base_manifest(cfg);
    let fractions = linspace(cfg.sweep.fraction_min, cfg.sweep.fraction_max, cfg.sweep.fraction_points);
    let points = detuning_sweep(&cfg.setup, &cfg.numerics, &fractions)?;
    let mut diag = DiagnosticsSummary::default();
    let mut table = Table::new(
        "detuning_sweep",
        &[
            "detuning_fraction",
            "kinetic_energy_ev",
            "grating_period_m",
            "recoil_detuning_rad_s",
            "delta_min_t",
            "P_E1_0",
            "P_E0_1",
            "P_other",
            "fidelity",
        ],
    );
    for p in &points {
        diag.add(&p.outcome.diagnostics);
        let period = 2.0 * PI / (p.report.recoil_detuning / CONSTANTS.hbar_over_mass()).sqrt();
        table.rows.push(vec![
            p.fraction,
            p.kinetic_energy_ev,
            period,
            p.report.recoil_detuning,
            p.report.criterion,
            p.outcome.probability("E1,0"),
            p.outcome.probability("E0,1"),
            p.outcome.probability("other"),
            p.outcome.fidelity,
        ]);
    }
    diag.write(&mut m);
    Ok(ScenarioResult { kind: cfg.kind, tables: vec![table], manifest: m })
}

fn run_three_level(cfg: &ScenarioConfig, kind: Reduction) -> Result<ScenarioResult> {
    let exp = Experiment::new(&cfg.setup, kind, &cfg.numerics)?;
    let mut m = base_manifest(cfg);
    derived_manifest(&mut m, &exp.setup, &exp.modes)?;
    gate(&exp, cfg, &mut m)?;
    let mut diag = DiagnosticsSummary::default();
    let main = exp.run()?;
    diag.add(&main.diagnostics);
    let values = linspace(cfg.sweep.gq_min, cfg.sweep.gq_max, cfg.sweep.gq_points);
    let outcomes = coupling_sweep(&exp, &values)?;
    outcomes.iter().for_each(|o| diag.add(&o.diagnostics));
    let names: Vec<&str> = exp.labels.labels.iter().map(|l| l.name.as_str()).collect();
    for l in &names {
        m.insert(format!("final_p_{}", l.replace(',', "_")), json!(main.probability(l)));
    }
    m.insert("final_fidelity".into(), json!(main.fidelity));
    let prefix = match kind {
        Reduction::Ladder => "photon_pair",
        _ => "swap",
    };
    if kind == Reduction::Lambda {
        let target = FewLevelState::new(&["E2,1,0"], vec![C64::new(-1.0, 0.0)]);
        let amp = exp.projection(&main.final_state, "E2,1,0")?;
        m.insert("swap_target_fidelity".into(), json!(exp.fidelity_to(&main.final_state, &target)?));
        m.insert("swap_target_amplitude_re".into(), json!(amp.re));
        m.insert("swap_target_amplitude_im".into(), json!(amp.im));
        m.insert("swap_sign_negative".into(), json!(amp.re < 0.0));
        m.insert("lambda_recoil_e2_rad_m".into(), json!(exp.modes.modes[0].total_recoil));
    }
    diag.write(&mut m);
    let tables = vec![
        sweep_table(&format!("{prefix}_sweep"), &names, &values, &outcomes),
        trajectory_table(&format!("{prefix}_trajectory"), &exp, &main)?,
        photon_table(&format!("{prefix}_photons"), &exp, &main.final_state)?,
    ];
    Ok(ScenarioResult { kind: cfg.kind, tables, manifest: m })
}

fn run_symmetric(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    let mut m = base_manifest(cfg);
    let t = cfg.setup.transit_time()?;
    let g = C64::new(cfg.setup.coupling_gq / t, 0.0);
    m.insert("derived_transit_time_s".into(), json!(t));
    m.insert("derived_resonant_coupling_rad_s".into(), json!(g.re));
    let mut dynamics_table = Table::new(
        "symmetric_n_dynamics",
        &["electrons", "g_Q", "P_1S_0_analytic", "P_0S_1_analytic", "P_0S_1_numeric", "amplitude_error"],
    );
    let mut summary = Table::new("symmetric_n_summary", &["electrons", "first_emission_time_s", "g_q_required"]);
    let values = linspace(cfg.sweep.gq_min, cfg.sweep.gq_max, cfg.sweep.gq_points);
    for &n in &cfg.sweep.electrons {
        let model = EffectiveModel::tavis_cummings(n, g)?;
        for &gq in &values {
            let time = gq / g.norm();
            let closed = analytic::tavis_cummings_single_excitation(n, g, time)?;
            let numeric = model.evolve(time, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)])?;
            let err = closed
                .amplitudes
                .iter()
                .zip(&numeric.amplitudes)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            let p = closed.probabilities();
            dynamics_table.rows.push(vec![n as f64, gq, p[0], p[1], numeric.amplitudes[1].norm_sqr(), err]);
        }
        let rt = (n as f64).sqrt();
        summary.rows.push(vec![n as f64, PI / (2.0 * rt * g.norm()), PI / (2.0 * rt)]);
    }
    Ok(ScenarioResult { kind: cfg.kind, tables: vec![dynamics_table, summary], manifest: m })
}

/// Phase-matching and detuning report for the configured setup.
pub fn phase_match_report(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    let mut setup = cfg.setup;
    setup.validate()?;
    if let Some(f) = cfg.numerics.detuning_fraction {
        setup.free_spectral_range_rad_s = free_spectral_range_for_fraction(&setup, f)?;
    }
    let design = setup.design()?;
    let modes = CavityModeSet::fabry_perot(
        &setup,
        &design,
        cfg.numerics.signal_modes,
        cfg.numerics.loss_modes,
        cfg.numerics.dispersion,
    )?;
    let report = phasematch::detuning_table(&setup, &modes)?;
    let mut m = base_manifest(cfg);
    derived_manifest(&mut m, &setup, &modes)?;
    m.insert("derived_grating_residual_rad_s".into(), json!(design.grating.residual));
    m.insert("derived_mode_wavenumber_rad_m".into(), json!(design.grating.mode_wavenumber));
    let ideal = phasematch::ideal_free_spectral_range(setup.refractive_index, setup.cavity_length_m);
    m.insert("derived_ideal_free_spectral_range_rad_s".into(), json!(ideal));
    let ideal_setup = PhysicalSetup { free_spectral_range_rad_s: ideal, ..setup };
    let ideal_report = phasematch::detuning_table(&ideal_setup, &modes)?;
    m.insert("derived_ideal_fsr_delta_min_t".into(), json!(ideal_report.criterion));
    m.insert(
        "derived_ideal_fsr_closed_form".into(),
        json!(phasematch::closed_form_criterion(
            ideal_report.fraction,
            setup.refractive_index,
            design.kinematics.beta
        )),
    );
    let mut table = Table::new("phase_match_detunings", &["mode_index", "emission_rad_s", "absorption_rad_s"]);
    for e in &report.entries {
        table.rows.push(vec![e.index as f64, e.emission, e.absorption]);
    }
    Ok(ScenarioResult { kind: cfg.kind, tables: vec![table], manifest: m })
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    match cfg.kind {
        ScenarioKind::SinglePhoton => run_single_photon(cfg),
        ScenarioKind::DetuningSweep => run_detuning_sweep(cfg),
        ScenarioKind::PhotonPair => run_three_level(cfg, Reduction::Ladder),
        ScenarioKind::Swap => run_three_level(cfg, Reduction::Lambda),
        ScenarioKind::SymmetricN => run_symmetric(cfg),
        ScenarioKind::PhaseMatchReport => phase_match_report(cfg),
    }
}
