//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any fails.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use freejc::analytic::{self, FewLevelState};
use freejc::dynamics::{self, Diagnostics};
use freejc::hamiltonian::{self, build_dense_hamiltonian, Generator, Reduction};
use freejc::metrics;
use freejc::model::{Dispersion, PhysicalSetup, CONSTANTS};
use freejc::phasematch;
use freejc::scenario::{self, linspace, Experiment, Numerics, RunOutcome};
use freejc::{Result, C64};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { passed, detail })
}

fn fig2_numerics() -> Numerics {
    Numerics { signal_modes: 3, loss_modes: 1, detuning_fraction: Some(0.5), ..Numerics::default() }
}

fn sweep(exp: &Experiment, values: &[f64]) -> Result<Vec<RunOutcome>> {
    values.iter().map(|&gq| exp.with_coupling(gq)?.run()).collect()
}

fn distance(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn rabi_oscillation(drift: &mut Vec<Diagnostics>) -> Result<Verdict> {
    let setup = PhysicalSetup::single_photon_defaults()?;
    let exp = Experiment::new(&setup, Reduction::TwoLevel, &fig2_numerics())?;
    let values = linspace(0.0, PI, 33);
    let runs = sweep(&exp, &values)?;
    let (mut prob_err, mut min_fid) = (0.0f64, 1.0f64);
    for (&gq, out) in values.iter().zip(&runs) {
        prob_err = prob_err
            .max((out.probability("E1,0") - gq.cos().powi(2)).abs())
            .max((out.probability("E0,1") - gq.sin().powi(2)).abs());
        min_fid = min_fid.min(out.fidelity);
        drift.push(out.diagnostics);
    }
    verdict(
        prob_err <= 0.02 && min_fid >= 0.99,
        format!("max |P - cos²/sin²| = {prob_err:.4} (≤ 0.02), min fidelity = {min_fid:.6} (≥ 0.99)"),
    )
}

fn detuning_plateau(drift: &mut Vec<Diagnostics>) -> Result<Verdict> {
    let setup = PhysicalSetup::single_photon_defaults()?;
    let numerics = Numerics { detuning_fraction: None, ..fig2_numerics() };
    let points = scenario::detuning_sweep(&setup, &numerics, &linspace(0.05, 0.5, 12))?;
    let fid: Vec<f64> = points.iter().map(|p| p.outcome.fidelity).collect();
    points.iter().for_each(|p| drift.push(p.outcome.diagnostics));
    let worst_drop = fid.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max);
    let plateau = points
        .iter()
        .filter(|p| p.fraction >= 0.35)
        .map(|p| p.outcome.fidelity)
        .fold(f64::INFINITY, f64::min);
    verdict(
        worst_drop <= 0.005 && plateau > 0.99,
        format!("largest decrease = {worst_drop:.2e} (≤ 0.005), min fidelity for δ/Δω ≥ 0.35 = {plateau:.6} (> 0.99)"),
    )
}

fn photon_pair(drift: &mut Vec<Diagnostics>) -> Result<Verdict> {
    let setup = PhysicalSetup::three_level_defaults()?;
    let exp = Experiment::new(&setup, Reduction::Ladder, &Numerics::default())?;
    let t = exp.transit_time();
    let values = linspace(0.0, PI * 2f64.sqrt(), 33);
    let runs = sweep(&exp, &values)?;
    let (mut prob_err, mut min_fid) = (0.0f64, 1.0f64);
    for (&gq, out) in values.iter().zip(&runs) {
        let closed = analytic::ladder_three_level(gq / t, t);
        for (label, p) in closed.labels.iter().zip(closed.probabilities()) {
            prob_err = prob_err.max((out.probability(label) - p).abs());
        }
        min_fid = min_fid.min(out.fidelity);
        drift.push(out.diagnostics);
    }
    let pair = exp.with_coupling(PI / 2f64.sqrt())?.run()?;
    drift.push(pair.diagnostics);
    let p011 = pair.probability("E0,1,1");
    verdict(
        prob_err <= 0.03 && min_fid > 0.98 && p011 >= 0.95,
        format!(
            "max |P - closed form| = {prob_err:.4} (≤ 0.03), min fidelity = {min_fid:.5} (> 0.98), P(E0,1,1) at π/√2 = {p011:.5} (≥ 0.95)"
        ),
    )
}

fn swap(drift: &mut Vec<Diagnostics>) -> Result<Verdict> {
    let setup = PhysicalSetup::three_level_defaults()?;
    let exp = Experiment::new(&setup, Reduction::Lambda, &Numerics::lambda_defaults())?;
    let out = exp.run()?;
    drift.push(out.diagnostics);
    let target = FewLevelState::new(&["E2,1,0"], vec![C64::new(-1.0, 0.0)]);
    let fid = exp.fidelity_to(&out.final_state, &target)?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut twice = 0.0f64;
    for _ in 0..200 {
        let mut unit = || {
            let v: [C64; 2] = std::array::from_fn(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
            [v[0] / n, v[1] / n]
        };
        let (e, p) = (unit(), unit());
        let (e1, p1) = analytic::swap_gate(e, p)?;
        let (e2, p2) = analytic::swap_gate(e1, p1)?;
        let before = [e[0] * p[0], e[0] * p[1], e[1] * p[0], e[1] * p[1]];
        let after = [e2[0] * p2[0], e2[0] * p2[1], e2[1] * p2[0], e2[1] * p2[1]];
        let overlap: C64 = before.iter().zip(&after).map(|(a, b)| a.conj() * b).sum();
        let phase = C64::from_polar(1.0, overlap.arg());
        let aligned: Vec<C64> = before.iter().map(|a| a * phase).collect();
        twice = twice.max(distance(&aligned, &after));
    }
    verdict(
        fid >= 0.95 && twice <= 1e-12,
        format!("fidelity to −|E2,1,0⟩ = {fid:.5} (≥ 0.95), swap² vs identity up to phase = {twice:.1e} (≤ 1e-12)"),
    )
}

fn sqrt_n_speedup() -> Result<Verdict> {
    let g = C64::from_polar(3.0e11, 0.4);
    let (mut zero, mut oracle) = (0.0f64, 0.0f64);
    for n in [1u32, 2, 4, 9] {
        let gn = g * (n as f64).sqrt();
        let t_zero = PI / (2.0 * (n as f64).sqrt() * g.norm());
        let at_zero = analytic::tavis_cummings_single_excitation(n, g, t_zero)?;
        zero = zero.max(at_zero.amplitudes[0].norm_sqr());
        // d/dt (c_1S0, c_0S1) = [[0, √N g], [−√N g*, 0]] (c_1S0, c_0S1)
        let a = DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), gn, -gn.conj(), C64::new(0.0, 0.0)]);
        for k in 0..=40 {
            let t = 2.0 * t_zero * k as f64 / 40.0;
            let u = (&a * C64::new(t, 0.0)).exp();
            let closed = analytic::tavis_cummings_single_excitation(n, g, t)?;
            let num = [u[(0, 0)], u[(1, 0)]];
            oracle = oracle.max(distance(&num, &closed.amplitudes));
        }
    }
    verdict(
        zero <= 1e-12 && oracle <= 1e-10,
        format!("P(1_S) at π/(2√N|g|) = {zero:.1e} (≤ 1e-12), 2×2 exponential vs closed form = {oracle:.1e} (≤ 1e-10)"),
    )
}

fn oracle_equivalence() -> Result<Verdict> {
    let setup = PhysicalSetup::single_photon_defaults()?;
    let exp = Experiment::new(&setup, Reduction::TwoLevel, &fig2_numerics())?;
    let psi0 = exp.initial_state()?;
    let t = exp.transit_time();
    let traj = dynamics::integrate(&psi0, &exp.table, t, &exp.numerics.integrator())?;
    let oracle = dynamics::propagate_oracle(&psi0, &exp.table, t, 4096)?;
    let d = distance(&traj.final_state().amplitudes, &oracle.amplitudes);
    verdict(d <= 1e-6, format!("‖ψ_integrate(T) − ψ_oracle(T)‖₂ = {d:.3e} with 4096 steps (≤ 1e-6)"))
}

fn generator_health(drift: &[Diagnostics]) -> Result<Verdict> {
    let mut herm = 0.0f64;
    let single = PhysicalSetup::single_photon_defaults()?;
    let triple = PhysicalSetup::three_level_defaults()?;
    let cases = [
        (single, Reduction::TwoLevel, fig2_numerics()),
        (triple, Reduction::Ladder, Numerics::default()),
        (triple, Reduction::Lambda, Numerics::lambda_defaults()),
    ];
    for (setup, kind, numerics) in cases {
        let exp = Experiment::new(&setup, kind, &numerics)?;
        let gen = Generator::reachable(&exp.table, &exp.initial_state()?)?;
        for frac in [0.0, 0.31, 0.77, 1.0] {
            let h = build_dense_hamiltonian(frac * exp.transit_time(), &gen)?;
            let scale = h.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let dev = (&h - h.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            herm = herm.max(dev / scale);
        }
    }
    let worst = drift.iter().map(|d| d.max_norm_drift).fold(0.0, f64::max);
    verdict(
        herm <= 1e-12 && worst <= 1e-9,
        format!("max |H − H†| / max |H| = {herm:.1e} (≤ 1e-12), max norm drift over {} runs = {worst:.2e} (≤ 1e-9)", drift.len()),
    )
}

fn poissonian_limit(drift: &mut Vec<Diagnostics>) -> Result<Verdict> {
    let setup = PhysicalSetup::single_photon_defaults()?;
    let numerics = Numerics { dispersion: Dispersion::Linear, ..fig2_numerics() };
    let mut worst = 0.0f64;
    for gq in [0.1, 0.25, 0.4, 0.5] {
        let exp = Experiment::new(&PhysicalSetup { coupling_gq: gq, ..setup }, Reduction::TwoLevel, &numerics)?;
        let out = exp.run()?;
        drift.push(out.diagnostics);
        let dist = metrics::photon_number_distribution(&out.final_state, exp.modes.target)?;
        let reference = metrics::poissonian_reference(gq * gq, exp.fock.cutoff)?;
        worst = worst.max(metrics::total_variation(&dist, &reference));
    }
    verdict(worst <= 0.02, format!("max total-variation distance to Poisson(g_Q²) for g_Q ≤ 0.5 = {worst:.2e} (≤ 0.02)"))
}

fn phase_matching() -> Result<Verdict> {
    let setup = PhysicalSetup::single_photon_defaults()?;
    let design = setup.design()?;
    let modes = freejc::model::CavityModeSet::fabry_perot(&setup, &design, 3, 1, Dispersion::Parabolic)?;
    let report = phasematch::detuning_table(&setup, &modes)?;
    let period = setup.grating_period_m;
    let beta = design.kinematics.beta;
    let ratio = report.recoil_detuning / report.free_spectral_range;
    let ideal = PhysicalSetup {
        free_spectral_range_rad_s: phasematch::ideal_free_spectral_range(setup.refractive_index, setup.cavity_length_m),
        ..setup
    };
    let ideal_report = phasematch::detuning_table(&ideal, &modes)?;
    let closed = phasematch::closed_form_criterion(ideal_report.fraction, setup.refractive_index, beta);
    let rel = (closed - ideal_report.criterion).abs() / ideal_report.criterion;
    let passed = (10e-9..=12e-9).contains(&period)
        && (beta - 0.01978).abs() <= 1e-4
        && (0.45..=0.52).contains(&ratio)
        && report.criterion >= 50.0
        && rel <= 1e-12;
    verdict(
        passed,
        format!(
            "Λ = {:.3} nm, β = {beta:.5}, δ/Δω = {ratio:.4}, δ_min·T = {:.2}, closed form vs direct = {rel:.1e}",
            period * 1e9,
            report.criterion
        ),
    )
}

fn eigensystem() -> Result<Verdict> {
    let g = C64::from_polar(2.5e11, -1.1);
    let mut worst = 0.0f64;
    for n in 1..=3u32 {
        let want = CONSTANTS.hbar * g.norm() * (n as f64).sqrt();
        let ev = hamiltonian::hermitian_eigenvalues(&hamiltonian::jc_block_hamiltonian(g, n));
        worst = worst.max((ev[0] + want).abs() / want).max((ev[1] - want).abs() / want);
        let pairs = analytic::jc_eigensystem(n, g);
        let h = hamiltonian::jc_block_hamiltonian(g, n);
        for p in pairs {
            worst = worst.max((p.energy.abs() - want).abs() / want);
            let v = nalgebra::DVector::from_column_slice(&p.vector);
            let residual = (&h * &v - &v * C64::new(p.energy, 0.0)).norm() / want;
            worst = worst.max(residual);
        }
    }
    verdict(worst <= 1e-12, format!("max relative deviation from ±ħ|g|√n, n = 1..3: {worst:.1e} (≤ 1e-12)"))
}

fn main() {
    let mut drift = Vec::new();
    let results: Vec<(u32, &str, Result<Verdict>)> = vec![
        (1, "Rabi oscillation", rabi_oscillation(&mut drift)),
        (2, "detuning plateau", detuning_plateau(&mut drift)),
        (3, "photon pair", photon_pair(&mut drift)),
        (4, "electron-photon SWAP", swap(&mut drift)),
        (5, "√N speedup", sqrt_n_speedup()),
        (6, "oracle equivalence", oracle_equivalence()),
        (8, "zero-recoil Poissonian limit", poissonian_limit(&mut drift)),
        (9, "phase-matching numerics", phase_matching()),
        (10, "JC eigensystem", eigensystem()),
    ];
    let mut results = results;
    results.insert(6, (7, "generator health", generator_health(&drift)));
    let mut failed = 0;
    for (id, name, r) in &results {
        let (passed, detail) = match r {
            Ok(v) => (v.passed, v.detail.clone()),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!passed);
        println!("{} criterion {id:>2} {name}: {detail}", if passed { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
