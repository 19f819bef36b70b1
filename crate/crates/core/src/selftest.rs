//! Fast oracle-equivalence and invariant checks run by `freejc selftest`.

use std::f64::consts::PI;

use crate::analytic::{self, LadderDirection};
use crate::dynamics::{self, propagate_oracle_with};
use crate::error::Result;
use crate::hamiltonian::{self, build_dense_hamiltonian, EffectiveModel, Generator, Reduction};
use crate::model::PhysicalSetup;
use crate::scenario::{Experiment, Numerics};
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &'static str, value: f64, limit: f64) -> Self {
        Check { name, value, limit, passed: value <= limit }
    }

    fn at_least(name: &'static str, value: f64, limit: f64) -> Self {
        Check { name, value, limit, passed: value >= limit }
    }
}

fn distance(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

pub fn run_selftest() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let setup = PhysicalSetup::single_photon_defaults()?;
    let exp = Experiment::new(&setup, Reduction::TwoLevel, &Numerics { detuning_fraction: Some(0.5), ..Default::default() })?;
    let t = exp.transit_time();
    let psi0 = exp.initial_state()?;
    let gen = Generator::reachable(&exp.table, &psi0)?;

    let h = build_dense_hamiltonian(0.37 * t, &gen)?;
    let herm = (&h - h.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = h.iter().map(|z| z.norm()).fold(0.0, f64::max);
    checks.push(Check::at_most("hamiltonian_hermitian_relative", herm / scale, 1e-12));

    let traj = dynamics::integrate(&psi0, &exp.table, t, &exp.numerics.integrator())?;
    checks.push(Check::at_most("integrator_norm_drift", traj.diagnostics.max_norm_drift, 1e-9));

    // second-order oracle, Richardson-extrapolated from two step counts
    let local = gen.gather(&psi0)?;
    let coarse = propagate_oracle_with(&gen, &local, 0.0, t, 4096)?;
    let fine = propagate_oracle_with(&gen, &local, 0.0, t, 8192)?;
    let extrapolated: Vec<C64> = fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect();
    let ours = traj.generator.gather(&traj.final_state())?;
    checks.push(Check::at_most("integrator_vs_extrapolated_oracle", distance(&ours, &extrapolated), 1e-8));

    let out = exp.run()?;
    checks.push(Check::at_least("single_photon_fidelity", out.fidelity, 0.99));
    checks.push(Check::at_least("single_photon_emission", out.probability("E0,1"), 0.97));

    let e = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
    let p = [C64::new(0.0, 1.0 / 2f64.sqrt()), C64::new(1.0 / 2f64.sqrt(), 0.0)];
    let (e1, p1) = analytic::swap_gate(e, p)?;
    let (e2, p2) = analytic::swap_gate(e1, p1)?;
    checks.push(Check::at_most("swap_twice_identity", distance(&e2, &e).max(distance(&p2, &p)), 1e-12));

    let g = C64::new(0.0, 2.0e11);
    let mut jc: f64 = 0.0;
    for n in 1..=3u32 {
        let ev = hamiltonian::hermitian_eigenvalues(&hamiltonian::jc_block_hamiltonian(g, n));
        let want = crate::model::CONSTANTS.hbar * g.norm() * (n as f64).sqrt();
        jc = jc.max((ev[0] + want).abs().max((ev[1] - want).abs()) / want);
    }
    checks.push(Check::at_most("jc_eigenvalues_relative", jc, 1e-12));

    let mut tc: f64 = 0.0;
    for n in [1u32, 2, 4, 9] {
        let first_zero = PI / (2.0 * (n as f64).sqrt() * g.norm());
        let model = EffectiveModel::tavis_cummings(n, g)?;
        let num = model.evolve(first_zero, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)])?;
        let closed = analytic::tavis_cummings_single_excitation(n, g, first_zero)?;
        tc = tc.max(distance(&num.amplitudes, &closed.amplitudes)).max(closed.amplitudes[0].norm());
        let up = analytic::symmetric_ladder_coefficient(n, 0, LadderDirection::Raise)?;
        tc = tc.max((up - (n as f64).sqrt()).abs());
    }
    checks.push(Check::at_most("collective_first_zero", tc, 1e-10));

    Ok(checks)
}
