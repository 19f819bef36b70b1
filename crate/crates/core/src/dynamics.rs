//! Time integration of the interaction-picture Schrödinger equation.
//!
//! [`integrate`] runs an adaptive Dormand-Prince 5(4) scheme on the sparse
//! generator; [`propagate_oracle`] is an independent time-ordered product of
//! exact slice exponentials used to cross-check it.

use crate::error::{Error, Result};
use crate::hamiltonian::{CouplingTable, Generator, MAX_DENSE_DIM};
use crate::linalg;
use crate::model::JointState;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    /// Local error bound per step on the max-norm of the embedded estimate.
    pub tol: f64,
    /// Output intervals; the trajectory holds `samples + 1` states.
    pub samples: usize,
    pub max_steps: usize,
    /// Integrations with a larger norm drift are rejected.
    pub max_norm_drift: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions { tol: 1e-10, samples: 200, max_steps: 2_000_000, max_norm_drift: 1e-6 }
    }
}

impl IntegratorOptions {
    pub fn validate(&self) -> Result<()> {
        if !(1e-12..=1e-6).contains(&self.tol) {
            return Err(Error::InvalidParameter(format!("tolerance {} outside [1e-12, 1e-6]", self.tol)));
        }
        if self.samples == 0 {
            return Err(Error::InvalidParameter("need at least one output interval".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
    /// Largest |‖ψ(t)‖² − ‖ψ(t0)‖²| over the output samples.
    pub max_norm_drift: f64,
    pub active_dim: usize,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Amplitudes on the generator's active subspace.
    pub states: Vec<Vec<C64>>,
    pub generator: Generator,
    pub diagnostics: Diagnostics,
}

impl Trajectory {
    pub fn state(&self, i: usize) -> JointState {
        self.generator.scatter(&self.states[i])
    }

    pub fn final_state(&self) -> JointState {
        self.state(self.states.len() - 1)
    }
}

/// Integrate `psi0` from 0 to `t_end` over the states reachable from it.
pub fn integrate(psi0: &JointState, table: &CouplingTable, t_end: f64, opts: &IntegratorOptions) -> Result<Trajectory> {
    let gen = Generator::reachable(table, psi0)?;
    let local = gen.gather(psi0)?;
    integrate_with(&gen, &local, 0.0, t_end, opts)
}

const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
// fifth-order minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn combine(out: &mut [C64], y: &[C64], h: f64, ks: &[&Vec<C64>], coeffs: &[f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for (k, &c) in ks.iter().zip(coeffs) {
            if c != 0.0 {
                acc += k[i] * c;
            }
        }
        *o = y[i] + acc * h;
    }
}

/// Integrate active-subspace amplitudes from `t0` to `t1` (either direction).
/// Time is rescaled to τ ∈ [0, 1] so steps are dimensionless.
pub fn integrate_with(
    gen: &Generator,
    psi0: &[C64],
    t0: f64,
    t1: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    opts.validate()?;
    if psi0.len() != gen.dim() {
        return Err(Error::BasisMismatch);
    }
    let n = psi0.len();
    let span = t1 - t0;
    let norm0: f64 = psi0.iter().map(|a| a.norm_sqr()).sum();
    if (norm0 - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(format!("initial norm² {norm0}")));
    }
    let mut diag = Diagnostics { active_dim: n, ..Diagnostics::default() };
    let mut times = vec![t0];
    let mut states = vec![psi0.to_vec()];
    if span == 0.0 {
        for _ in 0..opts.samples {
            times.push(t0);
            states.push(psi0.to_vec());
        }
        return Ok(Trajectory { times, states, generator: gen.clone(), diagnostics: diag });
    }

    let f = |tau: f64, y: &[C64], out: &mut [C64]| gen.apply_scaled(t0 + tau * span, span, y, out);
    let zero = C64::new(0.0, 0.0);
    let [mut k0, mut k1, mut k2, mut k3, mut k4, mut k5, mut k6]: [Vec<C64>; 7] = std::array::from_fn(|_| vec![zero; n]);
    let mut y = psi0.to_vec();
    let mut stage = vec![zero; n];
    let mut y_new = vec![zero; n];
    let mut tau = 0.0;
    let mut h = 1e-3f64;
    f(0.0, &y, &mut k0);
    diag.rhs_evaluations += 1;

    for s in 1..=opts.samples {
        let target = s as f64 / opts.samples as f64;
        while tau < target {
            if diag.accepted_steps + diag.rejected_steps >= opts.max_steps {
                return Err(Error::TooManySteps(opts.max_steps));
            }
            let remaining = target - tau;
            let last = h >= remaining;
            let step = if last { remaining } else { h };
            if step < 1e-15 && !last {
                return Err(Error::StepUnderflow { t: t0 + tau * span, h: step * span });
            }
            combine(&mut stage, &y, step, &[&k0], &A2);
            f(tau + C[0] * step, &stage, &mut k1);
            combine(&mut stage, &y, step, &[&k0, &k1], &A3);
            f(tau + C[1] * step, &stage, &mut k2);
            combine(&mut stage, &y, step, &[&k0, &k1, &k2], &A4);
            f(tau + C[2] * step, &stage, &mut k3);
            combine(&mut stage, &y, step, &[&k0, &k1, &k2, &k3], &A5);
            f(tau + C[3] * step, &stage, &mut k4);
            combine(&mut stage, &y, step, &[&k0, &k1, &k2, &k3, &k4], &A6);
            f(tau + C[4] * step, &stage, &mut k5);
            combine(&mut y_new, &y, step, &[&k0, &k1, &k2, &k3, &k4, &k5], &B);
            f(tau + step, &y_new, &mut k6);
            diag.rhs_evaluations += 6;

            let mut err = 0.0f64;
            for i in 0..n {
                let e = (k0[i] * E[0]
                    + k2[i] * E[2]
                    + k3[i] * E[3]
                    + k4[i] * E[4]
                    + k5[i] * E[5]
                    + k6[i] * E[6])
                    * step;
                err = err.max(e.norm());
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * (opts.tol / err).powf(0.2)).clamp(0.2, 5.0) };
            if err <= opts.tol {
                tau = if last { target } else { tau + step };
                std::mem::swap(&mut y, &mut y_new);
                std::mem::swap(&mut k0, &mut k6);
                diag.accepted_steps += 1;
                if !last {
                    h = step * factor;
                }
            } else {
                diag.rejected_steps += 1;
                h = step * factor.min(1.0);
            }
        }
        let norm: f64 = y.iter().map(|a| a.norm_sqr()).sum();
        let drift = (norm - norm0).abs();
        diag.max_norm_drift = diag.max_norm_drift.max(drift);
        if drift > opts.max_norm_drift {
            return Err(Error::NormDrift { drift, limit: opts.max_norm_drift });
        }
        times.push(t0 + target * span);
        states.push(y.clone());
    }
    Ok(Trajectory { times, states, generator: gen.clone(), diagnostics: diag })
}

/// Time-ordered product of exp(A(t_mid)·Δt) over `steps` uniform slices
/// from 0 to `t_end`, on the states reachable from `psi0`.
pub fn propagate_oracle(psi0: &JointState, table: &CouplingTable, t_end: f64, steps: usize) -> Result<JointState> {
    let gen = Generator::reachable(table, psi0)?;
    let local = gen.gather(psi0)?;
    let out = propagate_oracle_with(&gen, &local, 0.0, t_end, steps)?;
    Ok(gen.scatter(&out))
}

pub fn propagate_oracle_with(gen: &Generator, psi0: &[C64], t0: f64, t1: f64, steps: usize) -> Result<Vec<C64>> {
    if steps < 1000 {
        return Err(Error::InvalidParameter(format!("oracle needs at least 1000 steps, got {steps}")));
    }
    if gen.dim() > MAX_DENSE_DIM {
        return Err(Error::DimensionGuard { dim: gen.dim(), limit: MAX_DENSE_DIM });
    }
    let dt = (t1 - t0) / steps as f64;
    let mut psi = nalgebra::DVector::from_column_slice(psi0);
    for s in 0..steps {
        let mid = t0 + (s as f64 + 0.5) * dt;
        let k = gen.dense_generator(mid)? * C64::new(0.0, 1.0);
        psi = linalg::unitary_from_hermitian(&k, dt) * psi;
    }
    Ok(psi.iter().copied().collect())
}
