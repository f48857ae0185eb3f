//! Split-step evolution of the cubic Dirac system on the light-cone lattice.
//!
//! With `dt = dx` the transport operators `d_t +- d_x` are exact one-cell
//! shifts, and the mass coupling and cubic phase are pointwise ODEs with
//! closed-form flows. A step is the symmetric composition
//! `M(dt/2) N(dt/2) T(dt) N(dt/2) M(dt/2)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::model::{Boundary, CartesianGrid, CartesianState};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Fixed-step plan on the light-cone lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitStepPlan {
    /// Always equal to the grid spacing.
    pub dt: f64,
    pub boundary: Boundary,
    /// Strength of the cubic terms: 1 for the Thirring model, 0 for linear Dirac.
    pub coupling: f64,
    pub exec: Execution,
}

impl SplitStepPlan {
    pub fn new(grid: &CartesianGrid) -> Self {
        Self { dt: grid.dx, boundary: grid.boundary, coupling: 1.0, exec: Execution::default() }
    }

    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn with_exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    /// Number of lattice steps from `t0` to `t1`, if it is an integer.
    pub fn steps_between(&self, t0: f64, t1: f64) -> Result<usize> {
        if t1 < t0 {
            return Err(Error::InvalidParameter(format!("t_final {t1} < t {t0}")));
        }
        let exact = (t1 - t0) / self.dt;
        let n = exact.round();
        if (exact - n).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "t_final - t = {} is not a multiple of dt = {}",
                t1 - t0,
                self.dt
            )));
        }
        Ok(n as usize)
    }
}

/// `u_j <- u_{j-1}`, `v_j <- v_{j+1}`; vacated cells per boundary mode.
pub fn transport_step(state: &mut CartesianState, boundary: Boundary) {
    shift(state, boundary, true);
}

fn shift(state: &mut CartesianState, boundary: Boundary, forward: bool) {
    let n = state.len();
    if n == 0 {
        return;
    }
    let (right, left) = if forward { (&mut state.u, &mut state.v) } else { (&mut state.v, &mut state.u) };
    right.rotate_right(1);
    left.rotate_left(1);
    if boundary == Boundary::ZeroInflow {
        right[0] = Complex64::default();
        left[n - 1] = Complex64::default();
    }
}

/// Exact flow of `u' = iv, v' = iu` over `tau`.
pub fn mass_rotation_step(state: &mut CartesianState, tau: f64, exec: Execution) {
    let (s, c) = tau.sin_cos();
    let is = I * s;
    exec::zip2(exec, &mut state.u, &mut state.v, |_, u, v| {
        let (a, b) = (*u, *v);
        *u = a * c + b * is;
        *v = a * is + b * c;
    });
}

/// Exact flow of `u' = i|v|^2 u, v' = i|u|^2 v` over `tau` (moduli are constant).
pub fn nonlinear_phase_step(state: &mut CartesianState, tau: f64, coupling: f64, exec: Execution) {
    let k = coupling * tau;
    exec::zip2(exec, &mut state.u, &mut state.v, |_, u, v| {
        let (pu, pv) = (u.norm_sqr(), v.norm_sqr());
        *u *= cis(k * pv);
        *v *= cis(k * pu);
    });
}

#[inline]
fn cis(theta: f64) -> Complex64 {
    let (s, c) = theta.sin_cos();
    Complex64::new(c, s)
}

/// `N(tau) . M(tau)` per cell when `mass_first`, else `M(tau) . N(tau)`.
fn half_kick(state: &mut CartesianState, tau: f64, plan: &SplitStepPlan, mass_first: bool) {
    let (s, c) = tau.sin_cos();
    let is = I * s;
    let k = plan.coupling * tau;
    exec::zip2(plan.exec, &mut state.u, &mut state.v, |_, u, v| {
        let (mut a, mut b) = (*u, *v);
        if mass_first {
            (a, b) = (a * c + b * is, a * is + b * c);
        }
        let (pa, pb) = (a.norm_sqr(), b.norm_sqr());
        a *= cis(k * pb);
        b *= cis(k * pa);
        if !mass_first {
            (a, b) = (a * c + b * is, a * is + b * c);
        }
        *u = a;
        *v = b;
    });
}

/// One symmetric step `M N T N M`; advances `t` by `dt`.
pub fn strang_step(state: &mut CartesianState, plan: &SplitStepPlan) {
    let h = 0.5 * plan.dt;
    half_kick(state, h, plan, true);
    transport_step(state, plan.boundary);
    half_kick(state, h, plan, false);
    state.t += plan.dt;
}

/// Inverse of [`strang_step`]: negated substep times and reversed shifts.
pub fn strang_step_inverse(state: &mut CartesianState, plan: &SplitStepPlan) {
    let h = -0.5 * plan.dt;
    half_kick(state, h, plan, true);
    shift(state, plan.boundary, false);
    half_kick(state, h, plan, false);
    state.t -= plan.dt;
}

/// Receives read-only snapshots during [`evolve`].
pub trait CartesianObserver {
    /// Snapshot cadence in steps; `observe` is called at step 0 and every
    /// `cadence` steps after, plus at the final step.
    fn cadence(&self) -> usize {
        1
    }

    fn observe(&mut self, step: usize, state: &CartesianState, grid: &CartesianGrid) -> Result<()>;
}

/// Repeated [`strang_step`] from `state.t` to `t_final`.
pub fn evolve(
    mut state: CartesianState,
    grid: &CartesianGrid,
    plan: &SplitStepPlan,
    t_final: f64,
    observers: &mut [&mut dyn CartesianObserver],
) -> Result<CartesianState> {
    if state.len() != grid.nx {
        return Err(Error::GridMismatch(format!("state has {} cells, grid {}", state.len(), grid.nx)));
    }
    let n_steps = plan.steps_between(state.t, t_final)?;
    let t0 = state.t;
    let notify = |step: usize, st: &CartesianState, obs: &mut [&mut dyn CartesianObserver]| -> Result<()> {
        for o in obs.iter_mut() {
            let every = o.cadence().max(1);
            if step.is_multiple_of(every) || step == n_steps {
                o.observe(step, st, grid)?;
            }
        }
        Ok(())
    };
    notify(0, &state, observers)?;
    for step in 1..=n_steps {
        strang_step(&mut state, plan);
        state.t = t0 + step as f64 * plan.dt;
        if !state.is_finite() {
            return Err(Error::NonFinite { stage: "cartesian", step });
        }
        notify(step, &state, observers)?;
    }
    Ok(state)
}
