//! Method-of-lines solver for the rescaled system in `rho`:
//!
//! ```text
//! d_rho U + (1/rho) d_y U = iV + (i/rho)|V|^2 U
//! d_rho V - (1/rho) d_y V = iU + (i/rho)|U|^2 V
//! ```
//!
//! Fourth-order differences in `y`, four-stage Runge-Kutta in `rho`, and a
//! quintic absorbing band near `|y| = y_max`.

use log::warn;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::hyperbolic::{HyperGrid, HyperState};
use crate::stencil;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Default damping strength. The band damps at rate `SPONGE_STRENGTH *
/// ramp(y) / rho`, matching the `1/rho` drift of the characteristics, so a
/// crossing attenuates by about `exp(-SPONGE_STRENGTH * width / 2)` at any `rho`.
pub const SPONGE_STRENGTH: f64 = 160.0;

/// Time integrator for the semi-discrete system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    /// Classical RK4 on `(U, V)`.
    Rk4,
    /// Classical RK4 in the frame co-rotating with the exact unit-frequency
    /// mass flow (Lawson / integrating-factor RK4). The mass rotation is then
    /// propagated without phase error.
    LawsonRk4,
}

impl std::str::FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Integrator::Rk4),
            "lawson_rk4" => Ok(Integrator::LawsonRk4),
            other => Err(Error::InvalidParameter(format!("unknown integrator `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MolConfig {
    pub cfl: f64,
    pub drho_max: f64,
    pub rho_final: f64,
    /// Strictly increasing; the solver lands exactly on each.
    pub sample_rhos: Vec<f64>,
    pub coupling: f64,
    pub integrator: Integrator,
    pub sponge_strength: f64,
    pub exec: Execution,
}

impl MolConfig {
    pub fn new(rho_final: f64) -> Self {
        Self {
            cfl: 0.5,
            drho_max: 0.05,
            rho_final,
            sample_rhos: vec![rho_final],
            coupling: 1.0,
            integrator: Integrator::LawsonRk4,
            sponge_strength: SPONGE_STRENGTH,
            exec: Execution::default(),
        }
    }

    pub fn validate(&self, rho0: f64) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidParameter(format!("cfl = {} not in (0, 1]", self.cfl)));
        }
        if !(self.drho_max > 0.0 && self.drho_max <= 0.25) {
            return Err(Error::InvalidParameter(format!("drho_max = {} not in (0, 0.25]", self.drho_max)));
        }
        if !(self.rho_final >= rho0) {
            return Err(Error::InvalidParameter(format!("rho_final {} < rho0 {rho0}", self.rho_final)));
        }
        if self.sample_rhos.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("sample_rhos must be strictly increasing".into()));
        }
        if self.sample_rhos.iter().any(|&r| r < rho0 - 1e-12 * rho0 || r > self.rho_final * (1.0 + 1e-12)) {
            return Err(Error::InvalidParameter("sample_rhos must lie in [rho0, rho_final]".into()));
        }
        Ok(())
    }
}

/// `rho_k = rho0 r^k` up to `rho_final`; the last point is snapped onto
/// `rho_final` when within 1e-9 relative.
pub fn geometric_samples(rho0: f64, rho_final: f64, ratio: f64) -> Result<Vec<f64>> {
    if !(ratio > 1.0) || !(rho0 >= 1.0) || !(rho_final >= rho0) {
        return Err(Error::InvalidParameter(format!(
            "geometric schedule needs ratio > 1 and 1 <= rho0 <= rho_final (got {ratio}, {rho0}, {rho_final})"
        )));
    }
    let mut out = Vec::new();
    for k in 0.. {
        let r = rho0 * ratio.powi(k);
        if r > rho_final * (1.0 + 1e-9) {
            break;
        }
        out.push(if (r - rho_final).abs() <= 1e-9 * rho_final { rho_final } else { r });
    }
    Ok(out)
}

/// Fourth-order `d/dy` (one-sided in the two cells nearest each end).
pub fn dy_operator(field: &[Complex64], hgrid: &HyperGrid) -> Vec<Complex64> {
    stencil::d1(field, hgrid.dy)
}

/// Quintic smoothstep ramp: 0 in the interior, 1 at `|y| = y_max`.
pub fn sponge_profile(hgrid: &HyperGrid) -> Vec<f64> {
    let start = hgrid.y_max - hgrid.sponge_width;
    (0..hgrid.ny)
        .map(|k| {
            let d = hgrid.y(k).abs() - start;
            if hgrid.sponge_width == 0.0 || d <= 0.0 {
                0.0
            } else {
                let q = (d / hgrid.sponge_width).min(1.0);
                q * q * q * (10.0 - 15.0 * q + 6.0 * q * q)
            }
        })
        .collect()
}

/// Full right-hand side including the mass coupling and the sponge.
pub fn rhs(h: &HyperState, hgrid: &HyperGrid, cfg: &MolConfig) -> (Vec<Complex64>, Vec<Complex64>) {
    let ramp = sponge_profile(hgrid);
    let mut du = vec![Complex64::default(); hgrid.ny];
    let mut dv = du.clone();
    let ops = Operator { inv12dy: 1.0 / (12.0 * hgrid.dy), ramp: &ramp, cfg };
    ops.eval(h.rho, &h.u, &h.v, &mut du, &mut dv, true);
    (du, dv)
}

/// `min(cfl rho dy, drho_max)`.
pub fn step_size(rho: f64, hgrid: &HyperGrid, cfg: &MolConfig) -> f64 {
    (cfg.cfl * rho * hgrid.dy).min(cfg.drho_max)
}

/// Number of steps [`evolve_rho`] takes between `rho0` and `rho1`
/// (ignoring the extra landings on sample points).
pub fn count_steps(rho0: f64, rho1: f64, hgrid: &HyperGrid, cfg: &MolConfig) -> usize {
    let mut rho = rho0;
    let mut n = 0;
    while rho < rho1 {
        rho += step_size(rho, hgrid, cfg).min(rho1 - rho);
        n += 1;
    }
    n
}

struct Operator<'a> {
    inv12dy: f64,
    ramp: &'a [f64],
    cfg: &'a MolConfig,
}

impl Operator<'_> {
    /// Writes `dU, dV`; the mass terms `iV, iU` are included when `with_mass`.
    fn eval(&self, rho: f64, u: &[Complex64], v: &[Complex64], du: &mut [Complex64], dv: &mut [Complex64], with_mass: bool) {
        let inv_rho = 1.0 / rho;
        let nl = self.cfg.coupling * inv_rho;
        let damp = self.cfg.sponge_strength * inv_rho;
        let inv12 = self.inv12dy;
        let ramp = self.ramp;
        let mass = if with_mass { 1.0 } else { 0.0 };
        exec::fill2(self.cfg.exec, du, dv, |k| {
            let a = u[k];
            let b = v[k];
            let ua = stencil::d1_at(u, k, inv12);
            let vb = stencil::d1_at(v, k, inv12);
            let g = damp * ramp[k];
            let da = -ua * inv_rho + I * (b * mass + a * (nl * b.norm_sqr())) - a * g;
            let db = vb * inv_rho + I * (a * mass + b * (nl * a.norm_sqr())) - b * g;
            (da, db)
        });
    }
}

/// Exact mass flow `(a, b) -> (cos tau a + i sin tau b, i sin tau a + cos tau b)`.
#[derive(Clone, Copy)]
struct MassFlow {
    c: f64,
    is: Complex64,
}

impl MassFlow {
    fn new(tau: f64) -> Self {
        let (s, c) = tau.sin_cos();
        Self { c, is: I * s }
    }

    #[inline]
    fn apply(&self, a: Complex64, b: Complex64) -> (Complex64, Complex64) {
        (a * self.c + b * self.is, a * self.is + b * self.c)
    }
}

/// Receives snapshots at the configured sample points.
pub trait HyperObserver {
    fn observe(&mut self, state: &HyperState, hgrid: &HyperGrid) -> Result<()>;
}

impl<F: FnMut(&HyperState, &HyperGrid) -> Result<()>> HyperObserver for F {
    fn observe(&mut self, state: &HyperState, hgrid: &HyperGrid) -> Result<()> {
        self(state, hgrid)
    }
}

struct Workspace {
    k: [Vec<Complex64>; 8],
    su: Vec<Complex64>,
    sv: Vec<Complex64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        let z = || vec![Complex64::default(); n];
        Self { k: std::array::from_fn(|_| z()), su: z(), sv: z() }
    }
}

/// Integrates from `h0.rho` to `cfg.rho_final`, emitting snapshots at every
/// `cfg.sample_rhos` entry.
pub fn evolve_rho(
    h0: HyperState,
    hgrid: &HyperGrid,
    cfg: &MolConfig,
    observers: &mut [&mut dyn HyperObserver],
) -> Result<HyperState> {
    cfg.validate(h0.rho)?;
    if h0.u.len() != hgrid.ny || h0.v.len() != hgrid.ny {
        return Err(Error::GridMismatch(format!("state has {} cells, grid {}", h0.u.len(), hgrid.ny)));
    }
    let ramp = sponge_profile(hgrid);
    let ops = Operator { inv12dy: 1.0 / (12.0 * hgrid.dy), ramp: &ramp, cfg };
    let mut ws = Workspace::new(hgrid.ny);
    let mut h = h0;
    let initial_peak = h.peak();
    let mut warned = false;

    let mut pending = cfg.sample_rhos.iter().copied().peekable();
    let emit = |h: &HyperState, obs: &mut [&mut dyn HyperObserver]| -> Result<()> {
        for o in obs.iter_mut() {
            o.observe(h, hgrid)?;
        }
        Ok(())
    };
    while let Some(&r) = pending.peek() {
        if (r - h.rho).abs() <= 1e-12 * r {
            emit(&h, observers)?;
            pending.next();
        } else {
            break;
        }
    }

    let mut step = 0usize;
    while h.rho < cfg.rho_final * (1.0 - 1e-15) {
        let target = pending.peek().copied().unwrap_or(cfg.rho_final);
        let mut dr = step_size(h.rho, hgrid, cfg);
        let landing = h.rho + dr >= target * (1.0 - 1e-13);
        if landing {
            dr = target - h.rho;
        }
        match cfg.integrator {
            Integrator::Rk4 => rk4_step(&ops, &mut h, dr, &mut ws),
            Integrator::LawsonRk4 => lawson_step(&ops, &mut h, dr, &mut ws),
        }
        step += 1;
        if landing {
            h.rho = target;
        }
        if (step.is_multiple_of(64) || landing) && !h.is_finite() {
            return Err(Error::NonFinite { stage: "hyperbolic", step });
        }
        if landing && pending.peek().is_some() {
            let peak = h.peak().max(initial_peak);
            let ny = hgrid.ny;
            let edge = [0, ny - 1].iter().map(|&k| (h.u[k].norm_sqr() + h.v[k].norm_sqr()).sqrt()).fold(0.0, f64::max);
            if !warned && peak > 0.0 && edge > 1e-4 * peak {
                warn!("rho = {}: boundary amplitude {:.2e} of peak, y-domain too small", h.rho, edge / peak);
                warned = true;
            }
            emit(&h, observers)?;
            pending.next();
        }
    }
    Ok(h)
}

fn axpy_into(out: &mut [Complex64], y: &[Complex64], a: f64, x: &[Complex64]) {
    for ((o, &yy), &xx) in out.iter_mut().zip(y).zip(x) {
        *o = yy + xx * a;
    }
}

fn rk4_step(ops: &Operator, h: &mut HyperState, dr: f64, ws: &mut Workspace) {
    let rho = h.rho;
    let [k1u, k1v, k2u, k2v, k3u, k3v, k4u, k4v] = &mut ws.k;
    let (su, sv) = (&mut ws.su, &mut ws.sv);
    ops.eval(rho, &h.u, &h.v, k1u, k1v, true);
    axpy_into(su, &h.u, 0.5 * dr, k1u);
    axpy_into(sv, &h.v, 0.5 * dr, k1v);
    ops.eval(rho + 0.5 * dr, su, sv, k2u, k2v, true);
    axpy_into(su, &h.u, 0.5 * dr, k2u);
    axpy_into(sv, &h.v, 0.5 * dr, k2v);
    ops.eval(rho + 0.5 * dr, su, sv, k3u, k3v, true);
    axpy_into(su, &h.u, dr, k3u);
    axpy_into(sv, &h.v, dr, k3v);
    ops.eval(rho + dr, su, sv, k4u, k4v, true);
    let w = dr / 6.0;
    for i in 0..h.u.len() {
        h.u[i] += (k1u[i] + (k2u[i] + k3u[i]) * 2.0 + k4u[i]) * w;
        h.v[i] += (k1v[i] + (k2v[i] + k3v[i]) * 2.0 + k4v[i]) * w;
    }
    h.rho = rho + dr;
}

fn lawson_step(ops: &Operator, h: &mut HyperState, dr: f64, ws: &mut Workspace) {
    let rho = h.rho;
    let half = MassFlow::new(0.5 * dr);
    let full = MassFlow::new(dr);
    let [k1u, k1v, k2u, k2v, k3u, k3v, k4u, k4v] = &mut ws.k;
    let (su, sv) = (&mut ws.su, &mut ws.sv);
    let n = h.u.len();

    ops.eval(rho, &h.u, &h.v, k1u, k1v, false);
    for i in 0..n {
        (su[i], sv[i]) = half.apply(h.u[i] + k1u[i] * (0.5 * dr), h.v[i] + k1v[i] * (0.5 * dr));
    }
    ops.eval(rho + 0.5 * dr, su, sv, k2u, k2v, false);
    for i in 0..n {
        let (a, b) = half.apply(h.u[i], h.v[i]);
        su[i] = a + k2u[i] * (0.5 * dr);
        sv[i] = b + k2v[i] * (0.5 * dr);
    }
    ops.eval(rho + 0.5 * dr, su, sv, k3u, k3v, false);
    for i in 0..n {
        let (a, b) = full.apply(h.u[i], h.v[i]);
        let (c, d) = half.apply(k3u[i], k3v[i]);
        su[i] = a + c * dr;
        sv[i] = b + d * dr;
    }
    ops.eval(rho + dr, su, sv, k4u, k4v, false);
    let w = dr / 6.0;
    for i in 0..n {
        let (a, b) = full.apply(h.u[i], h.v[i]);
        let (f1u, f1v) = full.apply(k1u[i], k1v[i]);
        let (f23u, f23v) = half.apply(k2u[i] + k3u[i], k2v[i] + k3v[i]);
        h.u[i] = a + (f1u + f23u * 2.0 + k4u[i]) * w;
        h.v[i] = b + (f1v + f23v * 2.0 + k4v[i]) * w;
    }
    h.rho = rho + dr;
}
