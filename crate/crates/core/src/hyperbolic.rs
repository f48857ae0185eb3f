//! Hyperbolic coordinates `t = rho cosh y`, `x = rho sinh y` inside the cone.
//!
//! Rescaled unknowns `u = (rho e^{-y})^{-1/2} U`, `v = (rho e^{y})^{-1/2} V`,
//! phase variables `phi_+- = e^{-+ i rho} (U +- V)`, their non-resonant
//! correction terms `S_+-`, and resampling of a Cartesian run onto a
//! hyperboloid `t^2 - x^2 = rho^2`.

use log::warn;
use num_complex::Complex64;

use crate::cartesian::CartesianObserver;
use crate::error::{Error, Result};
use crate::model::{CartesianGrid, CartesianState};
use crate::stencil;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Smallest admissible y-lattice.
pub const MIN_NY: usize = 64;

/// Coefficient of the resonant term `(i c / rho) |phi|^2 phi` in the phase
/// equation. Expanding `|V|^2 U +- |U|^2 V` in `phi_+-` gives
/// `4 F_+- = |phi_+-|^2 phi_+- - e^{-+4i rho} (conj(phi_+-) phi_-+) phi_-+`,
/// hence `c = 1/4`; the limiting phase is `(c |sigma|^2) ln rho`.
pub const RESONANT: f64 = 0.25;

/// Symmetric y-lattice `[-y_max, y_max]` with absorbing bands of width
/// `sponge_width` at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperGrid {
    pub y_max: f64,
    pub ny: usize,
    pub dy: f64,
    pub sponge_width: f64,
}

impl HyperGrid {
    pub fn new(y_max: f64, ny: usize, sponge_width: f64) -> Result<Self> {
        if !(y_max.is_finite() && y_max > 0.0) {
            return Err(Error::InvalidGrid(format!("y_max = {y_max} must be positive")));
        }
        if ny < MIN_NY {
            return Err(Error::InvalidGrid(format!("ny = {ny} < {MIN_NY}")));
        }
        if !(sponge_width >= 0.0 && sponge_width < y_max / 4.0) {
            return Err(Error::InvalidGrid(format!(
                "sponge_width = {sponge_width} must lie in [0, y_max/4)"
            )));
        }
        Ok(Self { y_max, ny, dy: 2.0 * y_max / (ny - 1) as f64, sponge_width })
    }

    #[inline]
    pub fn y(&self, k: usize) -> f64 {
        -self.y_max + k as f64 * self.dy
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.ny).map(|k| self.y(k)).collect()
    }

    /// Indices with `|y| <= limit`.
    pub fn indices_within(&self, limit: f64) -> impl Iterator<Item = usize> + '_ {
        (0..self.ny).filter(move |&k| self.y(k).abs() <= limit + 1e-12)
    }

    /// Outside the damping bands.
    pub fn undamped_limit(&self) -> f64 {
        self.y_max - self.sponge_width
    }
}

/// Rescaled solution `(U, V)` on a hyperboloid `rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperState {
    pub rho: f64,
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
}

impl HyperState {
    pub fn zeros(rho: f64, ny: usize) -> Self {
        Self { rho, u: vec![Complex64::default(); ny], v: vec![Complex64::default(); ny] }
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `max_k (|U_k|^2 + |V_k|^2)^{1/2}`.
    pub fn peak(&self) -> f64 {
        self.u.iter().zip(&self.v).map(|(a, b)| (a.norm_sqr() + b.norm_sqr()).sqrt()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseFields {
    pub rho: f64,
    pub phi_plus: Vec<Complex64>,
    pub phi_minus: Vec<Complex64>,
    pub s_plus: Vec<Complex64>,
    pub s_minus: Vec<Complex64>,
}

impl PhaseFields {
    pub fn phi(&self, branch: Branch) -> &[Complex64] {
        match branch {
            Branch::Plus => &self.phi_plus,
            Branch::Minus => &self.phi_minus,
        }
    }

    pub fn s(&self, branch: Branch) -> &[Complex64] {
        match branch {
            Branch::Plus => &self.s_plus,
            Branch::Minus => &self.s_minus,
        }
    }
}

/// The two phase branches `phi_+` and `phi_-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Plus, Branch::Minus];

    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

pub fn cart_to_hyper(t: f64, x: f64) -> Result<(f64, f64)> {
    if !(t > x.abs()) {
        return Err(Error::OutsideCone { t, x });
    }
    let (minus, plus) = (t - x, t + x);
    Ok(((minus * plus).sqrt(), 0.5 * (plus / minus).ln()))
}

pub fn hyper_to_cart(rho: f64, y: f64) -> (f64, f64) {
    (rho * y.cosh(), rho * y.sinh())
}

/// `(U, V) = ((rho e^{-y})^{1/2} u, (rho e^{y})^{1/2} v)`.
#[inline]
pub fn lift_uv(u: Complex64, v: Complex64, rho: f64, y: f64) -> (Complex64, Complex64) {
    (u * (rho * (-y).exp()).sqrt(), v * (rho * y.exp()).sqrt())
}

/// Inverse of [`lift_uv`].
#[inline]
pub fn unlift_uv(big_u: Complex64, big_v: Complex64, rho: f64, y: f64) -> (Complex64, Complex64) {
    (big_u / (rho * (-y).exp()).sqrt(), big_v / (rho * y.exp()).sqrt())
}

/// Cubic Lagrange weights for nodes `0, 1, 2, 3` at position `s`.
#[inline]
fn cubic_weights(s: f64) -> [f64; 4] {
    let (a, b, c, d) = (s, s - 1.0, s - 2.0, s - 3.0);
    [-b * c * d / 6.0, a * c * d / 2.0, -a * b * d / 2.0, a * b * c / 6.0]
}

/// The four most recent Cartesian slices, oldest first.
#[derive(Debug, Clone)]
pub struct SliceWindow {
    slices: Vec<CartesianState>,
    len: usize,
    head: usize,
    first_complete: bool,
}

impl SliceWindow {
    pub fn new() -> Self {
        Self { slices: Vec::with_capacity(4), len: 0, head: 0, first_complete: false }
    }

    pub fn push(&mut self, state: &CartesianState) {
        if self.slices.len() < 4 {
            self.slices.push(state.clone());
        } else {
            let slot = &mut self.slices[self.head];
            slot.t = state.t;
            slot.u.copy_from_slice(&state.u);
            slot.v.copy_from_slice(&state.v);
        }
        self.head = (self.head + 1) % 4;
        self.first_complete = self.len == 3;
        self.len = (self.len + 1).min(4);
    }

    pub fn is_full(&self) -> bool {
        self.len == 4
    }

    /// `m`-th slice, oldest first; requires a full window.
    pub fn get(&self, m: usize) -> &CartesianState {
        &self.slices[(self.head + m) % 4]
    }
}

impl Default for SliceWindow {
    fn default() -> Self {
        Self::new()
    }
}

/// Incrementally interpolates a hyperboloid from a sliding [`SliceWindow`].
///
/// A target point is filled once its time lies in the central interval of
/// the window (or the leading/trailing interval of the first/last window),
/// with cubic interpolation in `x` on each slice and then in `t`.
#[derive(Debug, Clone)]
pub struct HyperboloidSampler {
    pub rho: f64,
    hgrid: HyperGrid,
    targets: Vec<(usize, f64, f64)>,
    values: Vec<(Complex64, Complex64)>,
    filled: Vec<bool>,
}

impl HyperboloidSampler {
    pub fn new(rho: f64, hgrid: &HyperGrid, grid: &CartesianGrid) -> Result<Self> {
        Self::within(rho, hgrid, grid, f64::INFINITY)
    }

    /// Only samples points with `|y| <= y_limit`; others stay zero.
    pub fn within(rho: f64, hgrid: &HyperGrid, grid: &CartesianGrid, y_limit: f64) -> Result<Self> {
        if !(rho >= 1.0) {
            return Err(Error::InvalidParameter(format!("rho = {rho} < 1")));
        }
        let targets: Vec<(usize, f64, f64)> = hgrid
            .indices_within(y_limit)
            .map(|k| {
                let (t, x) = hyper_to_cart(rho, hgrid.y(k));
                (k, t, x)
            })
            .collect();
        for &(_, t, x) in &targets {
            if x < grid.x_min || x > grid.x_max {
                return Err(Error::OutsideWindow { t, x });
            }
        }
        let n = targets.len();
        Ok(Self {
            rho,
            hgrid: hgrid.clone(),
            targets,
            values: vec![(Complex64::default(), Complex64::default()); n],
            filled: vec![false; n],
        })
    }

    /// Latest time this sampler needs.
    pub fn t_max(&self) -> f64 {
        self.targets.iter().map(|p| p.1).fold(0.0, f64::max)
    }

    pub fn is_complete(&self) -> bool {
        self.filled.iter().all(|&f| f)
    }

    /// Fills the targets covered by the current window; `last` marks the
    /// final window of the run.
    pub fn feed(&mut self, window: &SliceWindow, grid: &CartesianGrid, last: bool) {
        if !window.is_full() {
            return;
        }
        let times: [f64; 4] = std::array::from_fn(|m| window.get(m).t);
        let lo = if window.first_complete { times[0] } else { times[1] };
        let hi = if last { times[3] } else { times[2] };
        let dt = (times[3] - times[0]) / 3.0;
        for (n, &(_, t, x)) in self.targets.iter().enumerate() {
            if self.filled[n] {
                continue;
            }
            let in_range = t >= lo && (t < hi || (last && t <= hi + 1e-12 * hi.abs()));
            if !in_range {
                continue;
            }
            let wt = cubic_weights((t - times[0]) / dt);
            let pos = (x - grid.x_min) / grid.dx;
            let start = (pos.floor() as isize - 1).clamp(0, grid.nx as isize - 4) as usize;
            let wx = cubic_weights(pos - start as f64);
            let mut u = Complex64::default();
            let mut v = Complex64::default();
            for (m, &a) in wt.iter().enumerate() {
                let s = window.get(m);
                let mut su = Complex64::default();
                let mut sv = Complex64::default();
                for (q, &b) in wx.iter().enumerate() {
                    su += s.u[start + q] * b;
                    sv += s.v[start + q] * b;
                }
                u += su * a;
                v += sv * a;
            }
            self.values[n] = (u, v);
            self.filled[n] = true;
        }
    }

    pub fn finish(self) -> Result<HyperState> {
        if let Some(n) = self.filled.iter().position(|&f| !f) {
            let (_, t, x) = self.targets[n];
            return Err(Error::OutsideWindow { t, x });
        }
        let mut h = HyperState::zeros(self.rho, self.hgrid.ny);
        for (&(k, _, _), &(u, v)) in self.targets.iter().zip(&self.values) {
            let (big_u, big_v) = lift_uv(u, v, self.rho, self.hgrid.y(k));
            h.u[k] = big_u;
            h.v[k] = big_v;
        }
        let peak = h.peak();
        if peak > 0.0 {
            let ny = self.hgrid.ny;
            let edge = [0, 1, ny - 2, ny - 1]
                .iter()
                .map(|&k| (h.u[k].norm_sqr() + h.v[k].norm_sqr()).sqrt())
                .fold(0.0, f64::max);
            if edge > 1e-6 * peak {
                warn!(
                    "hyperboloid rho = {}: edge amplitude {:.2e} of peak, truncation will pollute the run",
                    self.rho,
                    edge / peak
                );
            }
        }
        Ok(h)
    }
}

/// Sliding window feeding a set of [`HyperboloidSampler`]s during a
/// Cartesian run.
#[derive(Debug, Clone, Default)]
pub struct SamplingObserver {
    pub window: SliceWindow,
    pub samplers: Vec<HyperboloidSampler>,
    final_step: Option<usize>,
}

impl SamplingObserver {
    pub fn new(samplers: Vec<HyperboloidSampler>, final_step: usize) -> Self {
        Self { window: SliceWindow::new(), samplers, final_step: Some(final_step) }
    }

    pub fn finish(self) -> Result<Vec<HyperState>> {
        self.samplers.into_iter().map(HyperboloidSampler::finish).collect()
    }
}

impl CartesianObserver for SamplingObserver {
    fn observe(&mut self, step: usize, state: &CartesianState, grid: &CartesianGrid) -> Result<()> {
        self.window.push(state);
        let last = self.final_step == Some(step);
        for s in &mut self.samplers {
            s.feed(&self.window, grid, last);
        }
        Ok(())
    }
}

/// Resamples a stored Cartesian history (ascending in `t`, uniform step)
/// onto the hyperboloid `rho`.
pub fn sample_hyperboloid(
    history: &[CartesianState],
    grid: &CartesianGrid,
    rho: f64,
    hgrid: &HyperGrid,
) -> Result<HyperState> {
    let mut sampler = HyperboloidSampler::new(rho, hgrid, grid)?;
    let mut window = SliceWindow::new();
    for (n, s) in history.iter().enumerate() {
        window.push(s);
        sampler.feed(&window, grid, n + 1 == history.len());
    }
    sampler.finish()
}

/// `phi_+- = e^{-+ i rho}(U +- V)` and the correction terms
/// `S_+- = -(1/(-+2i rho)) e^{-+2i rho} d_y phi_-+ - (c/(-+4 rho)) e^{-+4i rho} (conj(phi_+-) phi_-+) phi_-+`
/// with `c = coupling * RESONANT`.
pub fn phi_from_state(h: &HyperState, hgrid: &HyperGrid, coupling: f64) -> PhaseFields {
    let rho = h.rho;
    let e = Complex64::from_polar(1.0, -rho);
    let phi_plus: Vec<Complex64> = h.u.iter().zip(&h.v).map(|(a, b)| e * (a + b)).collect();
    let phi_minus: Vec<Complex64> = h.u.iter().zip(&h.v).map(|(a, b)| e.conj() * (a - b)).collect();
    let dp = stencil::d1(&phi_plus, hgrid.dy);
    let dm = stencil::d1(&phi_minus, hgrid.dy);
    let s_of = |sign: f64, own: &[Complex64], other: &[Complex64], d_other: &[Complex64]| -> Vec<Complex64> {
        let osc2 = Complex64::from_polar(1.0, -2.0 * sign * rho);
        let osc4 = Complex64::from_polar(1.0, -4.0 * sign * rho);
        let c_lin = -I * sign / (2.0 * rho);
        let c_cub = sign * coupling * RESONANT / (4.0 * rho);
        own.iter()
            .zip(other)
            .zip(d_other)
            .map(|((a, b), db)| c_lin * osc2 * db + c_cub * osc4 * (a.conj() * b) * b)
            .collect()
    };
    let s_plus = s_of(1.0, &phi_plus, &phi_minus, &dm);
    let s_minus = s_of(-1.0, &phi_minus, &phi_plus, &dp);
    PhaseFields { rho, phi_plus, phi_minus, s_plus, s_minus }
}

/// Right-hand side of the phase equation
/// `d_rho phi_+- = (ic/rho)|phi_+-|^2 phi_+- - (1/rho)[e^{-+2i rho} d_y phi_-+ + ic e^{-+4i rho}(conj(phi_+-) phi_-+) phi_-+]`.
pub fn phase_rhs(
    rho: f64,
    phi_plus: &[Complex64],
    phi_minus: &[Complex64],
    dy: f64,
    coupling: f64,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let c = coupling * RESONANT;
    let dp = stencil::d1(phi_plus, dy);
    let dm = stencil::d1(phi_minus, dy);
    let rhs = |sign: f64, own: &[Complex64], other: &[Complex64], d_other: &[Complex64]| -> Vec<Complex64> {
        let osc2 = Complex64::from_polar(1.0, -2.0 * sign * rho);
        let osc4 = Complex64::from_polar(1.0, -4.0 * sign * rho);
        own.iter()
            .zip(other)
            .zip(d_other)
            .map(|((a, b), db)| {
                (I * c * a.norm_sqr() * a - (osc2 * db + I * c * osc4 * (a.conj() * b) * b)) / rho
            })
            .collect()
    };
    (rhs(1.0, phi_plus, phi_minus, &dm), rhs(-1.0, phi_minus, phi_plus, &dp))
}

/// Sup over the undamped y-range of `|centered d_rho phi_+- - RHS|` at the
/// middle state. The three states must be equally spaced in `rho`.
pub fn phase_ode_residual(
    prev: &HyperState,
    mid: &HyperState,
    next: &HyperState,
    hgrid: &HyperGrid,
    coupling: f64,
) -> Result<(f64, f64)> {
    for h in [prev, mid, next] {
        if h.u.len() != hgrid.ny || h.v.len() != hgrid.ny {
            return Err(Error::GridMismatch(format!("state has {} cells, grid {}", h.u.len(), hgrid.ny)));
        }
    }
    let d1 = mid.rho - prev.rho;
    let d2 = next.rho - mid.rho;
    if !(d1 > 0.0 && (d1 - d2).abs() <= 1e-9 * d1) {
        return Err(Error::GridMismatch(format!("unequal rho spacing {d1} vs {d2}")));
    }
    let p0 = phi_from_state(prev, hgrid, coupling);
    let p1 = phi_from_state(mid, hgrid, coupling);
    let p2 = phi_from_state(next, hgrid, coupling);
    let (rp, rm) = phase_rhs(mid.rho, &p1.phi_plus, &p1.phi_minus, hgrid.dy, coupling);
    let limit = hgrid.undamped_limit();
    let sup = |a: &[Complex64], c: &[Complex64], rhs: &[Complex64]| {
        hgrid
            .indices_within(limit)
            .map(|k| ((c[k] - a[k]) / (2.0 * d1) - rhs[k]).norm())
            .fold(0.0, f64::max)
    };
    Ok((sup(&p0.phi_plus, &p2.phi_plus, &rp), sup(&p0.phi_minus, &p2.phi_minus, &rm)))
}
