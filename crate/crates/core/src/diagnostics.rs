//! Monitored quantities: charge, exterior weights and weighted energies, the
//! boost field `Z = t d_x + x d_t`, interior energy, the sup bound `M(rho)`,
//! and log-log exponent fits.
//!
//! Time derivatives are always taken from the equation, never by differencing
//! slices, so every exterior diagnostic needs a single time slice.

use log::warn;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hyperbolic::{HyperGrid, HyperState};
use crate::model::{bracket, CartesianGrid, CartesianState};
use crate::stencil;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Trapezoid rule for `int (|u|^2 + |v|^2) dx`.
pub fn charge(state: &CartesianState, grid: &CartesianGrid) -> f64 {
    let n = state.len();
    let mut s = 0.0;
    for j in 0..n {
        let w = if j == 0 || j + 1 == n { 0.5 } else { 1.0 };
        s += w * (state.u[j].norm_sqr() + state.v[j].norm_sqr());
    }
    s * grid.dx
}

/// Trapezoid rule for `int (|U|^2 + |V|^2) dy`.
pub fn hyper_charge(h: &HyperState, hgrid: &HyperGrid) -> f64 {
    trapezoid(h.u.iter().zip(&h.v).map(|(a, b)| a.norm_sqr() + b.norm_sqr()), hgrid.dy)
}

fn trapezoid(vals: impl ExactSizeIterator<Item = f64>, h: f64) -> f64 {
    let n = vals.len();
    vals.enumerate().map(|(j, f)| if j == 0 || j + 1 == n { 0.5 * f } else { f }).sum::<f64>() * h
}

/// `(N, j)` with `0 <= j <= N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeightSpec {
    pub order: u32,
    pub j: u32,
}

impl WeightSpec {
    pub fn new(order: u32, j: u32) -> Result<Self> {
        if order < 1 || j > order {
            return Err(Error::InvalidParameter(format!("weight index j = {j} not in [0, N = {order}]")));
        }
        Ok(Self { order, j })
    }
}

/// `w_j = (t + |x|)^{N-j} (|x| - t + 1)^j`.
pub fn weight_w(t: f64, x: f64, spec: WeightSpec) -> f64 {
    if bracket(x) < t {
        warn!("weight evaluated inside the cone at (t = {t}, x = {x})");
    }
    let ax = x.abs();
    (t + ax).powi((spec.order - spec.j) as i32) * (ax - t + 1.0).powi(spec.j as i32)
}

/// `c_0 = 1`, `c_j = 2(N - j + 1)/j c_{j-1}`.
pub fn c_sequence(order: u32) -> Vec<f64> {
    let mut c = vec![1.0];
    for j in 1..=order {
        let prev = c[j as usize - 1];
        c.push(2.0 * (order - j + 1) as f64 / j as f64 * prev);
    }
    c
}

/// `d_t u` and `d_t v` from the equation, given `d_x u` and `d_x v`.
fn time_derivatives(
    u: &[Complex64],
    v: &[Complex64],
    ux: &[Complex64],
    vx: &[Complex64],
    coupling: f64,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let du = (0..u.len()).map(|j| -ux[j] + I * (v[j] + coupling * v[j].norm_sqr() * u[j])).collect();
    let dv = (0..u.len()).map(|j| vx[j] + I * (u[j] + coupling * u[j].norm_sqr() * v[j])).collect();
    (du, dv)
}

/// `Z u = t d_x u + x d_t u` (and likewise for `v`), with `d_t` substituted
/// from the equation and `d_x` by fourth-order differences.
pub fn vector_field_z(
    state: &CartesianState,
    grid: &CartesianGrid,
    coupling: f64,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let ux = stencil::d1(&state.u, grid.dx);
    let vx = stencil::d1(&state.v, grid.dx);
    let (ut, vt) = time_derivatives(&state.u, &state.v, &ux, &vx, coupling);
    let t = state.t;
    let zu = (0..state.len()).map(|j| ux[j] * t + ut[j] * grid.x(j)).collect();
    let zv = (0..state.len()).map(|j| vx[j] * t + vt[j] * grid.x(j)).collect();
    (zu, zv)
}

/// Square root of the flat-slice exterior energy
/// `sum_psi int_{<x> >= t} 1/2 (|d_t psi|^2 + |d_x psi|^2 + |psi|^2) sum_{j<=N} w_j dx`
/// over `psi in {u, v, Zu, Zv}`.
pub fn exterior_energy_flat(state: &CartesianState, grid: &CartesianGrid, order: u32, coupling: f64) -> f64 {
    let n = state.len();
    let t = state.t;
    let (u, v) = (&state.u, &state.v);
    let ux = stencil::d1(u, grid.dx);
    let vx = stencil::d1(v, grid.dx);
    let (ut, vt) = time_derivatives(u, v, &ux, &vx, coupling);
    let utx = stencil::d1(&ut, grid.dx);
    let vtx = stencil::d1(&vt, grid.dx);
    // Second time derivatives, again from the equation.
    let utt: Vec<Complex64> = (0..n)
        .map(|j| {
            -utx[j] + I * (vt[j] + coupling * (2.0 * (v[j].conj() * vt[j]).re * u[j] + v[j].norm_sqr() * ut[j]))
        })
        .collect();
    let vtt: Vec<Complex64> = (0..n)
        .map(|j| {
            vtx[j] + I * (ut[j] + coupling * (2.0 * (u[j].conj() * ut[j]).re * v[j] + u[j].norm_sqr() * vt[j]))
        })
        .collect();
    let zu: Vec<Complex64> = (0..n).map(|j| ux[j] * t + ut[j] * grid.x(j)).collect();
    let zv: Vec<Complex64> = (0..n).map(|j| vx[j] * t + vt[j] * grid.x(j)).collect();
    let zux = stencil::d1(&zu, grid.dx);
    let zvx = stencil::d1(&zv, grid.dx);

    let peak = state.peak();
    if peak > 0.0 {
        let edge = (u[0].norm() + v[0].norm()).max(u[n - 1].norm() + v[n - 1].norm());
        if edge > 1e-10 * peak {
            warn!("t = {t}: exterior region not contained in the grid (edge {:.2e} of peak)", edge / peak);
        }
    }

    let mut total = 0.0;
    for j in 0..n {
        let x = grid.x(j);
        if bracket(x) < t {
            continue;
        }
        let w: f64 = (0..=order).map(|i| weight_w_unchecked(t, x, order, i)).sum();
        let zut = ux[j] + utx[j] * t + utt[j] * x;
        let zvt = vx[j] + vtx[j] * t + vtt[j] * x;
        let density = [
            (ut[j], ux[j], u[j]),
            (vt[j], vx[j], v[j]),
            (zut, zux[j], zu[j]),
            (zvt, zvx[j], zv[j]),
        ]
        .iter()
        .map(|(a, b, c)| a.norm_sqr() + b.norm_sqr() + c.norm_sqr())
        .sum::<f64>();
        total += 0.5 * density * w;
    }
    (total * grid.dx).sqrt()
}

fn weight_w_unchecked(t: f64, x: f64, order: u32, j: u32) -> f64 {
    let ax = x.abs();
    (t + ax).powi((order - j) as i32) * (ax - t + 1.0).powi(j as i32)
}

/// `sup_{<x> >= t} <x>^{1/2} (|u| + |v|)`.
pub fn sup_weighted_uv(state: &CartesianState, grid: &CartesianGrid) -> f64 {
    (0..state.len())
        .filter(|&j| bracket(grid.x(j)) >= state.t)
        .map(|j| bracket(grid.x(j)).sqrt() * (state.u[j].norm() + state.v[j].norm()))
        .fold(0.0, f64::max)
}

/// `sum_{k<=3} ||d_y^k U||_{L^2} + ||d_y^k V||_{L^2}`.
pub fn interior_energy(h: &HyperState, hgrid: &HyperGrid) -> f64 {
    interior_energy_within(h, hgrid, f64::INFINITY)
}

/// [`interior_energy`] with the norms taken over `|y| <= limit` only. The
/// derivatives are still computed on the whole grid.
pub fn interior_energy_within(h: &HyperState, hgrid: &HyperGrid, limit: f64) -> f64 {
    let idx: Vec<usize> = hgrid.indices_within(limit).collect();
    let mut total = 0.0;
    for field in [&h.u, &h.v] {
        let mut d = field.clone();
        for k in 0..=3 {
            if k > 0 {
                d = stencil::d1(&d, hgrid.dy);
            }
            total += trapezoid(idx.iter().map(|&j| d[j].norm_sqr()), hgrid.dy).sqrt();
        }
    }
    total
}

/// `M(rho) = sup_y (|U|^2 + |V|^2)^{1/2}`.
pub fn sup_m(h: &HyperState) -> f64 {
    h.peak()
}

/// Labelled `(abscissa, value)` series with increasing abscissae.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnergySeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl EnergySeries {
    pub fn new(label: impl Into<String>) -> Self {
        Self { label: label.into(), points: Vec::new() }
    }

    pub fn from_points(label: impl Into<String>, points: Vec<(f64, f64)>) -> Result<Self> {
        let mut s = Self::new(label);
        for (x, y) in points {
            s.push(x, y)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, x: f64, value: f64) -> Result<()> {
        if !(value.is_finite() && value >= 0.0 && x.is_finite()) {
            return Err(Error::InvalidParameter(format!("{}: bad sample ({x}, {value})", self.label)));
        }
        if let Some(&(last, _)) = self.points.last() {
            if x <= last {
                return Err(Error::InvalidParameter(format!("{}: abscissa {x} not increasing", self.label)));
            }
        }
        self.points.push((x, value));
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS of the log-log residuals.
    pub residual: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// Least-squares line through `(ln x, ln value)` for samples in `window`.
pub fn fit_exponent(series: &EnergySeries, window: (f64, f64)) -> Result<ExponentFit> {
    let (lo, hi) = window;
    let pts: Vec<(f64, f64)> = series
        .points
        .iter()
        .copied()
        .filter(|&(x, _)| x >= lo * (1.0 - 1e-12) && x <= hi * (1.0 + 1e-12))
        .collect();
    if pts.len() < 5 {
        return Err(Error::Fit(format!("{}: {} samples in window, need 5", series.label, pts.len())));
    }
    if let Some(&(x, y)) = pts.iter().find(|p| p.1 <= 0.0) {
        return Err(Error::Fit(format!("{}: non-positive value {y} at {x}", series.label)));
    }
    let lx: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept) = least_squares_line(&lx, &ly);
    let n = pts.len() as f64;
    let rms = (lx.iter().zip(&ly).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum::<f64>() / n).sqrt();
    Ok(ExponentFit {
        slope,
        intercept,
        residual: rms,
        window: (pts[0].0, pts[pts.len() - 1].0),
        samples: pts.len(),
    })
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn least_squares_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}
