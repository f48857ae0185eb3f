//! Asymptotic profile extraction: limits `a_+-` of `|phi_+-|^2`, corrected
//! profiles `sigma_+-`, residuals with and without the logarithmic phase,
//! the `f_+-` reparametrization in `s = x/t`, and the predicted fields.

use num_complex::Complex64;

use crate::diagnostics::{fit_exponent, least_squares_line, EnergySeries, ExponentFit};
use crate::error::{Error, Result};
use crate::hyperbolic::{hyper_to_cart, Branch, HyperGrid, HyperState, PhaseFields, RESONANT};

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringProfile {
    pub y: Vec<f64>,
    /// Residuals and consistency checks use `|y| <= interior`.
    pub interior: f64,
    pub coupling: f64,
    pub a_plus: Vec<f64>,
    pub a_minus: Vec<f64>,
    pub sigma_plus: Vec<Complex64>,
    pub sigma_minus: Vec<Complex64>,
}

impl ScatteringProfile {
    pub fn a(&self, branch: Branch) -> &[f64] {
        match branch {
            Branch::Plus => &self.a_plus,
            Branch::Minus => &self.a_minus,
        }
    }

    pub fn sigma(&self, branch: Branch) -> &[Complex64] {
        match branch {
            Branch::Plus => &self.sigma_plus,
            Branch::Minus => &self.sigma_minus,
        }
    }

    pub fn interior_indices(&self) -> impl Iterator<Item = usize> + '_ {
        let lim = self.interior + 1e-12;
        (0..self.y.len()).filter(move |&k| self.y[k].abs() <= lim)
    }

    /// `sup_y | |sigma_+-|^2 - a_+- |` over the interior, both branches.
    pub fn consistency_error(&self) -> f64 {
        Branch::BOTH
            .iter()
            .flat_map(|&b| self.interior_indices().map(move |k| (self.sigma(b)[k].norm_sqr() - self.a(b)[k]).abs()))
            .fold(0.0, f64::max)
    }

    pub fn max_a(&self) -> f64 {
        self.a_plus.iter().chain(&self.a_minus).copied().fold(0.0, f64::max)
    }

    /// `int (a_+ + a_-)/2 dy` over the whole grid (trapezoid).
    pub fn limit_charge(&self) -> f64 {
        let n = self.y.len();
        if n < 2 {
            return 0.0;
        }
        let dy = (self.y[n - 1] - self.y[0]) / (n - 1) as f64;
        (0..n)
            .map(|k| {
                let w = if k == 0 || k + 1 == n { 0.5 } else { 1.0 };
                w * 0.5 * (self.a_plus[k] + self.a_minus[k])
            })
            .sum::<f64>()
            * dy
    }
}

/// Profiles `f_+-(s) = sigma_+-(y)/2` on `s = tanh y`.
#[derive(Debug, Clone, PartialEq)]
pub struct FProfile {
    pub s: Vec<f64>,
    pub coupling: f64,
    pub f_plus: Vec<Complex64>,
    pub f_minus: Vec<Complex64>,
}

impl FProfile {
    /// Linear interpolation of `(f_+, f_-)` at `s`.
    fn at(&self, s: f64) -> Option<(Complex64, Complex64)> {
        let n = self.s.len();
        if n == 0 || s < self.s[0] || s > self.s[n - 1] {
            return None;
        }
        let k = self.s.partition_point(|&q| q <= s);
        if k == 0 {
            return Some((self.f_plus[0], self.f_minus[0]));
        }
        if k == n {
            return Some((self.f_plus[n - 1], self.f_minus[n - 1]));
        }
        let (s0, s1) = (self.s[k - 1], self.s[k]);
        let w = (s - s0) / (s1 - s0);
        let lerp = |f: &[Complex64]| f[k - 1] * (1.0 - w) + f[k] * w;
        Some((lerp(&self.f_plus), lerp(&self.f_minus)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualRow {
    pub rho: f64,
    pub corrected: f64,
    pub uncorrected: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResidualSeries {
    pub rows: Vec<ResidualRow>,
}

impl ResidualSeries {
    pub fn push(&mut self, row: ResidualRow) -> Result<()> {
        if !(row.corrected >= 0.0 && row.uncorrected >= 0.0) {
            return Err(Error::InvalidParameter(format!("negative residual at rho = {}", row.rho)));
        }
        if self.rows.last().is_some_and(|last| row.rho <= last.rho) {
            return Err(Error::InvalidParameter(format!("rho = {} not increasing", row.rho)));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn corrected(&self) -> Result<EnergySeries> {
        EnergySeries::from_points("res_corrected", self.rows.iter().map(|r| (r.rho, r.corrected)).collect())
    }

    pub fn uncorrected(&self) -> Result<EnergySeries> {
        EnergySeries::from_points("res_uncorrected", self.rows.iter().map(|r| (r.rho, r.uncorrected)).collect())
    }
}

fn check_samples(samples: &[PhaseFields]) -> Result<usize> {
    let ny = samples.first().map_or(0, |s| s.phi_plus.len());
    for s in samples {
        if [s.phi_plus.len(), s.phi_minus.len(), s.s_plus.len(), s.s_minus.len()].iter().any(|&n| n != ny) {
            return Err(Error::GridMismatch(format!("sample at rho = {} has mismatched lengths", s.rho)));
        }
    }
    Ok(ny)
}

/// Pointwise least-squares fit `|phi_+-(rho_k, y)|^2 = a_+-(y) + b(y) rho_k^{-1/2}`,
/// returning `a_+-` clipped below at 0.
pub fn estimate_a(samples: &[PhaseFields]) -> Result<(Vec<f64>, Vec<f64>)> {
    if samples.len() < 4 {
        return Err(Error::Fit(format!("{} samples, need at least 4", samples.len())));
    }
    let lo = samples.iter().map(|s| s.rho).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.rho).fold(0.0, f64::max);
    if hi < 10.0 * lo * (1.0 - 1e-12) {
        return Err(Error::Fit(format!("samples span [{lo}, {hi}], less than a decade")));
    }
    let ny = check_samples(samples)?;
    let xs: Vec<f64> = samples.iter().map(|s| s.rho.powf(-0.5)).collect();
    let fit = |branch: Branch| -> Vec<f64> {
        let mut ys = vec![0.0; samples.len()];
        (0..ny)
            .map(|k| {
                for (y, s) in ys.iter_mut().zip(samples) {
                    *y = s.phi(branch)[k].norm_sqr();
                }
                least_squares_line(&xs, &ys).1.max(0.0)
            })
            .collect()
    };
    Ok((fit(Branch::Plus), fit(Branch::Minus)))
}

/// Pointwise average of `e^{-i c a_+- ln rho_k}(phi_+- - S_+-)` over the last
/// quarter of the samples, with `c = coupling * RESONANT`.
pub fn estimate_sigma(
    samples: &[PhaseFields],
    a_plus: &[f64],
    a_minus: &[f64],
    coupling: f64,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let ny = check_samples(samples)?;
    if a_plus.len() != ny || a_minus.len() != ny {
        return Err(Error::GridMismatch(format!("a has {} cells, samples {ny}", a_plus.len())));
    }
    if samples.is_empty() {
        return Ok((Vec::new(), Vec::new()));
    }
    let take = (samples.len() / 4).max(1);
    let tail = &samples[samples.len() - take..];
    let c = coupling * RESONANT;
    let avg = |branch: Branch, a: &[f64]| -> Vec<Complex64> {
        (0..ny)
            .map(|k| {
                tail.iter()
                    .map(|s| Complex64::from_polar(1.0, -c * a[k] * s.rho.ln()) * (s.phi(branch)[k] - s.s(branch)[k]))
                    .sum::<Complex64>()
                    / take as f64
            })
            .collect()
    };
    Ok((avg(Branch::Plus, a_plus), avg(Branch::Minus, a_minus)))
}

/// Runs both estimates and packages the profile.
pub fn extract_profile(
    samples: &[PhaseFields],
    y: Vec<f64>,
    interior: f64,
    coupling: f64,
) -> Result<ScatteringProfile> {
    let (a_plus, a_minus) = estimate_a(samples)?;
    if y.len() != a_plus.len() {
        return Err(Error::GridMismatch(format!("{} y-points, samples have {}", y.len(), a_plus.len())));
    }
    let (sigma_plus, sigma_minus) = estimate_sigma(samples, &a_plus, &a_minus, coupling)?;
    Ok(ScatteringProfile { y, interior, coupling, a_plus, a_minus, sigma_plus, sigma_minus })
}

/// `sup_y | |phi_+-|^2 - a_+- |` over the interior, both branches.
pub fn a_error(sample: &PhaseFields, profile: &ScatteringProfile) -> f64 {
    Branch::BOTH
        .iter()
        .flat_map(|&b| profile.interior_indices().map(move |k| (sample.phi(b)[k].norm_sqr() - profile.a(b)[k]).abs()))
        .fold(0.0, f64::max)
}

/// Corrected: `sup_y |phi - e^{i c |sigma|^2 ln rho} sigma|`.
/// Uncorrected: `min_theta sup_y |phi - e^{i theta} sigma|`.
pub fn asymptotic_residual(sample: &PhaseFields, profile: &ScatteringProfile, corrected: bool) -> Result<(f64, f64)> {
    let ny = profile.y.len();
    if sample.phi_plus.len() != ny || sample.phi_minus.len() != ny {
        return Err(Error::GridMismatch(format!("sample has {} cells, profile {ny}", sample.phi_plus.len())));
    }
    let idx: Vec<usize> = profile.interior_indices().collect();
    let c = profile.coupling * RESONANT;
    let ln_rho = sample.rho.ln();
    let one = |branch: Branch| -> f64 {
        let phi = sample.phi(branch);
        let sigma = profile.sigma(branch);
        if corrected {
            idx.iter()
                .map(|&k| (phi[k] - Complex64::from_polar(1.0, c * sigma[k].norm_sqr() * ln_rho) * sigma[k]).norm())
                .fold(0.0, f64::max)
        } else {
            let pts: Vec<(f64, Complex64)> =
                idx.iter().map(|&k| (phi[k].norm_sqr() + sigma[k].norm_sqr(), phi[k] * sigma[k].conj())).collect();
            min_over_phase(&pts)
        }
    };
    Ok((one(Branch::Plus), one(Branch::Minus)))
}

/// `min_theta sup_k |phi_k - e^{i theta} sigma_k|` from the gauge-invariant
/// pairs `(|phi_k|^2 + |sigma_k|^2, phi_k conj(sigma_k))`.
fn min_over_phase(pts: &[(f64, Complex64)]) -> f64 {
    if pts.is_empty() {
        return 0.0;
    }
    let objective = |theta: f64| {
        let e = Complex64::from_polar(1.0, -theta);
        pts.iter().map(|&(m, z)| (m - 2.0 * (e * z).re).max(0.0)).fold(0.0, f64::max)
    };
    const SCAN: usize = 720;
    let step = std::f64::consts::TAU / SCAN as f64;
    let best = (0..SCAN)
        .map(|i| i as f64 * step)
        .min_by(|a, b| objective(*a).total_cmp(&objective(*b)))
        .unwrap_or(0.0);
    let (mut lo, mut hi) = (best - step, best + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (objective(x1), objective(x2));
    for _ in 0..80 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = objective(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = objective(x2);
        }
    }
    f1.min(f2).min(objective(best)).sqrt()
}

pub fn f_from_sigma(profile: &ScatteringProfile) -> FProfile {
    FProfile {
        s: profile.y.iter().map(|y| y.tanh()).collect(),
        coupling: profile.coupling,
        f_plus: profile.sigma_plus.iter().map(|z| z * 0.5).collect(),
        f_minus: profile.sigma_minus.iter().map(|z| z * 0.5).collect(),
    }
}

/// Predicted interior fields
/// `u = (t-x)^{-1/2}[e^{i rho + i c' |f_+|^2 ln rho} f_+ + e^{-i rho + i c' |f_-|^2 ln rho} f_-]`,
/// `v = (t+x)^{-1/2}[... f_+ - ... f_-]`, with `f_+-` at `s = x/t` and
/// `c' = 4 coupling RESONANT`.
pub fn predict_uv(t: f64, x: f64, fp: &FProfile) -> Result<(Complex64, Complex64)> {
    if !(t > x.abs()) {
        return Err(Error::OutsideCone { t, x });
    }
    let (fp_s, fm_s) = fp.at(x / t).ok_or(Error::OutsideWindow { t, x })?;
    let rho = ((t - x) * (t + x)).sqrt();
    let c = 4.0 * fp.coupling * RESONANT * rho.ln();
    let plus = Complex64::from_polar(1.0, rho + c * fp_s.norm_sqr()) * fp_s;
    let minus = Complex64::from_polar(1.0, -rho + c * fm_s.norm_sqr()) * fm_s;
    Ok(((plus + minus) / (t - x).sqrt(), (plus - minus) / (t + x).sqrt()))
}

/// `sup_{|y| <= limit} max(|U - U_pred|, |V - V_pred|)` for a hyperbolic state,
/// with the predicted fields rescaled like the state.
pub fn closure_residual(h: &HyperState, hgrid: &HyperGrid, fp: &FProfile, limit: f64) -> Result<f64> {
    let mut sup: f64 = 0.0;
    for k in hgrid.indices_within(limit) {
        let y = hgrid.y(k);
        let (t, x) = hyper_to_cart(h.rho, y);
        let (u, v) = predict_uv(t, x, fp)?;
        let du = (h.u[k] - u * (t - x).sqrt()).norm();
        let dv = (h.v[k] - v * (t + x).sqrt()).norm();
        sup = sup.max(du).max(dv);
    }
    Ok(sup)
}

pub fn fit_residual_exponents(series: &ResidualSeries, window: (f64, f64)) -> Result<(ExponentFit, ExponentFit)> {
    Ok((fit_exponent(&series.corrected()?, window)?, fit_exponent(&series.uncorrected()?, window)?))
}
