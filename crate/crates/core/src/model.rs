//! Grids, states, initial-data families and the weighted data norm.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Smallest admissible lattice.
pub const MIN_NX: usize = 16;

/// Profile values below this fraction of the amplitude are set to zero.
const TRUNCATION: f64 = 1e-16;

/// Boundary threshold for the data norm, relative to the peak.
const NORM_BOUNDARY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Vacated cells are filled with zeros.
    ZeroInflow,
    /// Cell `nx - 1` neighbours cell `0`.
    Periodic,
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero_inflow" => Ok(Boundary::ZeroInflow),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::InvalidParameter(format!("unknown boundary `{other}`"))),
        }
    }
}

/// Uniform x-lattice `x_j = x_min + j dx`, `j = 0..nx`.
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub dx: f64,
    pub boundary: Boundary,
}

impl CartesianGrid {
    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|j| self.x(j)).collect()
    }
}

pub fn build_grid(x_min: f64, x_max: f64, nx: usize, boundary: Boundary) -> Result<CartesianGrid> {
    if !x_min.is_finite() || !x_max.is_finite() {
        return Err(Error::InvalidGrid("bounds must be finite".into()));
    }
    if x_max <= x_min {
        return Err(Error::InvalidGrid(format!("empty interval [{x_min}, {x_max}]")));
    }
    if nx < MIN_NX {
        return Err(Error::InvalidGrid(format!("nx = {nx} < {MIN_NX}")));
    }
    let dx = (x_max - x_min) / (nx - 1) as f64;
    Ok(CartesianGrid { x_min, x_max, nx, dx, boundary })
}

/// Solution `(u, v)` of the Dirac system at time `t` on a `CartesianGrid`.
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianState {
    pub t: f64,
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
}

impl CartesianState {
    pub fn zeros(t: f64, nx: usize) -> Self {
        Self { t, u: vec![Complex64::default(); nx], v: vec![Complex64::default(); nx] }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `max_j (|u_j| + |v_j|)`.
    pub fn peak(&self) -> f64 {
        self.u.iter().zip(&self.v).map(|(a, b)| a.norm() + b.norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Zero,
    Gaussian,
    Sech,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Family::Zero),
            "gaussian" => Ok(Family::Gaussian),
            "sech" => Ok(Family::Sech),
            other => Err(Error::InvalidParameter(format!("unknown data family `{other}`"))),
        }
    }
}

/// One component of the initial data at `t = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialDataSpec {
    pub family: Family,
    pub amplitude: f64,
    pub width: f64,
    pub center: f64,
    pub k0: f64,
}

impl InitialDataSpec {
    pub fn zero() -> Self {
        Self { family: Family::Zero, amplitude: 0.0, width: 1.0, center: 0.0, k0: 0.0 }
    }

    pub fn gaussian(amplitude: f64, width: f64, center: f64) -> Self {
        Self { family: Family::Gaussian, amplitude, width, center, k0: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.amplitude, self.width, self.center, self.k0].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("initial data parameters must be finite".into()));
        }
        if self.amplitude < 0.0 {
            return Err(Error::InvalidParameter(format!("amplitude {} < 0", self.amplitude)));
        }
        if self.width <= 0.0 {
            return Err(Error::InvalidParameter(format!("width {} <= 0", self.width)));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        let s = (x - self.center) / self.width;
        let envelope = match self.family {
            Family::Zero => return Complex64::default(),
            Family::Gaussian => (-s * s).exp(),
            Family::Sech => 1.0 / s.cosh(),
        };
        if envelope < TRUNCATION {
            return Complex64::default();
        }
        Complex64::from_polar(self.amplitude * envelope, self.k0 * x)
    }
}

/// Samples `u(1) = f`, `v(1) = g` on the grid.
pub fn make_initial_data(
    spec_f: &InitialDataSpec,
    spec_g: &InitialDataSpec,
    grid: &CartesianGrid,
) -> Result<CartesianState> {
    spec_f.validate()?;
    spec_g.validate()?;
    let xs = grid.xs();
    Ok(CartesianState {
        t: 1.0,
        u: xs.iter().map(|&x| spec_f.eval(x)).collect(),
        v: xs.iter().map(|&x| spec_g.eval(x)).collect(),
    })
}

/// Japanese bracket `(1 + x^2)^{1/2}`.
#[inline]
pub fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataNormReport {
    pub order: u32,
    pub value: f64,
    /// Quadrature and differentiation used, for the record.
    pub method: &'static str,
}

/// `sum_{c in (u, v)} sum_{k <= N + 4} || d^k (<x>^{3 + N/2} c) ||_{L^2}`.
///
/// Derivatives are spectral; Fourier modes at the round-off floor are dropped
/// before weighting by `|xi|^{2k}`, otherwise high derivatives would be
/// dominated by amplified rounding noise.
pub fn weighted_sobolev_data_norm(
    state: &CartesianState,
    grid: &CartesianGrid,
    order: u32,
) -> Result<DataNormReport> {
    if order < 1 {
        return Err(Error::InvalidParameter("data norm order must be >= 1".into()));
    }
    if state.len() != grid.nx {
        return Err(Error::GridMismatch(format!("state has {} cells, grid {}", state.len(), grid.nx)));
    }
    let power = 3.0 + order as f64 / 2.0;
    let max_deriv = order as usize + 4;
    let mut value = 0.0;
    for comp in [&state.u, &state.v] {
        let weighted: Vec<Complex64> =
            comp.iter().enumerate().map(|(j, &c)| c * bracket(grid.x(j)).powf(power)).collect();
        let peak = weighted.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            continue;
        }
        if grid.boundary == Boundary::ZeroInflow {
            let edge = weighted[0].norm().max(weighted[weighted.len() - 1].norm());
            if edge > NORM_BOUNDARY_TOL * peak {
                return Err(Error::BoundaryPollution { ratio: edge / peak });
            }
        }
        value += derivative_norms(&weighted, grid, max_deriv).iter().sum::<f64>();
    }
    Ok(DataNormReport {
        order,
        value,
        method: "fft derivatives (zero-padded, round-off floor 1e-13 dropped); Parseval rectangle rule",
    })
}

/// `|| d^k f ||_{L^2}` for `k = 0..=max_deriv`.
fn derivative_norms(f: &[Complex64], grid: &CartesianGrid, max_deriv: usize) -> Vec<f64> {
    let m = match grid.boundary {
        Boundary::Periodic => f.len(),
        Boundary::ZeroInflow => (2 * f.len()).next_power_of_two(),
    };
    let mut buf = vec![Complex64::default(); m];
    buf[..f.len()].copy_from_slice(f);
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);

    let floor = 1e-13 * buf.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let period = m as f64 * grid.dx;
    let mut sums = vec![0.0; max_deriv + 1];
    for (i, z) in buf.iter().enumerate() {
        let p = z.norm_sqr();
        if z.norm() <= floor {
            continue;
        }
        let n = if i <= m / 2 { i as f64 } else { i as f64 - m as f64 };
        let xi = 2.0 * std::f64::consts::PI * n / period;
        let odd_nyquist = m % 2 == 0 && i == m / 2;
        let mut w = 1.0;
        for (k, s) in sums.iter_mut().enumerate() {
            if !(odd_nyquist && k % 2 == 1) {
                *s += w * p;
            }
            w *= xi * xi;
        }
    }
    // Parseval: dx * sum_j |g_j|^2 = dx / m * sum |ghat|^2.
    sums.into_iter().map(|s| (s * grid.dx / m as f64).sqrt()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_spacing() {
        let g = build_grid(-1.0, 1.0, 201, Boundary::ZeroInflow).unwrap();
        assert_relative_eq!(g.dx, 0.01, max_relative = 1e-14);
        let g = build_grid(0.0, 10.0, 11, Boundary::Periodic);
        assert!(g.is_err(), "nx = 11 is below the minimum lattice");
        let g = build_grid(0.0, 15.0, 16, Boundary::Periodic).unwrap();
        assert_eq!(g.dx, 1.0);
    }

    #[test]
    fn grid_rejects_degenerate_input() {
        assert!(build_grid(1.0, 1.0, 100, Boundary::ZeroInflow).is_err());
        assert!(build_grid(0.0, f64::INFINITY, 100, Boundary::ZeroInflow).is_err());
        assert!(build_grid(0.0, 1.0, 15, Boundary::ZeroInflow).is_err());
    }

    #[test]
    fn zero_family_gives_zero_state() {
        let g = build_grid(-5.0, 5.0, 101, Boundary::ZeroInflow).unwrap();
        let s = make_initial_data(&InitialDataSpec::zero(), &InitialDataSpec::zero(), &g).unwrap();
        assert_eq!(s.t, 1.0);
        assert!(s.u.iter().chain(&s.v).all(|z| *z == Complex64::default()));
    }

    #[test]
    fn gaussian_peak_value() {
        let g = build_grid(-5.0, 5.0, 101, Boundary::ZeroInflow).unwrap();
        let f = InitialDataSpec::gaussian(0.5, 1.0, 0.0);
        let s = make_initial_data(&f, &InitialDataSpec::zero(), &g).unwrap();
        assert_eq!(s.u[50], Complex64::new(0.5, 0.0));
    }

    #[test]
    fn sech_and_modulation() {
        let spec = InitialDataSpec { family: Family::Sech, amplitude: 2.0, width: 0.5, center: 1.0, k0: 3.0 };
        let z = spec.eval(1.5);
        assert_relative_eq!(z.norm(), 2.0 / 1.0f64.cosh(), max_relative = 1e-15);
        assert_relative_eq!(z.arg(), 4.5 - 2.0 * std::f64::consts::PI, max_relative = 1e-14);
    }

    #[test]
    fn invalid_specs_rejected() {
        let g = build_grid(-5.0, 5.0, 101, Boundary::ZeroInflow).unwrap();
        let bad = InitialDataSpec::gaussian(-0.1, 1.0, 0.0);
        assert!(make_initial_data(&bad, &InitialDataSpec::zero(), &g).is_err());
        let bad = InitialDataSpec::gaussian(0.1, 0.0, 0.0);
        assert!(make_initial_data(&InitialDataSpec::zero(), &bad, &g).is_err());
    }

    #[test]
    fn data_norm_zero_and_homogeneous() {
        let g = build_grid(-15.0, 15.0, 1501, Boundary::ZeroInflow).unwrap();
        let zero = make_initial_data(&InitialDataSpec::zero(), &InitialDataSpec::zero(), &g).unwrap();
        assert_eq!(weighted_sobolev_data_norm(&zero, &g, 2).unwrap().value, 0.0);

        let one = make_initial_data(&InitialDataSpec::gaussian(0.1, 1.0, 0.0), &InitialDataSpec::zero(), &g)
            .unwrap();
        let two = make_initial_data(&InitialDataSpec::gaussian(0.2, 1.0, 0.0), &InitialDataSpec::zero(), &g)
            .unwrap();
        let a = weighted_sobolev_data_norm(&one, &g, 1).unwrap().value;
        let b = weighted_sobolev_data_norm(&two, &g, 1).unwrap().value;
        assert!(a > 0.0);
        assert_relative_eq!(b, 2.0 * a, max_relative = 1e-9);
    }

    #[test]
    fn data_norm_monotone_in_order() {
        let g = build_grid(-20.0, 20.0, 2001, Boundary::ZeroInflow).unwrap();
        let s = make_initial_data(
            &InitialDataSpec::gaussian(0.3, 1.0, 0.5),
            &InitialDataSpec::gaussian(0.1, 0.7, -0.5),
            &g,
        )
        .unwrap();
        let vals: Vec<f64> = (1..=4).map(|n| weighted_sobolev_data_norm(&s, &g, n).unwrap().value).collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]), "{vals:?}");
    }

    #[test]
    fn data_norm_flags_boundary_pollution() {
        let g = build_grid(-3.0, 3.0, 301, Boundary::ZeroInflow).unwrap();
        let s = make_initial_data(&InitialDataSpec::gaussian(1.0, 1.0, 0.0), &InitialDataSpec::zero(), &g)
            .unwrap();
        assert!(matches!(weighted_sobolev_data_norm(&s, &g, 1), Err(Error::BoundaryPollution { .. })));
    }
}
