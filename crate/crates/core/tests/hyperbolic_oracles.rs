use num_complex::Complex64;
use proptest::prelude::*;
use thirring_core::cartesian::{evolve, CartesianObserver, SplitStepPlan};
use thirring_core::hyperbolic::{
    hyper_to_cart, phase_ode_residual, phi_from_state, sample_hyperboloid, HyperGrid, HyperState, HyperboloidSampler,
    SamplingObserver, SliceWindow,
};
use thirring_core::mol::{evolve_rho, rhs, Integrator, MolConfig};
use thirring_core::Result;
use thirring_core::model::{build_grid, make_initial_data, Boundary, CartesianGrid, CartesianState, InitialDataSpec};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn manufactured_history(grid: &CartesianGrid, t_end: f64, f: impl Fn(f64, f64) -> (Complex64, Complex64)) -> Vec<CartesianState> {
    let n = ((t_end - 1.0) / grid.dx).ceil() as usize + 1;
    (0..n)
        .map(|m| {
            let t = 1.0 + m as f64 * grid.dx;
            let (u, v) = (0..grid.nx).map(|j| f(t, grid.x(j))).unzip();
            CartesianState { t, u, v }
        })
        .collect()
}

fn sampling_error(dx: f64, f: impl Fn(f64, f64) -> (Complex64, Complex64) + Copy) -> f64 {
    let nx = (20.0 / dx).round() as usize + 1;
    let grid = build_grid(-10.0, 10.0, nx, Boundary::ZeroInflow).unwrap();
    let hgrid = HyperGrid::new(1.5, 101, 0.25).unwrap();
    let rho = 3.0;
    let history = manufactured_history(&grid, 8.0, f);
    let h = sample_hyperboloid(&history, &grid, rho, &hgrid).unwrap();
    (0..hgrid.ny)
        .map(|k| {
            let y = hgrid.y(k);
            let (t, x) = hyper_to_cart(rho, y);
            let (u, v) = f(t, x);
            let ue = u * (rho * (-y).exp()).sqrt();
            let ve = v * (rho * y.exp()).sqrt();
            (h.u[k] - ue).norm().max((h.v[k] - ve).norm())
        })
        .fold(0.0, f64::max)
}

#[test]
fn sampling_is_exact_on_cubics() {
    let constant = |_: f64, _: f64| (Complex64::new(0.7, -0.2), Complex64::default());
    assert!(sampling_error(0.05, constant) <= 1e-13);
    let cubic = |t: f64, x: f64| {
        let p = 1.0 + 0.3 * x - 0.02 * x * x + 0.001 * x * x * x;
        let q = 0.5 - 0.1 * t + 0.01 * t * t * t;
        (Complex64::new(p * q, p), Complex64::new(q, -p * q))
    };
    let err = sampling_error(0.1, cubic);
    assert!(err <= 1e-10, "cubic interpolation error {err:.3e}");
}

#[test]
fn sampling_converges_at_fourth_order() {
    let smooth = |t: f64, x: f64| (Complex64::from_polar(1.0, 0.9 * x - 0.4 * t), Complex64::new((0.5 * x + t).sin(), 0.0));
    let e1 = sampling_error(0.1, smooth);
    let e2 = sampling_error(0.05, smooth);
    let order = (e1 / e2).log2();
    assert!(order >= 3.5, "order {order:.2} ({e1:.3e} -> {e2:.3e})");
}

/// Feeds every other slice and grid point of the run to a second sampler, so
/// the two samples differ only by interpolation on a `2 dx` lattice.
struct Decimated {
    grid: CartesianGrid,
    window: SliceWindow,
    sampler: HyperboloidSampler,
    final_step: usize,
}

impl CartesianObserver for Decimated {
    fn observe(&mut self, step: usize, state: &CartesianState, _: &CartesianGrid) -> Result<()> {
        if step.is_multiple_of(2) {
            let thin = CartesianState {
                t: state.t,
                u: state.u.iter().step_by(2).copied().collect(),
                v: state.v.iter().step_by(2).copied().collect(),
            };
            self.window.push(&thin);
            self.sampler.feed(&self.window, &self.grid, step == self.final_step);
        }
        Ok(())
    }
}

fn gaussian_sample(dx: f64, hgrid: &HyperGrid, decimate: bool) -> (HyperState, Option<HyperState>) {
    let nx = (100.0 / dx).round() as usize + 1;
    let grid = build_grid(-50.0, 50.0, nx, Boundary::ZeroInflow).unwrap();
    let s0 = make_initial_data(&InitialDataSpec::gaussian(0.5, 1.0, 0.0), &InitialDataSpec::zero(), &grid).unwrap();
    let plan = SplitStepPlan::new(&grid);
    let t_final = 48.0;
    let steps = plan.steps_between(1.0, t_final).unwrap();
    let mut obs = SamplingObserver::new(vec![HyperboloidSampler::within(20.0, hgrid, &grid, 1.5).unwrap()], steps);
    let coarse = build_grid(-50.0, 50.0, (nx - 1) / 2 + 1, Boundary::ZeroInflow).unwrap();
    let mut thin = Decimated {
        sampler: HyperboloidSampler::within(20.0, hgrid, &coarse, 1.5).unwrap(),
        grid: coarse,
        window: SliceWindow::new(),
        final_step: steps,
    };
    if decimate {
        assert_eq!(steps % 2, 0);
        evolve(s0, &grid, &plan, t_final, &mut [&mut obs, &mut thin]).unwrap();
    } else {
        evolve(s0, &grid, &plan, t_final, &mut [&mut obs]).unwrap();
    }
    let full = obs.finish().unwrap().pop().unwrap();
    (full, decimate.then(|| thin.sampler.finish().unwrap()))
}

fn sup_within(a: &HyperState, b: &HyperState, hgrid: &HyperGrid, limit: f64) -> f64 {
    hgrid
        .indices_within(limit)
        .map(|k| (a.u[k] - b.u[k]).norm().max((a.v[k] - b.v[k]).norm()))
        .fold(0.0, f64::max)
}

#[test]
fn gaussian_sample_converges() {
    let hgrid = HyperGrid::new(2.5, 501, 0.25).unwrap();
    let (s1, _) = gaussian_sample(0.02, &hgrid, false);
    let (s2, _) = gaussian_sample(0.01, &hgrid, false);
    let (s3, resampled) = gaussian_sample(0.005, &hgrid, true);
    let interpolation = sup_within(&s3, &resampled.unwrap(), &hgrid, 1.5);
    assert!(interpolation <= 1e-5, "resampling difference {interpolation:.3e}");
    let (d1, d2) = (sup_within(&s1, &s2, &hgrid, 1.5), sup_within(&s2, &s3, &hgrid, 1.5));
    assert!((3.2..=4.8).contains(&(d1 / d2)), "self-convergence ratio {:.3} ({d1:.3e} -> {d2:.3e})", d1 / d2);
}

/// Smooth localized profile on a hyperboloid.
fn profile(rho: f64, hgrid: &HyperGrid, eps: f64) -> HyperState {
    let ys = hgrid.ys();
    HyperState {
        rho,
        u: ys.iter().map(|&y| Complex64::from_polar(eps * (-y * y).exp(), 0.5 * y)).collect(),
        v: ys.iter().map(|&y| Complex64::new(0.6 * eps * (-(y - 0.3) * (y - 0.3)).exp(), 0.0)).collect(),
    }
}

fn snapshots(h0: HyperState, hgrid: &HyperGrid, cfg: &MolConfig) -> Vec<HyperState> {
    let mut out = Vec::new();
    let mut keep = |h: &HyperState, _: &HyperGrid| {
        out.push(h.clone());
        Ok(())
    };
    evolve_rho(h0, hgrid, cfg, &mut [&mut keep]).unwrap();
    out
}

fn phase_residual(dy: f64, drho: f64) -> (f64, f64) {
    let ny = (8.0 / dy).round() as usize + 1;
    let hgrid = HyperGrid::new(4.0, ny, 0.5).unwrap();
    let end = 11.0;
    let mut cfg = MolConfig::new(end);
    cfg.sample_rhos = vec![end - 2.0 * drho, end - drho, end];
    let s = snapshots(profile(10.0, &hgrid, 0.5), &hgrid, &cfg);
    let (rp, rm) = phase_ode_residual(&s[0], &s[1], &s[2], &hgrid, cfg.coupling).unwrap();
    let p = phi_from_state(&s[1], &hgrid, cfg.coupling);
    let sup = p.phi_plus.iter().chain(&p.phi_minus).map(|z| z.norm()).fold(0.0, f64::max);
    (rp.max(rm), sup)
}

#[test]
fn phase_equation_holds_on_solver_output() {
    let (coarse, _) = phase_residual(0.01, 0.1);
    let (fine, sup) = phase_residual(0.005, 0.05);
    assert!(fine <= 1e-3 * sup, "residual {fine:.3e} vs sup {sup:.3e}");
    let order = (coarse / fine).log2();
    assert!(order >= 1.9, "order {order:.2} ({coarse:.3e} -> {fine:.3e})");
}

#[test]
fn small_data_is_linear() {
    let hgrid = HyperGrid::new(4.0, 512, 0.5).unwrap();
    let mut cfg = MolConfig::new(100.0);
    let nonlinear = evolve_rho(profile(10.0, &hgrid, 1e-3), &hgrid, &cfg, &mut []).unwrap();
    cfg.coupling = 0.0;
    let linear = evolve_rho(profile(10.0, &hgrid, 1e-3), &hgrid, &cfg, &mut []).unwrap();
    let sup = linear.u.iter().chain(&linear.v).map(|z| z.norm()).fold(0.0, f64::max);
    let diff = (0..hgrid.ny)
        .map(|k| (nonlinear.u[k] - linear.u[k]).norm().max((nonlinear.v[k] - linear.v[k]).norm()))
        .fold(0.0, f64::max);
    assert!(diff <= 1e-5 * sup, "relative difference {:.3e}", diff / sup);
}

fn rk4_run(hgrid: &HyperGrid, drho: f64) -> HyperState {
    let mut cfg = MolConfig::new(12.0);
    cfg.integrator = Integrator::Rk4;
    cfg.drho_max = drho;
    cfg.cfl = 1.0;
    evolve_rho(profile(10.0, hgrid, 0.5), hgrid, &cfg, &mut []).unwrap()
}

fn state_diff(a: &HyperState, b: &HyperState) -> f64 {
    a.u.iter().zip(&b.u).chain(a.v.iter().zip(&b.v)).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn rk4_is_fourth_order_in_rho() {
    let hgrid = HyperGrid::new(4.0, 256, 0.5).unwrap();
    let reference = rk4_run(&hgrid, 0.1 / 16.0);
    let e1 = state_diff(&rk4_run(&hgrid, 0.1), &reference);
    let e2 = state_diff(&rk4_run(&hgrid, 0.025), &reference);
    let order = (e1 / e2).ln() / 4f64.ln();
    assert!((3.7..=4.3).contains(&order), "order {order:.3} ({e1:.3e} -> {e2:.3e})");
}

proptest! {
    #[test]
    fn mass_coupling_is_skew(ar in -1e3..1e3f64, ai in -1e3..1e3f64, br in -1e3..1e3f64, bi in -1e3..1e3f64) {
        let (a, b) = (Complex64::new(ar, ai), Complex64::new(br, bi));
        let s = I * (a.conj() * b + b.conj() * a);
        prop_assert!(s.re.abs() <= 1e-12 * (1.0 + a.norm() * b.norm()));
    }
}

#[test]
fn linear_semidiscrete_flow_conserves_mass() {
    let hgrid = HyperGrid::new(4.0, 801, 0.0).unwrap();
    let mut cfg = MolConfig::new(10.0);
    cfg.coupling = 0.0;
    cfg.sponge_strength = 0.0;
    let h = profile(10.0, &hgrid, 0.5);
    let (du, dv) = rhs(&h, &hgrid, &cfg);
    let rate: f64 = (0..hgrid.ny)
        .map(|k| 2.0 * ((h.u[k].conj() * du[k]).re + (h.v[k].conj() * dv[k]).re))
        .sum::<f64>()
        * hgrid.dy;
    assert!(rate.abs() <= 1e-10, "mass rate {rate:.3e}");
}

fn naive_rhs(h: &HyperState, dy: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = h.u.len();
    let d = |f: &[Complex64], k: usize| (f[k + 1] - f[k - 1]) / (2.0 * dy);
    let mut du = vec![Complex64::default(); n];
    let mut dv = du.clone();
    for k in 1..n - 1 {
        let (a, b) = (h.u[k], h.v[k]);
        du[k] = -d(&h.u, k) / h.rho + I * b + I * b.norm_sqr() * a / h.rho;
        dv[k] = d(&h.v, k) / h.rho + I * a + I * a.norm_sqr() * b / h.rho;
    }
    (du, dv)
}

fn rhs_gap(ny: usize) -> f64 {
    let hgrid = HyperGrid::new(3.0, ny, 0.0).unwrap();
    let ys = hgrid.ys();
    let h = HyperState {
        rho: 2.5,
        u: ys.iter().map(|&y| Complex64::new((2.0 * y).sin() + 0.3, (1.3 * y).cos()) * (-0.2 * y * y).exp()).collect(),
        v: ys.iter().map(|&y| Complex64::new(0.5 * (y - 0.4).cos(), -0.2 * (3.0 * y).sin())).collect(),
    };
    let cfg = MolConfig::new(10.0);
    let (du, dv) = rhs(&h, &hgrid, &cfg);
    let (nu, nv) = naive_rhs(&h, hgrid.dy);
    (2..ny - 2).map(|k| (du[k] - nu[k]).norm().max((dv[k] - nv[k]).norm())).fold(0.0, f64::max)
}

#[test]
fn rhs_matches_second_order_oracle() {
    let e1 = rhs_gap(301);
    let e2 = rhs_gap(601);
    assert!(e1 <= 1e-3, "gap {e1:.3e}");
    let order = (e1 / e2).log2();
    assert!((1.8..=2.2).contains(&order), "order {order:.3}");
}

#[test]
fn zero_history_samples_to_zero() {
    let grid = build_grid(-10.0, 10.0, 401, Boundary::ZeroInflow).unwrap();
    let hgrid = HyperGrid::new(1.5, 64, 0.25).unwrap();
    let history = manufactured_history(&grid, 8.0, |_, _| (Complex64::default(), Complex64::default()));
    let h = sample_hyperboloid(&history, &grid, 3.0, &hgrid).unwrap();
    assert!(h.u.iter().chain(&h.v).all(|z| z.norm() == 0.0));
}
