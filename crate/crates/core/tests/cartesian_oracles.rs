use num_complex::Complex64;
use thirring_core::cartesian::{evolve, strang_step, transport_step, SplitStepPlan};
use thirring_core::diagnostics::charge;
use thirring_core::model::{build_grid, make_initial_data, Boundary, CartesianState, InitialDataSpec};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Right-hand side of the spatially homogeneous system.
fn ode(u: Complex64, v: Complex64) -> (Complex64, Complex64) {
    (I * (v + v.norm_sqr() * u), I * (u + u.norm_sqr() * v))
}

/// Adaptive embedded RK (Bogacki-Shampine 3(2)) to a tight tolerance.
fn ode_oracle(mut u: Complex64, mut v: Complex64, t_span: f64) -> (Complex64, Complex64) {
    let (mut t, mut h) = (0.0f64, 1e-3f64);
    let tol = 1e-13;
    while t < t_span {
        h = h.min(t_span - t);
        let (k1u, k1v) = ode(u, v);
        let (k2u, k2v) = ode(u + k1u * (0.5 * h), v + k1v * (0.5 * h));
        let (k3u, k3v) = ode(u + k2u * (0.75 * h), v + k2v * (0.75 * h));
        let nu = u + (k1u * 2.0 + k2u * 3.0 + k3u * 4.0) * (h / 9.0);
        let nv = v + (k1v * 2.0 + k2v * 3.0 + k3v * 4.0) * (h / 9.0);
        let (k4u, k4v) = ode(nu, nv);
        let eu = u + (k1u * 7.0 / 24.0 + k2u * 0.25 + k3u / 3.0 + k4u * 0.125) * h;
        let ev = v + (k1v * 7.0 / 24.0 + k2v * 0.25 + k3v / 3.0 + k4v * 0.125) * h;
        let err = (nu - eu).norm().max((nv - ev).norm());
        if err <= tol {
            t += h;
            u = nu;
            v = nv;
        }
        h *= (0.9 * (tol / err.max(1e-300)).powf(1.0 / 3.0)).clamp(0.2, 5.0);
    }
    (u, v)
}

#[test]
fn constant_state_matches_ode_oracle() {
    let grid = build_grid(0.0, 0.15, 16, Boundary::Periodic).unwrap();
    let (a, b) = (Complex64::new(0.6, 0.1), Complex64::new(0.2, 0.3));
    let state = CartesianState { t: 1.0, u: vec![a; 16], v: vec![b; 16] };
    let plan = SplitStepPlan::new(&grid);
    let t_final = 1.0 + 1000.0 * grid.dx;
    let out = evolve(state, &grid, &plan, t_final, &mut []).unwrap();
    let (ue, ve) = ode_oracle(a, b, 1000.0 * grid.dx);
    let scale = (ue.norm_sqr() + ve.norm_sqr()).sqrt();
    let err = (out.u[7] - ue).norm().max((out.v[7] - ve).norm()) / scale;
    assert!(err <= 10.0 * grid.dx * grid.dx, "relative error {err:.3e}");
    assert!(out.u.iter().all(|&z| z == out.u[0]));
}

fn gaussian_at(dx: f64, t_final: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let nx = (40.0 / dx).round() as usize + 1;
    let grid = build_grid(-20.0, 20.0, nx, Boundary::ZeroInflow).unwrap();
    let s0 = make_initial_data(&InitialDataSpec::gaussian(0.5, 1.0, 0.0), &InitialDataSpec::zero(), &grid).unwrap();
    let s = evolve(s0, &grid, &SplitStepPlan::new(&grid), t_final, &mut []).unwrap();
    (s.u, s.v)
}

fn sup_diff(coarse: &(Vec<Complex64>, Vec<Complex64>), fine: &(Vec<Complex64>, Vec<Complex64>), stride: usize) -> f64 {
    (0..coarse.0.len())
        .map(|j| (coarse.0[j] - fine.0[j * stride]).norm().max((coarse.1[j] - fine.1[j * stride]).norm()))
        .fold(0.0, f64::max)
}

#[test]
fn splitting_is_second_order() {
    let reference = gaussian_at(0.005, 10.0);
    let e1 = sup_diff(&gaussian_at(0.04, 10.0), &reference, 8);
    let e2 = sup_diff(&gaussian_at(0.02, 10.0), &reference, 4);
    let ratio = e1 / e2;
    assert!((3.2..=4.8).contains(&ratio), "error ratio {ratio:.3} ({e1:.3e} -> {e2:.3e})");
    let order = ratio.log2();
    assert!((1.7..=2.3).contains(&order), "observed order {order:.3}");
}

#[test]
fn charge_drift_is_rounding_only() {
    let grid = build_grid(-60.0, 60.0, 24001, Boundary::ZeroInflow).unwrap();
    let s0 = make_initial_data(&InitialDataSpec::gaussian(0.5, 1.0, 0.0), &InitialDataSpec::zero(), &grid).unwrap();
    let q0 = charge(&s0, &grid);
    let s = evolve(s0, &grid, &SplitStepPlan::new(&grid), 50.0, &mut []).unwrap();
    let drift = (charge(&s, &grid) - q0).abs() / q0;
    assert!(drift <= 1e-9, "drift {drift:.3e}");
}

#[test]
fn zero_data_stays_zero() {
    let grid = build_grid(-10.0, 10.0, 401, Boundary::ZeroInflow).unwrap();
    let s = evolve(CartesianState::zeros(1.0, grid.nx), &grid, &SplitStepPlan::new(&grid), 50.0, &mut []).unwrap();
    assert_eq!(s.t, 50.0);
    assert!(s.u.iter().chain(&s.v).all(|z| z.norm() == 0.0));
}

#[test]
fn periodic_transport_conserves_charge_exactly() {
    let grid = build_grid(-5.0, 5.0, 201, Boundary::Periodic).unwrap();
    let mut s = make_initial_data(&InitialDataSpec::gaussian(0.7, 0.5, 1.0), &InitialDataSpec::gaussian(0.3, 1.0, -1.0), &grid)
        .unwrap();
    let q0 = charge(&s, &grid);
    for _ in 0..137 {
        transport_step(&mut s, Boundary::Periodic);
    }
    // Periodic grids repeat the end point, so the trapezoid weights move with
    // the data; compare the plain sum instead.
    let sum = |s: &CartesianState| s.u.iter().chain(&s.v).map(|z| z.norm_sqr()).sum::<f64>();
    let s1 = make_initial_data(&InitialDataSpec::gaussian(0.7, 0.5, 1.0), &InitialDataSpec::gaussian(0.3, 1.0, -1.0), &grid)
        .unwrap();
    assert!((sum(&s) - sum(&s1)).abs() <= 4.0 * f64::EPSILON * sum(&s1));
    assert!(q0 > 0.0);
}

#[test]
fn zero_inflow_charge_never_increases() {
    let grid = build_grid(-4.0, 4.0, 801, Boundary::ZeroInflow).unwrap();
    let mut s = make_initial_data(&InitialDataSpec::gaussian(0.5, 1.0, 0.0), &InitialDataSpec::gaussian(0.5, 1.0, 0.5), &grid)
        .unwrap();
    let plan = SplitStepPlan::new(&grid);
    let mut q = charge(&s, &grid);
    for _ in 0..1200 {
        strang_step(&mut s, &plan);
        let next = charge(&s, &grid);
        assert!(next <= q * (1.0 + 1e-13), "{next} > {q}");
        q = next;
    }
    assert!(q < 0.5 * charge(&make_initial_data(&InitialDataSpec::gaussian(0.5, 1.0, 0.0), &InitialDataSpec::gaussian(0.5, 1.0, 0.5), &grid).unwrap(), &grid));
}

#[test]
fn initial_data_is_deterministic() {
    let grid = build_grid(-30.0, 30.0, 6001, Boundary::ZeroInflow).unwrap();
    let f = InitialDataSpec::gaussian(0.4, 1.3, 0.2);
    let a = make_initial_data(&f, &f, &grid).unwrap();
    let b = make_initial_data(&f, &f, &grid).unwrap();
    assert!(a.u.iter().zip(&b.u).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
}
