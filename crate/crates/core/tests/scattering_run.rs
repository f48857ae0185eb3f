use num_complex::Complex64;
use thirring_core::diagnostics::hyper_charge;
use thirring_core::hyperbolic::{phi_from_state, Branch, HyperGrid, HyperState, PhaseFields};
use thirring_core::mol::{evolve_rho, geometric_samples, MolConfig};
use thirring_core::scattering::{estimate_a, extract_profile, ScatteringProfile};

struct Run {
    hgrid: HyperGrid,
    samples: Vec<PhaseFields>,
    last: HyperState,
}

fn run() -> Run {
    let hgrid = HyperGrid::new(4.0, 801, 0.5).unwrap();
    let ys = hgrid.ys();
    let h0 = HyperState {
        rho: 10.0,
        u: ys.iter().map(|&y| Complex64::from_polar(0.5 * (-y * y).exp(), 0.5 * y)).collect(),
        v: ys.iter().map(|&y| Complex64::new(0.3 * (-(y - 0.3) * (y - 0.3)).exp(), 0.0)).collect(),
    };
    let mut cfg = MolConfig::new(1e4);
    cfg.sample_rhos = geometric_samples(10.0, 1e4, 10f64.powf(0.125)).unwrap();
    let mut samples = Vec::new();
    let mut keep = |h: &HyperState, g: &HyperGrid| {
        samples.push(phi_from_state(h, g, 1.0));
        Ok(())
    };
    let last = evolve_rho(h0, &hgrid, &cfg, &mut [&mut keep]).unwrap();
    Run { hgrid, samples, last }
}

fn window(samples: &[PhaseFields], lo: f64) -> Vec<PhaseFields> {
    samples.iter().filter(|s| s.rho >= lo * (1.0 - 1e-12)).cloned().collect()
}

fn profile(r: &Run) -> ScatteringProfile {
    extract_profile(&window(&r.samples, 100.0), r.hgrid.ys(), 2.5, 1.0).unwrap()
}

/// `sup_y |g(rho_2) - g(rho_1)|` with `g = e^{-i c a ln rho}(phi - S)`.
fn phase_drift(r: &Run, p: &ScatteringProfile, c: f64, i1: usize, i2: usize) -> f64 {
    let (s1, s2) = (&r.samples[i1], &r.samples[i2]);
    let g = |s: &PhaseFields, b: Branch, k: usize| {
        Complex64::from_polar(1.0, -c * p.a(b)[k] * s.rho.ln()) * (s.phi(b)[k] - s.s(b)[k])
    };
    Branch::BOTH
        .iter()
        .flat_map(|&b| p.interior_indices().map(move |k| (g(s2, b, k) - g(s1, b, k)).norm()))
        .fold(0.0, f64::max)
}

#[test]
fn extracted_profile_is_consistent() {
    let r = run();
    let p = profile(&r);
    let max_a = p.max_a();
    assert!(max_a > 0.01, "max a {max_a}");

    let mismatch = p.consistency_error() / max_a;
    assert!(mismatch <= 0.02, "|sigma|^2 vs a mismatch {mismatch:.4}");

    let charge = hyper_charge(&r.last, &r.hgrid);
    let link = (p.limit_charge() - charge).abs() / charge;
    assert!(link <= 0.03, "limit charge {} vs {charge}: {link:.4}", p.limit_charge());

    let (ap, am) = estimate_a(&window(&r.samples, 10f64.powf(2.5))).unwrap();
    let shift = p
        .interior_indices()
        .map(|k| (ap[k] - p.a_plus[k]).abs().max((am[k] - p.a_minus[k]).abs()))
        .fold(0.0, f64::max)
        / max_a;
    assert!(shift <= 0.02, "a depends on the fit window: {shift:.4}");

    // The resonant phase rate is a quarter of |phi|^2; twice that leaves a
    // drift the quarter rate removes.
    let (i1, i2) = (r.samples.len() - 9, r.samples.len() - 1);
    let quarter = phase_drift(&r, &p, 0.25, i1, i2);
    let half = phase_drift(&r, &p, 0.5, i1, i2);
    assert!(half >= 5.0 * quarter, "drift with rate 1/2 {half:.3e} vs 1/4 {quarter:.3e}");
}
