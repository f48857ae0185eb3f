//! The simulate and analyze stages.

use std::fs;
use std::path::Path;
use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};
use thirring_core::cartesian::{evolve, CartesianObserver, SplitStepPlan};
use thirring_core::diagnostics::{
    charge, exterior_energy_flat, fit_exponent, interior_energy_within, sup_m, sup_weighted_uv, EnergySeries, ExponentFit,
};
use thirring_core::hyperbolic::{phi_from_state, HyperGrid, HyperState, HyperboloidSampler, SamplingObserver};
use thirring_core::model::{make_initial_data, weighted_sobolev_data_norm, CartesianGrid, CartesianState};
use thirring_core::mol::{evolve_rho, geometric_samples, HyperObserver};
use thirring_core::scattering::{
    a_error, asymptotic_residual, closure_residual, extract_profile, f_from_sigma, FProfile, ScatteringProfile,
};

use crate::artifacts::{self, Row};
use crate::config::RunConfig;
use crate::error::CliError;

/// Facts from the simulate stage that the snapshots do not carry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub charge_initial: f64,
    pub charge_final: f64,
    pub charge_drift: f64,
    pub data_norm: f64,
    pub cartesian_steps: usize,
    pub cross_check_error: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExteriorRow {
    pub t: f64,
    pub e_ext: f64,
    pub sup_weighted: f64,
}

struct ExteriorObserver {
    every: usize,
    order: u32,
    coupling: f64,
    rows: Vec<ExteriorRow>,
}

impl CartesianObserver for ExteriorObserver {
    fn cadence(&self) -> usize {
        self.every
    }

    fn observe(&mut self, _: usize, state: &CartesianState, grid: &CartesianGrid) -> thirring_core::Result<()> {
        self.rows.push(ExteriorRow {
            t: state.t,
            e_ext: exterior_energy_flat(state, grid, self.order, self.coupling),
            sup_weighted: sup_weighted_uv(state, grid),
        });
        Ok(())
    }
}

struct Progress {
    every: usize,
    total: usize,
}

impl CartesianObserver for Progress {
    fn cadence(&self) -> usize {
        self.every
    }

    fn observe(&mut self, step: usize, state: &CartesianState, _: &CartesianGrid) -> thirring_core::Result<()> {
        info!("cartesian: step {step}/{} t = {:.3}", self.total, state.t);
        Ok(())
    }
}

fn prepare_dir(out: &Path) -> Result<(), CliError> {
    let snap = out.join(artifacts::SNAPSHOTS);
    if snap.exists() {
        fs::remove_dir_all(&snap)?;
    }
    fs::create_dir_all(&snap)?;
    Ok(())
}

/// Cartesian stage, hyperbolic stage, and the per-sample artifacts.
pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<SimulationRecord, CliError> {
    cfg.validate()?;
    let grid = cfg.cartesian_grid()?;
    let hgrid = cfg.hyper_grid()?;
    let coupling = cfg.cartesian.coupling;
    let exec = cfg.execution()?;
    prepare_dir(out)?;
    fs::write(out.join(artifacts::CONFIG), cfg.to_toml())?;

    let state0 = make_initial_data(&cfg.data_f.spec()?, &cfg.data_g.spec()?, &grid)?;
    let data_norm = weighted_sobolev_data_norm(&state0, &grid, cfg.cartesian.weight_order)?.value;
    let charge_initial = charge(&state0, &grid);
    info!("data: weighted norm {data_norm:.6e}, charge {charge_initial:.12e}");

    let plan = SplitStepPlan::new(&grid).with_coupling(coupling).with_exec(exec);
    let steps = plan.steps_between(state0.t, cfg.cartesian.t_final)?;
    let h = &cfg.hyperbolic;
    let mut samplers = vec![HyperboloidSampler::new(h.rho0, &hgrid, &grid)?];
    if h.cross_check_rho > 0.0 {
        samplers.push(HyperboloidSampler::within(h.cross_check_rho, &hgrid, &grid, h.cross_check_y)?);
    }
    let mut sampling = SamplingObserver::new(samplers, steps);
    let mut exterior = ExteriorObserver {
        every: ((cfg.cartesian.exterior_interval / grid.dx).round() as usize).max(1),
        order: cfg.cartesian.weight_order,
        coupling,
        rows: Vec::new(),
    };
    let mut progress = Progress { every: (steps / 10).max(1), total: steps };
    let clock = Instant::now();
    let final_state = evolve(state0, &grid, &plan, cfg.cartesian.t_final, &mut [&mut sampling, &mut exterior, &mut progress])?;
    let charge_final = charge(&final_state, &grid);
    let charge_drift = if charge_initial > 0.0 { (charge_final - charge_initial).abs() / charge_initial } else { 0.0 };
    info!("cartesian: {steps} steps in {:.1}s, relative charge drift {charge_drift:.3e}", clock.elapsed().as_secs_f64());

    let mut sampled = sampling.finish()?.into_iter();
    let h0 = sampled.next().expect("first hyperboloid");
    let cross_check_error = match sampled.next() {
        Some(reference) => {
            let mut mol = cfg.mol_config(vec![h.cross_check_rho])?;
            mol.rho_final = h.cross_check_rho;
            let evolved = evolve_rho(h0.clone(), &hgrid, &mol, &mut [])?;
            let err = hgrid
                .indices_within(h.cross_check_y)
                .map(|k| (evolved.u[k] - reference.u[k]).norm().max((evolved.v[k] - reference.v[k]).norm()))
                .fold(0.0, f64::max);
            info!("cross-check at rho = {}: sup difference {err:.3e}", h.cross_check_rho);
            Some(err)
        }
        None => None,
    };

    let samples = geometric_samples(h.rho0, h.rho_final, cfg.scattering.sample_ratio)?;
    let mol = cfg.mol_config(samples)?;
    let ys = hgrid.ys();
    let mut states: Vec<HyperState> = Vec::new();
    let mut writer = |s: &HyperState, _: &HyperGrid| -> thirring_core::Result<()> {
        info!("hyperbolic: rho = {:.4}, M = {:.6e}", s.rho, sup_m(s));
        states.push(s.clone());
        Ok(())
    };
    let clock = Instant::now();
    evolve_rho(h0, &hgrid, &mol, &mut [&mut writer as &mut dyn HyperObserver])?;
    info!("hyperbolic: {} samples in {:.1}s", states.len(), clock.elapsed().as_secs_f64());
    for (i, s) in states.iter().enumerate() {
        artifacts::write_snapshot(out, i, s, &ys)?;
    }

    let record = SimulationRecord {
        charge_initial,
        charge_final,
        charge_drift,
        data_norm,
        cartesian_steps: steps,
        cross_check_error,
    };
    fs::write(out.join(artifacts::RUN), serde_json::to_string_pretty(&record).expect("record serializes") + "\n")?;
    let ext: Vec<Row> = exterior.rows.iter().map(|r| vec![Some(r.t), Some(r.e_ext), Some(r.sup_weighted)]).collect();
    artifacts::write_csv(&out.join(artifacts::EXTERIOR), &artifacts::EXTERIOR_COLUMNS, &ext)?;

    let analysis = analyze_samples(cfg, &hgrid, &states)?;
    analysis.write_series_and_profiles(out)?;
    Ok(record)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub rho: f64,
    pub e_int: f64,
    pub sup_m: f64,
    pub res_corrected: f64,
    pub res_uncorrected: f64,
    pub a_err_sup: f64,
    pub closure: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fits {
    pub a_decay: Option<ExponentFit>,
    pub residual_corrected: Option<ExponentFit>,
    pub residual_uncorrected: Option<ExponentFit>,
    pub closure: Option<ExponentFit>,
    pub energy_growth: Option<ExponentFit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub series: Vec<SeriesRow>,
    pub profile: ScatteringProfile,
    pub fprofile: FProfile,
    pub fits: Fits,
}

fn fit_column(label: &str, series: &[SeriesRow], window: (f64, f64), col: impl Fn(&SeriesRow) -> f64) -> Option<ExponentFit> {
    let s = EnergySeries::from_points(label, series.iter().map(|r| (r.rho, col(r))).collect()).ok()?;
    fit_exponent(&s, window).ok()
}

/// Profile extraction, residuals and fits from the hyperboloid samples.
pub fn analyze_samples(cfg: &RunConfig, hgrid: &HyperGrid, states: &[HyperState]) -> Result<Analysis, CliError> {
    let coupling = cfg.cartesian.coupling;
    let sc = &cfg.scattering;
    let window = (sc.fit_min, sc.fit_max);
    if let Some(s) = states.iter().find(|s| s.u.len() != hgrid.ny || s.v.len() != hgrid.ny) {
        return Err(CliError::Artifact(format!("snapshot at rho = {} does not match ny = {}", s.rho, hgrid.ny)));
    }
    let phases: Vec<_> = states.iter().map(|h| phi_from_state(h, hgrid, coupling)).collect();
    let in_window: Vec<_> = phases
        .iter()
        .filter(|p| p.rho >= window.0 * (1.0 - 1e-12) && p.rho <= window.1 * (1.0 + 1e-12))
        .cloned()
        .collect();
    let profile = extract_profile(&in_window, hgrid.ys(), cfg.interior(), coupling)
        .map_err(|e| CliError::Artifact(format!("profile extraction: {e}")))?;
    let fprofile = f_from_sigma(&profile);

    let mut series = Vec::with_capacity(states.len());
    for (h, p) in states.iter().zip(&phases) {
        let (cp, cm) = asymptotic_residual(p, &profile, true)?;
        let (up, um) = asymptotic_residual(p, &profile, false)?;
        series.push(SeriesRow {
            rho: h.rho,
            e_int: interior_energy_within(h, hgrid, cfg.interior()),
            sup_m: sup_m(h),
            res_corrected: cp.max(cm),
            res_uncorrected: up.max(um),
            a_err_sup: a_error(p, &profile),
            closure: closure_residual(h, hgrid, &fprofile, cfg.interior())?,
        });
    }
    let fits = Fits {
        a_decay: fit_column("a_err_sup", &series, window, |r| r.a_err_sup),
        residual_corrected: fit_column("res_corrected", &series, window, |r| r.res_corrected),
        residual_uncorrected: fit_column("res_uncorrected", &series, window, |r| r.res_uncorrected),
        closure: fit_column("closure", &series, window, |r| r.closure),
        energy_growth: fit_column("e_int", &series, (sc.energy_fit_min, sc.energy_fit_max), |r| r.e_int),
    };
    Ok(Analysis { series, profile, fprofile, fits })
}

impl Analysis {
    pub fn write_series_and_profiles(&self, out: &Path) -> Result<(), CliError> {
        let rows: Vec<Row> = self
            .series
            .iter()
            .map(|r| {
                [r.rho, r.e_int, r.sup_m, r.res_corrected, r.res_uncorrected, r.a_err_sup].into_iter().map(Some).collect()
            })
            .collect();
        artifacts::write_csv(&out.join(artifacts::SERIES), &artifacts::SERIES_COLUMNS, &rows)?;
        let p = &self.profile;
        let rows: Vec<Row> = (0..p.y.len())
            .map(|k| {
                [
                    p.y[k],
                    p.a_plus[k],
                    p.a_minus[k],
                    p.sigma_plus[k].re,
                    p.sigma_plus[k].im,
                    p.sigma_minus[k].re,
                    p.sigma_minus[k].im,
                ]
                .into_iter()
                .map(Some)
                .collect()
            })
            .collect();
        artifacts::write_csv(&out.join(artifacts::PROFILES), &artifacts::PROFILE_COLUMNS, &rows)
    }

    pub fn write_fprofile(&self, out: &Path) -> Result<(), CliError> {
        let f = &self.fprofile;
        let rows: Vec<Row> = (0..f.s.len())
            .map(|k| [f.s[k], f.f_plus[k].re, f.f_plus[k].im, f.f_minus[k].re, f.f_minus[k].im].into_iter().map(Some).collect())
            .collect();
        artifacts::write_csv(&out.join(artifacts::FPROFILE), &artifacts::FPROFILE_COLUMNS, &rows)
    }
}

/// Everything the analyze stage reads back from an output directory.
pub struct Artifacts {
    pub config: RunConfig,
    pub record: SimulationRecord,
    pub exterior: Vec<ExteriorRow>,
    pub states: Vec<HyperState>,
}

pub fn load_artifacts(out: &Path) -> Result<Artifacts, CliError> {
    let config = RunConfig::load(&out.join(artifacts::CONFIG)).map_err(|e| CliError::Artifact(e.to_string()))?;
    let run = out.join(artifacts::RUN);
    let text = fs::read_to_string(&run).map_err(|e| CliError::Artifact(format!("cannot read {}: {e}", run.display())))?;
    let record: SimulationRecord =
        serde_json::from_str(&text).map_err(|e| CliError::Artifact(format!("{}: {e}", run.display())))?;
    let exterior = artifacts::read_dense(&out.join(artifacts::EXTERIOR), &artifacts::EXTERIOR_COLUMNS)?
        .into_iter()
        .map(|r| ExteriorRow { t: r[0], e_ext: r[1], sup_weighted: r[2] })
        .collect();
    let (ys, states) = artifacts::read_snapshots(out)?;
    let hgrid = config.hyper_grid().map_err(|e| CliError::Artifact(e.to_string()))?;
    if ys.len() != hgrid.ny {
        return Err(CliError::Artifact(format!("snapshots have {} points, config ny = {}", ys.len(), hgrid.ny)));
    }
    Ok(Artifacts { config, record, exterior, states })
}
