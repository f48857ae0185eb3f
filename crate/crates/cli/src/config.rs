//! Run configuration: a sectioned TOML file where every key has a default.
//! The defaults are the reference experiment.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thirring_core::hyperbolic::HyperGrid;
use thirring_core::model::{build_grid, Boundary, CartesianGrid, Family, InitialDataSpec};
use thirring_core::mol::{Integrator, MolConfig, SPONGE_STRENGTH};
use thirring_core::Execution;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    /// `zero_inflow` or `periodic`.
    pub boundary: String,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { x_min: -70.0, x_max: 70.0, nx: 28001, boundary: "zero_inflow".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// `zero`, `gaussian` or `sech`.
    pub family: String,
    pub amplitude: f64,
    pub width: f64,
    pub center: f64,
    pub k0: f64,
}

impl DataSection {
    fn zero() -> Self {
        Self { family: "zero".into(), amplitude: 0.0, width: 1.0, center: 0.0, k0: 0.0 }
    }

    pub fn spec(&self) -> Result<InitialDataSpec, CliError> {
        let family: Family = self.family.parse()?;
        let spec = InitialDataSpec {
            family,
            amplitude: self.amplitude,
            width: self.width,
            center: self.center,
            k0: self.k0,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl Default for DataSection {
    fn default() -> Self {
        Self { family: "gaussian".into(), amplitude: 0.5, width: 1.0, center: 0.0, k0: 0.0 }
    }
}

fn default_data_g() -> DataSection {
    DataSection::zero()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CartesianSection {
    pub t_final: f64,
    pub coupling: f64,
    /// Time between exterior diagnostics rows.
    pub exterior_interval: f64,
    /// Weight order `N` of the exterior energy.
    pub weight_order: u32,
    /// `parallel` or `sequential`.
    pub execution: String,
}

impl Default for CartesianSection {
    fn default() -> Self {
        Self { t_final: 62.0, coupling: 1.0, exterior_interval: 1.0, weight_order: 1, execution: "parallel".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperbolicSection {
    pub rho0: f64,
    pub rho_final: f64,
    pub y_max: f64,
    pub ny: usize,
    pub sponge_width: f64,
    pub sponge_strength: f64,
    pub cfl: f64,
    pub drho_max: f64,
    /// `lawson_rk4` or `rk4`.
    pub integrator: String,
    /// Second hyperboloid sampled from the Cartesian run and compared with
    /// the hyperbolic solver; 0 disables the check.
    pub cross_check_rho: f64,
    pub cross_check_y: f64,
}

impl Default for HyperbolicSection {
    fn default() -> Self {
        Self {
            rho0: 10.0,
            rho_final: 1e4,
            y_max: 2.5,
            ny: 2000,
            sponge_width: 0.25,
            sponge_strength: SPONGE_STRENGTH,
            cfl: 0.5,
            drho_max: 0.05,
            integrator: "lawson_rk4".into(),
            cross_check_rho: 20.0,
            cross_check_y: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScatteringSection {
    pub sample_ratio: f64,
    pub fit_min: f64,
    pub fit_max: f64,
    pub energy_fit_min: f64,
    pub energy_fit_max: f64,
    /// Interior range is `|y| <= y_max - interior_margin * sponge_width`.
    pub interior_margin: f64,
}

impl Default for ScatteringSection {
    fn default() -> Self {
        Self {
            sample_ratio: 10f64.powf(0.125),
            fit_min: 1e2,
            fit_max: 1e4,
            energy_fit_min: 10.0,
            energy_fit_max: 1e4,
            interior_margin: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub snapshots: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), snapshots: true }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub data_f: DataSection,
    #[serde(default = "default_data_g")]
    pub data_g: DataSection,
    pub cartesian: CartesianSection,
    pub hyperbolic: HyperbolicSection,
    pub scattering: ScatteringSection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn reference() -> Self {
        Self { data_g: DataSection::zero(), ..Self::default() }
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn boundary(&self) -> Result<Boundary, CliError> {
        Ok(self.grid.boundary.parse()?)
    }

    pub fn cartesian_grid(&self) -> Result<CartesianGrid, CliError> {
        Ok(build_grid(self.grid.x_min, self.grid.x_max, self.grid.nx, self.boundary()?)?)
    }

    pub fn hyper_grid(&self) -> Result<HyperGrid, CliError> {
        let h = &self.hyperbolic;
        Ok(HyperGrid::new(h.y_max, h.ny, h.sponge_width)?)
    }

    pub fn execution(&self) -> Result<Execution, CliError> {
        match self.cartesian.execution.as_str() {
            "parallel" => Ok(Execution::Parallel),
            "sequential" => Ok(Execution::Sequential),
            other => Err(CliError::Config(format!("unknown execution `{other}`"))),
        }
    }

    pub fn integrator(&self) -> Result<Integrator, CliError> {
        Ok(self.hyperbolic.integrator.parse()?)
    }

    pub fn interior(&self) -> f64 {
        self.hyperbolic.y_max - self.scattering.interior_margin * self.hyperbolic.sponge_width
    }

    pub fn mol_config(&self, samples: Vec<f64>) -> Result<MolConfig, CliError> {
        let h = &self.hyperbolic;
        let mut cfg = MolConfig::new(h.rho_final);
        cfg.cfl = h.cfl;
        cfg.drho_max = h.drho_max;
        cfg.sample_rhos = samples;
        cfg.coupling = self.cartesian.coupling;
        cfg.integrator = self.integrator()?;
        cfg.sponge_strength = h.sponge_strength;
        cfg.exec = self.execution()?;
        Ok(cfg)
    }

    /// Re-checks every cross-field constraint.
    pub fn validate(&self) -> Result<(), CliError> {
        let grid = self.cartesian_grid()?;
        let hgrid = self.hyper_grid()?;
        self.data_f.spec()?;
        self.data_g.spec()?;
        self.execution()?;
        self.integrator()?;
        let c = &self.cartesian;
        let h = &self.hyperbolic;
        let s = &self.scattering;
        let bad = |msg: String| Err(CliError::Config(msg));
        if !c.coupling.is_finite() {
            return bad(format!("coupling = {}", c.coupling));
        }
        if !(c.exterior_interval > 0.0) || c.weight_order < 1 {
            return bad("exterior_interval must be > 0 and weight_order >= 1".into());
        }
        if !(h.sponge_strength >= 0.0) {
            return bad(format!("sponge_strength = {}", h.sponge_strength));
        }
        self.mol_config(vec![h.rho_final])?.validate(h.rho0)?;
        if !(h.rho0 >= 1.0) {
            return bad(format!("rho0 = {} < 1", h.rho0));
        }
        // The first hyperboloid must fit inside the Cartesian run.
        let t_need = h.rho0 * h.y_max.cosh();
        let x_need = h.rho0 * h.y_max.sinh();
        if c.t_final < t_need {
            return bad(format!("t_final = {} does not reach the hyperboloid rho0 (needs {t_need:.4})", c.t_final));
        }
        if x_need > grid.x_max.min(-grid.x_min) {
            return bad(format!("grid [{}, {}] does not contain |x| <= {x_need:.4}", grid.x_min, grid.x_max));
        }
        if h.cross_check_rho > 0.0 {
            let tc = h.cross_check_rho * h.cross_check_y.cosh();
            if h.cross_check_rho <= h.rho0 || h.cross_check_rho > h.rho_final || tc > c.t_final {
                return bad(format!("cross_check_rho = {} not reachable from both stages", h.cross_check_rho));
            }
            if h.cross_check_y > hgrid.y_max {
                return bad("cross_check_y exceeds y_max".into());
            }
        }
        if !(s.sample_ratio > 1.0) {
            return bad(format!("sample_ratio = {} must exceed 1", s.sample_ratio));
        }
        if !(s.fit_min < s.fit_max && s.energy_fit_min < s.energy_fit_max) {
            return bad("fit windows must be non-empty".into());
        }
        if !(self.interior() > 0.0) {
            return bad("interior range is empty: reduce interior_margin or sponge_width".into());
        }
        Ok(())
    }
}
