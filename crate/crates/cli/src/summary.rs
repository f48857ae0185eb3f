//! The flat `summary.json` record and its pass/fail flags.

use serde_json::{Map, Value};
use thirring_core::diagnostics::ExponentFit;

use crate::config::RunConfig;
use crate::pipeline::{Analysis, ExteriorRow, SimulationRecord};

pub const CHARGE_DRIFT_MAX: f64 = 1e-9;
pub const CROSS_CHECK_MAX: f64 = 1e-3;
pub const RATE_MAX: f64 = -0.35;
pub const RESIDUAL_RATIO_MAX: f64 = 0.2;
pub const UNCORRECTED_SLOPE_MIN: f64 = -0.1;
pub const ENERGY_GROWTH_MAX: f64 = 0.05;
pub const GLOBAL_BOUND_FACTOR: f64 = 2.0;
pub const EXTERIOR_GROWTH_MAX: f64 = 1.1;
pub const EXTERIOR_T_MAX: f64 = 50.0;

/// Numbers recorded for one run; every flag is a function of these.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub charge_drift: f64,
    pub cross_check_error: Option<f64>,
    pub exponent_a_decay: Option<f64>,
    pub exponent_residual_corrected: Option<f64>,
    pub exponent_residual_uncorrected: Option<f64>,
    pub exponent_closure: Option<f64>,
    pub energy_growth: Option<f64>,
    pub residual_ratio_final: Option<f64>,
    pub sup_m_initial: f64,
    pub sup_m_max: f64,
    pub exterior_energy_ratio_max: Option<f64>,
    pub exterior_sup_ratio: Option<f64>,
    pub sigma_a_mismatch: f64,
    pub limit_charge: f64,
    pub e_ext: Vec<ExteriorRow>,
}

fn slope(f: &Option<ExponentFit>) -> Option<f64> {
    f.as_ref().map(|f| f.slope)
}

impl RunSummary {
    pub fn new(record: &SimulationRecord, analysis: &Analysis, exterior: &[ExteriorRow]) -> Self {
        let s = &analysis.series;
        let last = s.last();
        let residual_ratio_final =
            last.filter(|r| r.res_uncorrected > 0.0).map(|r| r.res_corrected / r.res_uncorrected);
        let sup_m_initial = s.first().map_or(0.0, |r| r.sup_m);
        let sup_m_max = s.iter().map(|r| r.sup_m).fold(0.0, f64::max);

        let first = exterior.first().copied();
        let considered: Vec<&ExteriorRow> = exterior.iter().filter(|r| r.t <= EXTERIOR_T_MAX * (1.0 + 1e-12)).collect();
        let exterior_energy_ratio_max = first
            .filter(|f| f.e_ext > 0.0)
            .map(|f| considered.iter().map(|r| r.e_ext / f.e_ext).fold(0.0, f64::max));
        let exterior_sup_ratio = first
            .filter(|f| f.sup_weighted > 0.0)
            .and_then(|f| considered.last().map(|r| r.sup_weighted / f.sup_weighted));
        let max_a = analysis.profile.max_a();
        Self {
            charge_drift: record.charge_drift,
            cross_check_error: record.cross_check_error,
            exponent_a_decay: slope(&analysis.fits.a_decay),
            exponent_residual_corrected: slope(&analysis.fits.residual_corrected),
            exponent_residual_uncorrected: slope(&analysis.fits.residual_uncorrected),
            exponent_closure: slope(&analysis.fits.closure),
            energy_growth: slope(&analysis.fits.energy_growth),
            residual_ratio_final,
            sup_m_initial,
            sup_m_max,
            exterior_energy_ratio_max,
            exterior_sup_ratio,
            sigma_a_mismatch: if max_a > 0.0 { analysis.profile.consistency_error() / max_a } else { 0.0 },
            limit_charge: analysis.profile.limit_charge(),
            e_ext: exterior.to_vec(),
        }
    }

    pub fn flags(&self) -> Vec<(&'static str, bool)> {
        let le = |v: Option<f64>, max: f64| v.is_some_and(|v| v <= max);
        vec![
            ("flag_charge_conservation", self.charge_drift <= CHARGE_DRIFT_MAX),
            ("flag_cross_check", le(self.cross_check_error, CROSS_CHECK_MAX)),
            ("flag_a_decay", le(self.exponent_a_decay, RATE_MAX)),
            (
                "flag_modified_scattering",
                le(self.exponent_residual_corrected, RATE_MAX) && le(self.exponent_closure, RATE_MAX),
            ),
            (
                "flag_log_phase",
                le(self.residual_ratio_final, RESIDUAL_RATIO_MAX)
                    && self.exponent_residual_uncorrected.is_some_and(|v| v >= UNCORRECTED_SLOPE_MIN),
            ),
            ("flag_energy_growth", self.energy_growth.is_some_and(|d| (0.0..=ENERGY_GROWTH_MAX).contains(&d))),
            ("flag_global_bound", self.sup_m_max <= GLOBAL_BOUND_FACTOR * self.sup_m_initial),
            (
                "flag_exterior",
                le(self.exterior_energy_ratio_max, EXTERIOR_GROWTH_MAX) && le(self.exterior_sup_ratio, EXTERIOR_GROWTH_MAX),
            ),
        ]
    }

    pub fn to_json(&self, config: &RunConfig) -> Value {
        let mut m = Map::new();
        let cfg = serde_json::to_value(config).expect("config serializes");
        if let Value::Object(sections) = cfg {
            for (section, body) in sections {
                if let Value::Object(keys) = body {
                    for (k, v) in keys {
                        m.insert(format!("config_{section}_{k}"), v);
                    }
                }
            }
        }
        let num = |v: Option<f64>| v.map_or(Value::Null, Value::from);
        m.insert("charge_drift".into(), self.charge_drift.into());
        m.insert("cross_check_error".into(), num(self.cross_check_error));
        m.insert("exponent_a_decay".into(), num(self.exponent_a_decay));
        m.insert("exponent_residual_corrected".into(), num(self.exponent_residual_corrected));
        m.insert("exponent_residual_uncorrected".into(), num(self.exponent_residual_uncorrected));
        m.insert("exponent_closure".into(), num(self.exponent_closure));
        m.insert("energy_growth".into(), num(self.energy_growth));
        m.insert("residual_ratio_final".into(), num(self.residual_ratio_final));
        m.insert("sup_m_initial".into(), self.sup_m_initial.into());
        m.insert("sup_m_max".into(), self.sup_m_max.into());
        m.insert("exterior_energy_ratio_max".into(), num(self.exterior_energy_ratio_max));
        m.insert("exterior_sup_ratio".into(), num(self.exterior_sup_ratio));
        m.insert("sigma_a_mismatch".into(), self.sigma_a_mismatch.into());
        m.insert("limit_charge".into(), self.limit_charge.into());
        m.insert(
            "e_ext".into(),
            Value::Array(self.e_ext.iter().map(|r| Value::from(vec![r.t, r.e_ext, r.sup_weighted])).collect()),
        );
        for (name, ok) in self.flags() {
            m.insert(name.into(), ok.into());
        }
        Value::Object(m)
    }
}

/// Numeric leaves of a JSON value with dotted paths, for golden comparisons.
pub fn numeric_fields(v: &Value) -> Vec<(String, f64)> {
    fn walk(prefix: String, v: &Value, out: &mut Vec<(String, f64)>) {
        match v {
            Value::Number(n) => out.push((prefix, n.as_f64().unwrap_or(f64::NAN))),
            Value::Array(a) => a.iter().enumerate().for_each(|(i, x)| walk(format!("{prefix}[{i}]"), x, out)),
            Value::Object(o) => o.iter().for_each(|(k, x)| walk(if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") }, x, out)),
            _ => {}
        }
    }
    let mut out = Vec::new();
    walk(String::new(), v, &mut out);
    out
}
