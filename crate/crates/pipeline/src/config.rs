//! Flat key/value run configuration.
//!
//! Frequencies are given in Hz and converted to rad/s on load. The pull
//! coefficients `G*_Hz_per_nm` are converted to rad/s per metre.

use std::f64::consts::PI;
use std::path::PathBuf;

use fano_core::lineshape::{DEFAULT_DISPLACEMENT_SCALE, DEFAULT_PROMINENCE};
use fano_core::{GridSpec, Method, PhysicalParams, Topology};
use thiserror::Error;
use toml::{Table, Value};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config key `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

pub const KEYS: &[&str] = &[
    "m1_kg",
    "m2_kg",
    "Omega_m_Hz",
    "gamma_Hz",
    "G1_Hz_per_nm",
    "G2_Hz_per_nm",
    "kappa_Hz",
    "eta",
    "P_c_W",
    "P_p_W",
    "lambda_c_m",
    "Delta1_over_Om",
    "Delta2_over_Om",
    "topology",
    "g_over_Om",
    "grid_min",
    "grid_max",
    "grid_points",
    "prominence",
    "scale_xbar",
    "fig5_grid_min",
    "fig5_grid_max",
    "fig5_grid_points",
    "fig5_g_min",
    "fig5_g_max",
    "fig5_g_points",
];

/// Tunneling rates of the reflection panels.
pub const PANEL_G: [f64; 6] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.6];

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationConfig {
    pub grid: GridSpec,
    pub g_min: f64,
    pub g_max: f64,
    pub g_points: usize,
}

impl Default for SeparationConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec {
                omega_min_over_om: 0.9,
                omega_max_over_om: 1.1,
                n_points: 8001,
            },
            g_min: 0.4,
            g_max: 1.0,
            g_points: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: PhysicalParams,
    pub topology: Topology,
    pub grid: GridSpec,
    /// `None` when the document does not set `g_over_Om`.
    pub g_list: Option<Vec<f64>>,
    pub method: Method,
    pub output_dir: PathBuf,
    pub emit_svg: bool,
    pub prominence: f64,
    pub scale_xbar: f64,
    pub separation: SeparationConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: PhysicalParams::paper_preset(),
            topology: Topology::DoubleMovable,
            grid: GridSpec::default(),
            g_list: None,
            method: Method::MatrixSolve,
            output_dir: PathBuf::from("."),
            emit_svg: false,
            prominence: DEFAULT_PROMINENCE,
            scale_xbar: DEFAULT_DISPLACEMENT_SCALE,
            separation: SeparationConfig::default(),
        }
    }
}

impl RunConfig {
    /// Tunneling rates for per-g spectra.
    pub fn panel_g(&self) -> Vec<f64> {
        self.g_list.clone().unwrap_or_else(|| PANEL_G.to_vec())
    }

    /// Tunneling rates for the intensity table.
    pub fn sweep_g(&self) -> Vec<f64> {
        self.g_list
            .clone()
            .unwrap_or_else(|| (0..=20).map(|k| k as f64 / 20.0).collect())
    }
}

struct Reader {
    table: Table,
}

impl Reader {
    fn float(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.table.remove(key) {
            None => Ok(None),
            Some(Value::Float(v)) => Ok(Some(v)),
            Some(Value::Integer(v)) => Ok(Some(v as f64)),
            Some(other) => Err(invalid(key, format!("expected a number, got {}", other.type_str()))),
        }
    }

    fn count(&mut self, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.table.remove(key) {
            None => Ok(None),
            Some(Value::Integer(v)) if v >= 0 => Ok(Some(v as usize)),
            Some(other) => Err(invalid(key, format!("expected a non-negative integer, got {other}"))),
        }
    }

    fn string(&mut self, key: &str) -> Result<Option<String>, ConfigError> {
        match self.table.remove(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(other) => Err(invalid(key, format!("expected a string, got {}", other.type_str()))),
        }
    }

    fn float_list(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.table.remove(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .into_iter()
                .map(|v| match v {
                    Value::Float(f) => Ok(f),
                    Value::Integer(i) => Ok(i as f64),
                    other => Err(invalid(key, format!("list entries must be numbers, got {other}"))),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(other) => Err(invalid(key, format!("expected a list, got {}", other.type_str()))),
        }
    }
}

fn require(key: &str, v: f64, ok: bool, what: &str) -> Result<f64, ConfigError> {
    if ok && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(key, format!("{what}, got {v}")))
    }
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    require(key, v, v > 0.0, "must be > 0")
}

fn non_negative(key: &str, v: f64) -> Result<f64, ConfigError> {
    require(key, v, v >= 0.0, "must be >= 0")
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string().trim_end().to_string()))?;
    if let Some(key) = table.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(ConfigError::UnknownKey(key.clone()));
    }
    let mut r = Reader { table };
    let mut cfg = RunConfig::default();
    let p = &mut cfg.params;

    if let Some(v) = r.float("m1_kg")? {
        p.mass1 = positive("m1_kg", v)?;
    }
    if let Some(v) = r.float("m2_kg")? {
        p.mass2 = positive("m2_kg", v)?;
    }
    if let Some(v) = r.float("Omega_m_Hz")? {
        let w = 2.0 * PI * positive("Omega_m_Hz", v)?;
        p.omega1 = w;
        p.omega2 = w;
    }
    if let Some(v) = r.float("gamma_Hz")? {
        let w = 2.0 * PI * non_negative("gamma_Hz", v)?;
        p.gamma1 = w;
        p.gamma2 = w;
    }
    if let Some(v) = r.float("G1_Hz_per_nm")? {
        p.coupling1 = 2.0 * PI * 1e9 * non_negative("G1_Hz_per_nm", v)?;
    }
    if let Some(v) = r.float("G2_Hz_per_nm")? {
        p.coupling2 = 2.0 * PI * 1e9 * non_negative("G2_Hz_per_nm", v)?;
    }
    if let Some(v) = r.float("kappa_Hz")? {
        p.kappa = 2.0 * PI * positive("kappa_Hz", v)?;
    }
    if let Some(v) = r.float("eta")? {
        p.eta = require("eta", v, v > 0.0 && v <= 1.0, "must lie in (0, 1]")?;
    }
    let pump = r.float("P_c_W")?;
    if let Some(v) = pump {
        p.pump_power = positive("P_c_W", v)?;
    }
    match r.float("P_p_W")? {
        Some(v) => p.probe_power = positive("P_p_W", v)?,
        None if pump.is_some() => p.probe_power = p.pump_power / 100.0,
        None => {}
    }
    if let Some(v) = r.float("lambda_c_m")? {
        p.pump_wavelength = positive("lambda_c_m", v)?;
    }
    let om = p.omega_m();
    p.delta1 = -om;
    p.delta2 = -om;
    if let Some(v) = r.float("Delta1_over_Om")? {
        p.delta1 = require("Delta1_over_Om", v, true, "must be finite")? * om;
    }
    if let Some(v) = r.float("Delta2_over_Om")? {
        p.delta2 = require("Delta2_over_Om", v, true, "must be finite")? * om;
    }

    if let Some(s) = r.string("topology")? {
        cfg.topology = s.parse().map_err(|_| {
            invalid("topology", format!("expected `fixed_ends` or `double_movable`, got `{s}`"))
        })?;
    }
    if let Some(list) = r.float_list("g_over_Om")? {
        if list.is_empty() {
            return Err(invalid("g_over_Om", "list is empty"));
        }
        for &g in &list {
            non_negative("g_over_Om", g)?;
        }
        cfg.g_list = Some(list);
    }

    let mut grid = GridSpec::default();
    if let Some(v) = r.float("grid_min")? {
        grid.omega_min_over_om = require("grid_min", v, true, "must be finite")?;
    }
    if let Some(v) = r.float("grid_max")? {
        grid.omega_max_over_om = require("grid_max", v, true, "must be finite")?;
    }
    if let Some(n) = r.count("grid_points")? {
        grid.n_points = n;
    }
    if grid.n_points < 2 {
        return Err(invalid("grid_points", format!("need at least 2, got {}", grid.n_points)));
    }
    if !(grid.omega_min_over_om < grid.omega_max_over_om) {
        return Err(invalid("grid_max", "must exceed grid_min"));
    }
    cfg.grid = grid;

    if let Some(v) = r.float("prominence")? {
        cfg.prominence = non_negative("prominence", v)?;
    }
    if let Some(v) = r.float("scale_xbar")? {
        cfg.scale_xbar = positive("scale_xbar", v)?;
    }

    let sep = &mut cfg.separation;
    if let Some(v) = r.float("fig5_grid_min")? {
        sep.grid.omega_min_over_om = require("fig5_grid_min", v, true, "must be finite")?;
    }
    if let Some(v) = r.float("fig5_grid_max")? {
        sep.grid.omega_max_over_om = require("fig5_grid_max", v, true, "must be finite")?;
    }
    if let Some(n) = r.count("fig5_grid_points")? {
        sep.grid.n_points = n;
    }
    if sep.grid.n_points < 2 {
        return Err(invalid("fig5_grid_points", "need at least 2"));
    }
    if !(sep.grid.omega_min_over_om < sep.grid.omega_max_over_om) {
        return Err(invalid("fig5_grid_max", "must exceed fig5_grid_min"));
    }
    if let Some(v) = r.float("fig5_g_min")? {
        sep.g_min = non_negative("fig5_g_min", v)?;
    }
    if let Some(v) = r.float("fig5_g_max")? {
        sep.g_max = non_negative("fig5_g_max", v)?;
    }
    if let Some(n) = r.count("fig5_g_points")? {
        sep.g_points = n;
    }
    if sep.g_points < 2 {
        return Err(invalid("fig5_g_points", "need at least 2"));
    }
    if !(sep.g_min < sep.g_max) {
        return Err(invalid("fig5_g_max", "must exceed fig5_g_min"));
    }

    cfg.params.validate().map_err(|e| invalid("params", e.to_string()))?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_preset() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.params, PhysicalParams::paper_preset());
        assert_eq!(cfg.panel_g(), PANEL_G.to_vec());
    }

    #[test]
    fn explicit_preset_values_round_trip() {
        let text = r#"
            m1_kg = 2e-11
            m2_kg = 2e-11
            Omega_m_Hz = 51.8e6
            gamma_Hz = 41e3
            G1_Hz_per_nm = 1.3e10
            G2_Hz_per_nm = 1.3e10
            kappa_Hz = 15e6
            eta = 0.5
            P_c_W = 1e-3
            lambda_c_m = 1.064e-6
            Delta1_over_Om = -1
            Delta2_over_Om = -1
            topology = "double_movable"
        "#;
        let cfg = parse_config(text).unwrap();
        let want = PhysicalParams::paper_preset();
        let p = &cfg.params;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-15 * b.abs();
        assert!(close(p.coupling1, want.coupling1));
        assert!(close(p.kappa, want.kappa));
        assert!(close(p.probe_power, want.probe_power));
        assert!(close(p.delta1, want.delta1));
    }

    #[test]
    fn g_list_is_read() {
        let cfg = parse_config("g_over_Om = [0.0, 0.6]").unwrap();
        assert_eq!(cfg.g_list, Some(vec![0.0, 0.6]));
        assert_eq!(cfg.panel_g(), vec![0.0, 0.6]);
    }

    #[test]
    fn invalid_values_name_the_key() {
        match parse_config("kappa_Hz = -1") {
            Err(ConfigError::Invalid { key, .. }) => assert_eq!(key, "kappa_Hz"),
            other => panic!("{other:?}"),
        }
        match parse_config("eta = 1.5") {
            Err(ConfigError::Invalid { key, .. }) => assert_eq!(key, "eta"),
            other => panic!("{other:?}"),
        }
        match parse_config("topology = \"ring\"") {
            Err(ConfigError::Invalid { key, .. }) => assert_eq!(key, "topology"),
            other => panic!("{other:?}"),
        }
        match parse_config("grid_points = 1") {
            Err(ConfigError::Invalid { key, .. }) => assert_eq!(key, "grid_points"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert_eq!(
            parse_config("kappa = 3"),
            Err(ConfigError::UnknownKey("kappa".into()))
        );
    }

    #[test]
    fn syntax_errors_carry_a_location() {
        match parse_config("eta = \n") {
            Err(ConfigError::Syntax(msg)) => assert!(msg.contains("line 1"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }
}
