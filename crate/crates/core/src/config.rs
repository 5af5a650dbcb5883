//! Experiment configuration: `key = value` lines, `#` comments, every key
//! optional. Defaults reproduce the reference deployment: a 19-cell
//! wrap-around cluster of 1 km hexagons, 46 dBm transmit power through a
//! 53 dBm travelling-wave PA at 0.8 peak efficiency, 3.6 path loss, 5.5 dB
//! shadowing, 20 MHz at -106 dBm noise, 10% outage, and a 58.6 W platform
//! that sleeps to zero.

use crate::energy::{NetworkModel, PowerParams};
use crate::geometry::{build_layout, CELL_COUNT, GRID_POINTS_PER_CELL};
use crate::radio::{dbm_to_watts, RadioParams};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
    #[error("config key '{key}': {detail}")]
    BadValue { key: String, detail: String },
    #[error("config key '{key}' out of range: {detail}")]
    OutOfRange { key: String, detail: String },
    #[error("line {line}: expected 'key = value', got '{text}'")]
    BadLine { line: usize, text: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    /// Loads re-enter unchanged every round.
    Constant,
    /// Loads follow per-operator phase-shifted sinusoids.
    Sinusoid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub cells: usize,
    pub grid_points: usize,
    pub cell_radius_km: f64,
    pub p_max_pa_dbm: f64,
    pub tx_power_dbm: f64,
    pub eta_max: f64,
    pub pathloss_exponent: f64,
    pub shadow_sigma_db: f64,
    pub bandwidth_hz: f64,
    pub noise_dbm: f64,
    pub outage_target: f64,
    pub p_idle_w: f64,
    /// Circuit power while serving; follows `p_idle_w` unless set.
    pub p_c_w: Option<f64>,
    pub p_sleep_w: f64,
    /// Linear path gain at 1 km.
    pub gain_ref: f64,
    pub mnos: usize,
    pub delta_l: f64,
    pub e_tr_w: f64,
    /// Normalized entering loads, one per operator; empty means "derive
    /// from context" (sweeps generate their own, scenarios require them).
    pub loads: Vec<f64>,
    pub rounds: usize,
    pub trace: TraceKind,
    pub trace_amplitude: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            cells: CELL_COUNT,
            grid_points: GRID_POINTS_PER_CELL,
            cell_radius_km: 1.0,
            p_max_pa_dbm: 53.0,
            tx_power_dbm: 46.0,
            eta_max: 0.8,
            pathloss_exponent: 3.6,
            shadow_sigma_db: 5.5,
            bandwidth_hz: 20e6,
            noise_dbm: -106.0,
            outage_target: 0.1,
            p_idle_w: 58.6,
            p_c_w: None,
            p_sleep_w: 0.0,
            gain_ref: 1.0,
            mnos: 2,
            delta_l: 0.1,
            e_tr_w: 0.0,
            loads: Vec::new(),
            rounds: 24,
            trace: TraceKind::Constant,
            trace_amplitude: 0.25,
        }
    }
}

impl ExperimentConfig {
    pub fn radio_params(&self) -> RadioParams {
        RadioParams {
            pathloss_exponent: self.pathloss_exponent,
            shadow_sigma_db: self.shadow_sigma_db,
            bandwidth_hz: self.bandwidth_hz,
            noise_w: dbm_to_watts(self.noise_dbm),
            tx_power_w: dbm_to_watts(self.tx_power_dbm),
            outage_target: self.outage_target,
            gain_at_1km: self.gain_ref,
        }
    }

    pub fn power_params(&self) -> PowerParams {
        PowerParams {
            eta_max: self.eta_max,
            p_max_pa_w: dbm_to_watts(self.p_max_pa_dbm),
            p_max_avg_w: dbm_to_watts(self.p_max_pa_dbm),
            p_c_w: self.p_c_w.unwrap_or(self.p_idle_w),
            p_idle_w: self.p_idle_w,
            p_sleep_w: self.p_sleep_w,
        }
    }

    pub fn build_model(&self) -> Result<NetworkModel, crate::energy::EnergyError> {
        let layout = build_layout(self.cell_radius_km);
        NetworkModel::new(&layout, self.radio_params(), self.power_params())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let range = |key: &str, detail: String| {
            Err(ConfigError::OutOfRange {
                key: key.into(),
                detail,
            })
        };
        if self.cells != CELL_COUNT {
            return range("cells", format!("layout is fixed at {CELL_COUNT} cells, got {}", self.cells));
        }
        if self.grid_points != GRID_POINTS_PER_CELL {
            return range(
                "grid_points",
                format!("user grid is fixed at {GRID_POINTS_PER_CELL} points per cell, got {}", self.grid_points),
            );
        }
        if !(self.cell_radius_km > 0.0 && self.cell_radius_km.is_finite()) {
            return range("cell_radius", format!("must be positive km, got {}", self.cell_radius_km));
        }
        if !(self.eta_max > 0.0 && self.eta_max <= 1.0) {
            return range("eta_max", format!("must lie in (0, 1], got {}", self.eta_max));
        }
        if self.tx_power_dbm > self.p_max_pa_dbm {
            return range(
                "tx_power_dbm",
                format!("must not exceed p_max_pa_dbm {}, got {}", self.p_max_pa_dbm, self.tx_power_dbm),
            );
        }
        if !(self.pathloss_exponent > 2.0) {
            return range("pathloss_exponent", format!("must exceed 2, got {}", self.pathloss_exponent));
        }
        if !(self.shadow_sigma_db >= 0.0) {
            return range("shadow_sigma_db", format!("must be non-negative dB, got {}", self.shadow_sigma_db));
        }
        if !(self.bandwidth_hz > 0.0) {
            return range("bandwidth_hz", format!("must be positive Hz, got {}", self.bandwidth_hz));
        }
        if !(self.outage_target > 0.0 && self.outage_target < 1.0) {
            return range("outage_target", format!("must lie in (0, 1), got {}", self.outage_target));
        }
        if !(self.p_idle_w >= 0.0) {
            return range("p_idle_w", format!("must be non-negative watts, got {}", self.p_idle_w));
        }
        if let Some(pc) = self.p_c_w {
            if !(pc >= 0.0) {
                return range("p_c_w", format!("must be non-negative watts, got {pc}"));
            }
        }
        if !(self.p_sleep_w >= 0.0 && self.p_sleep_w <= self.p_idle_w) {
            return range(
                "p_sleep_w",
                format!("must lie in [0, p_idle_w {}], got {}", self.p_idle_w, self.p_sleep_w),
            );
        }
        if !(self.gain_ref > 0.0) {
            return range("gain_ref", format!("must be a positive linear gain, got {}", self.gain_ref));
        }
        if self.mnos < 2 {
            return range("mnos", format!("a market needs at least 2 operators, got {}", self.mnos));
        }
        let units = (1.0 / self.delta_l).round();
        if !(self.delta_l > 0.0 && self.delta_l <= 1.0)
            || !units.is_finite()
            || units < 1.0
            || (units * self.delta_l - 1.0).abs() > 1e-6
        {
            return range(
                "delta_l",
                format!("must divide the normalized load range evenly, got {}", self.delta_l),
            );
        }
        if !(self.e_tr_w >= 0.0 && self.e_tr_w.is_finite()) {
            return range("e_tr_w", format!("must be non-negative watts, got {}", self.e_tr_w));
        }
        for &l in &self.loads {
            if !(0.0..=1.0).contains(&l) {
                return range("loads", format!("normalized loads must lie in [0, 1], got {l}"));
            }
        }
        if !self.loads.is_empty() && self.loads.len() != self.mnos {
            return range(
                "loads",
                format!("expected {} entries to match mnos, got {}", self.mnos, self.loads.len()),
            );
        }
        if self.rounds < 1 {
            return range("rounds", "must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.trace_amplitude) {
            return range(
                "trace_amplitude",
                format!("must lie in [0, 1] of normalized load, got {}", self.trace_amplitude),
            );
        }
        Ok(())
    }
}

/// Parses `key = value` text over the defaults, then validates.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::BadLine {
                line: idx + 1,
                text: raw.trim().into(),
            });
        };
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim();
        apply(&mut cfg, &key, value)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn apply(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<(), ConfigError> {
    fn f64_of(key: &str, value: &str) -> Result<f64, ConfigError> {
        value.parse().map_err(|_| ConfigError::BadValue {
            key: key.into(),
            detail: format!("expected a number, got '{value}'"),
        })
    }
    fn usize_of(key: &str, value: &str) -> Result<usize, ConfigError> {
        value.parse().map_err(|_| ConfigError::BadValue {
            key: key.into(),
            detail: format!("expected a non-negative integer, got '{value}'"),
        })
    }
    match key {
        "cells" => cfg.cells = usize_of(key, value)?,
        "grid_points" => cfg.grid_points = usize_of(key, value)?,
        "cell_radius" => cfg.cell_radius_km = f64_of(key, value)?,
        "p_max_pa_dbm" => cfg.p_max_pa_dbm = f64_of(key, value)?,
        "tx_power_dbm" => cfg.tx_power_dbm = f64_of(key, value)?,
        "eta_max" => cfg.eta_max = f64_of(key, value)?,
        "pathloss_exponent" => cfg.pathloss_exponent = f64_of(key, value)?,
        "shadow_sigma_db" => cfg.shadow_sigma_db = f64_of(key, value)?,
        "bandwidth_hz" => cfg.bandwidth_hz = f64_of(key, value)?,
        "noise_dbm" => cfg.noise_dbm = f64_of(key, value)?,
        "outage_target" => cfg.outage_target = f64_of(key, value)?,
        "p_idle_w" => cfg.p_idle_w = f64_of(key, value)?,
        "p_c_w" => cfg.p_c_w = Some(f64_of(key, value)?),
        "p_sleep_w" => cfg.p_sleep_w = f64_of(key, value)?,
        "gain_ref" => cfg.gain_ref = f64_of(key, value)?,
        "mnos" => cfg.mnos = usize_of(key, value)?,
        "delta_l" => cfg.delta_l = f64_of(key, value)?,
        "e_tr_w" => cfg.e_tr_w = f64_of(key, value)?,
        "loads" => {
            let mut loads = Vec::new();
            for part in value.split(',') {
                loads.push(f64_of(key, part.trim())?);
            }
            cfg.loads = loads;
        }
        "rounds" => cfg.rounds = usize_of(key, value)?,
        "trace" => {
            cfg.trace = match value.to_ascii_lowercase().as_str() {
                "constant" => TraceKind::Constant,
                "sinusoid" => TraceKind::Sinusoid,
                other => {
                    return Err(ConfigError::BadValue {
                        key: key.into(),
                        detail: format!("expected 'constant' or 'sinusoid', got '{other}'"),
                    })
                }
            }
        }
        "trace_amplitude" => cfg.trace_amplitude = f64_of(key, value)?,
        other => return Err(ConfigError::UnknownKey(other.into())),
    }
    Ok(())
}
