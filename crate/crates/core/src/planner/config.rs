//! The run configuration file (TOML).

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::{DmLinkConfig, ResidualDispersion};
use crate::planner::scenario::{Scenario, SimulationConfig};
use crate::transceivers::{ImddTxConfig, QpskTxConfig};
use crate::units::{parse_quantity, Quantity};

#[derive(Deserialize)]
#[serde(untagged)]
enum NumberOrText {
    Number(f64),
    Text(String),
}

fn quantities<'de, D: Deserializer<'de>>(
    d: D,
    kind: Quantity,
) -> std::result::Result<Vec<f64>, D::Error> {
    Vec::<NumberOrText>::deserialize(d)?
        .into_iter()
        .map(|v| match v {
            NumberOrText::Number(x) => Ok(x),
            NumberOrText::Text(t) => parse_quantity(&t, kind).map_err(de::Error::custom),
        })
        .collect()
}

fn frequencies<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    quantities(d, Quantity::Frequency)
}

fn powers<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    quantities(d, Quantity::Power)
}

/// Whether all points of a sweep share one grid (sized from the largest Δf), so their
/// traces can be superposed, or each point gets the smallest grid that holds it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GridSizing {
    #[default]
    Sweep,
    Point,
}

/// Swept axes: maps (ps/nm or UT), pump offsets (Hz), pump powers (dBm), seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub d_res_il: Vec<ResidualDispersion>,
    pub delta_f: Vec<f64>,
    pub p_pump: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            d_res_il: vec![
                ResidualDispersion::PerSpan(0.0),
                ResidualDispersion::PerSpan(50.0),
                ResidualDispersion::PerSpan(100.0),
                ResidualDispersion::Uncompensated,
            ],
            delta_f: (1..=20).map(|k| k as f64 * 50e9).collect(),
            p_pump: vec![-1.0, 0.0, 1.0, 2.0, 3.0, 4.0],
            seeds: vec![1],
        }
    }
}

impl SweepGrid {
    pub fn validate(&self, channel_spacing: f64) -> Result<()> {
        for &f in &self.delta_f {
            let ratio = f / channel_spacing;
            if !(f > 0.0) || (ratio - ratio.round()).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "delta_f {:.6} GHz is not a positive multiple of the {:.6} GHz grid",
                    f / 1e9,
                    channel_spacing / 1e9
                )));
            }
        }
        if self.d_res_il.is_empty() || self.p_pump.is_empty() || self.seeds.is_empty() {
            return Err(Error::InvalidParameter(
                "every sweep axis needs at least one value".into(),
            ));
        }
        Ok(())
    }

    pub fn max_delta_f(&self) -> f64 {
        self.delta_f.iter().map(|f| f.abs()).fold(0.0, f64::max)
    }
}

/// The `[sweep]` section: the grid axes plus how points are run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub d_res_il: Vec<ResidualDispersion>,
    #[serde(deserialize_with = "frequencies")]
    pub delta_f: Vec<f64>,
    #[serde(deserialize_with = "powers")]
    pub p_pump: Vec<f64>,
    pub seeds: Vec<u64>,
    pub store_traces: bool,
    pub grid_sizing: GridSizing,
}

impl Default for SweepSettings {
    fn default() -> Self {
        let grid = SweepGrid::default();
        Self {
            d_res_il: grid.d_res_il,
            delta_f: grid.delta_f,
            p_pump: grid.p_pump,
            seeds: grid.seeds,
            store_traces: false,
            grid_sizing: GridSizing::Sweep,
        }
    }
}

impl SweepSettings {
    pub fn grid(&self) -> SweepGrid {
        SweepGrid {
            d_res_il: self.d_res_il.clone(),
            delta_f: self.delta_f.clone(),
            p_pump: self.p_pump.clone(),
            seeds: self.seeds.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FwmSettings {
    pub n_pumps: usize,
}

impl Default for FwmSettings {
    fn default() -> Self {
        Self { n_pumps: 11 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub link: DmLinkConfig,
    pub probe: QpskTxConfig,
    pub pump: ImddTxConfig,
    pub simulation: SimulationConfig,
    pub sweep: SweepSettings,
    pub fwm: FwmSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out"),
            link: DmLinkConfig::default(),
            probe: QpskTxConfig::default(),
            pump: ImddTxConfig::default(),
            simulation: SimulationConfig::default(),
            sweep: SweepSettings::default(),
            fwm: FwmSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn scenario(&self) -> Scenario {
        Scenario {
            link: self.link.clone(),
            probe: self.probe.clone(),
            pump: self.pump.clone(),
            simulation: self.simulation.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sweep
            .grid()
            .validate(self.simulation.channel_spacing)?;
        self.link.fiber.validate()?;
        self.link.step.validate()?;
        if !self.simulation.n_symbols.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "n_symbols = {} is not a power of two",
                self.simulation.n_symbols
            )));
        }
        if self.fwm.n_pumps < 2 {
            return Err(Error::InvalidParameter(
                "fwm.n_pumps must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before
        .rfind('\n')
        .map(|i| before.len() - i)
        .unwrap_or(before.len() + 1);
    (line, column)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e
            .span()
            .map(|s| line_column(text, s.start))
            .unwrap_or((0, 0));
        Error::Config {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads a config; a relative `output_dir` resolves against the current directory.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match toml::to_string(self) {
            Ok(s) => f.write_str(&s),
            Err(_) => Err(fmt::Error),
        }
    }
}
