//! Sweep campaigns, the pump & probe lookup table and guard-band answers built on it.

pub mod config;
pub mod export;
pub mod lut;
pub mod scenario;
pub mod store;
pub mod sweep;

pub use config::{load_config, parse_config, GridSizing, RunConfig, SweepGrid};
pub use lut::{
    predict_xpm, read_lut, recommend_guardband, write_lut, CombinationPath, GuardbandQuery,
    Prediction, PumpProbeRecord, Recommendation,
};
pub use scenario::{PumpSpec, Scenario, SimulationConfig};
pub use store::{read_trace, write_trace};
pub use sweep::{run_fwm_sweep, run_pump_probe_sweep, SweepOptions, SweepOutcome};
