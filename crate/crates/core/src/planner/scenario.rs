//! One simulated transmission: probe and pumps on a comb, through a built link, to a
//! noise trace or an FWM report.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::{build_link, propagate_link, receive_probe, DmLinkConfig, ResidualDispersion};
use crate::noise::{
    align_fields, extract_rho, fwm_scan, FwmMetadata, FwmReport, TraceMetadata, XpmNoiseTrace,
};
use crate::signal::{band_select, size_grid, SampledField, TimeGrid, WdmComb};
use crate::transceivers::{
    bits_needed, generate_prbs, imdd_waveform, qpsk_waveform, ImddTxConfig, QpskTxConfig,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// Probe symbols per record (a power of two).
    pub n_symbols: usize,
    pub channel_spacing: f64,
    /// Two-sided width of the probe receive filter, Hz.
    pub probe_rx_bandwidth: f64,
    /// Two-sided width over which FWM idler power is integrated, Hz.
    pub fwm_channel_bandwidth: f64,
    pub min_samples_per_symbol: usize,
    /// Phase-mismatch step bound applied to probe-off FWM runs, rad (see
    /// [`crate::fiber::StepPolicy::max_mismatch_phase`]).
    pub fwm_max_mismatch_phase: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n_symbols: 1 << 14,
            channel_spacing: 50e9,
            probe_rx_bandwidth: 35e9,
            fwm_channel_bandwidth: 20e9,
            min_samples_per_symbol: 16,
            fwm_max_mismatch_phase: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpSpec {
    /// Pump carrier relative to the probe carrier.
    pub delta_f: f64,
    pub p_pump_dbm: f64,
}

/// Everything the simulator needs apart from the swept axes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub link: DmLinkConfig,
    pub probe: QpskTxConfig,
    pub pump: ImddTxConfig,
    pub simulation: SimulationConfig,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Pattern seed of the pump at `delta_f`: depends only on the run seed and the pump's
/// grid slot, so a pump carries the same bits in single- and multi-pump runs.
pub fn pump_seed(seed: u64, delta_f: f64, spacing: f64) -> u64 {
    let slot = (delta_f / spacing).round() as i64;
    splitmix(splitmix(seed) ^ (slot as u64).wrapping_mul(0xA24B_AED4_963E_E407))
}

pub fn probe_seed(seed: u64) -> u64 {
    splitmix(splitmix(seed) ^ 0x0070_726F_6265)
}

impl Scenario {
    /// Grid holding `n_symbols` probe symbols and carriers up to `max_abs_offset`.
    pub fn grid_for(&self, max_abs_offset: f64) -> Result<TimeGrid> {
        size_grid(
            self.probe.symbol_rate,
            self.simulation.n_symbols,
            max_abs_offset,
            self.simulation.min_samples_per_symbol,
        )
    }

    fn link_config(&self, d_res_il: ResidualDispersion, seed: u64) -> DmLinkConfig {
        DmLinkConfig {
            d_res_il,
            seed,
            ..self.link.clone()
        }
    }

    /// Baseband field of one pump, seeded by its slot on the channel grid.
    pub fn pump_field(&self, pump: &PumpSpec, seed: u64, grid: TimeGrid) -> Result<SampledField> {
        let cfg = ImddTxConfig {
            launch_power_dbm: pump.p_pump_dbm,
            ..self.pump.clone()
        };
        let n_bits = bits_needed(&grid, cfg.bit_rate);
        let bits = generate_prbs(
            cfg.prbs_order,
            n_bits,
            pump_seed(seed, pump.delta_f, self.simulation.channel_spacing),
        )?;
        imdd_waveform(&bits, &cfg, grid)
    }

    /// Baseband field of the probe.
    pub fn probe_field(&self, seed: u64, grid: TimeGrid) -> Result<SampledField> {
        let cfg = QpskTxConfig {
            seed: probe_seed(seed),
            ..self.probe.clone()
        };
        Ok(qpsk_waveform(self.simulation.n_symbols, &cfg, grid)?.0)
    }

    /// Probe at the band center plus the given pumps through the link; returns the
    /// received probe's multiplicative noise.
    pub fn simulate_xpm(
        &self,
        d_res_il: ResidualDispersion,
        pumps: &[PumpSpec],
        seed: u64,
        grid: TimeGrid,
    ) -> Result<XpmNoiseTrace> {
        let probe = self.probe_field(seed, grid)?;
        let mut channels = vec![(probe.clone(), 0.0)];
        for p in pumps {
            channels.push((self.pump_field(p, seed, grid)?, p.delta_f));
        }
        let comb = WdmComb::assemble(channels, self.simulation.channel_spacing)?.aggregate;
        let link = build_link(&self.link_config(d_res_il, seed))?;
        let rx = propagate_link(&comb, &link)?;
        let bw = self.simulation.probe_rx_bandwidth;
        let rx_probe = receive_probe(&rx, &link, 0.0, bw)?;
        let reference = band_select(&probe, 0.0, bw)?;
        let aligned = align_fields(&rx_probe, &reference)?;
        let metadata = TraceMetadata {
            d_res_il: Some(d_res_il),
            pumps: pumps
                .iter()
                .map(|p| crate::noise::PumpTag {
                    delta_f: p.delta_f,
                    p_pump_dbm: p.p_pump_dbm,
                })
                .collect(),
            seed: Some(seed),
        };
        extract_rho(&aligned.field, &reference, metadata)
    }

    /// Pump offsets of an `n_pumps` comb on the channel grid, one spacing apart and
    /// centred on the band (the extra pump of an even comb sits on the high side).
    pub fn fwm_comb(&self, n_pumps: usize) -> Vec<f64> {
        let s = self.simulation.channel_spacing;
        let first = -(((n_pumps.max(1) - 1) / 2) as f64);
        (0..n_pumps).map(|k| (first + k as f64) * s).collect()
    }

    /// Grid for an FWM run: wide enough that the outermost idler band is not aliased.
    pub fn fwm_grid(&self, pump_offsets: &[f64]) -> Result<TimeGrid> {
        let hi = pump_offsets
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let lo = pump_offsets.iter().cloned().fold(f64::INFINITY, f64::min);
        let extent = (2.0 * hi - lo).abs().max((2.0 * lo - hi).abs());
        self.grid_for(extent + self.simulation.fwm_channel_bandwidth)
    }

    /// Probe-off run of a pump comb; reports the idler band powers at the link output.
    pub fn simulate_fwm(
        &self,
        d_res_il: ResidualDispersion,
        pump_offsets: &[f64],
        p_pump_dbm: f64,
        seed: u64,
        grid: TimeGrid,
    ) -> Result<FwmReport> {
        if pump_offsets.len() < 2 {
            return Err(Error::InvalidParameter(
                "an FWM run needs at least two pumps".into(),
            ));
        }
        let mut channels = Vec::with_capacity(pump_offsets.len());
        for &df in pump_offsets {
            let spec = PumpSpec {
                delta_f: df,
                p_pump_dbm,
            };
            channels.push((self.pump_field(&spec, seed, grid)?, df));
        }
        let comb = WdmComb::assemble(channels, self.simulation.channel_spacing)?.aggregate;
        let mut cfg = self.link_config(d_res_il, seed);
        cfg.step.max_mismatch_phase = self.simulation.fwm_max_mismatch_phase;
        let link = build_link(&cfg)?;
        let rx = propagate_link(&comb, &link)?;
        fwm_scan(
            &rx,
            pump_offsets,
            self.simulation.fwm_channel_bandwidth,
            FwmMetadata {
                d_res_il: Some(d_res_il),
                p_pump_dbm,
                n_pumps: pump_offsets.len(),
                seed,
            },
        )
    }
}
