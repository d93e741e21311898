//! Four-wave-mixing idlers of a pump comb, measured from probe-off runs.

use crate::error::{Error, Result};
use crate::link::ResidualDispersion;
use crate::signal::SampledField;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FwmMetadata {
    pub d_res_il: Option<ResidualDispersion>,
    pub p_pump_dbm: f64,
    pub n_pumps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FwmReport {
    /// Idler carriers on the field's frequency axis, ascending.
    pub idler_frequencies: Vec<f64>,
    /// Band power of each idler (W).
    pub idler_powers: Vec<f64>,
    /// Variance of the band-selected idler field about its mean (W): the band power
    /// without the CW tone that unmodulated carriers mix into the idler bin.
    pub idler_variances: Vec<f64>,
    pub pump_grid: Vec<f64>,
    /// Idlers whose band overlaps a pump band without sitting on its carrier.
    pub overlapping: Vec<f64>,
    /// Idlers whose band does not fit inside the simulated bandwidth.
    pub outside_grid: Vec<f64>,
    pub metadata: FwmMetadata,
}

impl FwmReport {
    fn index_of(&self, f: f64, tolerance: f64) -> Option<usize> {
        self.idler_frequencies
            .iter()
            .position(|x| (x - f).abs() <= tolerance)
    }

    pub fn power_at(&self, f: f64, tolerance: f64) -> Option<f64> {
        self.index_of(f, tolerance).map(|i| self.idler_powers[i])
    }

    pub fn variance_at(&self, f: f64, tolerance: f64) -> Option<f64> {
        self.index_of(f, tolerance).map(|i| self.idler_variances[i])
    }
}

/// Distinct f_i + f_j − f_k with k ∉ {i, j}, rounded to `resolution`.
///
/// Carriers snapped to bins sit up to half a bin off a regular grid, so one physical
/// idler can come out on neighbouring bins; candidates within two bins of the previous
/// one are merged into it.
pub fn idler_candidates(pumps: &[f64], resolution: f64) -> Vec<f64> {
    let mut bins: Vec<i64> = Vec::new();
    for (i, fi) in pumps.iter().enumerate() {
        for (j, fj) in pumps.iter().enumerate().skip(i) {
            for (k, fk) in pumps.iter().enumerate() {
                if k != i && k != j {
                    bins.push(((fi + fj - fk) / resolution).round() as i64);
                }
            }
        }
    }
    bins.sort_unstable();
    bins.dedup_by(|b, kept| *b - *kept <= 2);
    bins.into_iter().map(|b| b as f64 * resolution).collect()
}

/// Enumerates the idlers of the pump comb and reports their band powers.
///
/// Pump offsets are snapped to the nearest bin first. Idlers on a pump carrier are
/// dropped; idlers whose band overlaps a pump band are dropped and listed in
/// `overlapping`.
pub fn fwm_scan(
    a_rx_comb: &SampledField,
    pump_offsets: &[f64],
    channel_bandwidth: f64,
    metadata: FwmMetadata,
) -> Result<FwmReport> {
    if pump_offsets.len() < 2 {
        return Err(Error::InvalidParameter(
            "an FWM scan needs at least two pumps".into(),
        ));
    }
    if !(channel_bandwidth > 0.0) {
        return Err(Error::InvalidParameter(
            "channel bandwidth must be positive".into(),
        ));
    }
    let grid = a_rx_comb.grid;
    let df = grid.resolution();
    let spectrum = a_rx_comb.power_spectrum();
    // carriers were placed on bins, so the mixing products are exact bin multiples
    let pump_offsets: Vec<f64> = pump_offsets.iter().map(|&p| grid.snap(p)).collect();
    let pump_offsets = pump_offsets.as_slice();
    let mut report = FwmReport {
        idler_frequencies: Vec::new(),
        idler_powers: Vec::new(),
        idler_variances: Vec::new(),
        pump_grid: pump_offsets.to_vec(),
        overlapping: Vec::new(),
        outside_grid: Vec::new(),
        metadata,
    };
    for f in idler_candidates(pump_offsets, df) {
        let nearest = pump_offsets
            .iter()
            .map(|p| (p - f).abs())
            .fold(f64::INFINITY, f64::min);
        if nearest < df / 2.0 {
            continue;
        }
        if nearest < channel_bandwidth {
            report.overlapping.push(f);
            continue;
        }
        if f.abs() + channel_bandwidth / 2.0 >= grid.nyquist() {
            report.outside_grid.push(f);
            continue;
        }
        let half = channel_bandwidth / 2.0 + 1e-6 * df;
        let power: f64 = spectrum
            .iter()
            .enumerate()
            .filter(|(k, _)| (grid.frequency(*k) - f).abs() <= half)
            .map(|(_, p)| p)
            .sum();
        let tone = spectrum[grid.bin_index(f)];
        report.idler_frequencies.push(f);
        report.idler_powers.push(power);
        report.idler_variances.push((power - tone).max(0.0));
    }
    Ok(report)
}
