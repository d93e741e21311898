//! 10G IMDD pump and coherent QPSK probe transmitters, and receiver-side CD recovery.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::apply_dispersion_phase;
use crate::signal::{band_filter, Fft, SampledField, TimeGrid};
use crate::units::{db_to_linear, dbm_to_watts};

/// On-off keyed 10G transmitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImddTxConfig {
    pub bit_rate: f64,
    pub launch_power_dbm: f64,
    pub prbs_order: u32,
    pub extinction_ratio_db: f64,
    /// Corner frequency of the low-pass applied to the power waveform.
    pub rise_filter_bandwidth: f64,
    pub rise_filter_order: u32,
    /// Adiabatic chirp alpha factor; zero means chirp-free.
    pub chirp_alpha: f64,
    /// Two-sided bandwidth of the ideal multiplexer filter on the optical field;
    /// zero disables it.
    pub mux_bandwidth: f64,
    pub seed: u64,
}

impl Default for ImddTxConfig {
    fn default() -> Self {
        Self {
            bit_rate: 10e9,
            launch_power_dbm: 1.0,
            prbs_order: 15,
            extinction_ratio_db: 13.0,
            rise_filter_bandwidth: 7.5e9,
            rise_filter_order: 4,
            chirp_alpha: 0.0,
            mux_bandwidth: 40e9,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseShape {
    Nrz,
    RootRaisedCosine { rolloff: f64 },
}

/// Single-polarization QPSK probe transmitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QpskTxConfig {
    pub symbol_rate: f64,
    pub launch_power_dbm: f64,
    pub pulse_shape: PulseShape,
    pub seed: u64,
}

impl Default for QpskTxConfig {
    fn default() -> Self {
        Self {
            symbol_rate: 28e9,
            launch_power_dbm: -20.0,
            pulse_shape: PulseShape::Nrz,
            seed: 1,
        }
    }
}

/// ITU-T O.150 feedback taps for the supported orders.
fn prbs_taps(order: u32) -> Result<u32> {
    match order {
        7 => Ok(6),
        15 => Ok(14),
        23 => Ok(18),
        31 => Ok(28),
        other => Err(Error::UnsupportedPrbsOrder(other)),
    }
}

/// Maximal-length LFSR sequence (polynomial x^order + x^tap + 1).
///
/// The seed selects the nonzero starting state, so different seeds give cyclic
/// shifts of the same m-sequence. Sequences longer than one period repeat.
pub fn generate_prbs(order: u32, length: usize, seed: u64) -> Result<Vec<bool>> {
    let tap = prbs_taps(order)?;
    let period = (1u64 << order) - 1;
    let mask = period;
    let mut state = seed % period + 1;
    let mut bits = Vec::with_capacity(length);
    for _ in 0..length {
        let fb = ((state >> (order - 1)) ^ (state >> (tap - 1))) & 1;
        state = ((state << 1) | fb) & mask;
        bits.push(fb == 1);
    }
    Ok(bits)
}

/// Analog Butterworth low-pass response of the given order at frequency `f`.
pub fn butterworth_response(f: f64, corner: f64, order: u32) -> Complex64 {
    let n = order as f64;
    let s = Complex64::new(0.0, f / corner);
    let mut h = Complex64::new(1.0, 0.0);
    for k in 1..=order {
        let theta = PI * (2.0 * k as f64 + n - 1.0) / (2.0 * n);
        let pole = Complex64::from_polar(1.0, theta);
        h /= s - pole;
    }
    // normalize the DC gain to exactly one
    let mut dc = Complex64::new(1.0, 0.0);
    for k in 1..=order {
        let theta = PI * (2.0 * k as f64 + n - 1.0) / (2.0 * n);
        dc /= -Complex64::from_polar(1.0, theta);
    }
    h / dc
}

/// Samples of one bit per `bit_rate` tick, NRZ-held on the grid.
/// Number of symbols at `rate` needed to fill the grid.
pub fn bits_needed(grid: &TimeGrid, rate: f64) -> usize {
    (grid.duration() * rate - 1e-9).ceil().max(1.0) as usize
}

fn symbol_index(k: usize, grid: &TimeGrid, rate: f64) -> usize {
    ((k as f64) * rate / grid.sample_rate() + 1e-9).floor() as usize
}

/// On-off keyed optical field.
///
/// The NRZ power waveform (levels set by mean launch power and extinction ratio) is
/// low-pass filtered, clamped at zero, square-rooted into a real field amplitude, given
/// the optional adiabatic chirp, then passed through the ideal multiplexer filter.
pub fn imdd_waveform(bits: &[bool], cfg: &ImddTxConfig, grid: TimeGrid) -> Result<SampledField> {
    if !(cfg.extinction_ratio_db > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "extinction ratio must be positive, got {} dB",
            cfg.extinction_ratio_db
        )));
    }
    if !(cfg.bit_rate > 0.0) || !(cfg.rise_filter_bandwidth > 0.0) || cfg.rise_filter_order == 0 {
        return Err(Error::InvalidParameter(
            "bit rate, rise filter bandwidth and order must be positive".into(),
        ));
    }
    let needed = bits_needed(&grid, cfg.bit_rate);
    if bits.len() < needed {
        return Err(Error::GridTooShort {
            needed,
            available: bits.len(),
        });
    }
    let mean = dbm_to_watts(cfg.launch_power_dbm);
    let er = db_to_linear(cfg.extinction_ratio_db);
    let p1 = 2.0 * mean * er / (er + 1.0);
    let p0 = 2.0 * mean / (er + 1.0);

    let n = grid.n_samples();
    let mut power: Vec<Complex64> = (0..n)
        .map(|k| {
            let b = bits[symbol_index(k, &grid, cfg.bit_rate).min(bits.len() - 1)];
            Complex64::new(if b { p1 } else { p0 }, 0.0)
        })
        .collect();
    let mut fft = Fft::new(n);
    fft.forward(&mut power);
    for (k, x) in power.iter_mut().enumerate() {
        *x *= butterworth_response(
            grid.frequency(k),
            cfg.rise_filter_bandwidth,
            cfg.rise_filter_order,
        );
    }
    fft.inverse(&mut power);

    let samples: Vec<Complex64> = power
        .iter()
        .map(|p| {
            let p = p.re.max(0.0);
            let amplitude = p.sqrt();
            if cfg.chirp_alpha != 0.0 {
                let phase = 0.5 * cfg.chirp_alpha * p.max(1e-30).ln();
                Complex64::from_polar(amplitude, phase)
            } else {
                Complex64::new(amplitude, 0.0)
            }
        })
        .collect();
    let mut field = SampledField::new(grid, samples)?;
    if cfg.mux_bandwidth > 0.0 {
        field = band_filter(&field, 0.0, cfg.mux_bandwidth.min(grid.sample_rate()))?;
    } else {
        field.bandwidth = 4.0 * cfg.rise_filter_bandwidth;
    }
    Ok(field)
}

fn qpsk_symbols(count: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let re = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let im = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
        })
        .collect()
}

/// Raised-cosine-root spectral shape, unit gain in the flat region.
fn rrc_response(f: f64, symbol_rate: f64, rolloff: f64) -> f64 {
    let f = f.abs();
    let t = 1.0 / symbol_rate;
    let f1 = (1.0 - rolloff) / (2.0 * t);
    let f2 = (1.0 + rolloff) / (2.0 * t);
    if f <= f1 {
        1.0
    } else if f <= f2 {
        (0.5 * (1.0 + (PI * t / rolloff * (f - f1)).cos())).sqrt()
    } else {
        0.0
    }
}

/// Random QPSK symbols pulse-shaped onto the grid at the configured launch power.
///
/// Symbols are {±1 ± j}/√2, drawn from a ChaCha stream seeded by `cfg.seed`. When the
/// grid is longer than `symbol_count` symbols the sequence repeats cyclically.
pub fn qpsk_waveform(
    symbol_count: usize,
    cfg: &QpskTxConfig,
    grid: TimeGrid,
) -> Result<(SampledField, Vec<Complex64>)> {
    if symbol_count == 0 || !(cfg.symbol_rate > 0.0) {
        return Err(Error::InvalidParameter(
            "symbol count and symbol rate must be positive".into(),
        ));
    }
    let needed = (symbol_count as f64 * grid.sample_rate() / cfg.symbol_rate).ceil() as usize;
    if needed > grid.n_samples() {
        return Err(Error::GridTooShort {
            needed,
            available: grid.n_samples(),
        });
    }
    let symbols = qpsk_symbols(symbol_count, cfg.seed);
    let amplitude = dbm_to_watts(cfg.launch_power_dbm).sqrt();
    let n = grid.n_samples();
    let field = match cfg.pulse_shape {
        PulseShape::Nrz => {
            let samples = (0..n)
                .map(|k| {
                    amplitude * symbols[symbol_index(k, &grid, cfg.symbol_rate) % symbol_count]
                })
                .collect();
            SampledField::new(grid, samples)?.with_bandwidth(2.0 * cfg.symbol_rate)
        }
        PulseShape::RootRaisedCosine { rolloff } => {
            if !(rolloff > 0.0 && rolloff <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "roll-off {rolloff} not in (0, 1]"
                )));
            }
            let sps = grid.sample_rate() / cfg.symbol_rate;
            if (sps - sps.round()).abs() > 1e-9 {
                return Err(Error::InvalidParameter(
                    "root-raised-cosine shaping needs an integer number of samples per symbol"
                        .into(),
                ));
            }
            let sps = sps.round() as usize;
            let mut buf = vec![Complex64::new(0.0, 0.0); n];
            for (i, slot) in buf.iter_mut().step_by(sps).enumerate() {
                *slot = symbols[i % symbol_count];
            }
            let mut fft = Fft::new(n);
            fft.forward(&mut buf);
            for (k, x) in buf.iter_mut().enumerate() {
                *x *= rrc_response(grid.frequency(k), cfg.symbol_rate, rolloff);
            }
            fft.inverse(&mut buf);
            let p = crate::signal::mean_power(&buf);
            let scale = amplitude / p.sqrt();
            let samples = buf.into_iter().map(|x| x * scale).collect();
            SampledField::new(grid, samples)?.with_bandwidth((1.0 + rolloff) * cfg.symbol_rate)
        }
    };
    Ok((field, symbols))
}

/// Undoes `accumulated_dispersion` (ps/nm) with an all-pass filter
/// exp(+j·π·λ²·D_acc·f²/c), where λ = c / `reference_frequency` is the optical
/// wavelength of the simulation band center and f is measured on the simulation band.
pub fn compensate_cd(
    field: &SampledField,
    accumulated_dispersion: f64,
    reference_frequency: f64,
) -> SampledField {
    apply_dispersion_phase(field, -accumulated_dispersion, reference_frequency)
}
