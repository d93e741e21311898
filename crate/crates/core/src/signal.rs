//! Sampled complex-envelope fields, their time/frequency grids and WDM comb assembly.
//!
//! All fields live on a periodic grid: the FFT treats the record as one period,
//! so carriers placed exactly on frequency bins stay periodic and never leak.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Uniform sampling grid shared by every field of one simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    n_samples: usize,
    sample_rate: f64,
    t0: f64,
}

impl TimeGrid {
    pub fn new(n_samples: usize, sample_rate: f64) -> Result<Self> {
        if n_samples < 2 || !n_samples.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_samples = {n_samples} is not a power of two"
            )));
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "sample_rate = {sample_rate} must be positive"
            )));
        }
        Ok(Self {
            n_samples,
            sample_rate,
            t0: 0.0,
        })
    }

    pub fn with_origin(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn duration(&self) -> f64 {
        self.n_samples as f64 / self.sample_rate
    }

    /// Frequency resolution Δf_res = sample_rate / n_samples.
    pub fn resolution(&self) -> f64 {
        self.sample_rate / self.n_samples as f64
    }

    pub fn nyquist(&self) -> f64 {
        self.sample_rate / 2.0
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 / self.sample_rate
    }

    /// Signed bin index of FFT-ordered bin `k`: 0, 1, …, N/2−1, −N/2, …, −1.
    pub fn signed_bin(&self, k: usize) -> i64 {
        let n = self.n_samples as i64;
        let k = k as i64;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    /// Baseband frequency of FFT-ordered bin `k`.
    pub fn frequency(&self, k: usize) -> f64 {
        self.signed_bin(k) as f64 * self.resolution()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n_samples).map(|k| self.frequency(k)).collect()
    }

    /// FFT-ordered index of the bin nearest to `f`.
    pub fn bin_index(&self, f: f64) -> usize {
        let n = self.n_samples as i64;
        let b = (f / self.resolution()).round() as i64;
        b.rem_euclid(n) as usize
    }

    /// Nearest frequency that falls exactly on a bin.
    pub fn snap(&self, f: f64) -> f64 {
        (f / self.resolution()).round() * self.resolution()
    }
}

/// Builds a grid; `n_samples` must be a power of two and `sample_rate` positive.
pub fn make_grid(n_samples: usize, sample_rate: f64) -> Result<TimeGrid> {
    TimeGrid::new(n_samples, sample_rate)
}

/// Sizes a grid for a record of `n_symbols` probe symbols.
///
/// The sample rate is `sps × symbol_rate` with the smallest power-of-two `sps ≥ min_sps`
/// satisfying `sample_rate ≥ 2·(max_abs_offset + 3·symbol_rate)`. With `n_symbols` a
/// power of two the sample count is then a power of two as well.
pub fn size_grid(
    symbol_rate: f64,
    n_symbols: usize,
    max_abs_offset: f64,
    min_sps: usize,
) -> Result<TimeGrid> {
    if !n_symbols.is_power_of_two() {
        return Err(Error::InvalidGrid(format!(
            "symbol count {n_symbols} is not a power of two"
        )));
    }
    if !(symbol_rate > 0.0) {
        return Err(Error::InvalidGrid("symbol rate must be positive".into()));
    }
    let required = 2.0 * (max_abs_offset.abs() + 3.0 * symbol_rate);
    let mut sps = min_sps.max(1).next_power_of_two();
    while (sps as f64) * symbol_rate < required {
        sps *= 2;
    }
    TimeGrid::new(n_symbols * sps, sps as f64 * symbol_rate)
}

/// Uniformly sampled complex envelope, in √W so that |sample|² is power in W.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub grid: TimeGrid,
    pub samples: Vec<Complex64>,
    /// Offset of this channel's carrier from the simulation band center.
    pub center_frequency_offset: f64,
    /// Simulation-band frequency that the zero bin of `samples` corresponds to
    /// (nonzero after `band_select` moved a channel to baseband).
    pub frame_offset: f64,
    /// Width of the occupied band around the carrier (Hz); for an aggregate it spans
    /// all channels and the carrier field holds the span's midpoint.
    pub bandwidth: f64,
}

impl SampledField {
    pub fn new(grid: TimeGrid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.n_samples() {
            return Err(Error::LengthMismatch(samples.len(), grid.n_samples()));
        }
        Ok(Self {
            grid,
            samples,
            center_frequency_offset: 0.0,
            frame_offset: 0.0,
            bandwidth: 0.0,
        })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self {
            grid,
            samples: vec![Complex64::new(0.0, 0.0); grid.n_samples()],
            center_frequency_offset: 0.0,
            frame_offset: 0.0,
            bandwidth: 0.0,
        }
    }

    pub fn with_bandwidth(mut self, bandwidth: f64) -> Self {
        self.bandwidth = bandwidth;
        self
    }

    /// Carrier position on the field's own (sample) frequency axis.
    pub fn local_carrier(&self) -> f64 {
        self.center_frequency_offset - self.frame_offset
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// (1/N)·Σ|a|², in W.
    pub fn mean_power(&self) -> f64 {
        mean_power(&self.samples)
    }

    /// Per-bin power in W (|X_k|²/N²), FFT-ordered; sums to the mean power.
    pub fn power_spectrum(&self) -> Vec<f64> {
        let mut spec = self.samples.clone();
        Fft::new(spec.len()).forward(&mut spec);
        let n2 = (spec.len() as f64).powi(2);
        spec.iter().map(|x| x.norm_sqr() / n2).collect()
    }
}

pub fn mean_power(samples: &[Complex64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|x| x.norm_sqr()).sum::<f64>() / samples.len() as f64
}

/// Relative RMS difference ‖a − b‖ / ‖b‖.
pub fn relative_rms(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    if den == 0.0 {
        return num.sqrt();
    }
    (num / den).sqrt()
}

/// Forward/inverse FFT pair with its scratch buffer. Forward is unnormalized,
/// inverse divides by N so the pair round-trips.
pub struct Fft {
    forward: Arc<dyn rustfft::Fft<f64>>,
    inverse: Arc<dyn rustfft::Fft<f64>>,
    scratch: Vec<Complex64>,
    scale: f64,
}

impl Fft {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); len],
            scale: 1.0 / n as f64,
        }
    }

    pub fn forward(&mut self, buf: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, &mut self.scratch);
    }

    pub fn inverse(&mut self, buf: &mut [Complex64]) {
        self.inverse.process_with_scratch(buf, &mut self.scratch);
        for x in buf.iter_mut() {
            *x *= self.scale;
        }
    }
}

/// Multiplies the field by exp(j·2π·offset·t); the carrier moves by `offset`.
pub fn frequency_shift(field: &SampledField, offset: f64) -> Result<SampledField> {
    let new_center = field.center_frequency_offset + offset;
    let nyquist = field.grid.nyquist();
    let local = new_center - field.frame_offset;
    if local.abs() + field.bandwidth / 2.0 >= nyquist {
        return Err(Error::Aliasing {
            frequency: local,
            bandwidth: field.bandwidth,
            sample_rate: field.grid.sample_rate(),
        });
    }
    let mut out = field.clone();
    if offset != 0.0 {
        let grid = field.grid;
        for (k, x) in out.samples.iter_mut().enumerate() {
            let phase = 2.0 * PI * offset * grid.time(k);
            *x *= Complex64::from_polar(1.0, phase);
        }
    }
    out.center_frequency_offset = new_center;
    Ok(out)
}

/// Sample-wise (coherent) sum of fields sharing one grid.
pub fn combine(fields: &[SampledField]) -> Result<SampledField> {
    let first = fields
        .first()
        .ok_or(Error::EmptyInput("combine needs at least one field"))?;
    if fields.len() == 1 {
        return Ok(first.clone());
    }
    let mut out = SampledField::zeros(first.grid);
    out.frame_offset = first.frame_offset;
    let mut low = f64::INFINITY;
    let mut high = f64::NEG_INFINITY;
    for field in fields {
        if field.grid != first.grid || field.frame_offset != first.frame_offset {
            return Err(Error::GridMismatch);
        }
        for (acc, x) in out.samples.iter_mut().zip(&field.samples) {
            *acc += x;
        }
        low = low.min(field.local_carrier() - field.bandwidth / 2.0);
        high = high.max(field.local_carrier() + field.bandwidth / 2.0);
    }
    // the aggregate is described by the span of its channels
    out.center_frequency_offset = first.frame_offset + (low + high) / 2.0;
    out.bandwidth = high - low;
    Ok(out)
}

fn check_band(grid: &TimeGrid, center: f64, bandwidth: f64) -> Result<()> {
    let low = center - bandwidth / 2.0;
    let high = center + bandwidth / 2.0;
    if !(bandwidth > 0.0) || low < -grid.nyquist() || high > grid.nyquist() {
        return Err(Error::BandOutsideGrid {
            low,
            high,
            nyquist: grid.nyquist(),
        });
    }
    Ok(())
}

fn in_band(f: f64, center: f64, bandwidth: f64, resolution: f64) -> bool {
    (f - center).abs() <= bandwidth / 2.0 + 1e-6 * resolution
}

/// Ideal rectangular band-pass around `center`; the result stays at its position.
pub fn band_filter(field: &SampledField, center: f64, bandwidth: f64) -> Result<SampledField> {
    check_band(&field.grid, center, bandwidth)?;
    let grid = field.grid;
    let mut spec = field.samples.clone();
    let mut fft = Fft::new(spec.len());
    fft.forward(&mut spec);
    for (k, x) in spec.iter_mut().enumerate() {
        if !in_band(grid.frequency(k), center, bandwidth, grid.resolution()) {
            *x = Complex64::new(0.0, 0.0);
        }
    }
    fft.inverse(&mut spec);
    Ok(SampledField {
        grid,
        samples: spec,
        center_frequency_offset: field.center_frequency_offset,
        frame_offset: field.frame_offset,
        bandwidth,
    })
}

/// Ideal rectangular band-pass around `center`, then a shift to baseband by an
/// integer number of bins (exact when `center` lies on a bin).
pub fn band_select(field: &SampledField, center: f64, bandwidth: f64) -> Result<SampledField> {
    check_band(&field.grid, center, bandwidth)?;
    let grid = field.grid;
    let n = grid.n_samples();
    let mut spec = field.samples.clone();
    let mut fft = Fft::new(n);
    fft.forward(&mut spec);
    let shift = (center / grid.resolution()).round() as i64;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (k, x) in spec.iter().enumerate() {
        if in_band(grid.frequency(k), center, bandwidth, grid.resolution()) {
            let dest = (k as i64 - shift).rem_euclid(n as i64) as usize;
            out[dest] = *x;
        }
    }
    fft.inverse(&mut out);
    let moved = shift as f64 * grid.resolution();
    Ok(SampledField {
        grid,
        samples: out,
        center_frequency_offset: field.frame_offset + moved,
        frame_offset: field.frame_offset + moved,
        bandwidth,
    })
}

/// One channel of a comb with the carrier it was placed on.
#[derive(Debug, Clone)]
pub struct CombChannel {
    pub field: SampledField,
    pub carrier_offset: f64,
}

/// Channels placed on a common grid and their coherent sum.
#[derive(Debug, Clone)]
pub struct WdmComb {
    pub channels: Vec<CombChannel>,
    pub aggregate: SampledField,
}

impl WdmComb {
    /// Places baseband channels at their carriers and sums them.
    ///
    /// Offsets must be integer multiples of `grid_spacing`; each carrier is snapped to the
    /// nearest frequency bin so the record stays periodic. Carriers must sit at least one
    /// channel bandwidth inside the Nyquist limit.
    pub fn assemble(channels: Vec<(SampledField, f64)>, grid_spacing: f64) -> Result<Self> {
        let first = channels
            .first()
            .ok_or(Error::EmptyInput("a comb needs at least one channel"))?;
        let grid = first.0.grid;
        let mut placed = Vec::with_capacity(channels.len());
        for (field, offset) in channels {
            if field.grid != grid {
                return Err(Error::GridMismatch);
            }
            if grid_spacing > 0.0 {
                let ratio = offset / grid_spacing;
                if (ratio - ratio.round()).abs() > 1e-9 {
                    return Err(Error::InvalidParameter(format!(
                        "carrier {offset:.6e} Hz is not on the {grid_spacing:.6e} Hz grid"
                    )));
                }
            }
            if offset.abs() + field.bandwidth >= grid.nyquist() {
                return Err(Error::Aliasing {
                    frequency: offset,
                    bandwidth: field.bandwidth,
                    sample_rate: grid.sample_rate(),
                });
            }
            let snapped = grid.snap(offset);
            let shifted = frequency_shift(&field, snapped - field.local_carrier())?;
            placed.push(CombChannel {
                field: shifted,
                carrier_offset: snapped,
            });
        }
        let fields: Vec<SampledField> = placed.iter().map(|c| c.field.clone()).collect();
        let aggregate = combine(&fields)?;
        Ok(Self {
            channels: placed,
            aggregate,
        })
    }
}
