//! Spectral density and distribution of the XPM phase noise.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::noise::trace::XpmNoiseTrace;
use crate::signal::Fft;

pub const PSD_SEGMENT: usize = 1 << 12;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpectrum {
    /// One-sided frequency axis, 0 to fs/2.
    pub frequency: Vec<f64>,
    /// rad²/Hz; Σ psd·Δf is the variance of φ.
    pub psd: Vec<f64>,
    pub segments: usize,
}

impl PhaseSpectrum {
    pub fn resolution(&self) -> f64 {
        self.frequency.get(1).copied().unwrap_or(0.0)
    }

    pub fn total_power(&self) -> f64 {
        self.psd.iter().sum::<f64>() * self.resolution()
    }

    /// Fraction of the PSD power at or below `f`.
    pub fn fraction_below(&self, f: f64) -> f64 {
        let total: f64 = self.psd.iter().sum();
        let below: f64 = self
            .frequency
            .iter()
            .zip(&self.psd)
            .filter(|(x, _)| **x <= f)
            .map(|(_, p)| p)
            .sum();
        below / total
    }
}

/// Welch PSD of φ − mean(φ) over the trimmed record with segments of `PSD_SEGMENT`
/// samples, a Hann window and 50% overlap.
pub fn phase_spectrum(trace: &XpmNoiseTrace) -> Result<PhaseSpectrum> {
    let range = trace.trimmed_range();
    welch(&trace.phi[range], trace.sample_rate, PSD_SEGMENT)
}

pub fn welch(x: &[f64], sample_rate: f64, segment: usize) -> Result<PhaseSpectrum> {
    if x.len() < segment {
        return Err(Error::InsufficientSamples {
            needed: segment,
            available: x.len(),
        });
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let window: Vec<f64> = (0..segment)
        .map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / segment as f64).cos())
        .collect();
    let w2: f64 = window.iter().map(|w| w * w).sum();
    let hop = segment / 2;
    let mut fft = Fft::new(segment);
    let half = segment / 2 + 1;
    let mut acc = vec![0.0; half];
    let mut segments = 0;
    let mut start = 0;
    let mut buf = vec![Complex64::new(0.0, 0.0); segment];
    while start + segment <= x.len() {
        for k in 0..segment {
            buf[k] = Complex64::new((x[start + k] - mean) * window[k], 0.0);
        }
        fft.forward(&mut buf);
        for k in 0..half {
            acc[k] += buf[k].norm_sqr();
        }
        segments += 1;
        start += hop;
    }
    let scale = 1.0 / (sample_rate * w2 * segments as f64);
    let psd = acc
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let one_sided = if k == 0 || k == segment / 2 { 1.0 } else { 2.0 };
            p * scale * one_sided
        })
        .collect();
    let df = sample_rate / segment as f64;
    Ok(PhaseSpectrum {
        frequency: (0..half).map(|k| k as f64 * df).collect(),
        psd,
        segments,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhasePdf {
    pub bin_centers: Vec<f64>,
    /// 1/rad; integrates to one over the bins.
    pub density: Vec<f64>,
    pub bin_width: f64,
    pub mean: f64,
    pub std: f64,
    /// Samples beyond mean ± 5σ, left out of the histogram.
    pub outside: usize,
    /// Zero-spread trace: a single delta bin at the mean.
    pub degenerate: bool,
}

/// Normalized histogram of φ − mean(φ) over valid trimmed samples, on mean ± 5σ.
pub fn phase_pdf(trace: &XpmNoiseTrace, n_bins: usize) -> Result<PhasePdf> {
    if n_bins < 16 {
        return Err(Error::InvalidParameter(format!(
            "{n_bins} bins; at least 16 needed"
        )));
    }
    let values: Vec<f64> = trace
        .trimmed_range()
        .filter(|&k| trace.valid[k])
        .map(|k| trace.phi[k] - trace.mean_phase)
        .collect();
    histogram(&values, n_bins)
}

pub fn histogram(values: &[f64], n_bins: usize) -> Result<PhasePdf> {
    if values.is_empty() {
        return Err(Error::EmptyInput("no samples for a histogram"));
    }
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count).sqrt();
    if !(std > 0.0) {
        return Ok(PhasePdf {
            bin_centers: vec![mean],
            density: vec![1.0],
            bin_width: 0.0,
            mean,
            std: 0.0,
            outside: 0,
            degenerate: true,
        });
    }
    let low = mean - 5.0 * std;
    let width = 10.0 * std / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    let mut outside = 0;
    for v in values {
        let b = ((v - low) / width).floor();
        if b >= 0.0 && (b as usize) < n_bins {
            counts[b as usize] += 1;
        } else if (v - (low + 10.0 * std)).abs() < 1e-12 * std {
            counts[n_bins - 1] += 1;
        } else {
            outside += 1;
        }
    }
    let inside = (values.len() - outside) as f64;
    Ok(PhasePdf {
        bin_centers: (0..n_bins)
            .map(|b| low + (b as f64 + 0.5) * width)
            .collect(),
        density: counts
            .iter()
            .map(|&c| c as f64 / (inside * width))
            .collect(),
        bin_width: width,
        mean,
        std,
        outside,
        degenerate: false,
    })
}
