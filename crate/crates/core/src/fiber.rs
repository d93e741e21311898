//! Scalar NLSE propagation by symmetric split-step Fourier, and the lumped span elements.
//!
//! The envelope obeys
//!
//! ```text
//! ∂A/∂z = −(α/2)·A − j(β₂/2)·∂²A/∂t² + (β₃/6)·∂³A/∂t³ + jγ|A|²A
//! ```
//!
//! With the FFT convention used throughout (A(t) = Σ Ã(f)·e^{+j2πft}) the linear
//! operator is −α/2 + j(β₂ω²/2 − β₃ω³/6), so an accumulated dispersion D_acc imprints
//! exp(−j·π·λ²·D_acc·f²/c) and receivers undo it with the conjugate.

use std::f64::consts::PI;

use log::warn;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{Fft, SampledField};
use crate::units::{ps_per_nm_to_si, SPEED_OF_LIGHT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiberParams {
    pub length_km: f64,
    pub attenuation_db_per_km: f64,
    pub dispersion_ps_nm_km: f64,
    pub dispersion_slope_ps_nm2_km: f64,
    pub gamma_per_w_km: f64,
    pub reference_wavelength_nm: f64,
}

impl Default for FiberParams {
    /// G.652 single-mode fiber, 50 km.
    fn default() -> Self {
        Self {
            length_km: 50.0,
            attenuation_db_per_km: 0.2,
            dispersion_ps_nm_km: 16.7,
            dispersion_slope_ps_nm2_km: 0.0,
            gamma_per_w_km: 1.27,
            reference_wavelength_nm: 1550.0,
        }
    }
}

impl FiberParams {
    pub fn with_length(&self, length_km: f64) -> Self {
        Self {
            length_km,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.length_km > 0.0
            && self.attenuation_db_per_km >= 0.0
            && self.gamma_per_w_km >= 0.0
            && self.reference_wavelength_nm > 0.0
            && self.dispersion_ps_nm_km.is_finite()
            && self.dispersion_slope_ps_nm2_km.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "invalid fiber parameters: {self:?}"
            )))
        }
    }

    pub fn wavelength_m(&self) -> f64 {
        self.reference_wavelength_nm * 1e-9
    }

    /// Optical frequency at the reference wavelength.
    pub fn reference_frequency(&self) -> f64 {
        SPEED_OF_LIGHT / self.wavelength_m()
    }

    /// Field attenuation coefficient α in 1/m (power decays as e^{−αz}).
    pub fn alpha_per_m(&self) -> f64 {
        self.attenuation_db_per_km * std::f64::consts::LN_10 / 10.0 / 1e3
    }

    /// β₂ in s²/m.
    pub fn beta2(&self) -> f64 {
        let lambda = self.wavelength_m();
        let d = self.dispersion_ps_nm_km * 1e-6;
        -d * lambda * lambda / (2.0 * PI * SPEED_OF_LIGHT)
    }

    /// β₃ in s³/m, from the slope alone: slope 0 means no third-order dispersion.
    pub fn beta3(&self) -> f64 {
        let lambda = self.wavelength_m();
        let s = self.dispersion_slope_ps_nm2_km * 1e3;
        let k = lambda * lambda / (2.0 * PI * SPEED_OF_LIGHT);
        k * k * s
    }

    pub fn gamma_per_w_m(&self) -> f64 {
        self.gamma_per_w_km / 1e3
    }

    pub fn length_m(&self) -> f64 {
        self.length_km * 1e3
    }

    /// Accumulated dispersion of the whole fiber, ps/nm.
    pub fn accumulated_dispersion(&self) -> f64 {
        self.dispersion_ps_nm_km * self.length_km
    }

    /// Span loss α·L in dB.
    pub fn loss_db(&self) -> f64 {
        self.attenuation_db_per_km * self.length_km
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepMode {
    Fixed,
    Adaptive,
}

/// Step-size control for the split-step integrator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepPolicy {
    pub mode: StepMode,
    pub fixed_step_km: f64,
    /// Largest nonlinear phase γ·P_peak·Δz allowed per adaptive step, rad.
    pub max_nonlinear_phase: f64,
    pub max_step_km: f64,
    /// Largest walk-off between the outermost channels per adaptive step, ps.
    /// Zero disables the bound.
    pub max_walkoff_ps: f64,
    /// Largest linear phase mismatch |β₂|·(2πB)²·Δz per adaptive step, rad, with B the
    /// occupied bandwidth. Keeps steps off the spurious four-wave-mixing resonances of
    /// the split-step scheme. Zero disables the bound.
    pub max_mismatch_phase: f64,
    /// Fail instead of warning when the grid is too short for the walk-off of one span.
    pub strict: bool,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self {
            mode: StepMode::Adaptive,
            fixed_step_km: 0.5,
            max_nonlinear_phase: 1.5e-3,
            max_step_km: 1.0,
            max_walkoff_ps: 20.0,
            max_mismatch_phase: 0.0,
            strict: false,
        }
    }
}

impl StepPolicy {
    pub fn fixed(step_km: f64) -> Self {
        Self {
            mode: StepMode::Fixed,
            fixed_step_km: step_km,
            ..Default::default()
        }
    }

    pub fn adaptive(max_nonlinear_phase: f64, max_step_km: f64) -> Self {
        Self {
            mode: StepMode::Adaptive,
            max_nonlinear_phase,
            max_step_km,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.mode {
            StepMode::Fixed => self.fixed_step_km > 0.0,
            StepMode::Adaptive => {
                self.max_nonlinear_phase > 0.0
                    && self.max_nonlinear_phase <= 0.1
                    && self.max_step_km > 0.0
                    && self.max_walkoff_ps >= 0.0
                    && self.max_mismatch_phase >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "invalid step policy: {self:?}"
            )))
        }
    }
}

/// Walk-off between spectral components `extent` Hz apart, in s per m of fiber.
fn walkoff_per_m(fiber: &FiberParams, extent: f64) -> f64 {
    let lambda = fiber.wavelength_m();
    let dlambda = lambda * lambda * extent / SPEED_OF_LIGHT;
    (fiber.dispersion_ps_nm_km * 1e-6).abs() * dlambda
}

/// Per-bin angular frequency on the simulation band (frame offset included).
fn omegas(field: &SampledField) -> Vec<f64> {
    let grid = field.grid;
    (0..grid.n_samples())
        .map(|k| 2.0 * PI * (grid.frequency(k) + field.frame_offset))
        .collect()
}

/// Effective length of a step of `h` m centred on the nonlinear kick.
fn effective_step(alpha: f64, h: f64) -> f64 {
    if alpha * h < 1e-12 {
        h
    } else {
        2.0 * (0.5 * alpha * h).sinh() / alpha
    }
}

struct LinearOperator {
    exponent: Vec<Complex64>,
    cached_step: f64,
    factors: Vec<Complex64>,
}

impl LinearOperator {
    fn new(field: &SampledField, fiber: &FiberParams) -> Self {
        let alpha = fiber.alpha_per_m();
        let b2 = fiber.beta2();
        let b3 = fiber.beta3();
        let exponent = omegas(field)
            .into_iter()
            .map(|w| Complex64::new(-alpha / 2.0, b2 * w * w / 2.0 - b3 * w * w * w / 6.0))
            .collect::<Vec<_>>();
        let n = exponent.len();
        Self {
            exponent,
            cached_step: f64::NAN,
            factors: vec![Complex64::new(1.0, 0.0); n],
        }
    }

    fn apply(&mut self, spec: &mut [Complex64], step: f64) {
        if step == 0.0 {
            return;
        }
        if step != self.cached_step {
            for (f, e) in self.factors.iter_mut().zip(&self.exponent) {
                *f = (e * step).exp();
            }
            self.cached_step = step;
        }
        for (x, f) in spec.iter_mut().zip(&self.factors) {
            *x *= f;
        }
    }
}

fn peak_power(samples: &[Complex64]) -> f64 {
    samples.iter().map(|x| x.norm_sqr()).fold(0.0, f64::max)
}

fn next_step(
    policy: &StepPolicy,
    gamma: f64,
    peak: f64,
    bandwidth_limit: f64,
    remaining: f64,
) -> f64 {
    let h = match policy.mode {
        StepMode::Fixed => policy.fixed_step_km * 1e3,
        StepMode::Adaptive => {
            let mut h = policy.max_step_km * 1e3;
            if gamma * peak > 0.0 {
                h = h.min(policy.max_nonlinear_phase / (gamma * peak));
            }
            h.min(bandwidth_limit)
        }
    };
    // avoid a sliver step at the end
    if remaining - h < 1e-6 * h {
        remaining
    } else {
        h
    }
}

/// Propagates `field` through `fiber` with the symmetric (half linear, nonlinear, half
/// linear) split-step scheme. Adjacent linear halves are merged, so each step costs one
/// forward and one inverse FFT.
pub fn propagate_fiber(
    field: &SampledField,
    fiber: &FiberParams,
    policy: &StepPolicy,
) -> Result<SampledField> {
    fiber.validate()?;
    policy.validate()?;
    let length = fiber.length_m();
    let duration = field.grid.duration();
    let walkoff_rate = walkoff_per_m(fiber, field.bandwidth);
    let span_walkoff = walkoff_rate * length;
    if span_walkoff > 0.1 * duration {
        if policy.strict {
            return Err(Error::WalkOff {
                walkoff_ps: span_walkoff * 1e12,
                duration_ps: duration * 1e12,
            });
        }
        warn!(
            "walk-off {:.1} ps over {:.1} km exceeds 10% of the {:.1} ps record",
            span_walkoff * 1e12,
            fiber.length_km,
            duration * 1e12
        );
    }
    let walkoff_limit = if policy.max_walkoff_ps > 0.0 && walkoff_rate > 0.0 {
        policy.max_walkoff_ps * 1e-12 / walkoff_rate
    } else {
        f64::INFINITY
    };
    let mismatch_rate = fiber.beta2().abs() * (2.0 * PI * field.bandwidth).powi(2);
    let bandwidth_limit = if policy.max_mismatch_phase > 0.0 && mismatch_rate > 0.0 {
        walkoff_limit.min(policy.max_mismatch_phase / mismatch_rate)
    } else {
        walkoff_limit
    };

    let alpha = fiber.alpha_per_m();
    let gamma = fiber.gamma_per_w_m();
    let n = field.len();
    let mut fft = Fft::new(n);
    let mut linear = LinearOperator::new(field, fiber);
    let mut a = field.samples.clone();

    if gamma == 0.0 {
        // purely linear: the whole fiber is one exact filter
        fft.forward(&mut a);
        linear.apply(&mut a, length);
        fft.inverse(&mut a);
        return Ok(SampledField {
            samples: a,
            ..field.clone()
        });
    }

    let mut peak = peak_power(&a);
    fft.forward(&mut a);
    let mut z = 0.0;
    let mut pending_half = 0.0;
    while z < length {
        let h = next_step(policy, gamma, peak, bandwidth_limit, length - z);
        linear.apply(&mut a, pending_half + h / 2.0);
        fft.inverse(&mut a);
        let leff = effective_step(alpha, h);
        let mut new_peak = 0.0f64;
        let mut finite = true;
        for x in a.iter_mut() {
            let p = x.norm_sqr();
            *x *= Complex64::from_polar(1.0, gamma * p * leff);
            new_peak = new_peak.max(p);
            finite &= x.re.is_finite() && x.im.is_finite();
        }
        if !finite {
            return Err(Error::NonFinite {
                z_km: (z + h) / 1e3,
            });
        }
        peak = new_peak;
        fft.forward(&mut a);
        pending_half = h / 2.0;
        z += h;
    }
    linear.apply(&mut a, pending_half);
    fft.inverse(&mut a);
    Ok(SampledField {
        samples: a,
        ..field.clone()
    })
}

/// Multiplies the spectrum by exp(−j·π·λ²·D·f²/c) for dispersion `d_ps_nm`, with λ the
/// wavelength of `reference_frequency` and f measured on the simulation band.
pub(crate) fn apply_dispersion_phase(
    field: &SampledField,
    d_ps_nm: f64,
    reference_frequency: f64,
) -> SampledField {
    if d_ps_nm == 0.0 {
        return field.clone();
    }
    let lambda = SPEED_OF_LIGHT / reference_frequency;
    let coeff = -PI * lambda * lambda * ps_per_nm_to_si(d_ps_nm) / SPEED_OF_LIGHT;
    let grid = field.grid;
    let mut spec = field.samples.clone();
    let mut fft = Fft::new(spec.len());
    fft.forward(&mut spec);
    for (k, x) in spec.iter_mut().enumerate() {
        let f = grid.frequency(k) + field.frame_offset;
        *x *= Complex64::from_polar(1.0, coeff * f * f);
    }
    fft.inverse(&mut spec);
    SampledField {
        samples: spec,
        ..field.clone()
    }
}

/// Lossless, nonlinearity-free lumped dispersion of `d_total` ps/nm.
pub fn apply_ideal_dispersion(
    field: &SampledField,
    d_total: f64,
    reference_frequency: f64,
) -> SampledField {
    apply_dispersion_phase(field, d_total, reference_frequency)
}

/// Noiseless amplifier: samples scale by 10^(gain/20).
pub fn apply_flat_gain(field: &SampledField, gain_db: f64) -> SampledField {
    if gain_db == 0.0 {
        return field.clone();
    }
    let scale = 10f64.powf(gain_db / 20.0);
    SampledField {
        samples: field.samples.iter().map(|x| x * scale).collect(),
        ..field.clone()
    }
}

/// One element of a dispersion-managed span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpanElement {
    Fiber(FiberParams),
    IdealDispersion { ps_per_nm: f64 },
    FlatGain { db: f64 },
}

impl SpanElement {
    pub fn apply(
        &self,
        field: &SampledField,
        policy: &StepPolicy,
        reference_frequency: f64,
    ) -> Result<SampledField> {
        match self {
            SpanElement::Fiber(fiber) => propagate_fiber(field, fiber, policy),
            SpanElement::IdealDispersion { ps_per_nm } => Ok(apply_ideal_dispersion(
                field,
                *ps_per_nm,
                reference_frequency,
            )),
            SpanElement::FlatGain { db } => Ok(apply_flat_gain(field, *db)),
        }
    }

    /// Accumulated dispersion this element adds, ps/nm.
    pub fn dispersion(&self) -> f64 {
        match self {
            SpanElement::Fiber(f) => f.accumulated_dispersion(),
            SpanElement::IdealDispersion { ps_per_nm } => *ps_per_nm,
            SpanElement::FlatGain { .. } => 0.0,
        }
    }
}
