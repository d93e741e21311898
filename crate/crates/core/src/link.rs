//! Dispersion-managed links: randomized spans, in-line compensation leaving a per-span
//! residual, loss-restoring gain, and receiver-side recovery of the accumulated CD.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fiber::{FiberParams, SpanElement, StepPolicy};
use crate::signal::{band_select, SampledField};
use crate::transceivers::compensate_cd;

/// In-line residual dispersion per span.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResidualDispersion {
    /// ps/nm left uncompensated at the end of every span.
    PerSpan(f64),
    /// Uncompensated transmission: no in-line compensators.
    Uncompensated,
}

impl ResidualDispersion {
    pub fn per_span(&self) -> Option<f64> {
        match self {
            ResidualDispersion::PerSpan(d) => Some(*d),
            ResidualDispersion::Uncompensated => None,
        }
    }

    pub fn is_ut(&self) -> bool {
        matches!(self, ResidualDispersion::Uncompensated)
    }

    /// Orders maps from full compensation towards UT.
    pub fn sort_key(&self) -> f64 {
        self.per_span().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for ResidualDispersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResidualDispersion::PerSpan(d) => write!(f, "{d}"),
            ResidualDispersion::Uncompensated => write!(f, "UT"),
        }
    }
}

impl std::str::FromStr for ResidualDispersion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("ut") {
            return Ok(ResidualDispersion::Uncompensated);
        }
        let number = s.strip_suffix("ps/nm").unwrap_or(s).trim();
        number
            .parse::<f64>()
            .ok()
            .filter(|d| d.is_finite())
            .map(ResidualDispersion::PerSpan)
            .ok_or_else(|| Error::InvalidParameter(format!("'{s}' is neither ps/nm nor UT")))
    }
}

impl Serialize for ResidualDispersion {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ResidualDispersion::PerSpan(d) => s.serialize_f64(*d),
            ResidualDispersion::Uncompensated => s.serialize_str("UT"),
        }
    }
}

impl<'de> Deserialize<'de> for ResidualDispersion {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(x) => Ok(ResidualDispersion::PerSpan(x)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// How the in-line compensator of each span is sized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompensatorSizing {
    /// Sized for the mean span length: length randomization perturbs each residual.
    Nominal,
    /// Sized for each realized length: every span leaves exactly the target residual.
    Realized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DmLinkConfig {
    pub n_spans: usize,
    pub mean_span_length_km: f64,
    /// Half-range δ of the uniform span-length distribution, as a fraction of the mean.
    pub span_length_jitter: f64,
    pub d_res_il: ResidualDispersion,
    pub compensator_sizing: CompensatorSizing,
    pub seed: u64,
    pub fiber: FiberParams,
    pub step: StepPolicy,
}

impl Default for DmLinkConfig {
    fn default() -> Self {
        Self {
            n_spans: 20,
            mean_span_length_km: 50.0,
            span_length_jitter: 0.1,
            d_res_il: ResidualDispersion::PerSpan(0.0),
            compensator_sizing: CompensatorSizing::Nominal,
            seed: 1,
            fiber: FiberParams::default(),
            step: StepPolicy::default(),
        }
    }
}

/// A built link. `elements` holds, per span, the fiber, the compensator (absent for UT)
/// and the amplifier, in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct DmLink {
    pub elements: Vec<SpanElement>,
    pub realized_span_lengths: Vec<f64>,
    /// Residual dispersion left by each span, ps/nm.
    pub span_residuals: Vec<f64>,
    pub total_accumulated_dispersion: f64,
    pub step: StepPolicy,
    pub reference_frequency: f64,
}

impl DmLink {
    /// An empty link (back-to-back).
    pub fn back_to_back(fiber: &FiberParams) -> Self {
        Self {
            elements: Vec::new(),
            realized_span_lengths: Vec::new(),
            span_residuals: Vec::new(),
            total_accumulated_dispersion: 0.0,
            step: StepPolicy::default(),
            reference_frequency: fiber.reference_frequency(),
        }
    }

    pub fn n_spans(&self) -> usize {
        self.realized_span_lengths.len()
    }
}

/// Span lengths drawn uniformly on [mean·(1−δ), mean·(1+δ)] from the config seed.
pub fn span_lengths(cfg: &DmLinkConfig) -> Result<Vec<f64>> {
    if cfg.n_spans == 0 || !(cfg.mean_span_length_km > 0.0) {
        return Err(Error::InvalidParameter(
            "a link needs at least one span of positive mean length".into(),
        ));
    }
    let delta = cfg.span_length_jitter;
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!(
            "span length jitter {delta} would allow non-positive spans"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok((0..cfg.n_spans)
        .map(|_| {
            let u: f64 = rng.gen_range(-1.0..=1.0);
            cfg.mean_span_length_km * (1.0 + delta * u)
        })
        .collect())
}

pub fn build_link(cfg: &DmLinkConfig) -> Result<DmLink> {
    cfg.fiber.validate()?;
    cfg.step.validate()?;
    let lengths = span_lengths(cfg)?;
    let d = cfg.fiber.dispersion_ps_nm_km;
    let mut elements = Vec::with_capacity(3 * lengths.len());
    let mut residuals = Vec::with_capacity(lengths.len());
    for &length in &lengths {
        let fiber = cfg.fiber.with_length(length);
        let span_cd = fiber.accumulated_dispersion();
        elements.push(SpanElement::Fiber(fiber.clone()));
        match cfg.d_res_il {
            ResidualDispersion::PerSpan(target) => {
                let sized_for = match cfg.compensator_sizing {
                    CompensatorSizing::Nominal => cfg.mean_span_length_km * d,
                    CompensatorSizing::Realized => span_cd,
                };
                let compensation = -(sized_for - target);
                elements.push(SpanElement::IdealDispersion {
                    ps_per_nm: compensation,
                });
                residuals.push(span_cd + compensation);
            }
            ResidualDispersion::Uncompensated => residuals.push(span_cd),
        }
        elements.push(SpanElement::FlatGain {
            db: fiber.loss_db(),
        });
    }
    let total = residuals.iter().sum();
    Ok(DmLink {
        elements,
        realized_span_lengths: lengths,
        span_residuals: residuals,
        total_accumulated_dispersion: total,
        step: cfg.step.clone(),
        reference_frequency: cfg.fiber.reference_frequency(),
    })
}

/// Applies every span element in order; `on_span` sees the field after each amplifier.
pub fn propagate_link_with<F>(
    comb: &SampledField,
    link: &DmLink,
    mut on_span: F,
) -> Result<SampledField>
where
    F: FnMut(usize, &SampledField),
{
    let mut field = comb.clone();
    let mut span = 0;
    for element in &link.elements {
        field = element.apply(&field, &link.step, link.reference_frequency)?;
        if matches!(element, SpanElement::FlatGain { .. }) {
            on_span(span, &field);
            span += 1;
        }
    }
    Ok(field)
}

pub fn propagate_link(comb: &SampledField, link: &DmLink) -> Result<SampledField> {
    propagate_link_with(comb, link, |_, _| ())
}

/// Selects the probe band, moves it to baseband and removes the link's accumulated
/// dispersion: the received probe after CD compensation and before any DSP.
pub fn receive_probe(
    a_rx_comb: &SampledField,
    link: &DmLink,
    probe_offset: f64,
    probe_bandwidth: f64,
) -> Result<SampledField> {
    let probe = band_select(a_rx_comb, probe_offset, probe_bandwidth)?;
    Ok(compensate_cd(
        &probe,
        link.total_accumulated_dispersion,
        link.reference_frequency,
    ))
}
