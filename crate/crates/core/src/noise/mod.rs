//! Extraction and characterization of XPM and FWM noise.

pub mod fwm;
pub mod spectrum;
pub mod trace;

pub use fwm::{fwm_scan, FwmMetadata, FwmReport};
pub use spectrum::{phase_pdf, phase_spectrum, PhasePdf, PhaseSpectrum};
pub use trace::{
    align_fields, extract_rho, superpose, Alignment, PumpTag, TraceMetadata, XpmNoiseTrace,
};
