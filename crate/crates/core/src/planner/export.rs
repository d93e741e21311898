//! CSV files for the plotting scripts: phase spectra, phase PDFs and predictions.

use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::link::ResidualDispersion;
use crate::noise::{phase_pdf, phase_spectrum, PhasePdf, PhaseSpectrum, XpmNoiseTrace};
use crate::planner::lut::{format_float, GuardbandQuery, Prediction};
use crate::planner::store::trace_file_name;

pub const SPECTRA_DIR: &str = "spectra";
pub const PDF_DIR: &str = "pdf";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const PDF_BINS: usize = 101;

pub const SPECTRUM_HEADER: [&str; 2] = ["frequency", "psd"];
pub const PDF_HEADER: [&str; 2] = ["phase", "density"];
pub const PREDICTION_HEADER: [&str; 8] = [
    "d_res_il",
    "p_pump",
    "n_pumps",
    "guard_band",
    "pump_grid_spacing",
    "amp_variance",
    "phase_std",
    "path",
];

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

fn two_columns(header: [&str; 2], x: &[f64], y: &[f64]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for (a, b) in x.iter().zip(y) {
        w.write_record([format_float(*a), format_float(*b)])
            .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

/// One-sided PSD of φ: `frequency` in Hz, `psd` in rad²/Hz.
pub fn spectrum_to_csv(s: &PhaseSpectrum) -> Result<String> {
    two_columns(SPECTRUM_HEADER, &s.frequency, &s.psd)
}

/// Histogram of φ: `phase` bin centres in rad, `density` in 1/rad.
pub fn pdf_to_csv(p: &PhasePdf) -> Result<String> {
    two_columns(PDF_HEADER, &p.bin_centers, &p.density)
}

/// Output stem shared by the spectrum and PDF files of a trace.
pub fn analysis_stem(trace: &XpmNoiseTrace) -> String {
    trace_file_name(&trace.metadata)
        .trim_end_matches(".xpmtrace")
        .to_string()
}

/// Writes `<out>/spectra/<stem>.csv` and `<out>/pdf/<stem>.csv`.
pub fn write_analysis(out_dir: &Path, trace: &XpmNoiseTrace) -> Result<(PathBuf, PathBuf)> {
    let stem = analysis_stem(trace);
    let spectra = out_dir.join(SPECTRA_DIR);
    let pdfs = out_dir.join(PDF_DIR);
    fs::create_dir_all(&spectra)?;
    fs::create_dir_all(&pdfs)?;
    let s_path = spectra.join(format!("{stem}.csv"));
    let p_path = pdfs.join(format!("{stem}.csv"));
    fs::write(&s_path, spectrum_to_csv(&phase_spectrum(trace)?)?)?;
    fs::write(&p_path, pdf_to_csv(&phase_pdf(trace, PDF_BINS)?)?)?;
    Ok((s_path, p_path))
}

fn map_text(d: ResidualDispersion) -> String {
    match d {
        ResidualDispersion::PerSpan(v) => format_float(v),
        ResidualDispersion::Uncompensated => "UT".into(),
    }
}

/// Appends a row to a predictions file, writing the header first if the file is new.
pub fn append_prediction(
    path: &Path,
    query: &GuardbandQuery,
    prediction: &Prediction,
) -> Result<()> {
    let fresh = !path.exists() || fs::metadata(path)?.len() == 0;
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::Writer::from_writer(file);
    if fresh {
        w.write_record(PREDICTION_HEADER).map_err(csv_err)?;
    }
    w.write_record([
        map_text(query.d_res_il),
        format_float(query.p_pump),
        query.n_pumps.to_string(),
        format_float(query.guard_band),
        format_float(query.pump_grid_spacing),
        format_float(prediction.amp_variance),
        format_float(prediction.phase_std),
        prediction.path.as_str().to_string(),
    ])
    .map_err(csv_err)?;
    w.flush()?;
    Ok(())
}
