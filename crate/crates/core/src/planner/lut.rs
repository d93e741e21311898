//! The pump & probe lookup table: CSV persistence and the guard-band answers built on
//! the independent-sum superposition of its rows.

use std::cmp::Ordering;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::link::ResidualDispersion;

pub const LUT_HEADER: [&str; 8] = [
    "d_res_il",
    "delta_f",
    "p_pump",
    "seed",
    "amp_variance",
    "phase_std",
    "trace_path",
    "error",
];

/// One pump & probe point.
#[derive(Debug, Clone, PartialEq)]
pub struct PumpProbeRecord {
    pub d_res_il: ResidualDispersion,
    /// Hz.
    pub delta_f: f64,
    /// dBm.
    pub p_pump: f64,
    pub seed: u64,
    pub amp_variance: f64,
    pub phase_std: f64,
    pub trace_path: Option<String>,
    /// Set for failed points, which queries ignore.
    pub error: Option<String>,
}

/// Scientific notation with 9 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.8e}")
}

fn format_map(d: ResidualDispersion) -> String {
    match d {
        ResidualDispersion::PerSpan(v) => format_float(v),
        ResidualDispersion::Uncompensated => "UT".into(),
    }
}

/// Unique key of a sweep point, stable across write/read round trips.
pub fn record_key(d_res_il: ResidualDispersion, delta_f: f64, p_pump: f64, seed: u64) -> String {
    format!(
        "{}|{}|{}|{seed}",
        format_map(d_res_il),
        format_float(delta_f),
        format_float(p_pump)
    )
}

impl PumpProbeRecord {
    pub fn key(&self) -> String {
        record_key(self.d_res_il, self.delta_f, self.p_pump, self.seed)
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    pub fn failed(
        d_res_il: ResidualDispersion,
        delta_f: f64,
        p_pump: f64,
        seed: u64,
        error: String,
    ) -> Self {
        Self {
            d_res_il,
            delta_f,
            p_pump,
            seed,
            amp_variance: f64::NAN,
            phase_std: f64::NAN,
            trace_path: None,
            error: Some(error),
        }
    }

    fn fields(&self) -> [String; 8] {
        [
            format_map(self.d_res_il),
            format_float(self.delta_f),
            format_float(self.p_pump),
            self.seed.to_string(),
            format_float(self.amp_variance),
            format_float(self.phase_std),
            self.trace_path.clone().unwrap_or_default(),
            self.error.clone().unwrap_or_default(),
        ]
    }

    fn from_fields(row: &csv::StringRecord) -> Result<Self> {
        if row.len() != LUT_HEADER.len() {
            return Err(Error::Format(format!(
                "expected {} fields, found {}",
                LUT_HEADER.len(),
                row.len()
            )));
        }
        let float = |i: usize| -> Result<f64> {
            row[i].trim().parse::<f64>().map_err(|_| {
                Error::Format(format!("{}: '{}' is not a number", LUT_HEADER[i], &row[i]))
            })
        };
        let optional = |i: usize| -> Option<String> {
            let s = row[i].trim();
            (!s.is_empty()).then(|| s.to_string())
        };
        Ok(Self {
            d_res_il: row[0].parse()?,
            delta_f: float(1)?,
            p_pump: float(2)?,
            seed: row[3]
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("seed: '{}' is not an integer", &row[3])))?,
            amp_variance: float(4)?,
            phase_std: float(5)?,
            trace_path: optional(6),
            error: optional(7),
        })
    }
}

/// Canonical LUT order: map (full compensation first, UT last), Δf, power, seed.
pub fn canonical_order(a: &PumpProbeRecord, b: &PumpProbeRecord) -> Ordering {
    a.d_res_il
        .sort_key()
        .total_cmp(&b.d_res_il.sort_key())
        .then(a.delta_f.total_cmp(&b.delta_f))
        .then(a.p_pump.total_cmp(&b.p_pump))
        .then(a.seed.cmp(&b.seed))
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

pub fn write_header<W: Write>(w: W) -> Result<()> {
    let mut out = writer(w);
    out.write_record(LUT_HEADER).map_err(csv_error)?;
    out.flush()?;
    Ok(())
}

/// Appends one row and flushes it.
pub fn append_record<W: Write>(w: W, record: &PumpProbeRecord) -> Result<()> {
    let mut out = writer(w);
    out.write_record(record.fields()).map_err(csv_error)?;
    out.flush()?;
    Ok(())
}

/// Serializes a whole table, header first, in the order given.
pub fn to_csv(records: &[PumpProbeRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_header(&mut buf)?;
    for r in records {
        append_record(&mut buf, r)?;
    }
    String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
}

/// Parses a LUT. A final line without its newline is the remnant of an interrupted
/// write and is dropped when `tolerate_truncation` is set.
pub fn parse_lut(text: &str, tolerate_truncation: bool) -> Result<Vec<PumpProbeRecord>> {
    let body = if tolerate_truncation && !text.is_empty() && !text.ends_with('\n') {
        match text.rfind('\n') {
            Some(i) => &text[..=i],
            None => "",
        }
    } else {
        text
    };
    if body.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(body.as_bytes());
    let header = reader.headers().map_err(csv_error)?.clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != LUT_HEADER {
        let missing: Vec<&str> = LUT_HEADER
            .iter()
            .copied()
            .filter(|h| !names.contains(h))
            .collect();
        return Err(Error::Format(format!(
            "LUT header {names:?} does not match; missing {missing:?}"
        )));
    }
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(csv_error)?;
        out.push(
            PumpProbeRecord::from_fields(&row)
                .map_err(|e| Error::Format(format!("row {}: {e}", i + 2)))?,
        );
    }
    Ok(out)
}

pub fn read_lut(path: &Path) -> Result<Vec<PumpProbeRecord>> {
    parse_lut(&fs::read_to_string(path)?, false)
}

/// Writes the table in canonical order through a temporary file and a rename.
pub fn write_lut(path: &Path, records: &[PumpProbeRecord]) -> Result<()> {
    let mut sorted = records.to_vec();
    sorted.sort_by(canonical_order);
    let tmp = path.with_extension("csv.tmp");
    fs::write(&tmp, to_csv(&sorted)?)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuardbandQuery {
    pub n_pumps: usize,
    /// Probe carrier to nearest pump carrier, Hz.
    pub guard_band: f64,
    pub pump_grid_spacing: f64,
    pub p_pump: f64,
    pub d_res_il: ResidualDispersion,
}

impl GuardbandQuery {
    pub fn pump_offsets(&self) -> Vec<f64> {
        (0..self.n_pumps)
            .map(|k| self.guard_band + k as f64 * self.pump_grid_spacing)
            .collect()
    }
}

/// How a prediction was combined from single-pump statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombinationPath {
    /// Σσᵢ² for phase, Σ amp varianceᵢ for amplitude, from LUT moments.
    LutVarianceSum,
    /// Product of stored full traces.
    TraceProduct,
}

impl CombinationPath {
    pub fn as_str(&self) -> &'static str {
        match self {
            CombinationPath::LutVarianceSum => "lut-variance-sum",
            CombinationPath::TraceProduct => "trace-product",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub amp_variance: f64,
    pub phase_std: f64,
    pub path: CombinationPath,
}

const POWER_TOLERANCE_DB: f64 = 1e-6;

fn same_map(a: ResidualDispersion, b: ResidualDispersion) -> bool {
    match (a, b) {
        (ResidualDispersion::PerSpan(x), ResidualDispersion::PerSpan(y)) => {
            (x - y).abs() <= 1e-9 * x.abs().max(1.0)
        }
        (ResidualDispersion::Uncompensated, ResidualDispersion::Uncompensated) => true,
        _ => false,
    }
}

/// Seed-averaged (|Δf|, phase variance, amplitude variance) for one map and power,
/// sorted by |Δf|. Pumps on either side of the probe share a row.
pub fn single_pump_curve(
    lut: &[PumpProbeRecord],
    d_res_il: ResidualDispersion,
    p_pump: f64,
) -> Vec<(f64, f64, f64)> {
    let mut rows: Vec<&PumpProbeRecord> = lut
        .iter()
        .filter(|r| {
            r.is_ok()
                && same_map(r.d_res_il, d_res_il)
                && (r.p_pump - p_pump).abs() <= POWER_TOLERANCE_DB
        })
        .collect();
    rows.sort_by(|a, b| a.delta_f.abs().total_cmp(&b.delta_f.abs()));
    let mut curve: Vec<(f64, f64, f64, usize)> = Vec::new();
    for r in rows {
        let f = r.delta_f.abs();
        match curve.last_mut() {
            Some(last) if (last.0 - f).abs() <= 1e-9 * f => {
                last.1 += r.phase_std * r.phase_std;
                last.2 += r.amp_variance;
                last.3 += 1;
            }
            _ => curve.push((f, r.phase_std * r.phase_std, r.amp_variance, 1)),
        }
    }
    curve
        .into_iter()
        .map(|(f, pv, av, n)| (f, pv / n as f64, av / n as f64))
        .collect()
}

/// Piecewise-linear interpolation of (phase variance, amplitude variance) at |Δf|.
fn interpolate(curve: &[(f64, f64, f64)], delta_f: f64) -> Option<(f64, f64)> {
    let f = delta_f.abs();
    let tol = 1e-9 * f.max(1.0);
    let first = curve.first()?;
    let last = curve.last()?;
    if f < first.0 - tol || f > last.0 + tol {
        return None;
    }
    for w in curve.windows(2) {
        if (w[0].0 - f).abs() <= tol {
            return Some((w[0].1, w[0].2));
        }
        if f > w[0].0 && f < w[1].0 {
            let t = (f - w[0].0) / (w[1].0 - w[0].0);
            return Some((
                w[0].1 + t * (w[1].1 - w[0].1),
                w[0].2 + t * (w[1].2 - w[0].2),
            ));
        }
    }
    Some((last.1, last.2))
}

/// Noise from `n_pumps` pumps on the grid above the probe, by summing single-pump
/// variances. No extrapolation beyond the LUT's Δf range.
pub fn predict_xpm(query: &GuardbandQuery, lut: &[PumpProbeRecord]) -> Result<Prediction> {
    if query.n_pumps == 0 {
        return Err(Error::InvalidParameter(
            "a query needs at least one pump".into(),
        ));
    }
    if !(query.guard_band > 0.0) {
        return Err(Error::InvalidParameter(
            "guard band must be positive".into(),
        ));
    }
    let curve = single_pump_curve(lut, query.d_res_il, query.p_pump);
    if curve.is_empty() {
        return Err(Error::OutsideLut(format!(
            "no rows for d_res_il = {}, p_pump = {} dBm",
            query.d_res_il, query.p_pump
        )));
    }
    let (mut phase_var, mut amp_var) = (0.0, 0.0);
    for f in query.pump_offsets() {
        let (pv, av) = interpolate(&curve, f).ok_or_else(|| {
            Error::OutsideLut(format!(
                "pump at {:.3} GHz outside the table's {:.3}..{:.3} GHz",
                f / 1e9,
                curve[0].0 / 1e9,
                curve[curve.len() - 1].0 / 1e9
            ))
        })?;
        phase_var += pv;
        amp_var += av;
    }
    Ok(Prediction {
        amp_variance: amp_var,
        phase_std: phase_var.sqrt(),
        path: CombinationPath::LutVarianceSum,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Recommendation {
    /// Smallest guard band on the grid meeting the tolerance, Hz.
    Found(f64),
    /// No guard band the table can answer for meets the tolerance.
    Unattainable,
}

/// Smallest guard band on the channel grid whose predicted phase_std is within
/// `max_phase_std`.
pub fn recommend_guardband(
    max_phase_std: f64,
    n_pumps: usize,
    p_pump: f64,
    d_res_il: ResidualDispersion,
    pump_grid_spacing: f64,
    lut: &[PumpProbeRecord],
) -> Result<Recommendation> {
    if max_phase_std.is_nan() || max_phase_std < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance {max_phase_std} rad"
        )));
    }
    if n_pumps == 0 || !(pump_grid_spacing > 0.0) {
        return Err(Error::InvalidParameter(
            "need pumps and a positive grid spacing".into(),
        ));
    }
    let curve = single_pump_curve(lut, d_res_il, p_pump);
    let last = curve.last().map(|c| c.0).unwrap_or(0.0);
    let span = (n_pumps - 1) as f64 * pump_grid_spacing;
    let n_candidates = ((last - span) / pump_grid_spacing + 1e-9).floor();
    if n_candidates < 1.0 {
        return Err(Error::OutsideLut(format!(
            "{n_pumps} pumps on a {:.0} GHz grid do not fit below the table's {:.0} GHz",
            pump_grid_spacing / 1e9,
            last / 1e9
        )));
    }
    for k in 1..=n_candidates as usize {
        let guard_band = k as f64 * pump_grid_spacing;
        let query = GuardbandQuery {
            n_pumps,
            guard_band,
            pump_grid_spacing,
            p_pump,
            d_res_il,
        };
        if predict_xpm(&query, lut)?.phase_std <= max_phase_std {
            return Ok(Recommendation::Found(guard_band));
        }
    }
    Ok(Recommendation::Unattainable)
}

/// Pairs of rows at ±Δf whose phase_std differ by more than `tolerance` (relative).
pub fn symmetry_violations(
    lut: &[PumpProbeRecord],
    tolerance: f64,
) -> Vec<(PumpProbeRecord, PumpProbeRecord)> {
    let mut out = Vec::new();
    for a in lut.iter().filter(|r| r.is_ok() && r.delta_f > 0.0) {
        for b in lut.iter().filter(|r| r.is_ok() && r.delta_f < 0.0) {
            let mirrored = same_map(a.d_res_il, b.d_res_il)
                && (a.p_pump - b.p_pump).abs() <= POWER_TOLERANCE_DB
                && a.seed == b.seed
                && (a.delta_f + b.delta_f).abs() <= 1e-9 * a.delta_f;
            if mirrored
                && (a.phase_std - b.phase_std).abs() > tolerance * a.phase_std.max(b.phase_std)
            {
                out.push((a.clone(), b.clone()));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(
        d: ResidualDispersion,
        df_ghz: f64,
        p: f64,
        seed: u64,
        av: f64,
        ps: f64,
    ) -> PumpProbeRecord {
        PumpProbeRecord {
            d_res_il: d,
            delta_f: df_ghz * 1e9,
            p_pump: p,
            seed,
            amp_variance: av,
            phase_std: ps,
            trace_path: None,
            error: None,
        }
    }

    /// A table with phase_std ∝ 1/√Δf at 50 ps/nm and 1 dBm, 50 GHz .. 1 THz.
    pub(crate) fn synthetic() -> Vec<PumpProbeRecord> {
        let d = ResidualDispersion::PerSpan(50.0);
        (1..=20)
            .map(|k| {
                let f = 50.0 * k as f64;
                rec(d, f, 1.0, 1, 1e-3 * 50.0 / f, 0.16 * (50.0 / f).sqrt())
            })
            .collect()
    }

    #[test]
    fn csv_round_trip_and_format() {
        let mut rows = synthetic();
        rows.push(PumpProbeRecord::failed(
            ResidualDispersion::Uncompensated,
            50e9,
            1.0,
            2,
            "diverged, step too large".into(),
        ));
        rows[0].trace_path = Some("traces/a.xpmtrace".into());
        let text = to_csv(&rows).unwrap();
        assert!(text
            .starts_with("d_res_il,delta_f,p_pump,seed,amp_variance,phase_std,trace_path,error\n"));
        assert!(text.contains("5.00000000e1,5.00000000e10,1.00000000e0,1,"));
        assert!(text.contains("UT,5.00000000e10"));
        let back = parse_lut(&text, false).unwrap();
        assert_eq!(to_csv(&back).unwrap(), text);
        assert_eq!(back[20].error.as_deref(), Some("diverged, step too large"));
    }

    #[test]
    fn truncated_tail_is_dropped_only_when_tolerated() {
        let text = to_csv(&synthetic()[..3]).unwrap();
        let cut = &text[..text.len() - 7];
        assert_eq!(parse_lut(cut, true).unwrap().len(), 2);
        assert!(parse_lut(cut, false).is_err());
        assert!(parse_lut("d_res_il,delta_f\n", false).is_err());
    }

    #[test]
    fn single_pump_query_returns_row() {
        let lut = synthetic();
        let q = GuardbandQuery {
            n_pumps: 1,
            guard_band: 300e9,
            pump_grid_spacing: 50e9,
            p_pump: 1.0,
            d_res_il: ResidualDispersion::PerSpan(50.0),
        };
        let p = predict_xpm(&q, &lut).unwrap();
        assert_eq!(p.phase_std, lut[5].phase_std);
        assert_eq!(p.amp_variance, lut[5].amp_variance);
    }

    #[test]
    fn eleven_pumps_wider_guard_band_is_quieter() {
        let lut = synthetic();
        let q = |g: f64| GuardbandQuery {
            n_pumps: 11,
            guard_band: g,
            pump_grid_spacing: 50e9,
            p_pump: 1.0,
            d_res_il: ResidualDispersion::PerSpan(50.0),
        };
        let near = predict_xpm(&q(300e9), &lut).unwrap();
        let far = predict_xpm(&q(500e9), &lut).unwrap();
        assert!(near.phase_std > far.phase_std);
        assert!(matches!(
            predict_xpm(&q(600e9), &lut),
            Err(Error::OutsideLut(_))
        ));
        assert!(matches!(
            predict_xpm(&q(10e9), &lut),
            Err(Error::OutsideLut(_))
        ));
    }

    #[test]
    fn interpolation_is_linear_in_variance() {
        let d = ResidualDispersion::PerSpan(0.0);
        let lut = vec![
            rec(d, 50.0, 1.0, 1, 4e-3, 0.2),
            rec(d, 150.0, 1.0, 1, 2e-3, 0.1),
        ];
        let q = GuardbandQuery {
            n_pumps: 1,
            guard_band: 100e9,
            pump_grid_spacing: 50e9,
            p_pump: 1.0,
            d_res_il: d,
        };
        let p = predict_xpm(&q, &lut).unwrap();
        assert!((p.phase_std - ((0.04 + 0.01) / 2.0f64).sqrt()).abs() < 1e-15);
        assert!((p.amp_variance - 3e-3).abs() < 1e-15);
    }

    #[test]
    fn seeds_and_sides_average_failed_rows_ignored() {
        let d = ResidualDispersion::PerSpan(0.0);
        let mut lut = vec![
            rec(d, 50.0, 1.0, 1, 1e-3, 0.1),
            rec(d, -50.0, 1.0, 1, 3e-3, 0.2),
        ];
        lut.push(PumpProbeRecord::failed(d, 50.0e9, 1.0, 2, "x".into()));
        let curve = single_pump_curve(&lut, d, 1.0);
        assert_eq!(curve.len(), 1);
        assert!((curve[0].1 - 0.025).abs() < 1e-15);
        assert!((curve[0].2 - 2e-3).abs() < 1e-15);
        let viol = symmetry_violations(&lut, 0.15);
        assert_eq!(viol.len(), 1);
    }

    #[test]
    fn recommend_examples() {
        let lut = synthetic();
        let d = ResidualDispersion::PerSpan(50.0);
        assert_eq!(
            recommend_guardband(f64::INFINITY, 11, 1.0, d, 50e9, &lut).unwrap(),
            Recommendation::Found(50e9)
        );
        assert_eq!(
            recommend_guardband(0.0, 11, 1.0, d, 50e9, &lut).unwrap(),
            Recommendation::Unattainable
        );
        let q = GuardbandQuery {
            n_pumps: 11,
            guard_band: 300e9,
            pump_grid_spacing: 50e9,
            p_pump: 1.0,
            d_res_il: d,
        };
        let target = predict_xpm(&q, &lut).unwrap().phase_std;
        assert_eq!(
            recommend_guardband(target, 11, 1.0, d, 50e9, &lut).unwrap(),
            Recommendation::Found(300e9)
        );
        assert!(recommend_guardband(0.1, 30, 1.0, d, 50e9, &lut).is_err());
        assert!(recommend_guardband(0.1, 3, 4.0, d, 50e9, &lut).is_err());
    }

    proptest! {
        #[test]
        fn adding_a_pump_never_lowers_noise(n in 1usize..10, g in 1usize..8) {
            let lut = synthetic();
            let q = GuardbandQuery {
                n_pumps: n,
                guard_band: g as f64 * 50e9,
                pump_grid_spacing: 50e9,
                p_pump: 1.0,
                d_res_il: ResidualDispersion::PerSpan(50.0),
            };
            let a = predict_xpm(&q, &lut).unwrap();
            let b = predict_xpm(&GuardbandQuery { n_pumps: n + 1, ..q }, &lut).unwrap();
            prop_assert!(b.phase_std >= a.phase_std);
            prop_assert!(b.amp_variance >= a.amp_variance);
        }

        #[test]
        fn recommendation_monotone_in_tolerance(t1 in 0.0f64..0.6, t2 in 0.0f64..0.6, n in 1usize..8) {
            let lut = synthetic();
            let d = ResidualDispersion::PerSpan(50.0);
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let a = recommend_guardband(lo, n, 1.0, d, 50e9, &lut).unwrap();
            let b = recommend_guardband(hi, n, 1.0, d, 50e9, &lut).unwrap();
            match (a, b) {
                (Recommendation::Found(ga), Recommendation::Found(gb)) => prop_assert!(gb <= ga),
                (Recommendation::Found(_), Recommendation::Unattainable) => prop_assert!(false),
                _ => {}
            }
        }
    }
}
