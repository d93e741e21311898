//! Resumable sweep campaigns.
//!
//! A pump & probe sweep appends one LUT row per finished point to `<out>/lut.csv`
//! (flushed immediately, single writer) and rewrites the table in canonical order at
//! the end. Restarting skips every key already present, so a killed campaign resumes
//! where it stopped and ends with the same bytes as an uninterrupted one.

use std::collections::HashSet;
use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::link::ResidualDispersion;
use crate::noise::FwmReport;
use crate::planner::config::{GridSizing, SweepGrid};
use crate::planner::lut::{
    self, canonical_order, format_float, parse_lut, record_key, PumpProbeRecord,
};
use crate::planner::scenario::{PumpSpec, Scenario};
use crate::planner::store::{trace_file_name, write_trace};
use crate::signal::TimeGrid;

pub const LUT_FILE: &str = "lut.csv";
pub const TRACE_DIR: &str = "traces";
pub const FWM_DIR: &str = "fwm";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub d_res_il: ResidualDispersion,
    pub delta_f: f64,
    pub p_pump: f64,
    pub seed: u64,
}

impl SweepPoint {
    pub fn key(&self) -> String {
        record_key(self.d_res_il, self.delta_f, self.p_pump, self.seed)
    }
}

/// Every point of the grid, in canonical LUT order.
pub fn sweep_points(grid: &SweepGrid) -> Vec<SweepPoint> {
    let mut maps = grid.d_res_il.clone();
    maps.sort_by(|a, b| a.sort_key().total_cmp(&b.sort_key()));
    let mut dfs = grid.delta_f.clone();
    dfs.sort_by(f64::total_cmp);
    let mut powers = grid.p_pump.clone();
    powers.sort_by(f64::total_cmp);
    let mut seeds = grid.seeds.clone();
    seeds.sort_unstable();
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for &d_res_il in &maps {
        for &delta_f in &dfs {
            for &p_pump in &powers {
                for &seed in &seeds {
                    let p = SweepPoint {
                        d_res_il,
                        delta_f,
                        p_pump,
                        seed,
                    };
                    if seen.insert(p.key()) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    /// Worker threads; 0 uses every available core.
    pub jobs: usize,
    pub store_traces: bool,
    pub grid_sizing: GridSizing,
    /// Compute at most this many new points, then return as if interrupted.
    pub stop_after: Option<usize>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            jobs: 0,
            store_traces: false,
            grid_sizing: GridSizing::Sweep,
            stop_after: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub lut_path: PathBuf,
    pub total: usize,
    /// Points found in an existing table and skipped.
    pub resumed: usize,
    pub computed: usize,
    pub failed: usize,
    /// True when `stop_after` cut the campaign short.
    pub incomplete: bool,
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))
}

/// Existing rows of `path`. A torn last line is dropped and the file rewritten without
/// it so appends continue on a clean line boundary.
fn load_journal(path: &Path) -> Result<Vec<PumpProbeRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(path)?;
    let records = parse_lut(&text, true)?;
    if !text.is_empty() && !text.ends_with('\n') {
        log::warn!("{}: dropping a truncated last line", path.display());
        let tmp = path.with_extension("csv.tmp");
        fs::write(&tmp, lut::to_csv(&records)?)?;
        fs::rename(&tmp, path)?;
    }
    Ok(records)
}

fn run_point(
    scenario: &Scenario,
    point: &SweepPoint,
    grid: TimeGrid,
    trace_dir: Option<&Path>,
) -> Result<PumpProbeRecord> {
    let pump = PumpSpec {
        delta_f: point.delta_f,
        p_pump_dbm: point.p_pump,
    };
    let trace = scenario.simulate_xpm(point.d_res_il, &[pump], point.seed, grid)?;
    let trace_path = match trace_dir {
        Some(dir) => {
            let name = trace_file_name(&trace.metadata);
            write_trace(&dir.join(&name), &trace)?;
            Some(format!("{TRACE_DIR}/{name}"))
        }
        None => None,
    };
    Ok(PumpProbeRecord {
        d_res_il: point.d_res_il,
        delta_f: point.delta_f,
        p_pump: point.p_pump,
        seed: point.seed,
        amp_variance: trace.amp_variance,
        phase_std: trace.phase_std,
        trace_path,
        error: None,
    })
}

/// Runs every single-pump point of `grid` not already in `<out_dir>/lut.csv`.
///
/// `progress` is called from the writer thread after each row is on disk.
pub fn run_pump_probe_sweep(
    grid: &SweepGrid,
    scenario: &Scenario,
    out_dir: &Path,
    opts: &SweepOptions,
    progress: &mut dyn FnMut(&PumpProbeRecord),
) -> Result<SweepOutcome> {
    grid.validate(scenario.simulation.channel_spacing)?;
    fs::create_dir_all(out_dir)?;
    let lut_path = out_dir.join(LUT_FILE);
    let existing = load_journal(&lut_path)?;
    let done: HashSet<String> = existing.iter().map(PumpProbeRecord::key).collect();

    let points = sweep_points(grid);
    let total = points.len();
    let mut pending: Vec<SweepPoint> = points
        .into_iter()
        .filter(|p| !done.contains(&p.key()))
        .collect();
    let resumed = total - pending.len();
    let mut incomplete = false;
    if let Some(limit) = opts.stop_after {
        if pending.len() > limit {
            pending.truncate(limit);
            incomplete = true;
        }
    }

    let trace_dir = if opts.store_traces {
        let d = out_dir.join(TRACE_DIR);
        fs::create_dir_all(&d)?;
        Some(d)
    } else {
        None
    };
    let shared_grid = match opts.grid_sizing {
        GridSizing::Sweep => Some(scenario.grid_for(grid.max_delta_f())?),
        GridSizing::Point => None,
    };

    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&lut_path)?;
    if existing.is_empty() && file.metadata()?.len() == 0 {
        lut::write_header(&mut file)?;
    }

    let (tx, rx) = mpsc::channel::<PumpProbeRecord>();
    let workers = pool(opts.jobs)?;
    let mut computed = 0;
    let mut failed = 0;
    let written: Result<()> = std::thread::scope(|s| {
        let trace_dir = trace_dir.as_deref();
        let pending = &pending;
        s.spawn(move || {
            workers.install(|| {
                pending.par_iter().for_each_with(tx, |tx, point| {
                    let record = shared_grid
                        .map(Ok)
                        .unwrap_or_else(|| scenario.grid_for(point.delta_f))
                        .and_then(|g| run_point(scenario, point, g, trace_dir))
                        .unwrap_or_else(|e| {
                            log::warn!("point {} failed: {e}", point.key());
                            PumpProbeRecord::failed(
                                point.d_res_il,
                                point.delta_f,
                                point.p_pump,
                                point.seed,
                                e.to_string(),
                            )
                        });
                    // the receiver only goes away after a write error, which is reported below
                    let _ = tx.send(record);
                });
            });
        });
        for record in rx {
            lut::append_record(&mut file, &record)?;
            computed += 1;
            if !record.is_ok() {
                failed += 1;
            }
            progress(&record);
        }
        Ok(())
    });
    written?;
    drop(file);

    if !incomplete {
        let mut all = parse_lut(&fs::read_to_string(&lut_path)?, false)?;
        all.sort_by(canonical_order);
        lut::write_lut(&lut_path, &all)?;
    }
    Ok(SweepOutcome {
        lut_path,
        total,
        resumed,
        computed,
        failed,
        incomplete,
    })
}

pub const FWM_HEADER: [&str; 8] = [
    "d_res_il",
    "p_pump",
    "n_pumps",
    "seed",
    "idler_frequency",
    "status",
    "idler_power",
    "idler_variance",
];

fn map_label(d: ResidualDispersion) -> String {
    match d {
        ResidualDispersion::PerSpan(v) => format_float(v),
        ResidualDispersion::Uncompensated => "UT".into(),
    }
}

/// File name of one FWM run inside `<out>/fwm/`.
pub fn fwm_file_name(
    d_res_il: ResidualDispersion,
    p_pump: f64,
    n_pumps: usize,
    seed: u64,
) -> String {
    let map = match d_res_il {
        ResidualDispersion::PerSpan(v) => format!("{v}"),
        ResidualDispersion::Uncompensated => "UT".into(),
    };
    format!("d{map}_p{p_pump}_n{n_pumps}_s{seed}.csv")
}

/// One row per idler; flagged idlers carry their status and empty power columns.
pub fn fwm_to_csv(report: &FwmReport) -> Result<String> {
    let m = &report.metadata;
    let map = m.d_res_il.map(map_label).unwrap_or_default();
    let mut rows: Vec<(f64, &str, String, String)> = Vec::new();
    for (i, &f) in report.idler_frequencies.iter().enumerate() {
        rows.push((
            f,
            "ok",
            format_float(report.idler_powers[i]),
            format_float(report.idler_variances[i]),
        ));
    }
    for &f in &report.overlapping {
        rows.push((f, "overlap", String::new(), String::new()));
    }
    for &f in &report.outside_grid {
        rows.push((f, "outside_grid", String::new(), String::new()));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(FWM_HEADER).map_err(io)?;
    for (f, status, power, variance) in rows {
        w.write_record([
            map.clone(),
            format_float(m.p_pump_dbm),
            m.n_pumps.to_string(),
            m.seed.to_string(),
            format_float(f),
            status.to_string(),
            power,
            variance,
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FwmOutcome {
    pub files: Vec<PathBuf>,
    pub resumed: usize,
    pub computed: usize,
}

/// Probe-off comb runs for every (map, power, seed) of `grid`; Δf is not used. Each run
/// lands in its own file, so existing files are skipped on restart.
pub fn run_fwm_sweep(
    grid: &SweepGrid,
    n_pumps: usize,
    scenario: &Scenario,
    out_dir: &Path,
    jobs: usize,
    progress: &mut dyn FnMut(&Path),
) -> Result<FwmOutcome> {
    let dir = out_dir.join(FWM_DIR);
    fs::create_dir_all(&dir)?;
    let offsets = scenario.fwm_comb(n_pumps);
    let time_grid = scenario.fwm_grid(&offsets)?;
    let mut runs = Vec::new();
    for p in sweep_points(&SweepGrid {
        delta_f: vec![scenario.simulation.channel_spacing],
        ..grid.clone()
    }) {
        runs.push((
            p,
            dir.join(fwm_file_name(p.d_res_il, p.p_pump, n_pumps, p.seed)),
        ));
    }
    let files: Vec<PathBuf> = runs.iter().map(|r| r.1.clone()).collect();
    let pending: Vec<_> = runs.into_iter().filter(|r| !r.1.exists()).collect();
    let resumed = files.len() - pending.len();

    let (tx, rx) = mpsc::channel::<Result<PathBuf>>();
    let workers = pool(jobs)?;
    let mut computed = 0;
    std::thread::scope(|s| -> Result<()> {
        let pending = &pending;
        let offsets = &offsets;
        s.spawn(move || {
            workers.install(|| {
                pending.par_iter().for_each_with(tx, |tx, (p, path)| {
                    let r = scenario
                        .simulate_fwm(p.d_res_il, offsets, p.p_pump, p.seed, time_grid)
                        .and_then(|rep| fwm_to_csv(&rep))
                        .and_then(|text| {
                            let tmp = path.with_extension("csv.tmp");
                            fs::write(&tmp, text)?;
                            fs::rename(&tmp, path)?;
                            Ok(path.clone())
                        });
                    let _ = tx.send(r);
                });
            });
        });
        for r in rx {
            progress(&r?);
            computed += 1;
        }
        Ok(())
    })?;
    Ok(FwmOutcome {
        files,
        resumed,
        computed,
    })
}
