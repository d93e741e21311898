//! Browser bindings: a small pump & probe run, and guard-band curves and
//! recommendations from a LUT (a bundled desk-scale one unless the page supplies its own).

use wasm_bindgen::prelude::*;
use xpmguard::link::{DmLinkConfig, ResidualDispersion};
use xpmguard::noise::{phase_pdf, phase_spectrum};
use xpmguard::planner::lut::{
    parse_lut, predict_xpm, recommend_guardband, GuardbandQuery, PumpProbeRecord, Recommendation,
};
use xpmguard::planner::{PumpSpec, Scenario, SimulationConfig};

pub const BUNDLED_LUT: &str = include_str!("../data/lut.csv");

/// Probe symbols per in-browser run; small enough to finish in seconds.
pub const DEMO_SYMBOLS: usize = 1 << 12;

fn map(text: &str) -> Result<ResidualDispersion, String> {
    text.parse().map_err(|e: xpmguard::Error| e.to_string())
}

#[wasm_bindgen]
pub struct PointResult {
    phase_std: f64,
    amp_variance: f64,
    fraction_below_10ghz: f64,
    psd_frequency: Vec<f64>,
    psd: Vec<f64>,
    pdf_phase: Vec<f64>,
    pdf_density: Vec<f64>,
}

#[wasm_bindgen]
impl PointResult {
    #[wasm_bindgen(getter)]
    pub fn phase_std(&self) -> f64 {
        self.phase_std
    }
    #[wasm_bindgen(getter)]
    pub fn amp_variance(&self) -> f64 {
        self.amp_variance
    }
    #[wasm_bindgen(getter)]
    pub fn fraction_below_10ghz(&self) -> f64 {
        self.fraction_below_10ghz
    }
    /// Hz.
    #[wasm_bindgen(getter)]
    pub fn psd_frequency(&self) -> Vec<f64> {
        self.psd_frequency.clone()
    }
    /// rad²/Hz.
    #[wasm_bindgen(getter)]
    pub fn psd(&self) -> Vec<f64> {
        self.psd.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn pdf_phase(&self) -> Vec<f64> {
        self.pdf_phase.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn pdf_density(&self) -> Vec<f64> {
        self.pdf_density.clone()
    }
}

pub fn run_point(
    d_res_il: &str,
    delta_f_ghz: f64,
    p_pump_dbm: f64,
    n_spans: usize,
    seed: u64,
) -> Result<PointResult, String> {
    let scenario = Scenario {
        link: DmLinkConfig {
            n_spans,
            ..Default::default()
        },
        simulation: SimulationConfig {
            n_symbols: DEMO_SYMBOLS,
            ..Default::default()
        },
        ..Default::default()
    };
    let delta_f = delta_f_ghz * 1e9;
    let d = map(d_res_il)?;
    let run = || -> xpmguard::Result<PointResult> {
        let grid = scenario.grid_for(delta_f)?;
        let pump = PumpSpec {
            delta_f,
            p_pump_dbm,
        };
        let trace = scenario.simulate_xpm(d, &[pump], seed, grid)?;
        let spectrum = phase_spectrum(&trace)?;
        let pdf = phase_pdf(&trace, 81)?;
        Ok(PointResult {
            phase_std: trace.phase_std,
            amp_variance: trace.amp_variance,
            fraction_below_10ghz: spectrum.fraction_below(10e9),
            psd_frequency: spectrum.frequency,
            psd: spectrum.psd,
            pdf_phase: pdf.bin_centers,
            pdf_density: pdf.density,
        })
    };
    run().map_err(|e| e.to_string())
}

/// Runs one probe + pump point on a short link. `d_res_il` is ps/nm per span or "UT".
#[wasm_bindgen]
pub fn simulate_point(
    d_res_il: &str,
    delta_f_ghz: f64,
    p_pump_dbm: f64,
    n_spans: u32,
    seed: u32,
) -> Result<PointResult, JsError> {
    run_point(
        d_res_il,
        delta_f_ghz,
        p_pump_dbm,
        n_spans as usize,
        seed as u64,
    )
    .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub struct GuardbandCurve {
    guard_band_ghz: Vec<f64>,
    phase_std: Vec<f64>,
    amp_variance: Vec<f64>,
}

#[wasm_bindgen]
impl GuardbandCurve {
    #[wasm_bindgen(getter)]
    pub fn guard_band_ghz(&self) -> Vec<f64> {
        self.guard_band_ghz.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn phase_std(&self) -> Vec<f64> {
        self.phase_std.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn amp_variance(&self) -> Vec<f64> {
        self.amp_variance.clone()
    }
}

#[wasm_bindgen]
pub struct Planner {
    lut: Vec<PumpProbeRecord>,
}

impl Planner {
    pub fn from_csv(text: &str) -> Result<Self, String> {
        let lut = parse_lut(text, false).map_err(|e| e.to_string())?;
        if lut.iter().all(|r| !r.is_ok()) {
            return Err("the LUT has no usable rows".into());
        }
        Ok(Self { lut })
    }

    pub fn records(&self) -> &[PumpProbeRecord] {
        &self.lut
    }

    fn largest_delta_f(&self) -> f64 {
        self.lut
            .iter()
            .filter(|r| r.is_ok())
            .map(|r| r.delta_f)
            .fold(0.0, f64::max)
    }

    pub fn guardband_curve(
        &self,
        d_res_il: &str,
        n_pumps: usize,
        p_pump_dbm: f64,
        spacing_ghz: f64,
    ) -> Result<GuardbandCurve, String> {
        let d = map(d_res_il)?;
        let spacing = spacing_ghz * 1e9;
        if !spacing.is_finite() || spacing <= 0.0 || n_pumps == 0 {
            return Err("need pumps and a positive spacing".into());
        }
        let top = self.largest_delta_f();
        let mut curve = GuardbandCurve {
            guard_band_ghz: Vec::new(),
            phase_std: Vec::new(),
            amp_variance: Vec::new(),
        };
        let mut g = spacing;
        while g + (n_pumps as f64 - 1.0) * spacing <= top * (1.0 + 1e-12) {
            let q = GuardbandQuery {
                n_pumps,
                guard_band: g,
                pump_grid_spacing: spacing,
                p_pump: p_pump_dbm,
                d_res_il: d,
            };
            if let Ok(p) = predict_xpm(&q, &self.lut) {
                curve.guard_band_ghz.push(g / 1e9);
                curve.phase_std.push(p.phase_std);
                curve.amp_variance.push(p.amp_variance);
            }
            g += spacing;
        }
        if curve.guard_band_ghz.is_empty() {
            return Err(format!(
                "no LUT coverage for d_res_il = {d_res_il}, p_pump = {p_pump_dbm} dBm"
            ));
        }
        Ok(curve)
    }

    /// Smallest guard band in GHz, or `None` when no LUT guard band is quiet enough.
    pub fn recommend_ghz(
        &self,
        max_phase_std: f64,
        d_res_il: &str,
        n_pumps: usize,
        p_pump_dbm: f64,
        spacing_ghz: f64,
    ) -> Result<Option<f64>, String> {
        let d = map(d_res_il)?;
        match recommend_guardband(
            max_phase_std,
            n_pumps,
            p_pump_dbm,
            d,
            spacing_ghz * 1e9,
            &self.lut,
        ) {
            Ok(Recommendation::Found(g)) => Ok(Some(g / 1e9)),
            Ok(Recommendation::Unattainable) => Ok(None),
            Err(e) => Err(e.to_string()),
        }
    }
}

#[wasm_bindgen]
impl Planner {
    /// Parses a LUT CSV; an empty string selects the bundled table.
    #[wasm_bindgen(constructor)]
    pub fn new(csv: &str) -> Result<Planner, JsError> {
        let text = if csv.trim().is_empty() {
            BUNDLED_LUT
        } else {
            csv
        };
        Planner::from_csv(text).map_err(|e| JsError::new(&e))
    }

    /// Distinct maps in the table, comma separated, in LUT order.
    pub fn maps(&self) -> String {
        let mut seen: Vec<String> = Vec::new();
        for r in self.lut.iter().filter(|r| r.is_ok()) {
            let m = r.d_res_il.to_string();
            if !seen.contains(&m) {
                seen.push(m);
            }
        }
        seen.join(",")
    }

    pub fn curve(
        &self,
        d_res_il: &str,
        n_pumps: u32,
        p_pump_dbm: f64,
        spacing_ghz: f64,
    ) -> Result<GuardbandCurve, JsError> {
        self.guardband_curve(d_res_il, n_pumps as usize, p_pump_dbm, spacing_ghz)
            .map_err(|e| JsError::new(&e))
    }

    /// Recommended guard band in GHz; NaN when unattainable within the table.
    pub fn recommend(
        &self,
        max_phase_std: f64,
        d_res_il: &str,
        n_pumps: u32,
        p_pump_dbm: f64,
        spacing_ghz: f64,
    ) -> Result<f64, JsError> {
        self.recommend_ghz(
            max_phase_std,
            d_res_il,
            n_pumps as usize,
            p_pump_dbm,
            spacing_ghz,
        )
        .map(|g| g.unwrap_or(f64::NAN))
        .map_err(|e| JsError::new(&e))
    }
}
