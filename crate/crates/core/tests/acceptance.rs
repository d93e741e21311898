//! Desk-scale acceptance run: 5 spans of 50 km, 2^14 probe symbols, 1 dBm pumps.
//!
//! Prints one `PASS`/`FAIL` line per criterion and fails if any criterion fails.
//! Slow (tens of minutes on one core); run with `--release` or the workspace's
//! optimized test profile.

use std::f64::consts::PI;
use std::fs;
use std::time::{Duration, Instant};

use xpmguard::fiber::{propagate_fiber, FiberParams, StepPolicy};
use xpmguard::link::{build_link, propagate_link, receive_probe, DmLinkConfig, ResidualDispersion};
use xpmguard::noise::{phase_spectrum, superpose, XpmNoiseTrace};
use xpmguard::planner::config::{GridSizing, SweepGrid};
use xpmguard::planner::lut::{
    predict_xpm, recommend_guardband, GuardbandQuery, PumpProbeRecord, Recommendation,
};
use xpmguard::planner::{run_pump_probe_sweep, PumpSpec, Scenario, SimulationConfig, SweepOptions};
use xpmguard::signal::{band_select, make_grid, relative_rms, SampledField, WdmComb};
use xpmguard::transceivers::{
    generate_prbs, imdd_waveform, qpsk_waveform, ImddTxConfig, QpskTxConfig,
};
use xpmguard::units::SPEED_OF_LIGHT;
use xpmguard::Complex64;

const D0: ResidualDispersion = ResidualDispersion::PerSpan(0.0);
const D50: ResidualDispersion = ResidualDispersion::PerSpan(50.0);
const D100: ResidualDispersion = ResidualDispersion::PerSpan(100.0);
const UT: ResidualDispersion = ResidualDispersion::Uncompensated;
const SEED: u64 = 1;

fn desk() -> Scenario {
    Scenario {
        link: DmLinkConfig {
            n_spans: 5,
            ..Default::default()
        },
        ..Default::default()
    }
}

fn pump(delta_f: f64) -> PumpSpec {
    PumpSpec {
        delta_f,
        p_pump_dbm: 1.0,
    }
}

struct Verdict {
    id: &'static str,
    pass: bool,
    detail: String,
}

#[derive(Default)]
struct Run {
    verdicts: Vec<Verdict>,
    traces: Vec<XpmNoiseTrace>,
}

impl Run {
    fn record(
        &mut self,
        id: &'static str,
        budget: Duration,
        started: Instant,
        pass: bool,
        detail: String,
    ) {
        let elapsed = started.elapsed();
        println!(
            "{id} {} {detail} [{:.1} s, budget {} s]",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        self.verdicts.push(Verdict { id, pass, detail });
    }

    fn xpm(
        &mut self,
        s: &Scenario,
        d: ResidualDispersion,
        pumps: &[PumpSpec],
        grid: xpmguard::signal::TimeGrid,
    ) -> XpmNoiseTrace {
        let t = s.simulate_xpm(d, pumps, SEED, grid).unwrap();
        self.traces.push(t.clone());
        t
    }
}

fn db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// γ = 0: the receive chain undoes the link exactly.
fn a1(run: &mut Run) {
    let started = Instant::now();
    let s = desk();
    let grid = s.grid_for(100e9).unwrap();
    let probe = qpsk_waveform(s.simulation.n_symbols, &QpskTxConfig::default(), grid)
        .unwrap()
        .0;
    let cfg = ImddTxConfig::default();
    let bits = generate_prbs(
        cfg.prbs_order,
        xpmguard::transceivers::bits_needed(&grid, cfg.bit_rate),
        3,
    )
    .unwrap();
    let pump = imdd_waveform(&bits, &cfg, grid).unwrap();
    let comb = WdmComb::assemble(vec![(probe.clone(), 0.0), (pump, 100e9)], 50e9)
        .unwrap()
        .aggregate;
    let reference = band_select(&probe, 0.0, s.simulation.probe_rx_bandwidth).unwrap();
    let mut worst: f64 = 0.0;
    for d in [D0, D50, UT] {
        let mut cfg = s.link.clone();
        cfg.d_res_il = d;
        cfg.fiber.gamma_per_w_km = 0.0;
        let link = build_link(&cfg).unwrap();
        let rx = propagate_link(&comb, &link).unwrap();
        let got = receive_probe(&rx, &link, 0.0, s.simulation.probe_rx_bandwidth).unwrap();
        worst = worst.max(relative_rms(&got.samples, &reference.samples));
    }
    run.record(
        "A1",
        Duration::from_secs(30),
        started,
        worst < 1e-6,
        format!("worst relative RMS {worst:.3e} over maps 0/50/UT (limit 1e-6)"),
    );
}

/// Undepleted two-tone FWM: idler at 2f₁ − f₂ against the closed form.
fn fwm_oracle(fiber: &FiberParams, p1: f64, p2: f64, spacing: f64) -> f64 {
    let alpha = fiber.attenuation_db_per_km * std::f64::consts::LN_10 / 10.0 / 1e3;
    let l = fiber.length_km * 1e3;
    let lambda = fiber.reference_wavelength_nm * 1e-9;
    let beta2 = -fiber.dispersion_ps_nm_km * 1e-6 * lambda * lambda / (2.0 * PI * SPEED_OF_LIGHT);
    let dw = 2.0 * PI * spacing;
    let dbeta = beta2 * dw * dw;
    let ea = (-alpha * l).exp();
    let l_eff = (1.0 - ea) / alpha;
    let eta = alpha * alpha / (alpha * alpha + dbeta * dbeta)
        * (1.0 + 4.0 * ea * (dbeta * l / 2.0).sin().powi(2) / (1.0 - ea).powi(2));
    let gamma = fiber.gamma_per_w_km / 1e3;
    gamma * gamma * p1 * p1 * p2 * l_eff * l_eff * ea * eta
}

fn a2(run: &mut Run) {
    let started = Instant::now();
    let grid = make_grid(1 << 12, 409.6e9).unwrap();

    let lossless = FiberParams {
        length_km: 10.0,
        attenuation_db_per_km: 0.0,
        ..Default::default()
    };
    let p: f64 = 10e-3;
    let cw = SampledField::new(grid, vec![Complex64::new(p.sqrt(), 0.0); grid.n_samples()])
        .unwrap()
        .with_bandwidth(1e9);
    let out = propagate_fiber(&cw, &lossless, &StepPolicy::default()).unwrap();
    let expected = lossless.gamma_per_w_km * 1e-3 * p * lossless.length_km * 1e3;
    let spm_err = out
        .samples
        .iter()
        .map(|x| (x.arg() - expected).abs())
        .fold(0.0, f64::max);

    let fiber = FiberParams {
        length_km: 10.0,
        dispersion_ps_nm_km: 1.0,
        ..Default::default()
    };
    let (p1, p2, spacing): (f64, f64, f64) = (1e-3, 1e-3, 25e9);
    let two: Vec<Complex64> = (0..grid.n_samples())
        .map(|k| {
            let t = grid.time(k);
            Complex64::new(p1.sqrt(), 0.0)
                + Complex64::from_polar(p2.sqrt(), 2.0 * PI * spacing * t)
        })
        .collect();
    let field = SampledField::new(grid, two)
        .unwrap()
        .with_bandwidth(2.0 * spacing);
    let out = propagate_fiber(&field, &fiber, &StepPolicy::fixed(0.05)).unwrap();
    let spectrum = out.power_spectrum();
    let measured = spectrum[grid.bin_index(-spacing)];
    let oracle = fwm_oracle(&fiber, p1, p2, spacing);
    let fwm_err = (measured - oracle).abs() / oracle;

    run.record(
        "A2",
        Duration::from_secs(60),
        started,
        spm_err < 1e-4 && fwm_err < 0.05,
        format!(
            "SPM phase error {spm_err:.2e} rad (limit 1e-4); FWM idler {measured:.4e} W vs {oracle:.4e} W, {:.2}% (limit 5%)",
            100.0 * fwm_err
        ),
    );
}

/// phase_std falls with Δf at 50 ps/nm; each point on its own smallest grid.
fn a3(run: &mut Run, lut: &mut Vec<PumpProbeRecord>) {
    let started = Instant::now();
    let s = desk();
    let mut stds = Vec::new();
    for df in [50e9, 200e9, 500e9, 1000e9] {
        let t = run.xpm(&s, D50, &[pump(df)], s.grid_for(df).unwrap());
        stds.push((df, t.phase_std));
        lut.push(PumpProbeRecord {
            d_res_il: D50,
            delta_f: df,
            p_pump: 1.0,
            seed: SEED,
            amp_variance: t.amp_variance,
            phase_std: t.phase_std,
            trace_path: None,
            error: None,
        });
    }
    let strict = stds.windows(2).all(|w| w[1].1 < w[0].1);
    let within_tolerance = stds.windows(2).all(|w| w[1].1 < 1.15 * w[0].1);
    let cells: Vec<String> = stds
        .iter()
        .map(|(f, s)| format!("{:.0}GHz:{s:.4}", f / 1e9))
        .collect();
    run.record(
        "A3",
        Duration::from_secs(30 * 60),
        started,
        within_tolerance,
        format!(
            "phase_std {} rad (strictly decreasing: {strict})",
            cells.join(" ")
        ),
    );
}

/// amp_variance / phase_std² at 50 GHz grows towards the uncompensated link.
fn a4(run: &mut Run) -> Vec<(ResidualDispersion, f64)> {
    let started = Instant::now();
    let s = desk();
    let grid = s.grid_for(50e9).unwrap();
    let mut ratios = Vec::new();
    let mut stds = Vec::new();
    for d in [D0, D50, D100, UT] {
        let t = run.xpm(&s, d, &[pump(50e9)], grid);
        stds.push((d, t.phase_std));
        if d != D50 {
            ratios.push((d, t.amp_variance / t.phase_std.powi(2)));
        }
    }
    let pass = ratios.windows(2).all(|w| w[1].1 > w[0].1);
    let cells: Vec<String> = ratios.iter().map(|(d, r)| format!("{d}:{r:.4}")).collect();
    run.record(
        "A4",
        Duration::from_secs(30 * 60),
        started,
        pass,
        format!("amp_variance/phase_std^2 {}", cells.join(" ")),
    );
    stds
}

/// Superposed single-pump traces against a genuine three-pump run on the same grid.
fn a5(run: &mut Run) -> Vec<XpmNoiseTrace> {
    let started = Instant::now();
    let s = desk();
    let dfs = [50e9, 100e9, 150e9];
    let grid = s.grid_for(150e9).unwrap();
    let singles: Vec<XpmNoiseTrace> = dfs
        .iter()
        .map(|&df| run.xpm(&s, D50, &[pump(df)], grid))
        .collect();
    let genuine = run.xpm(&s, D50, &dfs.map(pump), grid);
    let combined = superpose(&singles).unwrap();
    let phase_err = (combined.phase_std - genuine.phase_std).abs() / genuine.phase_std;
    let amp_err = (combined.amp_variance - genuine.amp_variance).abs() / genuine.amp_variance;
    run.record(
        "A5",
        Duration::from_secs(45 * 60),
        started,
        phase_err < 0.15 && amp_err < 0.25,
        format!(
            "phase_std {:.4} vs {:.4} ({:.1}%, limit 15%); amp_variance {:.4e} vs {:.4e} ({:.1}%, limit 25%)",
            combined.phase_std,
            genuine.phase_std,
            100.0 * phase_err,
            combined.amp_variance,
            genuine.amp_variance,
            100.0 * amp_err
        ),
    );
    singles
}

/// Seed-averaged idler powers of a five-pump comb barely move with the map while the
/// single-pump XPM does.
fn a6(run: &mut Run, xpm_stds: &[(ResidualDispersion, f64)]) {
    let started = Instant::now();
    let s = desk();
    let offsets = s.fwm_comb(5);
    let grid = s.fwm_grid(&offsets).unwrap();
    let seeds = 1..=4u64;
    let mut means: Vec<(ResidualDispersion, Vec<f64>, Vec<f64>)> = Vec::new();
    for d in [D0, D50, UT] {
        let mut freqs = Vec::new();
        let mut power = Vec::new();
        for seed in seeds.clone() {
            let rep = s.simulate_fwm(d, &offsets, 1.0, seed, grid).unwrap();
            if freqs.is_empty() {
                freqs = rep.idler_frequencies.clone();
                power = vec![0.0; freqs.len()];
            }
            assert_eq!(freqs, rep.idler_frequencies);
            for (acc, p) in power.iter_mut().zip(&rep.idler_powers) {
                *acc += p / seeds.clone().count() as f64;
            }
        }
        means.push((d, freqs, power));
    }
    let n = means[0].1.len();
    let spreads: Vec<f64> = (0..n)
        .map(|i| {
            let v: Vec<f64> = means.iter().map(|m| m.2[i]).collect();
            db(v.iter().cloned().fold(f64::MIN, f64::max)
                / v.iter().cloned().fold(f64::MAX, f64::min))
        })
        .collect();
    let worst_fwm = spreads.iter().cloned().fold(0.0, f64::max);
    let maps: Vec<f64> = xpm_stds
        .iter()
        .filter(|(d, _)| [D0, D50, UT].contains(d))
        .map(|m| m.1)
        .collect();
    // phase_std expressed in the variance domain, like the idler powers
    let xpm_change = db((maps.iter().cloned().fold(f64::MIN, f64::max)
        / maps.iter().cloned().fold(f64::MAX, f64::min))
    .powi(2));
    let cells: Vec<String> = means[0]
        .1
        .iter()
        .zip(&spreads)
        .map(|(f, s)| format!("{:.0}GHz:{s:.2}", f / 1e9))
        .collect();
    run.record(
        "A6",
        Duration::from_secs(45 * 60),
        started,
        n > 0 && worst_fwm < 3.0 && xpm_change > 3.0,
        format!(
            "idler power spread across maps (dB, 4-seed mean) {}; worst {worst_fwm:.2} dB (limit 3); XPM phase_std change {xpm_change:.2} dB (needs > 3)",
            cells.join(" ")
        ),
    );
}

/// Phase noise of a five-pump run is concentrated below the 10 GHz pump rate.
fn a7(run: &mut Run) {
    let started = Instant::now();
    let s = desk();
    let pumps: Vec<PumpSpec> = (1..=5).map(|k| pump(k as f64 * 50e9)).collect();
    let grid = s.grid_for(250e9).unwrap();
    let t = run.xpm(&s, D50, &pumps, grid);
    let psd = phase_spectrum(&t).unwrap();
    let fraction = psd.fraction_below(10e9);
    run.record(
        "A7",
        Duration::from_secs(20 * 60),
        started,
        fraction >= 0.95,
        format!(
            "{:.2}% of phase PSD power below 10 GHz (needs >= 95%)",
            100.0 * fraction
        ),
    );
}

fn a8(run: &mut Run, singles: &[XpmNoiseTrace]) {
    let started = Instant::now();
    let worst = run
        .traces
        .iter()
        .map(|t| t.reconstruction_error())
        .fold(0.0, f64::max);
    let (a, b, c) = (&singles[0], &singles[1], &singles[2]);
    let sp = |x: &[XpmNoiseTrace]| superpose(x).unwrap();
    let left = sp(&[sp(&[a.clone(), b.clone()]), c.clone()]);
    let right = sp(&[a.clone(), sp(&[b.clone(), c.clone()])]);
    let swapped = sp(&[c.clone(), a.clone(), b.clone()]);
    let same =
        |x: &XpmNoiseTrace, y: &XpmNoiseTrace| x.phi == y.phi && x.n == y.n && x.rho == y.rho;
    let assoc = same(&left, &right);
    let commut = same(&left, &swapped);
    let single = sp(std::slice::from_ref(a));
    let identity = same(&single, a);
    run.record(
        "A8",
        Duration::from_secs(1),
        started,
        worst < 1e-12 && assoc && commut && identity,
        format!(
            "reconstruction {worst:.2e} over {} traces (limit 1e-12); associative {assoc}, commutative {commut}, singleton {identity}",
            run.traces.len()
        ),
    );
}

/// An interrupted campaign, with a torn last line, resumes to the same bytes.
fn a9(run: &mut Run) {
    let started = Instant::now();
    let s = Scenario {
        simulation: SimulationConfig {
            n_symbols: 1 << 12,
            ..Default::default()
        },
        link: DmLinkConfig {
            n_spans: 2,
            ..Default::default()
        },
        ..Default::default()
    };
    let grid = SweepGrid {
        d_res_il: vec![D0, UT],
        delta_f: vec![50e9, 100e9, 150e9],
        p_pump: vec![1.0],
        seeds: vec![1],
    };
    let whole = tempfile::tempdir().unwrap();
    let opts = SweepOptions {
        jobs: 1,
        grid_sizing: GridSizing::Sweep,
        ..Default::default()
    };
    run_pump_probe_sweep(&grid, &s, whole.path(), &opts, &mut |_| ()).unwrap();
    let reference = fs::read(whole.path().join("lut.csv")).unwrap();

    let broken = tempfile::tempdir().unwrap();
    let first = run_pump_probe_sweep(
        &grid,
        &s,
        broken.path(),
        &SweepOptions {
            stop_after: Some(3),
            ..opts.clone()
        },
        &mut |_| (),
    )
    .unwrap();
    let lut_path = broken.path().join("lut.csv");
    let mut partial = fs::read_to_string(&lut_path).unwrap();
    partial.push_str("1.00000000e2,5.0000"); // killed mid-write
    fs::write(&lut_path, partial).unwrap();
    let resumed = run_pump_probe_sweep(
        &grid,
        &s,
        broken.path(),
        &SweepOptions { jobs: 2, ..opts },
        &mut |_| (),
    )
    .unwrap();
    let bytes = fs::read(&lut_path).unwrap();
    run.record(
        "A9",
        Duration::from_secs(10 * 60),
        started,
        first.incomplete && resumed.resumed == 3 && resumed.computed == 3 && bytes == reference,
        format!(
            "resumed {} of {} points, {} recomputed; LUT byte-identical: {}",
            resumed.resumed,
            resumed.total,
            resumed.computed,
            bytes == reference
        ),
    );
}

fn a10(run: &mut Run, lut: &[PumpProbeRecord]) {
    let started = Instant::now();
    let spacing = 50e9;
    let query = |g: f64, n: usize| GuardbandQuery {
        n_pumps: n,
        guard_band: g,
        pump_grid_spacing: spacing,
        p_pump: 1.0,
        d_res_il: D50,
    };
    let mut exact = true;
    let mut monotone = true;
    let mut checked = 0;
    for n in [1usize, 3, 5] {
        let mut last_std = f64::INFINITY;
        let mut g = spacing;
        while g + (n as f64 - 1.0) * spacing <= 1000e9 {
            let p = predict_xpm(&query(g, n), lut).unwrap();
            monotone &= p.phase_std <= last_std;
            last_std = p.phase_std;
            let rec = recommend_guardband(p.phase_std, n, 1.0, D50, spacing, lut).unwrap();
            exact &= rec == Recommendation::Found(g);
            let loose = recommend_guardband(p.phase_std * 1.01, n, 1.0, D50, spacing, lut).unwrap();
            if let (Recommendation::Found(a), Recommendation::Found(b)) = (loose, rec) {
                monotone &= a <= b;
            }
            checked += 1;
            g += spacing;
        }
    }
    run.record(
        "A10",
        Duration::from_secs(1),
        started,
        exact && monotone && checked > 0,
        format!("{checked} guard bands: recommend(predict(G)) = G {exact}; monotone {monotone}"),
    );
}

#[test]
fn acceptance() {
    println!();
    let mut run = Run::default();
    let mut lut: Vec<PumpProbeRecord> = Vec::new();
    a1(&mut run);
    a2(&mut run);
    a3(&mut run, &mut lut);
    let xpm_stds = a4(&mut run);
    let singles = a5(&mut run);
    a6(&mut run, &xpm_stds);
    a7(&mut run);
    a8(&mut run, &singles);
    a9(&mut run);
    a10(&mut run, &lut);
    let failed: Vec<String> = run
        .verdicts
        .iter()
        .filter(|v| !v.pass)
        .map(|v| format!("{}: {}", v.id, v.detail))
        .collect();
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
}
