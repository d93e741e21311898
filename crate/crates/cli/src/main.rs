//! `xpmguard`: run XPM/FWM sweeps, analyse traces and size guard bands from a LUT.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error. Failures
//! end with one `xpmguard-error` line on stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use xpmguard::link::ResidualDispersion;
use xpmguard::noise::{phase_spectrum, superpose, XpmNoiseTrace};
use xpmguard::planner::export::{append_prediction, write_analysis, PREDICTIONS_FILE};
use xpmguard::planner::lut::format_float;
use xpmguard::planner::{
    load_config, predict_xpm, read_lut, read_trace, recommend_guardband, run_fwm_sweep,
    run_pump_probe_sweep, write_trace, CombinationPath, GuardbandQuery, PumpSpec, Recommendation,
    RunConfig, SweepOptions,
};
use xpmguard::units::{parse_quantity, Quantity};
use xpmguard::Error;

#[derive(Parser)]
#[command(
    name = "xpmguard",
    version,
    about = "XPM/FWM noise sweeps and guard-band planning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Replace the configured seed list with this single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct LutQuery {
    #[arg(long)]
    lut: PathBuf,
    #[arg(long)]
    pumps: usize,
    #[arg(long, value_parser = power)]
    power: f64,
    /// Residual dispersion per span: a number in ps/nm, `<x>ps/nm` or `UT`.
    #[arg(long, value_parser = map)]
    map: ResidualDispersion,
    #[arg(long, default_value = "50GHz", value_parser = frequency)]
    spacing: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Single-pump pump & probe sweep into `<out>/lut.csv`.
    SweepXpm {
        #[command(flatten)]
        run: RunArgs,
        /// Stop after computing this many new points (the rest run on restart).
        #[arg(long, hide = true)]
        stop_after: Option<usize>,
    },
    /// Probe-off pump comb runs into `<out>/fwm/`.
    SweepFwm {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Phase spectrum and PDF of a stored trace into `<out>/spectra` and `<out>/pdf`.
    Analyze {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Multiplies stored traces into one.
    Superpose {
        #[arg(required = true, num_args = 1..)]
        traces: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// XPM statistics of a pump comb at a guard band, from the LUT.
    Predict {
        #[command(flatten)]
        query: LutQuery,
        #[arg(long, value_parser = frequency)]
        guard_band: f64,
        /// Where to append the prediction (default: predictions.csv beside the LUT).
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Smallest guard band keeping phase_std within a tolerance.
    Recommend {
        #[command(flatten)]
        query: LutQuery,
        /// Tolerated phase_std in rad.
        #[arg(long)]
        max_phase_std: f64,
        /// Largest Δf to consider (default: the LUT's).
        #[arg(long, value_parser = frequency)]
        max_delta_f: Option<f64>,
    },
    /// Checks a config and runs quick self-tests on it.
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Only the cheap checks.
        #[arg(long)]
        fast: bool,
    },
}

fn frequency(s: &str) -> Result<f64, String> {
    parse_quantity(s, Quantity::Frequency).map_err(|e| e.to_string())
}

fn power(s: &str) -> Result<f64, String> {
    parse_quantity(s, Quantity::Power).map_err(|e| e.to_string())
}

fn map(s: &str) -> Result<ResidualDispersion, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Config(Error),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

fn config(path: &Path) -> Result<RunConfig, Failure> {
    load_config(path).map_err(|e| match e {
        Error::Io(_) => Failure::Runtime(e),
        other => Failure::Config(other),
    })
}

fn load_run(args: &RunArgs) -> Result<RunConfig, Failure> {
    let mut cfg = config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.sweep.seeds = vec![seed];
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn stats_line(t: &XpmNoiseTrace) -> String {
    format!(
        "{} {}",
        format_float(t.amp_variance),
        format_float(t.phase_std)
    )
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::SweepXpm { run, stop_after } => {
            let cfg = load_run(&run)?;
            let opts = SweepOptions {
                jobs: run.jobs,
                store_traces: cfg.sweep.store_traces,
                grid_sizing: cfg.sweep.grid_sizing,
                stop_after,
            };
            let grid = cfg.sweep.grid();
            let mut done = 0;
            let outcome =
                run_pump_probe_sweep(&grid, &cfg.scenario(), &cfg.output_dir, &opts, &mut |r| {
                    done += 1;
                    eprintln!(
                        "[{done}] d_res_il={} delta_f={} p_pump={} seed={} phase_std={}{}",
                        r.d_res_il,
                        format_float(r.delta_f),
                        r.p_pump,
                        r.seed,
                        format_float(r.phase_std),
                        r.error
                            .as_deref()
                            .map(|e| format!(" error={e:?}"))
                            .unwrap_or_default()
                    );
                })?;
            eprintln!(
                "{}: {} points, {} resumed, {} computed, {} failed{}",
                outcome.lut_path.display(),
                outcome.total,
                outcome.resumed,
                outcome.computed,
                outcome.failed,
                if outcome.incomplete {
                    ", incomplete"
                } else {
                    ""
                }
            );
        }
        Command::SweepFwm { run } => {
            let cfg = load_run(&run)?;
            let outcome = run_fwm_sweep(
                &cfg.sweep.grid(),
                cfg.fwm.n_pumps,
                &cfg.scenario(),
                &cfg.output_dir,
                run.jobs,
                &mut |p| eprintln!("wrote {}", p.display()),
            )?;
            eprintln!(
                "{} runs, {} resumed, {} computed",
                outcome.files.len(),
                outcome.resumed,
                outcome.computed
            );
        }
        Command::Analyze { trace, out } => {
            let t = read_trace(&trace)?;
            let (s, p) = write_analysis(&out, &t)?;
            let spec = phase_spectrum(&t)?;
            eprintln!("wrote {} and {}", s.display(), p.display());
            println!(
                "{} {}",
                stats_line(&t),
                format_float(spec.fraction_below(10e9))
            );
        }
        Command::Superpose { traces, out } => {
            let loaded = traces
                .iter()
                .map(|p| read_trace(p))
                .collect::<Result<Vec<_>, _>>()?;
            let combined = superpose(&loaded)?;
            write_trace(&out, &combined)?;
            println!(
                "{} {}",
                stats_line(&combined),
                CombinationPath::TraceProduct.as_str()
            );
        }
        Command::Predict {
            query,
            guard_band,
            predictions,
        } => {
            let lut = read_lut(&query.lut)?;
            let q = GuardbandQuery {
                n_pumps: query.pumps,
                guard_band,
                pump_grid_spacing: query.spacing,
                p_pump: query.power,
                d_res_il: query.map,
            };
            let pred = predict_xpm(&q, &lut)?;
            let path = predictions.unwrap_or_else(|| {
                query
                    .lut
                    .parent()
                    .unwrap_or(Path::new("."))
                    .join(PREDICTIONS_FILE)
            });
            append_prediction(&path, &q, &pred)?;
            // full precision, so the value can be fed back as a recommend tolerance
            println!("{:e} {:e}", pred.amp_variance, pred.phase_std);
        }
        Command::Recommend {
            query,
            max_phase_std,
            max_delta_f,
        } => {
            let mut lut = read_lut(&query.lut)?;
            if let Some(limit) = max_delta_f {
                lut.retain(|r| r.delta_f <= limit * (1.0 + 1e-12));
            }
            let answer = recommend_guardband(
                max_phase_std,
                query.pumps,
                query.power,
                query.map,
                query.spacing,
                &lut,
            )?;
            match answer {
                Recommendation::Found(g) => println!("{}", format_float(g)),
                Recommendation::Unattainable => println!("unattainable"),
            }
        }
        Command::Validate { config: path, fast } => {
            let cfg = config(&path)?;
            validate(&cfg, fast)?;
            eprintln!("{}: ok", path.display());
        }
    }
    Ok(())
}

fn check(name: &str, ok: bool, detail: String) -> Result<(), Error> {
    eprintln!("{} {name}: {detail}", if ok { "ok  " } else { "FAIL" });
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "self-test {name} failed: {detail}"
        )))
    }
}

/// Cheap checks on a short version of the configured link, then (unless `fast`)
/// one full-size pump & probe point.
fn validate(cfg: &RunConfig, fast: bool) -> Result<(), Error> {
    let grid = cfg.sweep.grid();
    let scenario = cfg.scenario();
    let time_grid = scenario.grid_for(grid.max_delta_f())?;
    check(
        "grid",
        true,
        format!(
            "{} samples at {} GHz",
            time_grid.n_samples(),
            time_grid.sample_rate() / 1e9
        ),
    )?;

    let mut small = scenario.clone();
    small.simulation.n_symbols = small.simulation.n_symbols.min(1 << 10);
    small.link.n_spans = small.link.n_spans.min(2);
    let small_grid = small.grid_for(0.0)?;
    let seed = grid.seeds[0];
    let map = grid.d_res_il[0];

    let mut linear = small.clone();
    linear.link.fiber.gamma_per_w_km = 0.0;
    let quiet = linear.simulate_xpm(map, &[], seed, small_grid)?;
    check(
        "linear-inverse",
        quiet.phase_std < 1e-6 && quiet.amp_variance < 1e-12,
        format!("phase_std {:.3e}", quiet.phase_std),
    )?;

    let lone = small.simulate_xpm(map, &[], seed, small_grid)?;
    check(
        "reconstruction",
        lone.reconstruction_error() < 1e-12,
        format!("{:.3e}", lone.reconstruction_error()),
    )?;
    let identity = superpose(std::slice::from_ref(&lone))?;
    check(
        "singleton-superpose",
        identity.phi == lone.phi && identity.n == lone.n,
        "bit-exact".into(),
    )?;

    if !fast {
        let df = grid.delta_f.iter().copied().fold(f64::INFINITY, f64::min);
        let pump = PumpSpec {
            delta_f: df,
            p_pump_dbm: grid.p_pump[0],
        };
        let t = scenario.simulate_xpm(map, &[pump], seed, scenario.grid_for(df)?)?;
        t.check()?;
        check(
            "pump-probe-point",
            true,
            format!("phase_std {:.4e} at {} GHz", t.phase_std, df / 1e9),
        )?;
    }
    Ok(())
}

fn report(kind: &str, code: u8, e: &Error) -> ExitCode {
    let position = match e {
        Error::Config { line, column, .. } => format!(" line={line} column={column}"),
        _ => String::new(),
    };
    eprintln!(
        "xpmguard-error code={code} kind={kind}{position} message={:?}",
        e.to_string()
    );
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            if code == 2 {
                eprintln!(
                    "xpmguard-error code=2 kind=usage message={:?}",
                    e.kind().to_string()
                );
            }
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => report("config", 2, &e),
        Err(Failure::Runtime(e)) => report("runtime", 1, &e),
    }
}
