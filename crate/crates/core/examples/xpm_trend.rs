//! Phase and amplitude noise of one pump & probe point per argument set.
//!
//! `cargo run --release --example xpm_trend -- <d_res|UT> <delta_f_GHz>...`

use std::time::Instant;

use xpmguard::link::{DmLinkConfig, ResidualDispersion};
use xpmguard::planner::{PumpSpec, Scenario};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let d_res: ResidualDispersion = args
        .first()
        .map(|s| s.parse().unwrap())
        .unwrap_or(ResidualDispersion::PerSpan(50.0));
    let spacings: Vec<f64> = args[1..]
        .iter()
        .map(|s| s.parse::<f64>().unwrap() * 1e9)
        .collect();
    let scenario = Scenario {
        link: DmLinkConfig {
            n_spans: 5,
            ..Default::default()
        },
        ..Default::default()
    };
    let max = spacings.iter().cloned().fold(0.0, f64::max);
    let grid = scenario.grid_for(max).unwrap();
    println!(
        "grid: {} samples at {:.3e} S/s",
        grid.n_samples(),
        grid.sample_rate()
    );
    for df in spacings {
        let start = Instant::now();
        let pump = PumpSpec {
            delta_f: df,
            p_pump_dbm: 1.0,
        };
        let t = scenario.simulate_xpm(d_res, &[pump], 1, grid).unwrap();
        println!(
            "d_res {d_res} df {:>6.0} GHz: phase_std {:.4e} amp_var {:.4e} ratio {:.4e} mean_n {:.4} masked {} ({:.1} s)",
            df / 1e9,
            t.phase_std,
            t.amp_variance,
            t.amp_variance / t.phase_std.powi(2),
            t.mean_amplitude,
            t.masked_count(),
            start.elapsed().as_secs_f64()
        );
    }
}
