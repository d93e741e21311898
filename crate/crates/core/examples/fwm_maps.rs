//! Seed-averaged idler power and variance of a probe-off pump comb for several
//! dispersion maps, with the max/min spread per idler.
//!
//! `cargo run --release --example fwm_maps -- <n_pumps> <n_seeds> <d_res|UT>...`

use xpmguard::link::{DmLinkConfig, ResidualDispersion};
use xpmguard::planner::Scenario;
use xpmguard::units::watts_to_dbm;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n_pumps: usize = args[0].parse().unwrap();
    let n_seeds: u64 = args[1].parse().unwrap();
    let scenario = Scenario {
        link: DmLinkConfig {
            n_spans: 5,
            ..Default::default()
        },
        ..Default::default()
    };
    let offsets = scenario.fwm_comb(n_pumps);
    let grid = scenario.fwm_grid(&offsets).unwrap();
    // map, idler frequencies, powers, variances
    type Row = (String, Vec<f64>, Vec<f64>, Vec<f64>);
    let mut rows: Vec<Row> = Vec::new();
    for d in &args[2..] {
        let map: ResidualDispersion = d.parse().unwrap();
        let (mut freqs, mut power, mut var) = (Vec::new(), Vec::new(), Vec::new());
        for seed in 1..=n_seeds {
            let rep = scenario
                .simulate_fwm(map, &offsets, 1.0, seed, grid)
                .unwrap();
            if freqs.is_empty() {
                freqs = rep.idler_frequencies.clone();
                power = vec![0.0; freqs.len()];
                var = vec![0.0; freqs.len()];
            }
            for i in 0..freqs.len() {
                power[i] += rep.idler_powers[i] / n_seeds as f64;
                var[i] += rep.idler_variances[i] / n_seeds as f64;
            }
            let cells: Vec<String> = rep
                .idler_variances
                .iter()
                .map(|v| format!("{:.2}", watts_to_dbm(*v)))
                .collect();
            println!("{d:>4} seed {seed}: {}", cells.join(" "));
        }
        rows.push((d.clone(), freqs, power, var));
    }
    for (d, f, p, v) in &rows {
        let cells: Vec<String> = f
            .iter()
            .zip(p.iter().zip(v))
            .map(|(f, (p, v))| {
                format!(
                    "{:.0}:{:.2}/{:.2}",
                    f / 1e9,
                    watts_to_dbm(*p),
                    watts_to_dbm(*v)
                )
            })
            .collect();
        println!("{d:>4} mean: {}", cells.join(" "));
    }
    let n = rows[0].1.len();
    let spread = |k: usize| -> Vec<String> {
        (0..n)
            .map(|i| {
                let vals: Vec<f64> = rows
                    .iter()
                    .map(|r| if k == 0 { r.2[i] } else { r.3[i] })
                    .collect();
                let hi = vals.iter().cloned().fold(f64::MIN, f64::max);
                let lo = vals.iter().cloned().fold(f64::MAX, f64::min);
                format!("{:.2}", 10.0 * (hi / lo).log10())
            })
            .collect()
    };
    println!("spread power dB:    {}", spread(0).join(" "));
    println!("spread variance dB: {}", spread(1).join(" "));
}
