use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
[link]
n_spans = 1

[simulation]
n_symbols = 1024

[sweep]
d_res_il = [50.0]
delta_f = ["50GHz"]
p_pump = ["1dBm"]
seeds = [1]
"#;

fn xpmguard(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xpmguard"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn unknown_command_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = xpmguard(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("xpmguard-error code=2 kind=usage"));
    assert!(o.stdout.is_empty());
}

#[test]
fn bad_unit_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = xpmguard(
        &[
            "predict",
            "--lut",
            "x.csv",
            "--pumps",
            "3",
            "--guard-band",
            "300",
            "--power",
            "1dBm",
            "--map",
            "50",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_error_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.toml"),
        "[link]\nn_spans = 5\nbogus = 1\n",
    )
    .unwrap();
    let o = xpmguard(&["validate", "--config", "run.toml", "--fast"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("kind=config line=3 column=1"), "{err}");
}

#[test]
fn missing_lut_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = xpmguard(
        &[
            "predict",
            "--lut",
            "nope.csv",
            "--pumps",
            "3",
            "--guard-band",
            "300GHz",
            "--power",
            "1dBm",
            "--map",
            "UT",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("xpmguard-error code=1 kind=runtime"));
}

#[test]
fn validate_fast_passes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), TINY).unwrap();
    let o = xpmguard(&["validate", "--config", "run.toml", "--fast"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn one_point_sweep_then_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("output_dir = \"out\"\n{TINY}store_traces = true\n");
    fs::write(dir.path().join("run.toml"), cfg).unwrap();
    let o = xpmguard(
        &["sweep-xpm", "--config", "run.toml", "--jobs", "1"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let lut = fs::read_to_string(dir.path().join("out/lut.csv")).unwrap();
    assert_eq!(lut.lines().count(), 2);
    assert!(
        lut.starts_with("d_res_il,delta_f,p_pump,seed,amp_variance,phase_std,trace_path,error\n")
    );

    // a rerun finds the key and computes nothing
    let again = xpmguard(&["sweep-xpm", "--config", "run.toml"], dir.path());
    assert!(
        stderr(&again).contains("1 resumed, 0 computed"),
        "{}",
        stderr(&again)
    );
    assert_eq!(
        fs::read_to_string(dir.path().join("out/lut.csv")).unwrap(),
        lut
    );

    let trace_rel = lut
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(6)
        .unwrap()
        .to_string();
    let trace = format!("out/{trace_rel}");
    let o = xpmguard(&["analyze", "--trace", &trace, "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let numbers: Vec<f64> = String::from_utf8(o.stdout)
        .unwrap()
        .split_whitespace()
        .map(|x| x.parse().unwrap())
        .collect();
    assert_eq!(numbers.len(), 3);
    assert!(numbers[1] > 0.0);
    assert_eq!(
        fs::read_dir(dir.path().join("out/spectra"))
            .unwrap()
            .count(),
        1
    );
    assert_eq!(fs::read_dir(dir.path().join("out/pdf")).unwrap().count(), 1);

    let o = xpmguard(
        &["superpose", &trace, &trace, "--out", "two.xpmtrace"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8(o.stdout)
        .unwrap()
        .trim_end()
        .ends_with("trace-product"));
}

#[test]
fn predict_and_recommend_from_a_lut() {
    let dir = tempfile::tempdir().unwrap();
    let mut lut =
        String::from("d_res_il,delta_f,p_pump,seed,amp_variance,phase_std,trace_path,error\n");
    for k in 1..=20 {
        let f = k as f64 * 50e9;
        let std = 0.16 * (50e9 / f).sqrt();
        lut.push_str(&format!(
            "5.00000000e1,{f:.8e},1.00000000e0,1,{:.8e},{std:.8e},,\n",
            0.1 * std * std
        ));
    }
    fs::write(dir.path().join("lut.csv"), lut).unwrap();
    let o = xpmguard(
        &[
            "predict",
            "--lut",
            "lut.csv",
            "--pumps",
            "11",
            "--guard-band",
            "300GHz",
            "--power",
            "1dBm",
            "--map",
            "50",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    let v: Vec<f64> = out.split_whitespace().map(|x| x.parse().unwrap()).collect();
    assert_eq!(v.len(), 2);
    let expected: f64 = (0..11)
        .map(|k| 0.0256 * 50.0 / (300.0 + 50.0 * k as f64))
        .sum::<f64>()
        .sqrt();
    assert!(
        (v[1] - expected).abs() / expected < 1e-6,
        "{} vs {expected}",
        v[1]
    );
    let preds = fs::read_to_string(dir.path().join("predictions.csv")).unwrap();
    assert_eq!(preds.lines().count(), 2);

    let tol = format!("{}", v[1]);
    let o = xpmguard(
        &[
            "recommend",
            "--lut",
            "lut.csv",
            "--pumps",
            "11",
            "--max-phase-std",
            &tol,
            "--power",
            "1dBm",
            "--map",
            "50",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), "3.00000000e11");

    let o = xpmguard(
        &[
            "recommend",
            "--lut",
            "lut.csv",
            "--pumps",
            "11",
            "--max-phase-std",
            "1e-6",
            "--power",
            "1dBm",
            "--map",
            "50",
        ],
        dir.path(),
    );
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), "unattainable");
}
