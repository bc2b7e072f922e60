use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use battid::report::IdReport;
use battid_core::ecm;
use serde_json::Value;
use tempfile::TempDir;

fn battid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_battid")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Noise-free reference-circuit settings; this capacity takes the default cycle from
/// SOC 0.9 to about 0.2.
const NOISE_FREE: &str = r#"
[battery]
capacity_ah = 0.95
[solver]
lambda1 = 1e-8
lambda2 = 0.0
[experiment]
noise_std = 0.0
"#;

fn simulate(dir: &TempDir, config: &str) -> std::path::PathBuf {
    let cfg = write_config(dir.path(), config);
    let out = dir.path().join("sim");
    let o = battid(&["simulate", "--config", &cfg, "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn report(path: &Path) -> IdReport {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_writes_record_and_truth() {
    let dir = TempDir::new().unwrap();
    let out = simulate(&dir, "");
    let text = fs::read_to_string(out.join("record.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# battid "));
    assert_eq!(lines.next().unwrap(), "time_s,current_a,voltage_v,soc");
    assert_eq!(lines.count(), 3600);
    let truth: Value = serde_json::from_str(&fs::read_to_string(out.join("truth.json")).unwrap()).unwrap();
    assert_eq!(truth["params"]["r0_ohm"], 0.06);
    assert!(truth["config_sha256"].as_str().unwrap().len() == 64);
    assert!(fs::read_to_string(out.join("truth_ocv.csv"))
        .unwrap()
        .starts_with("# battid "));
}

#[test]
fn noise_free_simulation_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "[experiment]\nnoise_std = 0.0\n");
    for sub in ["a", "b"] {
        let o = battid(&["simulate", "--config", &cfg, "--out", s(&dir.path().join(sub))]);
        assert_eq!(code(&o), 0);
    }
    for f in ["record.csv", "truth.json", "truth_ocv.csv"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn step_profile_shows_total_resistance() {
    let dir = TempDir::new().unwrap();
    let out = simulate(
        &dir,
        "[experiment]\nnoise_std = 0.0\nprofile = \"step\"\nduration_s = 1500.0\namplitude_a = 1.0\n",
    );
    let text = fs::read_to_string(out.join("record.csv")).unwrap();
    let last: Vec<f64> = text
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    let (i, v, z) = (last[1], last[2], last[3]);
    let r_total = (ecm::ocv_sim_curve(z).unwrap() - v) / -i;
    assert!((r_total - 0.11).abs() < 1e-5, "{r_total}");
}

#[test]
fn identify_recovers_reference_circuit() {
    let dir = TempDir::new().unwrap();
    let sim = simulate(&dir, NOISE_FREE);
    let cfg = write_config(dir.path(), NOISE_FREE);
    let out = dir.path().join("id");
    let o = battid(&[
        "identify",
        "--config",
        &cfg,
        "--data",
        s(&sim.join("record.csv")),
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("R0 ="));
    let rep = report(&out.join("report.json"));
    let p = rep.params;
    for (got, want) in [p.r0_ohm, p.r1_ohm, p.r2_ohm, p.c1_farad, p.c2_farad, p.tau1_s, p.tau2_s]
        .iter()
        .zip([0.06, 0.03, 0.02, 600.0, 5000.0, 18.0, 100.0])
    {
        assert!((got / want - 1.0).abs() < 0.01, "{got} vs {want}");
    }
    assert!(rep.solver.converged);
    assert!(rep.fit.unwrap().vaf_percent > 99.9);
    assert!(out.join("report_ocv.csv").exists() && out.join("prediction.csv").exists());
}

#[test]
fn missing_soc_needs_initial_soc() {
    let dir = TempDir::new().unwrap();
    let sim = simulate(&dir, NOISE_FREE);
    // Drop the SOC column.
    let text = fs::read_to_string(sim.join("record.csv")).unwrap();
    let stripped: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.rsplit_once(',').unwrap().0.to_string() + "\n")
        .collect();
    let data = dir.path().join("no_soc.csv");
    fs::write(&data, stripped).unwrap();

    let cfg = write_config(dir.path(), NOISE_FREE);
    let o = battid(&[
        "identify",
        "--config",
        &cfg,
        "--data",
        s(&data),
        "--out",
        s(&dir.path().join("x")),
    ]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("initial_soc"));

    // With the starting SOC, Coulomb counting reproduces the simulation.
    let cfg = write_config(
        dir.path(),
        &NOISE_FREE.replace("capacity_ah = 0.95", "capacity_ah = 0.95\ninitial_soc = 0.9"),
    );
    let out = dir.path().join("y");
    let o = battid(&["identify", "--config", &cfg, "--data", s(&data), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!((report(&out.join("report.json")).params.r0_ohm / 0.06 - 1.0).abs() < 0.01);
}

#[test]
fn one_cell_tune_matches_identify() {
    let dir = TempDir::new().unwrap();
    let sim = simulate(&dir, "");
    let cfg = write_config(
        dir.path(),
        "[solver]\nlambda1 = 2e-6\nlambda2 = 1e-8\n[experiment]\nlambda1_grid = [2e-6]\nlambda2_grid = [1e-8]\n",
    );
    let data = sim.join("record.csv");
    let (a, b) = (dir.path().join("id"), dir.path().join("tune"));
    assert_eq!(
        code(&battid(&[
            "identify",
            "--config",
            &cfg,
            "--data",
            s(&data),
            "--out",
            s(&a)
        ])),
        0
    );
    assert_eq!(
        code(&battid(&["tune", "--config", &cfg, "--data", s(&data), "--out", s(&b)])),
        0
    );
    assert_eq!(report(&a.join("report.json")), report(&b.join("best.json")));
    let grid = fs::read_to_string(b.join("grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 3);
}

#[test]
fn tune_picks_the_smallest_rmse() {
    let dir = TempDir::new().unwrap();
    let sim = simulate(&dir, "");
    let cfg = write_config(dir.path(), "");
    let out = dir.path().join("tune");
    let o = battid(&[
        "tune",
        "--config",
        &cfg,
        "--data",
        s(&sim.join("record.csv")),
        "--out",
        s(&out),
        "--jobs",
        "2",
    ]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(out.join("grid.csv")).unwrap();
    let rmse: Vec<f64> = text
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(rmse.len(), 9);
    let best = report(&out.join("best.json")).fit.unwrap().rmse_v;
    assert!(rmse.iter().all(|&r| best <= r));
}

#[test]
fn empty_grid_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let sim = simulate(&dir, "");
    let cfg = write_config(dir.path(), "[experiment]\nlambda1_grid = []\n");
    let o = battid(&[
        "tune",
        "--config",
        &cfg,
        "--data",
        s(&sim.join("record.csv")),
        "--out",
        s(&dir.path().join("t")),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn single_run_monte_carlo_stats_equal_the_run() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "[experiment]\nruns = 1\n");
    let out = dir.path().join("mc");
    assert_eq!(code(&battid(&["montecarlo", "--config", &cfg, "--out", s(&out)])), 0);
    let run = report(&out.join("runs/run_000.json"));
    let stats = fs::read_to_string(out.join("stats.csv")).unwrap();
    let r0: Vec<&str> = stats
        .lines()
        .find(|l| l.starts_with("r0_ohm,"))
        .unwrap()
        .split(',')
        .collect();
    assert_eq!(r0[2].parse::<f64>().unwrap(), run.params.r0_ohm);
    assert_eq!(r0[3].parse::<f64>().unwrap(), 0.0);
    for f in ["params.csv", "ocv_band.csv", "runs/run_000_ocv.csv"] {
        assert!(fs::read_to_string(out.join(f)).unwrap().starts_with("# battid "), "{f}");
    }
}

#[test]
fn noise_free_monte_carlo_runs_agree_for_any_job_count() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "[experiment]\nruns = 3\nnoise_std = 0.0\n");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(
        code(&battid(&[
            "montecarlo",
            "--config",
            &cfg,
            "--out",
            s(&a),
            "--jobs",
            "1"
        ])),
        0
    );
    assert_eq!(
        code(&battid(&[
            "montecarlo",
            "--config",
            &cfg,
            "--out",
            s(&b),
            "--jobs",
            "3"
        ])),
        0
    );
    let first = report(&a.join("runs/run_000.json"));
    for k in 1..3 {
        // Seeds differ, but with no noise the data do not.
        assert_eq!(report(&a.join(format!("runs/run_{k:03}.json"))), first);
    }
    for f in ["stats.csv", "params.csv", "ocv_band.csv"] {
        let (x, y) = (fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
        assert_eq!(x, y, "{f}");
    }
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o");
    let bad = write_config(dir.path(), "[solver]\nlambda9 = 1.0\n");
    assert_eq!(code(&battid(&["identify", "--config", &bad, "--out", s(&out)])), 2);
    assert_eq!(
        code(&battid(&["identify", "--data", "/nonexistent.csv", "--out", s(&out)])),
        3
    );
    assert_eq!(code(&battid(&["identify", "--out", s(&out)])), 2);
    assert_eq!(code(&battid(&["frobnicate"])), 2);
    let garbage = dir.path().join("g.csv");
    fs::write(&garbage, "time_s,current_a,voltage_v,soc\n0,1,3,0.5\n1,1,3,0.5\n").unwrap();
    assert_eq!(code(&battid(&["identify", "--data", s(&garbage), "--out", s(&out)])), 3);
}
