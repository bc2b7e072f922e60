use battid_core::ecm::{self, EcmParams, SimConfig, SimulatedOcv};
use battid_core::pipeline::{self, Identification};
use battid_core::regression::{IdConfig, Refinement};
use battid_core::signals::SampledRecord;
use battid_core::Error;

const TRUTH: [f64; 5] = [0.06, 0.03, 0.02, 600.0, 5000.0];

fn cycle(seed: u64, secs: f64) -> SampledRecord {
    ecm::gen_drive_cycle(secs, 1.0, seed, 2.0).unwrap()
}

/// Capacity that takes the reference cycle from 0.9 down to 0.2.
fn capacity() -> f64 {
    -cycle(1, 3600.0).current().iter().sum::<f64>() / 3600.0 / 0.7
}

fn simulate(seed: u64, secs: f64, z0: f64, noise: f64) -> SampledRecord {
    let p = EcmParams::new(TRUTH[0], TRUTH[1], TRUTH[2], TRUTH[3], TRUTH[4], capacity()).unwrap();
    let cfg = SimConfig {
        noise_std: noise,
        seed: 7,
        ..SimConfig::noiseless(z0)
    };
    ecm::simulate(&p, &SimulatedOcv, &cycle(seed, secs), &cfg).unwrap()
}

fn run(rec: &SampledRecord, lambda1: f64, lambda2: f64) -> Identification {
    let cfg = IdConfig {
        lambda1,
        lambda2,
        ..IdConfig::default()
    };
    pipeline::identify(rec, &cfg).unwrap()
}

fn ocv_error(id: &Identification) -> f64 {
    let (lo, hi) = id.ocv.basis().support();
    (0..=500)
        .map(|k| lo + (hi - lo) * k as f64 / 500.0)
        .map(|z| (id.ocv.value(z).unwrap() - ecm::ocv_sim_curve(z).unwrap()).abs())
        .fold(0.0, f64::max)
}

#[test]
fn noise_free_reference_circuit() {
    let rec = simulate(1, 3600.0, 0.9, 0.0);
    let id = run(&rec, 1e-8, 0.0);
    let r = id.recovered;
    for (got, want) in [r.r0, r.r1, r.r2, r.c1, r.c2].iter().zip(TRUTH) {
        assert!((got / want - 1.0).abs() < 0.02, "{got} vs {want}");
    }
    assert!((r.tau1 / 18.0 - 1.0).abs() < 0.02 && (r.tau2 / 100.0 - 1.0).abs() < 0.02);
    assert!(!r.flags.non_physical);
    assert!(ocv_error(&id) < 5e-3);
    let score = id.score.unwrap();
    assert!(score.vaf > 99.9);
    assert!(id.report().converged);
    // The refit makes P exactly rank one.
    let sv = &id.solution.diagnostics.p_singular_values;
    assert!(sv[1] < 1e-10 * sv[0]);
}

#[test]
fn noisy_reference_circuit_default_weights() {
    let rec = simulate(1, 3600.0, 0.9, 1e-4);
    let id = run(&rec, 2e-6, 1e-8);
    let r = id.recovered;
    assert!(!r.flags.non_physical);
    assert!(r.tau1 < r.tau2);
    assert!((r.r0 / TRUTH[0] - 1.0).abs() < 0.02);
    assert!(id.score.unwrap().vaf > 99.0);
    assert!(ocv_error(&id) < 5e-3);
}

#[test]
fn held_out_cycle_scores_well() {
    let id = run(&simulate(1, 3600.0, 0.9, 0.0), 1e-8, 0.0);
    let other = simulate(9, 1200.0, 0.8, 0.0);
    let (lo, hi) = id.ocv.basis().support();
    let (zlo, zhi) = other.soc_range().unwrap();
    assert!(lo <= zlo && zhi <= hi);
    let s = id.score_on(&other).unwrap();
    assert!(s.rmse < 1e-3 && s.vaf > 99.9, "{s:?}");
}

#[test]
fn direct_refinement_keeps_relaxed_values() {
    let rec = simulate(1, 1800.0, 0.9, 0.0);
    let cfg = IdConfig {
        lambda1: 1e-6,
        lambda2: 0.0,
        refinement: Refinement::Direct,
        ..IdConfig::default()
    };
    let id = pipeline::identify(&rec, &cfg).unwrap();
    assert_eq!(id.solution, id.relaxed);
}

#[test]
fn hold_correction_keeps_dc_resistance() {
    let rec = simulate(1, 1800.0, 0.9, 0.0);
    let cfg = IdConfig {
        lambda1: 1e-8,
        lambda2: 0.0,
        linear_passes: 0,
        ..IdConfig::default()
    };
    let id = pipeline::identify(&rec, &cfg).unwrap();
    let (a, b) = (id.raw, id.recovered);
    let dc = |r: &battid_core::recovery::Recovered| r.r0 + r.r1 + r.r2;
    assert!((dc(&a) - dc(&b)).abs() < 1e-12);
    assert!(b.r1 < a.r1 && b.r2 < a.r2);
    assert_eq!((a.tau1, a.tau2), (b.tau1, b.tau2));
}

#[test]
fn linear_pass_pins_down_series_resistance() {
    let rec = simulate(1, 3600.0, 0.9, 0.0);
    let held = pipeline::identify(
        &rec,
        &IdConfig {
            linear_passes: 0,
            ..IdConfig::default()
        },
    )
    .unwrap();
    let id = pipeline::identify(&rec, &IdConfig::default()).unwrap();
    let err = |r: f64| (r / TRUTH[0] - 1.0).abs();
    assert!(err(id.recovered.r0) < 1e-4, "{}", id.recovered.r0);
    assert!(err(id.recovered.r0) < err(held.recovered.r0) / 3.0);
    // The last pass has nothing to correct.
    assert_eq!(id.raw, id.recovered);
}

#[test]
fn missing_soc_is_reported() {
    let rec = cycle(1, 600.0);
    assert_eq!(
        pipeline::identify(&rec, &IdConfig::default()).unwrap_err(),
        Error::MissingSoc
    );
}
