//! Writes the 200-row, h = 8 problem used to cross-check the solver:
//! `cargo run --release --example desk_fixture -- <out.json>`.

use battid::fixture::ProblemBundle;
use battid_core::ecm::{self, EcmParams, SimConfig, SimulatedOcv};
use battid_core::regression::{self, IdConfig, IdProblem};
use nalgebra::{DMatrix, DVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "desk_problem.json".into());
    let profile = ecm::gen_drive_cycle(250.0, 1.0, 3, 2.0)?;
    // Capacity chosen so the 250 s record sweeps SOC from 0.9 down to 0.5.
    let drawn: f64 = -profile.current().iter().sum::<f64>() / 3600.0;
    let truth = EcmParams::new(0.06, 0.03, 0.02, 600.0, 5000.0, drawn / 0.4)?;
    let sim = SimConfig {
        noise_std: 1e-4,
        seed: 11,
        ..SimConfig::noiseless(0.9)
    };
    let rec = ecm::simulate(&truth, &SimulatedOcv, &profile, &sim)?;
    let cfg = IdConfig {
        knot_count: 6,
        ..IdConfig::default()
    };
    let kv = regression::knots_for(&rec, &cfg)?;
    let full = regression::assemble(&rec, &kv, &cfg)?;
    let rows = full.active_rows();
    let pick = |m: &DMatrix<f64>| m.select_rows(&rows);
    let prob = IdProblem::from_parts(
        DVector::from_iterator(rows.len(), rows.iter().map(|&j| full.y()[j])),
        pick(full.pi()),
        pick(full.f()),
        full.dg3().clone(),
        vec![false; rows.len()],
        full.nu(),
    )?;
    println!("m = {}, h = {}", rows.len(), prob.h());
    ProblemBundle::new(&prob, cfg.lambda1, cfg.lambda2).save(out.as_ref())?;
    Ok(())
}
