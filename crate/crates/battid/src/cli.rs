//! Subcommands. Each writes into the `--out` directory and returns an error
//! whose [`Error::exit_code`] is the process status.

use std::path::{Path, PathBuf};

use battid_core::ecm::{self, OcvFunction, SimulatedOcv};
use battid_core::pipeline::{self, Identification};
use battid_core::signals::{self, BatteryMeta, SampledRecord};
use battid_core::solver::IterRecord;
use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::RunConfig;
use crate::csvio::{self, header_line, write_record, write_table, write_text_table};
use crate::error::{Error, Result};
use crate::report::{self, write_json, IdReport, ParamsJson, Stamp, PARAM_NAMES};
use crate::tune::{self, GridSpec, MonteCarloSpec};

#[derive(Debug, Parser)]
#[command(
    name = "battid",
    version,
    about = "Battery equivalent-circuit and OCV identification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration; every key is optional.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Input CSV record (overrides io.data).
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Output directory (overrides io.out).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for grid search and Monte Carlo.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Solver iteration lines on stderr.
    #[arg(long, global = true)]
    pub verbose: bool,
    /// Overrides experiment.seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Simulate the configured battery on a synthetic profile.
    Simulate,
    /// Identify circuit parameters and the OCV curve from a record.
    Identify,
    /// Grid search over lambda1 x lambda2 by in-sample RMSE.
    Tune,
    /// Repeat simulate + identify over independent noise draws.
    Montecarlo,
}

/// Runs the command and prints any error; returns the exit status.
pub fn main_with(cli: Cli) -> i32 {
    match run(&cli) {
        Ok(()) => crate::error::EXIT_OK,
        Err(e) => {
            eprintln!("battid: error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(d) = &cli.data {
        cfg.io.data = Some(d.clone());
    }
    if let Some(o) = &cli.out {
        cfg.io.out = Some(o.clone());
    }
    if let Some(s) = cli.seed {
        cfg.experiment.seed = s;
    }
    cfg.validate()?;
    let out = cfg
        .io
        .out
        .clone()
        .ok_or_else(|| Error::Config("no output directory: pass --out or set io.out".into()))?;
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let ctx = Ctx {
        hash: cfg.hash(),
        cfg,
        out,
        verbose: cli.verbose,
    };
    pool.install(|| match cli.command {
        Command::Simulate => ctx.simulate(),
        Command::Identify => ctx.identify(),
        Command::Tune => ctx.tune(),
        Command::Montecarlo => ctx.montecarlo(),
    })
}

struct Ctx {
    cfg: RunConfig,
    hash: String,
    out: PathBuf,
    verbose: bool,
}

#[derive(Serialize)]
struct TruthJson<'a> {
    #[serde(flatten)]
    stamp: Stamp,
    params: ParamsJson,
    capacity_ah: f64,
    initial_soc: f64,
    noise_std_v: f64,
    seed: u64,
    profile: &'a crate::config::ProfileName,
}

impl Ctx {
    fn header(&self) -> String {
        header_line(&self.hash)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn simulate(&self) -> Result<()> {
        let truth = self.cfg.truth()?;
        let sim = self.cfg.sim_config(self.cfg.experiment.seed);
        let rec = ecm::simulate(&truth, &SimulatedOcv, &self.cfg.profile()?, &sim)?;
        write_record(&self.path("record.csv"), &rec, &self.cfg.schema(), &self.header())?;
        write_json(
            &self.path("truth.json"),
            &TruthJson {
                stamp: Stamp::new(&self.hash),
                params: (&truth).into(),
                capacity_ah: truth.capacity_ah,
                initial_soc: sim.initial_soc,
                noise_std_v: sim.noise_std,
                seed: sim.seed,
                profile: &self.cfg.experiment.profile,
            },
        )?;
        report::write_ocv_table(&self.path("truth_ocv.csv"), &self.header(), SimulatedOcv.range(), |z| {
            SimulatedOcv.eval(z)
        })?;
        let (lo, hi) = rec.soc_range()?;
        println!(
            "simulated {} samples, SOC {:.4} -> {:.4} (range {lo:.4}..{hi:.4}), written to {}",
            rec.len(),
            rec.soc().map_or(f64::NAN, |z| z[0]),
            rec.soc().map_or(f64::NAN, |z| z[z.len() - 1]),
            self.out.display()
        );
        Ok(())
    }

    /// Loads a record and makes sure it has SOC, Coulomb-counting if needed.
    fn load(&self, path: &Path) -> Result<SampledRecord> {
        let rec = csvio::load_csv(path, &self.cfg.schema())?;
        if rec.soc().is_some() {
            return Ok(rec);
        }
        let z0 = self.cfg.battery.initial_soc.ok_or_else(|| {
            Error::Config(format!(
                "{} has no '{}' column; set battery.initial_soc (and battery.capacity_ah) so SOC can be Coulomb-counted",
                path.display(),
                self.cfg.io.soc_column
            ))
        })?;
        let meta = BatteryMeta::new(self.cfg.battery.capacity_ah, z0).map_err(|e| Error::Config(e.to_string()))?;
        signals::coulomb_count(&rec, &meta).map_err(|source| Error::Record {
            path: path.to_path_buf(),
            source,
        })
    }

    fn data(&self) -> Result<SampledRecord> {
        let path = self
            .cfg
            .io
            .data
            .as_ref()
            .ok_or_else(|| Error::Config("no input record: pass --data or set io.data".into()))?;
        self.load(path)
    }

    fn observer(&self) -> impl FnMut(&IterRecord) {
        let verbose = self.verbose;
        move |r: &IterRecord| {
            if verbose && (r.iter.is_multiple_of(25) || r.iter < 5) {
                eprintln!(
                    "iter {:6}  objective {:.9e}  primal {:.3e}  dual {:.3e}  rho {:.3e}",
                    r.iter, r.objective, r.primal_residual, r.dual_residual, r.rho
                );
            }
        }
    }

    /// Report, OCV table and prediction for one identification.
    fn write_identification(&self, id: &Identification, stem: &str, lambda: (f64, f64)) -> Result<IdReport> {
        let holdout = match &self.cfg.io.holdout {
            Some(p) => Some(id.score_on(&self.load(p)?)?),
            None => None,
        };
        let rep = IdReport::new(id, lambda, holdout.as_ref(), &self.hash);
        write_json(&self.path(&format!("{stem}.json")), &rep)?;
        report::write_ocv_table(
            &self.path(&format!("{stem}_ocv.csv")),
            &self.header(),
            id.knots.support(),
            |z| id.ocv.value(z).unwrap_or(f64::NAN),
        )?;
        Ok(rep)
    }

    fn identify(&self) -> Result<()> {
        let rec = self.data()?;
        let id_cfg = self.cfg.id_config();
        let id = pipeline::identify_observed(&rec, &id_cfg, &mut self.observer())?;
        let rep = self.write_identification(&id, "report", (id_cfg.lambda1, id_cfg.lambda2))?;
        if let Some(pred) = &id.prediction {
            report::write_prediction(&self.path("prediction.csv"), &self.header(), &rec, pred)?;
        }
        println!("{}", rep.summary());
        Ok(())
    }

    fn tune(&self) -> Result<()> {
        let e = &self.cfg.experiment;
        let grid = GridSpec {
            lambda1: e.lambda1_grid.clone(),
            lambda2: e.lambda2_grid.clone(),
        };
        grid.validate()?;
        let rec = self.data()?;
        let res = tune::grid_search(&rec, &grid, &self.cfg.id_config())?;
        let nan = || "NaN".to_string();
        let rows = res.cells.iter().map(|c| {
            let mut row = vec![c.lambda1.to_string(), c.lambda2.to_string(), c.status().to_string()];
            match &c.outcome {
                Ok(id) => {
                    row.push(id.score.map_or_else(nan, |s| s.rmse.to_string()));
                    row.push(id.score.map_or_else(nan, |s| s.vaf.to_string()));
                    row.push(id.report().converged.to_string());
                    row.extend(ParamsJson::from(&id.recovered).values().iter().map(f64::to_string));
                    row.push(String::new());
                }
                Err(err) => {
                    row.extend([nan(), nan(), "false".into()]);
                    row.extend((0..7).map(|_| nan()));
                    row.push(format!("\"{}\"", err.to_string().replace('"', "'")));
                }
            }
            row
        });
        let mut names = vec!["lambda1", "lambda2", "status", "rmse_v", "vaf_percent", "converged"];
        names.extend(PARAM_NAMES);
        names.push("error");
        write_text_table(&self.path("grid.csv"), &self.header(), &names, rows)?;

        let best = res.best();
        let id = best.outcome.as_ref().expect("best cell is scored");
        let rep = self.write_identification(id, "best", (best.lambda1, best.lambda2))?;
        let failed = res.cells.iter().filter(|c| c.status() != "ok").count();
        println!(
            "{} cells ({} flagged); best lambda1 = {:e}, lambda2 = {:e}",
            res.cells.len(),
            failed,
            best.lambda1,
            best.lambda2
        );
        println!("{}", rep.summary());
        Ok(())
    }

    fn montecarlo(&self) -> Result<()> {
        let e = &self.cfg.experiment;
        let truth = self.cfg.truth()?;
        let spec = MonteCarloSpec {
            runs: e.runs,
            noise_std: e.noise_std,
            base_seed: e.seed,
            initial_soc: self.cfg.sim_config(0).initial_soc,
        };
        let id_cfg = self.cfg.id_config();
        let res = tune::monte_carlo(&truth, &SimulatedOcv, &self.cfg.profile()?, &spec, &id_cfg)?;

        let runs_dir = self.path("runs");
        for (k, run) in res.runs.iter().enumerate() {
            let stem = format!("run_{k:03}");
            match &run.outcome {
                Ok(id) => {
                    let rep = IdReport::new(id, (id_cfg.lambda1, id_cfg.lambda2), None, &self.hash);
                    write_json(&runs_dir.join(format!("{stem}.json")), &rep)?;
                    report::write_ocv_table(
                        &runs_dir.join(format!("{stem}_ocv.csv")),
                        &self.header(),
                        id.knots.support(),
                        |z| id.ocv.value(z).unwrap_or(f64::NAN),
                    )?;
                }
                Err(err) => {
                    #[derive(Serialize)]
                    struct Failed {
                        #[serde(flatten)]
                        stamp: Stamp,
                        seed: u64,
                        error: String,
                    }
                    write_json(
                        &runs_dir.join(format!("{stem}.json")),
                        &Failed {
                            stamp: Stamp::new(&self.hash),
                            seed: run.seed,
                            error: err.to_string(),
                        },
                    )?;
                }
            }
        }

        // Parameter spread, one row per run.
        let nan = || "NaN".to_string();
        let rows = res.runs.iter().enumerate().map(|(k, run)| {
            let mut row = vec![k.to_string(), run.seed.to_string(), run.sign_order_ok().to_string()];
            match &run.outcome {
                Ok(id) => {
                    row.extend(ParamsJson::from(&id.recovered).values().iter().map(f64::to_string));
                    row.push(id.score.map_or_else(nan, |s| s.rmse.to_string()));
                    row.push(id.score.map_or_else(nan, |s| s.vaf.to_string()));
                }
                Err(_) => row.extend((0..9).map(|_| nan())),
            }
            row
        });
        let mut names = vec!["run", "seed", "sign_order_ok"];
        names.extend(PARAM_NAMES);
        names.extend(["rmse_v", "vaf_percent"]);
        write_text_table(&self.path("params.csv"), &self.header(), &names, rows)?;

        let truth_vals = ParamsJson::from(&truth).values();
        let stat_rows = PARAM_NAMES
            .iter()
            .enumerate()
            .map(|(j, name)| (name.to_string(), truth_vals[j], res.params[j]))
            .chain([
                ("rmse_v".to_string(), f64::NAN, res.rmse),
                ("vaf_percent".to_string(), f64::NAN, res.vaf),
            ])
            .map(|(name, t, s)| {
                let mut row = vec![name, t.to_string()];
                match s {
                    Some(s) => row.extend([s.mean, s.std, s.min, s.max].iter().map(f64::to_string)),
                    None => row.extend((0..4).map(|_| nan())),
                }
                row
            });
        write_text_table(
            &self.path("stats.csv"),
            &self.header(),
            &["quantity", "truth", "mean", "std", "min", "max"],
            stat_rows,
        )?;

        if let Some(b) = &res.band {
            let rows = (0..b.soc.len()).map(|k| {
                vec![
                    b.soc[k],
                    b.truth[k],
                    b.mean[k],
                    b.std[k],
                    b.mean[k] - 2.0 * b.std[k],
                    b.mean[k] + 2.0 * b.std[k],
                ]
            });
            write_table(
                &self.path("ocv_band.csv"),
                &self.header(),
                &["soc", "truth_v", "mean_v", "std_v", "lower_2sigma_v", "upper_2sigma_v"],
                rows,
            )?;
        }

        let ok = res.runs.iter().filter(|r| r.sign_order_ok()).count();
        println!(
            "{} runs, {} with positive parameters and tau1 < tau2",
            res.runs.len(),
            ok
        );
        if let (Some(r), Some(v)) = (res.rmse, res.vaf) {
            println!(
                "RMSE mean {:.4} mV (std {:.4}), VAF mean {:.4} % (std {:.4})",
                r.mean * 1e3,
                r.std * 1e3,
                v.mean,
                v.std
            );
        }
        for (j, name) in PARAM_NAMES.iter().enumerate() {
            if let Some(s) = res.params[j] {
                println!(
                    "{name:>9}: truth {:<12.6} mean {:<12.6} std {:.3e}",
                    truth_vals[j], s.mean, s.std
                );
            }
        }
        Ok(())
    }
}
