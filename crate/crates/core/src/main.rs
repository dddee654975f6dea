//! Command-line entry points for the drying workbench: single-pass
//! simulation, parameter calibration, dataset prediction reports, and the
//! embedded-fixture self-check.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cyldry::estimation::{fit, predictions};
use cyldry::kinetics::EvapParams;
use cyldry::solver::{simulate_machine, MachineConfig, SampleInputs, Trajectory};
use cyldry::workbench::{
    check_all_fixtures, emit_report, load_config, load_dataset, ReportRow, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "cyldry",
    version,
    about = "Contact drying of wet fabric on heated cylinders: simulation and calibration"
)]
struct Cli {
    /// Run configuration file; shipped defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Override the solver grid node count.
    #[arg(long)]
    nodes: Option<usize>,
    /// Override the solver time step (s).
    #[arg(long)]
    dt: Option<f64>,
    /// Directory for emitted files.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Evaporation parameter triple `k,Mb,gamma`.
#[derive(Debug, Clone, Copy)]
struct ParamTriple([f64; 3]);

fn parse_params(raw: &str) -> Result<ParamTriple, String> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected k,Mb,gamma, got '{raw}'"));
    }
    let mut vals = [0.0; 3];
    for (v, p) in vals.iter_mut().zip(&parts) {
        *v = p
            .trim()
            .parse()
            .map_err(|_| format!("cannot parse '{}' as a number", p.trim()))?;
    }
    Ok(ParamTriple(vals))
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one machine pass and print the final-state summary.
    Simulate {
        #[command(flatten)]
        common: CommonOpts,
        /// Total drying time (s).
        #[arg(long, default_value_t = 30.0)]
        tau: f64,
        /// Fabric thickness (m).
        #[arg(long, default_value_t = 6.3e-4)]
        thickness: f64,
        /// Initial moisture (liquid-to-fiber mass ratio).
        #[arg(long, default_value_t = 0.63)]
        m0: f64,
        /// Cylinder temperature (K); defaults to the configured value.
        #[arg(long)]
        tcyl: Option<f64>,
        /// Evaporation parameters `k,Mb,gamma`; defaults to the
        /// configured kinetics.
        #[arg(long, value_parser = parse_params)]
        params: Option<ParamTriple>,
        /// Write sampled (t, x, T, M) snapshots to trajectory.csv.
        #[arg(long)]
        trajectory: bool,
    },
    /// Calibrate (k, M_b, gamma) against a measured dataset.
    Fit {
        #[command(flatten)]
        common: CommonOpts,
        /// Dataset CSV; falls back to paths.dataset from the config.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Predict a dataset with fixed parameters and emit a report.
    Predict {
        #[command(flatten)]
        common: CommonOpts,
        /// Dataset CSV; falls back to paths.dataset from the config.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Evaporation parameters `k,Mb,gamma`; defaults to the
        /// configured kinetics.
        #[arg(long, value_parser = parse_params)]
        params: Option<ParamTriple>,
    },
    /// Recompute metrics and labels of the embedded validation tables and
    /// compare them with the published values.
    CheckFixtures,
}

fn load_run_config(path: &Option<PathBuf>) -> cyldry::Result<RunConfig> {
    match path {
        Some(p) => load_config(p),
        None => Ok(RunConfig::default()),
    }
}

fn apply_overrides(machine: &mut MachineConfig, common: &CommonOpts) {
    if let Some(n) = common.nodes {
        machine.n_nodes = n;
    }
    if let Some(dt) = common.dt {
        machine.dt = dt;
    }
}

fn out_dir(common: &CommonOpts, cfg: &RunConfig) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn dataset_path(flag: &Option<PathBuf>, cfg: &RunConfig) -> cyldry::Result<PathBuf> {
    flag.clone()
        .or_else(|| cfg.dataset_path.as_ref().map(PathBuf::from))
        .ok_or_else(|| {
            cyldry::Error::Fit("no dataset given (use --dataset or paths.dataset)".into())
        })
}

fn kinetics_from(params: &Option<ParamTriple>, cfg: &RunConfig) -> EvapParams {
    match params {
        Some(ParamTriple([k, m_b, gamma])) => {
            let mut p = EvapParams::new(*k, *m_b, *gamma);
            p.beta = cfg.kinetics.beta;
            p
        }
        None => cfg.kinetics,
    }
}

fn ensure_dir(dir: &Path) -> cyldry::Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn run(cli: Cli) -> cyldry::Result<()> {
    let cfg = load_run_config(&cli.config)?;
    match cli.command {
        Command::Simulate {
            common,
            tau,
            thickness,
            m0,
            tcyl,
            params,
            trajectory,
        } => {
            let mut machine = cfg.machine.clone();
            apply_overrides(&mut machine, &common);
            let inputs = SampleInputs {
                tau,
                thickness,
                t_cyl: tcyl.unwrap_or(cfg.t_cyl),
                m0,
            };
            let kin = kinetics_from(&params, &cfg);
            let mut recorder = trajectory.then(|| {
                let steps_per_stage = (tau / machine.stage_fractions.len() as f64 / machine.dt)
                    .ceil()
                    .max(1.0) as usize;
                Trajectory::new((steps_per_stage / 40).max(1))
            });
            let state = simulate_machine(&inputs, &kin, &machine, recorder.as_mut())?;
            let avg = cyldry::solver::average_moisture(&state);
            println!(
                "pass: tau = {} s, thickness = {} m, T_cyl = {} K, M0 = {}",
                inputs.tau, inputs.thickness, inputs.t_cyl, inputs.m0
            );
            println!(
                "kinetics: k = {:.3E}, M_b = {:.3E}, gamma = {:.3E}, beta = {}",
                kin.k, kin.m_b, kin.gamma, kin.beta
            );
            let t = state.temperature();
            let tmin = t.iter().cloned().fold(f64::MAX, f64::min);
            let tmax = t.iter().cloned().fold(f64::MIN, f64::max);
            println!("final average moisture: {avg:.4E}");
            println!("final temperature range: [{tmin:.2}, {tmax:.2}] K");
            if let Some(rec) = recorder {
                let dir = out_dir(&common, &cfg);
                ensure_dir(&dir)?;
                let path = dir.join("trajectory.csv");
                let mut file = std::fs::File::create(&path)?;
                rec.write_csv(state.grid(), &mut file)?;
                println!("trajectory written to {}", path.display());
            }
            Ok(())
        }
        Command::Fit { common, dataset } => {
            let mut machine = cfg.machine.clone();
            apply_overrides(&mut machine, &common);
            let path = dataset_path(&dataset, &cfg)?;
            let samples = load_dataset(&path)?;
            let mut init = EvapParams::new(cfg.fit.init[0], cfg.fit.init[1], cfg.fit.init[2]);
            init.beta = cfg.kinetics.beta;
            let result = fit(&samples, &cfg.fit.bounds, &init, &machine, &cfg.fit.options)?;
            println!(
                "fitted parameters: k = {:.4E}, M_b = {:.4E}, gamma = {:.4E}",
                result.params.k, result.params.m_b, result.params.gamma
            );
            println!(
                "MSE: {:.6}   MAE: {:.4}   iterations: {}   residual evaluations: {}   status: {}",
                result.mse, result.mae, result.n_iterations, result.n_residual_evals, result.status
            );
            let rows: Vec<ReportRow> = samples
                .iter()
                .zip(&result.residuals)
                .map(|(s, r)| ReportRow {
                    key: s.key.clone(),
                    true_value: s.m_tau,
                    pred_value: s.m_tau - r,
                })
                .collect();
            let dir = out_dir(&common, &cfg);
            ensure_dir(&dir)?;
            let path = dir.join("fit_report.txt");
            emit_report(&rows, &result.params, Some(&result), &path)?;
            println!("report written to {}", path.display());
            Ok(())
        }
        Command::Predict {
            common,
            dataset,
            params,
        } => {
            let mut machine = cfg.machine.clone();
            apply_overrides(&mut machine, &common);
            let path = dataset_path(&dataset, &cfg)?;
            let samples = load_dataset(&path)?;
            let kin = kinetics_from(&params, &cfg);
            let preds = predictions(&samples, &kin, &machine)?;
            let rows: Vec<ReportRow> = samples
                .iter()
                .zip(&preds)
                .map(|(s, p)| ReportRow {
                    key: s.key.clone(),
                    true_value: s.m_tau,
                    pred_value: *p,
                })
                .collect();
            let truths: Vec<f64> = samples.iter().map(|s| s.m_tau).collect();
            let m = cyldry::estimation::metrics(&truths, &preds)?;
            println!(
                "predicted {} samples: MSE {:.6}, MAE {:.4}",
                rows.len(),
                m.mse,
                m.mae
            );
            let dir = out_dir(&common, &cfg);
            ensure_dir(&dir)?;
            let path = dir.join("report.txt");
            emit_report(&rows, &kin, None, &path)?;
            println!("report written to {}", path.display());
            Ok(())
        }
        Command::CheckFixtures => {
            let checks = check_all_fixtures()?;
            let mut all_ok = true;
            for c in &checks {
                let labels_ok = c.label_mismatches.is_empty();
                all_ok &= c.passed();
                println!(
                    "table {}: MSE {:.6} [{}], MAE {:.4} [{}], labels {} [{}]",
                    c.table,
                    c.mse,
                    if c.mse_ok { "ok" } else { "MISMATCH" },
                    c.mae,
                    if c.mae_ok { "ok" } else { "MISMATCH" },
                    if labels_ok {
                        "17/17".to_string()
                    } else {
                        format!("mismatches at keys {:?}", c.label_mismatches)
                    },
                    if labels_ok { "ok" } else { "MISMATCH" },
                );
            }
            if all_ok {
                println!("all fixture checks passed");
                Ok(())
            } else {
                Err(cyldry::Error::Fit(
                    "fixture self-check failed; see mismatches above".into(),
                ))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
