use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use erl_core::mdp::validate_mdp;
use erl_core::precision::Precision;
use erl_experiments::builtins::{builtin, BuiltinName};
use erl_experiments::config::ExperimentConfig;
use erl_experiments::experiments::{occupancy_limit, policy_limit, properties, return_dist, stability};
use erl_experiments::io::load_mdp;
use erl_experiments::Result;

#[derive(Parser)]
#[command(name = "erl", version, about = "Entropy-regularized RL experiments on tabular MDPs")]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Builtin MDP: tristate, return-demo or mean-tie.
    #[arg(long, global = true)]
    builtin: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Floating-point width of the distributional iterates.
    #[arg(long, global = true, default_value = "64", value_parser = ["64", "32"])]
    precision: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate an MDP file, the configured MDP, or a builtin.
    Validate { path: Option<PathBuf> },
    /// Coupled and decoupled policies along the temperature ladder.
    PolicyLimit,
    /// Coupled and decoupled return distributions against a Monte-Carlo oracle.
    ReturnDist,
    /// Occupancy measures of the coupled policies and their limit.
    OccupancyLimit,
    /// Property sweeps; writes report.json.
    Properties,
    /// Classic versus soft distributional iterates.
    Stability,
}

enum Outcome {
    Pass,
    Fail,
}

fn config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(b) = &cli.builtin {
        cfg.builtin = Some(b.clone());
        cfg.mdp_path = None;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = config(cli)?;
    let precision = Precision::from_bits(cli.precision.parse().expect("restricted by clap"))?;
    let out = &cfg.output_dir;
    let report_files = |files: &[PathBuf]| files.iter().for_each(|f| println!("wrote {}", f.display()));
    match &cli.command {
        Command::Validate { path } => {
            let (label, mdp) = match (path, &cfg.mdp_path) {
                (Some(p), _) | (None, Some(p)) => (p.display().to_string(), load_mdp(p)?.mdp),
                (None, None) => {
                    let name: BuiltinName = cfg.builtin.as_deref().unwrap_or("tristate").parse()?;
                    (name.to_string(), builtin(name)?.mdp)
                }
            };
            debug_assert!(validate_mdp(&mdp).is_empty());
            println!("{label}: valid ({} states, {} actions, gamma {})", mdp.n_states(), mdp.n_actions(), mdp.discount());
            Ok(Outcome::Pass)
        }
        Command::PolicyLimit => {
            let setup = cfg.setup(BuiltinName::Tristate)?;
            let rep = policy_limit::run(&setup, &cfg)?;
            for r in &rep.rungs {
                println!(
                    "tau {:.1e}: sup TV to pi*_ref coupled {:.3e}, decoupled {:.3e}",
                    r.tau, r.sup_tv[0], r.sup_tv[1]
                );
            }
            report_files(&policy_limit::write(&rep, out)?);
            Ok(Outcome::Pass)
        }
        Command::ReturnDist => {
            let setup = cfg.setup(BuiltinName::ReturnDemo)?;
            let rep = return_dist::run(&setup, &cfg, precision)?;
            println!("oracle mean {:.6} (standard error {:.2e})", rep.oracle.mean, rep.oracle.standard_error);
            for r in &rep.rungs {
                println!(
                    "control {:.1e}: W1 to oracle coupled {:.4e}, decoupled (target {:.1e}) {:.4e}",
                    r.coupled.sigma, r.coupled_w1, r.decoupled.tau, r.decoupled_w1
                );
            }
            report_files(&return_dist::write(&rep, &setup.grid, out)?);
            Ok(Outcome::Pass)
        }
        Command::OccupancyLimit => {
            let setup = cfg.setup(BuiltinName::Tristate)?;
            let rep = occupancy_limit::run(&setup, &cfg)?;
            println!("max flow residual {:.3e} (ok: {})", rep.max_flow_residual, rep.flow_ok());
            println!("max decrease of R along the ladder {:.3e} (ok: {})", rep.max_regularizer_drop, rep.monotone_ok());
            println!(
                "TV to R-minimizer over {} mixtures of {} policies: {:.3e} (ok: {})",
                rep.n_mixtures,
                rep.n_vertices,
                rep.final_tv_to_minimizer,
                rep.limit_ok()
            );
            report_files(&[occupancy_limit::write(&rep, out)?]);
            Ok(if rep.passed() { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Properties => {
            let rep = properties::run_suite(cfg.seed)?;
            for p in &rep.properties {
                println!("{} {}: {}", if p.passed { "PASS" } else { "FAIL" }, p.name, p.detail);
            }
            report_files(&[properties::write(&rep, out)?]);
            Ok(if rep.passed { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Stability => {
            let setup = cfg.setup(BuiltinName::MeanTie)?;
            let rep = stability::run(&setup, &cfg, precision)?;
            println!("soft (tau {:.1e}) final successive sup-W1 {:.3e}", rep.tau, rep.soft_final_step());
            println!("classic final successive sup-W1 {:.3e}", rep.classic.sup_w1_to_previous.last().unwrap_or(&0.0));
            report_files(&stability::write(&rep, out)?);
            Ok(Outcome::Pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
