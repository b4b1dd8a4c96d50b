use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::Value;

use txfee::audit::Notion;
use txfee::tfm::MechanismSpec;
use txfee_cli::commands::{
    analytic, ic_audit, simulate, tfm_run, AnalyticParams, AuditParams, BidInput, SimParams, TfmParams,
};
use txfee_cli::error::{error_document, exit_code, invalid};
use txfee_cli::output::{Format, Report};
use txfee_cli::reproduce::{reproduce, ReproName, ReproOptions};
use txfee_cli::scenario::{load_scenarios, parse_params, read_json, run_all, write_reports};

#[derive(Parser)]
#[command(name = "txfee", version, about = "Mining-strategy simulation and fee-mechanism auditing")]
struct Cli {
    /// JSON config: parameters for the subcommand, or a scenario file for `run`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the event simulator on the configured miners.
    Simulate {
        #[arg(long)]
        replications: Option<u64>,
    },
    /// Evaluate closed-form results.
    Analytic {
        #[command(subcommand)]
        op: Option<AnalyticCmd>,
    },
    /// Execute a mechanism on one bid vector.
    TfmRun {
        /// Mechanism as JSON, e.g. '{"kind":"first-price","block_size":2}'.
        #[arg(long)]
        mechanism: Option<String>,
        #[arg(long, value_delimiter = ',')]
        bids: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        included: Option<Vec<usize>>,
        /// Sample randomized confirmation from the seed.
        #[arg(long)]
        sampled: bool,
    },
    /// Search for profitable deviations.
    IcAudit {
        #[arg(long)]
        mechanism: Option<String>,
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        #[arg(long, value_enum, value_delimiter = ',')]
        notion: Option<Vec<NotionArg>>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        cartel_size: Option<usize>,
        #[arg(long)]
        grid_ticks: Option<usize>,
        #[arg(long)]
        fake_budget: Option<usize>,
    },
    /// Regenerate a named table, curve or battery.
    Reproduce {
        #[arg(value_enum)]
        name: ReproName,
        /// Main-chain blocks per Monte Carlo cell.
        #[arg(long)]
        blocks: Option<u64>,
        /// Random walks per whale estimate.
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Run every scenario of the `--config` file.
    Run,
}

#[derive(Subcommand)]
enum AnalyticCmd {
    SelfishGrid {
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        gammas: Option<Vec<f64>>,
    },
    FeeSelfish {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        beta: Option<f64>,
    },
    Whale {
        #[arg(long)]
        chi_a: f64,
        #[arg(long)]
        chi_x: f64,
        #[arg(long)]
        z: u32,
    },
    Overtake {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        z: u32,
    },
    Equilibrium {
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 301)]
        points: usize,
        #[arg(long, default_value_t = 1.5)]
        x_max: f64,
    },
    Lambert {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<f64>,
    },
}

#[derive(Copy, Clone, clap::ValueEnum)]
enum NotionArg {
    Uic,
    Mmic,
    Oca,
}

impl From<NotionArg> for Notion {
    fn from(n: NotionArg) -> Self {
        match n {
            NotionArg::Uic => Notion::Uic,
            NotionArg::Mmic => Notion::Mmic,
            NotionArg::Oca => Notion::Oca,
        }
    }
}

fn config_doc(path: Option<&Path>) -> Result<Option<Value>> {
    path.map(read_json).transpose()
}

fn require_config(path: Option<&Path>, cmd: &str) -> Result<Value> {
    config_doc(path)?.ok_or_else(|| invalid(format!("{cmd} needs --config <path>")))
}

fn parse_mechanism(s: &str) -> Result<MechanismSpec> {
    serde_json::from_str(s).context("parsing --mechanism")
}

/// Loads `T` from the config when given, then lets flags patch fields.
fn base_params<T: serde::de::DeserializeOwned>(path: Option<&Path>, what: &str) -> Result<Option<T>> {
    config_doc(path)?.map(|doc| parse_params(&doc, what)).transpose()
}

fn reports(cli: &Cli) -> Result<Vec<Report>> {
    let cfg = cli.config.as_deref();
    match &cli.command {
        Command::Simulate { replications } => {
            let mut p: SimParams = parse_params(&require_config(cfg, "simulate")?, "simulate")?;
            if replications.is_some() {
                p.replications = *replications;
            }
            simulate(&p, cli.seed)
        }
        Command::Analytic { op } => {
            let params = match op {
                None => parse_params(&require_config(cfg, "analytic")?, "analytic")?,
                Some(AnalyticCmd::SelfishGrid { alphas, gammas }) => {
                    let mut doc = serde_json::json!({"op": "selfish-grid"});
                    if let Some(a) = alphas {
                        doc["alphas"] = serde_json::json!(a);
                    }
                    if let Some(g) = gammas {
                        doc["gammas"] = serde_json::json!(g);
                    }
                    parse_params(&doc, "analytic")?
                }
                Some(AnalyticCmd::FeeSelfish { alpha, gamma, beta }) => AnalyticParams::FeeSelfish {
                    alpha: *alpha,
                    gamma: *gamma,
                    beta: *beta,
                },
                Some(AnalyticCmd::Whale { chi_a, chi_x, z }) => AnalyticParams::Whale {
                    chi_a: *chi_a,
                    chi_x: *chi_x,
                    z: *z,
                },
                Some(AnalyticCmd::Overtake { q, z }) => AnalyticParams::Overtake { q: *q, z: *z },
                Some(AnalyticCmd::Equilibrium { gamma, points, x_max }) => AnalyticParams::Equilibrium {
                    gamma: *gamma,
                    points: *points,
                    x_max: *x_max,
                },
                Some(AnalyticCmd::Lambert { x }) => AnalyticParams::Lambert { x: x.clone() },
            };
            analytic(&params)
        }
        Command::TfmRun {
            mechanism,
            bids,
            included,
            sampled,
        } => {
            let base: Option<TfmParams> = base_params(cfg, "tfm-run")?;
            let mechanism = match (mechanism, &base) {
                (Some(m), _) => parse_mechanism(m)?,
                (None, Some(b)) => b.mechanism.clone(),
                (None, None) => return Err(invalid("tfm-run needs --mechanism or --config")),
            };
            let bids = match (bids, &base) {
                (Some(b), _) => b.iter().map(|&a| BidInput::Amount(a)).collect(),
                (None, Some(b)) => b.bids.clone(),
                (None, None) => return Err(invalid("tfm-run needs --bids or --config")),
            };
            let p = TfmParams {
                mechanism,
                bids,
                included: included.clone().or_else(|| base.as_ref().and_then(|b| b.included.clone())),
                sampled: *sampled || base.as_ref().is_some_and(|b| b.sampled),
            };
            tfm_run(&p, cli.seed)
        }
        Command::IcAudit {
            mechanism,
            values,
            notion,
            gamma,
            cartel_size,
            grid_ticks,
            fake_budget,
        } => {
            let base: Option<AuditParams> = base_params(cfg, "ic-audit")?;
            let mechanism = match (mechanism, &base) {
                (Some(m), _) => parse_mechanism(m)?,
                (None, Some(b)) => b.mechanism.clone(),
                (None, None) => return Err(invalid("ic-audit needs --mechanism or --config")),
            };
            let values = match (values, &base) {
                (Some(v), _) => v.clone(),
                (None, Some(b)) => b.values.clone(),
                (None, None) => return Err(invalid("ic-audit needs --values or --config")),
            };
            let mut config = base.as_ref().map(|b| b.config.clone()).unwrap_or_default();
            if gamma.is_some() {
                config.gamma = *gamma;
            }
            if let Some(c) = cartel_size {
                config.cartel_size = *c;
            }
            if let Some(t) = grid_ticks {
                config.grid_ticks = *t;
            }
            if let Some(f) = fake_budget {
                config.fake_budget = *f;
            }
            let notions = match notion {
                Some(n) => Some(n.iter().map(|&x| x.into()).collect()),
                None => base.and_then(|b| b.notions),
            };
            ic_audit(&AuditParams {
                mechanism,
                values,
                notions,
                config,
            })
        }
        Command::Reproduce { name, blocks, trials } => {
            let mut opts: ReproOptions = base_params(cfg, "reproduce")?.unwrap_or_default();
            if let Some(s) = cli.seed {
                opts.seed = s;
            }
            if let Some(b) = blocks {
                opts.blocks = *b;
            }
            if let Some(t) = trials {
                opts.trials = *t;
            }
            reproduce(*name, &opts)
        }
        Command::Run => unreachable!("handled by main"),
    }
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    if let Command::Run = cli.command {
        let path = cli.config.as_deref().ok_or_else(|| invalid("run needs --config <path>"))?;
        return run_all(&load_scenarios(path)?, &cli.out, cli.format, cli.seed);
    }
    write_reports(&reports(cli)?, &cli.out, cli.format)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            let doc = error_document(&err);
            eprintln!("{}", serde_json::to_string_pretty(&doc).expect("error document serializes"));
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
