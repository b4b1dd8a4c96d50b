//! Scenario files: named, independently seeded runs of any subcommand.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::commands::{analytic, ic_audit, simulate, tfm_run, AnalyticParams, AuditParams, SimParams, TfmParams};
use crate::error::invalid;
use crate::output::{Format, Report};
use crate::reproduce::{reproduce, ReproName, ReproOptions};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Sim,
    Analytic,
    Tfm,
    Audit,
    Reproduce,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub kind: Kind,
    pub params: Value,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Output directory; `<out>/<name>` when absent.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioFile {
    Wrapped { scenarios: Vec<Scenario> },
    List(Vec<Scenario>),
}

impl ScenarioFile {
    pub fn into_scenarios(self) -> Vec<Scenario> {
        match self {
            ScenarioFile::Wrapped { scenarios } | ScenarioFile::List(scenarios) => scenarios,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReproParams {
    pub name: ReproName,
    #[serde(default)]
    pub options: ReproOptions,
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Parses `params` into `T`, naming the scenario on failure.
pub fn parse_params<T: serde::de::DeserializeOwned>(params: &Value, what: &str) -> Result<T> {
    serde_json::from_value(params.clone()).with_context(|| format!("invalid params for {what}"))
}

pub fn load_scenarios(path: &Path) -> Result<Vec<Scenario>> {
    let file: ScenarioFile = serde_json::from_value(read_json(path)?)
        .with_context(|| format!("{} is not a scenario file", path.display()))?;
    let scenarios = file.into_scenarios();
    validate_names(&scenarios)?;
    Ok(scenarios)
}

pub fn validate_names(scenarios: &[Scenario]) -> Result<()> {
    let mut seen = HashSet::new();
    for s in scenarios {
        let ok = !s.name.is_empty() && s.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
        if !ok {
            return Err(invalid(format!("scenario name `{}` is not an identifier", s.name)));
        }
        if !seen.insert(s.name.as_str()) {
            return Err(invalid(format!("duplicate scenario name `{}`", s.name)));
        }
    }
    Ok(())
}

/// Computes the reports of one scenario. `seed` overrides the scenario's own.
pub fn scenario_reports(s: &Scenario, seed: Option<u64>) -> Result<Vec<Report>> {
    let seed = seed.or(s.seed);
    let what = format!("scenario `{}`", s.name);
    match s.kind {
        Kind::Sim => simulate(&parse_params::<SimParams>(&s.params, &what)?, seed),
        Kind::Analytic => analytic(&parse_params::<AnalyticParams>(&s.params, &what)?),
        Kind::Tfm => tfm_run(&parse_params::<TfmParams>(&s.params, &what)?, seed),
        Kind::Audit => ic_audit(&parse_params::<AuditParams>(&s.params, &what)?),
        Kind::Reproduce => {
            let mut p: ReproParams = parse_params(&s.params, &what)?;
            if let Some(seed) = seed {
                p.options.seed = seed;
            }
            reproduce(p.name, &p.options)
        }
    }
}

pub fn write_reports(reports: &[Report], dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    reports.iter().map(|r| r.write(dir, format)).collect()
}

pub fn run_scenario(s: &Scenario, out: &Path, format: Format, seed: Option<u64>) -> Result<Vec<PathBuf>> {
    let reports = scenario_reports(s, seed).with_context(|| format!("scenario `{}`", s.name))?;
    let dir = s.output.clone().unwrap_or_else(|| out.join(&s.name));
    write_reports(&reports, &dir, format)
}

/// Runs every scenario; they share no state and write to separate paths.
pub fn run_all(scenarios: &[Scenario], out: &Path, format: Format, seed: Option<u64>) -> Result<Vec<PathBuf>> {
    validate_names(scenarios)?;
    let written = scenarios
        .par_iter()
        .map(|s| run_scenario(s, out, format, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(written.into_iter().flatten().collect())
}
