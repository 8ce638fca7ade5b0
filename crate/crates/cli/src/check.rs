//! Comparison of computed cells against an expected-values file.

use std::collections::BTreeMap;

use kinklap::operators::{predictor_at, ContinuumProblem, KernelParams, MomentBudget};
use serde::Deserialize;

use crate::config::ExperimentConfig;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub config: String,
    pub point: String,
    /// Index into the config's t grid.
    pub row: usize,
    pub column: String,
    pub value: f64,
    pub rel_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expected {
    pub entry: Vec<Entry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub entry: Entry,
    pub t: f64,
    pub computed: f64,
    pub rel_err: f64,
    pub pass: bool,
}

impl CheckLine {
    pub fn render(&self) -> String {
        format!(
            "{} {}:{} t={} {} computed={:.6} expected={} rel_err={:.3e} tol={}",
            if self.pass { "PASS" } else { "FAIL" },
            self.entry.config,
            self.entry.point,
            self.t,
            self.entry.column,
            self.computed,
            self.entry.value,
            self.rel_err,
            self.entry.rel_tol
        )
    }
}

pub fn parse_expected(text: &str) -> Result<Expected, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(format!("expected values: {e}")))
}

/// Evaluates every entry; `load` maps a config name to its text.
pub fn run_check(
    expected: &Expected,
    load: &dyn Fn(&str) -> Result<String, CliError>,
) -> Result<Vec<CheckLine>, CliError> {
    let mut configs: BTreeMap<&str, ExperimentConfig> = BTreeMap::new();
    for e in &expected.entry {
        if !configs.contains_key(e.config.as_str()) {
            configs.insert(&e.config, ExperimentConfig::parse(&load(&e.config)?)?);
        }
    }
    let mut problems = BTreeMap::new();
    let mut lines = Vec::with_capacity(expected.entry.len());
    for e in &expected.entry {
        let config = &configs[e.config.as_str()];
        let resolved = config.resolve()?;
        let ts = &resolved.ts;
        let t = *ts.get(e.row).ok_or_else(|| {
            CliError::Config(format!("{}: t grid has no row {}", e.config, e.row))
        })?;
        let x = &config
            .point(&e.point)
            .ok_or_else(|| CliError::Config(format!("{}: no point named `{}`", e.config, e.point)))?
            .coords;
        let params = KernelParams::new(t, config.eta).map_err(CliError::Numeric)?;
        let computed = match e.column.as_str() {
            "L_t" | "sqrt_t_L_t" => {
                if !problems.contains_key(e.config.as_str()) {
                    let p =
                        ContinuumProblem::new(&resolved.domain, &resolved.density, &resolved.field)
                            .map_err(CliError::Numeric)?;
                    problems.insert(e.config.as_str(), p);
                }
                let v = problems[e.config.as_str()]
                    .gauss(x, &params, config.tol)
                    .map_err(CliError::Numeric)?
                    .value;
                if e.column == "L_t" {
                    v
                } else {
                    t.sqrt() * v
                }
            }
            "predictor" | "sqrt_t_predictor" => {
                let budget = MomentBudget {
                    samples: config.moment_samples,
                    seed: config.seed,
                };
                let v = predictor_at(
                    &resolved.domain,
                    &resolved.density,
                    &resolved.field,
                    x,
                    t,
                    config.predictor_order,
                    budget,
                )
                .map_err(CliError::Numeric)?
                .value;
                if e.column == "predictor" {
                    v
                } else {
                    t.sqrt() * v
                }
            }
            other => {
                return Err(CliError::Config(format!(
                    "unsupported check column `{other}`"
                )))
            }
        };
        let rel_err = (computed - e.value).abs() / e.value.abs().max(f64::MIN_POSITIVE);
        lines.push(CheckLine {
            entry: e.clone(),
            t,
            computed,
            rel_err,
            pass: rel_err <= e.rel_tol,
        });
    }
    Ok(lines)
}
