//! Run configuration, read from a single JSON document.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use dimwit_core::interferometer::ExperimentConfig;
use dimwit_core::{Behavior, Scenario};

use crate::error::{CliError, Result};

const SCHEMA_HINT: &str = "expected a JSON object with optional keys \
\"experiment\" {mode, phi, sigma, t_a, t_b, eta, alpha}, \
\"behavior\" {table: [d][x][y]}, \"analysis\" [names], \"k\", \
\"shared_randomness\", \"sweep\" {param: {start, stop, step}} and \
\"retro_curve\" {start, stop, step}";

fn two() -> usize {
    2
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub experiment: Option<ExperimentConfig>,
    /// Observed behavior, used instead of simulating `experiment`.
    #[serde(default)]
    pub behavior: Option<BehaviorSpec>,
    #[serde(default)]
    pub analysis: Vec<String>,
    /// Classical dimension tested by `detw` and `membership`.
    #[serde(default = "two")]
    pub k: usize,
    #[serde(default = "yes")]
    pub shared_randomness: bool,
    #[serde(default)]
    pub sweep: Option<BTreeMap<String, RangeSpec>>,
    /// Witness targets for `retro-curve`.
    #[serde(default)]
    pub retro_curve: Option<RangeSpec>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorSpec {
    #[serde(default)]
    pub n_x: Option<usize>,
    #[serde(default)]
    pub n_y: Option<usize>,
    #[serde(default)]
    pub n_d: Option<usize>,
    /// `p(d|x,y)` nested as `[d][x][y]`.
    pub table: Vec<Vec<Vec<f64>>>,
}

impl BehaviorSpec {
    pub fn to_behavior(&self, n_lambda: usize) -> Result<Behavior> {
        let n_d = self.table.len();
        let n_x = self.table.first().map_or(0, Vec::len);
        let n_y = self.table.first().and_then(|r| r.first()).map_or(0, Vec::len);
        for (name, given, found) in [("n_x", self.n_x, n_x), ("n_y", self.n_y, n_y), ("n_d", self.n_d, n_d)] {
            if given.is_some_and(|g| g != found) {
                return Err(CliError::Config(format!(
                    "behavior declares {name} = {} but the table has {found}",
                    given.unwrap_or_default()
                )));
            }
        }
        let scenario = Scenario::new(n_x, n_y, n_d, n_lambda)?;
        Ok(Behavior::from_nested(scenario, &self.table)?)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum RangeSpec {
    Step { start: f64, stop: f64, step: f64 },
    Values { values: Vec<f64> },
}

impl RangeSpec {
    /// Grid values, rounded to 12 significant digits.
    pub fn values(&self, name: &str) -> Result<Vec<f64>> {
        let bad = |why: &str| Err(CliError::Config(format!("range for {name}: {why}")));
        let out = match self {
            RangeSpec::Values { values } => values.clone(),
            RangeSpec::Step { start, stop, step } => {
                if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
                    return bad("bounds and step must be finite");
                }
                if *step <= 0.0 {
                    return bad("step must be positive");
                }
                let n = ((stop - start) / step + 1e-9).floor();
                if n < 0.0 {
                    return bad("stop lies below start");
                }
                if n > 1e6 {
                    return bad("more than a million grid points");
                }
                (0..=n as usize).map(|i| crate::output::quantize(start + i as f64 * step)).collect()
            }
        };
        if out.is_empty() {
            return bad("no grid points");
        }
        if out.iter().any(|v| !v.is_finite()) {
            return bad("values must be finite");
        }
        Ok(out)
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("{e}; {SCHEMA_HINT}")))?;
        if config.experiment.is_none() && config.behavior.is_none() {
            return Err(CliError::Config(format!(
                "neither \"experiment\" nor \"behavior\" given; {SCHEMA_HINT}"
            )));
        }
        if config.k == 0 {
            return Err(CliError::Config("k must be at least 1".into()));
        }
        if let Some(exp) = &config.experiment {
            exp.validate()?;
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}
