//! Parameter grids over an experiment.

use std::collections::BTreeMap;

use rayon::prelude::*;

use dimwit_core::causal::DeterministicStrategy;
use dimwit_core::interferometer::{ExperimentConfig, Mode};
use dimwit_core::retro::{min_retrocausality_with, LpConfig};
use dimwit_core::witness::{det_witness, idw_value};
use dimwit_core::Behavior;

use crate::analysis::quantized_binary;
use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const VALUE_COLUMNS: [&str; 3] = ["detw", "idw", "retro_min"];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Grid coordinates in column order.
    pub params: Vec<f64>,
    pub detw: Option<f64>,
    pub idw: Option<f64>,
    pub retro_min: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    /// Parameter names, sorted.
    pub columns: Vec<String>,
    pub rows: Vec<SweepRow>,
}

fn set_param(exp: &mut ExperimentConfig, name: &str, value: f64) -> Result<()> {
    let indexed = |prefix: &str, list: &mut Vec<f64>| -> Result<bool> {
        let Some(rest) = name.strip_prefix(prefix) else {
            return Ok(false);
        };
        let i: usize = rest
            .parse()
            .map_err(|_| CliError::Config(format!("bad sweep parameter {name:?}")))?;
        let len = list.len();
        let slot = list
            .get_mut(i)
            .ok_or_else(|| CliError::Config(format!("sweep parameter {name}: index out of range (length {len})")))?;
        *slot = value;
        Ok(true)
    };
    match name {
        "t_a" => exp.t_a = value,
        "t_b" => exp.t_b = value,
        "eta" => exp.eta = value,
        "alpha" => exp.alpha = value,
        _ => {
            if !indexed("phi_", &mut exp.phi)? && !indexed("sigma_", &mut exp.sigma)? {
                return Err(CliError::Config(format!(
                    "unknown sweep parameter {name:?}; use t_a, t_b, eta, alpha, phi_<i> or sigma_<i>"
                )));
            }
        }
    }
    Ok(())
}

/// Row-major grid over the sorted parameters: the last one varies fastest.
fn grid(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect()
    })
}

fn evaluate(b: &Behavior, k: usize, lp: &LpConfig) -> Result<SweepRow> {
    let s = b.scenario();
    let detw = (s.n_x >= 2 * k && s.n_y >= k)
        .then(|| det_witness(b, k).map(|r| r.value))
        .transpose()?;
    let idw = (s.n_x >= 3 && s.n_y >= 2).then(|| idw_value(b)).transpose()?;
    let retro_fits = DeterministicStrategy::count(&s, true).is_some_and(|n| n <= lp.strategy_cap);
    let retro_min = retro_fits
        .then(|| min_retrocausality_with(b, lp).map(|r| r.r_min))
        .transpose()?;
    Ok(SweepRow {
        params: Vec::new(),
        detw,
        idw,
        retro_min,
    })
}

pub fn run_sweep(config: &RunConfig, lp: &LpConfig) -> Result<Sweep> {
    let base = config
        .experiment
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep needs an \"experiment\"".into()))?;
    if base.mode == Mode::QuantumControl {
        return Err(CliError::Scenario("sweeps evaluate binary witnesses, unavailable in quantum-control mode".into()));
    }
    let ranges: &BTreeMap<_, _> = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep needs a \"sweep\" object of ranged parameters".into()))?;
    if ranges.is_empty() {
        return Err(CliError::Config("\"sweep\" declares no parameters".into()));
    }
    let columns: Vec<String> = ranges.keys().cloned().collect();
    let axes = ranges
        .iter()
        .map(|(name, r)| r.values(name))
        .collect::<Result<Vec<_>>>()?;
    let points = grid(&axes);
    // Build every configuration up front so malformed points fail as config errors.
    let experiments = points
        .iter()
        .map(|p| {
            let mut exp = base.clone();
            for (name, v) in columns.iter().zip(p) {
                set_param(&mut exp, name, *v)?;
            }
            exp.validate()?;
            Ok(exp)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = experiments
        .par_iter()
        .zip(points.par_iter())
        .map(|(exp, p)| {
            let b = quantized_binary(exp, config.k)?;
            let mut row = evaluate(&b, config.k, lp)?;
            row.params = p.clone();
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Sweep { columns, rows })
}
