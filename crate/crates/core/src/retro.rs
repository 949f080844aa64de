//! How much influence of the late setting `y` on the hidden variable a
//! classical model needs.
//!
//! The measure is
//!
//! ```text
//! R = max_{lambda, x, y, y'} sum_gamma p(gamma) |p(lambda|x,gamma,y) - p(lambda|x,gamma,y')|
//! ```
//!
//! over mixtures of deterministic retrocausal strategies. Minimizing it
//! subject to reproducing an observation is a linear program in the weights
//! `p(gamma)` plus one epigraph variable for the maximum.

use serde::Serialize;

use dimwit_lp::{solve_with, LinearProgram, LpStatus, SolveOptions};

use crate::causal::strategy::{
    enumerate_strategies_capped, DeterministicStrategy, StrategyMixture, DEFAULT_STRATEGY_CAP,
};
use crate::error::{Error, Result};
use crate::prob::{Behavior, Scenario, INPUT_TOL};
use crate::witness::{idw_value, IDW_ALGEBRAIC_MAX};

#[derive(Debug, Clone, PartialEq)]
pub struct RetroReport {
    pub r_min: f64,
    pub mixture: StrategyMixture,
    /// Linear witness of the analysed behavior, where the scenario admits it.
    pub idw_value: Option<f64>,
}

/// Options shared by the LP-backed operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpConfig {
    pub solve: SolveOptions,
    pub strategy_cap: u128,
}

impl Default for LpConfig {
    fn default() -> Self {
        LpConfig {
            solve: SolveOptions::default(),
            strategy_cap: DEFAULT_STRATEGY_CAP,
        }
    }
}

/// Per strategy, one 0/1 flag per `(lambda, x, y < y')`: does switching
/// `y -> y'` move `lambda` in or out of `f(x, .)`.
fn shift_indicators(strategy: &DeterministicStrategy) -> Vec<f64> {
    let s = strategy.scenario();
    let mut out = Vec::new();
    for lambda in 0..s.n_lambda {
        for x in 0..s.n_x {
            for y in 0..s.n_y {
                for y2 in y + 1..s.n_y {
                    let a = strategy.hidden(x, y) == lambda;
                    let b = strategy.hidden(x, y2) == lambda;
                    out.push((a != b) as u8 as f64);
                }
            }
        }
    }
    out
}

/// `R` of a mixture; zero for non-retrocausal mixtures.
pub fn retro_measure_of_mixture(mixture: &StrategyMixture) -> f64 {
    if !mixture.is_retrocausal() {
        return 0.0;
    }
    let mut totals: Vec<f64> = Vec::new();
    for (st, w) in mixture.iter() {
        let flags = shift_indicators(st);
        if totals.is_empty() {
            totals = vec![0.0; flags.len()];
        }
        for (t, f) in totals.iter_mut().zip(flags) {
            *t += w * f;
        }
    }
    totals.into_iter().fold(0.0, f64::max)
}

fn check_input_distribution(p: &[f64], n: usize, name: &str) -> Result<()> {
    if p.len() != n {
        return Err(Error::BadInputDistribution(format!(
            "{name} has {} entries, expected {n}",
            p.len()
        )));
    }
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::BadInputDistribution(format!("{name} has a negative entry")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > INPUT_TOL {
        return Err(Error::BadInputDistribution(format!("{name} sums to {sum}")));
    }
    Ok(())
}

/// `TD = 1/2 sum_{y,lambda} |p(lambda,y) - p(lambda) p(y)|` with `p(lambda, y)`
/// induced by the mixture under input distributions `p_x`, `p_y`.
pub fn trace_distance_measure(mixture: &StrategyMixture, p_x: &[f64], p_y: &[f64]) -> Result<f64> {
    let s = mixture.scenario();
    check_input_distribution(p_x, s.n_x, "p(x)")?;
    check_input_distribution(p_y, s.n_y, "p(y)")?;
    let mut joint = vec![vec![0.0; s.n_y]; s.n_lambda];
    for (st, w) in mixture.iter() {
        for (x, px) in p_x.iter().enumerate() {
            for (y, py) in p_y.iter().enumerate() {
                joint[st.hidden(x, y)][y] += w * px * py;
            }
        }
    }
    let mut td = 0.0;
    for row in &joint {
        let p_lambda: f64 = row.iter().sum();
        for (y, py) in p_y.iter().enumerate() {
            td += (row[y] - p_lambda * py).abs();
        }
    }
    Ok(0.5 * td)
}

pub fn trace_distance_uniform(mixture: &StrategyMixture) -> Result<f64> {
    let s = mixture.scenario();
    let p_x = vec![1.0 / s.n_x as f64; s.n_x];
    let p_y = vec![1.0 / s.n_y as f64; s.n_y];
    trace_distance_measure(mixture, &p_x, &p_y)
}

/// Weights over `strategies` plus the epigraph variable, with the shift
/// constraints `sum p(gamma) c_gamma <= t` already added.
fn retro_program(strategies: &[DeterministicStrategy]) -> LinearProgram {
    let n = strategies.len();
    let mut objective = vec![0.0; n + 1];
    objective[n] = 1.0;
    let mut lp = LinearProgram::new(objective);
    let mut normalization = vec![1.0; n + 1];
    normalization[n] = 0.0;
    lp.add_eq(normalization, 1.0);

    let flags: Vec<Vec<f64>> = strategies.iter().map(shift_indicators).collect();
    let n_rows = flags.first().map_or(0, Vec::len);
    let mut seen: Vec<Vec<f64>> = Vec::new();
    for r in 0..n_rows {
        let mut row: Vec<f64> = flags.iter().map(|f| f[r]).collect();
        if seen.contains(&row) {
            continue;
        }
        seen.push(row.clone());
        row.push(-1.0);
        lp.add_le(row, 0.0);
    }
    lp
}

fn extract_mixture(strategies: &[DeterministicStrategy], solution: &[f64]) -> Result<StrategyMixture> {
    let total: f64 = solution[..strategies.len()].iter().sum();
    let (picked, weights): (Vec<_>, Vec<_>) = strategies
        .iter()
        .zip(solution)
        .filter(|(_, &w)| w > 0.0)
        .map(|(s, &w)| (s.clone(), w / total))
        .unzip();
    StrategyMixture::new(picked, weights)
}

fn run(lp: &LinearProgram, config: &LpConfig) -> Result<Vec<f64>> {
    let out = solve_with(lp, &config.solve)?;
    match out.status {
        LpStatus::Optimal => Ok(out.solution),
        LpStatus::Infeasible => Err(Error::SolverFailure("program reported infeasible".into())),
        LpStatus::Unbounded => Err(Error::SolverFailure("program reported unbounded".into())),
    }
}

pub fn min_retrocausality(behavior: &Behavior) -> Result<RetroReport> {
    min_retrocausality_with(behavior, &LpConfig::default())
}

/// Smallest `R` over retrocausal mixtures (hidden dimension taken from the
/// behavior's scenario) that reproduce `behavior` exactly.
pub fn min_retrocausality_with(behavior: &Behavior, config: &LpConfig) -> Result<RetroReport> {
    let s = behavior.scenario();
    let strategies = enumerate_strategies_capped(s, true, config.strategy_cap)?;
    let n = strategies.len();
    let mut lp = retro_program(&strategies);
    // The last outcome of each slice follows from normalization.
    let tables: Vec<Behavior> = strategies.iter().map(DeterministicStrategy::behavior).collect();
    for d in 0..s.n_d.saturating_sub(1) {
        for x in 0..s.n_x {
            for y in 0..s.n_y {
                let mut row: Vec<f64> = tables.iter().map(|t| t.p(d, x, y)).collect();
                row.push(0.0);
                lp.add_eq(row, behavior.p(d, x, y));
            }
        }
    }
    let solution = run(&lp, config)?;
    let r_min = solution[n];
    let mixture = extract_mixture(&strategies, &solution)?;
    Ok(RetroReport {
        r_min,
        mixture,
        idw_value: idw_value(behavior).ok(),
    })
}

/// How the witness value constrains the mixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdwTarget {
    /// `I_DW(mixture) >= target`: the least `R` that reaches the value.
    AtLeast,
    /// `I_DW(mixture) = target`.
    Exactly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetroCurvePoint {
    pub idw_target: f64,
    pub r_min: f64,
    pub mixture: StrategyMixture,
}

/// `max[(I - 3)/4, 0]`.
pub fn closed_form_min_retro(idw: f64) -> f64 {
    ((idw - 3.0) / 4.0).max(0.0)
}

/// Least retrocausality needed for a two-dimensional model to reach a
/// linear-witness value of at least `target`.
pub fn min_retro_given_idw(target: f64) -> Result<f64> {
    Ok(min_retro_for_idw(target, IdwTarget::AtLeast, &LpConfig::default())?.r_min)
}

pub fn min_retro_for_idw(target: f64, mode: IdwTarget, config: &LpConfig) -> Result<RetroCurvePoint> {
    if !target.is_finite() || target.abs() > IDW_ALGEBRAIC_MAX + 1e-12 {
        return Err(Error::OutOfRange {
            value: target,
            range: "[-5, 5]",
        });
    }
    let strategies = enumerate_strategies_capped(Scenario::linear_witness(), true, config.strategy_cap)?;
    let mut lp = retro_program(&strategies);
    let mut row: Vec<f64> = strategies
        .iter()
        .map(|s| idw_value(&s.behavior()).expect("linear-witness scenario"))
        .collect();
    row.push(0.0);
    match mode {
        IdwTarget::AtLeast => lp.add_ge(row, target),
        IdwTarget::Exactly => lp.add_eq(row, target),
    };
    let solution = run(&lp, config)?;
    Ok(RetroCurvePoint {
        idw_target: target,
        r_min: solution[strategies.len()],
        mixture: extract_mixture(&strategies, &solution)?,
    })
}

/// The two deterministic retrocausal strategies that saturate the linear
/// witness at 5:
///
/// 1. `lambda = 0, y, y+1` for `x = 0, 1, 2`, with `d = lambda`;
/// 2. `lambda = y, 0, 1` for `x = 0, 1, 2`, with `d = lambda + y` (mod 2).
pub fn saturating_strategies() -> [DeterministicStrategy; 2] {
    let s = Scenario::linear_witness();
    [
        DeterministicStrategy::new(s, true, vec![0, 0, 0, 1, 1, 0], vec![0, 1, 0, 1]),
        DeterministicStrategy::new(s, true, vec![0, 1, 0, 0, 1, 1], vec![0, 1, 1, 0]),
    ]
    .map(|r| r.expect("valid tables"))
}
