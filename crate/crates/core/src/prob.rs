//! Finite conditional distributions for prepare-and-measure experiments.
//!
//! Tables are stored flat in `(d, x, y)` order for [`Behavior`] and
//! `(d, y, x)` order for [`JointBehavior`]. Outcome `d = 0` is always the
//! click at the monitored constructive-interference port.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Validation tolerance for externally supplied tables.
pub const INPUT_TOL: f64 = 1e-9;
/// Tolerance for tables the crate generates itself.
pub const INTERNAL_TOL: f64 = 1e-12;

/// Cardinalities of preparations, settings, outcomes and hidden variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scenario {
    pub n_x: usize,
    pub n_y: usize,
    pub n_d: usize,
    pub n_lambda: usize,
}

impl Scenario {
    pub fn new(n_x: usize, n_y: usize, n_d: usize, n_lambda: usize) -> Result<Self> {
        if n_x == 0 || n_y == 0 || n_d == 0 || n_lambda == 0 {
            return Err(Error::InvalidScenario(format!(
                "all cardinalities must be >= 1, got (n_x={n_x}, n_y={n_y}, n_d={n_d}, n_lambda={n_lambda})"
            )));
        }
        Ok(Scenario {
            n_x,
            n_y,
            n_d,
            n_lambda,
        })
    }

    /// Four preparations, open/closed setting, binary outcome, qubit-sized
    /// hidden variable.
    pub fn wheeler() -> Self {
        Scenario {
            n_x: 4,
            n_y: 2,
            n_d: 2,
            n_lambda: 2,
        }
    }

    /// Three preparations and two settings, the linear-witness scenario.
    pub fn linear_witness() -> Self {
        Scenario {
            n_x: 3,
            n_y: 2,
            n_d: 2,
            n_lambda: 2,
        }
    }

    pub fn with_lambda(self, n_lambda: usize) -> Result<Self> {
        Scenario::new(self.n_x, self.n_y, self.n_d, n_lambda)
    }

    pub fn table_len(&self) -> usize {
        self.n_d * self.n_x * self.n_y
    }

    /// Same observable shape; the hidden-variable size is not observable.
    pub fn same_observables(&self, other: &Scenario) -> bool {
        self.n_x == other.n_x && self.n_y == other.n_y && self.n_d == other.n_d
    }
}

/// The conditional distribution `p(d|x,y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Behavior {
    scenario: Scenario,
    table: Vec<f64>,
}

impl Behavior {
    /// Validates a flat `(d, x, y)` table at the user-input tolerance.
    pub fn new(scenario: Scenario, table: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(scenario, table, INPUT_TOL)
    }

    pub fn with_tolerance(scenario: Scenario, table: Vec<f64>, tol: f64) -> Result<Self> {
        let expected = scenario.table_len();
        if table.len() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                actual: table.len(),
            });
        }
        let b = Behavior { scenario, table };
        for x in 0..scenario.n_x {
            for y in 0..scenario.n_y {
                let mut sum = 0.0;
                for d in 0..scenario.n_d {
                    let p = b.p(d, x, y);
                    if !p.is_finite() || p < -tol {
                        return Err(Error::NegativeProbability {
                            value: p,
                            location: format!("p(d={d}|x={x},y={y})"),
                        });
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > tol {
                    return Err(Error::NotNormalized {
                        sum,
                        location: format!("x={x},y={y}"),
                    });
                }
            }
        }
        Ok(b)
    }

    /// Builds a table from `p(d, x, y)` and checks it at the internal tolerance.
    pub fn from_fn(scenario: Scenario, mut p: impl FnMut(usize, usize, usize) -> f64) -> Result<Self> {
        let mut table = Vec::with_capacity(scenario.table_len());
        for d in 0..scenario.n_d {
            for x in 0..scenario.n_x {
                for y in 0..scenario.n_y {
                    table.push(p(d, x, y));
                }
            }
        }
        Self::with_tolerance(scenario, table, INTERNAL_TOL)
    }

    /// Nested `[d][x][y]` arrays, checked at the user-input tolerance.
    pub fn from_nested(scenario: Scenario, nested: &[Vec<Vec<f64>>]) -> Result<Self> {
        let shape_error = || Error::ShapeMismatch {
            expected: scenario.table_len(),
            actual: nested.iter().flatten().map(Vec::len).sum(),
        };
        if nested.len() != scenario.n_d
            || nested.iter().any(|xs| {
                xs.len() != scenario.n_x || xs.iter().any(|ys| ys.len() != scenario.n_y)
            })
        {
            return Err(shape_error());
        }
        let table = nested.iter().flatten().flatten().copied().collect();
        Self::new(scenario, table)
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        let s = self.scenario;
        (0..s.n_d)
            .map(|d| {
                (0..s.n_x)
                    .map(|x| (0..s.n_y).map(|y| self.p(d, x, y)).collect())
                    .collect()
            })
            .collect()
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    #[inline]
    pub fn index(scenario: &Scenario, d: usize, x: usize, y: usize) -> usize {
        (d * scenario.n_x + x) * scenario.n_y + y
    }

    #[inline]
    pub fn p(&self, d: usize, x: usize, y: usize) -> f64 {
        self.table[Self::index(&self.scenario, d, x, y)]
    }

    /// `<D_xy> = p(0|x,y) - p(1|x,y)`.
    pub fn expectation(&self, x: usize, y: usize) -> Result<f64> {
        if self.scenario.n_d != 2 {
            return Err(Error::NonBinaryOutcome(self.scenario.n_d));
        }
        Ok(self.p(0, x, y) - self.p(1, x, y))
    }

    /// Largest entrywise difference; `None` if the shapes differ.
    pub fn max_abs_diff(&self, other: &Behavior) -> Option<f64> {
        if !self.scenario.same_observables(&other.scenario) {
            return None;
        }
        Some(
            self.table
                .iter()
                .zip(&other.table)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }

    /// Largest deviation of any `(x, y)` slice sum from 1.
    pub fn normalization_error(&self) -> f64 {
        let s = self.scenario;
        let mut worst: f64 = 0.0;
        for x in 0..s.n_x {
            for y in 0..s.n_y {
                let sum: f64 = (0..s.n_d).map(|d| self.p(d, x, y)).sum();
                worst = worst.max((sum - 1.0).abs());
            }
        }
        worst
    }
}

/// Convex combination of behaviors sharing a scenario.
pub fn mix(behaviors: &[Behavior], weights: &[f64]) -> Result<Behavior> {
    let first = behaviors
        .first()
        .ok_or_else(|| Error::BadWeights("no behaviors to mix".into()))?;
    if behaviors.len() != weights.len() {
        return Err(Error::BadWeights(format!(
            "{} behaviors but {} weights",
            behaviors.len(),
            weights.len()
        )));
    }
    check_weights(weights)?;
    let scenario = first.scenario;
    if behaviors.iter().any(|b| !b.scenario.same_observables(&scenario)) {
        return Err(Error::ScenarioMismatch);
    }
    let mut table = vec![0.0; scenario.table_len()];
    for (b, &w) in behaviors.iter().zip(weights) {
        for (t, p) in table.iter_mut().zip(&b.table) {
            *t += w * p;
        }
    }
    Behavior::with_tolerance(scenario, table, INTERNAL_TOL)
}

pub(crate) fn check_weights(weights: &[f64]) -> Result<()> {
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::BadWeights(format!("weight {w} is negative")));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > INTERNAL_TOL {
        return Err(Error::BadWeights(format!("weights sum to {sum}")));
    }
    Ok(())
}

/// `p(d, y | x)` for experiments where the setting is itself an outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct JointBehavior {
    scenario: Scenario,
    table: Vec<f64>,
}

impl JointBehavior {
    /// Flat `(d, y, x)` table; each `x` slice must sum to 1.
    pub fn new(scenario: Scenario, table: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(scenario, table, INPUT_TOL)
    }

    pub fn with_tolerance(scenario: Scenario, table: Vec<f64>, tol: f64) -> Result<Self> {
        let expected = scenario.table_len();
        if table.len() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                actual: table.len(),
            });
        }
        let b = JointBehavior { scenario, table };
        for x in 0..scenario.n_x {
            let mut sum = 0.0;
            for d in 0..scenario.n_d {
                for y in 0..scenario.n_y {
                    let p = b.p(d, y, x);
                    if !p.is_finite() || p < -tol {
                        return Err(Error::NegativeProbability {
                            value: p,
                            location: format!("p(d={d},y={y}|x={x})"),
                        });
                    }
                    sum += p;
                }
            }
            if (sum - 1.0).abs() > tol {
                return Err(Error::NotNormalized {
                    sum,
                    location: format!("x={x}"),
                });
            }
        }
        Ok(b)
    }

    pub fn from_fn(scenario: Scenario, mut p: impl FnMut(usize, usize, usize) -> f64) -> Result<Self> {
        let mut table = Vec::with_capacity(scenario.table_len());
        for d in 0..scenario.n_d {
            for y in 0..scenario.n_y {
                for x in 0..scenario.n_x {
                    table.push(p(d, y, x));
                }
            }
        }
        Self::with_tolerance(scenario, table, INTERNAL_TOL)
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    #[inline]
    pub fn p(&self, d: usize, y: usize, x: usize) -> f64 {
        let s = &self.scenario;
        self.table[(d * s.n_y + y) * s.n_x + x]
    }

    /// `p(y|x)`, summed over outcomes.
    pub fn setting_marginal(&self, y: usize, x: usize) -> f64 {
        (0..self.scenario.n_d).map(|d| self.p(d, y, x)).sum()
    }

    /// Nested `[d][y][x]` arrays.
    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        let s = self.scenario;
        (0..s.n_d)
            .map(|d| {
                (0..s.n_y)
                    .map(|y| (0..s.n_x).map(|x| self.p(d, y, x)).collect())
                    .collect()
            })
            .collect()
    }

    pub fn max_abs_diff(&self, other: &JointBehavior) -> Option<f64> {
        if !self.scenario.same_observables(&other.scenario) {
            return None;
        }
        Some(
            self.table
                .iter()
                .zip(&other.table)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }
}

/// Outcome labels of a single photon reaching both detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Click {
    /// The monitored detector at the constructive port.
    E = 0,
    D = 1,
    None = 2,
}

/// Behavior with outcomes E-click, D-click and no-click.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeOutcomeBehavior {
    inner: Behavior,
}

impl ThreeOutcomeBehavior {
    pub fn new(behavior: Behavior) -> Result<Self> {
        if behavior.scenario().n_d != 3 {
            return Err(Error::InvalidScenario(format!(
                "three-outcome behavior needs n_d = 3, got {}",
                behavior.scenario().n_d
            )));
        }
        Ok(ThreeOutcomeBehavior { inner: behavior })
    }

    pub fn p(&self, click: Click, x: usize, y: usize) -> f64 {
        self.inner.p(click as usize, x, y)
    }

    pub fn as_behavior(&self) -> &Behavior {
        &self.inner
    }

    /// Binary behavior monitoring E only: `d = 0` is an E-click, `d = 1`
    /// merges D-clicks and lost photons.
    pub fn coarse_grain(&self) -> Behavior {
        let s = self.inner.scenario();
        let binary = Scenario { n_d: 2, ..s };
        Behavior::from_fn(binary, |d, x, y| {
            let e = self.p(Click::E, x, y);
            if d == 0 {
                e
            } else {
                self.p(Click::D, x, y) + self.p(Click::None, x, y)
            }
        })
        .expect("coarse-graining preserves normalization")
    }
}
