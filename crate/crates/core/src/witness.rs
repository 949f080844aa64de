//! Dimension witnesses.
//!
//! Each witness implements [`DimensionWitness`] and is looked up by name in a
//! [`WitnessRegistry`]. Two are built in:
//!
//! * `detw`: `|Det(W_k)|` with `W_k(i,j) = p(0|2j,i) - p(0|2j+1,i)`. It
//!   vanishes for classical models of dimension `<= k` whose preparation and
//!   measurement devices share no randomness.
//! * `idw`: `<D00> + <D01> + <D10> - <D11> - <D20>`, at most 3 for any
//!   two-dimensional classical model, shared randomness included.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::Behavior;

/// Slack allowed above the classical bound before a report counts as a violation.
pub const VIOLATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WitnessKind {
    DetW,
    Idw,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    pub kind: WitnessKind,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    pub classical_bound: f64,
    pub violated: bool,
}

impl WitnessReport {
    fn new(kind: WitnessKind, value: f64, classical_bound: f64, matrix: Option<Vec<Vec<f64>>>) -> Self {
        WitnessReport {
            kind,
            value,
            matrix,
            classical_bound,
            violated: value.abs() > classical_bound + VIOLATION_TOL,
        }
    }
}

pub trait DimensionWitness: Send + Sync {
    fn name(&self) -> &str;
    fn classical_bound(&self) -> f64;
    fn evaluate(&self, behavior: &Behavior) -> Result<WitnessReport>;
}

/// `|Det(W_k)|` for `2k` preparations and `k` settings.
#[derive(Debug, Clone, Copy)]
pub struct DeterminantWitness {
    pub k: usize,
}

impl DimensionWitness for DeterminantWitness {
    fn name(&self) -> &str {
        "detw"
    }

    fn classical_bound(&self) -> f64 {
        0.0
    }

    fn evaluate(&self, behavior: &Behavior) -> Result<WitnessReport> {
        det_witness(behavior, self.k)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LinearWitness;

impl DimensionWitness for LinearWitness {
    fn name(&self) -> &str {
        "idw"
    }

    fn classical_bound(&self) -> f64 {
        IDW_CLASSICAL_BOUND
    }

    fn evaluate(&self, behavior: &Behavior) -> Result<WitnessReport> {
        idw_witness(behavior)
    }
}

pub struct WitnessRegistry {
    entries: BTreeMap<String, Box<dyn DimensionWitness>>,
}

impl WitnessRegistry {
    pub fn empty() -> Self {
        WitnessRegistry {
            entries: BTreeMap::new(),
        }
    }

    /// Registry holding `detw` (at dimension `k`) and `idw`.
    pub fn with_builtin(k: usize) -> Self {
        let mut r = Self::empty();
        r.register(Box::new(DeterminantWitness { k }));
        r.register(Box::new(LinearWitness));
        r
    }

    /// Adds or replaces the witness under its own name.
    pub fn register(&mut self, witness: Box<dyn DimensionWitness>) {
        self.entries.insert(witness.name().to_string(), witness);
    }

    pub fn get(&self, name: &str) -> Option<&dyn DimensionWitness> {
        self.entries.get(name).map(|w| w.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

impl Default for WitnessRegistry {
    fn default() -> Self {
        Self::with_builtin(2)
    }
}

fn require_binary(behavior: &Behavior) -> Result<()> {
    let n_d = behavior.scenario().n_d;
    if n_d != 2 {
        return Err(Error::ScenarioTooSmall(format!("need a binary outcome, got n_d = {n_d}")));
    }
    Ok(())
}

/// The `k x k` matrix `W_k(i,j) = p(0|x=2j, y=i) - p(0|x=2j+1, y=i)`.
pub fn witness_matrix(behavior: &Behavior, k: usize) -> Result<Vec<Vec<f64>>> {
    let s = behavior.scenario();
    require_binary(behavior)?;
    if k == 0 || s.n_x < 2 * k || s.n_y < k {
        return Err(Error::ScenarioTooSmall(format!(
            "Det(W_{k}) needs at least {} preparations and {k} settings, got {} and {}",
            2 * k,
            s.n_x,
            s.n_y
        )));
    }
    Ok((0..k)
        .map(|i| {
            (0..k)
                .map(|j| behavior.p(0, 2 * j, i) - behavior.p(0, 2 * j + 1, i))
                .collect()
        })
        .collect())
}

pub fn det_witness(behavior: &Behavior, k: usize) -> Result<WitnessReport> {
    let matrix = witness_matrix(behavior, k)?;
    let value = determinant(&matrix).abs();
    Ok(WitnessReport::new(WitnessKind::DetW, value, 0.0, Some(matrix)))
}

pub const IDW_CLASSICAL_BOUND: f64 = 3.0;

/// Largest value the linear witness can take (all five correlators saturated).
pub const IDW_ALGEBRAIC_MAX: f64 = 5.0;

pub fn idw_value(behavior: &Behavior) -> Result<f64> {
    let s = behavior.scenario();
    require_binary(behavior)?;
    if s.n_x < 3 || s.n_y < 2 {
        return Err(Error::ScenarioTooSmall(format!(
            "I_DW needs at least 3 preparations and 2 settings, got {} and {}",
            s.n_x, s.n_y
        )));
    }
    let e = |x, y| behavior.expectation(x, y);
    Ok(e(0, 0)? + e(0, 1)? + e(1, 0)? - e(1, 1)? - e(2, 0)?)
}

pub fn idw_witness(behavior: &Behavior) -> Result<WitnessReport> {
    let value = idw_value(behavior)?;
    Ok(WitnessReport::new(WitnessKind::Idw, value, IDW_CLASSICAL_BOUND, None))
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(matrix: &[Vec<f64>]) -> f64 {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .expect("non-empty range");
        if a[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        let p = a[col][col];
        det *= p;
        for r in col + 1..n {
            let f = a[r][col] / p;
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    det
}
