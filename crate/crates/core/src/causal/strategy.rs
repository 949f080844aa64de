//! Deterministic response functions and their convex mixtures.
//!
//! A strategy is a pair `(f, g)`: `f` maps the preparation (and, for
//! retrocausal strategies, the later setting) to a hidden value, `g` maps the
//! setting and hidden value to an outcome. Every classical model of bounded
//! hidden dimension with shared randomness is a mixture of these.

use crate::error::{Error, Result};
use crate::prob::{self, Behavior, Scenario};

/// Default ceiling on the number of strategies [`enumerate_strategies`] builds.
pub const DEFAULT_STRATEGY_CAP: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeterministicStrategy {
    scenario: Scenario,
    retrocausal: bool,
    /// `f(x)` or `f(x, y)` in lexicographic input order.
    f: Vec<usize>,
    /// `g(y, lambda)` in lexicographic `(y, lambda)` order.
    g: Vec<usize>,
}

fn f_len(s: &Scenario, retrocausal: bool) -> usize {
    if retrocausal {
        s.n_x * s.n_y
    } else {
        s.n_x
    }
}

fn g_len(s: &Scenario) -> usize {
    s.n_y * s.n_lambda
}

fn checked_pow(base: usize, exp: usize) -> Option<u128> {
    (base as u128).checked_pow(u32::try_from(exp).ok()?)
}

fn encode(digits: &[usize], base: usize) -> u128 {
    digits.iter().fold(0u128, |acc, &d| acc * base as u128 + d as u128)
}

fn decode(mut code: u128, base: usize, len: usize) -> Vec<usize> {
    let mut digits = vec![0; len];
    for slot in digits.iter_mut().rev() {
        *slot = (code % base as u128) as usize;
        code /= base as u128;
    }
    digits
}

impl DeterministicStrategy {
    pub fn new(scenario: Scenario, retrocausal: bool, f: Vec<usize>, g: Vec<usize>) -> Result<Self> {
        let (nf, ng) = (f_len(&scenario, retrocausal), g_len(&scenario));
        if f.len() != nf {
            return Err(Error::ShapeMismatch {
                expected: nf,
                actual: f.len(),
            });
        }
        if g.len() != ng {
            return Err(Error::ShapeMismatch {
                expected: ng,
                actual: g.len(),
            });
        }
        if let Some(v) = f.iter().find(|&&v| v >= scenario.n_lambda) {
            return Err(Error::InvalidScenario(format!(
                "hidden value {v} outside 0..{}",
                scenario.n_lambda
            )));
        }
        if let Some(v) = g.iter().find(|&&v| v >= scenario.n_d) {
            return Err(Error::InvalidScenario(format!("outcome {v} outside 0..{}", scenario.n_d)));
        }
        Ok(DeterministicStrategy {
            scenario,
            retrocausal,
            f,
            g,
        })
    }

    /// Number of distinct strategies, or `None` on overflow.
    pub fn count(scenario: &Scenario, retrocausal: bool) -> Option<u128> {
        let nf = checked_pow(scenario.n_lambda, f_len(scenario, retrocausal))?;
        let ng = checked_pow(scenario.n_d, g_len(scenario))?;
        nf.checked_mul(ng)
    }

    /// Inverse of [`DeterministicStrategy::code`].
    pub fn from_code(scenario: Scenario, retrocausal: bool, code: u128) -> Result<Self> {
        let count = Self::count(&scenario, retrocausal).ok_or(Error::TooManyStrategies {
            count: u128::MAX,
            cap: u128::MAX,
        })?;
        if code >= count {
            return Err(Error::OutOfRange {
                value: code as f64,
                range: "strategy codes of this scenario",
            });
        }
        let g_count = checked_pow(scenario.n_d, g_len(&scenario)).expect("bounded by count");
        let f = decode(code / g_count, scenario.n_lambda, f_len(&scenario, retrocausal));
        let g = decode(code % g_count, scenario.n_d, g_len(&scenario));
        Self::new(scenario, retrocausal, f, g)
    }

    /// Canonical index: `f` read as a base-`n_lambda` numeral, followed by
    /// `g` as a base-`n_d` numeral (first table entry most significant).
    pub fn code(&self) -> u128 {
        let g_count = checked_pow(self.scenario.n_d, self.g.len()).expect("strategy was countable");
        encode(&self.f, self.scenario.n_lambda) * g_count + encode(&self.g, self.scenario.n_d)
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn is_retrocausal(&self) -> bool {
        self.retrocausal
    }

    pub fn f_table(&self) -> &[usize] {
        &self.f
    }

    pub fn g_table(&self) -> &[usize] {
        &self.g
    }

    #[inline]
    pub fn hidden(&self, x: usize, y: usize) -> usize {
        if self.retrocausal {
            self.f[x * self.scenario.n_y + y]
        } else {
            self.f[x]
        }
    }

    #[inline]
    pub fn outcome(&self, x: usize, y: usize) -> usize {
        self.g[y * self.scenario.n_lambda + self.hidden(x, y)]
    }

    /// The 0/1 table `p(d|x,y) = [g(y, f(x,y)) = d]`.
    pub fn behavior(&self) -> Behavior {
        let s = self.scenario;
        Behavior::from_fn(s, |d, x, y| (self.outcome(x, y) == d) as u8 as f64)
            .expect("deterministic tables are normalized")
    }

    /// The same responses viewed as a (trivially) retrocausal strategy.
    pub fn as_retrocausal(&self) -> DeterministicStrategy {
        if self.retrocausal {
            return self.clone();
        }
        let s = self.scenario;
        let f = (0..s.n_x)
            .flat_map(|x| std::iter::repeat_n(self.f[x], s.n_y))
            .collect();
        DeterministicStrategy {
            scenario: s,
            retrocausal: true,
            f,
            g: self.g.clone(),
        }
    }
}

pub fn enumerate_strategies(scenario: Scenario, retrocausal: bool) -> Result<Vec<DeterministicStrategy>> {
    enumerate_strategies_capped(scenario, retrocausal, DEFAULT_STRATEGY_CAP)
}

/// All strategies of a scenario in canonical code order.
pub fn enumerate_strategies_capped(
    scenario: Scenario,
    retrocausal: bool,
    cap: u128,
) -> Result<Vec<DeterministicStrategy>> {
    let count = DeterministicStrategy::count(&scenario, retrocausal).unwrap_or(u128::MAX);
    if count > cap {
        return Err(Error::TooManyStrategies { count, cap });
    }
    let nf = f_len(&scenario, retrocausal);
    let ng = g_len(&scenario);
    let g_count = checked_pow(scenario.n_d, ng).expect("bounded by count");
    let f_count = count / g_count;
    let gs: Vec<Vec<usize>> = (0..g_count).map(|c| decode(c, scenario.n_d, ng)).collect();
    let mut out = Vec::with_capacity(count as usize);
    for fc in 0..f_count {
        let f = decode(fc, scenario.n_lambda, nf);
        for g in &gs {
            out.push(DeterministicStrategy {
                scenario,
                retrocausal,
                f: f.clone(),
                g: g.clone(),
            });
        }
    }
    Ok(out)
}

/// Shared randomness `gamma` distributed over deterministic strategies.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyMixture {
    strategies: Vec<DeterministicStrategy>,
    weights: Vec<f64>,
}

impl StrategyMixture {
    pub fn new(strategies: Vec<DeterministicStrategy>, weights: Vec<f64>) -> Result<Self> {
        let first = strategies
            .first()
            .ok_or_else(|| Error::BadWeights("empty mixture".into()))?;
        if strategies.len() != weights.len() {
            return Err(Error::BadWeights(format!(
                "{} strategies but {} weights",
                strategies.len(),
                weights.len()
            )));
        }
        prob::check_weights(&weights)?;
        let (scenario, retro) = (first.scenario, first.retrocausal);
        if strategies
            .iter()
            .any(|s| s.scenario != scenario || s.retrocausal != retro)
        {
            return Err(Error::ScenarioMismatch);
        }
        Ok(StrategyMixture { strategies, weights })
    }

    pub fn single(strategy: DeterministicStrategy) -> Self {
        StrategyMixture {
            strategies: vec![strategy],
            weights: vec![1.0],
        }
    }

    pub fn strategies(&self) -> &[DeterministicStrategy] {
        &self.strategies
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DeterministicStrategy, f64)> {
        self.strategies.iter().zip(self.weights.iter().copied())
    }

    pub fn scenario(&self) -> Scenario {
        self.strategies[0].scenario
    }

    pub fn is_retrocausal(&self) -> bool {
        self.strategies[0].retrocausal
    }

    /// `p(d|x,y) = sum_gamma p(gamma) [g_gamma(y, f_gamma(x,y)) = d]`.
    pub fn behavior(&self) -> Behavior {
        let s = self.scenario();
        Behavior::from_fn(s, |d, x, y| {
            self.iter()
                .filter(|(st, _)| st.outcome(x, y) == d)
                .map(|(_, w)| w)
                .sum()
        })
        .expect("mixtures of deterministic tables are normalized")
    }
}
