//! Is a behavior reproducible by a classical model of hidden dimension `k`?
//!
//! With shared randomness the classical set is the convex hull of the
//! non-retrocausal deterministic strategies, and membership is one linear
//! program: minimize the L1 distance between the observed table and a
//! mixture. Zero distance yields the mixture as certificate; positive
//! distance is an exclusion.
//!
//! Without shared randomness the set is the non-convex family
//! `p(d|x,y) = sum_lambda p(d|y,lambda) p(lambda|x)`. It is excluded
//! exactly by a nonzero `Det(W_k)` or by exclusion from the convex hull,
//! and searched by alternating between the two conditional tables, each
//! step a linear program. If neither settles the question the result is
//! [`Membership::Undecided`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dimwit_lp::{solve_with, LinearProgram, LpStatus};

use crate::causal::strategy::{enumerate_strategies_capped, DeterministicStrategy, StrategyMixture};
use crate::error::{Error, Result};
use crate::prob::{Behavior, Scenario};
use crate::retro::LpConfig;
use crate::witness::{determinant, witness_matrix, VIOLATION_TOL};

/// Maximum entrywise reconstruction error accepted for a certificate.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

const RESTARTS: usize = 8;
const ALTERNATIONS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub enum Exclusion {
    /// L1 distance from the convex hull of deterministic strategies.
    PolytopeDistance(f64),
    /// `|Det(W_k)|`, nonzero for every product model of dimension `k`.
    Determinant(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Membership {
    Inside {
        mixture: StrategyMixture,
        /// Max entrywise difference between `mixture.behavior()` and the input.
        residual: f64,
    },
    Outside(Exclusion),
    /// Product-model search found nothing but no exclusion applies.
    Undecided { best_residual: f64 },
}

impl Membership {
    pub fn is_inside(&self) -> bool {
        matches!(self, Membership::Inside { .. })
    }

    pub fn is_outside(&self) -> bool {
        matches!(self, Membership::Outside(_))
    }
}

pub fn classical_membership(behavior: &Behavior, k: usize, shared_randomness: bool) -> Result<Membership> {
    classical_membership_with(behavior, k, shared_randomness, &LpConfig::default())
}

pub fn classical_membership_with(
    behavior: &Behavior,
    k: usize,
    shared_randomness: bool,
    config: &LpConfig,
) -> Result<Membership> {
    let scenario = behavior.scenario().with_lambda(k)?;
    let strategies = enumerate_strategies_capped(scenario, false, config.strategy_cap)?;
    let hull = hull_membership(behavior, &strategies, config)?;
    if shared_randomness || hull.is_outside() {
        return Ok(hull);
    }
    if let Some(det) = determinant_exclusion(behavior, k) {
        return Ok(Membership::Outside(Exclusion::Determinant(det)));
    }
    product_search(behavior, scenario, &strategies, config)
}

fn observed_rows(s: &Scenario) -> Vec<(usize, usize, usize)> {
    let mut rows = Vec::new();
    for d in 0..s.n_d.saturating_sub(1) {
        for x in 0..s.n_x {
            for y in 0..s.n_y {
                rows.push((d, x, y));
            }
        }
    }
    rows
}

fn lp_solution(lp: &LinearProgram, config: &LpConfig) -> Result<(f64, Vec<f64>)> {
    let out = solve_with(lp, &config.solve)?;
    match out.status {
        LpStatus::Optimal => Ok((out.value, out.solution)),
        other => Err(Error::SolverFailure(format!("distance program reported {other:?}"))),
    }
}

/// Appends `e+`/`e-` columns for each target row and returns the program
/// `min sum(e)` s.t. `coeffs·v + e+ - e- = target`.
fn l1_fit(
    n_vars: usize,
    rows: Vec<(Vec<f64>, f64)>,
    simplex_groups: &[std::ops::Range<usize>],
) -> LinearProgram {
    let n_err = 2 * rows.len();
    let mut objective = vec![0.0; n_vars + n_err];
    objective[n_vars..].iter_mut().for_each(|c| *c = 1.0);
    let mut lp = LinearProgram::new(objective);
    for group in simplex_groups {
        let mut row = vec![0.0; n_vars + n_err];
        row[group.clone()].iter_mut().for_each(|c| *c = 1.0);
        lp.add_eq(row, 1.0);
    }
    for (r, (mut coeffs, target)) in rows.into_iter().enumerate() {
        coeffs.resize(n_vars + n_err, 0.0);
        coeffs[n_vars + 2 * r] = 1.0;
        coeffs[n_vars + 2 * r + 1] = -1.0;
        lp.add_eq(coeffs, target);
    }
    lp
}

fn hull_membership(
    behavior: &Behavior,
    strategies: &[DeterministicStrategy],
    config: &LpConfig,
) -> Result<Membership> {
    let s = behavior.scenario();
    let tables: Vec<Behavior> = strategies.iter().map(DeterministicStrategy::behavior).collect();
    let rows = observed_rows(&s)
        .into_iter()
        .map(|(d, x, y)| (tables.iter().map(|t| t.p(d, x, y)).collect(), behavior.p(d, x, y)))
        .collect();
    let n = strategies.len();
    let lp = l1_fit(n, rows, &[0..n]);
    let (distance, solution) = lp_solution(&lp, config)?;
    let (picked, weights): (Vec<_>, Vec<_>) = strategies
        .iter()
        .zip(&solution[..n])
        .filter(|(_, &w)| w > 0.0)
        .map(|(st, &w)| (st.clone(), w))
        .unzip();
    let total: f64 = weights.iter().sum();
    let weights = weights.into_iter().map(|w| w / total).collect();
    let mixture = StrategyMixture::new(picked, weights)?;
    let residual = mixture
        .behavior()
        .max_abs_diff(behavior)
        .expect("same observable scenario");
    if residual <= MEMBERSHIP_TOL {
        Ok(Membership::Inside { mixture, residual })
    } else {
        Ok(Membership::Outside(Exclusion::PolytopeDistance(distance)))
    }
}

fn determinant_exclusion(behavior: &Behavior, k: usize) -> Option<f64> {
    let m = witness_matrix(behavior, k).ok()?;
    let det = determinant(&m).abs();
    (det > VIOLATION_TOL).then_some(det)
}

/// Conditional tables of a product model: `prep[x][lambda]`,
/// `meas[y][lambda][d]`.
struct ProductModel {
    prep: Vec<Vec<f64>>,
    meas: Vec<Vec<Vec<f64>>>,
}

impl ProductModel {
    fn random(s: &Scenario, rng: &mut ChaCha8Rng) -> Self {
        let mut simplex = |n: usize| -> Vec<f64> {
            let v: Vec<f64> = (0..n).map(|_| -rng.gen_range(1e-9f64..1.0).ln()).collect();
            let sum: f64 = v.iter().sum();
            v.into_iter().map(|a| a / sum).collect()
        };
        let prep = (0..s.n_x).map(|_| simplex(s.n_lambda)).collect();
        let meas = (0..s.n_y)
            .map(|_| (0..s.n_lambda).map(|_| simplex(s.n_d)).collect())
            .collect();
        ProductModel { prep, meas }
    }

    fn p(&self, d: usize, x: usize, y: usize) -> f64 {
        self.prep[x]
            .iter()
            .zip(&self.meas[y])
            .map(|(pl, q)| pl * q[d])
            .sum()
    }

    /// Refit `prep` with `meas` held fixed; returns the L1 residual.
    fn refit_prep(&mut self, b: &Behavior, config: &LpConfig) -> Result<f64> {
        let s = b.scenario();
        let k = self.prep[0].len();
        let n = s.n_x * k;
        let rows = observed_rows(&s)
            .into_iter()
            .map(|(d, x, y)| {
                let mut coeffs = vec![0.0; n];
                for l in 0..k {
                    coeffs[x * k + l] = self.meas[y][l][d];
                }
                (coeffs, b.p(d, x, y))
            })
            .collect();
        let groups: Vec<_> = (0..s.n_x).map(|x| x * k..(x + 1) * k).collect();
        let (value, sol) = lp_solution(&l1_fit(n, rows, &groups), config)?;
        for x in 0..s.n_x {
            self.prep[x] = normalized(&sol[x * k..(x + 1) * k]);
        }
        Ok(value)
    }

    /// Refit `meas` with `prep` held fixed; returns the L1 residual.
    fn refit_meas(&mut self, b: &Behavior, config: &LpConfig) -> Result<f64> {
        let s = b.scenario();
        let k = self.prep[0].len();
        let idx = |y: usize, l: usize, d: usize| (y * k + l) * s.n_d + d;
        let n = s.n_y * k * s.n_d;
        let rows = observed_rows(&s)
            .into_iter()
            .map(|(d, x, y)| {
                let mut coeffs = vec![0.0; n];
                for l in 0..k {
                    coeffs[idx(y, l, d)] = self.prep[x][l];
                }
                (coeffs, b.p(d, x, y))
            })
            .collect();
        let groups: Vec<_> = (0..s.n_y * k).map(|g| g * s.n_d..(g + 1) * s.n_d).collect();
        let (value, sol) = lp_solution(&l1_fit(n, rows, &groups), config)?;
        for y in 0..s.n_y {
            for l in 0..k {
                self.meas[y][l] = normalized(&sol[idx(y, l, 0)..idx(y, l, 0) + s.n_d]);
            }
        }
        Ok(value)
    }

    fn max_error(&self, b: &Behavior) -> f64 {
        let s = b.scenario();
        let mut worst: f64 = 0.0;
        for d in 0..s.n_d {
            for x in 0..s.n_x {
                for y in 0..s.n_y {
                    worst = worst.max((self.p(d, x, y) - b.p(d, x, y)).abs());
                }
            }
        }
        worst
    }

    /// Product weights `p(f) p(g)` over deterministic strategies.
    fn as_mixture(&self, strategies: &[DeterministicStrategy]) -> Result<StrategyMixture> {
        let s = strategies[0].scenario();
        let (picked, weights): (Vec<_>, Vec<_>) = strategies
            .iter()
            .filter_map(|st| {
                let prep: f64 = (0..s.n_x).map(|x| self.prep[x][st.hidden(x, 0)]).product();
                let meas: f64 = (0..s.n_y)
                    .flat_map(|y| (0..s.n_lambda).map(move |l| (y, l)))
                    .map(|(y, l)| self.meas[y][l][st.g_table()[y * s.n_lambda + l]])
                    .product();
                let w = prep * meas;
                (w > 0.0).then(|| (st.clone(), w))
            })
            .unzip();
        let total: f64 = weights.iter().sum();
        StrategyMixture::new(picked, weights.into_iter().map(|w| w / total).collect())
    }
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = v.iter().map(|a| a.max(0.0)).collect();
    let sum: f64 = clipped.iter().sum();
    clipped.into_iter().map(|a| a / sum).collect()
}

fn product_search(
    behavior: &Behavior,
    scenario: Scenario,
    strategies: &[DeterministicStrategy],
    config: &LpConfig,
) -> Result<Membership> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x00c1_a551_ca17);
    let mut best = f64::INFINITY;
    for _ in 0..RESTARTS {
        let mut model = ProductModel::random(&scenario, &mut rng);
        let mut last = f64::INFINITY;
        for _ in 0..ALTERNATIONS {
            model.refit_meas(behavior, config)?;
            let residual = model.refit_prep(behavior, config)?;
            if residual < 1e-11 || last - residual < 1e-13 {
                break;
            }
            last = residual;
        }
        let err = model.max_error(behavior);
        if err <= MEMBERSHIP_TOL {
            let mixture = model.as_mixture(strategies)?;
            let residual = mixture
                .behavior()
                .max_abs_diff(behavior)
                .expect("same observable scenario");
            if residual <= MEMBERSHIP_TOL {
                return Ok(Membership::Inside { mixture, residual });
            }
        }
        best = best.min(err);
    }
    Ok(Membership::Undecided { best_residual: best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causal::strategy::enumerate_strategies;
    use crate::interferometer::{binary_behavior, wheeler_statistics, ExperimentConfig};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn wheeler_statistics_are_classical() {
        let b = wheeler_statistics(&[0.0, PI, -FRAC_PI_2, FRAC_PI_2]).unwrap();
        for shared in [true, false] {
            match classical_membership(&b, 2, shared).unwrap() {
                Membership::Inside { mixture, residual } => {
                    assert!(residual <= MEMBERSHIP_TOL);
                    assert!(mixture.behavior().max_abs_diff(&b).unwrap() <= MEMBERSHIP_TOL);
                }
                other => panic!("expected a certificate, got {other:?}"),
            }
        }
    }

    #[test]
    fn optimal_linear_witness_behavior_is_excluded() {
        let cfg = ExperimentConfig::modified(vec![FRAC_PI_4, 3.0 * FRAC_PI_4, -FRAC_PI_2], vec![FRAC_PI_2, 0.0]);
        let b = binary_behavior(&cfg).unwrap();
        match classical_membership(&b, 2, true).unwrap() {
            Membership::Outside(Exclusion::PolytopeDistance(d)) => assert!(d > 1e-3),
            other => panic!("expected exclusion, got {other:?}"),
        }
    }

    #[test]
    fn determinant_excludes_product_models() {
        let cfg = ExperimentConfig::modified(vec![0.0, PI, -FRAC_PI_2, FRAC_PI_2], vec![FRAC_PI_2, 0.0]);
        let b = binary_behavior(&cfg).unwrap();
        // The shared-randomness hull still contains it...
        assert!(classical_membership(&b, 2, true).unwrap().is_inside());
        // ...but no product model does.
        match classical_membership(&b, 2, false).unwrap() {
            Membership::Outside(Exclusion::Determinant(d)) => assert!((d - 1.0).abs() < 1e-12),
            other => panic!("expected determinant exclusion, got {other:?}"),
        }
    }

    #[test]
    fn vertices_are_their_own_certificates() {
        let strategies = enumerate_strategies(Scenario::linear_witness(), false).unwrap();
        for st in strategies.iter().step_by(17) {
            let b = st.behavior();
            match classical_membership(&b, 2, true).unwrap() {
                Membership::Inside { mixture, .. } => {
                    assert_eq!(mixture.strategies().len(), 1);
                    assert_eq!(mixture.weights(), &[1.0]);
                    assert_eq!(mixture.behavior(), b);
                }
                other => panic!("{other:?}"),
            }
            assert!(classical_membership(&b, 2, false).unwrap().is_inside());
        }
    }

    #[test]
    fn enumeration_cap_propagates() {
        let b = Behavior::new(Scenario::new(12, 2, 2, 2).unwrap(), vec![0.5; 48]).unwrap();
        let cfg = LpConfig {
            strategy_cap: 1000,
            ..LpConfig::default()
        };
        assert!(matches!(
            classical_membership_with(&b, 2, true, &cfg),
            Err(Error::TooManyStrategies { .. })
        ));
    }
}
