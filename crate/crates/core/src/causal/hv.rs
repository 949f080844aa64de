//! Explicit non-retrocausal hidden-variable models with local detector noise.
//!
//! A model is the factorization `p(d|x,y) = sum_{lambda,u} p(d|y,lambda,u) p(u) p(lambda|x)`.
//! For the quantum-control experiment the setting is itself produced by a
//! second hidden variable `mu`, independent of everything except `y`.

use crate::error::{Error, Result};
use crate::prob::{Behavior, JointBehavior, Scenario, INTERNAL_TOL};

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    if p.iter().any(|v| !v.is_finite() || *v < -INTERNAL_TOL) {
        return Err(Error::NegativeProbability {
            value: p.iter().copied().fold(f64::INFINITY, f64::min),
            location: what.to_string(),
        });
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > INTERNAL_TOL {
        return Err(Error::NotNormalized {
            sum,
            location: what.to_string(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HvModelSpec {
    /// `p(lambda|x)`, indexed `[x][lambda]`.
    pub lambda_dist: Vec<Vec<f64>>,
    /// `p(u_D)`.
    pub noise_dist: Vec<f64>,
    /// `p(d|y,lambda,u_D)`, indexed `[y][lambda][u][d]`.
    pub response: Vec<Vec<Vec<Vec<f64>>>>,
}

impl HvModelSpec {
    pub fn validate(&self) -> Result<Scenario> {
        let n_x = self.lambda_dist.len();
        let n_lambda = self.lambda_dist.first().map_or(0, Vec::len);
        let n_u = self.noise_dist.len();
        let n_y = self.response.len();
        let n_d = self
            .response
            .first()
            .and_then(|r| r.first())
            .and_then(|r| r.first())
            .map_or(0, Vec::len);
        let scenario = Scenario::new(n_x, n_y, n_d, n_lambda)?;
        if n_u == 0 {
            return Err(Error::InvalidScenario("noise variable needs at least one value".into()));
        }
        for (x, p) in self.lambda_dist.iter().enumerate() {
            if p.len() != n_lambda {
                return Err(Error::ShapeMismatch {
                    expected: n_lambda,
                    actual: p.len(),
                });
            }
            check_distribution(p, &format!("p(lambda|x={x})"))?;
        }
        check_distribution(&self.noise_dist, "p(u_D)")?;
        for (y, by_lambda) in self.response.iter().enumerate() {
            if by_lambda.len() != n_lambda {
                return Err(Error::ShapeMismatch {
                    expected: n_lambda,
                    actual: by_lambda.len(),
                });
            }
            for (l, by_u) in by_lambda.iter().enumerate() {
                if by_u.len() != n_u {
                    return Err(Error::ShapeMismatch {
                        expected: n_u,
                        actual: by_u.len(),
                    });
                }
                for (u, p) in by_u.iter().enumerate() {
                    if p.len() != n_d {
                        return Err(Error::ShapeMismatch {
                            expected: n_d,
                            actual: p.len(),
                        });
                    }
                    check_distribution(p, &format!("p(d|y={y},lambda={l},u={u})"))?;
                }
            }
        }
        Ok(scenario)
    }

    /// `p(d|y,lambda)` with the detector noise summed out.
    pub fn response_given_hidden(&self, d: usize, y: usize, lambda: usize) -> f64 {
        self.noise_dist
            .iter()
            .enumerate()
            .map(|(u, pu)| self.response[y][lambda][u][d] * pu)
            .sum()
    }

    pub fn behavior(&self) -> Result<Behavior> {
        let scenario = self.validate()?;
        Behavior::from_fn(scenario, |d, x, y| {
            (0..scenario.n_lambda)
                .map(|l| self.response_given_hidden(d, y, l) * self.lambda_dist[x][l])
                .sum()
        })
    }

    /// `p(d,y|x) = sum_{lambda,mu} p(d|y,lambda) p(lambda|x) p(y|mu) p(mu)`.
    pub fn joint_behavior(&self, control: &ControlSpec) -> Result<JointBehavior> {
        let scenario = self.validate()?;
        control.validate(scenario.n_y)?;
        JointBehavior::from_fn(scenario, |d, y, x| {
            let p_y: f64 = control
                .mu_dist
                .iter()
                .zip(&control.setting_given_mu)
                .map(|(pm, py)| pm * py[y])
                .sum();
            let p_d: f64 = (0..scenario.n_lambda)
                .map(|l| self.response_given_hidden(d, y, l) * self.lambda_dist[x][l])
                .sum();
            p_d * p_y
        })
    }
}

/// Hidden variable standing in for a quantum control.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSpec {
    /// `p(mu)`.
    pub mu_dist: Vec<f64>,
    /// `p(y|mu)`, indexed `[mu][y]`.
    pub setting_given_mu: Vec<Vec<f64>>,
}

impl ControlSpec {
    fn validate(&self, n_y: usize) -> Result<()> {
        check_distribution(&self.mu_dist, "p(mu)")?;
        if self.setting_given_mu.len() != self.mu_dist.len() {
            return Err(Error::ShapeMismatch {
                expected: self.mu_dist.len(),
                actual: self.setting_given_mu.len(),
            });
        }
        for (m, p) in self.setting_given_mu.iter().enumerate() {
            if p.len() != n_y {
                return Err(Error::ShapeMismatch {
                    expected: n_y,
                    actual: p.len(),
                });
            }
            check_distribution(p, &format!("p(y|mu={m})"))?;
        }
        Ok(())
    }
}

fn delta(a: usize, b: usize) -> f64 {
    (a == b) as u8 as f64
}

/// Two-valued model reproducing the open/closed interferometer:
/// a fair coin `u_D` decides the outcome when the splitter is absent, and
/// the outcome copies `lambda` when it is present, with
/// `p(lambda=0|x) = cos^2(phi_x/2)`.
pub fn wdce_hv_spec(phi: &[f64]) -> HvModelSpec {
    let lambda_dist = phi
        .iter()
        .map(|p| {
            let c = (p / 2.0).cos().powi(2);
            vec![c, 1.0 - c]
        })
        .collect();
    let open: Vec<Vec<Vec<f64>>> = (0..2)
        .map(|_| (0..2).map(|u| (0..2).map(|d| delta(d, u)).collect()).collect())
        .collect();
    let closed: Vec<Vec<Vec<f64>>> = (0..2)
        .map(|l| (0..2).map(|_| (0..2).map(|d| delta(d, l)).collect()).collect())
        .collect();
    HvModelSpec {
        lambda_dist,
        noise_dist: vec![0.5, 0.5],
        response: vec![open, closed],
    }
}

pub fn wdce_hv_model(phi: &[f64]) -> Result<Behavior> {
    wdce_hv_spec(phi).behavior()
}

/// Control variable with `p(mu=0) = cos^2(alpha)` and `y = mu`.
pub fn qdce_control_spec(alpha: f64) -> ControlSpec {
    let open = alpha.cos().powi(2);
    ControlSpec {
        mu_dist: vec![open, 1.0 - open],
        setting_given_mu: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
    }
}

pub fn qdce_hv_model(phi: &[f64], alpha: f64) -> Result<JointBehavior> {
    wdce_hv_spec(phi).joint_behavior(&qdce_control_spec(alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn wdce_model_examples() {
        let b = wdce_hv_model(&[0.3, PI, FRAC_PI_2]).unwrap();
        assert_eq!(b.p(0, 0, 0), 0.5);
        assert_eq!(b.p(1, 0, 0), 0.5);
        assert!((b.p(1, 1, 1) - 1.0).abs() < 1e-15);
        assert!((b.p(0, 2, 1) - 0.5).abs() < 1e-15);
        assert!((b.p(1, 2, 1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn qdce_model_examples() {
        let closed = qdce_hv_model(&[0.0], FRAC_PI_2).unwrap();
        assert!((closed.p(0, 1, 0) - 1.0).abs() < 1e-15);
        let mid = qdce_hv_model(&[FRAC_PI_2], FRAC_PI_4).unwrap();
        for (d, y) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            assert!((mid.p(d, y, 0) - 0.25).abs() < 1e-15);
        }
        let open = qdce_hv_model(&[1.0], 0.0).unwrap();
        assert_eq!(open.p(0, 0, 0), 0.5);
        assert_eq!(open.p(1, 0, 0), 0.5);
        assert_eq!(open.setting_marginal(1, 0), 0.0);
    }

    #[test]
    fn malformed_specs_are_rejected() {
        let mut spec = wdce_hv_spec(&[0.0]);
        spec.noise_dist = vec![0.7, 0.7];
        assert!(matches!(spec.behavior(), Err(Error::NotNormalized { .. })));
        let mut spec = wdce_hv_spec(&[0.0]);
        spec.response[1].pop();
        assert!(matches!(spec.behavior(), Err(Error::ShapeMismatch { .. })));
        let mut ctrl = qdce_control_spec(0.2);
        ctrl.setting_given_mu[0] = vec![1.0];
        assert!(wdce_hv_spec(&[0.0]).joint_behavior(&ctrl).is_err());
    }
}
