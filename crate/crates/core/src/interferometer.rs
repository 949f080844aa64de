//! Single-photon Mach-Zehnder statistics.
//!
//! Three set-ups are covered: the open/closed interferometer with a
//! removable second beam splitter, the always-closed variant where the late
//! choice is a phase `sigma_y` in front of the second splitter (with arm
//! losses and detector efficiency), and the variant where a quantum control
//! decides whether the splitter is present.
//!
//! Detector E sits at the port that receives `+cos(phi_x - sigma_y)`; its
//! click is outcome `d = 0` everywhere in the crate.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{Behavior, JointBehavior, Scenario, ThreeOutcomeBehavior};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Second beam splitter removed (`y = 0`) or inserted (`y = 1`).
    Wheeler,
    /// Splitter always present; setting `y` applies phase `sigma_y`.
    Modified,
    /// Splitter presence controlled by a qubit `cos(a)|0> + sin(a)|1>`.
    QuantumControl,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Wheeler => "wheeler",
            Mode::Modified => "modified",
            Mode::QuantumControl => "quantum-control",
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Preparation phases `phi_x` in radians.
    pub phi: Vec<f64>,
    /// Measurement phases `sigma_y` in radians (modified mode).
    #[serde(default)]
    pub sigma: Vec<f64>,
    /// Amplitude transmittance of the arm carrying `phi_x`.
    #[serde(default = "one")]
    pub t_a: f64,
    /// Amplitude transmittance of the arm carrying `sigma_y`.
    #[serde(default = "one")]
    pub t_b: f64,
    #[serde(default = "one")]
    pub eta: f64,
    /// Control angle in radians (quantum-control mode).
    #[serde(default)]
    pub alpha: f64,
}

impl ExperimentConfig {
    pub fn wheeler(phi: Vec<f64>) -> Self {
        ExperimentConfig {
            mode: Mode::Wheeler,
            phi,
            sigma: Vec::new(),
            t_a: 1.0,
            t_b: 1.0,
            eta: 1.0,
            alpha: 0.0,
        }
    }

    pub fn modified(phi: Vec<f64>, sigma: Vec<f64>) -> Self {
        ExperimentConfig {
            mode: Mode::Modified,
            sigma,
            ..Self::wheeler(phi)
        }
    }

    pub fn quantum_control(phi: Vec<f64>, alpha: f64) -> Self {
        ExperimentConfig {
            mode: Mode::QuantumControl,
            alpha,
            ..Self::wheeler(phi)
        }
    }

    pub fn with_transmittances(mut self, t_a: f64, t_b: f64) -> Self {
        self.t_a = t_a;
        self.t_b = t_b;
        self
    }

    pub fn with_efficiency(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.phi.is_empty() {
            return bad("at least one preparation phase is required".into());
        }
        if self.phi.iter().chain(&self.sigma).any(|v| !v.is_finite()) || !self.alpha.is_finite() {
            return bad("phases must be finite".into());
        }
        for (name, v) in [("t_a", self.t_a), ("t_b", self.t_b), ("eta", self.eta)] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(format!("{name} = {v} must lie in (0, 1]"));
            }
        }
        if self.mode == Mode::Modified && self.sigma.is_empty() {
            return bad("modified mode needs at least one measurement phase sigma".into());
        }
        Ok(())
    }

    /// Observable scenario of the binary (or joint) statistics.
    pub fn scenario(&self) -> Scenario {
        let n_y = match self.mode {
            Mode::Modified => self.sigma.len(),
            Mode::Wheeler | Mode::QuantumControl => 2,
        };
        Scenario {
            n_x: self.phi.len(),
            n_y,
            n_d: 2,
            n_lambda: 2,
        }
    }
}

/// Output amplitudes on the Fock states `|01>` (photon at E) and `|10>`
/// (photon at D).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathState {
    pub amp01: Complex64,
    pub amp10: Complex64,
}

impl PathState {
    pub fn norm_sqr(&self) -> f64 {
        self.amp01.norm_sqr() + self.amp10.norm_sqr()
    }
}

/// `p(d|x,0) = 1/2`, `p(0|x,1) = cos^2(phi_x/2)`, `p(1|x,1) = sin^2(phi_x/2)`.
pub fn wheeler_statistics(phi: &[f64]) -> Result<Behavior> {
    if phi.is_empty() {
        return Err(Error::InvalidConfig("at least one preparation phase is required".into()));
    }
    let scenario = Scenario {
        n_x: phi.len(),
        ..Scenario::wheeler()
    };
    Behavior::from_fn(scenario, |d, x, y| {
        if y == 0 {
            0.5
        } else {
            let c = (phi[x] / 2.0).cos().powi(2);
            if d == 0 {
                c
            } else {
                1.0 - c
            }
        }
    })
}

fn hadamard(a: Complex64, b: Complex64) -> (Complex64, Complex64) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ((a + b) * s, (a - b) * s)
}

/// State just before the detectors, obtained by propagating the input mode
/// through the first splitter, the arm phases and losses, and (if present)
/// the second splitter.
pub fn output_state(config: &ExperimentConfig, x: usize, y: usize) -> Result<PathState> {
    config.validate()?;
    let scenario = config.scenario();
    if x >= scenario.n_x || y >= scenario.n_y {
        return Err(Error::InvalidConfig(format!(
            "input (x={x}, y={y}) out of range for {} preparations and {} settings",
            scenario.n_x, scenario.n_y
        )));
    }
    let (t_a, t_b, sigma, closed) = match config.mode {
        Mode::Wheeler => (1.0, 1.0, 0.0, y == 1),
        Mode::Modified => (config.t_a, config.t_b, config.sigma[y], true),
        Mode::QuantumControl => return Err(Error::ModeUnsupported("quantum-control")),
    };
    // Arm order (b, a): arm b exits towards E when the splitter is absent.
    let (arm_b, arm_a) = hadamard(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    let arm_b = arm_b * Complex64::from_polar(t_b, sigma);
    let arm_a = arm_a * Complex64::from_polar(t_a, config.phi[x]);
    let (at_e, at_d) = if closed { hadamard(arm_b, arm_a) } else { (arm_b, arm_a) };
    Ok(PathState {
        amp01: at_e,
        amp10: at_d,
    })
}

/// E-click, D-click and no-click probabilities of the always-closed
/// interferometer with arm transmittances and detector efficiency.
pub fn modified_statistics(config: &ExperimentConfig) -> Result<ThreeOutcomeBehavior> {
    if config.mode != Mode::Modified {
        return Err(Error::ModeUnsupported(config.mode.name()));
    }
    config.validate()?;
    let (t_a, t_b, eta) = (config.t_a, config.t_b, config.eta);
    let base = 0.25 * (t_a * t_a + t_b * t_b);
    let fringe = 0.5 * t_a * t_b;
    let scenario = Scenario {
        n_d: 3,
        ..config.scenario()
    };
    let behavior = Behavior::from_fn(scenario, |d, x, y| {
        let c = (config.phi[x] - config.sigma[y]).cos();
        let e = eta * (base + fringe * c);
        let dd = eta * (base - fringe * c);
        match d {
            0 => e,
            1 => dd,
            _ => 1.0 - e - dd,
        }
    })?;
    ThreeOutcomeBehavior::new(behavior)
}

/// `p(d, y | x)` when a control qubit at angle `alpha` decides the setting.
///
/// `p(d, 0|x) = cos^2(a)/2`, `p(0, 1|x) = sin^2(a) cos^2(phi_x/2)` and
/// `p(1, 1|x) = sin^2(a) sin^2(phi_x/2)`.
pub fn qdce_statistics(config: &ExperimentConfig) -> Result<JointBehavior> {
    if config.mode != Mode::QuantumControl {
        return Err(Error::ModeUnsupported(config.mode.name()));
    }
    config.validate()?;
    let open = config.alpha.cos().powi(2);
    let closed = config.alpha.sin().powi(2);
    JointBehavior::from_fn(config.scenario(), |d, y, x| {
        if y == 0 {
            0.5 * open
        } else {
            let c = (config.phi[x] / 2.0).cos().powi(2);
            closed * if d == 0 { c } else { 1.0 - c }
        }
    })
}

/// The binary behavior a single monitored detector E records.
pub fn binary_behavior(config: &ExperimentConfig) -> Result<Behavior> {
    config.validate()?;
    match config.mode {
        Mode::Wheeler => wheeler_statistics(&config.phi),
        Mode::Modified => Ok(modified_statistics(config)?.coarse_grain()),
        Mode::QuantumControl => Err(Error::ModeUnsupported("quantum-control")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::Click;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn wheeler_examples() {
        let b = wheeler_statistics(&[0.0, PI, 1.234]).unwrap();
        assert_eq!(b.p(1, 0, 1), 0.0);
        assert_eq!(b.p(0, 0, 1), 1.0);
        assert!((b.p(1, 1, 1) - 1.0).abs() < 1e-15);
        for x in 0..3 {
            assert_eq!(b.p(0, x, 0), 0.5);
            assert_eq!(b.p(1, x, 0), 0.5);
        }
    }

    #[test]
    fn wheeler_output_states() {
        let cfg = ExperimentConfig::wheeler(vec![0.0]);
        let open = output_state(&cfg, 0, 0).unwrap();
        assert!((open.amp01 - Complex64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((open.amp10 - Complex64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        let closed = output_state(&cfg, 0, 1).unwrap();
        assert!((closed.amp01.norm() - 1.0).abs() < 1e-15);
        assert!(closed.amp10.norm() < 1e-15);
    }

    #[test]
    fn closed_state_matches_textbook_form_up_to_global_phase() {
        // cos(phi/2)|01> - i sin(phi/2)|10>, times exp(i phi/2).
        for &phi in &[0.3, 1.9, -2.5] {
            let s = output_state(&ExperimentConfig::wheeler(vec![phi]), 0, 1).unwrap();
            let g = Complex64::from_polar(1.0, phi / 2.0);
            assert!((s.amp01 - g * (phi / 2.0).cos()).norm() < 1e-14);
            assert!((s.amp10 - g * Complex64::new(0.0, -(phi / 2.0).sin())).norm() < 1e-14);
        }
    }

    #[test]
    fn modified_in_phase_sends_everything_to_e() {
        let cfg = ExperimentConfig::modified(vec![0.7], vec![0.7]);
        let s = output_state(&cfg, 0, 0).unwrap();
        assert!((s.amp01.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quantum_control_has_no_path_state() {
        let cfg = ExperimentConfig::quantum_control(vec![0.0], 0.3);
        assert_eq!(output_state(&cfg, 0, 0), Err(Error::ModeUnsupported("quantum-control")));
    }

    #[test]
    fn modified_examples() {
        let lossless = modified_statistics(&ExperimentConfig::modified(vec![0.0], vec![0.0])).unwrap();
        assert!((lossless.p(Click::E, 0, 0) - 1.0).abs() < 1e-15);
        assert!(lossless.p(Click::D, 0, 0).abs() < 1e-15);
        assert!(lossless.p(Click::None, 0, 0).abs() < 1e-15);

        let lossy = modified_statistics(
            &ExperimentConfig::modified(vec![0.0], vec![0.0]).with_transmittances(0.9, 0.8),
        )
        .unwrap();
        assert!((lossy.p(Click::E, 0, 0) - 0.7225).abs() < 1e-15);

        let half = modified_statistics(
            &ExperimentConfig::modified(vec![FRAC_PI_2], vec![0.0]).with_efficiency(0.5),
        )
        .unwrap();
        assert!((half.p(Click::E, 0, 0) - 0.25).abs() < 1e-15);
        assert!((half.p(Click::D, 0, 0) - 0.25).abs() < 1e-15);
        assert!((half.p(Click::None, 0, 0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn expectation_at_unit_transmittance() {
        let cfg = ExperimentConfig::modified(vec![FRAC_PI_4], vec![FRAC_PI_2]);
        let b = binary_behavior(&cfg).unwrap();
        assert!((b.expectation(0, 0).unwrap() - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let base = ExperimentConfig::modified(vec![0.0], vec![0.0]);
        assert!(base.clone().with_transmittances(0.0, 1.0).validate().is_err());
        assert!(base.clone().with_transmittances(1.0, 1.1).validate().is_err());
        assert!(base.clone().with_efficiency(0.0).validate().is_err());
        assert!(ExperimentConfig::modified(vec![0.0], vec![]).validate().is_err());
        assert!(ExperimentConfig::wheeler(vec![]).validate().is_err());
        assert!(ExperimentConfig::wheeler(vec![f64::NAN]).validate().is_err());
        assert!(modified_statistics(&ExperimentConfig::wheeler(vec![0.0])).is_err());
    }

    #[test]
    fn qdce_examples() {
        let cfg = |phi: f64, alpha: f64| ExperimentConfig::quantum_control(vec![phi], alpha);
        let open = qdce_statistics(&cfg(0.4, 0.0)).unwrap();
        assert_eq!(open.p(0, 0, 0), 0.5);
        assert_eq!(open.p(1, 0, 0), 0.5);
        assert_eq!(open.setting_marginal(1, 0), 0.0);

        let closed = qdce_statistics(&cfg(0.0, FRAC_PI_2)).unwrap();
        assert!((closed.p(0, 1, 0) - 1.0).abs() < 1e-15);

        let mid = qdce_statistics(&cfg(FRAC_PI_2, FRAC_PI_4)).unwrap();
        for (d, y) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            assert!((mid.p(d, y, 0) - 0.25).abs() < 1e-15, "d={d} y={y}");
        }
    }

    #[test]
    fn modified_reduces_to_closed_wheeler() {
        let phi = vec![0.0, 1.0, -2.0, 3.5];
        let w = wheeler_statistics(&phi).unwrap();
        let m = binary_behavior(&ExperimentConfig::modified(phi.clone(), vec![0.0])).unwrap();
        for x in 0..phi.len() {
            for d in 0..2 {
                assert!((w.p(d, x, 1) - m.p(d, x, 0)).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn squared_amplitudes_are_click_probabilities(
            phi in -10.0f64..10.0,
            sigma in -10.0f64..10.0,
            t_a in 0.01f64..=1.0,
            t_b in 0.01f64..=1.0,
            eta in 0.01f64..=1.0,
        ) {
            let cfg = ExperimentConfig::modified(vec![phi], vec![sigma])
                .with_transmittances(t_a, t_b)
                .with_efficiency(eta);
            let s = output_state(&cfg, 0, 0).unwrap();
            let stats = modified_statistics(&cfg).unwrap();
            prop_assert!((eta * s.amp01.norm_sqr() - stats.p(Click::E, 0, 0)).abs() <= 1e-12);
            prop_assert!((eta * s.amp10.norm_sqr() - stats.p(Click::D, 0, 0)).abs() <= 1e-12);
            // Surviving norm is the mean arm transmission, below 1 iff lossy.
            prop_assert!((s.norm_sqr() - (t_a * t_a + t_b * t_b) / 2.0).abs() <= 1e-12);
            prop_assert!(s.norm_sqr() <= 1.0 + 1e-12);
            let no_click = 1.0 - eta * (t_a * t_a + t_b * t_b) / 2.0;
            prop_assert!((stats.p(Click::None, 0, 0) - no_click).abs() <= 1e-12);
            prop_assert!(stats.as_behavior().normalization_error() <= 1e-12);
        }

        #[test]
        fn wheeler_states_match_wheeler_statistics(phi in -10.0f64..10.0) {
            let cfg = ExperimentConfig::wheeler(vec![phi]);
            let b = wheeler_statistics(&[phi]).unwrap();
            for y in 0..2 {
                let s = output_state(&cfg, 0, y).unwrap();
                prop_assert!((s.amp01.norm_sqr() - b.p(0, 0, y)).abs() <= 1e-12);
                prop_assert!((s.amp10.norm_sqr() - b.p(1, 0, y)).abs() <= 1e-12);
            }
        }

        #[test]
        fn control_marginal_is_independent_of_phase(
            phis in proptest::collection::vec(-7.0f64..7.0, 1..5),
            alpha in -3.2f64..3.2,
        ) {
            let j = qdce_statistics(&ExperimentConfig::quantum_control(phis.clone(), alpha)).unwrap();
            for x in 0..phis.len() {
                prop_assert!((j.setting_marginal(1, x) - alpha.sin().powi(2)).abs() <= 1e-12);
            }
        }
    }
}
