//! Named analyses, looked up in an [`AnalysisRegistry`] and run by the
//! subcommand whose stage they belong to.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use dimwit_core::causal::{
    classical_membership_with, qdce_hv_model, wdce_hv_model, DeterministicStrategy, Exclusion, Membership,
    StrategyMixture,
};
use dimwit_core::interferometer::{
    binary_behavior, modified_statistics, qdce_statistics, wheeler_statistics, ExperimentConfig, Mode,
};
use dimwit_core::prob::Click;
use dimwit_core::retro::{closed_form_min_retro, min_retro_for_idw, min_retrocausality_with, IdwTarget, LpConfig};
use dimwit_core::witness::WitnessRegistry;
use dimwit_core::{Behavior, JointBehavior};

use crate::config::{RangeSpec, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{quantize, quantize_table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Simulate,
    Witness,
    Retro,
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Simulate => "simulate",
            Stage::Witness => "witness",
            Stage::Retro => "retro",
        }
    }
}

pub struct Context<'a> {
    pub config: &'a RunConfig,
    pub lp: LpConfig,
}

impl Context<'_> {
    pub fn experiment(&self) -> Result<&ExperimentConfig> {
        self.config
            .experiment
            .as_ref()
            .ok_or_else(|| CliError::Config("this analysis needs an \"experiment\"".into()))
    }

    pub fn mode(&self) -> Option<Mode> {
        self.config.experiment.as_ref().map(|e| e.mode)
    }

    /// The binary behavior analysed by witnesses and the retrocausality LP,
    /// at serialized precision.
    pub fn behavior(&self) -> Result<Behavior> {
        match &self.config.behavior {
            Some(spec) => spec.to_behavior(self.config.k),
            None => quantized_binary(self.experiment()?, self.config.k),
        }
    }
}

pub fn quantized_binary(exp: &ExperimentConfig, k: usize) -> Result<Behavior> {
    let b = binary_behavior(exp)?;
    let s = b.scenario().with_lambda(k)?;
    Ok(Behavior::from_nested(s, &quantize_table(&b.to_nested()))?)
}

pub trait Analysis: Send + Sync {
    fn name(&self) -> &'static str;
    fn stage(&self) -> Stage;
    /// Whether the analysis applies to the configured mode; `None` means an
    /// inline behavior without an experiment.
    fn supports(&self, mode: Option<Mode>) -> bool;
    fn run(&self, ctx: &Context) -> Result<Value>;
}

pub struct AnalysisRegistry {
    entries: BTreeMap<&'static str, Box<dyn Analysis>>,
}

impl AnalysisRegistry {
    pub fn empty() -> Self {
        AnalysisRegistry {
            entries: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(WheelerStats));
        r.register(Box::new(ModifiedStats));
        r.register(Box::new(QdceStats));
        r.register(Box::new(HvWdce));
        r.register(Box::new(HvQdce));
        r.register(Box::new(Witness("detw")));
        r.register(Box::new(Witness("idw")));
        r.register(Box::new(MembershipAnalysis));
        r.register(Box::new(RetroMin));
        r.register(Box::new(RetroCurve));
        r
    }

    pub fn register(&mut self, analysis: Box<dyn Analysis>) {
        self.entries.insert(analysis.name(), analysis);
    }

    pub fn get(&self, name: &str) -> Option<&dyn Analysis> {
        self.entries.get(name).map(|a| a.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    /// The analyses `stage` runs for this config: the requested ones of that
    /// stage, or the stage defaults if none were requested.
    pub fn select(&self, stage: Stage, ctx: &Context) -> Result<Vec<&dyn Analysis>> {
        let mut requested = Vec::new();
        for name in &ctx.config.analysis {
            let a = self.get(name).ok_or_else(|| {
                let known: Vec<_> = self.names().collect();
                CliError::Config(format!("unknown analysis {name:?}; known: {}", known.join(", ")))
            })?;
            if a.stage() == stage && !requested.iter().any(|r: &&dyn Analysis| r.name() == a.name()) {
                requested.push(a);
            }
        }
        if requested.is_empty() {
            requested = self.defaults(stage, ctx)?;
        }
        for a in &requested {
            if !a.supports(ctx.mode()) {
                let mode = ctx.mode().map_or("inline-behavior", |m| m.name());
                return Err(CliError::Scenario(format!("analysis {} is not available in {mode} mode", a.name())));
            }
        }
        Ok(requested)
    }

    fn defaults(&self, stage: Stage, ctx: &Context) -> Result<Vec<&dyn Analysis>> {
        let names: Vec<&str> = match stage {
            Stage::Simulate => match ctx.mode() {
                Some(Mode::Wheeler) => vec!["wheeler-stats"],
                Some(Mode::Modified) => vec!["modified-stats"],
                Some(Mode::QuantumControl) => vec!["qdce-stats"],
                None => return Err(CliError::Config("simulate needs an \"experiment\"".into())),
            },
            Stage::Witness => {
                let s = ctx.behavior()?.scenario();
                let k = ctx.config.k;
                let mut v = Vec::new();
                if s.n_x >= 2 * k && s.n_y >= k {
                    v.push("detw");
                }
                if s.n_x >= 3 && s.n_y >= 2 {
                    v.push("idw");
                }
                if v.is_empty() {
                    return Err(CliError::Scenario(format!(
                        "no witness fits a scenario with {} preparations and {} settings",
                        s.n_x, s.n_y
                    )));
                }
                v
            }
            Stage::Retro => vec!["retro-min"],
        };
        Ok(names.into_iter().map(|n| self.get(n).expect("builtin analysis")).collect())
    }
}

/// A behavior in the form accepted by the config's `behavior` key.
pub fn behavior_json(b: &Behavior) -> Value {
    let s = b.scenario();
    json!({"n_x": s.n_x, "n_y": s.n_y, "n_d": s.n_d, "table": quantize_table(&b.to_nested())})
}

/// `p(d, y|x)` nested as `[d][x][y]`.
fn joint_json(j: &JointBehavior) -> Value {
    let s = j.scenario();
    let table: Vec<Vec<Vec<f64>>> = (0..s.n_d)
        .map(|d| (0..s.n_x).map(|x| (0..s.n_y).map(|y| quantize(j.p(d, y, x))).collect()).collect())
        .collect();
    let marginal: Vec<Vec<f64>> = (0..s.n_x)
        .map(|x| (0..s.n_y).map(|y| quantize(j.setting_marginal(y, x))).collect())
        .collect();
    json!({"n_x": s.n_x, "n_y": s.n_y, "n_d": s.n_d, "table": table, "setting_marginal": marginal})
}

fn strategy_json(s: &DeterministicStrategy, weight: f64) -> Value {
    json!({
        "code": s.code().to_string(),
        "retrocausal": s.is_retrocausal(),
        "f": s.f_table(),
        "g": s.g_table(),
        "weight": weight,
    })
}

fn mixture_json(m: &StrategyMixture) -> Value {
    Value::Array(m.iter().map(|(s, w)| strategy_json(s, w)).collect())
}

struct WheelerStats;

impl Analysis for WheelerStats {
    fn name(&self) -> &'static str {
        "wheeler-stats"
    }
    fn stage(&self) -> Stage {
        Stage::Simulate
    }
    fn supports(&self, mode: Option<Mode>) -> bool {
        mode == Some(Mode::Wheeler)
    }
    fn run(&self, ctx: &Context) -> Result<Value> {
        Ok(behavior_json(&wheeler_statistics(&ctx.experiment()?.phi)?))
    }
}

struct ModifiedStats;

impl Analysis for ModifiedStats {
    fn name(&self) -> &'static str {
        "modified-stats"
    }
    fn stage(&self) -> Stage {
        Stage::Simulate
    }
    fn supports(&self, mode: Option<Mode>) -> bool {
        mode == Some(Mode::Modified)
    }
    fn run(&self, ctx: &Context) -> Result<Value> {
        let exp = ctx.experiment()?;
        let three = modified_statistics(exp)?;
        let s = exp.scenario();
        let clicks: Vec<Vec<Vec<f64>>> = [Click::E, Click::D, Click::None]
            .iter()
            .map(|&c| (0..s.n_x).map(|x| (0..s.n_y).map(|y| quantize(three.p(c, x, y))).collect()).collect())
            .collect();
        let mut v = behavior_json(&three.coarse_grain());
        v["three_outcome"] = json!(clicks);
        Ok(v)
    }
}

struct QdceStats;

impl Analysis for QdceStats {
    fn name(&self) -> &'static str {
        "qdce-stats"
    }
    fn stage(&self) -> Stage {
        Stage::Simulate
    }
    fn supports(&self, mode: Option<Mode>) -> bool {
        mode == Some(Mode::QuantumControl)
    }
    fn run(&self, ctx: &Context) -> Result<Value> {
        Ok(joint_json(&qdce_statistics(ctx.experiment()?)?))
    }
}

struct HvWdce;

impl Analysis for HvWdce {
    fn name(&self) -> &'static str {
        "hv-wdce"
    }
    fn stage(&self) -> Stage {
        Stage::Simulate
    }
    fn supports(&self, mode: Option<Mode>) -> bool {
        mode == Some(Mode::Wheeler)
    }
    fn run(&self, ctx: &Context) -> Result<Value> {
        let phi = &ctx.experiment()?.phi;
        let hv = wdce_hv_model(phi)?;
        let diff = hv.max_abs_diff(&wheeler_statistics(phi)?).unwrap_or(f64::NAN);
        let mut v = behavior_json(&hv);
        v["max_abs_diff_to_quantum"] = json!(diff);
        Ok(v)
    }
}

struct HvQdce;

impl Analysis for HvQdce {
    fn name(&self) -> &'static str {
        "hv-qdce"
    }
    fn stage(&self) -> Stage {
        Stage::Simulate
    }
    fn supports(&self, mode: Option<Mode>) -> bool {
        mode == Some(Mode::QuantumControl)
    }
    fn run(&self, ctx: &Context) -> Result<Value> {
        let exp = ctx.experiment()?;
        let hv = qdce_hv_model(&exp.phi, exp.alpha)?;
        let diff = hv.max_abs_diff(&qdce_statistics(exp)?).unwrap_or(f64::NAN);
        let mut v = joint_json(&hv);
        v["max_abs_diff_to_quantum"] = json!(diff);
        Ok(v)
    }
}

/// Binary-behavior analyses do not apply to the joint statistics of the
/// quantum-control mode.
fn binary_mode(mode: Option<Mode>) -> bool {
    mode != Some(Mode::QuantumControl)
}

struct Witness(&'static str);

impl Analysis for Witness {
    fn name(&self) -> &'static str {
        self.0
    }
    fn stage(&self) -> Stage {
        Stage::Witness
    }
    fn supports(&self, mode: Option<Mode>) -> bool {
        binary_mode(mode)
    }
    fn run(&self, ctx: &Context) -> Result<Value> {
        let registry = WitnessRegistry::with_builtin(ctx.config.k);
        let witness = registry.get(self.0).expect("builtin witness");
        let report = witness.evaluate(&ctx.behavior()?)?;
        let mut v = serde_json::to_value(&report).expect("report serializes");
        if self.0 == "detw" {
            v["k"] = json!(ctx.config.k);
        }
        Ok(v)
    }
}

struct MembershipAnalysis;

impl Analysis for MembershipAnalysis {
    fn name(&self) -> &'static str {
        "membership"
    }
    fn stage(&self) -> Stage {
        Stage::Witness
    }
    fn supports(&self, mode: Option<Mode>) -> bool {
        binary_mode(mode)
    }
    fn run(&self, ctx: &Context) -> Result<Value> {
        let (k, shared) = (ctx.config.k, ctx.config.shared_randomness);
        let result = classical_membership_with(&ctx.behavior()?, k, shared, &ctx.lp)?;
        let mut v = json!({"k": k, "shared_randomness": shared});
        match result {
            Membership::Inside { mixture, residual } => {
                v["result"] = json!("inside");
                v["residual"] = json!(residual);
                v["certificate"] = mixture_json(&mixture);
            }
            Membership::Outside(ex) => {
                let (kind, value) = match ex {
                    Exclusion::PolytopeDistance(d) => ("polytope-distance", d),
                    Exclusion::Determinant(d) => ("determinant", d),
                };
                v["result"] = json!("outside");
                v["exclusion"] = json!(kind);
                v["value"] = json!(value);
            }
            Membership::Undecided { best_residual } => {
                v["result"] = json!("undecided");
                v["residual"] = json!(best_residual);
            }
        }
        Ok(v)
    }
}

struct RetroMin;

impl Analysis for RetroMin {
    fn name(&self) -> &'static str {
        "retro-min"
    }
    fn stage(&self) -> Stage {
        Stage::Retro
    }
    fn supports(&self, mode: Option<Mode>) -> bool {
        binary_mode(mode)
    }
    fn run(&self, ctx: &Context) -> Result<Value> {
        let report = min_retrocausality_with(&ctx.behavior()?, &ctx.lp)?;
        Ok(json!({
            "r_min": report.r_min,
            "idw": report.idw_value,
            "closed_form_bound": report.idw_value.map(closed_form_min_retro),
            "certificate": mixture_json(&report.mixture),
        }))
    }
}

struct RetroCurve;

impl Analysis for RetroCurve {
    fn name(&self) -> &'static str {
        "retro-curve"
    }
    fn stage(&self) -> Stage {
        Stage::Retro
    }
    fn supports(&self, _: Option<Mode>) -> bool {
        true
    }
    fn run(&self, ctx: &Context) -> Result<Value> {
        let grid = ctx.config.retro_curve.clone().unwrap_or(RangeSpec::Step {
            start: -5.0,
            stop: 5.0,
            step: 0.1,
        });
        let mut points = Vec::new();
        for target in grid.values("retro_curve")? {
            let p = min_retro_for_idw(target, IdwTarget::AtLeast, &ctx.lp)?;
            points.push(json!({
                "idw": target,
                "r_min": p.r_min,
                "closed_form": closed_form_min_retro(target),
            }));
        }
        Ok(Value::Array(points))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(config: &RunConfig) -> Context<'_> {
        Context {
            config,
            lp: LpConfig::default(),
        }
    }

    #[test]
    fn registry_has_all_names() {
        let names: Vec<_> = AnalysisRegistry::builtin().names().collect();
        assert_eq!(
            names,
            vec![
                "detw",
                "hv-qdce",
                "hv-wdce",
                "idw",
                "membership",
                "modified-stats",
                "qdce-stats",
                "retro-curve",
                "retro-min",
                "wheeler-stats"
            ]
        );
    }

    #[test]
    fn defaults_follow_mode_and_scenario() {
        let reg = AnalysisRegistry::builtin();
        let c = RunConfig::parse(r#"{"experiment": {"mode": "wheeler", "phi": [0, 1, 2, 3]}}"#).unwrap();
        let names = |stage| -> Vec<&str> { reg.select(stage, &ctx(&c)).unwrap().iter().map(|a| a.name()).collect() };
        assert_eq!(names(Stage::Simulate), vec!["wheeler-stats"]);
        assert_eq!(names(Stage::Witness), vec!["detw", "idw"]);
        let c3 = RunConfig::parse(r#"{"experiment": {"mode": "modified", "phi": [0, 1, 2], "sigma": [0, 1]}}"#).unwrap();
        let w: Vec<_> = reg.select(Stage::Witness, &ctx(&c3)).unwrap().iter().map(|a| a.name()).collect();
        assert_eq!(w, vec!["idw"]);
    }

    #[test]
    fn mode_mismatch_is_a_scenario_error() {
        let reg = AnalysisRegistry::builtin();
        let c = RunConfig::parse(r#"{"experiment": {"mode": "wheeler", "phi": [0]}, "analysis": ["qdce-stats"]}"#).unwrap();
        assert!(matches!(reg.select(Stage::Simulate, &ctx(&c)), Err(CliError::Scenario(_))));
        let c = RunConfig::parse(r#"{"experiment": {"mode": "wheeler", "phi": [0]}, "analysis": ["nope"]}"#).unwrap();
        assert!(matches!(reg.select(Stage::Simulate, &ctx(&c)), Err(CliError::Config(_))));
    }
}
