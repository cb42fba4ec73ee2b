//! Experiment configuration: strict JSON parsing, dotted overrides and
//! resolution of every default against the chosen problem.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use multiplier_core::problems::{instantiate, GridSpec, InitialData, MultiplierProblem, ParamSet};
use multiplier_core::solver::{Predictor, Startup};
use multiplier_core::verify::Refinement;
use multiplier_core::{BoundaryMode, SolverConfig, SpatialGrid, TimeGrid};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config is not valid JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("at `{path}`: {message}")]
    Field { path: String, message: String },
    #[error("override `{0}` must look like key.path=value")]
    Override(String),
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Run,
    Convergence,
    Consistency,
    Identity,
    Divergence,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Run => "run",
            Mode::Convergence => "convergence",
            Mode::Consistency => "consistency",
            Mode::Identity => "identity",
            Mode::Divergence => "divergence",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extent: Option<Vec<usize>>,
    /// Alternative to `extent`; every axis gets `(hi - lo) / h` points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Boundary>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Inline values, laid out point-major with components innermost.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ut0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorName {
    Copy,
    LinearExtrapolation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartupName {
    ExactSolution,
    Taylor2,
    Given,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jacobian_fd_eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictor: Option<PredictorName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub startup: Option<StartupName>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    Exact,
    #[serde(rename = "self")]
    SelfRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefinementName {
    Time,
    Joint,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Reference>,
    /// Step counts for an exact reference.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<usize>>,
    /// Refinement levels for a self reference, starting from `N`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refinement: Option<RefinementName>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderPairs {
    All,
    Last,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    /// Largest allowed density spread, per component.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_spread: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergence: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order_pairs: Option<OrderPairs>,
}

/// The document as written. After [`ExperimentConfig::resolve`] every field
/// that applies to the mode is filled in, and the result parses back to the
/// same experiment.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub problem: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consistency: Option<LevelsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity: Option<IdentityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<ChecksConfig>,
}

/// Marker line that carries the resolved config in every output file.
pub const CONFIG_MARKER: &str = "# config: ";

/// Parses a config document, or the header of a previous output file.
pub fn parse_value(text: &str) -> Result<Value, ConfigError> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('#') {
        let line = text
            .lines()
            .find_map(|l| l.strip_prefix(CONFIG_MARKER))
            .ok_or_else(|| invalid("output header has no `# config:` line"))?;
        return Ok(serde_json::from_str(line)?);
    }
    Ok(serde_json::from_str(text)?)
}

/// Sets `path` (dot separated) in `doc` to `raw`, read as JSON when it
/// parses and as a string otherwise.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), ConfigError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::Override(assignment.to_string()))?;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(ConfigError::Override(assignment.to_string()));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    for key in &keys[..keys.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| invalid(format!("override `{path}`: `{key}` is inside a non-object")))?;
        node = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| invalid(format!("override `{path}` targets a non-object")))?;
    obj.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

pub fn from_value(doc: Value) -> Result<ExperimentConfig, ConfigError> {
    serde_path_to_error::deserialize(doc).map_err(|e| ConfigError::Field {
        path: e.path().to_string(),
        message: e.into_inner().to_string(),
    })
}

pub fn parse_config(text: &str, overrides: &[String]) -> Result<ExperimentConfig, ConfigError> {
    let mut doc = parse_value(text)?;
    if !doc.is_object() {
        return Err(invalid("config must be a JSON object"));
    }
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    from_value(doc)
}

/// A validated experiment with the objects the runner needs.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub mode: Mode,
    pub problem: Box<dyn MultiplierProblem>,
    pub grid_spec: GridSpec,
    pub grid: SpatialGrid,
    pub time: TimeGrid,
    pub initial: Option<InitialData>,
    pub solver: SolverConfig,
}

impl fmt::Debug for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Experiment")
            .field("config", &self.config)
            .field("mode", &self.mode)
            .finish_non_exhaustive()
    }
}

impl ExperimentConfig {
    /// Validates against the problem and fills every default. `forced` is
    /// the mode named by the subcommand, if any.
    pub fn resolve(mut self, forced: Option<Mode>) -> Result<Experiment, ConfigError> {
        let mode = match (self.mode, forced) {
            (Some(a), Some(b)) if a != b => {
                return Err(invalid(format!("config mode `{a}` conflicts with subcommand `{b}`")))
            }
            (a, b) => a.or(b).unwrap_or(Mode::Run),
        };
        self.mode = Some(mode);
        if self.problem.is_empty() {
            return Err(invalid("`problem` is required"));
        }
        let given: ParamSet = self.params.clone();
        let problem = instantiate(&self.problem, &given).map_err(|e| invalid(e.to_string()))?;
        self.params = problem.params().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        let info = problem.info().clone();
        let defaults = problem.defaults();

        // time
        let t0 = self.t0.unwrap_or(0.0);
        let t_end = self.t.unwrap_or(defaults.t_end);
        self.t0 = Some(t0);
        self.t = Some(t_end);
        let time = match (self.n, self.tau) {
            (Some(_), Some(_)) => return Err(invalid("give either `N` or `tau`, not both")),
            (n, None) => {
                let n = n.unwrap_or(defaults.steps);
                self.n = Some(n);
                TimeGrid::with_steps(t0, t_end, n)
            }
            (None, Some(tau)) => TimeGrid::with_tau(t0, t_end, tau),
        }
        .map_err(|e| invalid(format!("time grid: {e}")))?;

        // space
        let grid_spec = match (&defaults.grid, self.grid.take()) {
            (None, None) => GridSpec {
                extent: vec![],
                lo: 0.0,
                hi: 1.0,
                mode: BoundaryMode::Periodic,
            },
            (None, Some(_)) => return Err(invalid(format!("`{}` is an ODE and takes no `grid`", info.name))),
            (Some(d), g) => {
                let g = g.unwrap_or_default();
                let lo = g.lo.unwrap_or(d.lo);
                let hi = g.hi.unwrap_or(d.hi);
                if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                    return Err(invalid(format!("grid bounds [{lo}, {hi}] are not an interval")));
                }
                let dim = g.dim.or(g.extent.as_ref().map(|e| e.len())).unwrap_or(d.extent.len());
                if dim != d.extent.len() {
                    return Err(invalid(format!("`{}` is {}-dimensional, grid has {dim} axes", info.name, d.extent.len())));
                }
                let extent = match (g.extent, g.h) {
                    (Some(_), Some(_)) => return Err(invalid("give either `grid.extent` or `grid.h`, not both")),
                    (Some(e), None) => e,
                    (None, Some(h)) => {
                        let n = (hi - lo) / h;
                        if !(n.is_finite() && n >= 1.0) || (n - n.round()).abs() > 1e-9 * n {
                            return Err(invalid(format!("grid.h = {h} does not divide [{lo}, {hi}]")));
                        }
                        vec![n.round() as usize; dim]
                    }
                    (None, None) => d.extent.clone(),
                };
                let boundary = g.boundary.unwrap_or(match d.mode {
                    BoundaryMode::Periodic => Boundary::Periodic,
                    BoundaryMode::Boundary => Boundary::Boundary,
                });
                self.grid = Some(GridConfig {
                    extent: Some(extent.clone()),
                    h: None,
                    dim: None,
                    lo: Some(lo),
                    hi: Some(hi),
                    boundary: Some(boundary),
                });
                GridSpec {
                    extent,
                    lo,
                    hi,
                    mode: match boundary {
                        Boundary::Periodic => BoundaryMode::Periodic,
                        Boundary::Boundary => BoundaryMode::Boundary,
                    },
                }
            }
        };
        let grid = grid_spec.build().map_err(|e| invalid(format!("grid: {e}")))?;
        let st = problem.stencil();
        grid.check_stencil(st.back, st.fwd)
            .map_err(|e| invalid(format!("grid does not fit the `{}` stencil: {e}", info.name)))?;

        // solver
        let base = SolverConfig::default();
        let s = self.solver.take().unwrap_or_default();
        let solver = SolverConfig {
            residual_tol: s.residual_tol.unwrap_or(base.residual_tol),
            max_iters: s.max_iters.unwrap_or(base.max_iters),
            jacobian_fd_eps: s.jacobian_fd_eps.unwrap_or(base.jacobian_fd_eps),
            predictor: match s.predictor {
                Some(PredictorName::Copy) => Predictor::Copy,
                Some(PredictorName::LinearExtrapolation) => Predictor::LinearExtrapolation,
                None => base.predictor,
            },
            startup: match s.startup {
                Some(StartupName::ExactSolution) => Startup::ExactSolution,
                Some(StartupName::Taylor2) => Startup::Taylor2,
                Some(StartupName::Given) => Startup::Given,
                None => base.startup,
            },
        };
        solver.validate().map_err(|e| invalid(e.to_string()))?;
        self.solver = Some(SolverSection {
            residual_tol: Some(solver.residual_tol),
            max_iters: Some(solver.max_iters),
            jacobian_fd_eps: Some(solver.jacobian_fd_eps),
            predictor: Some(match solver.predictor {
                Predictor::Copy => PredictorName::Copy,
                Predictor::LinearExtrapolation => PredictorName::LinearExtrapolation,
            }),
            startup: Some(match solver.startup {
                Startup::ExactSolution => StartupName::ExactSolution,
                Startup::Taylor2 => StartupName::Taylor2,
                Startup::Given => StartupName::Given,
            }),
        });

        // initial data
        let needs_initial = matches!(mode, Mode::Run | Mode::Divergence | Mode::Convergence);
        let initial = if needs_initial {
            let ic = self.initial.take().unwrap_or_default();
            let data = match (&ic.preset, &ic.u0) {
                (Some(_), Some(_)) => return Err(invalid("give either `initial.preset` or `initial.u0`, not both")),
                (None, Some(u0)) => {
                    let want = info.m * grid.npoints();
                    if u0.len() != want {
                        return Err(invalid(format!("initial.u0 has {} values, expected {want}", u0.len())));
                    }
                    if let Some(ut0) = &ic.ut0 {
                        if ut0.len() != want {
                            return Err(invalid(format!("initial.ut0 has {} values, expected {want}", ut0.len())));
                        }
                    }
                    InitialData {
                        u0: u0.clone(),
                        ut0: ic.ut0.clone(),
                        u1: None,
                    }
                }
                (preset, None) => {
                    if ic.ut0.is_some() {
                        return Err(invalid("initial.ut0 needs initial.u0"));
                    }
                    let name = preset.clone().unwrap_or_else(|| defaults.preset.to_string());
                    let data = problem.initial(&name, &grid).map_err(|e| {
                        invalid(format!("{e}; `{}` presets: {}", info.name, problem.presets().join(", ")))
                    })?;
                    self.initial = Some(InitialConfig {
                        preset: Some(name),
                        u0: None,
                        ut0: None,
                    });
                    data
                }
            };
            if self.initial.is_none() {
                self.initial = Some(ic);
            }
            Some(data)
        } else {
            self.initial = None;
            None
        };

        // output
        let out = self.output.take().unwrap_or_default();
        self.output = Some(OutputConfig {
            dir: Some(out.dir.unwrap_or_else(|| ".".into())),
            prefix: Some(out.prefix.unwrap_or_else(|| format!("{}_{mode}", info.name))),
        });

        // mode sections
        let checks = self.checks.take().unwrap_or_default();
        let runs_steps = matches!(mode, Mode::Run | Mode::Divergence | Mode::Convergence);
        let has_orders = !matches!(mode, Mode::Run | Mode::Divergence);
        for (key, given, applies) in [
            ("divergence", checks.divergence.is_some(), matches!(mode, Mode::Run | Mode::Divergence)),
            ("max_spread", checks.max_spread.is_some(), runs_steps),
            ("order", checks.order.is_some(), has_orders),
            ("order_tol", checks.order_tol.is_some(), has_orders),
            ("order_pairs", checks.order_pairs.is_some(), has_orders),
        ] {
            if given && !applies {
                return Err(invalid(format!("`checks.{key}` does not apply to mode `{mode}`")));
            }
        }
        let mut resolved_checks = ChecksConfig {
            max_spread: checks.max_spread,
            ..Default::default()
        };
        match mode {
            Mode::Run | Mode::Divergence => {
                resolved_checks.divergence = Some(checks.divergence.unwrap_or(true));
            }
            Mode::Convergence => {
                let c = self.convergence.take().unwrap_or_default();
                let mut probe = vec![0.0; info.m];
                let has_exact = initial.as_ref().is_some_and(|init| problem.exact(init, t0, t_end, &mut probe));
                let reference = c.reference.unwrap_or(if has_exact { Reference::Exact } else { Reference::SelfRef });
                let n = time.steps;
                let resolved = match reference {
                    Reference::Exact => {
                        if !has_exact {
                            return Err(invalid(format!("`{}` has no exact solution for this initial data", info.name)));
                        }
                        if c.levels.is_some() || c.refinement.is_some() {
                            return Err(invalid("`convergence.levels` and `convergence.refinement` apply to the self reference"));
                        }
                        let steps = c.steps.unwrap_or_else(|| (0..4).map(|k| n << k).collect());
                        if steps.len() < 3 {
                            return Err(invalid("`convergence.steps` needs at least 3 entries"));
                        }
                        ConvergenceConfig {
                            reference: Some(reference),
                            steps: Some(steps),
                            levels: None,
                            refinement: None,
                        }
                    }
                    Reference::SelfRef => {
                        if c.steps.is_some() {
                            return Err(invalid("`convergence.steps` applies to the exact reference"));
                        }
                        if self.initial.as_ref().is_some_and(|i| i.preset.is_none()) {
                            return Err(invalid("self-convergence needs `initial.preset`"));
                        }
                        let levels = c.levels.unwrap_or(4);
                        if levels < 4 {
                            return Err(invalid("`convergence.levels` must be at least 4"));
                        }
                        let refinement = c.refinement.unwrap_or(if info.n == 0 {
                            RefinementName::Time
                        } else {
                            RefinementName::Joint
                        });
                        ConvergenceConfig {
                            reference: Some(reference),
                            steps: None,
                            levels: Some(levels),
                            refinement: Some(refinement),
                        }
                    }
                };
                self.convergence = Some(resolved);
                resolved_checks.order = Some(checks.order.unwrap_or(info.joint_order() as f64));
                resolved_checks.order_tol = Some(checks.order_tol.unwrap_or(0.3));
                resolved_checks.order_pairs = Some(checks.order_pairs.unwrap_or(OrderPairs::Last));
            }
            Mode::Consistency => {
                let levels = self.consistency.take().unwrap_or_default().levels.unwrap_or(4);
                if levels < 3 {
                    return Err(invalid("`consistency.levels` must be at least 3"));
                }
                self.consistency = Some(LevelsConfig { levels: Some(levels) });
                resolved_checks.order = Some(checks.order.unwrap_or(info.joint_order() as f64));
                resolved_checks.order_tol = Some(checks.order_tol.unwrap_or(0.3));
                resolved_checks.order_pairs = Some(checks.order_pairs.unwrap_or(OrderPairs::All));
            }
            Mode::Identity => {
                let c = self.identity.take().unwrap_or_default();
                let levels = c.levels.unwrap_or(4);
                if levels < 2 {
                    return Err(invalid("`identity.levels` must be at least 2"));
                }
                self.identity = Some(IdentityConfig {
                    levels: Some(levels),
                    seeds: Some(c.seeds.unwrap_or(3).max(1)),
                });
                resolved_checks.order = Some(checks.order.unwrap_or(6.0));
                resolved_checks.order_tol = Some(checks.order_tol.unwrap_or(1.0));
                resolved_checks.order_pairs = Some(checks.order_pairs.unwrap_or(OrderPairs::All));
            }
        }
        for (section, present) in [
            ("convergence", self.convergence.is_some() && mode != Mode::Convergence),
            ("consistency", self.consistency.is_some() && mode != Mode::Consistency),
            ("identity", self.identity.is_some() && mode != Mode::Identity),
        ] {
            if present {
                return Err(invalid(format!("section `{section}` does not apply to mode `{mode}`")));
            }
        }
        self.checks = Some(resolved_checks);

        Ok(Experiment {
            config: self,
            mode,
            problem,
            grid_spec,
            grid,
            time,
            initial,
            solver,
        })
    }
}

impl Experiment {
    pub fn refinement(&self) -> Refinement {
        match self.config.convergence.as_ref().and_then(|c| c.refinement) {
            Some(RefinementName::Time) => Refinement::Time,
            _ => Refinement::Joint,
        }
    }

    pub fn checks(&self) -> &ChecksConfig {
        self.config.checks.as_ref().expect("resolved")
    }

    pub fn output(&self) -> (&str, &str) {
        let o = self.config.output.as_ref().expect("resolved");
        (o.dir.as_deref().unwrap(), o.prefix.as_deref().unwrap())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dho() -> &'static str {
        r#"{"problem": "dho", "params": {"m": 1, "k": 5, "gamma": 0.5}, "N": 200, "T": 10, "mode": "run"}"#
    }

    #[test]
    fn defaults_fill_the_solver_block() {
        let e = parse_config(dho(), &[]).unwrap().resolve(None).unwrap();
        assert_eq!(e.solver.residual_tol, 1e-12);
        assert_eq!(e.solver.max_iters, 50);
        assert_eq!(e.time.steps, 200);
        assert_eq!(e.config.output.as_ref().unwrap().prefix.as_deref(), Some("dho_run"));
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = parse_config(r#"{"problem": "dho", "sigma_xx": 1}"#, &[]).unwrap_err();
        assert!(err.to_string().contains("sigma_xx"), "{err}");
        let err = parse_config(r#"{"problem": "dho", "solver": {"tol": 1}}"#, &[]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("solver") && msg.contains("tol"), "{msg}");
    }

    #[test]
    fn type_errors_carry_the_path() {
        let err = parse_config(r#"{"problem": "dho", "solver": {"max_iters": "many"}}"#, &[]).unwrap_err();
        assert!(err.to_string().contains("solver.max_iters"), "{err}");
    }

    #[test]
    fn dotted_overrides() {
        let c = parse_config(dho(), &["solver.residual_tol=1e-13".into(), "output.dir=out".into()]).unwrap();
        assert_eq!(c.solver.unwrap().residual_tol, Some(1e-13));
        assert_eq!(c.output.unwrap().dir.as_deref(), Some("out"));
        assert!(parse_config(dho(), &["solver.residual_tol".into()]).is_err());
    }

    #[test]
    fn resolved_config_round_trips() {
        let e = parse_config(r#"{"problem": "burgers", "params": {"p": 2}, "N": 50}"#, &[])
            .unwrap()
            .resolve(None)
            .unwrap();
        let text = serde_json::to_string(&e.config).unwrap();
        let again = parse_config(&text, &[]).unwrap().resolve(None).unwrap();
        assert_eq!(again.config, e.config);
        assert_eq!(again.grid_spec, e.grid_spec);
    }

    #[test]
    fn mode_conflicts_and_misplaced_sections_are_rejected() {
        assert!(parse_config(dho(), &[]).unwrap().resolve(Some(Mode::Convergence)).is_err());
        let c = parse_config(r#"{"problem": "dho", "consistency": {"levels": 4}}"#, &[]).unwrap();
        assert!(c.resolve(None).is_err());
    }

    #[test]
    fn grids_are_checked_against_the_problem() {
        let c = parse_config(r#"{"problem": "dho", "grid": {"extent": [8]}}"#, &[]).unwrap();
        assert!(c.resolve(None).is_err());
        let c = parse_config(r#"{"problem": "kdv", "grid": {"extent": [3]}}"#, &[]).unwrap();
        assert!(c.resolve(None).is_err());
        let c = parse_config(r#"{"problem": "burgers", "grid": {"h": 0.25, "lo": 0, "hi": 4}}"#, &[]).unwrap();
        assert_eq!(c.resolve(None).unwrap().grid_spec.extent, vec![16]);
    }

    #[test]
    fn unknown_problems_and_params_fail() {
        assert!(parse_config(r#"{"problem": "heat"}"#, &[]).unwrap().resolve(None).is_err());
        let c = parse_config(r#"{"problem": "dho", "params": {"omega": 1}}"#, &[]).unwrap();
        assert!(c.resolve(None).unwrap_err().to_string().contains("omega"));
    }

    #[test]
    fn output_headers_parse_back() {
        let text = format!("# multiplier 0.1.0\n{CONFIG_MARKER}{}\nstep,time\n", r#"{"problem":"dho","N":10}"#);
        let c = parse_config(&text, &[]).unwrap();
        assert_eq!(c.n, Some(10));
    }
}
