//! Mode execution and check evaluation.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use thiserror::Error;

use multiplier_core::problems::NAMES;
use multiplier_core::solver::Run;
use multiplier_core::verify::{
    consistency_order, identity_convergence, self_convergence_with, solution_convergence_with, trial_field,
    ConvergenceResult, Refinement,
};
use multiplier_core::{integrate, SolverError, VerifyError};

use crate::config::{ConfigError, Experiment, Mode, OrderPairs, Reference};
use crate::output::{self, CheckResult, RunStats, Stamp, Summary};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Solver(#[from] SolverError),
    #[error("{0}")]
    Verify(#[from] VerifyError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Exit status for a finished experiment.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug)]
pub struct Outcome {
    pub summary: Summary,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.summary.passed {
            EXIT_PASS
        } else {
            EXIT_CHECK_FAILED
        }
    }
}

fn order_check(name: &str, r: &ConvergenceResult, target: f64, tol: f64, pairs: OrderPairs) -> CheckResult {
    let considered: &[f64] = match pairs {
        OrderPairs::All => &r.orders,
        OrderPairs::Last => r.orders.last().map(std::slice::from_ref).unwrap_or(&[]),
    };
    let passed = !considered.is_empty() && considered.iter().all(|o| (o - target).abs() <= tol);
    let shown: Vec<String> = r.orders.iter().map(|o| format!("{o:.3}")).collect();
    let which = match pairs {
        OrderPairs::All => "all pairs",
        OrderPairs::Last => "finest pair",
    };
    CheckResult {
        name: name.to_string(),
        passed,
        detail: format!("orders [{}], {which} within {target} +- {tol}", shown.join(", ")),
    }
}

fn run_checks(exp: &Experiment, stats: &RunStats, label: &str) -> Vec<CheckResult> {
    let mut out = vec![CheckResult {
        name: format!("{label}completed"),
        passed: stats.failure.is_none(),
        detail: match &stats.failure {
            None => format!("{} steps", stats.steps_completed),
            Some(f) => format!("rejected at step {}: {}", f.step, f.reason),
        },
    }];
    let checks = exp.checks();
    if checks.divergence.unwrap_or(false) {
        out.push(CheckResult {
            name: format!("{label}divergence"),
            passed: stats.divergence.fail == 0,
            detail: if stats.divergence.fail == 0 {
                format!("{} steps pass, {} not applicable", stats.divergence.pass, stats.divergence.not_applicable)
            } else {
                let first: Vec<String> = stats.divergence.failing_steps.iter().take(10).map(|s| s.to_string()).collect();
                format!("{} steps fail, first at {}", stats.divergence.fail, first.join(", "))
            },
        });
    }
    if let Some(limit) = checks.max_spread {
        for d in &stats.densities {
            out.push(CheckResult {
                name: format!("{label}spread {}", d.name),
                passed: d.spread <= limit,
                detail: format!("{:.3e} <= {limit:e}", d.spread),
            });
        }
    }
    out
}

fn ensure_dir(dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn single_run(exp: &Experiment, stamp: &Stamp, dir: &Path, prefix: &str) -> Result<Outcome, RunError> {
    let init = exp.initial.as_ref().expect("run modes resolve initial data");
    let run = integrate(exp.problem.as_ref(), init, &exp.grid, &exp.time, &exp.solver, None)?;
    let head = output::header(stamp, &exp.config);
    let csv_path = dir.join(format!("{prefix}.csv"));
    output::write_file(&csv_path, &head, &output::steps_body(&run)).map_err(io_err(&csv_path))?;
    let stats = RunStats::of(&run, exp.time.steps);
    let checks = run_checks(exp, &stats, "");
    finish(exp, stamp, dir, prefix, checks, vec![stats], vec![], vec![csv_path])
}

fn summarize(
    exp: &Experiment,
    stamp: &Stamp,
    checks: Vec<CheckResult>,
    runs: Vec<RunStats>,
    table: &[ConvergenceResult],
) -> Summary {
    Summary {
        version: stamp.version.clone(),
        generated: stamp.generated.clone(),
        config: exp.config.clone(),
        passed: checks.iter().all(|c| c.passed),
        checks,
        runs,
        table: output::table_rows(table),
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    exp: &Experiment,
    stamp: &Stamp,
    dir: &Path,
    prefix: &str,
    checks: Vec<CheckResult>,
    runs: Vec<RunStats>,
    table: Vec<ConvergenceResult>,
    mut files: Vec<PathBuf>,
) -> Result<Outcome, RunError> {
    let head = output::header(stamp, &exp.config);
    if !table.is_empty() {
        let path = dir.join(format!("{prefix}_table.csv"));
        output::write_file(&path, &head, &output::table_body(&table)).map_err(io_err(&path))?;
        files.push(path);
    }
    let summary = summarize(exp, stamp, checks, runs, &table);
    let path = dir.join(format!("{prefix}_summary.json"));
    let body = serde_json::to_vec_pretty(&summary).expect("summary serializes");
    fs::write(&path, body).map_err(io_err(&path))?;
    files.push(path);
    Ok(Outcome { summary, files })
}

fn convergence(exp: &Experiment, stamp: &Stamp, dir: &Path, prefix: &str) -> Result<Outcome, RunError> {
    let conv = exp.config.convergence.as_ref().expect("resolved");
    let p = exp.problem.as_ref();
    let parts_dir = dir.join(format!("{prefix}.parts"));
    ensure_dir(&parts_dir)?;
    let part = |k: usize| parts_dir.join(format!("{k:03}.csv"));

    let stats: Mutex<Vec<(usize, RunStats)>> = Mutex::new(Vec::new());
    let io_errors: Mutex<Vec<RunError>> = Mutex::new(Vec::new());
    let hook = |k: usize, run: &Run| {
        let requested = match conv.reference {
            Some(Reference::Exact) => conv.steps.as_ref().unwrap()[k],
            _ => exp.time.steps << k,
        };
        let path = part(k);
        if let Err(e) = fs::write(&path, output::sub_run_body(k, requested, run)) {
            io_errors.lock().unwrap().push(RunError::Io { path, source: e });
        }
        stats.lock().unwrap().push((k, RunStats::of(run, requested)));
    };

    let (t0, t_end) = (exp.time.t0, exp.time.t_end());
    let mut results = Vec::new();
    let mut checks = Vec::new();
    let c = exp.checks();
    let (target, tol, pairs) = (c.order.unwrap(), c.order_tol.unwrap(), c.order_pairs.unwrap());
    let outcome: Result<(), VerifyError> = match conv.reference {
        Some(Reference::Exact) => {
            let init = exp.initial.as_ref().expect("resolved");
            let steps = conv.steps.as_ref().unwrap();
            solution_convergence_with(p, init, t0, t_end, steps, &exp.solver, &hook).map(|r| {
                checks.push(order_check("solution order", &r.solution, target, tol, pairs));
                checks.push(order_check("density order", &r.density, target, tol, pairs));
                results.push(r.solution);
                results.push(r.density);
            })
        }
        _ => {
            let preset = exp.config.initial.as_ref().and_then(|i| i.preset.as_deref()).expect("resolved");
            let refinement = exp.refinement();
            let levels = conv.levels.unwrap();
            self_convergence_with(
                p,
                &exp.grid_spec,
                preset,
                t0,
                t_end,
                exp.time.steps,
                levels,
                refinement,
                &exp.solver,
                &hook,
            )
            .map(|r| {
                let name = match refinement {
                    Refinement::Joint => "self-convergence order (joint)",
                    Refinement::Time => "self-convergence order (time)",
                };
                checks.push(order_check(name, &r, target, tol, pairs));
                results.push(r);
            })
        }
    };
    if let Some(e) = io_errors.into_inner().unwrap().into_iter().next() {
        return Err(e);
    }

    let mut stats = stats.into_inner().unwrap();
    stats.sort_by_key(|(k, _)| *k);
    let mut parts: Vec<PathBuf> = stats.iter().map(|(k, _)| part(*k)).collect();
    parts.sort();
    let head = output::header(stamp, &exp.config);
    let merged = dir.join(format!("{prefix}.csv"));
    output::merge_parts(&parts, &merged, &head).map_err(io_err(&merged))?;
    fs::remove_dir_all(&parts_dir).map_err(io_err(&parts_dir))?;

    let stats: Vec<RunStats> = stats.into_iter().map(|(_, s)| s).collect();
    let mut run_checks_all = Vec::new();
    for (k, s) in stats.iter().enumerate() {
        run_checks_all.extend(run_checks(exp, s, &format!("run {k} ")));
    }
    if let Err(e) = outcome {
        match e {
            VerifyError::Rejected { .. } => {}
            other => return Err(other.into()),
        }
    }
    run_checks_all.extend(checks);
    finish(exp, stamp, dir, prefix, run_checks_all, stats, results, vec![merged])
}

fn consistency(exp: &Experiment, stamp: &Stamp, dir: &Path, prefix: &str) -> Result<Outcome, RunError> {
    let p = exp.problem.as_ref();
    let levels = exp.config.consistency.as_ref().and_then(|c| c.levels).unwrap();
    let r = consistency_order(p, &p.consistency_setup(), levels)?;
    let c = exp.checks();
    let checks = vec![order_check("consistency order", &r, c.order.unwrap(), c.order_tol.unwrap(), c.order_pairs.unwrap())];
    finish(exp, stamp, dir, prefix, checks, vec![], vec![r], vec![])
}

/// Identity residual slopes for `seeds` random trial fields.
fn identity_results(exp: &Experiment) -> (Vec<CheckResult>, Vec<ConvergenceResult>) {
    let p = exp.problem.as_ref();
    let ic = exp.config.identity.as_ref().expect("resolved");
    let (levels, seeds) = (ic.levels.unwrap(), ic.seeds.unwrap());
    let results: Vec<ConvergenceResult> = (0..seeds)
        .map(|seed| {
            let field = trial_field(p, seed);
            let mut r = identity_convergence(p, &field, 0.3, [0.4, 1.1], levels);
            r.label = format!("{} seed {seed}", r.label);
            r
        })
        .collect();
    let c = exp.checks();
    let checks = results
        .iter()
        .map(|r| order_check(&r.label, r, c.order.unwrap(), c.order_tol.unwrap(), c.order_pairs.unwrap()))
        .collect();
    (checks, results)
}

/// Identity-mode summary without writing files.
pub fn identity_summary(exp: &Experiment, stamp: &Stamp) -> Summary {
    let (checks, results) = identity_results(exp);
    summarize(exp, stamp, checks, vec![], &results)
}

fn identity(exp: &Experiment, stamp: &Stamp, dir: &Path, prefix: &str) -> Result<Outcome, RunError> {
    let (checks, results) = identity_results(exp);
    finish(exp, stamp, dir, prefix, checks, vec![], results, vec![])
}

/// Runs the experiment's mode and writes its files.
pub fn execute(exp: &Experiment, stamp: &Stamp) -> Result<Outcome, RunError> {
    let (dir, prefix) = exp.output();
    let dir = Path::new(dir);
    ensure_dir(dir)?;
    match exp.mode {
        Mode::Run | Mode::Divergence => single_run(exp, stamp, dir, prefix),
        Mode::Convergence => convergence(exp, stamp, dir, prefix),
        Mode::Consistency => consistency(exp, stamp, dir, prefix),
        Mode::Identity => identity(exp, stamp, dir, prefix),
    }
}

/// Problems covered by `identity` without `--problem`.
pub fn identity_problems(only: Option<&str>) -> Vec<String> {
    match only {
        Some(p) => vec![p.to_string()],
        None => NAMES.iter().map(|s| s.to_string()).collect(),
    }
}

