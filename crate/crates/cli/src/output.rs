//! Output files. Every file starts with `#` header lines carrying the
//! version, a timestamp and the resolved config; bodies depend only on the
//! config and the build.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use multiplier_core::solver::Run;
use multiplier_core::verify::{divergence_check, Check, ConvergenceResult};

use crate::config::{ExperimentConfig, CONFIG_MARKER};

pub const STEP_COLUMNS: [&str; 8] = [
    "step",
    "time",
    "component",
    "total_density",
    "boundary_flux_sum",
    "divergence_residual",
    "newton_iters",
    "residual_norm",
];

pub const TABLE_COLUMNS: [&str; 4] = ["quantity", "resolution", "error", "order"];

/// Provenance written above every body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Stamp {
    pub version: String,
    pub generated: String,
}

impl Stamp {
    pub fn now() -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            generated: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }
}

/// Seventeen significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn header(stamp: &Stamp, config: &ExperimentConfig) -> String {
    format!(
        "# multiplier {}\n# generated: {}\n{CONFIG_MARKER}{}\n",
        stamp.version,
        stamp.generated,
        serde_json::to_string(config).expect("config serializes")
    )
}

fn csv_bytes(columns: &[&str], rows: impl IntoIterator<Item = Vec<String>>, with_header: bool) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if with_header {
        w.write_record(columns).expect("in-memory write");
    }
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// One row per accounting step and density. Rows whose divergence identity
/// does not apply leave `divergence_residual` empty.
pub fn step_rows(run: &Run) -> Vec<Vec<String>> {
    let names = run.report.densities;
    let mut out = Vec::with_capacity(run.report.rows.len() * names.len());
    for row in &run.report.rows {
        let applicable = divergence_check(row) != Check::NotApplicable;
        for (j, name) in names.iter().enumerate() {
            out.push(vec![
                row.step.to_string(),
                num(row.time),
                name.to_string(),
                num(row.totals[j]),
                num(row.boundary_flux[j]),
                if applicable { num(row.divergence[j]) } else { String::new() },
                row.newton_iters.to_string(),
                num(row.residual_norm),
            ]);
        }
    }
    out
}

pub fn steps_body(run: &Run) -> Vec<u8> {
    csv_bytes(&STEP_COLUMNS, step_rows(run), true)
}

/// Body of one convergence sub-run without the column line.
pub fn sub_run_body(k: usize, steps: usize, run: &Run) -> Vec<u8> {
    let rows = step_rows(run).into_iter().map(|mut r| {
        r.insert(0, steps.to_string());
        r.insert(0, k.to_string());
        r
    });
    csv_bytes(&[], rows, false)
}

pub fn merged_columns() -> Vec<&'static str> {
    let mut c = vec!["sub_run", "steps"];
    c.extend(STEP_COLUMNS);
    c
}

pub fn table_body(results: &[ConvergenceResult]) -> Vec<u8> {
    let mut rows = Vec::new();
    for r in results {
        for (i, ((tau, _), err)) in r.resolutions.iter().zip(&r.errors).enumerate() {
            rows.push(vec![
                r.label.clone(),
                num(*tau),
                num(*err),
                if i == 0 { String::new() } else { num(r.orders[i - 1]) },
            ]);
        }
    }
    csv_bytes(&TABLE_COLUMNS, rows, true)
}

pub fn write_file(path: &Path, head: &str, body: &[u8]) -> io::Result<()> {
    let mut f = io::BufWriter::new(fs::File::create(path)?);
    f.write_all(head.as_bytes())?;
    f.write_all(body)?;
    f.flush()
}

/// Concatenates sub-run parts in index order under one column line.
pub fn merge_parts(parts: &[PathBuf], dest: &Path, head: &str) -> io::Result<()> {
    let mut f = io::BufWriter::new(fs::File::create(dest)?);
    f.write_all(head.as_bytes())?;
    f.write_all(&csv_bytes(&merged_columns(), std::iter::empty(), true))?;
    for p in parts {
        f.write_all(&fs::read(p)?)?;
    }
    f.flush()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityStat {
    pub name: String,
    pub spread: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct DivergenceStat {
    pub pass: usize,
    pub fail: usize,
    pub not_applicable: usize,
    pub failing_steps: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub step: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunStats {
    pub steps_completed: usize,
    pub steps_requested: usize,
    pub densities: Vec<DensityStat>,
    /// Largest `||Lambda~^{-1}||` met by an accepted step.
    pub max_gamma: f64,
    pub noise_limited_steps: usize,
    pub divergence: DivergenceStat,
    pub failure: Option<Failure>,
}

impl RunStats {
    pub fn of(run: &Run, steps_requested: usize) -> Self {
        let spread = run.report.spread();
        let scale = run.report.density_scale();
        let mut div = DivergenceStat::default();
        for row in &run.report.rows {
            match divergence_check(row) {
                Check::Pass => div.pass += 1,
                Check::Fail => {
                    div.fail += 1;
                    div.failing_steps.push(row.step);
                }
                Check::NotApplicable => div.not_applicable += 1,
            }
        }
        Self {
            steps_completed: run.trajectory.len().saturating_sub(1),
            steps_requested,
            densities: run
                .report
                .densities
                .iter()
                .enumerate()
                .map(|(j, n)| DensityStat {
                    name: n.to_string(),
                    spread: spread[j],
                    scale: scale[j],
                })
                .collect(),
            max_gamma: run.report.max_inv_norm(),
            noise_limited_steps: run.report.rows.iter().filter(|r| r.noise_limited).count(),
            divergence: div,
            failure: run.failure.as_ref().map(|(step, why)| Failure {
                step: *step,
                reason: why.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub quantity: String,
    pub tau: f64,
    pub h: f64,
    pub error: f64,
    pub order: Option<f64>,
}

pub fn table_rows(results: &[ConvergenceResult]) -> Vec<TableRow> {
    let mut out = Vec::new();
    for r in results {
        for (i, (&(tau, h), &error)) in r.resolutions.iter().zip(&r.errors).enumerate() {
            out.push(TableRow {
                quantity: r.label.clone(),
                tau,
                h,
                error,
                order: if i == 0 { None } else { Some(r.orders[i - 1]) },
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub version: String,
    pub generated: String,
    pub config: ExperimentConfig,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub runs: Vec<RunStats>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub table: Vec<TableRow>,
}

impl Summary {
    /// Human-readable form for the terminal.
    pub fn render(&self) -> String {
        let mode = self.config.mode.map(|m| m.to_string()).unwrap_or_default();
        let mut s = format!(
            "{} {}: {}\n",
            self.config.problem,
            mode,
            if self.passed { "PASS" } else { "FAIL" }
        );
        for (i, r) in self.runs.iter().enumerate() {
            let tag = if self.runs.len() > 1 { format!("run {i}: ") } else { String::new() };
            s += &format!("  {tag}steps {}/{}\n", r.steps_completed, r.steps_requested);
            for d in &r.densities {
                s += &format!("  {tag}spread {} = {:.3e} (scale {:.3e})\n", d.name, d.spread, d.scale);
            }
            s += &format!(
                "  {tag}max gamma {:.3e}, divergence {} pass / {} fail / {} n/a\n",
                r.max_gamma, r.divergence.pass, r.divergence.fail, r.divergence.not_applicable
            );
            if let Some(f) = &r.failure {
                s += &format!("  {tag}rejected at step {}: {}\n", f.step, f.reason);
            }
        }
        if !self.table.is_empty() {
            s += &format!("  {:<32} {:>12} {:>12} {:>8}\n", "quantity", "resolution", "error", "order");
            for r in &self.table {
                let order = r.order.map(|o| format!("{o:.3}")).unwrap_or_default();
                s += &format!("  {:<32} {:>12.4e} {:>12.4e} {:>8}\n", r.quantity, r.tau, r.error, order);
            }
        }
        for c in &self.checks {
            s += &format!("  [{}] {}: {}\n", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
        }
        s
    }
}
