use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use multiplier_cli::config::{parse_config, Mode};
use multiplier_cli::runner::{execute, identity_problems, identity_summary, EXIT_CHECK_FAILED, EXIT_ERROR};
use multiplier_cli::Stamp;
use multiplier_core::catalog;
use multiplier_core::grid::BoundaryMode;

/// Conservative finite-difference schemes: runs, conservation reports and
/// convergence tables.
///
/// Config keys can be overridden with `--key.path=value`, for example
/// `--solver.residual_tol=1e-13`, or with `--set key=value`.
#[derive(Debug, Parser)]
#[command(name = "multiplier", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct ConfigArgs {
    /// JSON config, or an output file whose header carries one.
    config: PathBuf,
    /// Override a config key, `key.path=value`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Directory for output files.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List built-in problems, parameters and presets.
    ListProblems {
        #[arg(long)]
        json: bool,
    },
    /// Run the mode named in the config (default `run`).
    Run(ConfigArgs),
    Convergence(ConfigArgs),
    Consistency(ConfigArgs),
    /// Check the discrete divergence identity at every step.
    Divergence(ConfigArgs),
    /// Multiplier identity residual slopes on random trial fields.
    Identity {
        #[arg(long)]
        problem: Option<String>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Also write tables and summaries here.
        #[arg(long)]
        out: Option<String>,
    },
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(s: &str) {
    let _ = std::io::stdout().write_all(s.as_bytes());
}

/// Pulls `--a.b=value` arguments out before clap sees them.
fn split_dotted(args: Vec<String>) -> (Vec<String>, Vec<String>) {
    let mut rest = Vec::new();
    let mut dotted = Vec::new();
    for a in args {
        match a.strip_prefix("--") {
            Some(body) if body.split_once('=').is_some_and(|(k, _)| k.contains('.')) => dotted.push(body.to_string()),
            _ => rest.push(a),
        }
    }
    (rest, dotted)
}

fn list_problems(as_json: bool) {
    let entries = catalog();
    if as_json {
        let v: Vec<_> = entries
            .iter()
            .map(|e| {
                json!({
                    "name": e.info.name,
                    "summary": e.info.summary,
                    "m": e.info.m,
                    "s": e.info.s,
                    "n": e.info.n,
                    "components": e.info.components,
                    "densities": e.info.densities,
                    "params": e.params.iter().map(|(k, v)| (k.to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
                    "presets": e.presets,
                    "defaults": {
                        "T": e.defaults.t_end,
                        "N": e.defaults.steps,
                        "grid": e.defaults.grid.as_ref().map(|g| json!({
                            "extent": g.extent,
                            "lo": g.lo,
                            "hi": g.hi,
                            "boundary": match g.mode {
                                BoundaryMode::Periodic => "periodic",
                                BoundaryMode::Boundary => "boundary",
                            },
                        })),
                    },
                    "order": e.info.joint_order(),
                    "zero_compatible": e.zero_compat.is_some(),
                })
            })
            .collect();
        emit(&format!("{}\n", serde_json::to_string_pretty(&v).expect("catalog serializes")));
        return;
    }
    let mut text = String::new();
    for e in entries {
        let params: Vec<String> = e.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(text, "{:<20} {}", e.info.name, e.info.summary);
        let _ = writeln!(
            text,
            "{:<20} m={} s={} n={} order {}; params {}; presets {}",
            "",
            e.info.m,
            e.info.s,
            e.info.n,
            e.info.joint_order(),
            if params.is_empty() { "none".to_string() } else { params.join(" ") },
            e.presets.join(", ")
        );
    }
    emit(&text);
}

fn run_config(args: ConfigArgs, mode: Option<Mode>, dotted: Vec<String>) -> Result<i32, String> {
    let text = fs::read_to_string(&args.config).map_err(|e| format!("{}: {e}", args.config.display()))?;
    let mut overrides = args.set;
    overrides.extend(dotted);
    if let Some(out) = args.out {
        overrides.push(format!("output.dir={}", json!(out)));
    }
    let exp = parse_config(&text, &overrides)
        .and_then(|c| c.resolve(mode))
        .map_err(|e| e.to_string())?;
    let outcome = execute(&exp, &Stamp::now()).map_err(|e| e.to_string())?;
    emit(&outcome.summary.render());
    for f in &outcome.files {
        emit(&format!("  wrote {}\n", f.display()));
    }
    Ok(outcome.exit_code())
}

fn run_identity(problem: Option<String>, set: Vec<String>, out: Option<String>, dotted: Vec<String>) -> Result<i32, String> {
    let stamp = Stamp::now();
    let mut code = 0;
    for name in identity_problems(problem.as_deref()) {
        let mut overrides = set.clone();
        overrides.extend(dotted.iter().cloned());
        if let Some(dir) = &out {
            overrides.push(format!("output.dir={}", json!(dir)));
        }
        let doc = json!({"problem": name, "mode": "identity"}).to_string();
        let exp = parse_config(&doc, &overrides)
            .and_then(|c| c.resolve(Some(Mode::Identity)))
            .map_err(|e| e.to_string())?;
        let summary = if out.is_some() {
            let outcome = execute(&exp, &stamp).map_err(|e| e.to_string())?;
            for f in &outcome.files {
                emit(&format!("  wrote {}\n", f.display()));
            }
            outcome.summary
        } else {
            identity_summary(&exp, &stamp)
        };
        emit(&summary.render());
        if !summary.passed {
            code = EXIT_CHECK_FAILED;
        }
    }
    Ok(code)
}

fn main() -> ExitCode {
    let (args, dotted) = split_dotted(std::env::args().collect());
    let cli = Cli::parse_from(args);
    let result = match cli.command {
        Command::ListProblems { json } => {
            list_problems(json);
            Ok(0)
        }
        Command::Run(a) => run_config(a, None, dotted),
        Command::Convergence(a) => run_config(a, Some(Mode::Convergence), dotted),
        Command::Consistency(a) => run_config(a, Some(Mode::Consistency), dotted),
        Command::Divergence(a) => run_config(a, Some(Mode::Divergence), dotted),
        Command::Identity { problem, set, out } => run_identity(problem, set, out, dotted),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
