use thiserror::Error;

use crate::grid::Index;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("time step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("time origin must be finite, got {0}")]
    BadOrigin(f64),
    #[error("at least one time step is required")]
    NoSteps,
    #[error("mesh width must be positive and finite, got {0}")]
    BadWidth(f64),
    #[error("spatial dimension {0} is not supported (0, 1 or 2)")]
    Dimension(usize),
    #[error("axis counts disagree: extent {extent}, mode {mode}, origin {origin}")]
    AxisCount {
        extent: usize,
        mode: usize,
        origin: usize,
    },
    #[error("axis {0} has no points")]
    EmptyAxis(usize),
    #[error("axis {axis} does not exist on a {dim}-d grid")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("offset {offset} along axis {axis} from {index:?} leaves the mesh")]
    OutOfRange {
        index: Index,
        axis: usize,
        offset: isize,
    },
    #[error("axis {axis} has {extent} points but the stencil needs {width}")]
    TooNarrow {
        axis: usize,
        extent: usize,
        width: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemeError {
    #[error("multiplier is singular (pivot {pivot:e} below guard {guard:e})")]
    Singular { pivot: f64, guard: f64 },
    #[error("multiplier vanishes (|lambda| = {value:e}) and no zero-compatible limit is declared")]
    Unguarded { value: f64 },
    #[error("state outside the admissible set: {0}")]
    Inadmissible(String),
    #[error("{case} assembly does not apply to m={m}, s={s}")]
    Shape { case: &'static str, m: usize, s: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("unknown problem '{0}'")]
    Unknown(String),
    #[error("problem '{problem}' has no parameter '{name}'")]
    UnknownParam { problem: String, name: String },
    #[error("parameter '{name}' = {value} is out of range: {why}")]
    ParamRange {
        name: String,
        value: f64,
        why: &'static str,
    },
    #[error("unknown initial-data preset '{0}'")]
    UnknownPreset(String),
    #[error("initial data: {0}")]
    InitialData(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("solver configuration: {0}")]
    Config(String),
    #[error("startup: {0}")]
    Startup(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("run with {steps} steps stopped at step {at}: {reason}")]
    Rejected {
        steps: usize,
        at: usize,
        reason: String,
    },
    #[error("no exact reference: {0}")]
    NoReference(String),
    #[error("at least {0} resolutions are required")]
    TooFew(usize),
}
