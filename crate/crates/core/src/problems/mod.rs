//! Built-in problems: continuous objects plus their discrete counterparts.

use std::collections::BTreeMap;

use crate::error::ProblemError;
use crate::field::{Jet, TrigField};
use crate::grid::{BoundaryMode, SpatialGrid, MAX_DIM};
use crate::local::Local;

mod burgers;
mod dho;
mod factored;
mod kdv;
mod lorenz;
mod lotka_volterra;
mod manufactured;
mod pendulum;
mod shallow_water;
mod two_body;

pub use burgers::{classical_burgers_residual, Burgers};
pub use dho::Dho;
pub use factored::FactoredOscillator;
pub use kdv::Kdv;
pub use lorenz::Lorenz;
pub use lotka_volterra::LotkaVolterra;
pub use manufactured::Manufactured;
pub use pendulum::Pendulum;
pub use shallow_water::{ShallowWater, SwTerms};
pub use two_body::TwoBody;

/// Largest equation count among the built-ins.
pub const MAX_M: usize = 3;

pub const NAMES: [&str; 10] = [
    "pendulum",
    "dho",
    "two_body",
    "lotka_volterra",
    "lorenz",
    "burgers",
    "kdv",
    "shallow_water",
    "factored_oscillator",
    "manufactured",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInfo {
    pub name: &'static str,
    pub summary: &'static str,
    /// Equations.
    pub m: usize,
    /// Conservation laws.
    pub s: usize,
    /// Spatial dimension.
    pub n: usize,
    /// Time offset of the newest unknown relative to the evaluation index.
    pub lead: usize,
    pub order_time: u32,
    pub order_space: u32,
    pub components: &'static [&'static str],
    pub densities: &'static [&'static str],
}

impl ProblemInfo {
    /// Order observed when `tau` and `h` are refined together.
    pub fn joint_order(&self) -> u32 {
        if self.n == 0 {
            self.order_time
        } else {
            self.order_time.min(self.order_space)
        }
    }
}

/// Offsets the assembled residual reads on the newest level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stencil {
    pub lead: usize,
    pub back: [usize; MAX_DIM],
    pub fwd: [usize; MAX_DIM],
}

impl Stencil {
    pub fn ode(lead: usize) -> Self {
        Self {
            lead,
            back: [0; MAX_DIM],
            fwd: [0; MAX_DIM],
        }
    }

    /// Time levels a single step needs (evaluation index `n - 1` through
    /// `n + lead`).
    pub fn levels(&self) -> usize {
        self.lead + 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroCompat {
    pub order: u32,
}

/// Continuous `F`, `Lambda` (`s x m`, row-major), `psi` and `Phi` at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Continuous {
    pub f: [f64; MAX_M],
    pub lambda: [f64; MAX_M * MAX_M],
    pub psi: [f64; MAX_M],
    pub flux: [[f64; MAX_M]; MAX_DIM],
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub extent: Vec<usize>,
    pub lo: f64,
    pub hi: f64,
    pub mode: BoundaryMode,
}

impl GridSpec {
    pub fn build(&self) -> Result<SpatialGrid, crate::error::GridError> {
        let n = *self.extent.first().unwrap_or(&1);
        let h = (self.hi - self.lo) / n as f64;
        let modes = vec![self.mode; self.extent.len()];
        let origin = vec![self.lo; self.extent.len()];
        SpatialGrid::new(h, &self.extent, &modes, &origin)
    }
}

/// Default experiment settings for a problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Defaults {
    pub t_end: f64,
    pub steps: usize,
    pub grid: Option<GridSpec>,
    pub preset: &'static str,
}

/// Manufactured field and sample points for consistency studies.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencySetup {
    pub field: TrigField,
    pub points: Vec<(f64, [f64; MAX_DIM])>,
    pub tau0: f64,
    /// `h / tau`, held fixed under refinement.
    pub h_ratio: f64,
}

/// Initial data on the mesh; values laid out like a [`crate::grid::FieldState`] level.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub u0: Vec<f64>,
    pub ut0: Option<Vec<f64>>,
    pub u1: Option<Vec<f64>>,
}

impl InitialData {
    pub fn values(u0: Vec<f64>) -> Self {
        Self {
            u0,
            ut0: None,
            u1: None,
        }
    }

    pub fn with_velocity(u0: Vec<f64>, ut0: Vec<f64>) -> Self {
        Self {
            u0,
            ut0: Some(ut0),
            u1: None,
        }
    }
}

pub trait MultiplierProblem: Send + Sync {
    fn info(&self) -> &ProblemInfo;
    fn params(&self) -> Vec<(&'static str, f64)>;
    fn stencil(&self) -> Stencil;

    /// `psi^{tau,h}` at the evaluation index (`s` values).
    fn density(&self, at: &dyn Local, out: &mut [f64]);
    /// `Phi^{tau,h}` along `axis` (`s` values).
    fn flux(&self, _at: &dyn Local, _axis: usize, _out: &mut [f64]) {}
    /// `Lambda^{tau,h}` as an `s x m` row-major block; the leading `s x s`
    /// part is `Lambda~`, the trailing columns are `Sigma`.
    fn multiplier(&self, at: &dyn Local, out: &mut [f64]);
    /// `G^{tau,h}` (`m - s` values).
    fn remainder(&self, _at: &dyn Local, _out: &mut [f64]) {}
    /// Closed form of `(psi_n - psi_{n-1}) / tau` with the multiplier
    /// factor kept explicit. Returns false when not provided.
    fn time_derivative(&self, _at: &dyn Local, _out: &mut [f64]) -> bool {
        false
    }
    fn zero_compat(&self) -> Option<ZeroCompat> {
        None
    }
    /// Limit of `D_t psi / lambda` on the zero set of `lambda`.
    fn zero_limit(&self, _at: &dyn Local) -> Option<f64> {
        None
    }
    /// The simplified residual as printed for this scheme.
    fn printed_residual(&self, at: &dyn Local, out: &mut [f64]);
    fn admissible(&self, _at: &dyn Local) -> Result<(), String> {
        Ok(())
    }

    fn continuous(&self, jet: &dyn Jet, out: &mut Continuous);

    /// Means for random trial fields, chosen inside the admissible set.
    fn trial_means(&self) -> Vec<f64> {
        vec![0.0; self.info().m]
    }
    fn trial_amplitude(&self) -> f64 {
        0.6
    }

    /// Exact solution from ODE initial data at `t0`, when known.
    fn exact(&self, _init: &InitialData, _t0: f64, _t: f64, _out: &mut [f64]) -> bool {
        false
    }

    fn presets(&self) -> &'static [&'static str] {
        &["default"]
    }
    fn initial(&self, preset: &str, grid: &SpatialGrid) -> Result<InitialData, ProblemError>;
    fn defaults(&self) -> Defaults;
    fn consistency_setup(&self) -> ConsistencySetup;
}

pub type ParamSet = BTreeMap<String, f64>;

pub(crate) struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
    pub check: fn(f64) -> Result<(), &'static str>,
}

pub(crate) fn positive(v: f64) -> Result<(), &'static str> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err("must be positive")
    }
}

pub(crate) fn non_negative(v: f64) -> Result<(), &'static str> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err("must be non-negative")
    }
}

pub(crate) fn finite(v: f64) -> Result<(), &'static str> {
    if v.is_finite() {
        Ok(())
    } else {
        Err("must be finite")
    }
}

pub(crate) fn positive_integer(v: f64) -> Result<(), &'static str> {
    if v.is_finite() && v >= 1.0 && v.fract() == 0.0 && v <= 64.0 {
        Ok(())
    } else {
        Err("must be an integer in 1..=64")
    }
}

/// Resolves `given` against `specs`, filling defaults and checking ranges.
pub(crate) fn resolve(
    problem: &str,
    specs: &[ParamSpec],
    given: &ParamSet,
) -> Result<Vec<f64>, ProblemError> {
    for k in given.keys() {
        if !specs.iter().any(|s| s.name == k) {
            return Err(ProblemError::UnknownParam {
                problem: problem.to_string(),
                name: k.clone(),
            });
        }
    }
    specs
        .iter()
        .map(|s| {
            let v = given.get(s.name).copied().unwrap_or(s.default);
            (s.check)(v).map_err(|why| ProblemError::ParamRange {
                name: s.name.to_string(),
                value: v,
                why,
            })?;
            Ok(v)
        })
        .collect()
}

pub(crate) fn ode_initial(
    m: usize,
    grid: &SpatialGrid,
    u0: &[f64],
    ut0: Option<&[f64]>,
) -> Result<InitialData, ProblemError> {
    if grid.dim() != 0 {
        return Err(ProblemError::InitialData(
            "ODE problems take a zero-dimensional grid".into(),
        ));
    }
    debug_assert_eq!(u0.len(), m);
    Ok(InitialData {
        u0: u0.to_vec(),
        ut0: ut0.map(|v| v.to_vec()),
        u1: None,
    })
}

/// Integer power by repeated multiplication.
#[inline]
pub(crate) fn ipow(u: f64, p: usize) -> f64 {
    let mut r = 1.0;
    for _ in 0..p {
        r *= u;
    }
    r
}

/// Parameter names and defaults of a built-in.
pub fn param_defaults(name: &str) -> Result<Vec<(&'static str, f64)>, ProblemError> {
    Ok(instantiate(name, &ParamSet::new())?.params())
}

pub fn instantiate(name: &str, params: &ParamSet) -> Result<Box<dyn MultiplierProblem>, ProblemError> {
    Ok(match name {
        "pendulum" => Box::new(Pendulum::from_params(params)?),
        "dho" => Box::new(Dho::from_params(params)?),
        "two_body" => Box::new(TwoBody::from_params(params)?),
        "lotka_volterra" => Box::new(LotkaVolterra::from_params(params)?),
        "lorenz" => Box::new(Lorenz::from_params(params)?),
        "burgers" => Box::new(Burgers::from_params(params)?),
        "kdv" => Box::new(Kdv::from_params(params)?),
        "shallow_water" => Box::new(ShallowWater::from_params(params)?),
        "factored_oscillator" => Box::new(FactoredOscillator::from_params(params)?),
        "manufactured" => Box::new(Manufactured::from_params(params)?),
        other => return Err(ProblemError::Unknown(other.to_string())),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub info: ProblemInfo,
    pub params: Vec<(&'static str, f64)>,
    pub defaults: Defaults,
    pub presets: &'static [&'static str],
    pub zero_compat: Option<ZeroCompat>,
}

pub fn catalog() -> Vec<CatalogEntry> {
    NAMES
        .iter()
        .map(|n| {
            let p = instantiate(n, &ParamSet::new()).expect("built-in defaults are valid");
            CatalogEntry {
                info: p.info().clone(),
                params: p.params(),
                defaults: p.defaults(),
                presets: p.presets(),
                zero_compat: p.zero_compat(),
            }
        })
        .collect()
}

/// Every built-in at default parameters.
pub fn all() -> Vec<Box<dyn MultiplierProblem>> {
    NAMES
        .iter()
        .map(|n| instantiate(n, &ParamSet::new()).expect("built-in defaults are valid"))
        .collect()
}
