//! Startup of multi-level schemes, damped Newton on the newest level, and
//! whole-run integration with conservation accounting.

use std::fmt;

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use rayon::prelude::*;

use crate::error::{SchemeError, SolverError};
use crate::field::PointJet;
use crate::grid::{BoundaryMode, FieldState, SpatialGrid, TimeGrid, MAX_DIM};
use crate::linalg::DenseLu;
use crate::local::{GridView, Local, Shifted, ZERO};
use crate::problems::{Continuous, InitialData, MultiplierProblem, Stencil, MAX_M};
use crate::scheme::{assemble, PointResidual, FLOOR_FACTOR};
use crate::verify::{ConservationReport, ReportRow};

/// Points per residual sweep above which evaluation goes parallel.
const PAR_THRESHOLD: usize = 256;
/// Unknown count above which the Newton matrix is factored as sparse.
const DENSE_LIMIT: usize = 64;
const LINE_SEARCH_HALVINGS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Predictor {
    Copy,
    LinearExtrapolation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Startup {
    ExactSolution,
    Taylor2,
    Given,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub residual_tol: f64,
    pub max_iters: usize,
    pub jacobian_fd_eps: f64,
    pub predictor: Predictor,
    pub startup: Startup,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            residual_tol: 1e-12,
            max_iters: 50,
            jacobian_fd_eps: 1e-7,
            predictor: Predictor::LinearExtrapolation,
            startup: Startup::Taylor2,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.residual_tol.is_finite() && self.residual_tol > 0.0) {
            return Err(SolverError::Config(format!(
                "residual_tol must be positive, got {}",
                self.residual_tol
            )));
        }
        if self.max_iters == 0 {
            return Err(SolverError::Config("max_iters must be at least 1".into()));
        }
        if !(1e-10..=1e-4).contains(&self.jacobian_fd_eps) {
            return Err(SolverError::Config(format!(
                "jacobian_fd_eps must lie in [1e-10, 1e-4], got {}",
                self.jacobian_fd_eps
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RejectionReason {
    MultiplierSingular(String),
    Nonconvergence { residual: f64, detail: String },
    InadmissibleState(String),
}

impl fmt::Display for RejectionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MultiplierSingular(s) => write!(f, "multiplier-singular: {s}"),
            Self::Nonconvergence { residual, detail } => {
                write!(f, "nonconvergence: residual {residual:e} ({detail})")
            }
            Self::InadmissibleState(s) => write!(f, "inadmissible-state: {s}"),
        }
    }
}

impl From<SchemeError> for RejectionReason {
    fn from(e: SchemeError) -> Self {
        match e {
            SchemeError::Singular { .. } | SchemeError::Unguarded { .. } => {
                Self::MultiplierSingular(e.to_string())
            }
            SchemeError::Inadmissible(_) | SchemeError::Shape { .. } => {
                Self::InadmissibleState(e.to_string())
            }
        }
    }
}

/// Residual diagnostics of the final Newton iterate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepDiagnostics {
    pub max_inv_norm: f64,
    pub max_lambda_norm: f64,
    pub max_floor: f64,
    pub mag_sum: f64,
    /// Accepted above `residual_tol` because the residual sat at its floor.
    pub noise_limited: bool,
    pub limit_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub accepted: bool,
    pub iterations: usize,
    pub residual_norm: f64,
    pub rejection: Option<RejectionReason>,
    pub diagnostics: StepDiagnostics,
}

/// Level 0 (and level 1 for three-level schemes).
pub fn startup_levels(
    p: &dyn MultiplierProblem,
    init: &InitialData,
    grid: &SpatialGrid,
    time: &TimeGrid,
    cfg: &SolverConfig,
) -> Result<FieldState, SolverError> {
    let info = p.info();
    let m = info.m;
    let np = grid.npoints();
    let st = p.stencil();
    if init.u0.len() != m * np {
        return Err(SolverError::Startup(format!(
            "initial data has {} values, expected {}",
            init.u0.len(),
            m * np
        )));
    }
    let mut state = FieldState::new(m, np, st.levels(), init.u0.clone());
    match st.lead {
        0 => {}
        1 => {
            let u1 = match cfg.startup {
                Startup::Given => init
                    .u1
                    .clone()
                    .ok_or_else(|| SolverError::Startup("startup 'given' needs u1".into()))?,
                Startup::ExactSolution => {
                    let mut out = vec![0.0; m * np];
                    if !p.exact(init, time.t0, time.time(1), &mut out) {
                        return Err(SolverError::Startup(format!(
                            "{} has no exact solution for these parameters",
                            info.name
                        )));
                    }
                    out
                }
                Startup::Taylor2 => taylor2(p, init, grid, time)?,
            };
            if u1.len() != m * np {
                return Err(SolverError::Startup("second level has the wrong length".into()));
            }
            state.advance(u1);
        }
        lead => {
            return Err(SolverError::Startup(format!("lead {lead} is not supported")));
        }
    }
    Ok(state)
}

/// Second acceleration from the continuous equation, which is affine in it.
fn taylor2(
    p: &dyn MultiplierProblem,
    init: &InitialData,
    grid: &SpatialGrid,
    time: &TimeGrid,
) -> Result<Vec<f64>, SolverError> {
    let m = p.info().m;
    if grid.dim() != 0 {
        return Err(SolverError::Startup(
            "taylor2 startup is for ODE problems".into(),
        ));
    }
    let ut0 = init
        .ut0
        .as_ref()
        .ok_or_else(|| SolverError::Startup("second-order problem needs an initial velocity".into()))?;
    let eval = |utt: &[f64]| {
        let jet = PointJet {
            t: time.t0,
            orders: (0..m).map(|c| vec![init.u0[c], ut0[c], utt[c]]).collect(),
        };
        let mut out = Continuous::default();
        p.continuous(&jet, &mut out);
        out.f
    };
    let f0 = eval(&[0.0; MAX_M]);
    let mut a = vec![0.0; m * m];
    for j in 0..m {
        let mut e = [0.0; MAX_M];
        e[j] = 1.0;
        let fj = eval(&e);
        for i in 0..m {
            a[i * m + j] = fj[i] - f0[i];
        }
    }
    let lu = DenseLu::factor(a, m);
    if !(lu.min_pivot() > 0.0) {
        return Err(SolverError::Startup(
            "equation does not determine the second derivative".into(),
        ));
    }
    let mut utt: Vec<f64> = f0[..m].iter().map(|v| -v).collect();
    lu.solve(&mut utt);
    let tau = time.tau;
    Ok((0..m)
        .map(|c| init.u0[c] + tau * ut0[c] + 0.5 * tau * tau * utt[c])
        .collect())
}

/// Per-run stepping context: solve set, Jacobian coloring, carried guard scale.
pub struct Stepper<'a> {
    problem: &'a dyn MultiplierProblem,
    grid: &'a SpatialGrid,
    time: TimeGrid,
    cfg: SolverConfig,
    stencil: Stencil,
    m: usize,
    solve: Vec<usize>,
    slot: Vec<usize>,
    /// For each solve position, the solve positions whose residual reads it.
    readers: Vec<Vec<usize>>,
    colors: Vec<Vec<usize>>,
    scale: f64,
}

impl<'a> Stepper<'a> {
    pub fn new(
        problem: &'a dyn MultiplierProblem,
        grid: &'a SpatialGrid,
        time: &TimeGrid,
        cfg: &SolverConfig,
    ) -> Result<Self, SolverError> {
        cfg.validate()?;
        let info = problem.info();
        if grid.dim() != info.n {
            return Err(SolverError::Config(format!(
                "{} is {}-dimensional but the grid has dimension {}",
                info.name,
                info.n,
                grid.dim()
            )));
        }
        let stencil = problem.stencil();
        grid.check_stencil(stencil.back, stencil.fwd)?;
        let solve = grid.solve_set(stencil.back, stencil.fwd);
        let mut slot = vec![usize::MAX; grid.npoints()];
        for (i, &q) in solve.iter().enumerate() {
            slot[q] = i;
        }
        let box_offsets = |lo: [usize; MAX_DIM], hi: [usize; MAX_DIM]| {
            let mut v = Vec::new();
            for a in -(lo[0] as isize)..=hi[0] as isize {
                for b in -(lo[1] as isize)..=hi[1] as isize {
                    v.push([a, b]);
                }
            }
            v
        };
        // J reads q when q - J lies in [-back, fwd], so J = q + [-fwd, back].
        let reader_offsets = box_offsets(stencil.fwd, stencil.back);
        let read_offsets = box_offsets(stencil.back, stencil.fwd);
        let within = |q: usize, offs: &[[isize; MAX_DIM]]| -> Vec<usize> {
            let mut v: Vec<usize> = offs
                .iter()
                .filter_map(|&d| grid.offset(grid.multi(q), d).ok())
                .map(|j| slot[grid.linear(j)])
                .filter(|&s| s != usize::MAX)
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let readers: Vec<Vec<usize>> = solve.iter().map(|&q| within(q, &reader_offsets)).collect();
        let reads: Vec<Vec<usize>> = solve.iter().map(|&q| within(q, &read_offsets)).collect();

        // greedy distance-2 coloring of the column graph
        let mut color = vec![usize::MAX; solve.len()];
        let mut colors: Vec<Vec<usize>> = Vec::new();
        let mut used = Vec::new();
        for i in 0..solve.len() {
            used.clear();
            for &r in &readers[i] {
                for &q in &reads[r] {
                    if color[q] != usize::MAX {
                        used.push(color[q]);
                    }
                }
            }
            let c = (0..).find(|c| !used.contains(c)).unwrap();
            color[i] = c;
            if c == colors.len() {
                colors.push(Vec::new());
            }
            colors[c].push(i);
        }
        Ok(Self {
            problem,
            grid,
            time: *time,
            cfg: *cfg,
            stencil,
            m: info.m,
            solve,
            slot,
            readers,
            colors,
            scale: 0.0,
        })
    }

    pub fn solve_set(&self) -> &[usize] {
        &self.solve
    }

    pub fn color_count(&self) -> usize {
        self.colors.len()
    }

    pub fn guard_scale(&self) -> f64 {
        self.scale
    }

    fn eval(
        &self,
        state: &FieldState,
        new: &[f64],
        n: usize,
        scale: f64,
    ) -> Result<Vec<PointResidual>, SchemeError> {
        let lead = self.stencil.lead;
        let mut levels: Vec<&[f64]> = vec![new];
        for b in 0..=lead {
            levels.push(state.level(b));
        }
        let t_n = self.time.time(n as isize);
        let one = |&q: &usize| {
            let view = GridView::new(
                &levels,
                lead,
                self.m,
                self.grid,
                self.grid.multi(q),
                t_n,
                self.time.tau,
            );
            assemble(self.problem, &view, scale)
        };
        if self.solve.len() >= PAR_THRESHOLD {
            self.solve.par_iter().map(one).collect()
        } else {
            self.solve.iter().map(one).collect()
        }
    }

    fn norm(res: &[PointResidual]) -> f64 {
        res.iter().fold(0.0, |a, r| {
            let v = r.max_abs();
            if v.is_nan() || a.is_nan() {
                f64::NAN
            } else {
                a.max(v)
            }
        })
    }

    fn newton_direction(
        &self,
        state: &FieldState,
        new: &[f64],
        n: usize,
        res: &[PointResidual],
    ) -> Result<(Option<Vec<f64>>, f64), SchemeError> {
        let m = self.m;
        let nunk = self.solve.len() * m;
        // roundoff reach of each residual row: sum_j |J_ij| |u_j|
        let mut reach = vec![0.0f64; nunk];
        let mut triplets: Vec<Triplet<usize, usize, f64>> = Vec::new();
        let mut dense = if nunk <= DENSE_LIMIT {
            Some(vec![0.0; nunk * nunk])
        } else {
            None
        };
        let mut pert = new.to_vec();
        for group in &self.colors {
            for c in 0..m {
                let mut steps = Vec::with_capacity(group.len());
                for &i in group {
                    let k = self.solve[i] * m + c;
                    let e = self.cfg.jacobian_fd_eps * new[k].abs().max(1.0);
                    pert[k] = new[k] + e;
                    steps.push(pert[k] - new[k]);
                }
                let rp = self.eval(state, &pert, n, self.scale)?;
                for (&i, &e) in group.iter().zip(&steps) {
                    pert[self.solve[i] * m + c] = new[self.solve[i] * m + c];
                    let col = i * m + c;
                    for &r in &self.readers[i] {
                        for ci in 0..m {
                            let v = (rp[r].r[ci] - res[r].r[ci]) / e;
                            if v != 0.0 {
                                let row = r * m + ci;
                                reach[row] += v.abs() * new[self.solve[i] * m + c].abs();
                                match dense.as_mut() {
                                    Some(d) => d[row * nunk + col] = v,
                                    None => triplets.push(Triplet::new(row, col, v)),
                                }
                            }
                        }
                    }
                }
            }
        }
        let jac_floor = FLOOR_FACTOR * f64::EPSILON * reach.iter().fold(0.0f64, |a, &v| a.max(v));
        let mut rhs: Vec<f64> = res.iter().flat_map(|r| r.values().iter().map(|v| -v)).collect();
        if let Some(d) = dense {
            let lu = DenseLu::factor(d, nunk);
            if !(lu.min_pivot() > 0.0) {
                return Ok((None, jac_floor));
            }
            lu.solve(&mut rhs);
            return Ok((Some(rhs), jac_floor));
        }
        let a = match SparseColMat::<usize, f64>::try_new_from_triplets(nunk, nunk, &triplets) {
            Ok(a) => a,
            Err(_) => return Ok((None, jac_floor)),
        };
        let lu = match a.sp_lu() {
            Ok(lu) => lu,
            Err(_) => return Ok((None, jac_floor)),
        };
        let b = Col::<f64>::from_fn(nunk, |i| rhs[i]);
        let x = lu.solve(&b);
        let dx: Vec<f64> = (0..nunk).map(|i| x[i]).collect();
        Ok((dx.iter().all(|v| v.is_finite()).then_some(dx), jac_floor))
    }

    /// Solves for the next level and rotates `state` on success.
    pub fn advance(&mut self, state: &mut FieldState) -> StepOutcome {
        let m = self.m;
        let lead = self.stencil.lead;
        let n = state.newest_index() + 1 - lead;
        let newest = state.level(0);
        let mut u = newest.to_vec();
        if self.cfg.predictor == Predictor::LinearExtrapolation && state.len() >= 2 {
            let prev = state.level(1);
            for &q in &self.solve {
                for c in 0..m {
                    let k = q * m + c;
                    u[k] = 2.0 * newest[k] - prev[k];
                }
            }
        }
        let reject = |iters: usize, norm: f64, why: RejectionReason| StepOutcome {
            accepted: false,
            iterations: iters,
            residual_norm: norm,
            rejection: Some(why),
            diagnostics: StepDiagnostics::default(),
        };

        let mut res = match self.eval(state, &u, n, self.scale) {
            Ok(r) => r,
            // the predictor may leave the admissible set; retry from a copy
            Err(_) if u.as_slice() != newest => {
                u.copy_from_slice(newest);
                match self.eval(state, &u, n, self.scale) {
                    Ok(r) => r,
                    Err(e) => return reject(0, f64::NAN, e.into()),
                }
            }
            Err(e) => return reject(0, f64::NAN, e.into()),
        };
        self.bump_scale(&res);
        let mut norm = Self::norm(&res);
        let mut iters = 0;
        let tol = self.cfg.residual_tol;
        let mut noise = false;
        let mut jac_floor = 0.0f64;
        loop {
            let floor = res.iter().fold(jac_floor, |a, r| a.max(r.floor));
            if norm <= tol {
                break;
            }
            if iters >= self.cfg.max_iters {
                if norm <= tol + floor {
                    noise = true;
                    break;
                }
                return reject(
                    iters,
                    norm,
                    RejectionReason::Nonconvergence {
                        residual: norm,
                        detail: format!("iteration cap {} reached", self.cfg.max_iters),
                    },
                );
            }
            let dir = match self.newton_direction(state, &u, n, &res) {
                Ok((d, jf)) => {
                    jac_floor = jf;
                    d
                }
                Err(e) => return reject(iters, norm, e.into()),
            };
            iters += 1;
            let mut improved = None;
            let mut last_err = None;
            if let Some(dx) = dir {
                let mut alpha = 1.0;
                for _ in 0..LINE_SEARCH_HALVINGS {
                    let mut trial = u.clone();
                    for (i, &q) in self.solve.iter().enumerate() {
                        for c in 0..m {
                            trial[q * m + c] += alpha * dx[i * m + c];
                        }
                    }
                    match self.eval(state, &trial, n, self.scale) {
                        Ok(rt) => {
                            let nt = Self::norm(&rt);
                            if nt < norm {
                                improved = Some((trial, rt, nt));
                                break;
                            }
                        }
                        Err(e) => last_err = Some(e),
                    }
                    alpha *= 0.5;
                }
            }
            match improved {
                Some((trial, rt, nt)) => {
                    let stalled = nt > 0.5 * norm;
                    u = trial;
                    res = rt;
                    self.bump_scale(&res);
                    norm = nt;
                    let floor = res.iter().fold(jac_floor, |a, r| a.max(r.floor));
                    if norm > tol && stalled && norm <= tol + floor {
                        noise = true;
                        break;
                    }
                }
                None => {
                    let floor = floor.max(jac_floor);
                    if norm <= tol + floor {
                        noise = true;
                        break;
                    }
                    let why = match last_err {
                        Some(e @ (SchemeError::Singular { .. } | SchemeError::Unguarded { .. })) => {
                            e.into()
                        }
                        _ => RejectionReason::Nonconvergence {
                            residual: norm,
                            detail: "no descent along the Newton direction".into(),
                        },
                    };
                    return reject(iters, norm, why);
                }
            }
        }
        if !u.iter().all(|v| v.is_finite()) {
            return reject(
                iters,
                norm,
                RejectionReason::InadmissibleState("non-finite values".into()),
            );
        }
        let mut d = StepDiagnostics {
            noise_limited: noise,
            max_floor: jac_floor,
            ..Default::default()
        };
        for r in &res {
            d.max_inv_norm = d.max_inv_norm.max(r.inv_norm);
            d.max_lambda_norm = d.max_lambda_norm.max(r.lambda_norm);
            d.max_floor = d.max_floor.max(r.floor);
            d.mag_sum += r.mag;
            if r.branch == crate::scheme::Branch::ZeroLimit {
                d.limit_points += 1;
            }
        }
        state.advance(u);
        StepOutcome {
            accepted: true,
            iterations: iters,
            residual_norm: norm,
            rejection: None,
            diagnostics: d,
        }
    }

    fn bump_scale(&mut self, res: &[PointResidual]) {
        for r in res {
            self.scale = self.scale.max(r.lambda_scale);
        }
    }

    /// Density totals over the solve set and the telescoped boundary flux
    /// at evaluation index `newest - lead` of `state`.
    pub fn accounting(&self, state: &FieldState) -> (Vec<f64>, Vec<f64>) {
        let info = self.problem.info();
        let (s, lead) = (info.s, self.stencil.lead);
        let n = state.newest_index() - lead;
        let levels: Vec<&[f64]> = (0..=lead).map(|b| state.level(b)).collect();
        let t_n = self.time.time(n as isize);
        let mut totals = vec![0.0; s];
        let mut bflux = vec![0.0; s];
        let mut buf = [0.0; MAX_M];
        let h = self.grid.h();
        for &q in &self.solve {
            let j = self.grid.multi(q);
            let view = GridView::new(&levels, lead, self.m, self.grid, j, t_n, self.time.tau);
            self.problem.density(&view, &mut buf[..s]);
            for k in 0..s {
                totals[k] += buf[k];
            }
            for axis in 0..info.n {
                if self.grid.mode(axis) == BoundaryMode::Periodic {
                    continue;
                }
                let inside = |off: isize| {
                    self.grid
                        .offset_axis(j, axis, off)
                        .map(|x| self.slot[self.grid.linear(x)] != usize::MAX)
                        .unwrap_or(false)
                };
                if !inside(1) {
                    self.problem.flux(&view, axis, &mut buf[..s]);
                    for k in 0..s {
                        bflux[k] += buf[k] / h;
                    }
                }
                if !inside(-1) {
                    let mut d = ZERO;
                    d[axis] = -1;
                    let back = Shifted {
                        inner: &view as &dyn Local,
                        dt: 0,
                        dx: d,
                    };
                    self.problem.flux(&back, axis, &mut buf[..s]);
                    for k in 0..s {
                        bflux[k] -= buf[k] / h;
                    }
                }
            }
        }
        (totals, bflux)
    }
}

/// One step with a fresh [`Stepper`].
pub fn advance_step(
    p: &dyn MultiplierProblem,
    state: &mut FieldState,
    grid: &SpatialGrid,
    time: &TimeGrid,
    cfg: &SolverConfig,
) -> Result<StepOutcome, SolverError> {
    Ok(Stepper::new(p, grid, time, cfg)?.advance(state))
}

/// Passed to observers after each accepted step (and once after startup).
pub struct StepEvent<'a> {
    /// Time index of the newest level.
    pub k: usize,
    pub t: f64,
    pub state: &'a FieldState,
    pub row: &'a ReportRow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    /// Every level from 0 to the last accepted one.
    pub trajectory: Vec<Vec<f64>>,
    pub times: Vec<f64>,
    pub report: ConservationReport,
    pub failure: Option<(usize, RejectionReason)>,
    pub state: FieldState,
}

impl Run {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn last(&self) -> &[f64] {
        self.trajectory.last().expect("startup level present")
    }
}

pub type Observer<'o> = &'o mut dyn FnMut(&StepEvent<'_>);

pub fn integrate(
    p: &dyn MultiplierProblem,
    init: &InitialData,
    grid: &SpatialGrid,
    time: &TimeGrid,
    cfg: &SolverConfig,
    mut observer: Option<Observer<'_>>,
) -> Result<Run, SolverError> {
    let stepper_cfg = *cfg;
    let mut stepper = Stepper::new(p, grid, time, &stepper_cfg)?;
    let mut state = startup_levels(p, init, grid, time, cfg)?;
    let lead = p.stencil().lead;
    let info = p.info();
    let mut trajectory: Vec<Vec<f64>> = (0..state.len()).rev().map(|b| state.level(b).to_vec()).collect();
    let mut times: Vec<f64> = (0..trajectory.len()).map(|k| time.time(k as isize)).collect();
    let mut report = ConservationReport::new(info.densities, stepper.solve_set().len());

    let (totals, bflux) = stepper.accounting(&state);
    let s = info.s;
    let first = ReportRow {
        step: 0,
        time: time.t0,
        totals,
        boundary_flux: bflux,
        divergence: vec![0.0; s],
        divergence_bound: 0.0,
        applicable: false,
        newton_iters: 0,
        residual_norm: 0.0,
        max_inv_norm: 0.0,
        noise_limited: false,
    };
    report.rows.push(first);
    if let Some(obs) = observer.as_mut() {
        let k = state.newest_index();
        obs(&StepEvent {
            k,
            t: time.time(k as isize),
            state: &state,
            row: report.rows.last().unwrap(),
        });
    }

    let mut failure = None;
    while state.newest_index() < time.steps {
        let out = stepper.advance(&mut state);
        if !out.accepted {
            failure = Some((
                state.newest_index() + 1,
                out.rejection.expect("rejected steps carry a reason"),
            ));
            break;
        }
        let k = state.newest_index();
        trajectory.push(state.level(0).to_vec());
        times.push(time.time(k as isize));
        let n = k - lead;
        let (totals, bflux) = stepper.accounting(&state);
        let prev = &report.rows.last().unwrap().totals;
        let divergence: Vec<f64> = (0..s)
            .map(|j| (totals[j] - prev[j]) / time.tau + bflux[j])
            .collect();
        let d = out.diagnostics;
        let bound = (cfg.residual_tol + d.max_floor)
            * stepper.solve_set().len() as f64
            * d.max_lambda_norm
            + 64.0 * f64::EPSILON * d.mag_sum;
        report.rows.push(ReportRow {
            step: n,
            time: time.time(n as isize),
            totals,
            boundary_flux: bflux,
            divergence,
            divergence_bound: bound,
            applicable: d.limit_points == 0,
            newton_iters: out.iterations,
            residual_norm: out.residual_norm,
            max_inv_norm: d.max_inv_norm,
            noise_limited: d.noise_limited,
        });
        if let Some(obs) = observer.as_mut() {
            obs(&StepEvent {
                k,
                t: time.time(k as isize),
                state: &state,
                row: report.rows.last().unwrap(),
            });
        }
    }
    Ok(Run {
        trajectory,
        times,
        report,
        failure,
        state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::*;

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let d = SolverConfig::default();
        for bad in [
            SolverConfig { jacobian_fd_eps: 1e-3, ..d },
            SolverConfig { max_iters: 0, ..d },
            SolverConfig { residual_tol: 0.0, ..d },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn coloring_is_distance_two() {
        let p = Kdv::new();
        let grid = SpatialGrid::periodic(&[16], 0.0, std::f64::consts::TAU).unwrap();
        let time = TimeGrid::new(0.0, 0.1, 1).unwrap();
        let st = Stepper::new(&p, &grid, &time, &SolverConfig::default()).unwrap();
        // stencil reach 4 in total, so 7-point conflict neighborhoods
        assert!(st.color_count() >= 4 && st.color_count() <= 8);
        for g in &st.colors {
            for (a, &i) in g.iter().enumerate() {
                for &j in &g[a + 1..] {
                    let overlap = st.readers[i].iter().any(|r| st.readers[j].contains(r));
                    assert!(!overlap, "columns {i} and {j} share a row");
                }
            }
        }
    }

    #[test]
    fn missing_velocity_is_an_error() {
        let p = Pendulum::new(1.0, 1.0);
        let grid = SpatialGrid::point();
        let time = TimeGrid::new(0.0, 0.1, 10).unwrap();
        let init = InitialData::values(vec![0.5]);
        let e = startup_levels(&p, &init, &grid, &time, &SolverConfig::default());
        assert!(matches!(e, Err(SolverError::Startup(_))));
    }

    #[test]
    fn one_level_startup_is_identity() {
        let p = Lorenz::new(10.0, 28.0);
        let grid = SpatialGrid::point();
        let time = TimeGrid::new(0.0, 0.1, 10).unwrap();
        let init = InitialData::values(vec![1.0, 2.0, 3.0]);
        let s = startup_levels(&p, &init, &grid, &time, &SolverConfig::default()).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.level(0), &[1.0, 2.0, 3.0]);
    }
}
