//! Executable checks: multiplier identity, divergence identity,
//! conservation accounting, consistency and convergence orders.

use rayon::prelude::*;

use crate::error::{SolverError, VerifyError};
use crate::field::{Field, FieldJet, PointJet, TrigField};
use crate::grid::{SpatialGrid, TimeGrid, MAX_DIM};
use crate::local::Sampled;
use crate::problems::{ConsistencySetup, Continuous, GridSpec, InitialData, MultiplierProblem};
use crate::scheme::assemble;
use crate::solver::{integrate, Run, SolverConfig};

/// Called once per finished sub-run with its refinement index.
pub type SubRunHook<'a> = &'a (dyn Fn(usize, &Run) + Sync);

/// One accounting row. `step` is the evaluation index of the densities.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub step: usize,
    pub time: f64,
    pub totals: Vec<f64>,
    pub boundary_flux: Vec<f64>,
    /// `(total_n - total_{n-1}) / tau + boundary flux`.
    pub divergence: Vec<f64>,
    pub divergence_bound: f64,
    /// False for the startup row and steps that used a limit branch.
    pub applicable: bool,
    pub newton_iters: usize,
    pub residual_norm: f64,
    pub max_inv_norm: f64,
    pub noise_limited: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConservationReport {
    pub densities: &'static [&'static str],
    /// Points summed per total.
    pub points: usize,
    pub rows: Vec<ReportRow>,
}

impl ConservationReport {
    pub fn new(densities: &'static [&'static str], points: usize) -> Self {
        Self {
            densities,
            points,
            rows: Vec::new(),
        }
    }

    /// `max_k - min_k` of each total.
    pub fn spread(&self) -> Vec<f64> {
        (0..self.densities.len())
            .map(|j| {
                let (lo, hi) = self.rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                    (lo.min(r.totals[j]), hi.max(r.totals[j]))
                });
                if self.rows.is_empty() {
                    0.0
                } else {
                    hi - lo
                }
            })
            .collect()
    }

    /// Largest `|total|` per component.
    pub fn density_scale(&self) -> Vec<f64> {
        (0..self.densities.len())
            .map(|j| self.rows.iter().fold(0.0f64, |a, r| a.max(r.totals[j].abs())))
            .collect()
    }

    pub fn max_inv_norm(&self) -> f64 {
        self.rows.iter().fold(0.0, |a, r| a.max(r.max_inv_norm))
    }

    /// Steps whose divergence identity failed.
    pub fn divergence_failures(&self) -> Vec<usize> {
        self.rows
            .iter()
            .filter(|r| divergence_check(r) == Check::Fail)
            .map(|r| r.step)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    Pass,
    Fail,
    NotApplicable,
}

pub fn divergence_check(row: &ReportRow) -> Check {
    if !row.applicable {
        return Check::NotApplicable;
    }
    if row.divergence.iter().all(|d| d.abs() <= row.divergence_bound) {
        Check::Pass
    } else {
        Check::Fail
    }
}

/// Resolutions, errors and pairwise orders.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceResult {
    pub label: String,
    /// `(tau, h)`; `h` is zero for ODEs.
    pub resolutions: Vec<(f64, f64)>,
    pub errors: Vec<f64>,
    pub orders: Vec<f64>,
}

impl ConvergenceResult {
    pub fn new(label: impl Into<String>, resolutions: Vec<(f64, f64)>, errors: Vec<f64>) -> Self {
        let orders = errors
            .windows(2)
            .zip(resolutions.windows(2))
            .map(|(e, r)| (e[0] / e[1]).ln() / (r[0].0 / r[1].0).ln())
            .collect();
        Self {
            label: label.into(),
            resolutions,
            errors,
            orders,
        }
    }

    pub fn orders_within(&self, target: f64, tol: f64) -> bool {
        !self.orders.is_empty() && self.orders.iter().all(|o| (o - target).abs() <= tol)
    }
}

/// Sixth-order central first-derivative weights at offsets 1, 2, 3.
const D1: [f64; 3] = [3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];

fn continuous_at(p: &dyn MultiplierProblem, field: &dyn Field, t: f64, x: [f64; MAX_DIM]) -> Continuous {
    let mut out = Continuous::default();
    p.continuous(&FieldJet { field, t, x }, &mut out);
    out
}

/// `max_j |(Lambda F)_j - D_t psi_j - (D_x . Phi)_j|` at `(t, x)`, with the
/// outer derivatives of `psi` and `Phi` taken by sixth-order central
/// differences of width `step`.
pub fn identity_check(p: &dyn MultiplierProblem, field: &dyn Field, t: f64, x: [f64; MAX_DIM], step: f64) -> f64 {
    let info = p.info();
    let (m, s) = (info.m, info.s);
    let c0 = continuous_at(p, field, t, x);
    let mut out = [0.0; 3];
    for i in 0..s {
        out[i] = (0..m).map(|j| c0.lambda[i * m + j] * c0.f[j]).sum();
    }
    for (k, w) in D1.iter().enumerate() {
        let d = (k + 1) as f64 * step;
        let a = continuous_at(p, field, t + d, x);
        let b = continuous_at(p, field, t - d, x);
        for i in 0..s {
            out[i] -= w * (a.psi[i] - b.psi[i]) / step;
        }
        for axis in 0..info.n {
            let (mut xa, mut xb) = (x, x);
            xa[axis] += d;
            xb[axis] -= d;
            let a = continuous_at(p, field, t, xa);
            let b = continuous_at(p, field, t, xb);
            for i in 0..s {
                out[i] -= w * (a.flux[axis][i] - b.flux[axis][i]) / step;
            }
        }
    }
    out[..s].iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Finest identity-check step, about `2 * eps^(1/8)`.
pub fn identity_finest_step() -> f64 {
    2.0 * f64::EPSILON.powf(0.125)
}

/// Identity residuals over `levels` halvings ending at
/// [`identity_finest_step`], with pairwise slopes.
pub fn identity_convergence(
    p: &dyn MultiplierProblem,
    field: &dyn Field,
    t: f64,
    x: [f64; MAX_DIM],
    levels: usize,
) -> ConvergenceResult {
    let finest = identity_finest_step();
    let steps: Vec<f64> = (0..levels)
        .map(|k| finest * 2f64.powi((levels - 1 - k) as i32))
        .collect();
    let errors = steps.iter().map(|&h| identity_check(p, field, t, x, h)).collect();
    ConvergenceResult::new(
        format!("{} identity", p.info().name),
        steps.iter().map(|&h| (h, h)).collect(),
        errors,
    )
}

/// Random trial field for a problem, inside its admissible set.
pub fn trial_field(p: &dyn MultiplierProblem, seed: u64) -> TrigField {
    TrigField::random(seed, &p.trial_means(), p.trial_amplitude(), p.info().n)
}

/// `max |F[u] - F^{tau,h}[u]|` over the sample points, at `levels`
/// halvings of `(tau, h)`.
pub fn consistency_order(
    p: &dyn MultiplierProblem,
    setup: &ConsistencySetup,
    levels: usize,
) -> Result<ConvergenceResult, VerifyError> {
    if levels < 3 {
        return Err(VerifyError::TooFew(3));
    }
    let m = p.info().m;
    let mut res = Vec::new();
    let mut errors = Vec::new();
    for k in 0..levels {
        let tau = setup.tau0 / 2f64.powi(k as i32);
        let h = setup.h_ratio * tau;
        let mut err = 0.0f64;
        for &(t, x) in &setup.points {
            let at = Sampled {
                field: &setup.field,
                t,
                x,
                tau,
                h,
            };
            let r = assemble(p, &at, 0.0)?;
            let c = continuous_at(p, &setup.field, t, x);
            for j in 0..m {
                err = err.max((c.f[j] - r.r[j]).abs());
            }
        }
        res.push((tau, if p.info().n == 0 { 0.0 } else { h }));
        errors.push(err);
    }
    Ok(ConvergenceResult::new(
        format!("{} consistency", p.info().name),
        res,
        errors,
    ))
}

/// Error at the final time against the exact solution, for the solution and
/// for the conserved densities.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionConvergence {
    pub solution: ConvergenceResult,
    pub density: ConvergenceResult,
}

pub fn solution_convergence(
    p: &dyn MultiplierProblem,
    init: &InitialData,
    t0: f64,
    t_end: f64,
    steps: &[usize],
    cfg: &SolverConfig,
) -> Result<SolutionConvergence, VerifyError> {
    solution_convergence_with(p, init, t0, t_end, steps, cfg, &|_, _| {})
}

/// [`solution_convergence`] with a hook on every sub-run.
pub fn solution_convergence_with(
    p: &dyn MultiplierProblem,
    init: &InitialData,
    t0: f64,
    t_end: f64,
    steps: &[usize],
    cfg: &SolverConfig,
    on_run: SubRunHook<'_>,
) -> Result<SolutionConvergence, VerifyError> {
    if steps.len() < 3 {
        return Err(VerifyError::TooFew(3));
    }
    let info = p.info();
    let (m, s) = (info.m, info.s);
    let mut exact = vec![0.0; m];
    if !p.exact(init, t0, t_end, &mut exact) {
        return Err(VerifyError::NoReference(format!(
            "{} has no closed-form solution here",
            info.name
        )));
    }
    // conserved, so its value at t0 is the exact value throughout
    let jet = PointJet {
        t: t0,
        orders: (0..m)
            .map(|c| {
                let mut v = vec![init.u0[c]];
                if let Some(ut) = &init.ut0 {
                    v.push(ut[c]);
                }
                v
            })
            .collect(),
    };
    let mut cont = Continuous::default();
    p.continuous(&jet, &mut cont);
    let grid = SpatialGrid::point();

    let runs: Vec<Result<(f64, f64, f64), VerifyError>> = steps
        .par_iter()
        .enumerate()
        .map(|(k, &n)| {
            let time = TimeGrid::with_steps(t0, t_end, n).map_err(SolverError::from)?;
            let run = integrate(p, init, &grid, &time, cfg, None)?;
            on_run(k, &run);
            if let Some((at, why)) = &run.failure {
                return Err(VerifyError::Rejected {
                    steps: n,
                    at: *at,
                    reason: why.to_string(),
                });
            }
            let last = run.last();
            let ex = (0..m).fold(0.0f64, |a, c| a.max((last[c] - exact[c]).abs()));
            let row = run.report.rows.last().unwrap();
            let ed = (0..s).fold(0.0f64, |a, j| a.max((row.totals[j] - cont.psi[j]).abs()));
            Ok((time.tau, ex, ed))
        })
        .collect();
    let mut res = Vec::new();
    let (mut ex, mut ed) = (Vec::new(), Vec::new());
    for r in runs {
        let (tau, a, b) = r?;
        res.push((tau, 0.0));
        ex.push(a);
        ed.push(b);
    }
    Ok(SolutionConvergence {
        solution: ConvergenceResult::new(format!("{} solution", info.name), res.clone(), ex),
        density: ConvergenceResult::new(format!("{} density", info.name), res, ed),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Refinement {
    /// Halve `tau` on a fixed mesh.
    Time,
    /// Halve `tau` and `h` together; differences are taken on the nodes of
    /// the coarsest mesh.
    Joint,
}

/// Self-convergence: differences between the final states of successive
/// runs starting from `base` with `base_steps` steps.
#[allow(clippy::too_many_arguments)]
pub fn self_convergence(
    p: &dyn MultiplierProblem,
    base: &GridSpec,
    preset: &str,
    t0: f64,
    t_end: f64,
    base_steps: usize,
    levels: usize,
    refinement: Refinement,
    cfg: &SolverConfig,
) -> Result<ConvergenceResult, VerifyError> {
    self_convergence_with(p, base, preset, t0, t_end, base_steps, levels, refinement, cfg, &|_, _| {})
}

/// [`self_convergence`] with a hook on every sub-run.
#[allow(clippy::too_many_arguments)]
pub fn self_convergence_with(
    p: &dyn MultiplierProblem,
    base: &GridSpec,
    preset: &str,
    t0: f64,
    t_end: f64,
    base_steps: usize,
    levels: usize,
    refinement: Refinement,
    cfg: &SolverConfig,
    on_run: SubRunHook<'_>,
) -> Result<ConvergenceResult, VerifyError> {
    if levels < 4 {
        return Err(VerifyError::TooFew(4));
    }
    let m = p.info().m;
    let coarse = base.build().map_err(SolverError::from)?;
    type Final = (f64, f64, Vec<f64>);
    let finals: Vec<Result<Final, VerifyError>> = (0..levels)
        .into_par_iter()
        .map(|k| {
            let f = 1usize << k;
            let spec = match refinement {
                Refinement::Time => base.clone(),
                Refinement::Joint => GridSpec {
                    extent: base.extent.iter().map(|e| e * f).collect(),
                    ..base.clone()
                },
            };
            let grid = spec.build().map_err(SolverError::from)?;
            let init = p.initial(preset, &grid).map_err(SolverError::from)?;
            let n = base_steps * f;
            let time = TimeGrid::with_steps(t0, t_end, n).map_err(SolverError::from)?;
            let run = integrate(p, &init, &grid, &time, cfg, None)?;
            on_run(k, &run);
            if let Some((at, why)) = &run.failure {
                return Err(VerifyError::Rejected {
                    steps: n,
                    at: *at,
                    reason: why.to_string(),
                });
            }
            let stride = if refinement == Refinement::Joint { f } else { 1 };
            let last = run.last();
            let mut sampled = Vec::with_capacity(coarse.npoints() * m);
            for q in 0..coarse.npoints() {
                let j = coarse.multi(q);
                let fine = grid.linear([j[0] * stride, j[1] * stride]);
                sampled.extend_from_slice(&last[fine * m..(fine + 1) * m]);
            }
            Ok((time.tau, grid.h(), sampled))
        })
        .collect();
    let finals: Vec<Final> = finals.into_iter().collect::<Result<_, _>>()?;
    let mut res = Vec::new();
    let mut errors = Vec::new();
    for w in finals.windows(2) {
        let d = w[0].2.iter().zip(&w[1].2).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        res.push((w[0].0, w[0].1));
        errors.push(d);
    }
    Ok(ConvergenceResult::new(
        format!("{} self-convergence", p.info().name),
        res,
        errors,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_orders() {
        let r = ConvergenceResult::new(
            "x",
            vec![(0.4, 0.0), (0.2, 0.0), (0.1, 0.0)],
            vec![16.0, 4.0, 1.0],
        );
        assert_eq!(r.orders, vec![2.0, 2.0]);
        assert!(r.orders_within(2.0, 1e-12));
    }

    #[test]
    fn spread_of_rows() {
        let mut rep = ConservationReport::new(&["a"], 1);
        for (k, v) in [1.0, 3.0, 2.0].iter().enumerate() {
            rep.rows.push(ReportRow {
                step: k,
                time: k as f64,
                totals: vec![*v],
                boundary_flux: vec![0.0],
                divergence: vec![0.0],
                divergence_bound: 0.0,
                applicable: k > 0,
                newton_iters: 0,
                residual_norm: 0.0,
                max_inv_norm: 0.0,
                noise_limited: false,
            });
        }
        assert_eq!(rep.spread(), vec![2.0]);
        assert_eq!(rep.density_scale(), vec![3.0]);
        assert_eq!(divergence_check(&rep.rows[0]), Check::NotApplicable);
        assert_eq!(divergence_check(&rep.rows[1]), Check::Pass);
    }
}
