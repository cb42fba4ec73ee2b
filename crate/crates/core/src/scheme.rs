//! Residual assembly: `Lambda^{-1} (D_t psi + D_x . Phi)` and its
//! rectangular variant, with guarded evaluation near multiplier zeros.

use crate::error::SchemeError;
use crate::grid::MAX_DIM;
use crate::linalg::{inverse_norm_inf, lu_in_place, lu_solve};
use crate::local::{unit, Local, Shifted, ZERO};
use crate::problems::{MultiplierProblem, MAX_M};

pub const GUARD_FACTOR: f64 = 1e6;

/// Multiple of machine epsilon used for the roundoff floor of a residual.
pub const FLOOR_FACTOR: f64 = 32.0;

/// Guard threshold on a multiplier pivot for a given multiplier scale.
#[inline]
pub fn guard(scale: f64) -> f64 {
    GUARD_FACTOR * f64::EPSILON * scale
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Multiplier,
    ZeroLimit,
}

/// Assembled residual at one point plus what the solver needs to judge it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointResidual {
    pub r: [f64; MAX_M],
    pub m: usize,
    pub branch: Branch,
    /// `||Lambda~^{-1}||_inf`; zero on the limit branch.
    pub inv_norm: f64,
    /// Largest row sum of `|Lambda|` over the full `s x m` block.
    pub lambda_norm: f64,
    /// Largest `|Lambda~_ij|`.
    pub lambda_scale: f64,
    /// Magnitude of the terms summed into the conservative form.
    pub mag: f64,
    /// Roundoff floor of `r`.
    pub floor: f64,
}

impl PointResidual {
    pub fn values(&self) -> &[f64] {
        &self.r[..self.m]
    }

    pub fn max_abs(&self) -> f64 {
        self.values().iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// The discrete objects at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperators {
    pub psi: Vec<f64>,
    /// `flux[axis][j]`.
    pub flux: Vec<Vec<f64>>,
    /// `s x m` row-major.
    pub multiplier: Vec<f64>,
    pub g: Vec<f64>,
}

pub fn discrete_operators(p: &dyn MultiplierProblem, at: &dyn Local) -> DiscreteOperators {
    let info = p.info();
    let (m, s) = (info.m, info.s);
    let mut psi = vec![0.0; s];
    p.density(at, &mut psi);
    let flux = (0..info.n)
        .map(|axis| {
            let mut f = vec![0.0; s];
            p.flux(at, axis, &mut f);
            f
        })
        .collect();
    let mut multiplier = vec![0.0; s * m];
    p.multiplier(at, &mut multiplier);
    let mut g = vec![0.0; m - s];
    if m > s {
        p.remainder(at, &mut g);
    }
    DiscreteOperators {
        psi,
        flux,
        multiplier,
        g,
    }
}

/// `(psi_n - psi_{n-1}) / tau` from the densities themselves. Returns the
/// magnitude `(|psi_n| + |psi_{n-1}|) / tau` per component in `mag`.
pub fn density_difference(p: &dyn MultiplierProblem, at: &dyn Local, out: &mut [f64], mag: &mut [f64]) {
    let s = p.info().s;
    let tau = at.tau();
    let (mut a, mut b) = ([0.0; MAX_M], [0.0; MAX_M]);
    p.density(at, &mut a[..s]);
    p.density(&Shifted { inner: at, dt: -1, dx: ZERO }, &mut b[..s]);
    for j in 0..s {
        out[j] = (a[j] - b[j]) / tau;
        mag[j] = (a[j].abs() + b[j].abs()) / tau;
    }
}

/// `D_t psi`, using the problem's closed form when it provides one.
pub fn discrete_time_derivative(p: &dyn MultiplierProblem, at: &dyn Local, out: &mut [f64]) {
    if !p.time_derivative(at, out) {
        let mut mag = [0.0; MAX_M];
        density_difference(p, at, out, &mut mag);
    }
}

/// `sum_i (phi^i_J - phi^i_{J-i}) / h`; magnitudes go to `mag` when given.
pub fn discrete_flux_divergence(p: &dyn MultiplierProblem, at: &dyn Local, out: &mut [f64]) {
    let mut mag = [0.0; MAX_M];
    flux_divergence_mag(p, at, out, &mut mag);
}

fn flux_divergence_mag(p: &dyn MultiplierProblem, at: &dyn Local, out: &mut [f64], mag: &mut [f64]) {
    let info = p.info();
    let s = info.s;
    out[..s].fill(0.0);
    mag[..s].fill(0.0);
    let h = at.h();
    for axis in 0..info.n.min(MAX_DIM) {
        let (mut a, mut b) = ([0.0; MAX_M], [0.0; MAX_M]);
        p.flux(at, axis, &mut a[..s]);
        p.flux(
            &Shifted {
                inner: at,
                dt: 0,
                dx: unit(axis, -1),
            },
            axis,
            &mut b[..s],
        );
        for j in 0..s {
            out[j] += (a[j] - b[j]) / h;
            mag[j] += (a[j].abs() + b[j].abs()) / h;
        }
    }
}

/// `D_t psi + D_x . Phi` with the plain density difference.
pub fn conservative_form_residual(p: &dyn MultiplierProblem, at: &dyn Local, out: &mut [f64]) {
    let s = p.info().s;
    let (mut dt, mut dx, mut mag) = ([0.0; MAX_M], [0.0; MAX_M], [0.0; MAX_M]);
    density_difference(p, at, &mut dt, &mut mag);
    flux_divergence_mag(p, at, &mut dx, &mut mag);
    for j in 0..s {
        out[j] = dt[j] + dx[j];
    }
}

/// General assembly. `guard_scale` is a multiplier scale carried in from
/// the surrounding step; the point's own scale is always included.
pub fn assemble(
    p: &dyn MultiplierProblem,
    at: &dyn Local,
    guard_scale: f64,
) -> Result<PointResidual, SchemeError> {
    let info = p.info();
    let (m, s) = (info.m, info.s);
    p.admissible(at).map_err(SchemeError::Inadmissible)?;

    let (mut dt, mut dx) = ([0.0; MAX_M], [0.0; MAX_M]);
    let (mut mag_t, mut mag_x) = ([0.0; MAX_M], [0.0; MAX_M]);
    density_difference(p, at, &mut dt, &mut mag_t);
    p.time_derivative(at, &mut dt[..s]);
    flux_divergence_mag(p, at, &mut dx, &mut mag_x);

    let mut lam = [0.0; MAX_M * MAX_M];
    p.multiplier(at, &mut lam[..s * m]);
    let mut g = [0.0; MAX_M];
    if m > s {
        p.remainder(at, &mut g[..m - s]);
    }

    let mut rhs = [0.0; MAX_M];
    let mut mag = 0.0f64;
    let mut lambda_norm = 0.0f64;
    for i in 0..s {
        let mut sg = 0.0;
        let mut sg_mag = 0.0;
        for k in 0..m - s {
            sg += lam[i * m + s + k] * g[k];
            sg_mag += (lam[i * m + s + k] * g[k]).abs();
        }
        rhs[i] = dt[i] + dx[i] - sg;
        mag = mag.max(mag_t[i] + mag_x[i] + sg_mag);
        lambda_norm = lambda_norm.max(lam[i * m..i * m + m].iter().map(|v| v.abs()).sum());
    }
    if !(rhs[..s].iter().chain(&lam[..s * m]).chain(&g[..m - s]).all(|v| v.is_finite())) {
        return Err(SchemeError::Inadmissible("non-finite discrete operator".into()));
    }

    let mut a = [0.0; MAX_M * MAX_M];
    let mut lambda_scale = 0.0f64;
    for i in 0..s {
        for j in 0..s {
            a[i * s + j] = lam[i * m + j];
            lambda_scale = lambda_scale.max(lam[i * m + j].abs());
        }
    }
    let mut piv = [0usize; MAX_M];
    let pivot = lu_in_place(&mut a[..s * s], s, &mut piv[..s]);
    let threshold = guard(guard_scale.max(lambda_scale));

    let mut r = [0.0; MAX_M];
    r[s..m].copy_from_slice(&g[..m - s]);
    if pivot <= threshold {
        if m == 1 && s == 1 {
            if let (Some(_), Some(limit)) = (p.zero_compat(), p.zero_limit(at)) {
                r[0] = limit;
                return Ok(PointResidual {
                    r,
                    m,
                    branch: Branch::ZeroLimit,
                    inv_norm: 0.0,
                    lambda_norm,
                    lambda_scale,
                    mag,
                    floor: FLOOR_FACTOR * f64::EPSILON * mag.max(limit.abs()),
                });
            }
            return Err(SchemeError::Unguarded { value: pivot });
        }
        return Err(SchemeError::Singular {
            pivot,
            guard: threshold,
        });
    }
    lu_solve(&a[..s * s], s, &piv[..s], &mut rhs[..s]);
    r[..s].copy_from_slice(&rhs[..s]);
    let inv_norm = inverse_norm_inf(&a[..s * s], s, &piv[..s]);
    Ok(PointResidual {
        r,
        m,
        branch: Branch::Multiplier,
        inv_norm,
        lambda_norm,
        lambda_scale,
        mag,
        floor: FLOOR_FACTOR * f64::EPSILON * mag * inv_norm.max(1.0),
    })
}

pub fn assemble_scalar_residual(p: &dyn MultiplierProblem, at: &dyn Local) -> Result<f64, SchemeError> {
    let info = p.info();
    if info.m != 1 || info.s != 1 {
        return Err(SchemeError::Shape {
            case: "scalar",
            m: info.m,
            s: info.s,
        });
    }
    assemble(p, at, 0.0).map(|r| r.r[0])
}

pub fn assemble_system_residual(
    p: &dyn MultiplierProblem,
    at: &dyn Local,
) -> Result<PointResidual, SchemeError> {
    let info = p.info();
    if info.m != info.s {
        return Err(SchemeError::Shape {
            case: "square",
            m: info.m,
            s: info.s,
        });
    }
    assemble(p, at, 0.0)
}

/// Stacked `(F~, G)`; with `s = m` this is the square assembly.
pub fn assemble_rectangular_residual(
    p: &dyn MultiplierProblem,
    at: &dyn Local,
) -> Result<PointResidual, SchemeError> {
    let info = p.info();
    if info.s > info.m || info.s == 0 {
        return Err(SchemeError::Shape {
            case: "rectangular",
            m: info.m,
            s: info.s,
        });
    }
    assemble(p, at, 0.0)
}

/// `Lambda . r` over the full `s x m` block.
pub fn apply_multiplier(p: &dyn MultiplierProblem, at: &dyn Local, r: &[f64], out: &mut [f64]) {
    let info = p.info();
    let (m, s) = (info.m, info.s);
    let mut lam = [0.0; MAX_M * MAX_M];
    p.multiplier(at, &mut lam[..s * m]);
    for i in 0..s {
        out[i] = (0..m).map(|j| lam[i * m + j] * r[j]).sum();
    }
}
