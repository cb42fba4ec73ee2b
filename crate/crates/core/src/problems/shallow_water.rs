use super::*;
use crate::field::Mode;
use crate::local::unit;

/// Two-dimensional shallow-water equations (components `u`, `v`, `eta`).
#[derive(Debug, Clone)]
pub struct ShallowWater {
    info: ProblemInfo,
}

/// The six additive terms of the first two printed residual components
/// (time difference, advection, cross advection, pressure, and the two
/// correction terms) plus the third component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwTerms {
    pub f1: [f64; 6],
    pub f2: [f64; 6],
    pub f3: f64,
}

impl Default for ShallowWater {
    fn default() -> Self {
        Self::new()
    }
}

impl ShallowWater {
    pub fn new() -> Self {
        Self {
            info: ProblemInfo {
                name: "shallow_water",
                summary: "2-D shallow water, momentum and mass conserved on a periodic square",
                m: 3,
                s: 3,
                n: 2,
                lead: 0,
                order_time: 1,
                order_space: 1,
                components: &["u", "v", "eta"],
                densities: &["x_momentum", "y_momentum", "mass"],
            },
        }
    }

    pub fn from_params(p: &ParamSet) -> Result<Self, ProblemError> {
        resolve("shallow_water", &[], p)?;
        Ok(Self::new())
    }

    /// Term-by-term evaluation of the simplified residual.
    pub fn printed_terms(&self, at: &dyn Local) -> SwTerms {
        let (tau, h) = (at.tau(), at.h());
        let v = |c: usize, dt: isize, d: [isize; 2]| at.u(c, dt, d);
        let (o, xi, yj) = ([0, 0], unit(0, -1), unit(1, -1));
        let (u, um, ui, uj) = (v(0, 0, o), v(0, -1, o), v(0, 0, xi), v(0, 0, yj));
        let (w, wm, wi, wj) = (v(1, 0, o), v(1, -1, o), v(1, 0, xi), v(1, 0, yj));
        let (e, em, ei, ej) = (v(2, 0, o), v(2, -1, o), v(2, 0, xi), v(2, 0, yj));
        let es = e + em;
        let (ub, wb) = (0.5 * (u + um), 0.5 * (w + wm));
        let f1 = [
            (u - um) / tau,
            2.0 * ei / es * (u + ui - ub) * (u - ui) / h,
            2.0 * e / es * w * (u - uj) / h,
            (e + ei) / es * (e - ei) / h,
            2.0 / es * (e - ei) / h * u * (u - ub),
            2.0 / es * (e * w - ej * wj) / h * (uj - ub),
        ];
        let f2 = [
            (w - wm) / tau,
            2.0 * ej / es * (w + wj - wb) * (w - wj) / h,
            2.0 * e / es * u * (w - wi) / h,
            (e + ej) / es * (e - ej) / h,
            2.0 / es * (e - ej) / h * w * (w - wb),
            2.0 / es * (e * u - ei * ui) / h * (wi - wb),
        ];
        let f3 = (e - em) / tau + (e * u - ei * ui) / h + (e * w - ej * wj) / h;
        SwTerms { f1, f2, f3 }
    }
}

impl MultiplierProblem for ShallowWater {
    fn info(&self) -> &ProblemInfo {
        &self.info
    }
    fn params(&self) -> Vec<(&'static str, f64)> {
        Vec::new()
    }
    fn stencil(&self) -> Stencil {
        Stencil {
            lead: 0,
            back: [1, 1],
            fwd: [0, 0],
        }
    }

    fn density(&self, at: &dyn Local, out: &mut [f64]) {
        let (u, w, e) = (at.at(0, 0), at.at(1, 0), at.at(2, 0));
        out[..3].copy_from_slice(&[e * u, e * w, e]);
    }

    fn flux(&self, at: &dyn Local, axis: usize, out: &mut [f64]) {
        let (u, w, e) = (at.at(0, 0), at.at(1, 0), at.at(2, 0));
        let half = 0.5 * e * e;
        if axis == 0 {
            out[..3].copy_from_slice(&[e * u * u + half, e * u * w, e * u]);
        } else {
            out[..3].copy_from_slice(&[e * u * w, e * w * w + half, e * w]);
        }
    }

    fn multiplier(&self, at: &dyn Local, out: &mut [f64]) {
        let b = |c: usize| 0.5 * (at.at(c, 0) + at.at(c, -1));
        let eb = b(2);
        out[..9].copy_from_slice(&[eb, 0.0, b(0), 0.0, eb, b(1), 0.0, 0.0, 1.0]);
    }

    fn printed_residual(&self, at: &dyn Local, out: &mut [f64]) {
        let t = self.printed_terms(at);
        out[0] = t.f1.iter().sum();
        out[1] = t.f2.iter().sum();
        out[2] = t.f3;
    }

    fn admissible(&self, at: &dyn Local) -> Result<(), String> {
        for dt in [-1, 0] {
            let e = at.at(2, dt);
            if !(e > 0.0) {
                return Err(format!("surface height must stay positive, got eta={e}"));
            }
        }
        Ok(())
    }

    fn continuous(&self, j: &dyn Jet, out: &mut Continuous) {
        let (u, w, e) = (j.u(0), j.u(1), j.u(2));
        let d = |c: usize, axis: usize| j.ux(c, axis, 1);
        out.f[0] = j.ut(0) + u * d(0, 0) + w * d(0, 1) + d(2, 0);
        out.f[1] = j.ut(1) + u * d(1, 0) + w * d(1, 1) + d(2, 1);
        out.f[2] = j.ut(2) + d(2, 0) * u + e * d(0, 0) + d(2, 1) * w + e * d(1, 1);
        out.lambda[..9].copy_from_slice(&[e, 0.0, u, 0.0, e, w, 0.0, 0.0, 1.0]);
        out.psi[..3].copy_from_slice(&[e * u, e * w, e]);
        out.flux[0][..3].copy_from_slice(&[e * u * u + 0.5 * e * e, e * u * w, e * u]);
        out.flux[1][..3].copy_from_slice(&[e * u * w, e * w * w + 0.5 * e * e, e * w]);
    }

    fn trial_means(&self) -> Vec<f64> {
        vec![0.2, -0.1, 1.5]
    }
    fn trial_amplitude(&self) -> f64 {
        0.45
    }

    fn presets(&self) -> &'static [&'static str] {
        &["bump"]
    }

    fn initial(&self, preset: &str, grid: &SpatialGrid) -> Result<InitialData, ProblemError> {
        if grid.dim() != 2 {
            return Err(ProblemError::InitialData("shallow_water needs a 2-D grid".into()));
        }
        match preset {
            "bump" => {
                let mut u0 = vec![0.0; 3 * grid.npoints()];
                for p in 0..grid.npoints() {
                    let x = grid.coord(grid.multi(p));
                    u0[3 * p + 2] = 1.0 + 0.01 * x[0].cos() * x[1].cos();
                }
                Ok(InitialData::values(u0))
            }
            other => Err(ProblemError::UnknownPreset(other.into())),
        }
    }

    fn defaults(&self) -> Defaults {
        Defaults {
            t_end: 50.0,
            steps: 100,
            grid: Some(GridSpec {
                extent: vec![32, 32],
                lo: 0.0,
                hi: std::f64::consts::TAU,
                mode: BoundaryMode::Periodic,
            }),
            preset: "bump",
        }
    }

    fn consistency_setup(&self) -> ConsistencySetup {
        ConsistencySetup {
            field: TrigField::new(
                vec![0.2, -0.1, 1.0],
                vec![
                    vec![Mode::new(0.1, -1.0, [1.0, 1.0], 0.0)],
                    vec![Mode::new(0.15, 0.8, [0.0, 1.0], 0.5)],
                    vec![Mode::new(0.2, -0.5, [1.0, 0.0], 0.0)],
                ],
            ),
            points: vec![(0.2, [0.5, 1.0]), (0.6, [2.0, -0.4]), (1.0, [4.1, 2.2])],
            tau0: 0.05,
            h_ratio: 1.0,
        }
    }
}
