use super::*;
use crate::field::Mode;
use crate::local::unit;

/// Korteweg-de Vries with the `L^2` multiplier `u`.
#[derive(Debug, Clone)]
pub struct Kdv {
    info: ProblemInfo,
}

impl Default for Kdv {
    fn default() -> Self {
        Self::new()
    }
}

impl Kdv {
    pub fn new() -> Self {
        Self {
            info: ProblemInfo {
                name: "kdv",
                summary: "Korteweg-de Vries, density u^2/2 on a periodic line",
                m: 1,
                s: 1,
                n: 1,
                lead: 0,
                order_time: 1,
                order_space: 1,
                components: &["u"],
                densities: &["u2_over_2"],
            },
        }
    }

    pub fn from_params(p: &ParamSet) -> Result<Self, ProblemError> {
        resolve("kdv", &[], p)?;
        Ok(Self::new())
    }
}

impl MultiplierProblem for Kdv {
    fn info(&self) -> &ProblemInfo {
        &self.info
    }
    fn params(&self) -> Vec<(&'static str, f64)> {
        Vec::new()
    }
    fn stencil(&self) -> Stencil {
        Stencil {
            lead: 0,
            back: [2, 0],
            fwd: [1, 0],
        }
    }

    fn density(&self, at: &dyn Local, out: &mut [f64]) {
        let u = at.at(0, 0);
        out[0] = 0.5 * u * u;
    }

    fn flux(&self, at: &dyn Local, _axis: usize, out: &mut [f64]) {
        let h = at.h();
        let (ur, u, ul) = (at.u(0, 0, unit(0, 1)), at.at(0, 0), at.u(0, 0, unit(0, -1)));
        let d1 = (ur - u) / h;
        out[0] = u * u * u / 3.0 + 0.5 * (ur + u) * (ur - 2.0 * u + ul) / (h * h) - 0.5 * d1 * d1;
    }

    fn multiplier(&self, at: &dyn Local, out: &mut [f64]) {
        out[0] = 0.5 * (at.at(0, 0) + at.at(0, -1));
    }

    fn printed_residual(&self, at: &dyn Local, out: &mut [f64]) {
        let (tau, h) = (at.tau(), at.h());
        let (u, um) = (at.at(0, 0), at.at(0, -1));
        let x = |k: isize| at.u(0, 0, unit(0, k));
        let (ur, ul, ull) = (x(1), x(-1), x(-2));
        out[0] = (u - um) / tau
            + 2.0 * (u * u + u * ul + ul * ul) / (3.0 * (u + um)) * (u - ul) / h
            + (u + ul) / (u + um) * (ur - 3.0 * u + 3.0 * ul - ull) / (h * h * h);
    }

    fn continuous(&self, j: &dyn Jet, out: &mut Continuous) {
        let u = j.u(0);
        let (ux, uxx, uxxx) = (j.ux(0, 0, 1), j.ux(0, 0, 2), j.ux(0, 0, 3));
        out.f[0] = j.ut(0) + u * ux + uxxx;
        out.lambda[0] = u;
        out.psi[0] = 0.5 * u * u;
        out.flux[0][0] = u * u * u / 3.0 + u * uxx - 0.5 * ux * ux;
    }

    fn trial_means(&self) -> Vec<f64> {
        vec![0.5]
    }

    fn presets(&self) -> &'static [&'static str] {
        &["smooth"]
    }

    fn initial(&self, preset: &str, grid: &SpatialGrid) -> Result<InitialData, ProblemError> {
        if grid.dim() != 1 {
            return Err(ProblemError::InitialData("kdv needs a 1-D grid".into()));
        }
        match preset {
            "smooth" => Ok(InitialData::values(
                (0..grid.npoints())
                    .map(|p| 1.0 + 0.1 * grid.coord(grid.multi(p))[0].sin())
                    .collect(),
            )),
            other => Err(ProblemError::UnknownPreset(other.into())),
        }
    }

    fn defaults(&self) -> Defaults {
        Defaults {
            t_end: 10.0,
            steps: 1000,
            grid: Some(GridSpec {
                extent: vec![64],
                lo: 0.0,
                hi: std::f64::consts::TAU,
                mode: BoundaryMode::Periodic,
            }),
            preset: "smooth",
        }
    }

    fn consistency_setup(&self) -> ConsistencySetup {
        // u = sin(x - t), sampled where |u| stays near 1
        ConsistencySetup {
            field: TrigField::new(
                vec![0.0],
                vec![vec![Mode::new(1.0, -1.0, [1.0, 0.0], -std::f64::consts::FRAC_PI_2)]],
            ),
            points: vec![(0.2, [1.4, 0.0]), (0.7, [2.5, 0.0]), (1.1, [5.5, 0.0])],
            tau0: 0.05,
            h_ratio: 1.0,
        }
    }
}
