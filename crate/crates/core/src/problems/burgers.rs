use super::*;
use crate::field::Mode;
use crate::local::unit;

const SPECS: [ParamSpec; 1] = [ParamSpec {
    name: "p",
    default: 1.0,
    check: positive_integer,
}];

/// Inviscid Burgers with the multiplier family `u^(p-1)`.
#[derive(Debug, Clone)]
pub struct Burgers {
    info: ProblemInfo,
    p: usize,
}

/// The textbook conservative upwind residual, for comparison with `p = 1`.
pub fn classical_burgers_residual(at: &dyn Local) -> f64 {
    let (u, um, ul) = (at.at(0, 0), at.at(0, -1), at.u(0, 0, unit(0, -1)));
    (u - um) / at.tau() + (u * u - ul * ul) / (2.0 * at.h())
}

impl Burgers {
    pub fn new(p: usize) -> Self {
        assert!(p >= 1);
        Self {
            info: ProblemInfo {
                name: "burgers",
                summary: "inviscid Burgers, density u^p/p on a periodic line",
                m: 1,
                s: 1,
                n: 1,
                lead: 0,
                order_time: 1,
                order_space: 1,
                components: &["u"],
                densities: &["u_pow_p_over_p"],
            },
            p,
        }
    }

    pub fn from_params(p: &ParamSet) -> Result<Self, ProblemError> {
        let v = resolve("burgers", &SPECS, p)?;
        Ok(Self::new(v[0] as usize))
    }

    pub fn p(&self) -> usize {
        self.p
    }
}

impl MultiplierProblem for Burgers {
    fn info(&self) -> &ProblemInfo {
        &self.info
    }
    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("p", self.p as f64)]
    }
    fn stencil(&self) -> Stencil {
        Stencil {
            lead: 0,
            back: [1, 0],
            fwd: [0, 0],
        }
    }

    fn density(&self, at: &dyn Local, out: &mut [f64]) {
        out[0] = ipow(at.at(0, 0), self.p) / self.p as f64;
    }

    fn flux(&self, at: &dyn Local, _axis: usize, out: &mut [f64]) {
        out[0] = ipow(at.at(0, 0), self.p + 1) / (self.p + 1) as f64;
    }

    fn multiplier(&self, at: &dyn Local, out: &mut [f64]) {
        let (u, um) = (at.at(0, 0), at.at(0, -1));
        let mut s = 0.0;
        for k in 0..self.p {
            s += ipow(u, self.p - 1 - k) * ipow(um, k);
        }
        out[0] = s / self.p as f64;
    }

    fn printed_residual(&self, at: &dyn Local, out: &mut [f64]) {
        let p = self.p;
        let (u, um, ul) = (at.at(0, 0), at.at(0, -1), at.u(0, 0, unit(0, -1)));
        let mut num = 0.0;
        for k in 0..=p {
            num += ipow(u, p - k) * ipow(ul, k);
        }
        let mut den = 0.0;
        for k in 0..p {
            den += ipow(u, p - 1 - k) * ipow(um, k);
        }
        out[0] = (u - um) / at.tau() + p as f64 / (p + 1) as f64 * num / den * (u - ul) / at.h();
    }

    fn continuous(&self, j: &dyn Jet, out: &mut Continuous) {
        let u = j.u(0);
        let p = self.p;
        out.f[0] = j.ut(0) + u * j.ux(0, 0, 1);
        out.lambda[0] = ipow(u, p - 1);
        out.psi[0] = ipow(u, p) / p as f64;
        out.flux[0][0] = ipow(u, p + 1) / (p + 1) as f64;
    }

    fn trial_means(&self) -> Vec<f64> {
        vec![1.5]
    }

    fn presets(&self) -> &'static [&'static str] {
        &["smooth"]
    }

    fn initial(&self, preset: &str, grid: &SpatialGrid) -> Result<InitialData, ProblemError> {
        if grid.dim() != 1 {
            return Err(ProblemError::InitialData("burgers needs a 1-D grid".into()));
        }
        match preset {
            "smooth" => Ok(InitialData::values(
                (0..grid.npoints())
                    .map(|p| 1.0 + 0.5 * grid.coord(grid.multi(p))[0].sin())
                    .collect(),
            )),
            other => Err(ProblemError::UnknownPreset(other.into())),
        }
    }

    fn defaults(&self) -> Defaults {
        Defaults {
            t_end: 1.0,
            steps: 100,
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
        ConsistencySetup {
            field: TrigField::new(vec![1.5], vec![vec![Mode::new(0.3, -1.0, [1.0, 0.0], 0.4)]]),
            points: vec![(0.2, [0.5, 0.0]), (0.6, [2.0, 0.0]), (1.0, [4.1, 0.0])],
            tau0: 0.05,
            h_ratio: 1.0,
        }
    }
}
