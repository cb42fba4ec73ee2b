use super::*;
use crate::field::Mode;

const SPECS: [ParamSpec; 2] = [
    ParamSpec {
        name: "a",
        default: 1.0,
        check: finite,
    },
    ParamSpec {
        name: "w",
        default: 1.0,
        check: positive,
    },
];

/// `u_t = a cos(w t)` with multiplier 1; the scheme reproduces the exact
/// solution at every mesh time, which makes it a harness self-test.
#[derive(Debug, Clone)]
pub struct Manufactured {
    info: ProblemInfo,
    a: f64,
    w: f64,
}

impl Manufactured {
    pub fn new(a: f64, w: f64) -> Self {
        Self {
            info: ProblemInfo {
                name: "manufactured",
                summary: "u_t = a cos(w t), unit multiplier (harness self-test)",
                m: 1,
                s: 1,
                n: 0,
                lead: 0,
                order_time: 1,
                order_space: 0,
                components: &["u"],
                densities: &["u_minus_forcing"],
            },
            a,
            w,
        }
    }

    pub fn from_params(p: &ParamSet) -> Result<Self, ProblemError> {
        let v = resolve("manufactured", &SPECS, p)?;
        Ok(Self::new(v[0], v[1]))
    }

    fn forcing(&self, t: f64) -> f64 {
        self.a / self.w * (self.w * t).sin()
    }
}

impl MultiplierProblem for Manufactured {
    fn info(&self) -> &ProblemInfo {
        &self.info
    }
    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("a", self.a), ("w", self.w)]
    }
    fn stencil(&self) -> Stencil {
        Stencil::ode(0)
    }

    fn density(&self, at: &dyn Local, out: &mut [f64]) {
        out[0] = at.at(0, 0) - self.forcing(at.t(0));
    }

    fn multiplier(&self, _at: &dyn Local, out: &mut [f64]) {
        out[0] = 1.0;
    }

    fn printed_residual(&self, at: &dyn Local, out: &mut [f64]) {
        let tau = at.tau();
        out[0] = (at.at(0, 0) - at.at(0, -1)) / tau
            - (self.forcing(at.t(0)) - self.forcing(at.t(-1))) / tau;
    }

    fn continuous(&self, j: &dyn Jet, out: &mut Continuous) {
        out.f[0] = j.ut(0) - self.a * (self.w * j.t()).cos();
        out.lambda[0] = 1.0;
        out.psi[0] = j.u(0) - self.forcing(j.t());
    }

    fn exact(&self, init: &InitialData, t0: f64, t: f64, out: &mut [f64]) -> bool {
        out[0] = init.u0[0] + self.forcing(t) - self.forcing(t0);
        true
    }

    fn initial(&self, preset: &str, grid: &SpatialGrid) -> Result<InitialData, ProblemError> {
        match preset {
            "default" => ode_initial(1, grid, &[0.5], None),
            other => Err(ProblemError::UnknownPreset(other.into())),
        }
    }

    fn defaults(&self) -> Defaults {
        Defaults {
            t_end: 5.0,
            steps: 100,
            grid: None,
            preset: "default",
        }
    }

    fn consistency_setup(&self) -> ConsistencySetup {
        ConsistencySetup {
            field: TrigField::new(vec![0.4], vec![vec![Mode::new(0.7, 1.3, [0.0; 2], 0.1)]]),
            points: vec![(0.5, [0.0; 2]), (1.5, [0.0; 2]), (2.5, [0.0; 2])],
            tau0: 0.1,
            h_ratio: 1.0,
        }
    }
}
