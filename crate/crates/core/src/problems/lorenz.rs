use super::*;
use crate::field::Mode;

const SPECS: [ParamSpec; 2] = [
    ParamSpec {
        name: "sigma",
        default: 10.0,
        check: positive,
    },
    ParamSpec {
        name: "r",
        default: 28.0,
        check: positive,
    },
];

/// Non-dissipative Lorenz system; two conservation laws for three equations.
#[derive(Debug, Clone)]
pub struct Lorenz {
    info: ProblemInfo,
    sigma: f64,
    r: f64,
}

fn mean(at: &dyn Local, c: usize) -> f64 {
    0.5 * (at.at(c, 0) + at.at(c, -1))
}

impl Lorenz {
    pub fn new(sigma: f64, r: f64) -> Self {
        Self {
            info: ProblemInfo {
                name: "lorenz",
                summary: "non-dissipative Lorenz system, rectangular multiplier (s=2, m=3)",
                m: 3,
                s: 2,
                n: 0,
                lead: 0,
                order_time: 1,
                order_space: 0,
                components: &["x", "y", "z"],
                densities: &["z_minus_x2", "yz_energy"],
            },
            sigma,
            r,
        }
    }

    pub fn from_params(p: &ParamSet) -> Result<Self, ProblemError> {
        let v = resolve("lorenz", &SPECS, p)?;
        Ok(Self::new(v[0], v[1]))
    }
}

impl MultiplierProblem for Lorenz {
    fn info(&self) -> &ProblemInfo {
        &self.info
    }
    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("sigma", self.sigma), ("r", self.r)]
    }
    fn stencil(&self) -> Stencil {
        Stencil::ode(0)
    }

    fn density(&self, at: &dyn Local, out: &mut [f64]) {
        let (x, y, z) = (at.at(0, 0), at.at(1, 0), at.at(2, 0));
        out[0] = z - x * x / (2.0 * self.sigma);
        out[1] = 0.5 * y * y + 0.5 * z * z - self.r * z;
    }

    fn multiplier(&self, at: &dyn Local, out: &mut [f64]) {
        let (xb, yb, zb) = (mean(at, 0), mean(at, 1), mean(at, 2));
        out[..6].copy_from_slice(&[-xb / self.sigma, 0.0, 1.0, 0.0, yb, zb - self.r]);
    }

    fn remainder(&self, at: &dyn Local, out: &mut [f64]) {
        out[0] = (at.at(2, 0) - at.at(2, -1)) / at.tau() - mean(at, 0) * mean(at, 1);
    }

    fn time_derivative(&self, at: &dyn Local, out: &mut [f64]) -> bool {
        let tau = at.tau();
        let d = |c: usize| (at.at(c, 0) - at.at(c, -1)) / tau;
        let (xb, yb, zb) = (mean(at, 0), mean(at, 1), mean(at, 2));
        out[0] = d(2) - xb * d(0) / self.sigma;
        out[1] = yb * d(1) + (zb - self.r) * d(2);
        true
    }

    fn printed_residual(&self, at: &dyn Local, out: &mut [f64]) {
        let tau = at.tau();
        let d = |c: usize| (at.at(c, 0) - at.at(c, -1)) / tau;
        let (xb, yb, zb) = (mean(at, 0), mean(at, 1), mean(at, 2));
        out[0] = d(0) - self.sigma * yb;
        out[1] = d(1) - xb * (self.r - zb);
        out[2] = d(2) - xb * yb;
    }

    fn continuous(&self, j: &dyn Jet, out: &mut Continuous) {
        let (x, y, z) = (j.u(0), j.u(1), j.u(2));
        out.f[0] = j.ut(0) - self.sigma * y;
        out.f[1] = j.ut(1) - x * (self.r - z);
        out.f[2] = j.ut(2) - x * y;
        out.lambda[..6].copy_from_slice(&[-x / self.sigma, 0.0, 1.0, 0.0, y, z - self.r]);
        out.psi[0] = z - x * x / (2.0 * self.sigma);
        out.psi[1] = 0.5 * y * y + 0.5 * z * z - self.r * z;
    }

    fn trial_means(&self) -> Vec<f64> {
        vec![1.5, 1.5, 0.5]
    }

    fn initial(&self, preset: &str, grid: &SpatialGrid) -> Result<InitialData, ProblemError> {
        match preset {
            "default" => ode_initial(3, grid, &[1.0, 1.0, 1.0], None),
            other => Err(ProblemError::UnknownPreset(other.into())),
        }
    }

    fn defaults(&self) -> Defaults {
        Defaults {
            t_end: 10.0,
            steps: 10_000,
            grid: None,
            preset: "default",
        }
    }

    fn consistency_setup(&self) -> ConsistencySetup {
        ConsistencySetup {
            field: TrigField::new(
                vec![1.5, 1.2, 0.5],
                vec![
                    vec![Mode::new(0.4, 1.0, [0.0; 2], 0.0)],
                    vec![Mode::new(0.3, 1.1, [0.0; 2], -1.5)],
                    vec![Mode::new(0.2, 0.9, [0.0; 2], 1.0)],
                ],
            ),
            points: vec![(0.3, [0.0; 2]), (1.0, [0.0; 2]), (1.8, [0.0; 2])],
            tau0: 0.05,
            h_ratio: 1.0,
        }
    }
}
