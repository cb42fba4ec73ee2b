use std::f64::consts::FRAC_PI_2;

use super::*;
use crate::field::Mode;

const SPECS: [ParamSpec; 2] = [
    ParamSpec {
        name: "g",
        default: 1.0,
        check: positive,
    },
    ParamSpec {
        name: "l",
        default: 1.0,
        check: positive,
    },
];

/// `theta_tt + (g/l) sin(theta) = 0` with the energy multiplier `theta_t`.
#[derive(Debug, Clone)]
pub struct Pendulum {
    info: ProblemInfo,
    g: f64,
    l: f64,
}

impl Pendulum {
    pub fn new(g: f64, l: f64) -> Self {
        Self {
            info: ProblemInfo {
                name: "pendulum",
                summary: "nonlinear pendulum, energy-conserving three-level scheme",
                m: 1,
                s: 1,
                n: 0,
                lead: 1,
                order_time: 2,
                order_space: 0,
                components: &["theta"],
                densities: &["energy"],
            },
            g,
            l,
        }
    }

    pub fn from_params(p: &ParamSet) -> Result<Self, ProblemError> {
        let v = resolve("pendulum", &SPECS, p)?;
        Ok(Self::new(v[0], v[1]))
    }

    fn w2(&self) -> f64 {
        self.g / self.l
    }
}

impl MultiplierProblem for Pendulum {
    fn info(&self) -> &ProblemInfo {
        &self.info
    }
    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("g", self.g), ("l", self.l)]
    }
    fn stencil(&self) -> Stencil {
        Stencil::ode(1)
    }

    fn density(&self, at: &dyn Local, out: &mut [f64]) {
        let (a, b) = (at.at(0, 1), at.at(0, 0));
        let v = (a - b) / at.tau();
        out[0] = 0.5 * v * v - 0.5 * self.w2() * (a.cos() + b.cos());
    }

    fn multiplier(&self, at: &dyn Local, out: &mut [f64]) {
        out[0] = (at.at(0, 1) - at.at(0, -1)) / (2.0 * at.tau());
    }

    fn time_derivative(&self, at: &dyn Local, out: &mut [f64]) -> bool {
        let tau = at.tau();
        let (a, c, b) = (at.at(0, 1), at.at(0, 0), at.at(0, -1));
        let lam = (a - b) / (2.0 * tau);
        // cos a - cos b = -2 sin((a+b)/2) sin((a-b)/2)
        out[0] = lam * (a - 2.0 * c + b) / (tau * tau)
            + self.w2() * (0.5 * (a + b)).sin() * (0.5 * (a - b)).sin() / tau;
        true
    }

    fn zero_compat(&self) -> Option<ZeroCompat> {
        Some(ZeroCompat { order: 1 })
    }

    fn zero_limit(&self, at: &dyn Local) -> Option<f64> {
        let tau = at.tau();
        let (c, b) = (at.at(0, 0), at.at(0, -1));
        Some(2.0 * (b - c) / (tau * tau) + self.w2() * b.sin())
    }

    fn printed_residual(&self, at: &dyn Local, out: &mut [f64]) {
        let tau = at.tau();
        let (a, c, b) = (at.at(0, 1), at.at(0, 0), at.at(0, -1));
        out[0] = (a - 2.0 * c + b) / (tau * tau) - self.w2() * (a.cos() - b.cos()) / (a - b);
    }

    fn continuous(&self, j: &dyn Jet, out: &mut Continuous) {
        let (th, tt) = (j.u(0), j.ut(0));
        out.f[0] = j.utt(0) + self.w2() * th.sin();
        out.lambda[0] = tt;
        out.psi[0] = 0.5 * tt * tt - self.w2() * th.cos();
    }

    fn trial_means(&self) -> Vec<f64> {
        vec![0.3]
    }

    fn initial(&self, preset: &str, grid: &SpatialGrid) -> Result<InitialData, ProblemError> {
        match preset {
            "default" => ode_initial(1, grid, &[0.5], Some(&[0.0])),
            other => Err(ProblemError::UnknownPreset(other.into())),
        }
    }

    fn defaults(&self) -> Defaults {
        Defaults {
            t_end: 10.0,
            steps: 1000,
            grid: None,
            preset: "default",
        }
    }

    fn consistency_setup(&self) -> ConsistencySetup {
        // theta = 0.5 sin t
        ConsistencySetup {
            field: TrigField::new(vec![0.0], vec![vec![Mode::new(0.5, 1.0, [0.0; 2], -FRAC_PI_2)]]),
            points: vec![(0.4, [0.0; 2]), (1.1, [0.0; 2]), (2.3, [0.0; 2]), (3.0, [0.0; 2])],
            tau0: 0.1,
            h_ratio: 1.0,
        }
    }
}
