use super::*;
use crate::field::Mode;

const SPECS: [ParamSpec; 3] = [
    ParamSpec {
        name: "m",
        default: 1.0,
        check: positive,
    },
    ParamSpec {
        name: "k",
        default: 5.0,
        check: positive,
    },
    ParamSpec {
        name: "gamma",
        default: 0.5,
        check: non_negative,
    },
];

/// `m x_tt + gamma x_t + k x = 0`, discretised in the variable
/// `X = exp(gamma t / 2m) x`.
#[derive(Debug, Clone)]
pub struct Dho {
    info: ProblemInfo,
    m: f64,
    k: f64,
    gamma: f64,
}

impl Dho {
    pub fn new(m: f64, k: f64, gamma: f64) -> Self {
        Self {
            info: ProblemInfo {
                name: "dho",
                summary: "damped harmonic oscillator, exponentially weighted conserved quantity",
                m: 1,
                s: 1,
                n: 0,
                lead: 1,
                order_time: 2,
                order_space: 0,
                components: &["x"],
                densities: &["weighted_energy"],
            },
            m,
            k,
            gamma,
        }
    }

    pub fn from_params(p: &ParamSet) -> Result<Self, ProblemError> {
        let v = resolve("dho", &SPECS, p)?;
        Ok(Self::new(v[0], v[1], v[2]))
    }

    fn beta(&self) -> f64 {
        self.gamma / (2.0 * self.m)
    }

    fn kappa(&self) -> f64 {
        self.k - self.gamma * self.gamma / (4.0 * self.m)
    }

    fn big_x(&self, at: &dyn Local, dt: isize) -> f64 {
        (self.beta() * at.t(dt)).exp() * at.at(0, dt)
    }

    /// Bracket of the factored residual, before the `exp(-beta t_n)` weight.
    fn bracket(&self, at: &dyn Local) -> f64 {
        let tau = at.tau();
        let (x1, x0, xm) = (self.big_x(at, 1), self.big_x(at, 0), self.big_x(at, -1));
        self.m * (x1 - 2.0 * x0 + xm) / (tau * tau) + self.kappa() * (x1 + 2.0 * x0 + xm) / 4.0
    }

    /// Underdamped closed form; `None` when `k/m <= beta^2`.
    pub fn exact_xv(&self, x0: f64, v0: f64, t: f64) -> Option<f64> {
        let b = self.beta();
        let w2 = self.k / self.m - b * b;
        if w2 <= 0.0 {
            return None;
        }
        let w = w2.sqrt();
        let bb = (v0 + b * x0) / w;
        Some((-b * t).exp() * (x0 * (w * t).cos() + bb * (w * t).sin()))
    }

    /// Conserved value of the continuous density for the given data at `t0`.
    pub fn exact_density(&self, x0: f64, v0: f64, t0: f64) -> f64 {
        let b = self.beta();
        let y = v0 + b * x0;
        0.5 * (self.gamma * t0 / self.m).exp() * (self.m * y * y + self.kappa() * x0 * x0)
    }
}

impl MultiplierProblem for Dho {
    fn info(&self) -> &ProblemInfo {
        &self.info
    }
    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("m", self.m), ("k", self.k), ("gamma", self.gamma)]
    }
    fn stencil(&self) -> Stencil {
        Stencil::ode(1)
    }

    fn density(&self, at: &dyn Local, out: &mut [f64]) {
        let (x1, x0) = (self.big_x(at, 1), self.big_x(at, 0));
        let d = (x1 - x0) / at.tau();
        let a = 0.5 * (x1 + x0);
        out[0] = 0.5 * self.m * d * d + 0.5 * self.kappa() * a * a;
    }

    fn multiplier(&self, at: &dyn Local, out: &mut [f64]) {
        let w = (self.beta() * at.t(0)).exp();
        out[0] = w * (self.big_x(at, 1) - self.big_x(at, -1)) / (2.0 * at.tau());
    }

    fn time_derivative(&self, at: &dyn Local, out: &mut [f64]) -> bool {
        let central = (self.big_x(at, 1) - self.big_x(at, -1)) / (2.0 * at.tau());
        out[0] = self.bracket(at) * central;
        true
    }

    fn zero_compat(&self) -> Option<ZeroCompat> {
        Some(ZeroCompat { order: 1 })
    }

    fn zero_limit(&self, at: &dyn Local) -> Option<f64> {
        Some((-self.beta() * at.t(0)).exp() * self.bracket(at))
    }

    fn printed_residual(&self, at: &dyn Local, out: &mut [f64]) {
        let tau = at.tau();
        let e = (self.beta() * tau).exp();
        let (x1, x0, xm) = (at.at(0, 1), at.at(0, 0), at.at(0, -1));
        out[0] = self.m * (e * x1 - 2.0 * x0 + xm / e) / (tau * tau)
            + self.kappa() * (e * x1 + 2.0 * x0 + xm / e) / 4.0;
    }

    fn continuous(&self, j: &dyn Jet, out: &mut Continuous) {
        let (x, v) = (j.u(0), j.ut(0));
        let w = (self.gamma * j.t() / self.m).exp();
        let y = v + self.beta() * x;
        out.f[0] = self.m * j.utt(0) + self.gamma * v + self.k * x;
        out.lambda[0] = w * y;
        out.psi[0] = 0.5 * w * (self.m * y * y + self.kappa() * x * x);
    }

    fn exact(&self, init: &InitialData, t0: f64, t: f64, out: &mut [f64]) -> bool {
        let v0 = init.ut0.as_ref().map(|v| v[0]).unwrap_or(0.0);
        match self.exact_xv(init.u0[0], v0, t - t0) {
            Some(x) => {
                out[0] = x;
                true
            }
            None => false,
        }
    }

    fn initial(&self, preset: &str, grid: &SpatialGrid) -> Result<InitialData, ProblemError> {
        match preset {
            "default" => ode_initial(1, grid, &[1.0], Some(&[0.0])),
            other => Err(ProblemError::UnknownPreset(other.into())),
        }
    }

    fn defaults(&self) -> Defaults {
        Defaults {
            t_end: 10.0,
            steps: 200,
            grid: None,
            preset: "default",
        }
    }

    fn consistency_setup(&self) -> ConsistencySetup {
        ConsistencySetup {
            field: TrigField::new(
                vec![0.1],
                vec![vec![
                    Mode::new(1.0, 1.3, [0.0; 2], 0.2),
                    Mode::new(0.3, 0.6, [0.0; 2], -0.7),
                ]],
            ),
            points: vec![(0.5, [0.0; 2]), (1.5, [0.0; 2]), (2.5, [0.0; 2])],
            tau0: 0.1,
            h_ratio: 1.0,
        }
    }
}
