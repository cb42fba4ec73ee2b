use super::*;
use crate::field::Mode;

const SPECS: [ParamSpec; 2] = [
    ParamSpec {
        name: "m",
        default: 1.0,
        check: positive,
    },
    ParamSpec {
        name: "k",
        default: 5.0,
        check: non_negative,
    },
];

/// Harmonic oscillator whose discrete density difference factors exactly
/// through the central-difference multiplier.
#[derive(Debug, Clone)]
pub struct FactoredOscillator {
    info: ProblemInfo,
    m: f64,
    k: f64,
}

impl FactoredOscillator {
    pub fn new(m: f64, k: f64) -> Self {
        Self {
            info: ProblemInfo {
                name: "factored_oscillator",
                summary: "harmonic oscillator, multiplier zeros removed by exact factoring",
                m: 1,
                s: 1,
                n: 0,
                lead: 1,
                order_time: 2,
                order_space: 0,
                components: &["x"],
                densities: &["energy"],
            },
            m,
            k,
        }
    }

    pub fn from_params(p: &ParamSet) -> Result<Self, ProblemError> {
        let v = resolve("factored_oscillator", &SPECS, p)?;
        Ok(Self::new(v[0], v[1]))
    }

    /// The factor `G` with `D_t psi = lambda * G`.
    pub fn factor(&self, at: &dyn Local) -> f64 {
        let tau = at.tau();
        let (a, c, b) = (at.at(0, 1), at.at(0, 0), at.at(0, -1));
        self.m * (a - 2.0 * c + b) / (tau * tau) + self.k * (a + 2.0 * c + b) / 4.0
    }
}

impl MultiplierProblem for FactoredOscillator {
    fn info(&self) -> &ProblemInfo {
        &self.info
    }
    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("m", self.m), ("k", self.k)]
    }
    fn stencil(&self) -> Stencil {
        Stencil::ode(1)
    }

    fn density(&self, at: &dyn Local, out: &mut [f64]) {
        let (a, b) = (at.at(0, 1), at.at(0, 0));
        let v = (a - b) / at.tau();
        let x = 0.5 * (a + b);
        out[0] = 0.5 * self.m * v * v + 0.5 * self.k * x * x;
    }

    fn multiplier(&self, at: &dyn Local, out: &mut [f64]) {
        out[0] = (at.at(0, 1) - at.at(0, -1)) / (2.0 * at.tau());
    }

    fn time_derivative(&self, at: &dyn Local, out: &mut [f64]) -> bool {
        let lam = (at.at(0, 1) - at.at(0, -1)) / (2.0 * at.tau());
        out[0] = lam * self.factor(at);
        true
    }

    fn zero_compat(&self) -> Option<ZeroCompat> {
        Some(ZeroCompat { order: 1 })
    }

    fn zero_limit(&self, at: &dyn Local) -> Option<f64> {
        Some(self.factor(at))
    }

    fn printed_residual(&self, at: &dyn Local, out: &mut [f64]) {
        out[0] = self.factor(at);
    }

    fn continuous(&self, j: &dyn Jet, out: &mut Continuous) {
        let (x, v) = (j.u(0), j.ut(0));
        out.f[0] = self.m * j.utt(0) + self.k * x;
        out.lambda[0] = v;
        out.psi[0] = 0.5 * self.m * v * v + 0.5 * self.k * x * x;
    }

    fn exact(&self, init: &InitialData, t0: f64, t: f64, out: &mut [f64]) -> bool {
        let v0 = init.ut0.as_ref().map(|v| v[0]).unwrap_or(0.0);
        let (x0, s) = (init.u0[0], t - t0);
        let w = (self.k / self.m).sqrt();
        out[0] = if w == 0.0 {
            x0 + v0 * s
        } else {
            x0 * (w * s).cos() + v0 / w * (w * s).sin()
        };
        true
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
            field: TrigField::new(vec![0.2], vec![vec![Mode::new(1.0, 1.2, [0.0; 2], 0.0)]]),
            points: vec![(0.5, [0.0; 2]), (1.5, [0.0; 2]), (2.5, [0.0; 2])],
            tau0: 0.1,
            h_ratio: 1.0,
        }
    }
}
