use super::*;
use crate::field::Mode;

const SPECS: [ParamSpec; 4] = [
    ParamSpec {
        name: "a",
        default: 1.0,
        check: positive,
    },
    ParamSpec {
        name: "b",
        default: 1.0,
        check: positive,
    },
    ParamSpec {
        name: "c",
        default: 1.0,
        check: positive,
    },
    ParamSpec {
        name: "d",
        default: 1.0,
        check: positive,
    },
];

/// Predator-prey system; one conservation law for two equations.
#[derive(Debug, Clone)]
pub struct LotkaVolterra {
    info: ProblemInfo,
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl LotkaVolterra {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self {
            info: ProblemInfo {
                name: "lotka_volterra",
                summary: "Lotka-Volterra predator-prey, rectangular multiplier (s=1, m=2)",
                m: 2,
                s: 1,
                n: 0,
                lead: 0,
                order_time: 1,
                order_space: 0,
                components: &["x", "y"],
                densities: &["log_invariant"],
            },
            a,
            b,
            c,
            d,
        }
    }

    pub fn from_params(p: &ParamSet) -> Result<Self, ProblemError> {
        let v = resolve("lotka_volterra", &SPECS, p)?;
        Ok(Self::new(v[0], v[1], v[2], v[3]))
    }
}

impl MultiplierProblem for LotkaVolterra {
    fn info(&self) -> &ProblemInfo {
        &self.info
    }
    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("a", self.a), ("b", self.b), ("c", self.c), ("d", self.d)]
    }
    fn stencil(&self) -> Stencil {
        Stencil::ode(0)
    }

    fn density(&self, at: &dyn Local, out: &mut [f64]) {
        let (x, y) = (at.at(0, 0), at.at(1, 0));
        out[0] = self.c * x.ln() + self.a * y.ln() - self.d * x - self.b * y;
    }

    fn multiplier(&self, at: &dyn Local, out: &mut [f64]) {
        out[0] = self.c / at.at(0, 0) - self.d;
        out[1] = self.a / at.at(1, 0) - self.b;
    }

    fn remainder(&self, at: &dyn Local, out: &mut [f64]) {
        let y = at.at(1, 0);
        out[0] = (y - at.at(1, -1)) / at.tau() + y * (self.c - self.d * at.at(0, 0));
    }

    fn time_derivative(&self, at: &dyn Local, out: &mut [f64]) -> bool {
        let (x, xm, y, ym) = (at.at(0, 0), at.at(0, -1), at.at(1, 0), at.at(1, -1));
        let (dx, dy) = (x - xm, y - ym);
        out[0] = (self.c * (dx / xm).ln_1p() + self.a * (dy / ym).ln_1p() - self.d * dx - self.b * dy)
            / at.tau();
        true
    }

    fn printed_residual(&self, at: &dyn Local, out: &mut [f64]) {
        let tau = at.tau();
        let (x, xm, y, ym) = (at.at(0, 0), at.at(0, -1), at.at(1, 0), at.at(1, -1));
        let lt = self.c / x - self.d;
        out[0] = (self.c * (x.ln() - xm.ln()) / tau - self.d * (x - xm) / tau
            - lt * x * (self.a - self.b * y)
            + self.a * (y.ln() - ym.ln()) / tau
            - self.a / y * (y - ym) / tau)
            / lt;
        out[1] = (y - ym) / tau + y * (self.c - self.d * x);
    }

    fn admissible(&self, at: &dyn Local) -> Result<(), String> {
        for dt in [-1, 0] {
            let (x, y) = (at.at(0, dt), at.at(1, dt));
            if !(x > 0.0 && y > 0.0) {
                return Err(format!("populations must stay positive, got x={x}, y={y}"));
            }
        }
        Ok(())
    }

    fn continuous(&self, j: &dyn Jet, out: &mut Continuous) {
        let (x, y) = (j.u(0), j.u(1));
        out.f[0] = j.ut(0) - x * (self.a - self.b * y);
        out.f[1] = j.ut(1) + y * (self.c - self.d * x);
        out.lambda[0] = self.c / x - self.d;
        out.lambda[1] = self.a / y - self.b;
        out.psi[0] = self.c * x.ln() + self.a * y.ln() - self.d * x - self.b * y;
    }

    fn trial_means(&self) -> Vec<f64> {
        vec![2.0 * self.c / self.d, 2.0 * self.a / self.b]
    }
    fn trial_amplitude(&self) -> f64 {
        0.3 * (self.c / self.d).min(self.a / self.b)
    }

    fn initial(&self, preset: &str, grid: &SpatialGrid) -> Result<InitialData, ProblemError> {
        match preset {
            "default" => ode_initial(2, grid, &[2.0, 1.0], None),
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
        let (x0, y0) = (2.0 * self.c / self.d, 1.5 * self.a / self.b);
        ConsistencySetup {
            field: TrigField::new(
                vec![x0, y0],
                vec![
                    vec![Mode::new(0.15 * x0, 1.0, [0.0; 2], 0.0)],
                    vec![Mode::new(0.15 * y0, 1.3, [0.0; 2], -1.2)],
                ],
            ),
            points: vec![(0.3, [0.0; 2]), (1.0, [0.0; 2]), (1.7, [0.0; 2])],
            tau0: 0.05,
            h_ratio: 1.0,
        }
    }
}
