use super::*;
use crate::field::Mode;

const SPECS: [ParamSpec; 2] = [
    ParamSpec {
        name: "k2",
        default: 1.0,
        check: non_negative,
    },
    ParamSpec {
        name: "k4",
        default: 0.0,
        check: non_negative,
    },
];

/// Two particles on a line coupled by the even potential
/// `V(z) = k2 z^2 / 2 + k4 z^4 / 4`, `z = x1 - x2`.
#[derive(Debug, Clone)]
pub struct TwoBody {
    info: ProblemInfo,
    k2: f64,
    k4: f64,
}

impl TwoBody {
    pub fn new(k2: f64, k4: f64) -> Self {
        Self {
            info: ProblemInfo {
                name: "two_body",
                summary: "1-D two-body problem, momentum and energy conserved",
                m: 2,
                s: 2,
                n: 0,
                lead: 1,
                order_time: 2,
                order_space: 0,
                components: &["x1", "x2"],
                densities: &["momentum", "energy"],
            },
            k2,
            k4,
        }
    }

    pub fn from_params(p: &ParamSet) -> Result<Self, ProblemError> {
        let v = resolve("two_body", &SPECS, p)?;
        Ok(Self::new(v[0], v[1]))
    }

    pub fn potential(&self, z: f64) -> f64 {
        let z2 = z * z;
        0.5 * self.k2 * z2 + 0.25 * self.k4 * z2 * z2
    }

    pub fn force(&self, z: f64) -> f64 {
        self.k2 * z + self.k4 * z * z * z
    }

    /// `(V(a) - V(b)) / (a - b)` in closed form.
    pub fn divided(&self, a: f64, b: f64) -> f64 {
        let s = a + b;
        0.5 * self.k2 * s + 0.25 * self.k4 * s * (a * a + b * b)
    }

    fn z(at: &dyn Local, dt: isize) -> f64 {
        at.at(0, dt) - at.at(1, dt)
    }
}

impl MultiplierProblem for TwoBody {
    fn info(&self) -> &ProblemInfo {
        &self.info
    }
    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("k2", self.k2), ("k4", self.k4)]
    }
    fn stencil(&self) -> Stencil {
        Stencil::ode(1)
    }

    fn density(&self, at: &dyn Local, out: &mut [f64]) {
        let tau = at.tau();
        let v1 = (at.at(0, 1) - at.at(0, 0)) / tau;
        let v2 = (at.at(1, 1) - at.at(1, 0)) / tau;
        out[0] = v1 + v2;
        out[1] = 0.5 * v1 * v1
            + 0.5 * v2 * v2
            + 0.5 * (self.potential(Self::z(at, 1)) + self.potential(Self::z(at, 0)));
    }

    fn multiplier(&self, at: &dyn Local, out: &mut [f64]) {
        let tau2 = 2.0 * at.tau();
        out[0] = 1.0;
        out[1] = 1.0;
        out[2] = (at.at(0, 1) - at.at(0, -1)) / tau2;
        out[3] = (at.at(1, 1) - at.at(1, -1)) / tau2;
    }

    fn time_derivative(&self, at: &dyn Local, out: &mut [f64]) -> bool {
        let tau = at.tau();
        let mut sec = [0.0; 2];
        let mut w = [0.0; 2];
        for c in 0..2 {
            let (a, b, e) = (at.at(c, 1), at.at(c, 0), at.at(c, -1));
            sec[c] = (a - 2.0 * b + e) / (tau * tau);
            w[c] = (a - e) / (2.0 * tau);
        }
        let dv = self.divided(Self::z(at, 1), Self::z(at, -1));
        out[0] = sec[0] + sec[1];
        out[1] = w[0] * sec[0] + w[1] * sec[1] + (w[0] - w[1]) * dv;
        true
    }

    fn printed_residual(&self, at: &dyn Local, out: &mut [f64]) {
        let tau = at.tau();
        let (zp, zm) = (Self::z(at, 1), Self::z(at, -1));
        for c in 0..2 {
            let sec = (at.at(c, 1) - 2.0 * at.at(c, 0) + at.at(c, -1)) / (tau * tau);
            let sign = if c == 0 { 1.0 } else { -1.0 };
            let (a, b) = (sign * zp, sign * zm);
            out[c] = sec
                + if a == b {
                    self.force(a)
                } else {
                    (self.potential(a) - self.potential(b)) / (a - b)
                };
        }
    }

    fn continuous(&self, j: &dyn Jet, out: &mut Continuous) {
        let z = j.u(0) - j.u(1);
        let (v1, v2) = (j.ut(0), j.ut(1));
        out.f[0] = j.utt(0) + self.force(z);
        out.f[1] = j.utt(1) - self.force(z);
        out.lambda[..4].copy_from_slice(&[1.0, 1.0, v1, v2]);
        out.psi[0] = v1 + v2;
        out.psi[1] = 0.5 * (v1 * v1 + v2 * v2) + self.potential(z);
    }

    fn exact(&self, init: &InitialData, t0: f64, t: f64, out: &mut [f64]) -> bool {
        if self.k4 != 0.0 {
            return false;
        }
        let v = init.ut0.clone().unwrap_or_else(|| vec![0.0; 2]);
        let (x, s) = (&init.u0, t - t0);
        let (c0, c1) = (0.5 * (x[0] + x[1]), 0.5 * (v[0] + v[1]));
        let (z0, z1) = (x[0] - x[1], v[0] - v[1]);
        let om = (2.0 * self.k2).sqrt();
        let z = if om == 0.0 {
            z0 + z1 * s
        } else {
            z0 * (om * s).cos() + z1 / om * (om * s).sin()
        };
        let c = c0 + c1 * s;
        out[0] = c + 0.5 * z;
        out[1] = c - 0.5 * z;
        true
    }

    fn trial_means(&self) -> Vec<f64> {
        vec![0.5, -0.5]
    }

    fn initial(&self, preset: &str, grid: &SpatialGrid) -> Result<InitialData, ProblemError> {
        match preset {
            "default" => ode_initial(2, grid, &[1.0, -1.0], Some(&[0.3, -0.1])),
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
        ConsistencySetup {
            field: TrigField::new(
                vec![0.0, 0.2],
                vec![
                    vec![Mode::new(0.8, 1.1, [0.0; 2], 0.3)],
                    vec![Mode::new(-0.5, 0.7, [0.0; 2], -0.4)],
                ],
            ),
            points: vec![(0.4, [0.0; 2]), (1.2, [0.0; 2]), (2.1, [0.0; 2])],
            tau0: 0.1,
            h_ratio: 1.0,
        }
    }
}
