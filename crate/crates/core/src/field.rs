//! Smooth analytic fields and point jets for the continuous operators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::MAX_DIM;

/// An analytic multi-component function of `(t, x)` with exact derivatives.
pub trait Field: Send + Sync {
    fn components(&self) -> usize;
    /// `d^nt/dt^nt d^nx/dx^nx` of component `c`.
    fn deriv(&self, c: usize, nt: usize, nx: [usize; MAX_DIM], t: f64, x: [f64; MAX_DIM]) -> f64;

    fn value(&self, c: usize, t: f64, x: [f64; MAX_DIM]) -> f64 {
        self.deriv(c, 0, [0; MAX_DIM], t, x)
    }
}

/// Derivatives of the unknowns at a single point, as consumed by the
/// continuous `F`, `Lambda`, `psi` and `Phi`.
pub trait Jet {
    fn d(&self, c: usize, nt: usize, nx: [usize; MAX_DIM]) -> f64;
    fn t(&self) -> f64;
    fn x(&self) -> [f64; MAX_DIM];

    fn u(&self, c: usize) -> f64 {
        self.d(c, 0, [0; MAX_DIM])
    }
    fn ut(&self, c: usize) -> f64 {
        self.d(c, 1, [0; MAX_DIM])
    }
    fn utt(&self, c: usize) -> f64 {
        self.d(c, 2, [0; MAX_DIM])
    }
    /// `k`-th derivative along `axis`.
    fn ux(&self, c: usize, axis: usize, k: usize) -> f64 {
        let mut nx = [0; MAX_DIM];
        nx[axis] = k;
        self.d(c, 0, nx)
    }
}

pub struct FieldJet<'a> {
    pub field: &'a dyn Field,
    pub t: f64,
    pub x: [f64; MAX_DIM],
}

impl Jet for FieldJet<'_> {
    fn d(&self, c: usize, nt: usize, nx: [usize; MAX_DIM]) -> f64 {
        self.field.deriv(c, nt, nx, self.t, self.x)
    }
    fn t(&self) -> f64 {
        self.t
    }
    fn x(&self) -> [f64; MAX_DIM] {
        self.x
    }
}

/// Explicit time jet of an ODE state: `orders[c][k]` is the `k`-th time
/// derivative of component `c`. Missing orders read as zero.
pub struct PointJet {
    pub t: f64,
    pub orders: Vec<Vec<f64>>,
}

impl Jet for PointJet {
    fn d(&self, c: usize, nt: usize, nx: [usize; MAX_DIM]) -> f64 {
        if nx != [0; MAX_DIM] {
            return 0.0;
        }
        self.orders[c].get(nt).copied().unwrap_or(0.0)
    }
    fn t(&self) -> f64 {
        self.t
    }
    fn x(&self) -> [f64; MAX_DIM] {
        [0.0; MAX_DIM]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub amp: f64,
    pub omega: f64,
    pub kappa: [f64; MAX_DIM],
    pub phase: f64,
}

impl Mode {
    pub fn new(amp: f64, omega: f64, kappa: [f64; MAX_DIM], phase: f64) -> Self {
        Self {
            amp,
            omega,
            kappa,
            phase,
        }
    }
}

/// `u_c = mean_c + sum_k amp cos(omega t + kappa . x + phase)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigField {
    pub means: Vec<f64>,
    pub modes: Vec<Vec<Mode>>,
}

impl TrigField {
    pub fn new(means: Vec<f64>, modes: Vec<Vec<Mode>>) -> Self {
        assert_eq!(means.len(), modes.len());
        Self { means, modes }
    }

    /// Three random modes per component with total amplitude at most
    /// `amp`, temporal frequencies in `[0.5, 1.5]` and integer spatial
    /// wavenumbers in `[-2, 2]` on the first `dim` axes.
    pub fn random(seed: u64, means: &[f64], amp: f64, dim: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let modes = means
            .iter()
            .map(|_| {
                (0..3)
                    .map(|_| {
                        let mut kappa = [0.0; MAX_DIM];
                        for k in kappa.iter_mut().take(dim) {
                            *k = rng.gen_range(-2i32..=2) as f64;
                        }
                        Mode {
                            amp: amp / 3.0 * rng.gen_range(-1.0..1.0),
                            omega: rng.gen_range(0.5..1.5),
                            kappa,
                            phase: rng.gen_range(0.0..std::f64::consts::TAU),
                        }
                    })
                    .collect()
            })
            .collect();
        Self::new(means.to_vec(), modes)
    }
}

#[inline]
fn cos_shift(arg: f64, quarter_turns: usize) -> f64 {
    match quarter_turns % 4 {
        0 => arg.cos(),
        1 => -arg.sin(),
        2 => -arg.cos(),
        _ => arg.sin(),
    }
}

impl Field for TrigField {
    fn components(&self) -> usize {
        self.means.len()
    }

    fn deriv(&self, c: usize, nt: usize, nx: [usize; MAX_DIM], t: f64, x: [f64; MAX_DIM]) -> f64 {
        let total = nt + nx.iter().sum::<usize>();
        let mut v = if total == 0 { self.means[c] } else { 0.0 };
        for m in &self.modes[c] {
            let mut arg = m.omega * t + m.phase;
            let mut fac = m.amp * m.omega.powi(nt as i32);
            for i in 0..MAX_DIM {
                arg += m.kappa[i] * x[i];
                fac *= m.kappa[i].powi(nx[i] as i32);
            }
            v += fac * cos_shift(arg, total);
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trig_derivatives_match_difference_quotients() {
        let f = TrigField::random(7, &[0.5, 1.0], 0.6, 2);
        let (t, x) = (0.3, [0.2, -0.4]);
        let d = 1e-5;
        for c in 0..2 {
            let num = (f.value(c, t + d, x) - f.value(c, t - d, x)) / (2.0 * d);
            assert!((num - f.deriv(c, 1, [0, 0], t, x)).abs() < 1e-9);
            let xp = [x[0] + d, x[1]];
            let xm = [x[0] - d, x[1]];
            let num = (f.deriv(c, 0, [2, 0], t, xp) - f.deriv(c, 0, [2, 0], t, xm)) / (2.0 * d);
            assert!((num - f.deriv(c, 0, [3, 0], t, x)).abs() < 1e-8);
        }
    }

    #[test]
    fn seeded_fields_repeat() {
        assert_eq!(
            TrigField::random(3, &[0.0], 1.0, 1),
            TrigField::random(3, &[0.0], 1.0, 1)
        );
    }
}
