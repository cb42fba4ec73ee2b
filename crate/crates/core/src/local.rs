//! Read-only stencil access used by the discrete operators.
//!
//! A [`Local`] answers "value of component `c` at time offset `dt` and
//! spatial offset `dx` from the evaluation point". Time offset 0 is the
//! evaluation index `n`; the scheme's newest unknown sits at `dt = lead`.

use std::cell::RefCell;
use std::collections::BTreeSet;

use crate::field::Field;
use crate::grid::{Index, SpatialGrid, MAX_DIM};

pub type Offset = [isize; MAX_DIM];

pub const ZERO: Offset = [0; MAX_DIM];

pub trait Local {
    fn u(&self, c: usize, dt: isize, dx: Offset) -> f64;
    /// Time of the level `dt` away from the evaluation index.
    fn t(&self, dt: isize) -> f64;
    fn tau(&self) -> f64;
    fn h(&self) -> f64;

    /// Value at the evaluation point itself.
    #[inline]
    fn at(&self, c: usize, dt: isize) -> f64 {
        self.u(c, dt, ZERO)
    }
}

#[inline]
pub fn unit(axis: usize, k: isize) -> Offset {
    let mut d = ZERO;
    d[axis] = k;
    d
}

/// View into mesh storage. `levels[0]` is the newest level (time index
/// `n + lead`).
pub struct GridView<'a> {
    levels: [&'a [f64]; 3],
    nlev: usize,
    lead: usize,
    m: usize,
    grid: &'a SpatialGrid,
    j: Index,
    t_n: f64,
    tau: f64,
}

impl<'a> GridView<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        levels: &[&'a [f64]],
        lead: usize,
        m: usize,
        grid: &'a SpatialGrid,
        j: Index,
        t_n: f64,
        tau: f64,
    ) -> Self {
        assert!(!levels.is_empty() && levels.len() <= 3);
        let mut l: [&'a [f64]; 3] = [levels[0]; 3];
        for (i, s) in levels.iter().enumerate() {
            l[i] = s;
        }
        Self {
            levels: l,
            nlev: levels.len(),
            lead,
            m,
            grid,
            j,
            t_n,
            tau,
        }
    }

    pub fn index(&self) -> Index {
        self.j
    }
}

impl Local for GridView<'_> {
    #[inline]
    fn u(&self, c: usize, dt: isize, dx: Offset) -> f64 {
        let back = self.lead as isize - dt;
        assert!(
            back >= 0 && (back as usize) < self.nlev,
            "time offset {dt} outside the retained levels"
        );
        let q = if dx == ZERO {
            self.j
        } else {
            match self.grid.offset(self.j, dx) {
                Ok(q) => q,
                Err(e) => panic!("stencil misconfiguration: {e}"),
            }
        };
        self.levels[back as usize][self.grid.linear(q) * self.m + c]
    }
    fn t(&self, dt: isize) -> f64 {
        self.t_n + dt as f64 * self.tau
    }
    fn tau(&self) -> f64 {
        self.tau
    }
    fn h(&self) -> f64 {
        self.grid.h()
    }
}

/// The same stencil translated in time and/or space.
pub struct Shifted<'a> {
    pub inner: &'a dyn Local,
    pub dt: isize,
    pub dx: Offset,
}

impl Local for Shifted<'_> {
    #[inline]
    fn u(&self, c: usize, dt: isize, dx: Offset) -> f64 {
        let mut d = dx;
        for i in 0..MAX_DIM {
            d[i] += self.dx[i];
        }
        self.inner.u(c, dt + self.dt, d)
    }
    fn t(&self, dt: isize) -> f64 {
        self.inner.t(dt + self.dt)
    }
    fn tau(&self) -> f64 {
        self.inner.tau()
    }
    fn h(&self) -> f64 {
        self.inner.h()
    }
}

/// Mesh samples of an analytic field around `(t, x)`.
pub struct Sampled<'a> {
    pub field: &'a dyn Field,
    pub t: f64,
    pub x: [f64; MAX_DIM],
    pub tau: f64,
    pub h: f64,
}

impl Local for Sampled<'_> {
    fn u(&self, c: usize, dt: isize, dx: Offset) -> f64 {
        let mut x = self.x;
        for i in 0..MAX_DIM {
            x[i] += dx[i] as f64 * self.h;
        }
        self.field.value(c, self.t + dt as f64 * self.tau, x)
    }
    fn t(&self, dt: isize) -> f64 {
        self.t + dt as f64 * self.tau
    }
    fn tau(&self) -> f64 {
        self.tau
    }
    fn h(&self) -> f64 {
        self.h
    }
}

/// Pseudo-random values on an unbounded stencil, reproducible from a seed.
/// Component `c` is drawn from `base[c] +- spread[c]`.
pub struct RandomBox<'a> {
    pub seed: u64,
    pub base: &'a [f64],
    pub spread: &'a [f64],
    pub t: f64,
    pub tau: f64,
    pub h: f64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Local for RandomBox<'_> {
    fn u(&self, c: usize, dt: isize, dx: Offset) -> f64 {
        let mut k = splitmix(self.seed ^ (c as u64).wrapping_mul(0x1000_0000_01b3));
        k = splitmix(k ^ dt as u64);
        k = splitmix(k ^ dx[0] as u64);
        k = splitmix(k ^ (dx[1] as u64).rotate_left(17));
        let unit = (k >> 11) as f64 / (1u64 << 53) as f64;
        self.base[c] + self.spread[c] * (2.0 * unit - 1.0)
    }
    fn t(&self, dt: isize) -> f64 {
        self.t + dt as f64 * self.tau
    }
    fn tau(&self) -> f64 {
        self.tau
    }
    fn h(&self) -> f64 {
        self.h
    }
}

/// Records every offset read through it.
pub struct Recording<'a> {
    pub inner: &'a dyn Local,
    pub seen: RefCell<BTreeSet<(isize, Offset)>>,
}

impl<'a> Recording<'a> {
    pub fn new(inner: &'a dyn Local) -> Self {
        Self {
            inner,
            seen: RefCell::new(BTreeSet::new()),
        }
    }
}

impl Local for Recording<'_> {
    fn u(&self, c: usize, dt: isize, dx: Offset) -> f64 {
        self.seen.borrow_mut().insert((dt, dx));
        self.inner.u(c, dt, dx)
    }
    fn t(&self, dt: isize) -> f64 {
        self.inner.t(dt)
    }
    fn tau(&self) -> f64 {
        self.inner.tau()
    }
    fn h(&self) -> f64 {
        self.inner.h()
    }
}
