//! Uniform time and space meshes plus the multi-level field storage.

use std::collections::VecDeque;

use crate::error::GridError;

/// Maximum spatial dimension handled by the crate.
pub const MAX_DIM: usize = 2;

/// Multi-index of a spatial mesh point. Unused axes are always 0.
pub type Index = [usize; MAX_DIM];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub tau: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, tau: f64, steps: usize) -> Result<Self, GridError> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(GridError::BadStep(tau));
        }
        if !t0.is_finite() {
            return Err(GridError::BadOrigin(t0));
        }
        Ok(Self { t0, tau, steps })
    }

    /// `N` equal steps covering `[t0, t_end]`.
    pub fn with_steps(t0: f64, t_end: f64, steps: usize) -> Result<Self, GridError> {
        if steps == 0 {
            return Err(GridError::NoSteps);
        }
        Self::new(t0, (t_end - t0) / steps as f64, steps)
    }

    /// Fixed `tau`, `N = floor((t_end - t0) / tau)`. A quotient within a few
    /// ulps of an integer is rounded to it so that `T = N * tau` inputs land
    /// on the intended count.
    pub fn with_tau(t0: f64, t_end: f64, tau: f64) -> Result<Self, GridError> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(GridError::BadStep(tau));
        }
        let q = (t_end - t0) / tau;
        let r = q.round();
        let steps = if (q - r).abs() <= 64.0 * f64::EPSILON * q.abs().max(1.0) {
            r
        } else {
            q.floor()
        };
        Self::new(t0, tau, steps.max(0.0) as usize)
    }

    #[inline]
    pub fn time(&self, k: isize) -> f64 {
        self.t0 + k as f64 * self.tau
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.steps as isize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryMode {
    Periodic,
    Boundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    dim: usize,
    h: f64,
    extent: Index,
    mode: [BoundaryMode; MAX_DIM],
    origin: [f64; MAX_DIM],
}

impl SpatialGrid {
    /// The single-point "grid" used by ODE problems.
    pub fn point() -> Self {
        Self {
            dim: 0,
            h: 1.0,
            extent: [1, 1],
            mode: [BoundaryMode::Periodic; MAX_DIM],
            origin: [0.0; MAX_DIM],
        }
    }

    pub fn new(
        h: f64,
        extent: &[usize],
        mode: &[BoundaryMode],
        origin: &[f64],
    ) -> Result<Self, GridError> {
        let dim = extent.len();
        if dim == 0 {
            return Ok(Self::point());
        }
        if dim > MAX_DIM {
            return Err(GridError::Dimension(dim));
        }
        if mode.len() != dim || origin.len() != dim {
            return Err(GridError::AxisCount {
                extent: dim,
                mode: mode.len(),
                origin: origin.len(),
            });
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(GridError::BadWidth(h));
        }
        let mut g = Self {
            dim,
            h,
            extent: [1, 1],
            mode: [BoundaryMode::Periodic; MAX_DIM],
            origin: [0.0; MAX_DIM],
        };
        for i in 0..dim {
            if extent[i] == 0 {
                return Err(GridError::EmptyAxis(i));
            }
            g.extent[i] = extent[i];
            g.mode[i] = mode[i];
            g.origin[i] = origin[i];
        }
        Ok(g)
    }

    /// Periodic grid of `extent` points per axis covering `[a, b)`.
    pub fn periodic(extent: &[usize], a: f64, b: f64) -> Result<Self, GridError> {
        let n = *extent.first().ok_or(GridError::Dimension(0))?;
        let h = (b - a) / n as f64;
        let mode = vec![BoundaryMode::Periodic; extent.len()];
        let origin = vec![a; extent.len()];
        Self::new(h, extent, &mode, &origin)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn extent(&self) -> &[usize] {
        &self.extent[..self.dim]
    }
    pub fn mode(&self, axis: usize) -> BoundaryMode {
        self.mode[axis]
    }
    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.dim]
    }

    pub fn npoints(&self) -> usize {
        self.extent.iter().product()
    }

    #[inline]
    pub fn linear(&self, j: Index) -> usize {
        j[0] + self.extent[0] * j[1]
    }

    #[inline]
    pub fn multi(&self, p: usize) -> Index {
        [p % self.extent[0], p / self.extent[0]]
    }

    pub fn coord(&self, j: Index) -> [f64; MAX_DIM] {
        let mut x = [0.0; MAX_DIM];
        for i in 0..self.dim {
            x[i] = self.origin[i] + j[i] as f64 * self.h;
        }
        x
    }

    /// `J + offset * e_axis`, wrapping on periodic axes.
    pub fn offset_axis(&self, j: Index, axis: usize, offset: isize) -> Result<Index, GridError> {
        if offset == 0 {
            return Ok(j);
        }
        if axis >= self.dim {
            return Err(GridError::AxisOutOfRange { axis, dim: self.dim });
        }
        let n = self.extent[axis] as isize;
        let raw = j[axis] as isize + offset;
        let mut out = j;
        out[axis] = match self.mode[axis] {
            BoundaryMode::Periodic => raw.rem_euclid(n) as usize,
            BoundaryMode::Boundary => {
                if raw < 0 || raw >= n {
                    return Err(GridError::OutOfRange {
                        index: j,
                        axis,
                        offset,
                    });
                }
                raw as usize
            }
        };
        Ok(out)
    }

    /// `J + d` for a full offset vector.
    pub fn offset(&self, j: Index, d: [isize; MAX_DIM]) -> Result<Index, GridError> {
        let mut out = j;
        for (axis, &o) in d.iter().enumerate() {
            if o != 0 {
                out = self.offset_axis(out, axis, o)?;
            }
        }
        Ok(out)
    }

    /// Boundary points of the rectangle with their outward normals. Corner
    /// points carry a nonzero entry for every face they touch.
    pub fn boundary_indices(&self) -> Vec<(Index, [i8; MAX_DIM])> {
        let mut out = Vec::new();
        for p in 0..self.npoints() {
            let j = self.multi(p);
            let mut nu = [0i8; MAX_DIM];
            for i in 0..self.dim {
                if self.mode[i] == BoundaryMode::Periodic {
                    continue;
                }
                if j[i] == 0 {
                    nu[i] -= 1;
                }
                if j[i] + 1 == self.extent[i] {
                    nu[i] += 1;
                }
            }
            if self.is_boundary(j) {
                out.push((j, nu));
            }
        }
        out
    }

    pub fn is_boundary(&self, j: Index) -> bool {
        (0..self.dim).any(|i| {
            self.mode[i] == BoundaryMode::Boundary && (j[i] == 0 || j[i] + 1 == self.extent[i])
        })
    }

    /// Points where a residual with the given backward and forward reach can
    /// be evaluated without leaving the mesh. Every point on periodic axes.
    pub fn solve_set(&self, back: [usize; MAX_DIM], fwd: [usize; MAX_DIM]) -> Vec<usize> {
        (0..self.npoints())
            .filter(|&p| {
                let j = self.multi(p);
                (0..self.dim).all(|i| {
                    self.mode[i] == BoundaryMode::Periodic
                        || (j[i] >= back[i] && j[i] + fwd[i] < self.extent[i])
                })
            })
            .collect()
    }

    /// Checks that every non-periodic axis leaves at least one point with
    /// the full stencil and every periodic axis is at least as long as it.
    pub fn check_stencil(&self, back: [usize; MAX_DIM], fwd: [usize; MAX_DIM]) -> Result<(), GridError> {
        for i in 0..self.dim {
            let width = back[i] + fwd[i] + 1;
            if self.extent[i] < width {
                return Err(GridError::TooNarrow {
                    axis: i,
                    extent: self.extent[i],
                    width,
                });
            }
        }
        Ok(())
    }
}

/// Discrete solution values on the retained time levels, newest first.
///
/// Layout within a level is point-major: value `(c, p)` lives at `p * m + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    m: usize,
    npoints: usize,
    capacity: usize,
    newest: usize,
    levels: VecDeque<Vec<f64>>,
}

impl FieldState {
    pub fn new(m: usize, npoints: usize, capacity: usize, first: Vec<f64>) -> Self {
        assert_eq!(first.len(), m * npoints, "level length");
        assert!(capacity >= 1);
        let mut levels = VecDeque::with_capacity(capacity);
        levels.push_back(first);
        Self {
            m,
            npoints,
            capacity,
            newest: 0,
            levels,
        }
    }

    pub fn components(&self) -> usize {
        self.m
    }
    pub fn npoints(&self) -> usize {
        self.npoints
    }
    pub fn capacity(&self) -> usize {
        self.capacity
    }
    /// Time index of the newest retained level.
    pub fn newest_index(&self) -> usize {
        self.newest
    }
    pub fn len(&self) -> usize {
        self.levels.len()
    }
    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Level `back` steps behind the newest one.
    pub fn level(&self, back: usize) -> &[f64] {
        &self.levels[back]
    }

    pub fn level_at(&self, k: usize) -> Option<&[f64]> {
        let back = self.newest.checked_sub(k)?;
        self.levels.get(back).map(|v| v.as_slice())
    }

    #[inline]
    pub fn value(&self, back: usize, c: usize, p: usize) -> f64 {
        self.levels[back][p * self.m + c]
    }

    /// Pushes a new newest level, dropping the oldest once at capacity.
    /// Existing levels are moved, never recomputed.
    pub fn advance(&mut self, next: Vec<f64>) {
        assert_eq!(next.len(), self.m * self.npoints, "level length");
        if self.levels.len() == self.capacity {
            self.levels.pop_back();
        }
        self.levels.push_front(next);
        self.newest += 1;
    }

    /// All `m` values at `J + offset * e_axis` on the newest level.
    pub fn shift(
        &self,
        grid: &SpatialGrid,
        j: Index,
        axis: usize,
        offset: isize,
    ) -> Result<Vec<f64>, GridError> {
        let q = grid.linear(grid.offset_axis(j, axis, offset)?);
        Ok(self.levels[0][q * self.m..(q + 1) * self.m].to_vec())
    }

    pub fn all_finite(&self) -> bool {
        self.levels.iter().all(|l| l.iter().all(|v| v.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize, mode: BoundaryMode) -> SpatialGrid {
        SpatialGrid::new(0.5, &[n], &[mode], &[0.0]).unwrap()
    }

    #[test]
    fn interval_boundary() {
        let g = line(5, BoundaryMode::Boundary);
        let b = g.boundary_indices();
        assert_eq!(b, vec![([0, 0], [-1, 0]), ([4, 0], [1, 0])]);
    }

    #[test]
    fn square_boundary() {
        let g = SpatialGrid::new(1.0, &[3, 3], &[BoundaryMode::Boundary; 2], &[0.0, 0.0]).unwrap();
        let b = g.boundary_indices();
        assert_eq!(b.len(), 8);
        assert!(b.iter().all(|(j, _)| *j != [1, 1]));
        let corner = b.iter().find(|(j, _)| *j == [2, 0]).unwrap();
        assert_eq!(corner.1, [1, -1]);
    }

    #[test]
    fn periodic_has_no_boundary() {
        let g = SpatialGrid::periodic(&[4, 6], 0.0, 1.0).unwrap();
        assert!(g.boundary_indices().is_empty());
    }

    #[test]
    fn shift_wraps_or_fails() {
        let p = line(4, BoundaryMode::Periodic);
        let b = line(4, BoundaryMode::Boundary);
        let vals: Vec<f64> = (0..4).map(|i| i as f64 * 10.0).collect();
        let s = FieldState::new(1, 4, 1, vals);
        assert_eq!(s.shift(&p, [3, 0], 0, 1).unwrap(), vec![0.0]);
        assert!(s.shift(&b, [3, 0], 0, 1).is_err());
        assert_eq!(s.shift(&b, [2, 0], 0, 0).unwrap(), vec![20.0]);
    }

    #[test]
    fn rotation_moves_levels() {
        let mut s = FieldState::new(1, 2, 3, vec![0.1, 0.2]);
        s.advance(vec![1.1, 1.2]);
        s.advance(vec![2.1, 2.2]);
        s.advance(vec![3.1, 3.2]);
        assert_eq!(s.newest_index(), 3);
        assert_eq!(s.len(), 3);
        assert_eq!(s.level(2), &[1.1, 1.2]);
        assert_eq!(s.level_at(3).unwrap(), &[3.1, 3.2]);
        assert!(s.level_at(0).is_none());
    }

    #[test]
    fn time_grid_counts() {
        let g = TimeGrid::with_tau(0.0, 10.0, 1e-3).unwrap();
        assert_eq!(g.steps, 10_000);
        let g = TimeGrid::with_tau(0.0, 0.05, 0.1).unwrap();
        assert_eq!(g.steps, 0);
        let g = TimeGrid::with_steps(0.0, 10.0, 200).unwrap();
        assert_eq!(g.tau, 0.05);
        assert_eq!(g.time(200), 10.0);
    }

    #[test]
    fn solve_set_trims_non_periodic() {
        let g = line(6, BoundaryMode::Boundary);
        assert_eq!(g.solve_set([2, 0], [1, 0]), vec![2, 3, 4]);
        let g = line(6, BoundaryMode::Periodic);
        assert_eq!(g.solve_set([2, 0], [1, 0]).len(), 6);
    }
}
