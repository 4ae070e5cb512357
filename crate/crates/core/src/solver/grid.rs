//! Uniform 1D/2D cell-centered grids.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    Periodic,
    /// Zero-order extrapolation into ghost cells.
    #[default]
    Outflow,
}

/// Equidistant grid. A 1D grid has `ny = 1` and ignores `dy`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub dims: usize,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    /// Center of cell `(0, 0)`.
    pub origin: [f64; 2],
    pub boundary: Boundary,
}

impl Grid {
    pub fn new_1d(nx: usize, dx: f64, origin: f64, boundary: Boundary) -> Result<Self> {
        let g = Self {
            dims: 1,
            nx,
            ny: 1,
            dx,
            dy: 1.0,
            origin: [origin, 0.0],
            boundary,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn new_2d(nx: usize, ny: usize, dx: f64, dy: f64, origin: [f64; 2], boundary: Boundary) -> Result<Self> {
        let g = Self {
            dims: 2,
            nx,
            ny,
            dx,
            dy,
            origin,
            boundary,
        };
        g.validate()?;
        Ok(g)
    }

    /// Grid whose cells tile `[lo, hi]` along each axis.
    pub fn covering(dims: usize, n: [usize; 2], lo: [f64; 2], hi: [f64; 2], boundary: Boundary) -> Result<Self> {
        let dx = (hi[0] - lo[0]) / n[0] as f64;
        if dims == 1 {
            return Self::new_1d(n[0], dx, lo[0] + 0.5 * dx, boundary);
        }
        let dy = (hi[1] - lo[1]) / n[1] as f64;
        Self::new_2d(n[0], n[1], dx, dy, [lo[0] + 0.5 * dx, lo[1] + 0.5 * dy], boundary)
    }

    fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.dims) {
            return Err(Error::InvalidArgument(format!("grid dimension {} not in 1..=2", self.dims)));
        }
        if self.nx < 3 || (self.dims == 2 && self.ny < 3) {
            return Err(Error::InvalidArgument("grids need at least 3 cells per axis".into()));
        }
        if !(self.dx > 0.0 && self.dx.is_finite()) || !(self.dy > 0.0 && self.dy.is_finite()) {
            return Err(Error::InvalidArgument("grid spacings must be positive".into()));
        }
        if !self.origin.iter().all(|o| o.is_finite()) {
            return Err(Error::InvalidArgument("grid origin must be finite".into()));
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn coords(&self, c: usize) -> (usize, usize) {
        (c % self.nx, c / self.nx)
    }

    pub fn center(&self, c: usize) -> [f64; 2] {
        let (i, j) = self.coords(c);
        if self.dims == 1 {
            [self.origin[0] + i as f64 * self.dx, 0.0]
        } else {
            [self.origin[0] + i as f64 * self.dx, self.origin[1] + j as f64 * self.dy]
        }
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        if axis == 0 {
            self.dx
        } else {
            self.dy
        }
    }

    pub fn count(&self, axis: usize) -> usize {
        if axis == 0 {
            self.nx
        } else {
            self.ny
        }
    }

    /// Midpoint of the face between cell `c` and its neighbor in direction
    /// `side` (`+1` or `-1`) along `axis`.
    pub fn face_midpoint(&self, c: usize, axis: usize, side: i32) -> [f64; 2] {
        let mut p = self.center(c);
        p[axis] += 0.5 * side as f64 * self.spacing(axis);
        p
    }

    /// Neighbor of `c` in direction `side` along `axis`; `None` beyond an
    /// outflow boundary.
    pub fn neighbor(&self, c: usize, axis: usize, side: i32) -> Option<usize> {
        let (i, j) = self.coords(c);
        let (pos, n) = if axis == 0 { (i, self.nx) } else { (j, self.ny) };
        let next = pos as i64 + side as i64;
        let wrapped = if next < 0 || next >= n as i64 {
            match self.boundary {
                Boundary::Outflow => return None,
                Boundary::Periodic => next.rem_euclid(n as i64) as usize,
            }
        } else {
            next as usize
        };
        Some(if axis == 0 {
            self.index(wrapped, j)
        } else {
            self.index(i, wrapped)
        })
    }

    /// Position of `c` along `axis`.
    pub fn position(&self, c: usize, axis: usize) -> usize {
        let (i, j) = self.coords(c);
        if axis == 0 {
            i
        } else {
            j
        }
    }
}
