//! Uniform square-cell grids on axis-aligned rectangles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniform rectangular node grid with equal spacing in both axes.
///
/// Nodes sit at `(x0 + i*h, y0 + j*h)` for `i in 0..nx`, `j in 0..ny`.
/// The covered rectangle is `[x0, x0+(nx-1)h] x [y0, y0+(ny-1)h]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, x0: f64, y0: f64, h: f64) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::GridTooSmall { nx, ny });
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::NonPositiveSpacing(h));
        }
        Ok(Self { nx, ny, x0, y0, h })
    }

    /// Square grid centered on the origin: `n x n` nodes over `[-half, half]^2`.
    pub fn centered_square(n: usize, half: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::GridTooSmall { nx: n, ny: n });
        }
        let h = 2.0 * half / (n - 1) as f64;
        Self::new(n, n, -half, -half, h)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major index with the y-index outermost.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.h
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> [f64; 2] {
        [self.x(i), self.y(j)]
    }

    #[inline]
    pub fn x_max(&self) -> f64 {
        self.x(self.nx - 1)
    }

    #[inline]
    pub fn y_max(&self) -> f64 {
        self.y(self.ny - 1)
    }

    /// Whether a point lies inside the covered rectangle (closed).
    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x0 && p[0] <= self.x_max() && p[1] >= self.y0 && p[1] <= self.y_max()
    }

    /// Whether the closed disk `|x - c| <= r` lies strictly inside the rectangle.
    pub fn contains_disk_strictly(&self, center: [f64; 2], radius: f64) -> bool {
        center[0] - radius > self.x0
            && center[0] + radius < self.x_max()
            && center[1] - radius > self.y0
            && center[1] + radius < self.y_max()
    }

    /// Grid with the same nodes minus a frame of `margin` nodes on every side.
    pub fn eroded(&self, margin: usize) -> Result<Grid2D> {
        if self.nx <= 2 * margin + 2 || self.ny <= 2 * margin + 2 {
            return Err(Error::ErodedToNothing {
                eps: margin as f64 * self.h,
            });
        }
        Grid2D::new(
            self.nx - 2 * margin,
            self.ny - 2 * margin,
            self.x(margin),
            self.y(margin),
            self.h,
        )
    }

    /// Every-other-node subgrid (spacing 2h), anchored at the lower-left corner.
    pub fn coarsened(&self) -> Result<Grid2D> {
        let nx = (self.nx - 1) / 2 + 1;
        let ny = (self.ny - 1) / 2 + 1;
        Grid2D::new(nx, ny, self.x0, self.y0, 2.0 * self.h)
    }

    /// Nearest node index to a point, clamped to the grid.
    pub fn nearest(&self, p: [f64; 2]) -> (usize, usize) {
        let fi = ((p[0] - self.x0) / self.h).round();
        let fj = ((p[1] - self.y0) / self.h).round();
        let i = fi.clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = fj.clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }
}

/// Axis-aligned closed rectangle, used for sub-regions and partition parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Self {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x_min && p[0] <= self.x_max && p[1] >= self.y_min && p[1] <= self.y_max
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.x_min <= other.x_max
            && other.x_min <= self.x_max
            && self.y_min <= other.y_max
            && other.y_min <= self.y_max
    }

    pub fn of_grid(grid: &Grid2D) -> Self {
        Self::new(grid.x0, grid.x_max(), grid.y0, grid.y_max())
    }
}
