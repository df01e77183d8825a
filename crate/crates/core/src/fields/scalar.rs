//! Sampled scalar, vector and symmetric-matrix fields.

use crate::error::{Error, Result};
use crate::fields::grid::Grid2D;

/// A real-valued function sampled at every node of a [`Grid2D`].
///
/// Values are stored row-major with the y-index outermost; all values are
/// finite by construction. Fields are immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    grid: Grid2D,
    values: Vec<f64>,
}

impl ScalarField2D {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        assert_eq!(values.len(), grid.len(), "value buffer does not match grid");
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let v = values[grid.idx(i, j)];
                if !v.is_finite() {
                    return Err(Error::NonFiniteSample {
                        x: grid.x(i),
                        y: grid.y(j),
                        value: v,
                    });
                }
            }
        }
        Ok(Self { grid, values })
    }

    /// Sample an analytic function at every node.
    pub fn sample(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = vec![0.0; grid.len()];
        for j in 0..grid.ny {
            let y = grid.y(j);
            for i in 0..grid.nx {
                values[grid.idx(i, j)] = f(grid.x(i), y);
            }
        }
        Self::new(grid, values)
    }

    pub fn constant(grid: Grid2D, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.len()])
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    /// Bilinear interpolation at an arbitrary point of the grid rectangle.
    pub fn interp(&self, p: [f64; 2]) -> f64 {
        let g = &self.grid;
        let fx = ((p[0] - g.x0) / g.h).clamp(0.0, (g.nx - 1) as f64);
        let fy = ((p[1] - g.y0) / g.h).clamp(0.0, (g.ny - 1) as f64);
        let i0 = (fx.floor() as usize).min(g.nx - 2);
        let j0 = (fy.floor() as usize).min(g.ny - 2);
        let tx = fx - i0 as f64;
        let ty = fy - j0 as f64;
        let v00 = self.at(i0, j0);
        let v10 = self.at(i0 + 1, j0);
        let v01 = self.at(i0, j0 + 1);
        let v11 = self.at(i0 + 1, j0 + 1);
        v00 * (1.0 - tx) * (1.0 - ty) + v10 * tx * (1.0 - ty) + v01 * (1.0 - tx) * ty + v11 * tx * ty
    }

    /// Pointwise combination of two fields on a common grid.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(self.grid, values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Result<Self> {
        self.map(|v| s * v)
    }

    /// Sup norm over the nodes.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Node-rule integral `h^2 * sum(values)`.
    pub fn integral(&self) -> f64 {
        let h2 = self.grid.h * self.grid.h;
        self.values.iter().sum::<f64>() * h2
    }

    /// Restriction to a subgrid whose nodes all coincide with nodes of `self`.
    pub fn restrict_to(&self, sub: &Grid2D) -> Result<Self> {
        let g = &self.grid;
        if (sub.h / g.h - 1.0).abs() > 1e-12 {
            return Err(Error::GridMismatch);
        }
        let oi = (sub.x0 - g.x0) / g.h;
        let oj = (sub.y0 - g.y0) / g.h;
        if (oi - oi.round()).abs() > 1e-9 || (oj - oj.round()).abs() > 1e-9 {
            return Err(Error::GridMismatch);
        }
        let (oi, oj) = (oi.round() as isize, oj.round() as isize);
        if oi < 0
            || oj < 0
            || oi as usize + sub.nx > g.nx
            || oj as usize + sub.ny > g.ny
        {
            return Err(Error::GridMismatch);
        }
        let (oi, oj) = (oi as usize, oj as usize);
        let mut values = vec![0.0; sub.len()];
        for j in 0..sub.ny {
            for i in 0..sub.nx {
                values[sub.idx(i, j)] = self.at(oi + i, oj + j);
            }
        }
        Self::new(*sub, values)
    }

    /// Every-other-node subsampling, spacing doubles.
    pub fn coarsened(&self) -> Result<Self> {
        let cg = self.grid.coarsened()?;
        let mut values = vec![0.0; cg.len()];
        for j in 0..cg.ny {
            for i in 0..cg.nx {
                values[cg.idx(i, j)] = self.at(2 * i, 2 * j);
            }
        }
        Self::new(cg, values)
    }
}

/// A pair of scalar fields on the same grid, read as a planar map or gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField2D {
    pub x: ScalarField2D,
    pub y: ScalarField2D,
}

impl VectorField2D {
    pub fn new(x: ScalarField2D, y: ScalarField2D) -> Result<Self> {
        if x.grid() != y.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { x, y })
    }

    pub fn sample(grid: Grid2D, f: impl Fn(f64, f64) -> [f64; 2]) -> Result<Self> {
        let fx = ScalarField2D::sample(grid, |x, y| f(x, y)[0])?;
        let fy = ScalarField2D::sample(grid, |x, y| f(x, y)[1])?;
        Self::new(fx, fy)
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        self.x.grid()
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> [f64; 2] {
        [self.x.at(i, j), self.y.at(i, j)]
    }

    pub fn interp(&self, p: [f64; 2]) -> [f64; 2] {
        [self.x.interp(p), self.y.interp(p)]
    }

    pub fn sup_norm(&self) -> f64 {
        self.x.sup_norm().max(self.y.sup_norm())
    }
}

/// Symmetric 2x2 matrix field; `g12` doubles as `g21`.
///
/// When built through [`SymMatrixField2D::metric`] the field carries a
/// positive-definiteness certificate: `g11 > 0` everywhere and
/// `det g >= lambda > 0` with the witnessed `lambda` recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrixField2D {
    pub g11: ScalarField2D,
    pub g12: ScalarField2D,
    pub g22: ScalarField2D,
    lambda: Option<f64>,
}

impl SymMatrixField2D {
    pub fn new(g11: ScalarField2D, g12: ScalarField2D, g22: ScalarField2D) -> Result<Self> {
        if g11.grid() != g12.grid() || g11.grid() != g22.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            g11,
            g12,
            g22,
            lambda: None,
        })
    }

    /// Flag the field as a Riemannian metric, verifying `det g >= lambda`.
    pub fn metric(
        g11: ScalarField2D,
        g12: ScalarField2D,
        g22: ScalarField2D,
        lambda: f64,
    ) -> Result<Self> {
        let mut m = Self::new(g11, g12, g22)?;
        let min_det = m.min_det();
        let min_g11 = m.g11.values().iter().cloned().fold(f64::INFINITY, f64::min);
        if min_det < lambda || min_g11 <= 0.0 {
            return Err(Error::MetricNotPositive {
                min_det: min_det.min(min_g11),
                lambda,
            });
        }
        m.lambda = Some(lambda);
        Ok(m)
    }

    pub fn sample_metric(
        grid: Grid2D,
        f: impl Fn(f64, f64) -> [f64; 3],
        lambda: f64,
    ) -> Result<Self> {
        let g11 = ScalarField2D::sample(grid, |x, y| f(x, y)[0])?;
        let g12 = ScalarField2D::sample(grid, |x, y| f(x, y)[1])?;
        let g22 = ScalarField2D::sample(grid, |x, y| f(x, y)[2])?;
        Self::metric(g11, g12, g22, lambda)
    }

    pub fn identity(grid: Grid2D) -> Result<Self> {
        Self::metric(
            ScalarField2D::constant(grid, 1.0)?,
            ScalarField2D::constant(grid, 0.0)?,
            ScalarField2D::constant(grid, 1.0)?,
            0.5,
        )
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        self.g11.grid()
    }

    /// Recorded positive-definiteness bound, if the field was metric-flagged.
    #[inline]
    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    pub fn is_metric(&self) -> bool {
        self.lambda.is_some()
    }

    #[inline]
    pub fn det_at(&self, i: usize, j: usize) -> f64 {
        self.g11.at(i, j) * self.g22.at(i, j) - self.g12.at(i, j) * self.g12.at(i, j)
    }

    pub fn min_det(&self) -> f64 {
        let g = self.grid();
        let mut m = f64::INFINITY;
        for j in 0..g.ny {
            for i in 0..g.nx {
                m = m.min(self.det_at(i, j));
            }
        }
        m
    }

    pub fn det_field(&self) -> Result<ScalarField2D> {
        let a = self.g11.mul(&self.g22)?;
        let b = self.g12.mul(&self.g12)?;
        a.sub(&b)
    }

    /// C^j-style sup norm over components (j = 0 here; see calculus for C^1).
    pub fn sup_norm(&self) -> f64 {
        self.g11.sup_norm().max(self.g12.sup_norm()).max(self.g22.sup_norm())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64 + Copy) -> Result<Self> {
        Self::new(
            self.g11.zip_with(&other.g11, f)?,
            self.g12.zip_with(&other.g12, f)?,
            self.g22.zip_with(&other.g22, f)?,
        )
    }
}
