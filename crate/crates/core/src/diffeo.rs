//! Planar diffeomorphisms with exact or sampled derivatives.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::calculus::{derivative, Axis};
use crate::fields::grid::Rect;
use crate::fields::scalar::VectorField2D;

type MapFn = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;
type JacFn = Arc<dyn Fn([f64; 2]) -> [[f64; 2]; 2] + Send + Sync>;
/// `d2[i][j][k] = d_k d_j xi_i`.
type D2Fn = Arc<dyn Fn([f64; 2]) -> [[[f64; 2]; 2]; 2] + Send + Sync>;

/// A C^1 (or better) diffeomorphism of plane domains.
///
/// Carries the forward map and its Jacobian; the inverse is either supplied
/// in closed form or computed by Newton iteration from the exact Jacobian.
/// Second derivatives, when present, make transported test functions exact
/// through first order.
#[derive(Clone)]
pub struct Diffeo2D {
    fwd: MapFn,
    inv: Option<MapFn>,
    jac: JacFn,
    d2: Option<D2Fn>,
    affine: bool,
    min_det_bound: f64,
}

impl std::fmt::Debug for Diffeo2D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Diffeo2D")
            .field("affine", &self.affine)
            .field("min_det_bound", &self.min_det_bound)
            .finish()
    }
}

impl Diffeo2D {
    pub fn identity() -> Self {
        Self {
            fwd: Arc::new(|p| p),
            inv: Some(Arc::new(|p| p)),
            jac: Arc::new(|_| [[1.0, 0.0], [0.0, 1.0]]),
            d2: Some(Arc::new(|_| [[[0.0; 2]; 2]; 2])),
            affine: true,
            min_det_bound: 1.0,
        }
    }

    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self {
            fwd: Arc::new(move |p| [c * p[0] - s * p[1], s * p[0] + c * p[1]]),
            inv: Some(Arc::new(move |p| [c * p[0] + s * p[1], -s * p[0] + c * p[1]])),
            jac: Arc::new(move |_| [[c, -s], [s, c]]),
            d2: Some(Arc::new(|_| [[[0.0; 2]; 2]; 2])),
            affine: true,
            min_det_bound: 1.0,
        }
    }

    /// `xi(x) = (x1 + a x2, x2)`.
    pub fn linear_shear(a: f64) -> Self {
        Self {
            fwd: Arc::new(move |p| [p[0] + a * p[1], p[1]]),
            inv: Some(Arc::new(move |p| [p[0] - a * p[1], p[1]])),
            jac: Arc::new(move |_| [[1.0, a], [0.0, 1.0]]),
            d2: Some(Arc::new(|_| [[[0.0; 2]; 2]; 2])),
            affine: true,
            min_det_bound: 1.0,
        }
    }

    /// `xi(x) = (x1 + a sin(x2), x2)`; volume preserving for any `a`.
    pub fn sin_shear(a: f64) -> Self {
        Self {
            fwd: Arc::new(move |p| [p[0] + a * p[1].sin(), p[1]]),
            inv: Some(Arc::new(move |p| [p[0] - a * p[1].sin(), p[1]])),
            jac: Arc::new(move |p| [[1.0, a * p[1].cos()], [0.0, 1.0]]),
            d2: Some(Arc::new(move |p| {
                let mut d = [[[0.0; 2]; 2]; 2];
                d[0][1][1] = -a * p[1].sin();
                d
            })),
            affine: false,
            min_det_bound: 1.0,
        }
    }

    /// Build from explicit closures. `min_det_bound` is the caller's recorded
    /// lower bound on `det grad(xi)` over the working domain.
    pub fn from_closures(
        fwd: MapFn,
        inv: Option<MapFn>,
        jac: JacFn,
        d2: Option<D2Fn>,
        min_det_bound: f64,
    ) -> Self {
        Self {
            fwd,
            inv,
            jac,
            d2,
            affine: false,
            min_det_bound,
        }
    }

    /// Build from sampled forward/inverse maps; derivatives fall back to
    /// finite differences of the sampled components.
    pub fn from_sampled(fwd: VectorField2D, inv: VectorField2D) -> Result<Self> {
        let jxx = derivative(&fwd.x, Axis::X);
        let jxy = derivative(&fwd.x, Axis::Y);
        let jyx = derivative(&fwd.y, Axis::X);
        let jyy = derivative(&fwd.y, Axis::Y);
        let mut min_det = f64::INFINITY;
        let g = *fwd.grid();
        for j in 0..g.ny {
            for i in 0..g.nx {
                let det = jxx.at(i, j) * jyy.at(i, j) - jxy.at(i, j) * jyx.at(i, j);
                min_det = min_det.min(det);
            }
        }
        if min_det <= 0.0 {
            return Err(Error::MetricNotPositive {
                min_det,
                lambda: 0.0,
            });
        }
        let fwd = Arc::new(fwd);
        let inv = Arc::new(inv);
        let fwd_c = fwd.clone();
        let inv_c = inv.clone();
        Ok(Self {
            fwd: Arc::new(move |p| fwd_c.interp(p)),
            inv: Some(Arc::new(move |p| inv_c.interp(p))),
            jac: Arc::new(move |p| {
                [
                    [jxx.interp(p), jxy.interp(p)],
                    [jyx.interp(p), jyy.interp(p)],
                ]
            }),
            d2: None,
            affine: false,
            min_det_bound: min_det,
        })
    }

    #[inline]
    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        (self.fwd)(p)
    }

    #[inline]
    pub fn jacobian(&self, p: [f64; 2]) -> [[f64; 2]; 2] {
        (self.jac)(p)
    }

    pub fn det_jacobian(&self, p: [f64; 2]) -> f64 {
        let j = self.jacobian(p);
        j[0][0] * j[1][1] - j[0][1] * j[1][0]
    }

    pub fn second_derivatives(&self, p: [f64; 2]) -> Option<[[[f64; 2]; 2]; 2]> {
        self.d2.as_ref().map(|f| f(p))
    }

    pub fn has_second_derivatives(&self) -> bool {
        self.d2.is_some()
    }

    pub fn is_affine(&self) -> bool {
        self.affine
    }

    pub fn min_det_bound(&self) -> f64 {
        self.min_det_bound
    }

    /// Inverse map: closed form when supplied, else Newton from the Jacobian.
    pub fn inverse(&self, y: [f64; 2]) -> [f64; 2] {
        if let Some(inv) = &self.inv {
            return inv(y);
        }
        let mut x = y;
        for _ in 0..64 {
            let fx = self.apply(x);
            let r = [fx[0] - y[0], fx[1] - y[1]];
            let j = self.jacobian(x);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            let dx = [
                (j[1][1] * r[0] - j[0][1] * r[1]) / det,
                (-j[1][0] * r[0] + j[0][0] * r[1]) / det,
            ];
            x = [x[0] - dx[0], x[1] - dx[1]];
            if dx[0].abs() + dx[1].abs() < 1e-14 * (1.0 + x[0].abs() + x[1].abs()) {
                break;
            }
        }
        x
    }

    /// Composition `self` after `other`: `x -> self(other(x))`.
    pub fn compose(&self, other: &Diffeo2D) -> Diffeo2D {
        let f1 = self.fwd.clone();
        let f2 = other.fwd.clone();
        let j1 = self.jac.clone();
        let j2 = other.jac.clone();
        let inv = match (&self.inv, &other.inv) {
            (Some(i1), Some(i2)) => {
                let (i1, i2) = (i1.clone(), i2.clone());
                Some(Arc::new(move |y: [f64; 2]| i2(i1(y))) as MapFn)
            }
            _ => None,
        };
        let f2j = other.fwd.clone();
        Diffeo2D {
            fwd: Arc::new(move |p| f1(f2(p))),
            inv,
            jac: Arc::new(move |p| {
                let a = j1(f2j(p));
                let b = j2(p);
                [
                    [
                        a[0][0] * b[0][0] + a[0][1] * b[1][0],
                        a[0][0] * b[0][1] + a[0][1] * b[1][1],
                    ],
                    [
                        a[1][0] * b[0][0] + a[1][1] * b[1][0],
                        a[1][0] * b[0][1] + a[1][1] * b[1][1],
                    ],
                ]
            }),
            d2: None,
            affine: self.affine && other.affine,
            min_det_bound: self.min_det_bound * other.min_det_bound,
        }
    }

    /// Max of `|xi(xi^{-1}(p)) - p|` over an `n x n` lattice on `rect`.
    pub fn inverse_defect(&self, rect: Rect, n: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                let p = [
                    rect.x_min + (rect.x_max - rect.x_min) * i as f64 / (n - 1) as f64,
                    rect.y_min + (rect.y_max - rect.y_min) * j as f64 / (n - 1) as f64,
                ];
                let q = self.apply(self.inverse(p));
                worst = worst.max((q[0] - p[0]).abs().max((q[1] - p[1]).abs()));
            }
        }
        worst
    }
}
