//! Distributional Gaussian curvature of C^1 metrics: Christoffel symbols,
//! the lower-order term, pairings, pullbacks, stability, and the graph
//! bridge to the very weak Hessian determinant.
//!
//! For smooth metrics the discrete pairing must reproduce
//! `kappa(g) = R_1212 / det g`; that smooth oracle pins every factor and
//! orientation below. Written out, with `[jk,i]` the first-kind symbols,
//!
//! ```text
//! R_1212 = d1[22,1] - d2[21,1] + g_1m (G^m_1s G^s_22 - G^m_2s G^s_21)
//!        = -1/2 curl curl g  + (lower order),
//! ```
//!
//! so the pairing carries a factor 1/2 on the curl-curl part (moved onto the
//! test function by parts) and the Gamma-Gamma terms enter contracted with
//! `g_1m`:
//!
//! ```text
//! kappa_g[phi] = int 1/2 (curl g) . perp-grad phi / det g
//!              + 1/2 (curl g) . perp-grad(1/det g) phi  +  L(g) phi dx,
//! L(g) = (1/det g)(-d1 g_1m G^m_22 + d2 g_1m G^m_21
//!                  + g_1m G^m_1s G^s_22 - g_1m G^m_2s G^s_21).
//! ```
//!
//! Only first differences of the metric appear, matching its C^1 regularity.

use rayon::prelude::*;

use crate::diffeo::Diffeo2D;
use crate::error::{Error, Result};
use crate::fields::calculus::{
    cj_norm_sym, derivative, gradient, matrix_curl, Axis,
};
use crate::fields::grid::{Grid2D, Rect};
use crate::fields::io::fmt_f64;
use crate::fields::scalar::{ScalarField2D, SymMatrixField2D, VectorField2D};
use crate::fields::testfn::{TestField, TestFunction};
use crate::mollifier::{MollifierKernel, RateFit};
use crate::weak_hessian::{DetHessianPairer, DistributionPairing};

/// Calibrated constant for the stability bound of `kappa` pairings; measured
/// once on smooth metric families (worst observed ratio 0.62) and frozen
/// with headroom.
pub const KAPPA_STABILITY_C: f64 = 2.0;

/// Christoffel symbols of a metric, all eight index combinations stored.
pub struct ChristoffelField {
    grid: Grid2D,
    /// Indexed by `i*4 + j*2 + k`, each in `{0,1}`; symmetric in `(j,k)`.
    gamma: Vec<ScalarField2D>,
}

impl ChristoffelField {
    #[inline]
    pub fn gamma(&self, i: usize, j: usize, k: usize) -> &ScalarField2D {
        &self.gamma[i * 4 + j * 2 + k]
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }
}

fn metric_guard(g: &SymMatrixField2D) -> Result<f64> {
    match g.lambda() {
        Some(l) => {
            let d = g.min_det();
            if d < l {
                Err(Error::MetricNotPositive { min_det: d, lambda: l })
            } else {
                Ok(l)
            }
        }
        None => Err(Error::PreconditionFailed(
            "curvature needs a metric-flagged field (construct via SymMatrixField2D::metric)"
                .into(),
        )),
    }
}

/// `Gamma^i_{jk} = 1/2 g^{im} (d_k g_{jm} + d_j g_{km} - d_m g_{jk})`.
pub fn christoffel(g: &SymMatrixField2D) -> Result<ChristoffelField> {
    metric_guard(g)?;
    let grid = *g.grid();
    let comp = |j: usize, k: usize| -> &ScalarField2D {
        match (j, k) {
            (0, 0) => &g.g11,
            (1, 1) => &g.g22,
            _ => &g.g12,
        }
    };
    // d[m][j][k] = d_m g_{jk}
    let mut d = vec![vec![vec![None::<ScalarField2D>; 2]; 2]; 2];
    for (m, axis) in [(0usize, Axis::X), (1usize, Axis::Y)] {
        for j in 0..2 {
            for k in j..2 {
                let f = derivative(comp(j, k), axis);
                d[m][j][k] = Some(f.clone());
                d[m][k][j] = Some(f);
            }
        }
    }
    let dg = |m: usize, j: usize, k: usize| d[m][j][k].as_ref().unwrap();

    let det = g.det_field()?;
    let mut gamma = Vec::with_capacity(8);
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let mut vals = vec![0.0; grid.len()];
                for idx in 0..grid.len() {
                    let dv = det.values()[idx];
                    // inverse metric row i: g^{i0}, g^{i1}
                    let (gi0, gi1) = if i == 0 {
                        (g.g22.values()[idx] / dv, -g.g12.values()[idx] / dv)
                    } else {
                        (-g.g12.values()[idx] / dv, g.g11.values()[idx] / dv)
                    };
                    let term = |m: usize| {
                        dg(k, j, m).values()[idx] + dg(j, k, m).values()[idx]
                            - dg(m, j, k).values()[idx]
                    };
                    vals[idx] = 0.5 * (gi0 * term(0) + gi1 * term(1));
                }
                gamma.push(ScalarField2D::new(grid, vals)?);
            }
        }
    }
    Ok(ChristoffelField { grid, gamma })
}

/// The lower-order curvature term `L(g)`.
pub fn lower_order_term(g: &SymMatrixField2D) -> Result<ScalarField2D> {
    let gamma = christoffel(g)?;
    let grid = *g.grid();
    let det = g.det_field()?;
    let d1_g11 = derivative(&g.g11, Axis::X);
    let d1_g12 = derivative(&g.g12, Axis::X);
    let d2_g11 = derivative(&g.g11, Axis::Y);
    let d2_g12 = derivative(&g.g12, Axis::Y);
    let mut vals = vec![0.0; grid.len()];
    for idx in 0..grid.len() {
        let g1 = [g.g11.values()[idx], g.g12.values()[idx]];
        let ga = |i: usize, j: usize, k: usize| gamma.gamma(i, j, k).values()[idx];
        // -d1 g_{1m} G^m_22 + d2 g_{1m} G^m_21
        let mut acc = -d1_g11.values()[idx] * ga(0, 1, 1) - d1_g12.values()[idx] * ga(1, 1, 1)
            + d2_g11.values()[idx] * ga(0, 1, 0)
            + d2_g12.values()[idx] * ga(1, 1, 0);
        // + g_{1m} (G^m_1s G^s_22 - G^m_2s G^s_21)
        for m in 0..2 {
            let mut quad = 0.0;
            for s in 0..2 {
                quad += ga(m, 0, s) * ga(s, 1, 1) - ga(m, 1, s) * ga(s, 1, 0);
            }
            acc += g1[m] * quad;
        }
        vals[idx] = acc / det.values()[idx];
    }
    ScalarField2D::new(grid, vals)
}

/// Precomputed fields for pairing `kappa_g` against many test functions.
pub struct KappaPairer {
    grid: Grid2D,
    /// `1/2 (curl g) / det g`
    a: VectorField2D,
    /// `1/2 (curl g) . perp-grad(1/det g) + L(g)`
    b: ScalarField2D,
    coarse: Option<Box<KappaPairer>>,
}

impl KappaPairer {
    pub fn new(g: &SymMatrixField2D) -> Result<Self> {
        let mut p = Self::new_level(g)?;
        let gc = SymMatrixField2D::metric(
            g.g11.coarsened()?,
            g.g12.coarsened()?,
            g.g22.coarsened()?,
            g.lambda().unwrap_or(0.0),
        )?;
        p.coarse = Some(Box::new(Self::new_level(&gc)?));
        Ok(p)
    }

    fn new_level(g: &SymMatrixField2D) -> Result<Self> {
        metric_guard(g)?;
        let grid = *g.grid();
        let curl = matrix_curl(g);
        let det = g.det_field()?;
        let inv_det = det.map(|d| 1.0 / d)?;
        let perp = VectorField2D::new(
            derivative(&inv_det, Axis::Y).scale(-1.0)?,
            derivative(&inv_det, Axis::X),
        )?;
        let l = lower_order_term(g)?;
        let a = VectorField2D::new(
            curl.x.mul(&inv_det)?.scale(0.5)?,
            curl.y.mul(&inv_det)?.scale(0.5)?,
        )?;
        let b = curl
            .x
            .mul(&perp.x)?
            .add(&curl.y.mul(&perp.y)?)?
            .scale(0.5)?
            .add(&l)?;
        Ok(Self {
            grid,
            a,
            b,
            coarse: None,
        })
    }

    fn quadrature(&self, phi: &dyn TestField) -> f64 {
        let g = self.grid;
        let supp = phi.support();
        let i_lo = (((supp.x_min - g.x0) / g.h).floor().max(0.0)) as usize;
        let j_lo = (((supp.y_min - g.y0) / g.h).floor().max(0.0)) as usize;
        let i_hi = (((supp.x_max - g.x0) / g.h).ceil().max(0.0) as usize).min(g.nx - 1);
        let j_hi = (((supp.y_max - g.y0) / g.h).ceil().max(0.0) as usize).min(g.ny - 1);
        if i_lo > i_hi || j_lo > j_hi {
            return 0.0;
        }
        let sum: f64 = (j_lo..=j_hi)
            .into_par_iter()
            .map(|j| {
                let y = g.y(j);
                let mut row = 0.0;
                for i in i_lo..=i_hi {
                    let p = [g.x(i), y];
                    let pv = phi.value(p);
                    let [px, py] = phi.gradient(p);
                    if pv == 0.0 && px == 0.0 && py == 0.0 {
                        continue;
                    }
                    // perp-grad phi = (-d2 phi, d1 phi)
                    row += self.a.x.at(i, j) * (-py)
                        + self.a.y.at(i, j) * px
                        + self.b.at(i, j) * pv;
                }
                row
            })
            .sum();
        sum * g.h * g.h
    }

    pub fn pair(&self, phi: &dyn TestField) -> Result<DistributionPairing> {
        let supp = phi.support();
        let rect = Rect::of_grid(&self.grid);
        if supp.x_min <= rect.x_min
            || supp.x_max >= rect.x_max
            || supp.y_min <= rect.y_min
            || supp.y_max >= rect.y_max
        {
            return Err(Error::SupportOutsideGrid);
        }
        let value = self.quadrature(phi);
        let error_estimate = match &self.coarse {
            Some(c) => (value - c.quadrature(phi)).abs(),
            None => f64::NAN,
        };
        Ok(DistributionPairing {
            value,
            error_estimate,
            grid: self.grid,
        })
    }
}

/// One-shot `kappa_g[phi]`.
pub fn kappa_pairing(g: &SymMatrixField2D, phi: &dyn TestField) -> Result<DistributionPairing> {
    KappaPairer::new(g)?.pair(phi)
}

/// A metric given either as grid samples or in closed form.
pub trait MetricSource: Sync {
    /// `(g11, g12, g22)` at a point.
    fn eval(&self, p: [f64; 2]) -> [f64; 3];
    /// Positive-definiteness bound, when known.
    fn lambda(&self) -> Option<f64>;
    /// Domain of validity, when restricted.
    fn domain(&self) -> Option<Rect>;
}

impl MetricSource for SymMatrixField2D {
    fn eval(&self, p: [f64; 2]) -> [f64; 3] {
        [self.g11.interp(p), self.g12.interp(p), self.g22.interp(p)]
    }
    fn lambda(&self) -> Option<f64> {
        self.lambda()
    }
    fn domain(&self) -> Option<Rect> {
        Some(Rect::of_grid(self.grid()))
    }
}

/// Closed-form metric with an optional domain restriction.
pub struct AnalyticMetric {
    f: Box<dyn Fn([f64; 2]) -> [f64; 3] + Send + Sync>,
    lambda: f64,
    domain: Option<Rect>,
}

impl AnalyticMetric {
    pub fn new(f: impl Fn([f64; 2]) -> [f64; 3] + Send + Sync + 'static, lambda: f64) -> Self {
        Self {
            f: Box::new(f),
            lambda,
            domain: None,
        }
    }

    pub fn with_domain(mut self, domain: Rect) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn identity() -> Self {
        Self::new(|_| [1.0, 0.0, 1.0], 1.0)
    }

    /// Graph metric of the sphere cap of the given radius.
    pub fn sphere_graph(radius: f64) -> Self {
        Self::new(
            move |p| {
                let s2 = radius * radius - p[0] * p[0] - p[1] * p[1];
                let gx = -p[0] / s2.sqrt();
                let gy = -p[1] / s2.sqrt();
                [1.0 + gx * gx, gx * gy, 1.0 + gy * gy]
            },
            1.0,
        )
    }
}

impl MetricSource for AnalyticMetric {
    fn eval(&self, p: [f64; 2]) -> [f64; 3] {
        (self.f)(p)
    }
    fn lambda(&self) -> Option<f64> {
        Some(self.lambda)
    }
    fn domain(&self) -> Option<Rect> {
        self.domain
    }
}

/// `xi^* g = (grad xi)^T (g o xi) (grad xi)` sampled on `target_grid`.
pub fn pullback_metric(
    g: &dyn MetricSource,
    xi: &Diffeo2D,
    target_grid: Grid2D,
) -> Result<SymMatrixField2D> {
    let mut v11 = vec![0.0; target_grid.len()];
    let mut v12 = vec![0.0; target_grid.len()];
    let mut v22 = vec![0.0; target_grid.len()];
    let mut min_det_j = f64::INFINITY;
    for jj in 0..target_grid.ny {
        for ii in 0..target_grid.nx {
            let p = target_grid.node(ii, jj);
            let q = xi.apply(p);
            if let Some(dom) = g.domain() {
                if !dom.contains(q) {
                    return Err(Error::RangeViolation);
                }
            }
            let [m11, m12, m22] = g.eval(q);
            let j = xi.jacobian(p);
            min_det_j = min_det_j.min(j[0][0] * j[1][1] - j[0][1] * j[1][0]);
            // (J^T M J)
            let a = [
                m11 * j[0][0] + m12 * j[1][0],
                m12 * j[0][0] + m22 * j[1][0],
                m11 * j[0][1] + m12 * j[1][1],
                m12 * j[0][1] + m22 * j[1][1],
            ];
            let idx = target_grid.idx(ii, jj);
            v11[idx] = j[0][0] * a[0] + j[1][0] * a[1];
            v12[idx] = j[0][1] * a[0] + j[1][1] * a[1];
            v22[idx] = j[0][1] * a[2] + j[1][1] * a[3];
        }
    }
    let lambda = g.lambda().unwrap_or(0.0) * min_det_j * min_det_j;
    SymMatrixField2D::metric(
        ScalarField2D::new(target_grid, v11)?,
        ScalarField2D::new(target_grid, v12)?,
        ScalarField2D::new(target_grid, v22)?,
        lambda * (1.0 - 1e-9),
    )
}

/// The transported test function `|J(xi)|^{-1} phi o xi^{-1}` on the target
/// of `xi`, with derivatives by the exact chain rule where the diffeo
/// supplies second derivatives, and high-order finite differences otherwise.
pub struct TransportedTestField {
    xi: Diffeo2D,
    base: TestFunction,
    support: Rect,
    fd_step: f64,
}

impl TransportedTestField {
    pub fn new(xi: &Diffeo2D, base: TestFunction) -> Self {
        // support: image of the base support disk under xi, padded a little
        let mut bb = Rect::new(
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        let n = 256;
        for k in 0..n {
            let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            let p = [
                base.center[0] + base.radius * a.cos(),
                base.center[1] + base.radius * a.sin(),
            ];
            let q = xi.apply(p);
            bb.x_min = bb.x_min.min(q[0]);
            bb.x_max = bb.x_max.max(q[0]);
            bb.y_min = bb.y_min.min(q[1]);
            bb.y_max = bb.y_max.max(q[1]);
        }
        let pad = 1e-3 * (bb.x_max - bb.x_min).max(bb.y_max - bb.y_min);
        let support = Rect::new(bb.x_min - pad, bb.x_max + pad, bb.y_min - pad, bb.y_max + pad);
        let fd_step = 1e-4 * base.radius;
        Self {
            xi: xi.clone(),
            base,
            support,
            fd_step,
        }
    }

    fn value_grad(&self, y: [f64; 2]) -> (f64, [f64; 2]) {
        let w = self.xi.inverse(y);
        let pv = self.base.value(w);
        let pg = self.base.gradient(w);
        if pv == 0.0 && pg == [0.0, 0.0] {
            return (0.0, [0.0, 0.0]);
        }
        let j = self.xi.jacobian(w);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let q = 1.0 / det.abs();
        // grad w = J^{-1} at w
        let inv = [
            [j[1][1] / det, -j[0][1] / det],
            [-j[1][0] / det, j[0][0] / det],
        ];
        let mut grad = [0.0; 2];
        // d_a (q * phi(w)) = q * sum_i phi_i(w) dw_i/dy_a + phi(w) dq/dy_a
        for a in 0..2 {
            let mut t = 0.0;
            for i in 0..2 {
                t += pg[i] * inv[i][a];
            }
            grad[a] = q * t;
        }
        if let Some(d2) = self.xi.second_derivatives(w) {
            // dq/dy_a = -q^2 sign(det) * d det/dx_l * dw_l/dy_a,
            // d det/dx_l = det * tr(J^{-1} d_l J)
            let sgn = det.signum();
            for a in 0..2 {
                let mut dq = 0.0;
                for l in 0..2 {
                    let mut tr = 0.0;
                    for r in 0..2 {
                        for c in 0..2 {
                            tr += inv[r][c] * d2[c][r][l];
                        }
                    }
                    let ddet = det * tr;
                    dq += -q * q * sgn * ddet * inv[l][a];
                }
                grad[a] += pv * dq;
            }
        } else {
            // sampled diffeos: 4th-order differences of the composite value
            let s = self.fd_step;
            for a in 0..2 {
                let mut e = [0.0; 2];
                e[a] = 1.0;
                let f = |t: f64| {
                    let p = [y[0] + t * e[0], y[1] + t * e[1]];
                    let w = self.xi.inverse(p);
                    let jj = self.xi.jacobian(w);
                    let dd = (jj[0][0] * jj[1][1] - jj[0][1] * jj[1][0]).abs();
                    self.base.value(w) / dd
                };
                grad[a] = (-f(2.0 * s) + 8.0 * f(s) - 8.0 * f(-s) + f(-2.0 * s)) / (12.0 * s);
            }
        }
        (q * pv, grad)
    }
}

impl TestField for TransportedTestField {
    fn value(&self, y: [f64; 2]) -> f64 {
        if !self.support.contains(y) {
            return 0.0;
        }
        let w = self.xi.inverse(y);
        let pv = self.base.value(w);
        if pv == 0.0 {
            return 0.0;
        }
        pv / self.xi.det_jacobian(w).abs()
    }

    fn gradient(&self, y: [f64; 2]) -> [f64; 2] {
        if !self.support.contains(y) {
            return [0.0, 0.0];
        }
        self.value_grad(y).1
    }

    fn hessian(&self, y: [f64; 2]) -> [f64; 3] {
        if !self.support.contains(y) {
            return [0.0, 0.0, 0.0];
        }
        // 4th-order differences of the (exact) gradient
        let s = self.fd_step;
        let gx = |p: [f64; 2]| self.value_grad(p).1;
        let d = |a: usize, comp: usize| {
            let mut e = [0.0; 2];
            e[a] = 1.0;
            let f = |t: f64| gx([y[0] + t * e[0], y[1] + t * e[1]])[comp];
            (-f(2.0 * s) + 8.0 * f(s) - 8.0 * f(-s) + f(-2.0 * s)) / (12.0 * s)
        };
        let hxx = d(0, 0);
        let hyy = d(1, 1);
        let hxy = 0.5 * (d(1, 0) + d(0, 1));
        [hxx, hxy, hyy]
    }

    fn support(&self) -> Rect {
        self.support
    }
}

/// Both sides of the coordinate-invariance identity and their gap.
#[derive(Debug, Clone, Copy)]
pub struct InvarianceResult {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

impl InvarianceResult {
    pub fn to_json(&self) -> String {
        format!(
            "{{\"lhs\": {}, \"rhs\": {}, \"residual\": {}}}",
            fmt_f64(self.lhs),
            fmt_f64(self.rhs),
            fmt_f64(self.residual)
        )
    }
}

/// `kappa_{xi^* g}[phi]` against `kappa_g[|J|^{-1} phi o xi^{-1}]`.
///
/// `phi` lives on the source grid of `xi` (where the pullback metric is
/// sampled); the transported test function lives on the target grid where
/// `g` itself is sampled.
pub fn invariance_residual(
    g: &dyn MetricSource,
    xi: &Diffeo2D,
    phi: &TestFunction,
    source_grid: Grid2D,
    target_grid: Grid2D,
) -> Result<InvarianceResult> {
    let pulled = pullback_metric(g, xi, source_grid)?;
    let lhs = kappa_pairing(&pulled, phi)?.value;
    let mut g_sampled_vals = [vec![], vec![], vec![]];
    for jj in 0..target_grid.ny {
        for ii in 0..target_grid.nx {
            let m = g.eval(target_grid.node(ii, jj));
            for c in 0..3 {
                g_sampled_vals[c].push(m[c]);
            }
        }
    }
    let g_sampled = SymMatrixField2D::metric(
        ScalarField2D::new(target_grid, std::mem::take(&mut g_sampled_vals[0]))?,
        ScalarField2D::new(target_grid, std::mem::take(&mut g_sampled_vals[1]))?,
        ScalarField2D::new(target_grid, std::mem::take(&mut g_sampled_vals[2]))?,
        g.lambda().unwrap_or(1e-9) * (1.0 - 1e-9),
    )?;
    let transported = TransportedTestField::new(xi, *phi);
    let rhs = kappa_pairing(&g_sampled, &transported)?.value;
    Ok(InvarianceResult {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}

/// Outcome of the curvature stability bound check.
#[derive(Debug, Clone, Copy)]
pub struct StabilityResult {
    pub gap: f64,
    pub bound: f64,
    pub c_cal: f64,
    pub pass: bool,
}

/// `|kappa_{g1}[phi] - kappa_{g2}[phi]|` against the calibrated bound
/// `C ||phi||_{W^{1,1}} sum_j (||g1||_1 + ||g2||_1)^{2-j} ||g1-g2||_j`.
pub fn kappa_stability_check(
    g1: &SymMatrixField2D,
    g2: &SymMatrixField2D,
    phi: &TestFunction,
) -> Result<StabilityResult> {
    if g1.grid() != g2.grid() {
        return Err(Error::GridMismatch);
    }
    let k1 = kappa_pairing(g1, phi)?.value;
    let k2 = kappa_pairing(g2, phi)?.value;
    let gap = (k1 - k2).abs();
    // ||phi||_{W^{1,1}} by node-rule quadrature on the common grid
    let g = g1.grid();
    let mut w11 = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let p = g.node(i, j);
            let v = phi.value(p);
            let gr = phi.gradient(p);
            w11 += v.abs() + (gr[0] * gr[0] + gr[1] * gr[1]).sqrt();
        }
    }
    w11 *= g.h * g.h;
    let diff = g1.zip_with(g2, |a, b| a - b)?;
    let n1 = cj_norm_sym(g1, 1) + cj_norm_sym(g2, 1);
    let bound = KAPPA_STABILITY_C
        * w11
        * (n1 * n1 * cj_norm_sym(&diff, 0) + n1 * cj_norm_sym(&diff, 1));
    Ok(StabilityResult {
        gap,
        bound,
        c_cal: KAPPA_STABILITY_C,
        pass: gap <= bound,
    })
}

/// `g' = Id + grad v tensor grad v`, always a metric (`det = 1 + |grad v|^2`).
pub fn graph_metric(v: &ScalarField2D) -> SymMatrixField2D {
    let grad = gradient(v);
    let g11 = grad
        .x
        .mul(&grad.x)
        .and_then(|f| f.map(|t| 1.0 + t))
        .expect("finite");
    let g12 = grad.x.mul(&grad.y).expect("finite");
    let g22 = grad
        .y
        .mul(&grad.y)
        .and_then(|f| f.map(|t| 1.0 + t))
        .expect("finite");
    SymMatrixField2D::metric(g11, g12, g22, 1.0 - 1e-12).expect("det = 1 + |grad v|^2 >= 1")
}

/// Test field `w(x) phi(x)` with a grid-sampled weight; derivatives combine
/// the exact `phi` derivatives with finite differences of the weight.
pub struct WeightedTestField {
    weight: ScalarField2D,
    wx: ScalarField2D,
    wy: ScalarField2D,
    base: TestFunction,
}

impl WeightedTestField {
    pub fn new(weight: ScalarField2D, base: TestFunction) -> Self {
        let wx = derivative(&weight, Axis::X);
        let wy = derivative(&weight, Axis::Y);
        Self {
            weight,
            wx,
            wy,
            base,
        }
    }
}

impl TestField for WeightedTestField {
    fn value(&self, p: [f64; 2]) -> f64 {
        let b = self.base.value(p);
        if b == 0.0 {
            return 0.0;
        }
        self.weight.interp(p) * b
    }

    fn gradient(&self, p: [f64; 2]) -> [f64; 2] {
        let b = self.base.value(p);
        let bg = self.base.gradient(p);
        if b == 0.0 && bg == [0.0, 0.0] {
            return [0.0, 0.0];
        }
        let w = self.weight.interp(p);
        let dwx = self.wx.interp(p);
        let dwy = self.wy.interp(p);
        [dwx * b + w * bg[0], dwy * b + w * bg[1]]
    }

    fn hessian(&self, p: [f64; 2]) -> [f64; 3] {
        // only needed for trait completeness; finite differences of gradient
        let b = self.base.value(p);
        let bg = self.base.gradient(p);
        if b == 0.0 && bg == [0.0, 0.0] {
            return [0.0, 0.0, 0.0];
        }
        let s = 1e-5 * self.base.radius;
        let g = |q: [f64; 2]| self.gradient(q);
        let hxx = (g([p[0] + s, p[1]])[0] - g([p[0] - s, p[1]])[0]) / (2.0 * s);
        let hyy = (g([p[0], p[1] + s])[1] - g([p[0], p[1] - s])[1]) / (2.0 * s);
        let hxy = (g([p[0], p[1] + s])[0] - g([p[0], p[1] - s])[0]) / (2.0 * s);
        [hxx, hxy, hyy]
    }

    fn support(&self) -> Rect {
        self.base.support()
    }
}

/// Both sides of the graph-bridge identity
/// `kappa_{g'}[phi] = Det D^2 v [(1+|grad v|^2)^{-2} phi]`.
pub fn graph_bridge_residual(v: &ScalarField2D, phi: &TestFunction) -> Result<InvarianceResult> {
    let gm = graph_metric(v);
    let lhs = kappa_pairing(&gm, phi)?.value;
    let det = gm.det_field()?;
    let weight = det.map(|d| 1.0 / (d * d))?;
    let weighted = WeightedTestField::new(weight, *phi);
    let rhs = DetHessianPairer::new(v)?.pair(&weighted)?.value;
    Ok(InvarianceResult {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}

/// Fit of `||(xi^* g)_eps - xi_eps^* g||_{C^j}` on an admissible disk.
///
/// The disk is the largest dyadic-radius one centered at `center` on which
/// every mollified `xi_eps` stays a diffeomorphism with
/// `det grad xi_eps >= 1/2 min det grad xi`.
pub fn pullback_mollification_rate(
    g: &dyn MetricSource,
    xi: &Diffeo2D,
    grid: Grid2D,
    center: [f64; 2],
    j: usize,
    eps_list: &[f64],
) -> Result<RateFit> {
    assert!(j <= 1);
    let (j0, j1) = pullback_mollification_rates(g, xi, grid, center, eps_list)?;
    Ok(if j == 0 { j0 } else { j1 })
}

/// Both `C^0` and `C^1` fits from one pass over the mollification ladder.
pub fn pullback_mollification_rates(
    g: &dyn MetricSource,
    xi: &Diffeo2D,
    grid: Grid2D,
    center: [f64; 2],
    eps_list: &[f64],
) -> Result<(RateFit, RateFit)> {
    if eps_list.len() < 4 {
        return Err(Error::TooFewRungs(eps_list.len()));
    }
    let eps_max = eps_list[0];
    let xi_sampled = VectorField2D::sample(grid, |x, y| xi.apply([x, y]))?;
    // exact Jacobian entries sampled at nodes; grad(xi_eps) = (grad xi)_eps
    let jac_sampled: Vec<ScalarField2D> = {
        let entries = |r: usize, c: usize| {
            ScalarField2D::sample(grid, |x, y| xi.jacobian([x, y])[r][c])
        };
        vec![entries(0, 0)?, entries(0, 1)?, entries(1, 0)?, entries(1, 1)?]
    };
    let pulled = pullback_metric(g, xi, grid)?;
    let m_max = (eps_max / grid.h * (1.0 + 1e-12)).floor() as usize;
    let v_grid = grid.eroded(m_max)?;

    // min det grad xi over the working grid, from exact Jacobians
    let mut det0 = f64::INFINITY;
    for jj in 0..grid.ny {
        for ii in 0..grid.nx {
            det0 = det0.min(xi.det_jacobian(grid.node(ii, jj)));
        }
    }

    struct Level {
        eps: f64,
        discrepancy: [ScalarField2D; 3],
        det_eps: ScalarField2D,
    }
    let mut levels = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let kernel = MollifierKernel::new(eps, grid.h)?;
        let batch = crate::mollifier::mollify_many(
            &[
                &xi_sampled.x,
                &xi_sampled.y,
                &jac_sampled[0],
                &jac_sampled[1],
                &jac_sampled[2],
                &jac_sampled[3],
                &pulled.g11,
                &pulled.g12,
                &pulled.g22,
            ],
            &kernel,
        )?;
        let eg = *batch[0].grid();
        let mut v11 = vec![0.0; eg.len()];
        let mut v12 = vec![0.0; eg.len()];
        let mut v22 = vec![0.0; eg.len()];
        let mut dets = vec![0.0; eg.len()];
        for jj in 0..eg.ny {
            for ii in 0..eg.nx {
                let idx = eg.idx(ii, jj);
                let q = [batch[0].at(ii, jj), batch[1].at(ii, jj)];
                if let Some(dom) = g.domain() {
                    if !dom.contains(q) {
                        return Err(Error::RangeViolation);
                    }
                }
                let [m11, m12, m22] = g.eval(q);
                let jm = [
                    [batch[2].at(ii, jj), batch[3].at(ii, jj)],
                    [batch[4].at(ii, jj), batch[5].at(ii, jj)],
                ];
                dets[idx] = jm[0][0] * jm[1][1] - jm[0][1] * jm[1][0];
                let a = [
                    m11 * jm[0][0] + m12 * jm[1][0],
                    m12 * jm[0][0] + m22 * jm[1][0],
                    m11 * jm[0][1] + m12 * jm[1][1],
                    m12 * jm[0][1] + m22 * jm[1][1],
                ];
                v11[idx] = jm[0][0] * a[0] + jm[1][0] * a[1];
                v12[idx] = jm[0][1] * a[0] + jm[1][1] * a[1];
                v22[idx] = jm[0][1] * a[2] + jm[1][1] * a[3];
            }
        }
        let xi_eps_pull = [
            ScalarField2D::new(eg, v11)?,
            ScalarField2D::new(eg, v12)?,
            ScalarField2D::new(eg, v22)?,
        ];
        let discrepancy = [
            batch[6].sub(&xi_eps_pull[0])?.restrict_to(&v_grid)?,
            batch[7].sub(&xi_eps_pull[1])?.restrict_to(&v_grid)?,
            batch[8].sub(&xi_eps_pull[2])?.restrict_to(&v_grid)?,
        ];
        levels.push(Level {
            eps,
            discrepancy,
            det_eps: ScalarField2D::new(eg, dets)?.restrict_to(&v_grid)?,
        });
    }

    // admissible disk: largest dyadic radius with min_eps min_disk det >= det0/2
    let max_r = (v_grid.x_max() - center[0])
        .min(center[0] - v_grid.x0)
        .min(v_grid.y_max() - center[1])
        .min(center[1] - v_grid.y0);
    let mut radius = max_r;
    let mut found = None;
    while radius >= 4.0 * grid.h {
        let ok = levels.iter().all(|lvl| {
            let mut dmin = f64::INFINITY;
            for jj in 0..v_grid.ny {
                for ii in 0..v_grid.nx {
                    let p = v_grid.node(ii, jj);
                    let dx = p[0] - center[0];
                    let dy = p[1] - center[1];
                    if dx * dx + dy * dy <= radius * radius {
                        dmin = dmin.min(lvl.det_eps.at(ii, jj));
                    }
                }
            }
            dmin >= 0.5 * det0
        });
        if ok {
            found = Some(radius);
            break;
        }
        radius *= 0.5;
    }
    let radius = found.ok_or(Error::NoAdmissibleDisk)?;

    let in_disk = |ii: usize, jj: usize| {
        let p = v_grid.node(ii, jj);
        let dx = p[0] - center[0];
        let dy = p[1] - center[1];
        dx * dx + dy * dy <= radius * radius
    };
    let disk_norm = |f: &ScalarField2D| -> f64 {
        let mut m = 0.0f64;
        for jj in 0..v_grid.ny {
            for ii in 0..v_grid.nx {
                if in_disk(ii, jj) {
                    m = m.max(f.at(ii, jj).abs());
                }
            }
        }
        m
    };
    let mut pairs0 = Vec::with_capacity(levels.len());
    let mut pairs1 = Vec::with_capacity(levels.len());
    for lvl in &levels {
        let mut n0 = 0.0f64;
        let mut n1 = 0.0f64;
        for c in &lvl.discrepancy {
            let sup = disk_norm(c);
            let dsup =
                disk_norm(&derivative(c, Axis::X)).max(disk_norm(&derivative(c, Axis::Y)));
            n0 = n0.max(sup);
            n1 = n1.max(sup + dsup);
        }
        pairs0.push((lvl.eps, n0));
        pairs1.push((lvl.eps, n1));
    }
    Ok((RateFit::fit(pairs0)?, RateFit::fit(pairs1)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate, GeneratorKind, GeneratorSpec};
    use crate::mollifier::mollify_sym;

    fn identity_metric(n: usize, half: f64) -> SymMatrixField2D {
        SymMatrixField2D::identity(Grid2D::centered_square(n, half).unwrap()).unwrap()
    }

    #[test]
    fn christoffel_vanishes_for_constant_metrics() {
        for scale in [1.0, 3.7] {
            let g = Grid2D::centered_square(17, 1.0).unwrap();
            let m = SymMatrixField2D::sample_metric(g, |_, _| [scale, 0.0, scale], 0.5).unwrap();
            let gamma = christoffel(&m).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        assert!(gamma.gamma(i, j, k).sup_norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn christoffel_polar_type_metric_against_symbolic_oracle() {
        // g = diag(1, x1^2) on x1 in [1, 2]: G^2_12 = 1/x1, G^1_22 = -x1
        let g = Grid2D::new(65, 65, 1.0, 0.0, 1.0 / 64.0).unwrap();
        let m = SymMatrixField2D::sample_metric(g, |x, _| [1.0, 0.0, x * x], 0.9).unwrap();
        let gamma = christoffel(&m).unwrap();
        let mut worst: f64 = 0.0;
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                let x = g.x(i);
                worst = worst.max((gamma.gamma(1, 0, 1).at(i, j) - 1.0 / x).abs());
                worst = worst.max((gamma.gamma(0, 1, 1).at(i, j) + x).abs());
                worst = worst.max(gamma.gamma(0, 0, 0).at(i, j).abs());
                worst = worst.max(gamma.gamma(1, 1, 1).at(i, j).abs());
            }
        }
        assert!(worst < 1e-10, "worst = {worst}");
    }

    #[test]
    fn christoffel_conformal_metric_against_symbolic_oracle() {
        // g = e^{2f} Id: G^1_11 = f_x, G^1_12 = f_y, G^1_22 = -f_x, ...
        let g = Grid2D::centered_square(129, 1.0).unwrap();
        let f = |x: f64, y: f64| 0.3 * x + 0.1 * x * y;
        let fx = |_x: f64, y: f64| 0.3 + 0.1 * y;
        let fy = |x: f64, _y: f64| 0.1 * x;
        let m = SymMatrixField2D::sample_metric(
            g,
            |x, y| {
                let e = (2.0 * f(x, y)).exp();
                [e, 0.0, e]
            },
            0.15,
        )
        .unwrap();
        let gamma = christoffel(&m).unwrap();
        let mut worst: f64 = 0.0;
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                let [x, y] = g.node(i, j);
                worst = worst.max((gamma.gamma(0, 0, 0).at(i, j) - fx(x, y)).abs());
                worst = worst.max((gamma.gamma(0, 0, 1).at(i, j) - fy(x, y)).abs());
                worst = worst.max((gamma.gamma(0, 1, 1).at(i, j) + fx(x, y)).abs());
                worst = worst.max((gamma.gamma(1, 0, 0).at(i, j) + fy(x, y)).abs());
            }
        }
        // centered differences of e^{2f} leave O(h^2)
        assert!(worst < 5e-4, "worst = {worst}");
    }

    #[test]
    fn lower_order_term_vanishes_for_constant_metrics() {
        let m = identity_metric(17, 1.0);
        assert!(lower_order_term(&m).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn lower_order_term_sphere_graph_against_symbolic_oracle() {
        // graph metric of v: Gamma^m_ij = v_m v_ij / (1 + |grad v|^2),
        // L assembled from the same closed forms
        let r = 2.0f64;
        let g = Grid2D::centered_square(257, 0.8).unwrap();
        let m = SymMatrixField2D::sample_metric(
            g,
            |x, y| {
                let s2 = r * r - x * x - y * y;
                let gx = -x / s2.sqrt();
                let gy = -y / s2.sqrt();
                [1.0 + gx * gx, gx * gy, 1.0 + gy * gy]
            },
            1.0,
        )
        .unwrap();
        let l = lower_order_term(&m).unwrap();
        // symbolic oracle via the closed-form pieces
        let oracle = |x: f64, y: f64| -> f64 {
            let s2 = r * r - x * x - y * y;
            let s = s2.sqrt();
            let v1 = [-x / s, -y / s];
            // v_ij = -delta_ij/s - x_i x_j / s^3
            let hess = [
                [-1.0 / s - x * x / (s2 * s), -x * y / (s2 * s)],
                [-x * y / (s2 * s), -1.0 / s - y * y / (s2 * s)],
            ];
            let det = 1.0 + v1[0] * v1[0] + v1[1] * v1[1];
            let ga = |m_: usize, i: usize, j: usize| v1[m_] * hess[i][j] / det;
            let g1 = [1.0 + v1[0] * v1[0], v1[0] * v1[1]];
            // d_k g_{1m} = v_1k v_m + v_1 v_mk
            let dg = |k: usize, mm: usize| hess[0][k] * v1[mm] + v1[0] * hess[mm][k];
            let mut acc = -dg(0, 0) * ga(0, 1, 1) - dg(0, 1) * ga(1, 1, 1)
                + dg(1, 0) * ga(0, 1, 0)
                + dg(1, 1) * ga(1, 1, 0);
            for mm in 0..2 {
                let mut quad = 0.0;
                for ss in 0..2 {
                    quad += ga(mm, 0, ss) * ga(ss, 1, 1) - ga(mm, 1, ss) * ga(ss, 1, 0);
                }
                acc += g1[mm] * quad;
            }
            acc / det
        };
        // value at the origin is zero (grad v = 0 kills every factor)
        let (ic, jc) = g.nearest([0.0, 0.0]);
        assert!(l.at(ic, jc).abs() < 1e-10);
        let mut worst: f64 = 0.0;
        for j in (4..g.ny - 4).step_by(7) {
            for i in (4..g.nx - 4).step_by(7) {
                let [x, y] = g.node(i, j);
                worst = worst.max((l.at(i, j) - oracle(x, y)).abs());
            }
        }
        assert!(worst < 2e-3, "worst = {worst}");
    }

    #[test]
    fn kappa_of_flat_metric_is_zero() {
        let m = identity_metric(65, 1.0);
        let phi = TestFunction::normalized([0.0, 0.0], 0.6);
        let p = kappa_pairing(&m, &phi).unwrap();
        assert!(p.value.abs() < 1e-10, "value = {}", p.value);
    }

    /// Quadrature oracle: int kappa(x) phi(x) dx on analytic formulas.
    fn smooth_kappa_oracle(
        kappa: impl Fn(f64, f64) -> f64,
        phi: &TestFunction,
        n: usize,
    ) -> f64 {
        let s = phi.support();
        let hx = (s.x_max - s.x_min) / n as f64;
        let hy = (s.y_max - s.y_min) / n as f64;
        let w = |k: usize| {
            if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            }
        };
        let mut sum = 0.0;
        for j in 0..=n {
            let y = s.y_min + j as f64 * hy;
            for i in 0..=n {
                let x = s.x_min + i as f64 * hx;
                sum += w(i) * w(j) * kappa(x, y) * phi.value([x, y]);
            }
        }
        sum * hx * hy / 9.0
    }

    #[test]
    fn kappa_sphere_graph_matches_smooth_oracle() {
        // the graph metric of the R = 2 cap has kappa = 1/R^2 = 0.25, and the
        // pairing is against Lebesgue measure, so the oracle is the plain
        // quadrature of det Hess v / (1+|grad v|^2)^2 against phi
        let r = 2.0f64;
        let g = Grid2D::centered_square(257, 0.8).unwrap();
        let m = SymMatrixField2D::sample_metric(
            g,
            |x, y| {
                let s2 = r * r - x * x - y * y;
                let gx = -x / s2.sqrt();
                let gy = -y / s2.sqrt();
                [1.0 + gx * gx, gx * gy, 1.0 + gy * gy]
            },
            1.0,
        )
        .unwrap();
        let phi = TestFunction::normalized([0.0, 0.0], 0.5);
        let det_hess = move |x: f64, y: f64| {
            let s2 = r * r - x * x - y * y;
            r * r / (s2 * s2)
        };
        let weight = move |x: f64, y: f64| {
            let s2 = r * r - x * x - y * y;
            let w = r * r / s2;
            det_hess(x, y) / (w * w)
        };
        let oracle = smooth_kappa_oracle(weight, &phi, 400);
        // for the sphere the integrand reduces to 1/R^2 * phi
        assert!((oracle - 0.25).abs() < 1e-6, "oracle = {oracle}");
        let p = kappa_pairing(&m, &phi).unwrap();
        assert!(
            (p.value - oracle).abs() < 2e-3,
            "pairing {} vs oracle {}",
            p.value,
            oracle
        );
    }

    #[test]
    fn kappa_conformal_metric_matches_symbolic_curvature() {
        // kappa(e^{2f} Id) = -e^{-2f} Laplace f
        let g = Grid2D::centered_square(257, 1.0).unwrap();
        let f = |x: f64, y: f64| 0.2 * (x * x - 0.5 * y * y) + 0.1 * x * y;
        let lap = 0.2 * 2.0 - 0.5 * 0.2 * 2.0;
        let m = SymMatrixField2D::sample_metric(
            g,
            |x, y| {
                let e = (2.0 * f(x, y)).exp();
                [e, 0.0, e]
            },
            0.3,
        )
        .unwrap();
        let phi = TestFunction::normalized([0.1, 0.0], 0.6);
        let oracle = smooth_kappa_oracle(
            move |x, y| -(-2.0 * f(x, y)).exp() * lap,
            &phi,
            400,
        );
        let p = kappa_pairing(&m, &phi).unwrap();
        assert!(
            (p.value - oracle).abs() < 2e-3,
            "pairing {} vs oracle {}",
            p.value,
            oracle
        );
    }

    #[test]
    fn kappa_of_pulled_back_flat_metric_vanishes_under_refinement() {
        // flat metric in curvilinear coordinates
        let xi = Diffeo2D::sin_shear(0.3);
        let phi = TestFunction::normalized([0.0, 0.0], 0.5);
        let mut prev = f64::INFINITY;
        for n in [65usize, 129, 257] {
            let grid = Grid2D::centered_square(n, 1.0).unwrap();
            let pulled = pullback_metric(&AnalyticMetric::identity(), &xi, grid).unwrap();
            let p = kappa_pairing(&pulled, &phi).unwrap();
            assert!(p.value.abs() < prev.max(1e-12), "not shrinking: {}", p.value);
            prev = p.value.abs();
        }
        assert!(prev < 5e-5, "final flatness residual {prev}");
    }

    #[test]
    fn pullback_identity_and_rotation_are_exact() {
        let grid = Grid2D::centered_square(33, 1.0).unwrap();
        let g = AnalyticMetric::sphere_graph(3.0);
        let direct = pullback_metric(&g, &Diffeo2D::identity(), grid).unwrap();
        for jj in 0..grid.ny {
            for ii in 0..grid.nx {
                let m = g.eval(grid.node(ii, jj));
                assert_eq!(direct.g11.at(ii, jj), m[0]);
                assert_eq!(direct.g12.at(ii, jj), m[1]);
            }
        }
        let rot = pullback_metric(
            &AnalyticMetric::identity(),
            &Diffeo2D::rotation(0.7),
            grid,
        )
        .unwrap();
        for jj in 0..grid.ny {
            for ii in 0..grid.nx {
                assert!((rot.g11.at(ii, jj) - 1.0).abs() < 1e-15);
                assert!(rot.g12.at(ii, jj).abs() < 1e-15);
                assert!((rot.g22.at(ii, jj) - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn pullback_sin_shear_matches_hand_expansion() {
        let grid = Grid2D::centered_square(33, 1.0).unwrap();
        let pulled = pullback_metric(
            &AnalyticMetric::identity(),
            &Diffeo2D::sin_shear(0.1),
            grid,
        )
        .unwrap();
        for jj in 0..grid.ny {
            for ii in 0..grid.nx {
                let y = grid.y(jj);
                let c = 0.1 * y.cos();
                assert!((pulled.g11.at(ii, jj) - 1.0).abs() < 1e-14);
                assert!((pulled.g12.at(ii, jj) - c).abs() < 1e-14);
                assert!((pulled.g22.at(ii, jj) - (1.0 + c * c)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn pullback_is_tensorial_under_composition() {
        let grid = Grid2D::centered_square(33, 0.7).unwrap();
        let g = AnalyticMetric::sphere_graph(3.0);
        let xi = Diffeo2D::rotation(0.4);
        let eta = Diffeo2D::linear_shear(0.25);
        // (xi o eta)^* g = eta^* (xi^* g)
        let composed = pullback_metric(&g, &xi.compose(&eta), grid).unwrap();
        // intermediate pullback kept analytic so both routes are exact
        let xi_c = xi.clone();
        let xi_g = AnalyticMetric::new(
            move |q| {
                let jm = xi_c.jacobian(q);
                let m = AnalyticMetric::sphere_graph(3.0).eval(xi_c.apply(q));
                let a = [
                    m[0] * jm[0][0] + m[1] * jm[1][0],
                    m[1] * jm[0][0] + m[2] * jm[1][0],
                    m[0] * jm[0][1] + m[1] * jm[1][1],
                    m[1] * jm[0][1] + m[2] * jm[1][1],
                ];
                [
                    jm[0][0] * a[0] + jm[1][0] * a[1],
                    jm[0][1] * a[0] + jm[1][1] * a[1],
                    jm[0][1] * a[2] + jm[1][1] * a[3],
                ]
            },
            0.9,
        );
        let nested = pullback_metric(&xi_g, &eta, grid).unwrap();
        let mut worst: f64 = 0.0;
        for jj in 0..grid.ny {
            for ii in 0..grid.nx {
                worst = worst.max((composed.g11.at(ii, jj) - nested.g11.at(ii, jj)).abs());
                worst = worst.max((composed.g12.at(ii, jj) - nested.g12.at(ii, jj)).abs());
                worst = worst.max((composed.g22.at(ii, jj) - nested.g22.at(ii, jj)).abs());
            }
        }
        // nested path interpolates the sampled intermediate metric
        assert!(worst < 1e-8, "worst = {worst}");
    }

    #[test]
    fn invariance_identity_diffeo_is_exact() {
        let grid = Grid2D::centered_square(65, 0.8).unwrap();
        let g = AnalyticMetric::sphere_graph(2.0);
        let phi = TestFunction::normalized([0.0, 0.0], 0.4);
        let r = invariance_residual(&g, &Diffeo2D::identity(), &phi, grid, grid).unwrap();
        assert!(r.residual < 1e-12, "residual = {}", r.residual);
    }

    #[test]
    fn invariance_quarter_rotation_is_machine_exact() {
        let grid = Grid2D::centered_square(129, 0.8).unwrap();
        let g = AnalyticMetric::sphere_graph(2.0);
        let phi = TestFunction::normalized([0.0, 0.0], 0.4);
        let xi = Diffeo2D::rotation(std::f64::consts::FRAC_PI_2);
        let r = invariance_residual(&g, &xi, &phi, grid, grid).unwrap();
        assert!(r.residual < 1e-10, "residual = {}", r.residual);
    }

    #[test]
    fn invariance_generic_rotation_within_quadrature_tolerance() {
        let grid = Grid2D::centered_square(257, 0.8).unwrap();
        let g = AnalyticMetric::sphere_graph(2.0);
        let phi = TestFunction::normalized([0.0, 0.0], 0.35);
        let xi = Diffeo2D::rotation(0.5);
        let r = invariance_residual(&g, &xi, &phi, grid, grid).unwrap();
        assert!(r.residual < 2e-4, "residual = {}", r.residual);
    }

    #[test]
    fn invariance_shear_residual_decays_at_first_order() {
        let g = AnalyticMetric::sphere_graph(2.0);
        let xi = Diffeo2D::linear_shear(0.2);
        let phi = TestFunction::normalized([0.0, 0.0], 0.3);
        let mut res = Vec::new();
        for n in [65usize, 129, 257] {
            let grid = Grid2D::centered_square(n, 0.7).unwrap();
            let r = invariance_residual(&g, &xi, &phi, grid, grid).unwrap();
            res.push((2.0 / (n - 1) as f64, r.residual));
        }
        let slope = ((res[0].1 / res[2].1).ln()) / ((res[0].0 / res[2].0).ln());
        assert!(slope >= 1.0, "order = {slope}, residuals {res:?}");
    }

    #[test]
    fn stability_zero_gap_for_equal_metrics() {
        let m = identity_metric(65, 1.0);
        let phi = TestFunction::normalized([0.0, 0.0], 0.6);
        let r = kappa_stability_check(&m, &m, &phi).unwrap();
        assert_eq!(r.gap, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn stability_gap_linear_in_perturbation() {
        let g = Grid2D::centered_square(129, 1.0).unwrap();
        let phi = TestFunction::normalized([0.0, 0.0], 0.6);
        let base = SymMatrixField2D::sample_metric(
            g,
            |x, y| [1.0 + 0.2 * x * x, 0.1 * x * y, 1.0 + 0.1 * y * y],
            0.5,
        )
        .unwrap();
        let mut gaps = Vec::new();
        let ts = [0.1, 0.05, 0.025, 0.0125];
        for &t in &ts {
            let pert = SymMatrixField2D::sample_metric(
                g,
                move |x, y| {
                    [
                        1.0 + 0.2 * x * x + t * (1.0 + 0.3 * (2.0 * x).sin()),
                        0.1 * x * y + t * 0.2 * y,
                        1.0 + 0.1 * y * y + t * 0.5,
                    ]
                },
                0.3,
            )
            .unwrap();
            let r = kappa_stability_check(&base, &pert, &phi).unwrap();
            assert!(r.pass, "gap {} above bound {}", r.gap, r.bound);
            gaps.push(r.gap);
        }
        let slope = (gaps[0] / gaps[3]).ln() / (ts[0] / ts[3]).ln();
        assert!(slope >= 0.9, "gap slope in t: {slope}, gaps {gaps:?}");
    }

    #[test]
    fn stability_bound_holds_for_conformal_scalings() {
        let m1 = identity_metric(65, 1.0);
        let g = *m1.grid();
        let phi = TestFunction::normalized([0.0, 0.0], 0.6);
        for t in [0.1, 0.01] {
            let m2 = SymMatrixField2D::sample_metric(
                g,
                move |_, _| [1.0 + t, 0.0, 1.0 + t],
                0.5,
            )
            .unwrap();
            let r = kappa_stability_check(&m1, &m2, &phi).unwrap();
            assert!(r.pass, "t={t}: gap {} bound {}", r.gap, r.bound);
        }
    }

    #[test]
    fn graph_metric_trivials() {
        let g = Grid2D::centered_square(33, 1.0).unwrap();
        let c = ScalarField2D::constant(g, 4.2).unwrap();
        let m = graph_metric(&c);
        assert!(m.g11.sup_norm() - 1.0 < 1e-14);
        assert!(m.g12.sup_norm() < 1e-14);

        let v = ScalarField2D::sample(g, |x, _| x).unwrap();
        let m = graph_metric(&v);
        for jj in 0..g.ny {
            for ii in 0..g.nx {
                assert!((m.g11.at(ii, jj) - 2.0).abs() < 1e-12);
                assert!((m.g22.at(ii, jj) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn graph_metric_det_identity_exact() {
        let g = Grid2D::centered_square(65, 1.0).unwrap();
        let v = ScalarField2D::sample(g, |x, y| (2.0 * x).sin() * y).unwrap();
        let m = graph_metric(&v);
        let grad = gradient(&v);
        for jj in 0..g.ny {
            for ii in 0..g.nx {
                let det = m.det_at(ii, jj);
                let n2 = 1.0 + grad.x.at(ii, jj).powi(2) + grad.y.at(ii, jj).powi(2);
                assert!((det - n2).abs() <= 1e-12 * n2);
            }
        }
    }

    #[test]
    fn graph_bridge_zero_field() {
        let g = Grid2D::centered_square(65, 1.0).unwrap();
        let v = ScalarField2D::constant(g, 0.0).unwrap();
        let phi = TestFunction::normalized([0.0, 0.0], 0.5);
        let r = graph_bridge_residual(&v, &phi).unwrap();
        assert!(r.lhs.abs() < 1e-12 && r.rhs.abs() < 1e-12);
    }

    #[test]
    fn graph_bridge_sphere_cap_refines_and_matches_oracle() {
        let r = 2.0f64;
        let phi = TestFunction::normalized([0.0, 0.0], 0.4);
        let mut residuals = Vec::new();
        let mut last = None;
        for n in [65usize, 129, 257] {
            let g = Grid2D::centered_square(n, 0.8).unwrap();
            let v = ScalarField2D::sample(g, |x, y| (r * r - x * x - y * y).sqrt()).unwrap();
            let out = graph_bridge_residual(&v, &phi).unwrap();
            residuals.push((2.0 * 0.8 / (n - 1) as f64, out.residual));
            last = Some(out);
        }
        let slope =
            (residuals[0].1 / residuals[2].1).ln() / (residuals[0].0 / residuals[2].0).ln();
        assert!(slope >= 1.0, "order {slope}: {residuals:?}");
        // both sides agree with the smooth oracle 0.25 (kappa of the sphere)
        let out = last.unwrap();
        assert!((out.lhs - 0.25).abs() < 0.02 * 0.25, "lhs {}", out.lhs);
        assert!((out.rhs - 0.25).abs() < 0.02 * 0.25, "rhs {}", out.rhs);
    }

    #[test]
    fn graph_bridge_rough_input_refines() {
        let phi = TestFunction::normalized([0.0, 0.0], 0.3);
        let mut residuals = Vec::new();
        for n in [129usize, 257, 513] {
            let g = Grid2D::centered_square(n, 0.8).unwrap();
            // levels pinned to the coarsest grid so refinement resolves a
            // fixed rough function
            let spec = GeneratorSpec {
                kind: GeneratorKind::Weierstrass {
                    alpha: 0.8,
                    levels: Some(3),
                    amplitude: 0.3,
                    base: 4.0,
                },
                grid: g,
            };
            let (w, _) = generate(&spec).unwrap().into_scalar();
            let q = ScalarField2D::sample(g, |x, y| 0.5 * (x * x + y * y)).unwrap();
            let v = q.add(&w).unwrap();
            let out = graph_bridge_residual(&v, &phi).unwrap();
            residuals.push((1.6 / (n - 1) as f64, out.residual));
        }
        let slope =
            (residuals[0].1 / residuals[2].1).ln() / (residuals[0].0 / residuals[2].0).ln();
        assert!(slope >= 1.0, "order {slope}: {residuals:?}");
    }

    #[test]
    fn mollified_graph_metric_determinant_stays_above_half() {
        for (kind, amp) in [
            (GeneratorKind::Weierstrass {
                alpha: 0.8,
                levels: None,
                amplitude: 0.5,
                base: 4.0,
            }, 0.5),
            (GeneratorKind::SmoothedCone { a: 0.2 }, 1.0),
        ] {
            let _ = amp;
            let g = Grid2D::centered_square(257, 1.0).unwrap();
            let (v, _) = generate(&GeneratorSpec { kind, grid: g }).unwrap().into_scalar();
            let gm = graph_metric(&v);
            for eps in [0.25, 0.125, 0.0625] {
                let me = mollify_sym(&gm, eps).unwrap();
                let mut min_det = f64::INFINITY;
                let eg = *me.g11.grid();
                for jj in 0..eg.ny {
                    for ii in 0..eg.nx {
                        min_det = min_det.min(me.det_at(ii, jj));
                    }
                }
                assert!(min_det >= 0.5, "eps={eps}: min det {min_det}");
            }
        }
    }

    #[test]
    fn pullback_mollification_identity_diffeo_smooth_rates() {
        let grid = Grid2D::centered_square(257, 1.0).unwrap();
        let g = AnalyticMetric::sphere_graph(3.0);
        let ladder = crate::mollifier::dyadic_ladder(0.16, 4);
        for (j, want) in [(0usize, 2.0), (1usize, 1.0)] {
            let fit = pullback_mollification_rate(
                &g,
                &Diffeo2D::identity(),
                grid,
                [0.0, 0.0],
                j,
                &ladder,
            )
            .unwrap();
            assert!(
                fit.slope >= want - 0.2,
                "j={j}: slope {} want >= {}",
                fit.slope,
                want - 0.2
            );
        }
    }
}
