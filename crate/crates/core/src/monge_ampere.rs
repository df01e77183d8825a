//! Gradient-image (Monge-Ampère/Alexandrov) measures, the Gauss map,
//! extrinsic-curvature total variation, convexity detection, and the
//! Alexandrov-solution verification.
//!
//! Image areas are computed by forward rasterization: a refined source
//! lattice is pushed through the (bilinearly interpolated) gradient and
//! covered target pixels are counted. That follows the set-image semantics
//! `|grad v (E)|` and stays robust for non-injective gradients; the degree
//! integral provides the independent cross-check.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::degree::{degree_map, auto_target_grid, BoundaryImage, DomainU, Shape};
use crate::error::{Error, Result};
use crate::fields::calculus::{gradient, mixed_derivative, second_derivative, Axis};
use crate::fields::grid::Rect;
use crate::fields::io::fmt_f64;
use crate::fields::scalar::ScalarField2D;
use crate::weak_hessian::{nonnegativity_check, DetHessianPairer, NonnegativityReport};

/// Rasterized area of a gradient image, with its resolution bookkeeping.
#[derive(Debug, Clone, Copy)]
pub struct ImageAreaResult {
    pub area: f64,
    pub raster_resolution: f64,
    /// Rasterized upper bound for the boundary image `|grad v (dU)|`.
    pub boundary_image_area: f64,
    /// `h * max ||Hess v||` safeguard; rasters above this can under-resolve
    /// single-cell images.
    pub raster_safeguard: f64,
}

impl ImageAreaResult {
    pub fn to_json(&self) -> String {
        format!(
            "{{\"area\": {}, \"raster\": {}, \"boundary_image_area\": {}, \"raster_safeguard\": {}}}",
            fmt_f64(self.area),
            fmt_f64(self.raster_resolution),
            fmt_f64(self.boundary_image_area),
            fmt_f64(self.raster_safeguard)
        )
    }
}

/// Max row-sum norm of the discrete Hessian, a Lipschitz estimate for `grad v`.
fn hessian_sup(v: &ScalarField2D) -> f64 {
    let vxx = second_derivative(v, Axis::X);
    let vyy = second_derivative(v, Axis::Y);
    let vxy = mixed_derivative(v);
    let mut m = 0.0f64;
    for idx in 0..v.grid().len() {
        let a = vxx.values()[idx].abs() + vxy.values()[idx].abs();
        let b = vyy.values()[idx].abs() + vxy.values()[idx].abs();
        m = m.max(a).max(b);
    }
    m
}

struct Raster {
    origin: [f64; 2],
    step: f64,
    nx: usize,
    ny: usize,
}

impl Raster {
    fn covering(bbox: Rect, step: f64) -> Self {
        let pad = 2.0 * step;
        let origin = [bbox.x_min - pad, bbox.y_min - pad];
        let nx = (((bbox.x_max + pad - origin[0]) / step).ceil() as usize).max(1);
        let ny = (((bbox.y_max + pad - origin[1]) / step).ceil() as usize).max(1);
        Self {
            origin,
            step,
            nx,
            ny,
        }
    }

    #[inline]
    fn pixel(&self, p: [f64; 2]) -> Option<usize> {
        let i = ((p[0] - self.origin[0]) / self.step).floor();
        let j = ((p[1] - self.origin[1]) / self.step).floor();
        if i < 0.0 || j < 0.0 {
            return None;
        }
        let (i, j) = (i as usize, j as usize);
        if i >= self.nx || j >= self.ny {
            return None;
        }
        Some(j * self.nx + i)
    }

    fn len(&self) -> usize {
        self.nx * self.ny
    }
}

/// `|grad v(U)|` by forward rasterization of a refined source lattice.
pub fn gradient_image_area(
    v: &ScalarField2D,
    domain: &DomainU,
    raster: f64,
) -> Result<ImageAreaResult> {
    gradient_image_area_with_mask(v, domain, raster).map(|(r, _)| r)
}

/// Like [`gradient_image_area`], also returning the covered-pixel mask as a
/// 0/1 field on the target raster grid (exportable in GRID2D format).
pub fn gradient_image_area_with_mask(
    v: &ScalarField2D,
    domain: &DomainU,
    raster: f64,
) -> Result<(ImageAreaResult, ScalarField2D)> {
    let g = *v.grid();
    let b = domain.shape.bbox();
    let r = Rect::of_grid(&g);
    if b.x_min < r.x_min || b.x_max > r.x_max || b.y_min < r.y_min || b.y_max > r.y_max {
        return Err(Error::DomainOutsideGrid);
    }
    let grad = gradient(v);
    let lip = hessian_sup(v);
    // image bbox from node gradients over U, padded
    let mut ib = Rect::new(
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for j in 0..g.ny {
        for i in 0..g.nx {
            if domain.shape.contains(g.node(i, j)) {
                let q = grad.at(i, j);
                ib.x_min = ib.x_min.min(q[0]);
                ib.x_max = ib.x_max.max(q[0]);
                ib.y_min = ib.y_min.min(q[1]);
                ib.y_max = ib.y_max.max(q[1]);
            }
        }
    }
    if !ib.x_min.is_finite() {
        return Err(Error::DomainOutsideGrid);
    }
    let raster_grid = Raster::covering(ib, raster);
    // source spacing fine enough that adjacent images land within a pixel
    let step = (raster / (2.0 * lip.max(1e-12))).min(g.h);
    let n_src_x = (((b.x_max - b.x_min) / step).ceil() as usize).max(2) + 1;
    let n_src_y = (((b.y_max - b.y_min) / step).ceil() as usize).max(2) + 1;
    let covered = (0..n_src_y)
        .into_par_iter()
        .fold(
            || vec![false; raster_grid.len()],
            |mut acc, jj| {
                let y = b.y_min + (b.y_max - b.y_min) * jj as f64 / (n_src_y - 1) as f64;
                for ii in 0..n_src_x {
                    let x = b.x_min + (b.x_max - b.x_min) * ii as f64 / (n_src_x - 1) as f64;
                    if !domain.shape.contains([x, y]) {
                        continue;
                    }
                    if let Some(px) = raster_grid.pixel(grad.interp([x, y])) {
                        acc[px] = true;
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![false; raster_grid.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x |= *y;
                }
                a
            },
        );
    let area = covered.iter().filter(|&&c| c).count() as f64 * raster * raster;

    // boundary image rasterized the same way
    let per_steps = ((4.0 * (b.x_max - b.x_min + b.y_max - b.y_min)) / step).ceil() as usize;
    let mut bset = vec![false; raster_grid.len()];
    for k in 0..per_steps.max(256) {
        let t = k as f64 / per_steps.max(256) as f64;
        let p = boundary_point_of(&domain.shape, t);
        if let Some(px) = raster_grid.pixel(grad.interp(p)) {
            bset[px] = true;
        }
    }
    let boundary_image_area = bset.iter().filter(|&&c| c).count() as f64 * raster * raster;
    // covering() pads two pixels per side, so the raster grid is >= 4 wide
    let mask_grid = crate::fields::grid::Grid2D::new(
        raster_grid.nx,
        raster_grid.ny,
        raster_grid.origin[0] + 0.5 * raster,
        raster_grid.origin[1] + 0.5 * raster,
        raster,
    )?;
    let mut mask_vals = vec![0.0; mask_grid.len()];
    for (idx, &cov) in covered.iter().enumerate() {
        if cov {
            let (i, j) = (idx % raster_grid.nx, idx / raster_grid.nx);
            mask_vals[mask_grid.idx(i, j)] = 1.0;
        }
    }
    Ok((
        ImageAreaResult {
            area,
            raster_resolution: raster,
            boundary_image_area,
            raster_safeguard: g.h * lip,
        },
        ScalarField2D::new(mask_grid, mask_vals)?,
    ))
}

fn boundary_point_of(shape: &Shape, t: f64) -> [f64; 2] {
    match *shape {
        Shape::Disk { center, radius } => {
            let a = 2.0 * std::f64::consts::PI * t;
            [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
        }
        Shape::Rect(r) => {
            let w = r.x_max - r.x_min;
            let h = r.y_max - r.y_min;
            let per = 2.0 * (w + h);
            let s = t.rem_euclid(1.0) * per;
            if s < w {
                [r.x_min + s, r.y_min]
            } else if s < w + h {
                [r.x_max, r.y_min + (s - w)]
            } else if s < 2.0 * w + h {
                [r.x_max - (s - w - h), r.y_max]
            } else {
                [r.x_min, r.y_max - (s - 2.0 * w - h)]
            }
        }
    }
}

/// The Gauss map of the graph of `v`: `N = xi o grad v` with
/// `xi(x) = (x, -1)/sqrt(1+|x|^2)`; unit length, third component negative.
#[derive(Debug, Clone)]
pub struct GaussMapField {
    pub n1: ScalarField2D,
    pub n2: ScalarField2D,
    pub n3: ScalarField2D,
}

pub fn gauss_map(v: &ScalarField2D) -> GaussMapField {
    let grad = gradient(v);
    let g = *v.grid();
    let mut a = vec![0.0; g.len()];
    let mut b = vec![0.0; g.len()];
    let mut c = vec![0.0; g.len()];
    for idx in 0..g.len() {
        let gx = grad.x.values()[idx];
        let gy = grad.y.values()[idx];
        let s = (1.0 + gx * gx + gy * gy).sqrt();
        a[idx] = gx / s;
        b[idx] = gy / s;
        c[idx] = -1.0 / s;
    }
    GaussMapField {
        n1: ScalarField2D::new(g, a).expect("finite"),
        n2: ScalarField2D::new(g, b).expect("finite"),
        n3: ScalarField2D::new(g, c).expect("finite"),
    }
}

#[inline]
fn gauss_of_gradient(q: [f64; 2]) -> [f64; 3] {
    let s = (1.0 + q[0] * q[0] + q[1] * q[1]).sqrt();
    [q[0] / s, q[1] / s, -1.0 / s]
}

/// Equal-area latitude-band pixelization of the unit sphere.
struct SpherePixels {
    n_bands: usize,
    cells_per_band: Vec<usize>,
    cell_area: Vec<f64>,
}

impl SpherePixels {
    fn new(raster: f64) -> Self {
        let n_bands = ((std::f64::consts::PI / raster).ceil() as usize).max(2);
        let dz = 2.0 / n_bands as f64;
        let band_area = 2.0 * std::f64::consts::PI * dz;
        let mut cells_per_band = Vec::with_capacity(n_bands);
        let mut cell_area = Vec::with_capacity(n_bands);
        for _ in 0..n_bands {
            let m = ((band_area / (raster * raster)).round() as usize).max(1);
            cells_per_band.push(m);
            cell_area.push(band_area / m as f64);
        }
        Self {
            n_bands,
            cells_per_band,
            cell_area,
        }
    }

    #[inline]
    fn pixel(&self, n: [f64; 3]) -> (u32, u32) {
        let z = n[2].clamp(-1.0, 1.0);
        let band = (((z + 1.0) / 2.0 * self.n_bands as f64) as usize).min(self.n_bands - 1);
        let phi = n[1].atan2(n[0]).rem_euclid(2.0 * std::f64::consts::PI);
        let m = self.cells_per_band[band];
        let cell = ((phi / (2.0 * std::f64::consts::PI) * m as f64) as usize).min(m - 1);
        (band as u32, cell as u32)
    }

    fn area_of(&self, covered: &HashSet<(u32, u32)>) -> f64 {
        covered
            .iter()
            .map(|&(band, _)| self.cell_area[band as usize])
            .sum()
    }
}

/// Spherical areas of Gauss-map images over a finite partition.
#[derive(Debug, Clone)]
pub struct PartitionTV {
    pub parts: Vec<Shape>,
    pub areas: Vec<f64>,
    pub total: f64,
    pub sphere_raster: f64,
}

impl PartitionTV {
    pub fn to_json(&self) -> String {
        let areas: Vec<String> = self.areas.iter().map(|a| fmt_f64(*a)).collect();
        format!(
            "{{\"areas\": [{}], \"total\": {}, \"sphere_raster\": {}}}",
            areas.join(", "),
            fmt_f64(self.total),
            fmt_f64(self.sphere_raster)
        )
    }
}

fn shapes_disjoint(a: &Shape, b: &Shape) -> bool {
    match (*a, *b) {
        (
            Shape::Disk {
                center: c1,
                radius: r1,
            },
            Shape::Disk {
                center: c2,
                radius: r2,
            },
        ) => {
            let d2 = (c1[0] - c2[0]).powi(2) + (c1[1] - c2[1]).powi(2);
            d2 > (r1 + r2) * (r1 + r2)
        }
        (Shape::Rect(r1), Shape::Rect(r2)) => !r1.intersects(&r2),
        (Shape::Disk { center, radius }, Shape::Rect(r))
        | (Shape::Rect(r), Shape::Disk { center, radius }) => {
            let cx = center[0].clamp(r.x_min, r.x_max);
            let cy = center[1].clamp(r.y_min, r.y_max);
            let d2 = (center[0] - cx).powi(2) + (center[1] - cy).powi(2);
            d2 > radius * radius
        }
    }
}

/// `H^2(N(E_i))` per part by pushing a refined lattice through the Gauss map
/// and rasterizing on an equal-area sphere pixelization.
pub fn spherical_image_tv(
    v: &ScalarField2D,
    parts: &[Shape],
    sphere_raster: f64,
) -> Result<PartitionTV> {
    for i in 0..parts.len() {
        for j in i + 1..parts.len() {
            if !shapes_disjoint(&parts[i], &parts[j]) {
                return Err(Error::OverlappingParts);
            }
        }
    }
    let g = *v.grid();
    let r = Rect::of_grid(&g);
    for p in parts {
        let b = p.bbox();
        if b.x_min < r.x_min || b.x_max > r.x_max || b.y_min < r.y_min || b.y_max > r.y_max {
            return Err(Error::DomainOutsideGrid);
        }
    }
    let grad = gradient(v);
    let lip = hessian_sup(v);
    let pix = SpherePixels::new(sphere_raster);
    let mut areas = Vec::with_capacity(parts.len());
    for part in parts {
        let b = part.bbox();
        // the map xi contracts, so grad v's Lipschitz bound serves for N too
        let step = (sphere_raster / (2.0 * lip.max(1e-12))).min(g.h);
        let nsx = (((b.x_max - b.x_min) / step).ceil() as usize).max(2) + 1;
        let nsy = (((b.y_max - b.y_min) / step).ceil() as usize).max(2) + 1;
        let covered = (0..nsy)
            .into_par_iter()
            .fold(HashSet::new, |mut acc: HashSet<(u32, u32)>, jj| {
                let y = b.y_min + (b.y_max - b.y_min) * jj as f64 / (nsy - 1) as f64;
                for ii in 0..nsx {
                    let x = b.x_min + (b.x_max - b.x_min) * ii as f64 / (nsx - 1) as f64;
                    if !part.contains([x, y]) {
                        continue;
                    }
                    acc.insert(pix.pixel(gauss_of_gradient(grad.interp([x, y]))));
                }
                acc
            })
            .reduce(HashSet::new, |mut a, b| {
                a.extend(b);
                a
            });
        areas.push(pix.area_of(&covered));
    }
    let total = areas.iter().sum();
    Ok(PartitionTV {
        parts: parts.to_vec(),
        areas,
        total,
        sphere_raster,
    })
}

/// Midpoint-convexity scan over a deterministic pair family.
#[derive(Debug, Clone, Copy)]
pub struct ConvexityReport {
    pub convex: bool,
    /// Max of `v(mid) - (v(p)+v(q))/2` over the family (negative when the
    /// field is strictly midpoint-convex on it).
    pub worst_violation: f64,
    pub tol: f64,
    pub worst_pair: ([f64; 2], [f64; 2]),
}

/// Test midpoint convexity on all even node offsets up to a distance budget
/// plus dyadic long-range offsets; midpoints of even offsets are exact nodes,
/// odd neighbor offsets use bilinear midpoints under an `h^2` tolerance.
pub fn convexity_check(v: &ScalarField2D) -> ConvexityReport {
    let g = *v.grid();
    let tol = g.h * g.h * hessian_sup(v).max(1.0);
    let mut dirs: Vec<(isize, isize)> = Vec::new();
    for d in 1..=6isize {
        dirs.extend_from_slice(&[(d, 0), (0, d), (d, d), (d, -d)]);
    }
    let mut d = 8isize;
    while (d as usize) < g.nx.max(g.ny) {
        dirs.extend_from_slice(&[(d, 0), (0, d), (d, d), (d, -d)]);
        d *= 2;
    }
    let rows: Vec<(f64, ([f64; 2], [f64; 2]))> = (0..g.ny)
        .into_par_iter()
        .map(|j| {
            let mut worst = f64::NEG_INFINITY;
            let mut pair = ([0.0; 2], [0.0; 2]);
            for i in 0..g.nx {
                for &(a, b) in &dirs {
                    // even offset: p and p + 2d have node midpoint p + d
                    let i2 = i as isize + 2 * a;
                    let j2 = j as isize + 2 * b;
                    if i2 >= 0 && j2 >= 0 && (i2 as usize) < g.nx && (j2 as usize) < g.ny {
                        let mid = v.at((i as isize + a) as usize, (j as isize + b) as usize);
                        let gap = mid - 0.5 * (v.at(i, j) + v.at(i2 as usize, j2 as usize));
                        if gap > worst {
                            worst = gap;
                            pair = (g.node(i, j), g.node(i2 as usize, j2 as usize));
                        }
                    }
                }
                // adjacent odd offsets with interpolated midpoints
                for &(a, b) in &[(1isize, 0isize), (0, 1), (1, 1), (1, -1)] {
                    let i2 = i as isize + a;
                    let j2 = j as isize + b;
                    if i2 >= 0 && j2 >= 0 && (i2 as usize) < g.nx && (j2 as usize) < g.ny {
                        let p = g.node(i, j);
                        let q = g.node(i2 as usize, j2 as usize);
                        let mid = v.interp([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                        let gap = mid - 0.5 * (v.at(i, j) + v.at(i2 as usize, j2 as usize));
                        if gap > worst {
                            worst = gap;
                            pair = (p, q);
                        }
                    }
                }
            }
            (worst, pair)
        })
        .collect();
    let (worst_violation, worst_pair) = rows
        .into_iter()
        .max_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"))
        .expect("at least one row");
    ConvexityReport {
        convex: worst_violation <= tol,
        worst_violation,
        tol,
        worst_pair,
    }
}

/// One domain's triple of measures in the Alexandrov verification.
#[derive(Debug, Clone)]
pub struct AlexandrovEntry {
    pub shape: Shape,
    pub image_area: f64,
    pub degree_integral: f64,
    pub mu_f: f64,
    pub max_pairwise_gap: f64,
    pub pass: bool,
}

/// Verdict of the Alexandrov-solution verification across domains.
#[derive(Debug, Clone)]
pub struct AlexandrovReport {
    pub sign_flipped: bool,
    pub entries: Vec<AlexandrovEntry>,
    pub pass: bool,
    pub tolerance: f64,
    pub nonnegativity: NonnegativityReport,
}

impl AlexandrovReport {
    pub fn to_json(&self) -> String {
        let rows: Vec<String> = self
            .entries
            .iter()
            .map(|e| {
                format!(
                    "{{\"image_area\": {}, \"degree_integral\": {}, \"mu_f\": {}, \"max_gap\": {}, \"pass\": {}}}",
                    fmt_f64(e.image_area),
                    fmt_f64(e.degree_integral),
                    fmt_f64(e.mu_f),
                    fmt_f64(e.max_pairwise_gap),
                    e.pass
                )
            })
            .collect();
        format!(
            "{{\"sign_flipped\": {}, \"pass\": {}, \"tolerance\": {}, \"entries\": [{}]}}",
            self.sign_flipped,
            self.pass,
            fmt_f64(self.tolerance),
            rows.join(", ")
        )
    }
}

/// Compare `|grad v(U)|`, the degree integral and the smoothed-indicator
/// Monge-Ampère mass on each domain; pass when every pairwise gap is within
/// 3% of the triple's mean.
///
/// Preconditions: `Det D^2 v >= 0` on a neighborhood of each domain and `v`
/// convex, up to one recorded global sign flip.
pub fn alexandrov_verify(v: &ScalarField2D, domains: &[DomainU]) -> Result<AlexandrovReport> {
    const TOL: f64 = 0.03;
    let mut field = v.clone();
    let mut flipped = false;
    let conv = convexity_check(&field);
    if !conv.convex {
        field = field.scale(-1.0)?;
        flipped = true;
        let conv2 = convexity_check(&field);
        if !conv2.convex {
            return Err(Error::PreconditionFailed(format!(
                "neither v nor -v is midpoint convex (worst violations {:.3e}, {:.3e})",
                conv.worst_violation, conv2.worst_violation
            )));
        }
    }
    let g = *field.grid();
    let region = Rect::new(
        g.x0 + g.h,
        g.x_max() - g.h,
        g.y0 + g.h,
        g.y_max() - g.h,
    );
    let nonneg = nonnegativity_check(&field, region, 200)?;
    if !nonneg.nonnegative {
        return Err(Error::PreconditionFailed(format!(
            "Det D^2 v takes negative values (min pairing {:.3e})",
            nonneg.min_pairing
        )));
    }
    let pairer = DetHessianPairer::new(&field)?;
    let grad = gradient(&field);
    let mut entries = Vec::with_capacity(domains.len());
    let mut all_pass = true;
    for domain in domains {
        let b = domain.shape.bbox();
        let diam = (b.x_max - b.x_min).max(b.y_max - b.y_min);
        let raster = (diam / 600.0).max(g.h / 4.0);
        let area = gradient_image_area(&field, domain, raster)?;
        let boundary = BoundaryImage::new(&grad, domain)?;
        let y_grid = auto_target_grid(boundary.bbox(), 301)?;
        let map = degree_map(&grad, domain, y_grid)?;
        let deg_integral = map.integral();
        let mu_f = crate::degree::smoothed_indicator_mass(&pairer, &domain.shape)?;
        let triple = [area.area, deg_integral, mu_f];
        let mean = triple.iter().sum::<f64>() / 3.0;
        let mut gap = 0.0f64;
        for a in 0..3 {
            for bb in a + 1..3 {
                gap = gap.max((triple[a] - triple[bb]).abs());
            }
        }
        let rel = if mean.abs() > 1e-12 { gap / mean.abs() } else { gap };
        let pass = rel <= TOL;
        all_pass &= pass;
        entries.push(AlexandrovEntry {
            shape: domain.shape,
            image_area: area.area,
            degree_integral: deg_integral,
            mu_f,
            max_pairwise_gap: rel,
            pass,
        });
    }
    Ok(AlexandrovReport {
        sign_flipped: flipped,
        entries,
        pass: all_pass,
        tolerance: TOL,
        nonnegativity: nonneg,
    })
}

/// Collision census of the gradient map on `U`.
#[derive(Debug, Clone, Copy)]
pub struct InjectivityReport {
    /// Max source distance among non-degenerate collisions (0 when none).
    pub max_collision_distance: f64,
    pub collisions_checked: usize,
    pub degenerate_segments: usize,
    pub violations: usize,
}

/// Hash node gradients into target-space buckets and classify collisions:
/// gradients equal across a segment on which `grad v` stays constant are the
/// degenerate convex case; anything else is flagged.
pub fn injectivity_check(
    v: &ScalarField2D,
    domain: &DomainU,
    raster: f64,
) -> Result<InjectivityReport> {
    let conv = convexity_check(v);
    if !conv.convex {
        return Err(Error::PreconditionFailed(format!(
            "injectivity check requires convexity (worst violation {:.3e})",
            conv.worst_violation
        )));
    }
    let g = *v.grid();
    let grad = gradient(v);
    let mut buckets: std::collections::HashMap<(i64, i64), Vec<(usize, usize)>> =
        std::collections::HashMap::new();
    for j in 0..g.ny {
        for i in 0..g.nx {
            if !domain.shape.contains(g.node(i, j)) {
                continue;
            }
            let q = grad.at(i, j);
            let key = (
                (q[0] / raster).floor() as i64,
                (q[1] / raster).floor() as i64,
            );
            buckets.entry(key).or_default().push((i, j));
        }
    }
    let seg_tol = (2.0 * raster).max(8.0 * g.h * g.h * hessian_sup(v));
    let mut checked = 0;
    let mut degenerate = 0;
    let mut violations = 0;
    let mut max_dist = 0.0f64;
    for nodes in buckets.values() {
        if nodes.len() < 2 {
            continue;
        }
        // compare everything against the bucket representative plus the
        // extremal member, enough to witness長-range collisions
        let rep = nodes[0];
        let far = *nodes
            .iter()
            .max_by(|a, b| {
                let da = (a.0 as f64 - rep.0 as f64).hypot(a.1 as f64 - rep.1 as f64);
                let db = (b.0 as f64 - rep.0 as f64).hypot(b.1 as f64 - rep.1 as f64);
                da.partial_cmp(&db).expect("finite")
            })
            .expect("non-empty");
        for &other in [far].iter().chain(nodes.iter().skip(1).take(8)) {
            if other == rep {
                continue;
            }
            let p = g.node(rep.0, rep.1);
            let q = g.node(other.0, other.1);
            let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
            if d <= 4.0 * g.h {
                continue;
            }
            checked += 1;
            let gp = grad.at(rep.0, rep.1);
            let steps = (d / g.h).ceil() as usize;
            let mut constant = true;
            for k in 0..=steps {
                let t = k as f64 / steps as f64;
                let pt = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
                let gq = grad.interp(pt);
                if (gq[0] - gp[0]).abs().max((gq[1] - gp[1]).abs()) > seg_tol {
                    constant = false;
                    break;
                }
            }
            if constant {
                degenerate += 1;
            } else {
                violations += 1;
                max_dist = max_dist.max(d);
            }
        }
    }
    Ok(InjectivityReport {
        max_collision_distance: max_dist,
        collisions_checked: checked,
        degenerate_segments: degenerate,
        violations,
    })
}
