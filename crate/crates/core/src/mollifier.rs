//! Standard mollification `f_eps = f * psi_eps` and commutator-rate fits.
//!
//! The kernel is the normalized bump profile rescaled to radius `eps` and
//! renormalized after discretization, so the discrete weights sum to exactly
//! one. Output is restricted to the eps-eroded interior subgrid; the output
//! grid itself records the erosion. Rate diagnostics always measure their
//! norms on the domain eroded by the largest ladder rung, so the norm domain
//! stays fixed across the fit.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::calculus::{derivative, Axis};
use crate::fields::grid::Grid2D;
use crate::fields::io::fmt_f64;
use crate::fields::scalar::{ScalarField2D, SymMatrixField2D, VectorField2D};

/// Discretized 2D mollifier at scale `eps` on spacing `h`.
///
/// Weights are the bump profile sampled on the stencil and divided by their
/// sum: nonnegative, radially symmetric, total mass exactly 1.
#[derive(Debug, Clone)]
pub struct MollifierKernel {
    pub eps: f64,
    pub margin: usize,
    weights: Vec<f64>,
    /// Per-row span `[a_lo, a_hi)` of nonzero weights; the bump is supported
    /// on a disk, so the square stencil corners carry nothing.
    spans: Vec<(usize, usize)>,
}

impl MollifierKernel {
    pub fn new(eps: f64, h: f64) -> Result<Self> {
        if !(eps >= 2.0 * h * (1.0 - 1e-12)) {
            return Err(Error::KernelUnderResolved {
                eps,
                h,
                min: 2.0 * h,
            });
        }
        let margin = (eps / h * (1.0 + 1e-12)).floor() as usize;
        let n = 2 * margin + 1;
        let mut weights = vec![0.0; n * n];
        let inv_eps2 = 1.0 / (eps * eps);
        let mut total = 0.0;
        for b in 0..n {
            let dy = (b as isize - margin as isize) as f64 * h;
            for a in 0..n {
                let dx = (a as isize - margin as isize) as f64 * h;
                let s = (dx * dx + dy * dy) * inv_eps2;
                let w = if s < 1.0 { (-1.0 / (1.0 - s)).exp() } else { 0.0 };
                weights[b * n + a] = w;
                total += w;
            }
        }
        for w in &mut weights {
            *w /= total;
        }
        let spans = (0..n)
            .map(|b| {
                let row = &weights[b * n..(b + 1) * n];
                let lo = row.iter().position(|&w| w != 0.0).unwrap_or(0);
                let hi = row.iter().rposition(|&w| w != 0.0).map_or(0, |p| p + 1);
                (lo, hi.max(lo))
            })
            .collect();
        Ok(Self {
            eps,
            margin,
            weights,
            spans,
        })
    }

    /// Discrete mass; 1 by construction up to round-off.
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Mollify a scalar field; the result lives on the eps-eroded subgrid.
///
/// ```
/// use weakcurv::{mollify, Grid2D, ScalarField2D};
///
/// let grid = Grid2D::centered_square(65, 1.0).unwrap();
/// let affine = ScalarField2D::sample(grid, |x, y| 1.0 + 2.0 * x - y).unwrap();
/// let smoothed = mollify(&affine, 0.25).unwrap();
/// // the kernel is symmetric, so affine fields pass through unchanged
/// let g = *smoothed.grid();
/// let expect = 1.0 + 2.0 * g.x(0) - g.y(0);
/// assert!((smoothed.at(0, 0) - expect).abs() < 1e-10);
/// ```
pub fn mollify(f: &ScalarField2D, eps: f64) -> Result<ScalarField2D> {
    let kernel = MollifierKernel::new(eps, f.grid().h)?;
    mollify_with(f, &kernel)
}

pub fn mollify_with(f: &ScalarField2D, kernel: &MollifierKernel) -> Result<ScalarField2D> {
    let mut out = mollify_many(&[f], kernel)?;
    Ok(out.pop().unwrap())
}

/// Convolve several fields on a common grid with one kernel in a single pass.
pub fn mollify_many(
    fields: &[&ScalarField2D],
    kernel: &MollifierKernel,
) -> Result<Vec<ScalarField2D>> {
    let g = *fields[0].grid();
    for f in fields {
        if *f.grid() != g {
            return Err(Error::GridMismatch);
        }
    }
    let m = kernel.margin;
    let out_grid = g
        .eroded(m)
        .map_err(|_| Error::ErodedToNothing { eps: kernel.eps })?;
    let n = 2 * m + 1;
    let mut buffers: Vec<Vec<f64>> = fields.iter().map(|_| vec![0.0; out_grid.len()]).collect();
    let n_fields = fields.len();
    // Parallel over output rows; each worker owns disjoint row slices.
    let mut row_refs: Vec<(usize, Vec<&mut [f64]>)> = Vec::with_capacity(out_grid.ny);
    {
        let mut rests: Vec<&mut [f64]> = buffers.iter_mut().map(|b| b.as_mut_slice()).collect();
        for jo in 0..out_grid.ny {
            let mut rows = Vec::with_capacity(n_fields);
            let mut new_rests = Vec::with_capacity(n_fields);
            for rest in rests {
                let (row, tail) = rest.split_at_mut(out_grid.nx);
                rows.push(row);
                new_rests.push(tail);
            }
            rests = new_rests;
            row_refs.push((jo, rows));
        }
    }
    row_refs.par_iter_mut().for_each(|(jo, rows)| {
        let j = *jo + m;
        for io in 0..out_grid.nx {
            let i = io + m;
            let mut acc = [0.0f64; 12];
            debug_assert!(n_fields <= 12);
            for b in 0..n {
                let (lo, hi) = kernel.spans[b];
                if hi <= lo {
                    continue;
                }
                let wrow = &kernel.weights[b * n + lo..b * n + hi];
                let jj = j + b - m;
                let base = jj * g.nx + i - m + lo;
                for (fi, f) in fields.iter().enumerate() {
                    let src = &f.values()[base..base + wrow.len()];
                    let mut s = 0.0;
                    for (w, v) in wrow.iter().zip(src) {
                        s += w * v;
                    }
                    acc[fi] += s;
                }
            }
            for (fi, row) in rows.iter_mut().enumerate() {
                row[io] = acc[fi];
            }
        }
    });
    buffers
        .into_iter()
        .map(|v| ScalarField2D::new(out_grid, v))
        .collect()
}

/// Componentwise mollification of a vector field.
pub fn mollify_vector(f: &VectorField2D, eps: f64) -> Result<VectorField2D> {
    let kernel = MollifierKernel::new(eps, f.grid().h)?;
    VectorField2D::new(mollify_with(&f.x, &kernel)?, mollify_with(&f.y, &kernel)?)
}

/// Componentwise mollification of a symmetric matrix field. The metric flag
/// is not propagated; re-flag after checking the determinant if needed.
pub fn mollify_sym(f: &SymMatrixField2D, eps: f64) -> Result<SymMatrixField2D> {
    let kernel = MollifierKernel::new(eps, f.grid().h)?;
    SymMatrixField2D::new(
        mollify_with(&f.g11, &kernel)?,
        mollify_with(&f.g12, &kernel)?,
        mollify_with(&f.g22, &kernel)?,
    )
}

/// Log-log slope with residual from a sequence of `(eps, norm)` pairs.
#[derive(Debug, Clone)]
pub struct RateFit {
    pub pairs: Vec<(f64, f64)>,
    pub slope: f64,
    pub residual: f64,
    /// All norms vanished; slope and residual are reported as zero.
    pub degenerate_zero: bool,
}

impl RateFit {
    /// Least-squares fit of `ln norm` against `ln eps`.
    ///
    /// Rungs with vanishing norms are unusable; the fit needs at least four
    /// usable ones unless every rung vanishes, which is reported as the
    /// degenerate-zero fit.
    pub fn fit(pairs: Vec<(f64, f64)>) -> Result<Self> {
        validate_ladder(&pairs.iter().map(|p| p.0).collect::<Vec<_>>())?;
        const FLOOR: f64 = 1e-250;
        if pairs.iter().all(|&(_, n)| n.abs() <= FLOOR) {
            return Ok(Self {
                pairs,
                slope: 0.0,
                residual: 0.0,
                degenerate_zero: true,
            });
        }
        let usable: Vec<(f64, f64)> = pairs
            .iter()
            .copied()
            .filter(|&(_, n)| n > FLOOR)
            .collect();
        if usable.len() < 4 {
            return Err(Error::TooFewRungs(usable.len()));
        }
        let xs: Vec<f64> = usable.iter().map(|&(e, _)| e.ln()).collect();
        let ys: Vec<f64> = usable.iter().map(|&(_, n)| n.ln()).collect();
        let n = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = xs.iter().map(|v| v * v).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(a, b)| a * b).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let intercept = (sy - slope * sx) / n;
        let residual = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - (intercept + slope * x)).abs())
            .fold(0.0f64, f64::max);
        Ok(Self {
            pairs,
            slope,
            residual,
            degenerate_zero: false,
        })
    }

    /// CSV rows `eps,norm`, one per rung, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,norm\n");
        for &(e, n) in &self.pairs {
            out.push_str(&fmt_f64(e));
            out.push(',');
            out.push_str(&fmt_f64(n));
            out.push('\n');
        }
        out
    }

    /// JSON summary `{slope, residual, n}` with stable key order.
    pub fn summary_json(&self) -> String {
        format!(
            "{{\"slope\": {}, \"residual\": {}, \"n\": {}, \"degenerate_zero\": {}}}",
            fmt_f64(self.slope),
            fmt_f64(self.residual),
            self.pairs.len(),
            self.degenerate_zero
        )
    }
}

/// Dyadic ladder `eps0 * 2^-k`, `rungs` entries.
pub fn dyadic_ladder(eps0: f64, rungs: usize) -> Vec<f64> {
    (0..rungs).map(|k| eps0 * 0.5f64.powi(k as i32)).collect()
}

fn validate_ladder(eps: &[f64]) -> Result<()> {
    if eps.len() < 4 {
        return Err(Error::TooFewRungs(eps.len()));
    }
    for w in eps.windows(2) {
        if !(w[1] > 0.0) || (w[1] / w[0] - 0.5).abs() > 1e-9 {
            return Err(Error::LadderNotDyadic);
        }
    }
    Ok(())
}

/// The `C^j` norm of the discrepancy field restricted to the fixed norm
/// domain `V` (erosion by the largest rung).
fn cj_norm_on(d: &ScalarField2D, v_grid: &Grid2D, j: usize) -> Result<f64> {
    let r = d.restrict_to(v_grid)?;
    Ok(match j {
        0 => r.sup_norm(),
        1 => {
            let gx = derivative(d, Axis::X).restrict_to(v_grid)?;
            let gy = derivative(d, Axis::Y).restrict_to(v_grid)?;
            r.sup_norm() + gx.sup_norm().max(gy.sup_norm())
        }
        _ => unreachable!(),
    })
}

fn norm_domain(grid: &Grid2D, eps_max: f64) -> Result<Grid2D> {
    let m = (eps_max / grid.h * (1.0 + 1e-12)).floor() as usize;
    grid.eroded(m).map_err(|_| Error::ErodedToNothing { eps: eps_max })
}

/// Rate of `||(ab)_eps - a_eps b_eps||_{C^j}` along a dyadic ladder.
pub fn commutator_rate(
    a: &ScalarField2D,
    b: &ScalarField2D,
    j: usize,
    eps_list: &[f64],
) -> Result<RateFit> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    assert!(j <= 1, "only C^0 and C^1 commutator norms are defined");
    validate_ladder(eps_list)?;
    let v_grid = norm_domain(a.grid(), eps_list[0])?;
    let ab = a.mul(b)?;
    let same = a == b;
    // round-off floor: discrepancies this small are zero for fit purposes
    let floor = 1e-13 * a.sup_norm() * b.sup_norm();
    let mut pairs = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let kernel = MollifierKernel::new(eps, a.grid().h)?;
        let mut mollified = if same {
            mollify_many(&[a, &ab], &kernel)?
        } else {
            mollify_many(&[a, b, &ab], &kernel)?
        };
        let ab_eps = mollified.pop().unwrap();
        let b_eps = if same {
            mollified[0].clone()
        } else {
            mollified.pop().unwrap()
        };
        let a_eps = mollified.pop().unwrap();
        let d = ab_eps.sub(&a_eps.mul(&b_eps)?)?;
        let norm = cj_norm_on(&d, &v_grid, j)?;
        pairs.push((eps, if norm <= floor { 0.0 } else { norm }));
    }
    RateFit::fit(pairs)
}

/// Rate of `||(fgh)_eps - f_eps g_eps h_eps||_{C^1}` along a dyadic ladder.
pub fn triple_commutator_rate(
    f: &ScalarField2D,
    g: &ScalarField2D,
    h: &ScalarField2D,
    eps_list: &[f64],
) -> Result<RateFit> {
    if f.grid() != g.grid() || f.grid() != h.grid() {
        return Err(Error::GridMismatch);
    }
    validate_ladder(eps_list)?;
    let v_grid = norm_domain(f.grid(), eps_list[0])?;
    let fgh = f.mul(g)?.mul(h)?;
    let all_same = f == g && g == h;
    let floor = 1e-13 * f.sup_norm() * g.sup_norm() * h.sup_norm();
    let mut pairs = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let kernel = MollifierKernel::new(eps, f.grid().h)?;
        let d = if all_same {
            let mollified = mollify_many(&[f, &fgh], &kernel)?;
            let cube = mollified[0].mul(&mollified[0])?.mul(&mollified[0])?;
            mollified[1].sub(&cube)?
        } else {
            let mollified = mollify_many(&[f, g, h, &fgh], &kernel)?;
            mollified[3].sub(&mollified[0].mul(&mollified[1])?.mul(&mollified[2])?)?
        };
        let norm = cj_norm_on(&d, &v_grid, 1)?;
        pairs.push((eps, if norm <= floor { 0.0 } else { norm }));
    }
    RateFit::fit(pairs)
}
