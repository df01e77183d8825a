//! Finite-difference calculus on uniform grids.
//!
//! Second-order centered stencils in the interior, second-order one-sided
//! stencils on the boundary frame. Both are exact on quadratics, so every
//! identity checked downstream sees clean O(h^2) residual budgets.

use crate::error::{Error, Result};
use crate::fields::scalar::{ScalarField2D, SymMatrixField2D, VectorField2D};

#[derive(Clone, Copy)]
pub enum Axis {
    X,
    Y,
}

/// First derivative along one axis.
pub fn derivative(f: &ScalarField2D, axis: Axis) -> ScalarField2D {
    let g = *f.grid();
    let inv2h = 1.0 / (2.0 * g.h);
    let mut out = vec![0.0; g.len()];
    match axis {
        Axis::X => {
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let d = if i == 0 {
                        -3.0 * f.at(0, j) + 4.0 * f.at(1, j) - f.at(2, j)
                    } else if i == g.nx - 1 {
                        3.0 * f.at(i, j) - 4.0 * f.at(i - 1, j) + f.at(i - 2, j)
                    } else {
                        f.at(i + 1, j) - f.at(i - 1, j)
                    };
                    out[g.idx(i, j)] = d * inv2h;
                }
            }
        }
        Axis::Y => {
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let d = if j == 0 {
                        -3.0 * f.at(i, 0) + 4.0 * f.at(i, 1) - f.at(i, 2)
                    } else if j == g.ny - 1 {
                        3.0 * f.at(i, j) - 4.0 * f.at(i, j - 1) + f.at(i, j - 2)
                    } else {
                        f.at(i, j + 1) - f.at(i, j - 1)
                    };
                    out[g.idx(i, j)] = d * inv2h;
                }
            }
        }
    }
    ScalarField2D::new(g, out).expect("finite differences of finite values")
}

/// Discrete gradient `(d1 f, d2 f)`.
pub fn gradient(f: &ScalarField2D) -> VectorField2D {
    VectorField2D::new(derivative(f, Axis::X), derivative(f, Axis::Y))
        .expect("components share the grid")
}

/// Pure second derivative along one axis (one-sided second order on the frame).
pub fn second_derivative(f: &ScalarField2D, axis: Axis) -> ScalarField2D {
    let g = *f.grid();
    let invh2 = 1.0 / (g.h * g.h);
    let mut out = vec![0.0; g.len()];
    match axis {
        Axis::X => {
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let d = if i == 0 {
                        2.0 * f.at(0, j) - 5.0 * f.at(1, j) + 4.0 * f.at(2, j) - f.at(3.min(g.nx - 1), j)
                    } else if i == g.nx - 1 {
                        2.0 * f.at(i, j) - 5.0 * f.at(i - 1, j) + 4.0 * f.at(i - 2, j)
                            - f.at(i.saturating_sub(3), j)
                    } else {
                        f.at(i + 1, j) - 2.0 * f.at(i, j) + f.at(i - 1, j)
                    };
                    out[g.idx(i, j)] = d * invh2;
                }
            }
        }
        Axis::Y => {
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let d = if j == 0 {
                        2.0 * f.at(i, 0) - 5.0 * f.at(i, 1) + 4.0 * f.at(i, 2) - f.at(i, 3.min(g.ny - 1))
                    } else if j == g.ny - 1 {
                        2.0 * f.at(i, j) - 5.0 * f.at(i, j - 1) + 4.0 * f.at(i, j - 2)
                            - f.at(i, j.saturating_sub(3))
                    } else {
                        f.at(i, j + 1) - 2.0 * f.at(i, j) + f.at(i, j - 1)
                    };
                    out[g.idx(i, j)] = d * invh2;
                }
            }
        }
    }
    ScalarField2D::new(g, out).expect("finite differences of finite values")
}

/// Mixed derivative `d1 d2 f` as composition of the two first-derivative stencils.
pub fn mixed_derivative(f: &ScalarField2D) -> ScalarField2D {
    derivative(&derivative(f, Axis::X), Axis::Y)
}

/// Row-wise curl of a symmetric matrix field: `(curl M)_i = d1 M_{i2} - d2 M_{i1}`.
pub fn matrix_curl(m: &SymMatrixField2D) -> VectorField2D {
    let c1 = derivative(&m.g12, Axis::X)
        .sub(&derivative(&m.g11, Axis::Y))
        .expect("common grid");
    let c2 = derivative(&m.g22, Axis::X)
        .sub(&derivative(&m.g12, Axis::Y))
        .expect("common grid");
    VectorField2D::new(c1, c2).expect("common grid")
}

/// Discrete sup norm of the gradient, `max_nodes max(|d1 f|, |d2 f|)`.
pub fn grad_sup_norm(f: &ScalarField2D) -> f64 {
    let gx = derivative(f, Axis::X);
    let gy = derivative(f, Axis::Y);
    gx.sup_norm().max(gy.sup_norm())
}

/// C^j sup norm: `||f||_0` for j = 0, `||f||_0 + ||grad f||_0` for j = 1.
pub fn cj_norm(f: &ScalarField2D, j: usize) -> f64 {
    match j {
        0 => f.sup_norm(),
        1 => f.sup_norm() + grad_sup_norm(f),
        _ => panic!("only C^0 and C^1 norms are supported"),
    }
}

pub fn cj_norm_sym(m: &SymMatrixField2D, j: usize) -> f64 {
    cj_norm(&m.g11, j).max(cj_norm(&m.g12, j)).max(cj_norm(&m.g22, j))
}

/// Sampled lower bound for the Hölder seminorm `[f]_{0,alpha}`.
///
/// Deterministic stratified pair family: all axis neighbor pairs first, then
/// diagonal and dyadic-distance offsets, then the maximal in-grid offsets.
/// The scan stops once `pair_budget` pairs have been consumed, so the value
/// is monotone in the budget and never exceeds the exhaustive-search value.
pub fn holder_seminorm(f: &ScalarField2D, alpha: f64, pair_budget: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::HolderExponentOutOfRange(alpha));
    }
    let g = f.grid();
    if pair_budget < g.len() {
        return Err(Error::PairBudgetTooSmall {
            budget: pair_budget,
            min: g.len(),
        });
    }

    let mut offsets: Vec<(isize, isize)> = vec![(1, 0), (0, 1), (1, 1), (1, -1)];
    let mut d = 2isize;
    let dmax = g.nx.max(g.ny) as isize - 1;
    while d <= dmax {
        offsets.push((d, 0));
        offsets.push((0, d));
        offsets.push((d, d));
        offsets.push((d, -d));
        d *= 2;
    }
    // Maximal separations; these attain the sup for monotone fields.
    offsets.push((g.nx as isize - 1, 0));
    offsets.push((0, g.ny as isize - 1));
    offsets.push((g.nx as isize - 1, g.ny as isize - 1));
    offsets.push((g.nx as isize - 1, -(g.ny as isize - 1)));

    let mut best: f64 = 0.0;
    let mut used = 0usize;
    'outer: for (di, dj) in offsets {
        let dist = ((di * di + dj * dj) as f64).sqrt() * g.h;
        let w = dist.powf(-alpha);
        for j in 0..g.ny {
            let j2 = j as isize + dj;
            if j2 < 0 || j2 >= g.ny as isize {
                continue;
            }
            for i in 0..g.nx {
                let i2 = i as isize + di;
                if i2 < 0 || i2 >= g.nx as isize {
                    continue;
                }
                if used >= pair_budget {
                    break 'outer;
                }
                used += 1;
                let incr = (f.at(i, j) - f.at(i2 as usize, j2 as usize)).abs();
                best = best.max(incr * w);
            }
        }
    }
    Ok(best)
}
