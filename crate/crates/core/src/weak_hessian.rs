//! The very weak Hessian determinant as a distributional pairing.
//!
//! `Det D^2 v = -1/2 curl curl (grad v tensor grad v)`: both curls fall on
//! the discrete product field, so the pairing is a plain node-rule sum of a
//! precomputed density against exact test-function values,
//!
//! ```text
//! Det D^2 v [phi] = h^2 sum_nodes W(node) phi(node),
//! W = -1/2 (Dxx P22 + Dyy P11 - 2 Dxy P12),   P = grad v tensor grad v.
//! ```
//!
//! Keeping every derivative on the field side makes the affine case vanish
//! identically (the stencils annihilate constant products) and spares the
//! quadrature from the steep rim layers of bump derivatives. The sign
//! convention is pinned by the smooth case: `v = (x^2+y^2)/2` against a
//! unit-mass `phi` pairs to `+1`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::calculus::{gradient, mixed_derivative, second_derivative, Axis};
use crate::fields::grid::{Grid2D, Rect};
use crate::fields::io::fmt_f64;
use crate::fields::scalar::{ScalarField2D, VectorField2D};
use crate::fields::testfn::{TestField, TestFunction};
use crate::mollifier::{dyadic_ladder, RateFit};

/// A number `f[phi]` produced by pairing a distribution with a test function,
/// plus a one-step Richardson estimate of the discretization error.
#[derive(Debug, Clone, Copy)]
pub struct DistributionPairing {
    pub value: f64,
    /// `|pairing(h) - pairing(2h)|`, from one grid-coarsening step.
    pub error_estimate: f64,
    pub grid: Grid2D,
}

fn det_hessian_density(v: &ScalarField2D) -> (VectorField2D, ScalarField2D) {
    let grad = gradient(v);
    let p11 = grad.x.mul(&grad.x).expect("common grid");
    let p12 = grad.x.mul(&grad.y).expect("common grid");
    let p22 = grad.y.mul(&grad.y).expect("common grid");
    let cc = second_derivative(&p22, Axis::X)
        .add(&second_derivative(&p11, Axis::Y))
        .expect("common grid")
        .sub(&mixed_derivative(&p12).scale(2.0).expect("finite"))
        .expect("common grid");
    let density = cc.scale(-0.5).expect("finite");
    (grad, density)
}

/// Precomputed discrete `Det D^2 v` density on the fine grid and its 2h
/// coarsening, so a field can be paired against many test functions without
/// rework.
pub struct DetHessianPairer {
    grid: Grid2D,
    grad: VectorField2D,
    density: ScalarField2D,
    coarse_density: ScalarField2D,
}

impl DetHessianPairer {
    pub fn new(v: &ScalarField2D) -> Result<Self> {
        let coarse = v.coarsened()?;
        let (grad, density) = det_hessian_density(v);
        let (_, coarse_density) = det_hessian_density(&coarse);
        Ok(Self {
            grid: *v.grid(),
            grad,
            density,
            coarse_density,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// Gradient of `v` on the fine grid (borrowed by downstream modules).
    pub fn grad(&self) -> &VectorField2D {
        &self.grad
    }

    /// The discrete density `-1/2 curl curl (grad v tensor grad v)`.
    pub fn density(&self) -> &ScalarField2D {
        &self.density
    }

    fn quadrature(density: &ScalarField2D, phi: &dyn TestField) -> f64 {
        let g = *density.grid();
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
                    let pv = phi.value([g.x(i), y]);
                    if pv != 0.0 {
                        row += density.at(i, j) * pv;
                    }
                }
                row
            })
            .sum();
        sum * g.h * g.h
    }

    /// Pair against any test field, with support validation and the
    /// Richardson error estimate.
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
        let value = Self::quadrature(&self.density, phi);
        let coarse_value = Self::quadrature(&self.coarse_density, phi);
        Ok(DistributionPairing {
            value,
            error_estimate: (value - coarse_value).abs(),
            grid: self.grid,
        })
    }
}

/// One-shot pairing `Det D^2 v [phi]`.
///
/// ```
/// use weakcurv::{det_hessian_pairing, Grid2D, ScalarField2D, TestFunction};
///
/// // det Hess of (x^2+y^2)/2 is 1, so the pairing recovers the bump mass
/// let grid = Grid2D::centered_square(129, 2.0).unwrap();
/// let v = ScalarField2D::sample(grid, |x, y| 0.5 * (x * x + y * y)).unwrap();
/// let phi = TestFunction::normalized([0.0, 0.0], 1.0);
/// let p = det_hessian_pairing(&v, &phi).unwrap();
/// assert!((p.value - 1.0).abs() < 1e-2);
/// ```
pub fn det_hessian_pairing(v: &ScalarField2D, phi: &TestFunction) -> Result<DistributionPairing> {
    DetHessianPairer::new(v)?.pair(phi)
}

/// Pairing against an arbitrary analytic test field (smoothed indicators,
/// weighted or transported test functions).
pub fn det_hessian_pairing_with(
    v: &ScalarField2D,
    phi: &dyn TestField,
) -> Result<DistributionPairing> {
    DetHessianPairer::new(v)?.pair(phi)
}

/// Decay fit of `||(Det D^2 v) * psi_eps||_0` against `eps`.
///
/// The mollified distribution at `x` is the pairing of `v` with the
/// unit-mass bump of radius `eps` centered at `x`. The sup is sampled on a
/// probe lattice of spacing `~eps/6` inside the domain eroded by the largest
/// rung, so every probe support stays interior and the norm domain is fixed.
pub fn besov_decay_probe(v: &ScalarField2D, eps_list: &[f64]) -> Result<RateFit> {
    if eps_list.len() < 4 {
        return Err(Error::TooFewRungs(eps_list.len()));
    }
    let g = *v.grid();
    let eps_max = eps_list[0];
    for &e in eps_list {
        if e < 2.0 * g.h * (1.0 - 1e-12) {
            return Err(Error::KernelUnderResolved {
                eps: e,
                h: g.h,
                min: 2.0 * g.h,
            });
        }
    }
    let margin = (eps_max / g.h).ceil() as usize + 1;
    let eval = g.eroded(margin).map_err(|_| Error::ErodedToNothing { eps: eps_max })?;
    let pairer = DetHessianPairer::new(v)?;
    let mut pairs = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let stride = ((eps / (6.0 * g.h)).floor() as usize).max(1);
        let js: Vec<usize> = (0..eval.ny).step_by(stride).collect();
        let sup = js
            .par_iter()
            .map(|&j| {
                let mut m = 0.0f64;
                let mut i = 0;
                while i < eval.nx {
                    let center = eval.node(i, j);
                    let psi = TestFunction::normalized(center, eps);
                    let val = DetHessianPairer::quadrature(&pairer.density, &psi);
                    m = m.max(val.abs());
                    i += stride;
                }
                m
            })
            .reduce(|| 0.0, f64::max);
        pairs.push((eps, sup));
    }
    RateFit::fit(pairs)
}

/// Outcome of probing `Det D^2 v >= 0` against a family of nonnegative bumps.
///
/// This is a sound falsifier, not a prover: a negative pairing beyond the
/// witness tolerance certifies failure, while `nonnegative = true` only says
/// the finite probe family found nothing.
#[derive(Debug, Clone)]
pub struct NonnegativityReport {
    pub nonnegative: bool,
    pub min_pairing: f64,
    pub witness_center: [f64; 2],
    pub witness_radius: f64,
    pub tol: f64,
    pub probes_used: usize,
}

impl NonnegativityReport {
    pub fn to_json(&self) -> String {
        format!(
            "{{\"verdict\": \"{}\", \"min_pairing\": {}, \"witness_center\": [{}, {}], \"witness_radius\": {}, \"tol\": {}, \"probes_used\": {}}}",
            if self.nonnegative { "nonnegative" } else { "negative" },
            fmt_f64(self.min_pairing),
            fmt_f64(self.witness_center[0]),
            fmt_f64(self.witness_center[1]),
            fmt_f64(self.witness_radius),
            fmt_f64(self.tol),
            self.probes_used
        )
    }
}

/// Evaluate `Det D^2 v` against a deterministic family of nonnegative bumps
/// on `region`: dyadic radii from the largest that fits down to `4h`, centers
/// on a sub-lattice of spacing equal to the radius.
pub fn nonnegativity_check(
    v: &ScalarField2D,
    region: Rect,
    n_probes: usize,
) -> Result<NonnegativityReport> {
    if n_probes == 0 {
        return Err(Error::PreconditionFailed("need n_probes >= 1".into()));
    }
    let g = *v.grid();
    let pairer = DetHessianPairer::new(v)?;
    let interior = Rect::new(
        (region.x_min).max(g.x0 + g.h),
        (region.x_max).min(g.x_max() - g.h),
        (region.y_min).max(g.y0 + g.h),
        (region.y_max).min(g.y_max() - g.h),
    );
    let max_r = 0.5 * (interior.x_max - interior.x_min).min(interior.y_max - interior.y_min);
    if max_r < 4.0 * g.h {
        return Err(Error::PreconditionFailed(
            "region too small for the minimum probe radius 4h".into(),
        ));
    }
    let mut centers: Vec<([f64; 2], f64)> = Vec::new();
    let mut r = max_r;
    while r >= 4.0 * g.h && centers.len() < n_probes {
        let nx = (((interior.x_max - interior.x_min) - 2.0 * r) / r).floor() as usize + 1;
        let ny = (((interior.y_max - interior.y_min) - 2.0 * r) / r).floor() as usize + 1;
        let x_pad = ((interior.x_max - interior.x_min) - 2.0 * r - (nx - 1) as f64 * r) / 2.0;
        let y_pad = ((interior.y_max - interior.y_min) - 2.0 * r - (ny - 1) as f64 * r) / 2.0;
        for jj in 0..ny {
            for ii in 0..nx {
                if centers.len() >= n_probes {
                    break;
                }
                let c = [
                    interior.x_min + r + x_pad + ii as f64 * r,
                    interior.y_min + r + y_pad + jj as f64 * r,
                ];
                centers.push((c, r));
            }
        }
        r *= 0.5;
    }
    let results: Vec<(f64, f64, [f64; 2], f64)> = centers
        .par_iter()
        .map(|&(c, r)| {
            let bump = TestFunction::bump(c, r);
            let p = pairer.pair(&bump).expect("probe support is interior");
            (p.value, p.error_estimate, c, r)
        })
        .collect();
    let worst = results
        .iter()
        .cloned()
        .min_by(|a, b| a.0.partial_cmp(&b.0).expect("finite pairings"))
        .expect("at least one probe");
    let tol = worst.1.max(1e-12 * (1.0 + worst.0.abs()));
    Ok(NonnegativityReport {
        nonnegative: worst.0 >= -tol,
        min_pairing: worst.0,
        witness_center: worst.2,
        witness_radius: worst.3,
        tol,
        probes_used: results.len(),
    })
}

/// Dyadic mollification-consistency probe: `Det D^2 v_eps [phi]` along a
/// ladder, for Cauchy-style convergence checks.
pub fn mollified_pairing_ladder(
    v: &ScalarField2D,
    phi: &TestFunction,
    eps0: f64,
    rungs: usize,
) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(rungs);
    for eps in dyadic_ladder(eps0, rungs) {
        let v_eps = crate::mollifier::mollify(v, eps)?;
        let p = det_hessian_pairing(&v_eps, phi)?;
        out.push((eps, p.value));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::grid::Grid2D;
    use crate::generators::{generate, GeneratorKind, GeneratorSpec};

    fn quadratic_on(n: usize, half: f64) -> ScalarField2D {
        let g = Grid2D::centered_square(n, half).unwrap();
        ScalarField2D::sample(g, |x, y| 0.5 * (x * x + y * y)).unwrap()
    }

    #[test]
    fn identity_hessian_pairs_to_one() {
        let v = quadratic_on(129, 2.0);
        let phi = TestFunction::normalized([0.0, 0.0], 1.0);
        let p = det_hessian_pairing(&v, &phi).unwrap();
        assert!((p.value - 1.0).abs() < 1e-2, "value = {}", p.value);
        assert!(p.error_estimate < 1e-2);
    }

    #[test]
    fn saddle_pairs_to_minus_one() {
        let g = Grid2D::centered_square(129, 2.0).unwrap();
        let v = ScalarField2D::sample(g, |x, y| x * y).unwrap();
        let phi = TestFunction::normalized([0.0, 0.0], 1.0);
        let p = det_hessian_pairing(&v, &phi).unwrap();
        assert!((p.value + 1.0).abs() < 1e-2, "value = {}", p.value);
    }

    #[test]
    fn affine_pairs_to_zero() {
        let g = Grid2D::centered_square(65, 2.0).unwrap();
        let v = ScalarField2D::sample(g, |x, y| 0.3 - 2.0 * x + 7.0 * y).unwrap();
        let phi = TestFunction::normalized([0.1, -0.2], 1.1);
        let p = det_hessian_pairing(&v, &phi).unwrap();
        assert!(p.value.abs() < 1e-12, "value = {}", p.value);
    }

    #[test]
    fn support_at_boundary_is_rejected() {
        let v = quadratic_on(65, 1.0);
        let phi = TestFunction::normalized([0.5, 0.0], 0.6);
        assert!(matches!(
            det_hessian_pairing(&v, &phi),
            Err(Error::SupportOutsideGrid)
        ));
    }

    #[test]
    fn affine_shifts_leave_pairing_invariant() {
        let g = Grid2D::centered_square(97, 2.0).unwrap();
        let v = ScalarField2D::sample(g, |x, y| 0.5 * (x * x + y * y) + 0.2 * x * y).unwrap();
        let ell = ScalarField2D::sample(g, |x, y| 1.5 + 3.0 * x - 2.0 * y).unwrap();
        let phi = TestFunction::normalized([0.2, 0.1], 0.9);
        let a = det_hessian_pairing(&v, &phi).unwrap().value;
        let b = det_hessian_pairing(&v.add(&ell).unwrap(), &phi).unwrap().value;
        let scale = (3.0f64 * 3.0 + 2.0 * 2.0).max(1.0);
        assert!((a - b).abs() <= 1e-10 * scale, "gap = {}", (a - b).abs());
    }

    #[test]
    fn pairing_scales_quadratically() {
        let g = Grid2D::centered_square(65, 2.0).unwrap();
        let v = ScalarField2D::sample(g, |x, y| (x + 0.3 * y).sin() * y).unwrap();
        let phi = TestFunction::normalized([0.0, 0.0], 1.2);
        let p1 = det_hessian_pairing(&v, &phi).unwrap().value;
        let lam = 1.7;
        let p2 = det_hessian_pairing(&v.scale(lam).unwrap(), &phi).unwrap().value;
        assert!(
            (p2 - lam * lam * p1).abs() <= 1e-12 * p1.abs().max(1.0) * lam * lam,
            "{} vs {}",
            p2,
            lam * lam * p1
        );
    }

    /// Independent quadrature oracle for smooth v: int det(H v) phi dx by
    /// 2D Simpson on analytic formulas.
    fn smooth_oracle(
        det_hess: impl Fn(f64, f64) -> f64,
        phi: &TestFunction,
        n: usize,
    ) -> f64 {
        let s = phi.support();
        let hx = (s.x_max - s.x_min) / n as f64;
        let hy = (s.y_max - s.y_min) / n as f64;
        let w = |k: usize, n: usize| {
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
                sum += w(i, n) * w(j, n) * det_hess(x, y) * phi.value([x, y]);
            }
        }
        sum * hx * hy / 9.0
    }

    #[test]
    fn smooth_consistency_quartic_at_second_order() {
        // degree-4 polynomial with known Hessian determinant
        let q = 0.1;
        let det = move |x: f64, y: f64| (1.0 + 12.0 * q * x * x) * (1.0 + 12.0 * q * y * y);
        let phi = TestFunction::normalized([0.15, -0.1], 0.8);
        let oracle = smooth_oracle(det, &phi, 400);
        let mut errs = Vec::new();
        for n in [65usize, 129, 257] {
            let g = Grid2D::centered_square(n, 1.5).unwrap();
            let v = ScalarField2D::sample(g, |x, y| {
                0.5 * (x * x + y * y) + q * (x.powi(4) + y.powi(4))
            })
            .unwrap();
            let p = det_hessian_pairing(&v, &phi).unwrap();
            errs.push(((g.h).ln(), (p.value - oracle).abs().max(1e-15).ln()));
        }
        let slope = (errs[2].1 - errs[0].1) / (errs[2].0 - errs[0].0);
        assert!(slope > 1.8, "refinement order {slope}");
    }

    #[test]
    fn mollification_consistency_is_cauchy_for_rough_input() {
        let g = Grid2D::centered_square(513, 1.0).unwrap();
        let spec = GeneratorSpec {
            kind: GeneratorKind::Weierstrass {
                alpha: 0.8,
                levels: None,
                amplitude: 0.5,
                base: 4.0,
            },
            grid: g,
        };
        let (w, _) = generate(&spec).unwrap().into_scalar();
        let v = quadratic_on(513, 1.0).add(&w).unwrap();
        let phi = TestFunction::normalized([0.0, 0.0], 0.25);
        let ladder = mollified_pairing_ladder(&v, &phi, 0.16, 5).unwrap();
        let base = det_hessian_pairing(&v, &phi).unwrap().value;
        let gaps: Vec<f64> = ladder.iter().map(|&(_, p)| (p - base).abs()).collect();
        for w in gaps.windows(2) {
            assert!(
                w[1] <= w[0] * 1.05 + 1e-12,
                "gaps to unmollified pairing not decreasing: {gaps:?}"
            );
        }
    }

    #[test]
    fn besov_probe_constant_distribution_has_flat_rate() {
        let v = quadratic_on(257, 1.0);
        let fit = besov_decay_probe(&v, &dyadic_ladder(0.16, 4)).unwrap();
        assert!(fit.slope.abs() < 0.1, "slope = {}", fit.slope);
    }

    #[test]
    fn besov_probe_rough_inputs_meet_exponents() {
        for alpha in [0.8, 0.7] {
            // h = min_eps/8, the commutator resolution rule, with the window
            // anchored deep enough that the lacunary cross-term prefactor has
            // stabilized (the fitted exponent approaches 2 alpha - 2 from
            // below as the window descends)
            let ladder = dyadic_ladder(6.4e-5, 5);
            let h = ladder[4] / 8.0;
            let half = ladder[0] + 2e-4;
            let n = (2.0 * half / h).round() as usize + 1;
            let g = Grid2D::centered_square(n, half).unwrap();
            let spec = GeneratorSpec {
                kind: GeneratorKind::Weierstrass {
                    alpha,
                    levels: None,
                    amplitude: 1.0,
                    base: 4.0,
                },
                grid: g,
            };
            let (v, _) = generate(&spec).unwrap().into_scalar();
            let fit = besov_decay_probe(&v, &ladder).unwrap();
            let want = 2.0 * alpha - 2.0 - 0.1;
            assert!(
                fit.slope >= want,
                "alpha={alpha}: slope {} < {want}",
                fit.slope
            );
        }
    }

    #[test]
    fn nonnegativity_quadratic_passes_with_positive_mass() {
        let v = quadratic_on(129, 1.0);
        let r = nonnegativity_check(&v, Rect::new(-0.8, 0.8, -0.8, 0.8), 64).unwrap();
        assert!(r.nonnegative);
        let witness_mass = TestFunction::bump(r.witness_center, r.witness_radius).mass();
        assert!(
            (r.min_pairing - witness_mass).abs() < 0.05 * witness_mass,
            "min {} vs witness mass {}",
            r.min_pairing,
            witness_mass
        );
    }

    #[test]
    fn nonnegativity_saddle_fails_with_negative_mass() {
        let g = Grid2D::centered_square(129, 1.0).unwrap();
        let v = ScalarField2D::sample(g, |x, y| x * y).unwrap();
        let r = nonnegativity_check(&v, Rect::new(-0.8, 0.8, -0.8, 0.8), 64).unwrap();
        assert!(!r.nonnegative);
        let witness_mass = TestFunction::bump(r.witness_center, r.witness_radius).mass();
        assert!((r.min_pairing + witness_mass).abs() < 0.05 * witness_mass);
    }

    #[test]
    fn nonnegativity_smoothed_cone_passes() {
        // det Hessian = a^2/(|x|^2+a^2)^2 > 0, analytic oracle
        let a = 0.1f64;
        let g = Grid2D::centered_square(201, 1.0).unwrap();
        let v = ScalarField2D::sample(g, |x, y| (x * x + y * y + a * a).sqrt()).unwrap();
        let r = nonnegativity_check(&v, Rect::new(-0.7, 0.7, -0.7, 0.7), 200).unwrap();
        assert!(r.nonnegative, "min pairing {}", r.min_pairing);
    }
}
