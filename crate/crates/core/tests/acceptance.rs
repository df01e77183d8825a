//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::sync::Mutex;
use std::time::Instant;

/// Criteria run one at a time: each already saturates the cores through
/// rayon, and the timed fits must not share the machine.
static GATE: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(|e| e.into_inner())
}

use weakcurv::curvature::{
    graph_bridge_residual, invariance_residual, pullback_mollification_rates, AnalyticMetric,
};
use weakcurv::degree::{
    classify_point, degree_formula_residual, degree_mass_identity, gradient_degree_positivity,
    smoothed_indicator_mass, DomainU, PointClass, Shape,
};
use weakcurv::diffeo::Diffeo2D;
use weakcurv::fields::{Grid2D, Rect, ScalarField2D, TestFunction};
use weakcurv::generators::{generate, GeneratorKind, GeneratorSpec};
use weakcurv::mollifier::{commutator_rate, dyadic_ladder, mollify_sym, triple_commutator_rate};
use weakcurv::monge_ampere::{alexandrov_verify, spherical_image_tv};
use weakcurv::weak_hessian::{besov_decay_probe, det_hessian_pairing, DetHessianPairer};
use weakcurv::Error;

fn verdict(criterion: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion:>2} {name:<28} {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} {name}: {detail}");
}

fn quadratic_field(n: usize, half: f64) -> ScalarField2D {
    let g = Grid2D::centered_square(n, half).unwrap();
    ScalarField2D::sample(g, |x, y| 0.5 * (x * x + y * y)).unwrap()
}

fn cone_field(n: usize, half: f64, a: f64) -> ScalarField2D {
    let g = Grid2D::centered_square(n, half).unwrap();
    ScalarField2D::sample(g, |x, y| (x * x + y * y + a * a).sqrt()).unwrap()
}

fn weierstrass_field(grid: Grid2D, alpha: f64, levels: Option<u32>, amplitude: f64) -> ScalarField2D {
    generate(&GeneratorSpec {
        kind: GeneratorKind::Weierstrass {
            alpha,
            levels,
            amplitude,
            base: 4.0,
        },
        grid,
    })
    .unwrap()
    .into_scalar()
    .0
}

fn fit_order(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.max(1e-16).ln()).collect();
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|v| v * v).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(a, b)| a * b).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[test]
fn criterion_01_smooth_monge_ampere_consistency() {
    let _gate = serial();
    let t0 = Instant::now();
    let phi = TestFunction::normalized([0.0, 0.0], 1.0);
    let mut errs = Vec::new();
    let mut value_257 = 0.0;
    for n in [65usize, 129, 257] {
        let v = quadratic_field(n, 2.0);
        let p = det_hessian_pairing(&v, &phi).unwrap();
        errs.push((4.0 / (n - 1) as f64, (p.value - 1.0).abs()));
        if n == 257 {
            value_257 = p.value;
        }
    }
    let order = fit_order(&errs);
    let within = (value_257 - 1.0).abs() <= 0.01;
    let runtime = t0.elapsed().as_secs_f64();
    verdict(
        1,
        "smooth-MA-consistency",
        within && order >= 1.8 && runtime < 10.0,
        &format!(
            "pairing = {value_257:.6} (|err| <= 1%), refinement order {order:.2} >= 1.8, {runtime:.1}s < 10s"
        ),
    );
}

#[test]
fn criterion_02_degree_formula() {
    let _gate = serial();
    // quadratic at delta = 0
    let v = quadratic_field(257, 2.0);
    let phi = TestFunction::normalized([0.1, 0.0], 0.35);
    let rq = degree_formula_residual(&v, 0.0, &DomainU::disk([0.0, 0.0], 1.0), &phi).unwrap();
    let quad_ok = rq.residual <= 0.02 * rq.lhs.abs();

    // zero field at delta = 0.5
    let g = Grid2D::centered_square(257, 2.0).unwrap();
    let z = ScalarField2D::constant(g, 0.0).unwrap();
    let phi0 = TestFunction::normalized([0.0, 0.0], 0.3);
    let rz = degree_formula_residual(&z, 0.5, &DomainU::disk([0.0, 0.0], 1.0), &phi0).unwrap();
    let zero_ok = rz.residual <= 0.02 * rz.lhs.abs();

    // rough perturbation of the quadratic: residual decreasing, order >= 1;
    // the mollification pair is held fixed across refinement
    let mut rough = Vec::new();
    for n in [129usize, 257, 513] {
        let grid = Grid2D::centered_square(n, 2.0).unwrap();
        let w = weierstrass_field(grid, 0.8, Some(3), 0.3);
        let vr = quadratic_field(n, 2.0).add(&w).unwrap();
        let r = weakcurv::degree::degree_formula_residual_with_eps(
            &vr,
            0.1,
            &DomainU::disk([0.0, 0.0], 1.0),
            &phi,
            0.125,
            0.25,
        )
        .unwrap();
        rough.push((4.0 / (n - 1) as f64, r.residual));
    }
    let rough_order = fit_order(&rough);
    let decreasing = rough[2].1 < rough[0].1;
    verdict(
        2,
        "degree-formula",
        quad_ok && zero_ok && rough_order >= 1.0 && decreasing,
        &format!(
            "quadratic residual {:.2e} (<=2% of {:.3}), zero-case residual {:.2e} (<=2% of {:.3}), rough order {rough_order:.2} >= 1",
            rq.residual, rq.lhs, rz.residual, rz.lhs
        ),
    );
}

#[test]
fn criterion_03_mass_identity() {
    let _gate = serial();
    let v = quadratic_field(257, 2.0);
    let rq = degree_mass_identity(&v, &DomainU::disk([0.0, 0.0], 1.0)).unwrap();
    let pi = std::f64::consts::PI;
    let quad_ok = (rq.deg_integral - rq.mu_f).abs() <= 0.02 * rq.mu_f.abs();

    let a = 0.2;
    let vc = cone_field(257, 2.0, a);
    let rc = degree_mass_identity(&vc, &DomainU::disk([0.0, 0.0], 1.0)).unwrap();
    let reference = pi / (1.0 + a * a);
    let cone_ok = (rc.deg_integral - rc.mu_f).abs() <= 0.02 * rc.mu_f.abs()
        && (rc.deg_integral - reference).abs() <= 0.02 * reference
        && (rc.mu_f - reference).abs() <= 0.02 * reference
        && (reference - 3.0208).abs() < 1e-3;
    verdict(
        3,
        "mass-identity",
        quad_ok && cone_ok,
        &format!(
            "quadratic ({:.4}, {:.4}) ~ pi, cone ({:.4}, {:.4}) ~ {reference:.4}",
            rq.deg_integral, rq.mu_f, rc.deg_integral, rc.mu_f
        ),
    );
}

#[test]
fn criterion_04_degree_positivity() {
    let _gate = serial();
    let domain = DomainU::disk([0.0, 0.0], 1.0);
    let mut total_checked = 0;
    let mut total_violations = 0;
    for (name, v) in [
        ("quadratic", quadratic_field(257, 2.0)),
        ("smoothed-cone", cone_field(257, 2.0, 0.2)),
        ("quartic", {
            let g = Grid2D::centered_square(257, 2.0).unwrap();
            ScalarField2D::sample(g, |x, y| {
                0.5 * (x * x + y * y) + 0.05 * (x.powi(4) + y.powi(4))
            })
            .unwrap()
        }),
    ] {
        let rep = gradient_degree_positivity(&v, &domain, 18).unwrap();
        assert!(rep.checked >= 200, "{name}: only {} checked", rep.checked);
        total_checked += rep.checked;
        total_violations += rep.violations;
    }
    verdict(
        4,
        "degree-positivity",
        total_violations == 0 && total_checked >= 600,
        &format!("{total_checked} interior samples across 3 instances, {total_violations} violations"),
    );
}

#[test]
fn criterion_05_point_classification() {
    let _gate = serial();
    let radii = [0.4, 0.2, 0.1, 0.05];
    let g = Grid2D::centered_square(257, 1.0).unwrap();
    let cases: [(&str, ScalarField2D, PointClass, i32); 3] = [
        (
            "quadratic",
            ScalarField2D::sample(g, |x, y| 0.5 * (x * x + y * y)).unwrap(),
            PointClass::Elliptic,
            1,
        ),
        (
            "saddle",
            ScalarField2D::sample(g, |x, y| x * y).unwrap(),
            PointClass::Hyperbolic,
            -1,
        ),
        (
            "monkey-saddle",
            ScalarField2D::sample(g, |x, y| x * x * x - 3.0 * x * y * y).unwrap(),
            PointClass::Flat,
            -2,
        ),
    ];
    let mut all = true;
    let mut detail = String::new();
    for (name, v, class, idx) in cases {
        let c = classify_point(&v, [0.0, 0.0], &radii).unwrap();
        let ok = c.class == class && c.index == Some(idx) && c.radius.is_some();
        all &= ok;
        detail.push_str(&format!("{name}:{:?} ", c.index.unwrap_or(99)));
    }
    verdict(5, "point-classification", all, detail.trim());
}

#[test]
fn criterion_06_commutator_rates() {
    let _gate = serial();
    let ladder = dyadic_ladder(0.04, 5);
    let h = ladder[4] / 8.0;
    let n = (0.2 / h).round() as usize + 1;
    let grid = Grid2D::centered_square(n, 0.1).unwrap();
    let mut all = true;
    let mut detail = String::new();
    for alpha in [0.7f64, 0.8] {
        let (field, meta) = generate(&GeneratorSpec {
            kind: GeneratorKind::Weierstrass {
                alpha,
                levels: None,
                amplitude: 1.0,
                base: 4.0,
            },
            grid,
        })
        .unwrap()
        .into_scalar();
        let _ = field;
        let grad = meta.gradient.unwrap();
        let a = ScalarField2D::sample(grid, |x, y| grad(x, y)[0]).unwrap();
        for j in [0usize, 1] {
            let t0 = Instant::now();
            let fit = commutator_rate(&a, &a, j, &ladder).unwrap();
            let secs = t0.elapsed().as_secs_f64();
            let want = 2.0 * alpha - j as f64 - 0.1;
            let ok = fit.slope >= want && secs < 60.0;
            all &= ok;
            detail.push_str(&format!("a{alpha} j{j}:{:.2}>={want:.2}({secs:.0}s) ", fit.slope));
        }
        let t0 = Instant::now();
        let fit = triple_commutator_rate(&a, &a, &a, &ladder).unwrap();
        let secs = t0.elapsed().as_secs_f64();
        let want = 2.0 * alpha - 1.0 - 0.1;
        let ok = fit.slope >= want && secs < 60.0;
        all &= ok;
        detail.push_str(&format!("triple:{:.2}>={want:.2} ", fit.slope));
    }
    verdict(6, "commutator-rates", all, detail.trim());
}

#[test]
fn criterion_07_besov_decay() {
    let _gate = serial();
    // same generator inputs; ladder anchored deep enough that the lacunary
    // cross-term prefactor has stabilized, with the h = min_eps/8 rule
    let ladder = dyadic_ladder(6.4e-5, 5);
    let h = ladder[4] / 8.0;
    let half = ladder[0] + 2e-4;
    let n = (2.0 * half / h).round() as usize + 1;
    let grid = Grid2D::centered_square(n, half).unwrap();
    let mut all = true;
    let mut detail = String::new();
    for alpha in [0.7f64, 0.8] {
        let v = weierstrass_field(grid, alpha, None, 1.0);
        let fit = besov_decay_probe(&v, &ladder).unwrap();
        let want = 2.0 * alpha - 2.0 - 0.1;
        let ok = fit.slope >= want;
        all &= ok;
        detail.push_str(&format!("alpha={alpha}: {:.3} >= {want:.2}  ", fit.slope));
    }
    verdict(7, "besov-decay", all, detail.trim());
}

#[test]
fn criterion_08_coordinate_invariance() {
    let _gate = serial();
    let g = AnalyticMetric::sphere_graph(2.0);
    let phi = TestFunction::normalized([0.0, 0.0], 0.4);
    let grid = Grid2D::centered_square(129, 0.8).unwrap();
    let rid = invariance_residual(&g, &Diffeo2D::identity(), &phi, grid, grid).unwrap();
    let rrot = invariance_residual(
        &g,
        &Diffeo2D::rotation(std::f64::consts::FRAC_PI_2),
        &phi,
        grid,
        grid,
    )
    .unwrap();
    let exact_ok = rid.residual <= 1e-10 && rrot.residual <= 1e-10;

    let xi = Diffeo2D::linear_shear(0.2);
    let phi_s = TestFunction::normalized([0.0, 0.0], 0.3);
    let mut res = Vec::new();
    for n in [65usize, 129, 257] {
        let gr = Grid2D::centered_square(n, 0.7).unwrap();
        let r = invariance_residual(&g, &xi, &phi_s, gr, gr).unwrap();
        res.push((1.4 / (n - 1) as f64, r.residual));
    }
    let order = fit_order(&res);
    verdict(
        8,
        "coordinate-invariance",
        exact_ok && order >= 1.0,
        &format!(
            "identity {:.1e}, quarter-rotation {:.1e} (<= 1e-10), shear order {order:.2} >= 1",
            rid.residual, rrot.residual
        ),
    );
}

#[test]
fn criterion_09_graph_bridge() {
    let _gate = serial();
    // sphere cap: refinement order >= 1 and smooth-oracle agreement
    let r = 2.0f64;
    let phi = TestFunction::normalized([0.0, 0.0], 0.4);
    let mut sphere = Vec::new();
    let mut last = None;
    for n in [65usize, 129, 257] {
        let g = Grid2D::centered_square(n, 0.8).unwrap();
        let v = ScalarField2D::sample(g, |x, y| (r * r - x * x - y * y).sqrt()).unwrap();
        let out = graph_bridge_residual(&v, &phi).unwrap();
        sphere.push((1.6 / (n - 1) as f64, out.residual));
        last = Some(out);
    }
    let sphere_order = fit_order(&sphere);
    let out = last.unwrap();
    // kappa of the sphere is exactly 1/R^2 = 0.25 against unit-mass phi
    let oracle = 0.25;
    let oracle_ok =
        (out.lhs - oracle).abs() <= 0.02 * oracle && (out.rhs - oracle).abs() <= 0.02 * oracle;

    let mut rough = Vec::new();
    for n in [129usize, 257, 513] {
        let g = Grid2D::centered_square(n, 0.8).unwrap();
        let w = weierstrass_field(g, 0.8, Some(3), 0.3);
        let v = quadratic_field(n, 0.8).add(&w).unwrap();
        let out = graph_bridge_residual(&v, &phi).unwrap();
        rough.push((1.6 / (n - 1) as f64, out.residual));
    }
    let rough_order = fit_order(&rough);
    verdict(
        9,
        "graph-bridge",
        sphere_order >= 1.0 && rough_order >= 1.0 && oracle_ok,
        &format!(
            "sphere order {sphere_order:.2}, sides ({:.4}, {:.4}) ~ {oracle}, rough order {rough_order:.2}",
            out.lhs, out.rhs
        ),
    );
}

#[test]
fn criterion_10_pullback_mollification() {
    let _gate = serial();
    let alpha = 0.8;
    let ladder = dyadic_ladder(0.04, 5);
    let h = ladder[4] / 8.0;
    let n = (0.2 / h).round() as usize + 1;
    let grid = Grid2D::centered_square(n, 0.1).unwrap();
    let xi = generate(&GeneratorSpec {
        kind: GeneratorKind::DiffeoRough {
            alpha,
            amplitude: 0.25,
            levels: None,
        },
        grid,
    })
    .unwrap()
    .into_diffeo();
    let g = AnalyticMetric::sphere_graph(3.0);
    let (j0, j1) = pullback_mollification_rates(&g, &xi, grid, [0.0, 0.0], &ladder).unwrap();
    let want0 = alpha - 0.1;
    let want1 = 2.0 * alpha - 1.0 - 0.1;

    // det g'_eps >= 1/2 across generator inputs and the ladder
    let det_ladder = dyadic_ladder(0.25, 4);
    let mut min_det = f64::INFINITY;
    for v in [
        quadratic_field(257, 1.0),
        cone_field(257, 1.0, 0.2),
        {
            let gg = Grid2D::centered_square(257, 1.0).unwrap();
            let w = weierstrass_field(gg, 0.8, None, 0.5);
            quadratic_field(257, 1.0).add(&w).unwrap()
        },
    ] {
        let gm = weakcurv::curvature::graph_metric(&v);
        for &eps in &det_ladder {
            let me = mollify_sym(&gm, eps).unwrap();
            min_det = min_det.min(me.min_det());
        }
    }
    verdict(
        10,
        "pullback-mollification",
        j0.slope >= want0 && j1.slope >= want1 && min_det >= 0.5,
        &format!(
            "j0 {:.2} >= {want0:.2}, j1 {:.2} >= {want1:.2}, min det g'_eps {min_det:.3} >= 0.5",
            j0.slope, j1.slope
        ),
    );
}

#[test]
fn criterion_11_alexandrov_suite() {
    let _gate = serial();
    let domains: Vec<DomainU> = [1.0, 2.0, 4.0]
        .iter()
        .map(|&r| DomainU::disk([0.0, 0.0], r))
        .collect();
    let mut all = true;
    let mut detail = String::new();
    for (name, v) in [
        ("quadratic", quadratic_field(385, 6.0)),
        ("smoothed-cone", cone_field(385, 6.0, 0.2)),
    ] {
        let rep = alexandrov_verify(&v, &domains).unwrap();
        all &= rep.pass && !rep.sign_flipped;
        let worst = rep
            .entries
            .iter()
            .map(|e| e.max_pairwise_gap)
            .fold(0.0f64, f64::max);
        detail.push_str(&format!("{name}: worst gap {:.1}% ", worst * 100.0));
    }

    // sign-flip path
    let g = Grid2D::centered_square(257, 2.0).unwrap();
    let neg = ScalarField2D::sample(g, |x, y| -0.5 * (x * x + y * y)).unwrap();
    let rep = alexandrov_verify(&neg, &[DomainU::disk([0.0, 0.0], 1.0)]).unwrap();
    all &= rep.sign_flipped && rep.pass;
    detail.push_str("flip:ok ");

    // saddle instances rejected at preconditions
    let saddle = ScalarField2D::sample(g, |x, y| x * y).unwrap();
    let rejected = matches!(
        alexandrov_verify(&saddle, &[DomainU::disk([0.0, 0.0], 1.0)]),
        Err(Error::PreconditionFailed(_))
    );
    let monkey = ScalarField2D::sample(g, |x, y| x * x * x - 3.0 * x * y * y).unwrap();
    let rejected2 = matches!(
        alexandrov_verify(&monkey, &[DomainU::disk([0.0, 0.0], 1.0)]),
        Err(Error::PreconditionFailed(_))
    );
    all &= rejected && rejected2;
    detail.push_str("saddles:rejected");
    verdict(11, "alexandrov-suite", all, &detail);
}

#[test]
fn criterion_12_extrinsic_tv() {
    let _gate = serial();
    let parts = [
        Shape::Rect(Rect::new(-0.9, -0.1, -0.9, -0.1)),
        Shape::Rect(Rect::new(0.1, 0.9, -0.9, -0.1)),
        Shape::Rect(Rect::new(-0.9, -0.1, 0.1, 0.9)),
        Shape::Rect(Rect::new(0.1, 0.9, 0.1, 0.9)),
    ];
    let omega = Shape::Rect(Rect::new(-1.0, 1.0, -1.0, 1.0));
    let mut all = true;
    let mut detail = String::new();
    for (name, v) in [
        ("quadratic", quadratic_field(257, 2.0)),
        ("smoothed-cone", cone_field(257, 2.0, 0.2)),
        ("quartic", {
            let g = Grid2D::centered_square(257, 2.0).unwrap();
            ScalarField2D::sample(g, |x, y| {
                0.5 * (x * x + y * y) + 0.05 * (x.powi(4) + y.powi(4))
            })
            .unwrap()
        }),
    ] {
        let tv = spherical_image_tv(&v, &parts, 0.004).unwrap();
        let pairer = DetHessianPairer::new(&v).unwrap();
        let mu = smoothed_indicator_mass(&pairer, &omega).unwrap();
        let ok = tv.total <= mu * 1.03;
        all &= ok;
        detail.push_str(&format!("{name}: {:.4} <= 1.03 x {:.4}  ", tv.total, mu));
    }

    // spherical-cap oracle
    let r = 2.0f64;
    let r0 = 0.5f64;
    let g = Grid2D::centered_square(257, 0.8).unwrap();
    let cap = ScalarField2D::sample(g, |x, y| (r * r - x * x - y * y).sqrt()).unwrap();
    let oracle = 2.0 * std::f64::consts::PI * (1.0 - (1.0 - (r0 / r).powi(2)).sqrt());
    let tv = spherical_image_tv(
        &cap,
        &[Shape::Disk {
            center: [0.0, 0.0],
            radius: r0,
        }],
        0.002,
    )
    .unwrap();
    let cap_ok = (tv.total - oracle).abs() <= 0.03 * oracle;
    all &= cap_ok;
    detail.push_str(&format!("cap {:.5} ~ {oracle:.5}", tv.total));
    verdict(12, "extrinsic-tv", all, &detail);
}
