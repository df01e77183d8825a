//! Verification suites and rate studies behind `weakcurv verify` / `rates`.
//!
//! Each suite assembles a deterministic report, prints one line per check,
//! and fails the process when any check fails. Tolerances and grids are
//! echoed into the report for auditability.

use std::collections::HashMap;
use std::path::Path;

use anyhow::{bail, Result};

use weakcurv::curvature::{graph_bridge_residual, invariance_residual, AnalyticMetric};
use weakcurv::degree::{
    degree_formula_residual, degree_mass_identity, smoothed_indicator_mass, DomainU, Shape,
};
use weakcurv::diffeo::Diffeo2D;
use weakcurv::fields::io::fmt_f64;
use weakcurv::fields::Rect;
use weakcurv::mollifier::{commutator_rate, triple_commutator_rate, RateFit};
use weakcurv::monge_ampere::{alexandrov_verify, spherical_image_tv};
use weakcurv::weak_hessian::{besov_decay_probe, DetHessianPairer};
use weakcurv::{
    dyadic_ladder, generate, Generated, GeneratorKind, GeneratorSpec, Grid2D, ScalarField2D,
    TestFunction,
};

use crate::report::{Check, SuiteReport};

fn tol(tols: &HashMap<String, f64>, name: &str, default: f64) -> f64 {
    tols.get(name).copied().unwrap_or(default)
}

fn grid_desc(g: &Grid2D) -> String {
    format!("{}x{} [{}, {}] h={}", g.nx, g.ny, g.x0, g.y0, fmt_f64(g.h))
}

fn quadratic(grid: Grid2D) -> ScalarField2D {
    ScalarField2D::sample(grid, |x, y| 0.5 * (x * x + y * y)).expect("finite")
}

fn scalar_from_spec(spec: &GeneratorSpec) -> Result<ScalarField2D> {
    match generate(spec)? {
        Generated::Scalar { field, .. } => Ok(field),
        Generated::Diffeo(_) => bail!("suite needs a scalar generator, got a diffeomorphism"),
    }
}

fn weierstrass_dx(grid: Grid2D, alpha: f64) -> Result<ScalarField2D> {
    let spec = GeneratorSpec {
        kind: GeneratorKind::Weierstrass {
            alpha,
            levels: None,
            amplitude: 1.0,
            base: 4.0,
        },
        grid,
    };
    match generate(&spec)? {
        Generated::Scalar { meta, .. } => {
            let grad = meta.gradient.expect("weierstrass has exact gradients");
            Ok(ScalarField2D::sample(grid, |x, y| grad(x, y)[0])?)
        }
        Generated::Diffeo(_) => unreachable!(),
    }
}

fn rate_files(out: &Path, name: &str, fit: &RateFit) -> Result<()> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join(format!("{name}.csv")), fit.to_csv())?;
    std::fs::write(
        out.join(format!("{name}_summary.json")),
        format!("{}\n", fit.summary_json()),
    )?;
    Ok(())
}

pub fn run_rates(
    which: &str,
    alpha: f64,
    j: usize,
    eps: Option<Vec<f64>>,
    out: &Path,
) -> Result<bool> {
    match which {
        "commutator" | "triple" => {
            let ladder = eps.unwrap_or_else(|| dyadic_ladder(0.04, 5));
            let h = ladder[ladder.len() - 1] / 8.0;
            let n = (0.2 / h).round() as usize + 1;
            let grid = Grid2D::centered_square(n, 0.1)?;
            let a = weierstrass_dx(grid, alpha)?;
            let (fit, want, name) = if which == "commutator" {
                let fit = commutator_rate(&a, &a, j, &ladder)?;
                (fit, 2.0 * alpha - j as f64 - 0.1, format!("commutator_a{alpha}_j{j}"))
            } else {
                let fit = triple_commutator_rate(&a, &a, &a, &ladder)?;
                (fit, 2.0 * alpha - 1.0 - 0.1, format!("triple_a{alpha}"))
            };
            rate_files(out, &name, &fit)?;
            let pass = fit.slope >= want;
            println!(
                "[{}] {name}: slope {} (target >= {})",
                if pass { "PASS" } else { "FAIL" },
                fmt_f64(fit.slope),
                fmt_f64(want)
            );
            if !pass {
                println!("failing report: {}", out.join(format!("{name}_summary.json")).display());
            }
            Ok(pass)
        }
        "besov" => {
            let ladder = eps.unwrap_or_else(|| dyadic_ladder(6.4e-5, 5));
            let h = ladder[ladder.len() - 1] / 8.0;
            let half = ladder[0] + 2e-4;
            let n = (2.0 * half / h).round() as usize + 1;
            let grid = Grid2D::centered_square(n, half)?;
            let spec = GeneratorSpec {
                kind: GeneratorKind::Weierstrass {
                    alpha,
                    levels: None,
                    amplitude: 1.0,
                    base: 4.0,
                },
                grid,
            };
            let v = scalar_from_spec(&spec)?;
            let fit = besov_decay_probe(&v, &ladder)?;
            let want = 2.0 * alpha - 2.0 - 0.1;
            let name = format!("besov_a{alpha}");
            rate_files(out, &name, &fit)?;
            let pass = fit.slope >= want;
            println!(
                "[{}] {name}: slope {} (target >= {})",
                if pass { "PASS" } else { "FAIL" },
                fmt_f64(fit.slope),
                fmt_f64(want)
            );
            Ok(pass)
        }
        "mollify" => {
            // smooth-field mollification error, second order expected
            let grid = Grid2D::centered_square(257, 1.0)?;
            let f = ScalarField2D::sample(grid, |x, _| x.sin())?;
            let ladder = eps.unwrap_or_else(|| dyadic_ladder(0.25, 4));
            let mut pairs = Vec::new();
            for &e in &ladder {
                let fe = weakcurv::mollify(&f, e)?;
                let og = *fe.grid();
                let mut err: f64 = 0.0;
                for jj in 0..og.ny {
                    for ii in 0..og.nx {
                        err = err.max((fe.at(ii, jj) - og.x(ii).sin()).abs());
                    }
                }
                pairs.push((e, err));
            }
            let fit = RateFit::fit(pairs)?;
            rate_files(out, "mollify_smooth", &fit)?;
            let pass = fit.slope >= 1.8;
            println!(
                "[{}] mollify_smooth: slope {} (target >= 1.8)",
                if pass { "PASS" } else { "FAIL" },
                fmt_f64(fit.slope)
            );
            Ok(pass)
        }
        other => bail!("unknown rates study {other:?} (commutator|triple|besov|mollify)"),
    }
}

pub fn run_verify(
    suite: &str,
    spec: Option<GeneratorSpec>,
    grid: Option<Grid2D>,
    eps: Option<Vec<f64>>,
    tols: HashMap<String, f64>,
    out: &Path,
) -> Result<bool> {
    let mut report = SuiteReport::new(suite);
    for (k, v) in &tols {
        report.config_value(&format!("tol.{k}"), fmt_f64(*v));
    }
    match suite {
        "degree-formula" => {
            let grid = grid.unwrap_or(Grid2D::centered_square(257, 2.0)?);
            report.config_value("grid", grid_desc(&grid));
            let rel = tol(&tols, "residual", 0.02);
            let domain = DomainU::disk([0.0, 0.0], 1.0);

            let v = match &spec {
                Some(s) => scalar_from_spec(s)?,
                None => quadratic(grid),
            };
            let phi = TestFunction::normalized([0.1, 0.0], 0.35);
            let r = degree_formula_residual(&v, 0.0, &domain, &phi)?;
            report.push(
                Check::new(
                    "identity-gradient-delta0",
                    r.residual <= rel * r.lhs.abs(),
                    format!("residual {:.3e} vs lhs {:.4}", r.residual, r.lhs),
                )
                .with("lhs", r.lhs)
                .with("rhs", r.rhs)
                .with("residual", r.residual),
            );

            let z = ScalarField2D::constant(grid, 0.0)?;
            let phi0 = TestFunction::normalized([0.0, 0.0], 0.3);
            let rz = degree_formula_residual(&z, 0.5, &domain, &phi0)?;
            report.push(
                Check::new(
                    "zero-hessian-delta0.5",
                    rz.residual <= rel * rz.lhs.abs(),
                    format!("residual {:.3e} vs lhs {:.4}", rz.residual, rz.lhs),
                )
                .with("lhs", rz.lhs)
                .with("rhs", rz.rhs)
                .with("residual", rz.residual),
            );
        }
        "mass-identity" => {
            let grid = grid.unwrap_or(Grid2D::centered_square(257, 2.0)?);
            report.config_value("grid", grid_desc(&grid));
            let rel = tol(&tols, "gap", 0.02);
            let domain = DomainU::disk([0.0, 0.0], 1.0);
            let cases: Vec<(String, ScalarField2D)> = match &spec {
                Some(s) => vec![("spec".to_string(), scalar_from_spec(s)?)],
                None => vec![
                    ("quadratic".to_string(), quadratic(grid)),
                    (
                        "smoothed-cone".to_string(),
                        ScalarField2D::sample(grid, |x, y| (x * x + y * y + 0.04).sqrt())?,
                    ),
                ],
            };
            for (name, v) in cases {
                let r = degree_mass_identity(&v, &domain)?;
                let scale = r.mu_f.abs().max(1e-9);
                report.push(
                    Check::new(
                        &format!("mass-identity-{name}"),
                        r.gap <= rel * scale,
                        format!("deg {:.5} vs mu {:.5}", r.deg_integral, r.mu_f),
                    )
                    .with("deg_integral", r.deg_integral)
                    .with("mu_f", r.mu_f)
                    .with("gap", r.gap),
                );
            }
        }
        "invariance" => {
            let g = AnalyticMetric::sphere_graph(2.0);
            let phi = TestFunction::normalized([0.0, 0.0], 0.4);
            let base = grid.unwrap_or(Grid2D::centered_square(129, 0.8)?);
            report.config_value("grid", grid_desc(&base));
            let exact_tol = tol(&tols, "exact", 1e-10);
            let rid = invariance_residual(&g, &Diffeo2D::identity(), &phi, base, base)?;
            report.push(
                Check::new(
                    "identity-diffeo",
                    rid.residual <= exact_tol,
                    format!("residual {:.2e}", rid.residual),
                )
                .with("residual", rid.residual),
            );
            let rrot = invariance_residual(
                &g,
                &Diffeo2D::rotation(std::f64::consts::FRAC_PI_2),
                &phi,
                base,
                base,
            )?;
            report.push(
                Check::new(
                    "quarter-rotation",
                    rrot.residual <= exact_tol,
                    format!("residual {:.2e}", rrot.residual),
                )
                .with("residual", rrot.residual),
            );
            let xi = Diffeo2D::linear_shear(0.2);
            let phi_s = TestFunction::normalized([0.0, 0.0], 0.3);
            let mut res = Vec::new();
            for n in [65usize, 129, 257] {
                let gr = Grid2D::centered_square(n, 0.7)?;
                let r = invariance_residual(&g, &xi, &phi_s, gr, gr)?;
                res.push((1.4 / (n - 1) as f64, r.residual));
            }
            let order = (res[0].1.max(1e-16) / res[2].1.max(1e-16)).ln()
                / (res[0].0 / res[2].0).ln();
            report.push(
                Check::new(
                    "shear-refinement-order",
                    order >= tol(&tols, "order", 1.0),
                    format!("order {order:.2}"),
                )
                .with("order", order),
            );
        }
        "graph-bridge" => {
            let r = 2.0f64;
            let phi = TestFunction::normalized([0.0, 0.0], 0.4);
            let mut residuals = Vec::new();
            let mut last = None;
            for n in [65usize, 129, 257] {
                let g = Grid2D::centered_square(n, 0.8)?;
                let v = match &spec {
                    Some(s) => {
                        let mut s2 = s.clone();
                        s2.grid = g;
                        scalar_from_spec(&s2)?
                    }
                    None => ScalarField2D::sample(g, |x, y| (r * r - x * x - y * y).sqrt())?,
                };
                let o = graph_bridge_residual(&v, &phi)?;
                residuals.push((1.6 / (n - 1) as f64, o.residual));
                last = Some(o);
            }
            let order = (residuals[0].1.max(1e-16) / residuals[2].1.max(1e-16)).ln()
                / (residuals[0].0 / residuals[2].0).ln();
            report.push(
                Check::new(
                    "refinement-order",
                    order >= tol(&tols, "order", 1.0),
                    format!("order {order:.2}"),
                )
                .with("order", order),
            );
            if spec.is_none() {
                let o = last.expect("three levels ran");
                let oracle = 0.25;
                let rel = tol(&tols, "oracle", 0.02);
                report.push(
                    Check::new(
                        "smooth-oracle",
                        (o.lhs - oracle).abs() <= rel * oracle
                            && (o.rhs - oracle).abs() <= rel * oracle,
                        format!("sides ({:.4}, {:.4}) vs {oracle}", o.lhs, o.rhs),
                    )
                    .with("lhs", o.lhs)
                    .with("rhs", o.rhs),
                );
            }
        }
        "commutators" => {
            let ladder = eps.unwrap_or_else(|| dyadic_ladder(0.04, 5));
            report.config_value("ladder", format!("{ladder:?}"));
            let h = ladder[ladder.len() - 1] / 8.0;
            let n = (0.2 / h).round() as usize + 1;
            let grid = Grid2D::centered_square(n, 0.1)?;
            report.config_value("grid", grid_desc(&grid));
            for alpha in [0.7f64, 0.8] {
                let a = weierstrass_dx(grid, alpha)?;
                for j in [0usize, 1] {
                    let fit = commutator_rate(&a, &a, j, &ladder)?;
                    let want = 2.0 * alpha - j as f64 - 0.1 + tol(&tols, "slack", 0.0);
                    report.push(
                        Check::new(
                            &format!("commutator-a{alpha}-j{j}"),
                            fit.slope >= want,
                            format!("slope {:.3} >= {want:.2}", fit.slope),
                        )
                        .with("slope", fit.slope)
                        .with("residual", fit.residual),
                    );
                }
                let fit = triple_commutator_rate(&a, &a, &a, &ladder)?;
                let want = 2.0 * alpha - 1.0 - 0.1 + tol(&tols, "slack", 0.0);
                report.push(
                    Check::new(
                        &format!("triple-a{alpha}"),
                        fit.slope >= want,
                        format!("slope {:.3} >= {want:.2}", fit.slope),
                    )
                    .with("slope", fit.slope),
                );
            }
        }
        "alexandrov" => {
            let grid = grid.unwrap_or(Grid2D::centered_square(257, 2.0)?);
            report.config_value("grid", grid_desc(&grid));
            let v = match &spec {
                Some(s) => scalar_from_spec(s)?,
                None => quadratic(grid),
            };
            let domain = DomainU::disk([0.0, 0.0], 1.0);
            let rep = alexandrov_verify(&v, &[domain])?;
            for e in &rep.entries {
                report.push(
                    Check::new(
                        "triple-agreement",
                        e.pass,
                        format!(
                            "area {:.5}, deg {:.5}, mu {:.5} (gap {:.2}%)",
                            e.image_area,
                            e.degree_integral,
                            e.mu_f,
                            e.max_pairwise_gap * 100.0
                        ),
                    )
                    .with("image_area", e.image_area)
                    .with("degree_integral", e.degree_integral)
                    .with("mu_f", e.mu_f),
                );
            }
            report.config_value("sign_flipped", rep.sign_flipped.to_string());
        }
        "extrinsic-tv" => {
            let grid = grid.unwrap_or(Grid2D::centered_square(257, 2.0)?);
            report.config_value("grid", grid_desc(&grid));
            let v = match &spec {
                Some(s) => scalar_from_spec(s)?,
                None => quadratic(grid),
            };
            let parts = [
                Shape::Rect(Rect::new(-0.9, -0.1, -0.9, -0.1)),
                Shape::Rect(Rect::new(0.1, 0.9, -0.9, -0.1)),
                Shape::Rect(Rect::new(-0.9, -0.1, 0.1, 0.9)),
                Shape::Rect(Rect::new(0.1, 0.9, 0.1, 0.9)),
            ];
            let tv = spherical_image_tv(&v, &parts, 0.004)?;
            let pairer = DetHessianPairer::new(&v)?;
            let mu = smoothed_indicator_mass(
                &pairer,
                &Shape::Rect(Rect::new(-1.0, 1.0, -1.0, 1.0)),
            )?;
            let slack = tol(&tols, "slack", 0.03);
            report.push(
                Check::new(
                    "partition-tv-bound",
                    tv.total <= mu * (1.0 + slack),
                    format!("sum H2 {:.5} <= {:.5}", tv.total, mu * (1.0 + slack)),
                )
                .with("total_tv", tv.total)
                .with("mu_f", mu),
            );
        }
        other => bail!(
            "unknown suite {other:?} (degree-formula|mass-identity|invariance|graph-bridge|commutators|alexandrov|extrinsic-tv)"
        ),
    }
    let (pass, path) = report.finish(out)?;
    if !pass {
        println!("failing report: {}", path.display());
    }
    Ok(pass)
}
