//! Command-line driver: generation, pairings, degree queries, rate studies,
//! and the composite verification suites.
//!
//! Exit codes: 0 when all checks in scope pass, 1 on a check failure (the
//! failing report path is printed), 2 on usage errors.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

mod report;
mod suites;
mod util;

use util::{parse_domain, parse_eps, parse_grid, parse_phi, parse_tols};

#[derive(Parser)]
#[command(
    name = "weakcurv",
    about = "Distributional-geometry verification toolkit on 2D grids",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic field or diffeomorphism from a JSON spec.
    Generate {
        /// Generator spec JSON file (kind + parameters + grid).
        #[arg(long)]
        spec: PathBuf,
        /// Output directory for GRID2D files and metadata.
        #[arg(long, default_value = "weakcurv_out")]
        out: PathBuf,
        /// Base name for the generated files.
        #[arg(long, default_value = "field")]
        name: String,
    },
    /// Pair the very weak Hessian determinant of a field with a bump.
    Hessdet {
        /// Field in GRID2D v1 format.
        #[arg(long)]
        v: PathBuf,
        /// Test bump `cx,cy,r`, normalized to unit mass.
        #[arg(long)]
        phi: String,
        /// Keep the raw amplitude-1 bump instead of unit mass.
        #[arg(long)]
        unnormalized: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pair the distributional Gaussian curvature of a metric with a bump.
    Curvature {
        /// Metric bundle manifest (three GRID2D files + lambda).
        #[arg(long, conflicts_with = "graph")]
        bundle: Option<PathBuf>,
        /// Build the graph metric of this scalar field instead.
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Test bump `cx,cy,r`, normalized to unit mass.
        #[arg(long)]
        phi: String,
        #[arg(long)]
        unnormalized: bool,
        /// Save the metric under test as a GRID2D bundle in --out.
        #[arg(long)]
        save_bundle: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Brouwer degree of a gradient map at a target point.
    Degree {
        /// Field in GRID2D v1 format; the map is grad v (plus delta rotation).
        #[arg(long)]
        v: PathBuf,
        /// Domain: `disk:cx,cy,r` or `rect:x0,x1,y0,y1`.
        #[arg(long = "U")]
        domain: String,
        /// Target point `y1,y2`.
        #[arg(long, required_unless_present = "map_grid")]
        y: Option<String>,
        /// Rotational perturbation delta of u^delta.
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        /// Evaluate a whole degree map on this target grid `nx,ny,x0,y0,h`
        /// and write it (plus the exclusion mask) in GRID2D format.
        #[arg(long)]
        map_grid: Option<String>,
        #[arg(long, default_value = "weakcurv_out")]
        out: PathBuf,
    },
    /// Monge-Ampère measure of a domain by gradient-image rasterization.
    Measure {
        #[arg(long)]
        v: PathBuf,
        #[arg(long = "U")]
        domain: String,
        /// Target-space pixel size (default: image diameter / 600).
        #[arg(long)]
        raster: Option<f64>,
        /// Also write the covered-pixel mask in GRID2D format.
        #[arg(long)]
        mask: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rate studies: mollification commutators and Besov decay probes.
    Rates {
        /// One of: commutator, triple, besov, mollify.
        which: String,
        #[arg(long, default_value_t = 0.8)]
        alpha: f64,
        /// Commutator norm order (0 or 1).
        #[arg(long, default_value_t = 0)]
        j: usize,
        /// Ladder `e0,k`: start and rung count.
        #[arg(long)]
        eps: Option<String>,
        #[arg(long, default_value = "weakcurv_out")]
        out: PathBuf,
    },
    /// Composite verification suites; exit 0 iff every check passes.
    Verify {
        /// One of: degree-formula, mass-identity, invariance, graph-bridge,
        /// commutators, alexandrov, extrinsic-tv.
        suite: String,
        /// Optional generator spec JSON for the field under test.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Grid override `nx,ny,x0,y0,h`.
        #[arg(long)]
        grid: Option<String>,
        /// Ladder override `e0,k`.
        #[arg(long)]
        eps: Option<String>,
        /// Tolerance overrides `name=value`, repeatable.
        #[arg(long = "tol")]
        tols: Vec<String>,
        #[arg(long, default_value = "weakcurv_out")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("WEAKCURV_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Generate { spec, out, name } => {
            let text = std::fs::read_to_string(&spec)
                .with_context(|| format!("reading {}", spec.display()))?;
            let gspec: weakcurv::GeneratorSpec =
                serde_json::from_str(&text).context("parsing generator spec")?;
            std::fs::create_dir_all(&out)?;
            match weakcurv::generate(&gspec)? {
                weakcurv::Generated::Scalar { field, meta } => {
                    let path = out.join(format!("{name}.grid"));
                    weakcurv::fields::io::write_grid2d(&path, &field)?;
                    let meta_json = format!(
                        "{{\"kind\": \"scalar\", \"holder_alpha\": {}, \"exact_gradient\": {}, \"exact_hessian\": {}}}\n",
                        meta.holder_alpha
                            .map_or("null".to_string(), weakcurv::fields::io::fmt_f64),
                        meta.gradient.is_some(),
                        meta.hessian.is_some()
                    );
                    std::fs::write(out.join(format!("{name}_meta.json")), meta_json)?;
                    println!("{}", path.display());
                }
                weakcurv::Generated::Diffeo(xi) => {
                    let fwd =
                        weakcurv::VectorField2D::sample(gspec.grid, |x, y| xi.apply([x, y]))?;
                    let px = out.join(format!("{name}_x.grid"));
                    let py = out.join(format!("{name}_y.grid"));
                    weakcurv::fields::io::write_grid2d(&px, &fwd.x)?;
                    weakcurv::fields::io::write_grid2d(&py, &fwd.y)?;
                    println!("{}", px.display());
                    println!("{}", py.display());
                }
            }
            Ok(true)
        }
        Command::Hessdet {
            v,
            phi,
            unnormalized,
            out,
        } => {
            let field = weakcurv::fields::io::read_grid2d(&v)?;
            let bump = parse_phi(&phi, unnormalized)?;
            let p = weakcurv::det_hessian_pairing(&field, &bump)?;
            let json = format!(
                "{{\"value\": {}, \"error_estimate\": {}}}\n",
                weakcurv::fields::io::fmt_f64(p.value),
                weakcurv::fields::io::fmt_f64(p.error_estimate)
            );
            print!("{json}");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("hessdet.json"), json)?;
            }
            Ok(true)
        }
        Command::Curvature {
            bundle,
            graph,
            phi,
            unnormalized,
            save_bundle,
            out,
        } => {
            let metric = match (bundle, graph) {
                (Some(manifest), None) => weakcurv::fields::io::read_metric_bundle(&manifest)?,
                (None, Some(vpath)) => {
                    let field = weakcurv::fields::io::read_grid2d(&vpath)?;
                    weakcurv::curvature::graph_metric(&field)
                }
                _ => bail!("provide exactly one of --bundle or --graph"),
            };
            let bump = parse_phi(&phi, unnormalized)?;
            let p = weakcurv::curvature::kappa_pairing(&metric, &bump)?;
            let json = format!(
                "{{\"value\": {}, \"error_estimate\": {}}}\n",
                weakcurv::fields::io::fmt_f64(p.value),
                weakcurv::fields::io::fmt_f64(p.error_estimate)
            );
            print!("{json}");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("curvature.json"), json)?;
                if save_bundle {
                    weakcurv::fields::io::write_metric_bundle(&dir, "metric", &metric)?;
                }
            }
            Ok(true)
        }
        Command::Degree {
            v,
            domain,
            y,
            delta,
            map_grid,
            out,
        } => {
            let field = weakcurv::fields::io::read_grid2d(&v)?;
            let dom = parse_domain(&domain)?;
            let map = weakcurv::degree::perturbed_map(&field, delta);
            if let Some(spec) = map_grid {
                let y_grid = parse_grid(&spec)?;
                let dm = weakcurv::degree::degree_map(&map, &dom, y_grid)?;
                std::fs::create_dir_all(&out)?;
                let deg_path = out.join("degree_map.grid");
                weakcurv::fields::io::write_grid2d(&deg_path, &dm.deg_field())?;
                weakcurv::fields::io::write_grid2d(&out.join("degree_mask.grid"), &dm.mask_field())?;
                println!("{}", deg_path.display());
                return Ok(true);
            }
            let target: Vec<f64> = y
                .expect("clap enforces --y without --map-grid")
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .context("parsing --y")?;
            if target.len() != 2 {
                bail!("--y needs two coordinates");
            }
            let d = weakcurv::degree::winding_degree(&map, &dom, [target[0], target[1]])?;
            println!("{d}");
            Ok(true)
        }
        Command::Measure {
            v,
            domain,
            raster,
            mask,
            out,
        } => {
            let field = weakcurv::fields::io::read_grid2d(&v)?;
            let dom = parse_domain(&domain)?;
            let b = dom.shape.bbox();
            let r = raster.unwrap_or((b.x_max - b.x_min).max(b.y_max - b.y_min) / 600.0);
            let (res, pixels) =
                weakcurv::monge_ampere::gradient_image_area_with_mask(&field, &dom, r)?;
            let json = format!("{}\n", res.to_json());
            print!("{json}");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("measure.json"), json)?;
                if mask {
                    weakcurv::fields::io::write_grid2d(&dir.join("measure_mask.grid"), &pixels)?;
                }
            }
            Ok(true)
        }
        Command::Rates {
            which,
            alpha,
            j,
            eps,
            out,
        } => suites::run_rates(&which, alpha, j, parse_eps(eps.as_deref())?, &out),
        Command::Verify {
            suite,
            spec,
            grid,
            eps,
            tols,
            out,
        } => {
            let grid = match grid {
                Some(s) => Some(parse_grid(&s)?),
                None => None,
            };
            let gen_spec = match spec {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    Some(serde_json::from_str(&text).context("parsing generator spec")?)
                }
                None => None,
            };
            suites::run_verify(
                &suite,
                gen_spec,
                grid,
                parse_eps(eps.as_deref())?,
                parse_tols(&tols)?,
                &out,
            )
        }
    }
}
