//! Deterministic synthetic fields, metrics and diffeomorphisms with known
//! analytic properties, including rough C^{1,alpha} instances.
//!
//! Everything here is closed-form and seed-free: the same spec always
//! produces bit-identical output.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diffeo::Diffeo2D;
use crate::error::{Error, Result};
use crate::fields::grid::Grid2D;
use crate::fields::scalar::ScalarField2D;

/// Golden-angle increment used for the lacunary direction schedule.
const GOLDEN_ANGLE: f64 = 2.399963229728653;

/// Fixed rotation of the whole direction schedule, chosen so every mode keeps
/// a healthy projection on both axes (min |cos| = 0.36 over the first eight
/// modes); a near-axis mode would dent the self-similar amplitude ladder that
/// the rate fits rely on.
const DIRECTION_OFFSET: f64 = 1.7665175491135408;

/// Default lacunary base for the Weierstrass-type sums: clean scale
/// separation for rate fits.
const DEFAULT_LACUNARY_BASE: f64 = 4.0;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    /// `v = (xx x^2 + 2 xy x y + yy y^2) / 2`; defaults give `(x^2+y^2)/2`.
    Quadratic {
        #[serde(default = "one")]
        xx: f64,
        #[serde(default)]
        xy: f64,
        #[serde(default = "one")]
        yy: f64,
    },
    /// `v = sqrt(R^2 - |x|^2)`, the upper hemisphere graph.
    SphereCap { radius: f64 },
    /// `v = sqrt(|x|^2 + a^2)`, nonnegative curvature concentrating near 0.
    SmoothedCone { a: f64 },
    /// `v = x y`.
    Saddle,
    /// `v = x^3 - 3 x y^2`.
    MonkeySaddle,
    /// Lacunary cosine sum in C^{1,alpha}: `v = A sum λ_k^{-(1+α)} cos(λ_k <b_k, x>)`
    /// with `λ_k = base^k` and unit directions rotating by the golden angle.
    Weierstrass {
        alpha: f64,
        #[serde(default)]
        levels: Option<u32>,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "default_base")]
        base: f64,
    },
    /// Smoothed fold `v = sqrt((slope x)^2 + smoothing^2)`: convex, with
    /// gradient constant along vertical segments.
    Ridge { slope: f64, smoothing: f64 },
    /// Shear diffeo, linear `(x1 + a x2, x2)` or sinusoidal `(x1 + a sin x2, x2)`.
    DiffeoShear {
        a: f64,
        #[serde(default)]
        sinusoidal: bool,
    },
    /// Near-identity perturbation by two C^{1,alpha} lacunary sums.
    DiffeoRough {
        alpha: f64,
        amplitude: f64,
        #[serde(default)]
        levels: Option<u32>,
    },
}

fn one() -> f64 {
    1.0
}

fn default_base() -> f64 {
    DEFAULT_LACUNARY_BASE
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub kind: GeneratorKind,
    pub grid: Grid2D,
}

type Grad = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;
type Hess = Arc<dyn Fn(f64, f64) -> [f64; 3] + Send + Sync>;

/// Analytic side information attached to a generated scalar field.
#[derive(Clone)]
pub struct ScalarMeta {
    /// Hölder exponent of the gradient, when meaningful.
    pub holder_alpha: Option<f64>,
    /// Exact gradient, when the kind has one in closed form.
    pub gradient: Option<Grad>,
    /// Exact Hessian `(vxx, vxy, vyy)`.
    pub hessian: Option<Hess>,
}

impl ScalarMeta {
    pub fn det_hessian(&self, x: f64, y: f64) -> Option<f64> {
        self.hessian
            .as_ref()
            .map(|h| {
                let [a, b, c] = h(x, y);
                a * c - b * b
            })
    }
}

impl std::fmt::Debug for ScalarMeta {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarMeta")
            .field("holder_alpha", &self.holder_alpha)
            .field("has_gradient", &self.gradient.is_some())
            .field("has_hessian", &self.hessian.is_some())
            .finish()
    }
}

#[derive(Debug)]
pub enum Generated {
    Scalar {
        field: ScalarField2D,
        meta: ScalarMeta,
    },
    Diffeo(Diffeo2D),
}

impl Generated {
    pub fn into_scalar(self) -> (ScalarField2D, ScalarMeta) {
        match self {
            Generated::Scalar { field, meta } => (field, meta),
            Generated::Diffeo(_) => panic!("generator produced a diffeomorphism, not a field"),
        }
    }

    pub fn into_diffeo(self) -> Diffeo2D {
        match self {
            Generated::Diffeo(d) => d,
            Generated::Scalar { .. } => panic!("generator produced a field, not a diffeomorphism"),
        }
    }
}

/// Frequencies and directions of the lacunary ladder for `k = 1..=levels`.
fn lacunary_modes(base: f64, levels: u32) -> Vec<(f64, [f64; 2])> {
    (1..=levels)
        .map(|k| {
            let lambda = base.powi(k as i32);
            let theta = DIRECTION_OFFSET + k as f64 * GOLDEN_ANGLE;
            (lambda, [theta.cos(), theta.sin()])
        })
        .collect()
}

fn default_levels(base: f64, h: f64) -> u32 {
    // smallest K with base^K >= 1/h, so roughness reaches the grid scale
    let k = ((1.0 / h).ln() / base.ln()).ceil();
    (k.max(1.0) as u32).min(24)
}

fn check_resolved(base: f64, levels: u32, h: f64) -> Result<()> {
    // The default ladder stops at the first lambda_K >= 1/h, which lands
    // lambda_K * h in [1, base); anything beyond that is pure aliasing.
    let lambda = base.powi(levels as i32);
    let max_h = base.max(2.0) / lambda;
    if h > max_h * (1.0 + 1e-12) {
        return Err(Error::GeneratorUnderResolved { lambda, h, max_h });
    }
    Ok(())
}

/// Lacunary C^{1,alpha} sum with exact derivatives.
pub struct LacunarySum {
    modes: Vec<(f64, [f64; 2])>,
    alpha: f64,
    amplitude: f64,
    phase: f64,
}

impl LacunarySum {
    pub fn new(base: f64, alpha: f64, levels: u32, amplitude: f64, phase: f64) -> Self {
        Self {
            modes: lacunary_modes(base, levels),
            alpha,
            amplitude,
            phase,
        }
    }

    /// Deterministic per-mode phase: a quadratic schedule decoheres the
    /// cross-term peaks that drive rate diagnostics.
    #[inline]
    fn mode_phase(&self, k: usize) -> f64 {
        self.phase * (k * k) as f64
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        let mut v = 0.0;
        for (k, (lambda, b)) in self.modes.iter().enumerate() {
            let arg = lambda * (b[0] * x + b[1] * y) + self.mode_phase(k + 1);
            v += lambda.powf(-(1.0 + self.alpha)) * arg.cos();
        }
        self.amplitude * v
    }

    pub fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        let mut g = [0.0, 0.0];
        for (k, (lambda, b)) in self.modes.iter().enumerate() {
            let arg = lambda * (b[0] * x + b[1] * y) + self.mode_phase(k + 1);
            let c = -lambda.powf(-self.alpha) * arg.sin();
            g[0] += c * b[0];
            g[1] += c * b[1];
        }
        [self.amplitude * g[0], self.amplitude * g[1]]
    }

    pub fn hessian(&self, x: f64, y: f64) -> [f64; 3] {
        let mut hxx = 0.0;
        let mut hxy = 0.0;
        let mut hyy = 0.0;
        for (k, (lambda, b)) in self.modes.iter().enumerate() {
            let arg = lambda * (b[0] * x + b[1] * y) + self.mode_phase(k + 1);
            let c = -lambda.powf(1.0 - self.alpha) * arg.cos();
            hxx += c * b[0] * b[0];
            hxy += c * b[0] * b[1];
            hyy += c * b[1] * b[1];
        }
        [
            self.amplitude * hxx,
            self.amplitude * hxy,
            self.amplitude * hyy,
        ]
    }

    /// Uniform bound for `|grad|`, `sum lambda_k^{-alpha}`.
    pub fn gradient_bound(&self) -> f64 {
        self.amplitude
            * self
                .modes
                .iter()
                .map(|(l, _)| l.powf(-self.alpha))
                .sum::<f64>()
    }
}

pub fn generate(spec: &GeneratorSpec) -> Result<Generated> {
    let grid = spec.grid;
    let scalar = |f: &dyn Fn(f64, f64) -> f64,
                  meta: ScalarMeta|
     -> Result<Generated> {
        Ok(Generated::Scalar {
            field: ScalarField2D::sample(grid, f)?,
            meta,
        })
    };

    match &spec.kind {
        GeneratorKind::Quadratic { xx, xy, yy } => {
            let (a, b, c) = (*xx, *xy, *yy);
            scalar(
                &|x, y| 0.5 * (a * x * x + c * y * y) + b * x * y,
                ScalarMeta {
                    holder_alpha: None,
                    gradient: Some(Arc::new(move |x, y| [a * x + b * y, b * x + c * y])),
                    hessian: Some(Arc::new(move |_, _| [a, b, c])),
                },
            )
        }
        GeneratorKind::SphereCap { radius } => {
            let r = *radius;
            if r <= 0.0 {
                return Err(Error::BadGeneratorParameters("sphere radius must be > 0".into()));
            }
            let corner = grid.x0.abs().max(grid.x_max().abs()).hypot(
                grid.y0.abs().max(grid.y_max().abs()),
            );
            if corner >= r {
                return Err(Error::BadGeneratorParameters(format!(
                    "grid corner radius {corner} reaches the sphere equator {r}"
                )));
            }
            scalar(
                &|x, y| (r * r - x * x - y * y).sqrt(),
                ScalarMeta {
                    holder_alpha: None,
                    gradient: Some(Arc::new(move |x, y| {
                        let s = (r * r - x * x - y * y).sqrt();
                        [-x / s, -y / s]
                    })),
                    hessian: Some(Arc::new(move |x, y| {
                        let s2 = r * r - x * x - y * y;
                        let s = s2.sqrt();
                        let s3 = s2 * s;
                        [
                            -1.0 / s - x * x / s3,
                            -x * y / s3,
                            -1.0 / s - y * y / s3,
                        ]
                    })),
                },
            )
        }
        GeneratorKind::SmoothedCone { a } => {
            let a = *a;
            if a <= 0.0 {
                return Err(Error::BadGeneratorParameters(
                    "cone smoothing must be > 0 (the raw cone is not C^1)".into(),
                ));
            }
            let a2 = a * a;
            scalar(
                &|x, y| (x * x + y * y + a2).sqrt(),
                ScalarMeta {
                    holder_alpha: None,
                    gradient: Some(Arc::new(move |x, y| {
                        let s = (x * x + y * y + a2).sqrt();
                        [x / s, y / s]
                    })),
                    hessian: Some(Arc::new(move |x, y| {
                        let s2 = x * x + y * y + a2;
                        let s = s2.sqrt();
                        let s3 = s2 * s;
                        [
                            1.0 / s - x * x / s3,
                            -x * y / s3,
                            1.0 / s - y * y / s3,
                        ]
                    })),
                },
            )
        }
        GeneratorKind::Saddle => scalar(
            &|x, y| x * y,
            ScalarMeta {
                holder_alpha: None,
                gradient: Some(Arc::new(|x, y| [y, x])),
                hessian: Some(Arc::new(|_, _| [0.0, 1.0, 0.0])),
            },
        ),
        GeneratorKind::MonkeySaddle => scalar(
            &|x, y| x * x * x - 3.0 * x * y * y,
            ScalarMeta {
                holder_alpha: None,
                gradient: Some(Arc::new(|x, y| {
                    [3.0 * (x * x - y * y), -6.0 * x * y]
                })),
                hessian: Some(Arc::new(|x, y| [6.0 * x, -6.0 * y, 6.0 * x])),
            },
        ),
        GeneratorKind::Weierstrass {
            alpha,
            levels,
            amplitude,
            base,
        } => {
            let alpha = *alpha;
            let base = *base;
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::HolderExponentOutOfRange(alpha));
            }
            if !(base >= 1.5) {
                return Err(Error::BadGeneratorParameters(
                    "lacunary base must be >= 1.5".into(),
                ));
            }
            let levels = levels.unwrap_or_else(|| default_levels(base, grid.h));
            check_resolved(base, levels, grid.h)?;
            let sum = Arc::new(LacunarySum::new(base, alpha, levels, *amplitude, 0.0));
            let s1 = sum.clone();
            let s2 = sum.clone();
            scalar(
                &|x, y| sum.value(x, y),
                ScalarMeta {
                    holder_alpha: Some(alpha),
                    gradient: Some(Arc::new(move |x, y| s1.gradient(x, y))),
                    hessian: Some(Arc::new(move |x, y| s2.hessian(x, y))),
                },
            )
        }
        GeneratorKind::Ridge { slope, smoothing } => {
            let (c, s) = (*slope, *smoothing);
            if c == 0.0 || s <= 0.0 {
                return Err(Error::BadGeneratorParameters(
                    "ridge needs slope != 0 and smoothing > 0".into(),
                ));
            }
            let s2 = s * s;
            scalar(
                &|x, _| ((c * x) * (c * x) + s2).sqrt(),
                ScalarMeta {
                    holder_alpha: None,
                    gradient: Some(Arc::new(move |x, _| {
                        let q = ((c * x) * (c * x) + s2).sqrt();
                        [c * c * x / q, 0.0]
                    })),
                    hessian: Some(Arc::new(move |x, _| {
                        let q2 = (c * x) * (c * x) + s2;
                        let q = q2.sqrt();
                        [c * c * s2 / (q2 * q), 0.0, 0.0]
                    })),
                },
            )
        }
        GeneratorKind::DiffeoShear { a, sinusoidal } => Ok(Generated::Diffeo(if *sinusoidal {
            Diffeo2D::sin_shear(*a)
        } else {
            Diffeo2D::linear_shear(*a)
        })),
        GeneratorKind::DiffeoRough {
            alpha,
            amplitude,
            levels,
        } => {
            let alpha = *alpha;
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::HolderExponentOutOfRange(alpha));
            }
            let levels = levels.unwrap_or_else(|| default_levels(DEFAULT_LACUNARY_BASE, grid.h));
            check_resolved(DEFAULT_LACUNARY_BASE, levels, grid.h)?;
            let w1 = Arc::new(LacunarySum::new(DEFAULT_LACUNARY_BASE, alpha, levels, *amplitude, 0.0));
            let w2 = Arc::new(LacunarySum::new(DEFAULT_LACUNARY_BASE, alpha, levels, *amplitude, 1.0));
            let bound = w1.gradient_bound() + w2.gradient_bound();
            if bound >= 0.45 {
                return Err(Error::BadGeneratorParameters(format!(
                    "rough diffeo amplitude too large: gradient bound {bound:.3} risks losing invertibility"
                )));
            }
            let min_det = (1.0 - bound).powi(2) - bound * bound;
            let (v1, v2) = (w1.clone(), w2.clone());
            let (g1, g2) = (w1.clone(), w2.clone());
            let (h1, h2) = (w1, w2);
            Ok(Generated::Diffeo(Diffeo2D::from_closures(
                Arc::new(move |p| {
                    [p[0] + v1.value(p[0], p[1]), p[1] + v2.value(p[0], p[1])]
                }),
                None,
                Arc::new(move |p| {
                    let a = g1.gradient(p[0], p[1]);
                    let b = g2.gradient(p[0], p[1]);
                    [[1.0 + a[0], a[1]], [b[0], 1.0 + b[1]]]
                }),
                Some(Arc::new(move |p| {
                    let ha = h1.hessian(p[0], p[1]);
                    let hb = h2.hessian(p[0], p[1]);
                    // d2[i][j][k] = d_k d_j xi_i
                    [
                        [[ha[0], ha[1]], [ha[1], ha[2]]],
                        [[hb[0], hb[1]], [hb[1], hb[2]]],
                    ]
                })),
                min_det,
            )))
        }
    }
}
