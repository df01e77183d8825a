//! Compactly supported smooth test functions with exact derivatives.
//!
//! Pairings never discretize the test function: value, gradient and Hessian
//! are evaluated analytically, so only the field side of a pairing carries
//! discretization error.

use std::sync::OnceLock;

use crate::fields::grid::Rect;

/// Anything a distribution can be paired against: an analytic compactly
/// supported function with exact first and second derivatives.
pub trait TestField: Sync {
    fn value(&self, p: [f64; 2]) -> f64;
    fn gradient(&self, p: [f64; 2]) -> [f64; 2];
    /// Hessian entries `(dxx, dxy, dyy)`.
    fn hessian(&self, p: [f64; 2]) -> [f64; 3];
    /// Bounding box of the support; evaluators vanish identically outside.
    fn support(&self) -> Rect;
}

/// Mass of the unit bump profile `exp(-1/(1-|x|^2))` over the unit disk.
///
/// Radially `M0 = pi * int_0^1 exp(-1/w) dw`; computed once by composite
/// Simpson at a resolution far below round-off.
pub fn bump_profile_mass() -> f64 {
    static M0: OnceLock<f64> = OnceLock::new();
    *M0.get_or_init(|| {
        let f = |w: f64| if w <= 0.0 { 0.0 } else { (-1.0 / w).exp() };
        let n = 1 << 14;
        let h = 1.0 / n as f64;
        let mut sum = f(0.0) + f(1.0);
        for k in 1..n {
            let w = k as f64 * h;
            sum += if k % 2 == 1 { 4.0 * f(w) } else { 2.0 * f(w) };
        }
        std::f64::consts::PI * sum * h / 3.0
    })
}

/// The standard rescaled bump `A * exp(-1/(1 - |(x-c)/r|^2))` on `B_r(c)`.
///
/// Value and gradient vanish identically outside the support disk; all
/// derivatives are evaluated in closed form.
#[derive(Debug, Clone, Copy)]
pub struct TestFunction {
    pub center: [f64; 2],
    pub radius: f64,
    pub amplitude: f64,
}

impl TestFunction {
    /// Unnormalized bump, amplitude 1.
    pub fn bump(center: [f64; 2], radius: f64) -> Self {
        assert!(radius > 0.0, "bump radius must be positive");
        Self {
            center,
            radius,
            amplitude: 1.0,
        }
    }

    /// Bump rescaled so that the exact integral over the plane equals 1.
    pub fn normalized(center: [f64; 2], radius: f64) -> Self {
        let mut b = Self::bump(center, radius);
        b.amplitude = 1.0 / (radius * radius * bump_profile_mass());
        b
    }

    /// Exact integral of the bump over the plane.
    pub fn mass(&self) -> f64 {
        self.amplitude * self.radius * self.radius * bump_profile_mass()
    }

    #[inline]
    fn local(&self, p: [f64; 2]) -> ([f64; 2], f64) {
        let u = [
            (p[0] - self.center[0]) / self.radius,
            (p[1] - self.center[1]) / self.radius,
        ];
        (u, u[0] * u[0] + u[1] * u[1])
    }
}

impl TestField for TestFunction {
    fn value(&self, p: [f64; 2]) -> f64 {
        let (_, s) = self.local(p);
        if s >= 1.0 {
            return 0.0;
        }
        self.amplitude * (-1.0 / (1.0 - s)).exp()
    }

    fn gradient(&self, p: [f64; 2]) -> [f64; 2] {
        let (u, s) = self.local(p);
        if s >= 1.0 {
            return [0.0, 0.0];
        }
        let t = 1.0 - s;
        let e = (-1.0 / t).exp();
        if e == 0.0 {
            return [0.0, 0.0];
        }
        let c = -2.0 * self.amplitude * e / (self.radius * t * t);
        [c * u[0], c * u[1]]
    }

    fn hessian(&self, p: [f64; 2]) -> [f64; 3] {
        let (u, s) = self.local(p);
        if s >= 1.0 {
            return [0.0, 0.0, 0.0];
        }
        let t = 1.0 - s;
        let e = (-1.0 / t).exp();
        if e == 0.0 {
            return [0.0, 0.0, 0.0];
        }
        let r2 = self.radius * self.radius;
        let c = 2.0 * self.amplitude * e / r2;
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t2 * t2;
        let cross = 2.0 / t4 - 4.0 / t3;
        [
            c * (u[0] * u[0] * cross - 1.0 / t2),
            c * (u[0] * u[1] * cross),
            c * (u[1] * u[1] * cross - 1.0 / t2),
        ]
    }

    fn support(&self) -> Rect {
        Rect::new(
            self.center[0] - self.radius,
            self.center[0] + self.radius,
            self.center[1] - self.radius,
            self.center[1] + self.radius,
        )
    }
}

/// C-infinity step: 0 for t <= 0, 1 for t >= 1, strictly increasing between.
#[derive(Debug, Clone, Copy)]
pub struct SmoothStep;

impl SmoothStep {
    /// `(s, s', s'')` at `t`.
    pub fn eval(t: f64) -> (f64, f64, f64) {
        // exp(-1/t) underflows below ~1/745; clamp to the flat tails there.
        const EDGE: f64 = 1.4e-3;
        if t <= EDGE {
            return (0.0, 0.0, 0.0);
        }
        if t >= 1.0 - EDGE {
            return (1.0, 0.0, 0.0);
        }
        let f = (-1.0 / t).exp();
        let fp = f / (t * t);
        let fpp = f * (1.0 / t.powi(4) - 2.0 / t.powi(3));
        let u = 1.0 - t;
        let g = (-1.0 / u).exp();
        let gp = -g / (u * u);
        let gpp = g * (1.0 / u.powi(4) - 2.0 / u.powi(3));
        let d = f + g;
        let dp = fp + gp;
        let num = fp * g - f * gp;
        let s = f / d;
        let sp = num / (d * d);
        let spp = ((fpp * g - f * gpp) * d - 2.0 * dp * num) / (d * d * d);
        (s, sp, spp)
    }
}

/// Smoothly mollified indicator of a disk: 1 inside `B_{R-w}`, 0 outside
/// `B_{R+w}`, a radial smooth-step ramp in between.
#[derive(Debug, Clone, Copy)]
pub struct SmoothedDiskIndicator {
    pub center: [f64; 2],
    pub radius: f64,
    pub width: f64,
}

impl SmoothedDiskIndicator {
    pub fn new(center: [f64; 2], radius: f64, width: f64) -> Self {
        assert!(width > 0.0 && width < radius, "need 0 < width < radius");
        Self {
            center,
            radius,
            width,
        }
    }

    /// `(T, T', T'')` of the radial profile at distance `rho`.
    fn profile(&self, rho: f64) -> (f64, f64, f64) {
        let arg = (self.radius + self.width - rho) / (2.0 * self.width);
        let (s, sp, spp) = SmoothStep::eval(arg);
        let da = -1.0 / (2.0 * self.width);
        (s, sp * da, spp * da * da)
    }
}

impl TestField for SmoothedDiskIndicator {
    fn value(&self, p: [f64; 2]) -> f64 {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        let rho = (dx * dx + dy * dy).sqrt();
        self.profile(rho).0
    }

    fn gradient(&self, p: [f64; 2]) -> [f64; 2] {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        let rho = (dx * dx + dy * dy).sqrt();
        if rho <= self.radius - self.width || rho >= self.radius + self.width {
            return [0.0, 0.0];
        }
        let (_, tp, _) = self.profile(rho);
        [tp * dx / rho, tp * dy / rho]
    }

    fn hessian(&self, p: [f64; 2]) -> [f64; 3] {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        let rho = (dx * dx + dy * dy).sqrt();
        if rho <= self.radius - self.width || rho >= self.radius + self.width {
            return [0.0, 0.0, 0.0];
        }
        let (_, tp, tpp) = self.profile(rho);
        let r2 = rho * rho;
        let r3 = r2 * rho;
        [
            tpp * dx * dx / r2 + tp * (1.0 / rho - dx * dx / r3),
            tpp * dx * dy / r2 - tp * dx * dy / r3,
            tpp * dy * dy / r2 + tp * (1.0 / rho - dy * dy / r3),
        ]
    }

    fn support(&self) -> Rect {
        let r = self.radius + self.width;
        Rect::new(
            self.center[0] - r,
            self.center[0] + r,
            self.center[1] - r,
            self.center[1] + r,
        )
    }
}

/// Smoothly mollified indicator of an axis-aligned rectangle: product of two
/// 1D ramped plateaus.
#[derive(Debug, Clone, Copy)]
pub struct SmoothedRectIndicator {
    pub rect: Rect,
    pub width: f64,
}

impl SmoothedRectIndicator {
    pub fn new(rect: Rect, width: f64) -> Self {
        assert!(
            width > 0.0
                && 2.0 * width < rect.x_max - rect.x_min
                && 2.0 * width < rect.y_max - rect.y_min,
            "ramp width must fit inside the rectangle"
        );
        Self { rect, width }
    }

    /// 1D plateau: ramps up across `[lo-w, lo+w]`, down across `[hi-w, hi+w]`.
    fn plateau(&self, t: f64, lo: f64, hi: f64) -> (f64, f64, f64) {
        let w2 = 2.0 * self.width;
        let (a, ap, app) = SmoothStep::eval((t - (lo - self.width)) / w2);
        let (b, bp, bpp) = SmoothStep::eval(((hi + self.width) - t) / w2);
        let da = 1.0 / w2;
        let db = -1.0 / w2;
        let v = a * b;
        let vp = ap * da * b + a * bp * db;
        let vpp = app * da * da * b + 2.0 * ap * da * bp * db + a * bpp * db * db;
        (v, vp, vpp)
    }
}

impl TestField for SmoothedRectIndicator {
    fn value(&self, p: [f64; 2]) -> f64 {
        let (vx, _, _) = self.plateau(p[0], self.rect.x_min, self.rect.x_max);
        let (vy, _, _) = self.plateau(p[1], self.rect.y_min, self.rect.y_max);
        vx * vy
    }

    fn gradient(&self, p: [f64; 2]) -> [f64; 2] {
        let (vx, vxp, _) = self.plateau(p[0], self.rect.x_min, self.rect.x_max);
        let (vy, vyp, _) = self.plateau(p[1], self.rect.y_min, self.rect.y_max);
        [vxp * vy, vx * vyp]
    }

    fn hessian(&self, p: [f64; 2]) -> [f64; 3] {
        let (vx, vxp, vxpp) = self.plateau(p[0], self.rect.x_min, self.rect.x_max);
        let (vy, vyp, vypp) = self.plateau(p[1], self.rect.y_min, self.rect.y_max);
        [vxpp * vy, vxp * vyp, vx * vypp]
    }

    fn support(&self) -> Rect {
        Rect::new(
            self.rect.x_min - self.width,
            self.rect.x_max + self.width,
            self.rect.y_min - self.width,
            self.rect.y_max + self.width,
        )
    }
}
