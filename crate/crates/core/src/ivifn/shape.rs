use std::fmt;
use std::sync::Arc;

use super::IvifnError;

/// Absolute tolerance used when integrating custom inverse shapes.
pub const QUADRATURE_TOL: f64 = 1e-10;

type InverseFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A reference function `L` (or `R`, `L'`, `R'`), stored through its inverse.
///
/// Shapes are decreasing on `[0, 1]` with `L(0) = 1` and `L(1) = 0`. The
/// linear shape `L(t) = 1 - t` is the default and has closed-form helpers.
#[derive(Clone)]
pub enum ShapeSpec {
    Linear,
    Custom(Arc<CustomShape>),
}

pub struct CustomShape {
    name: String,
    inverse: Box<InverseFn>,
    integral: f64,
}

impl ShapeSpec {
    /// Builds a custom shape from its inverse `L^{-1}: [0,1] -> [0,1]`.
    ///
    /// The inverse must be non-increasing with `L^{-1}(1) = 0`, and its
    /// integral over `[0, 1]` must be strictly positive.
    pub fn custom<F>(name: impl Into<String>, inverse: F) -> Result<Self, IvifnError>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let name = name.into();
        let bad = |reason: &str| IvifnError::InvalidShape {
            name: name.clone(),
            reason: reason.to_string(),
        };
        let mut prev = f64::INFINITY;
        for i in 0..=64 {
            let alpha = i as f64 / 64.0;
            let v = inverse(alpha);
            if !v.is_finite() || !(-1e-12..=1.0 + 1e-12).contains(&v) {
                return Err(bad("inverse leaves [0, 1]"));
            }
            if v > prev + 1e-12 {
                return Err(bad("inverse is not non-increasing"));
            }
            prev = v;
        }
        if inverse(1.0).abs() > 1e-9 {
            return Err(bad("inverse at 1 must be 0"));
        }
        let integral = adaptive_simpson(&inverse, 0.0, 1.0, QUADRATURE_TOL);
        if integral <= 0.0 {
            return Err(bad("integral of the inverse must be positive"));
        }
        Ok(ShapeSpec::Custom(Arc::new(CustomShape {
            name,
            inverse: Box::new(inverse),
            integral,
        })))
    }

    pub fn name(&self) -> &str {
        match self {
            ShapeSpec::Linear => "linear",
            ShapeSpec::Custom(c) => &c.name,
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, ShapeSpec::Linear)
    }

    /// `L^{-1}(alpha)`.
    pub fn inverse(&self, alpha: f64) -> f64 {
        match self {
            ShapeSpec::Linear => 1.0 - alpha,
            ShapeSpec::Custom(c) => (c.inverse)(alpha),
        }
    }

    /// `integral_0^1 L^{-1}(alpha) d alpha`.
    pub fn inverse_integral(&self) -> f64 {
        match self {
            ShapeSpec::Linear => 0.5,
            ShapeSpec::Custom(c) => c.integral,
        }
    }

    /// `L(t)` for `t >= 0`, zero beyond the support.
    pub fn value(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        if t >= 1.0 {
            return 0.0;
        }
        match self {
            ShapeSpec::Linear => 1.0 - t,
            ShapeSpec::Custom(c) => {
                // inverse is non-increasing, so bisect on alpha
                let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if (c.inverse)(mid) >= t {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }
}

impl PartialEq for ShapeSpec {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (ShapeSpec::Linear, ShapeSpec::Linear) => true,
            (ShapeSpec::Custom(a), ShapeSpec::Custom(b)) => Arc::ptr_eq(a, b) || a.name == b.name,
            _ => false,
        }
    }
}

impl fmt::Debug for ShapeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ShapeSpec({})", self.name())
    }
}

/// The four reference functions `L`, `R`, `L'`, `R'` of a number.
#[derive(Clone, Debug, PartialEq)]
pub struct Shapes {
    pub left: ShapeSpec,
    pub right: ShapeSpec,
    pub left_upper: ShapeSpec,
    pub right_upper: ShapeSpec,
}

impl Shapes {
    pub fn linear() -> Self {
        Shapes {
            left: ShapeSpec::Linear,
            right: ShapeSpec::Linear,
            left_upper: ShapeSpec::Linear,
            right_upper: ShapeSpec::Linear,
        }
    }

    pub fn uniform(shape: ShapeSpec) -> Self {
        Shapes {
            left: shape.clone(),
            right: shape.clone(),
            left_upper: shape.clone(),
            right_upper: shape,
        }
    }

    pub fn is_linear(&self) -> bool {
        self.left.is_linear()
            && self.right.is_linear()
            && self.left_upper.is_linear()
            && self.right_upper.is_linear()
    }

    /// Integrals `(I_L, I_R, I_L', I_R')`.
    pub fn integrals(&self) -> [f64; 4] {
        [
            self.left.inverse_integral(),
            self.right.inverse_integral(),
            self.left_upper.inverse_integral(),
            self.right_upper.inverse_integral(),
        ]
    }
}

impl Default for Shapes {
    fn default() -> Self {
        Shapes::linear()
    }
}

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn adaptive_simpson<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
