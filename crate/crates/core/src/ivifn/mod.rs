//! LR-type interval-valued intuitionistic fuzzy numbers.
//!
//! A number is a mean `a` with eight non-negative spreads describing four
//! nested supports: lower membership, upper membership, upper
//! non-membership and lower non-membership.

mod arith;
mod shape;

use std::fmt;

use thiserror::Error;

pub use arith::{add, mul, scalar_mul, sub};
pub use shape::{adaptive_simpson, ShapeSpec, Shapes, QUADRATURE_TOL};

/// Tolerance for spread validation, scaled by the magnitude of the number.
pub const VALIDATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IvifnError {
    #[error("spread {spread} is negative ({value})")]
    SpreadNegative { spread: Spread, value: f64 },
    #[error("nesting violated: {larger} = {larger_value} must be >= {smaller} = {smaller_value}")]
    NestingViolated {
        larger: Spread,
        smaller: Spread,
        larger_value: f64,
        smaller_value: f64,
    },
    #[error("value is not finite")]
    NonFinite,
    #[error("operands use different shape functions")]
    ShapeMismatch,
    #[error("{0}")]
    OutOfRange(String),
    #[error("invalid shape {name}: {reason}")]
    InvalidShape { name: String, reason: String },
}

/// Names of the eight spreads, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spread {
    MuLowerLeft,
    MuLowerRight,
    MuUpperLeft,
    MuUpperRight,
    NuLowerLeft,
    NuLowerRight,
    NuUpperLeft,
    NuUpperRight,
}

impl Spread {
    pub const ALL: [Spread; 8] = [
        Spread::MuLowerLeft,
        Spread::MuLowerRight,
        Spread::MuUpperLeft,
        Spread::MuUpperRight,
        Spread::NuLowerLeft,
        Spread::NuLowerRight,
        Spread::NuUpperLeft,
        Spread::NuUpperRight,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Short identifier used in unknown names and dumps.
    pub fn short(self) -> &'static str {
        match self {
            Spread::MuLowerLeft => "lmL",
            Spread::MuLowerRight => "rmL",
            Spread::MuUpperLeft => "lmU",
            Spread::MuUpperRight => "rmU",
            Spread::NuLowerLeft => "lnL",
            Spread::NuLowerRight => "rnL",
            Spread::NuUpperLeft => "lnU",
            Spread::NuUpperRight => "rnU",
        }
    }
}

impl fmt::Display for Spread {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Spread::MuLowerLeft => "l^mu_L",
            Spread::MuLowerRight => "r^mu_L",
            Spread::MuUpperLeft => "l'^mu_U",
            Spread::MuUpperRight => "r'^mu_U",
            Spread::NuLowerLeft => "l^nu_L",
            Spread::NuLowerRight => "r^nu_L",
            Spread::NuUpperLeft => "l'^nu_U",
            Spread::NuUpperRight => "r'^nu_U",
        };
        f.write_str(s)
    }
}

/// Spread orderings every number must satisfy, as `(larger, smaller)`.
pub const NESTING: [(Spread, Spread); 8] = [
    (Spread::MuUpperLeft, Spread::MuLowerLeft),
    (Spread::MuUpperRight, Spread::MuLowerRight),
    (Spread::NuLowerLeft, Spread::NuUpperLeft),
    (Spread::NuLowerRight, Spread::NuUpperRight),
    (Spread::NuLowerLeft, Spread::MuLowerLeft),
    (Spread::NuLowerRight, Spread::MuLowerRight),
    (Spread::NuUpperLeft, Spread::MuUpperLeft),
    (Spread::NuUpperRight, Spread::MuUpperRight),
];

/// The four supports, innermost first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    MuLower,
    MuUpper,
    NuUpper,
    NuLower,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::MuLower, Level::MuUpper, Level::NuUpper, Level::NuLower];

    /// Left and right spread of this support.
    pub fn spreads(self) -> (Spread, Spread) {
        match self {
            Level::MuLower => (Spread::MuLowerLeft, Spread::MuLowerRight),
            Level::MuUpper => (Spread::MuUpperLeft, Spread::MuUpperRight),
            Level::NuUpper => (Spread::NuUpperLeft, Spread::NuUpperRight),
            Level::NuLower => (Spread::NuLowerLeft, Spread::NuLowerRight),
        }
    }

    /// One-based index of the left characteristic point of this support;
    /// the right one is `10 - depth`.
    pub fn depth(self) -> u8 {
        match self {
            Level::NuLower => 1,
            Level::NuUpper => 2,
            Level::MuUpper => 3,
            Level::MuLower => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, other: &Interval, tol: f64) -> bool {
        self.lo <= other.lo + tol && other.hi <= self.hi + tol
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        let p = [
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        ];
        Interval {
            lo: p.iter().copied().fold(f64::INFINITY, f64::min),
            hi: p.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn sign(&self) -> Sign {
        if self.lo >= 0.0 {
            Sign::NonNeg
        } else if self.hi <= 0.0 {
            Sign::NonPos
        } else {
            Sign::Straddle
        }
    }
}

/// Sign status of an interval relative to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    NonNeg,
    Straddle,
    NonPos,
}

/// Nested supports of a number, innermost first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NestedSupports {
    pub mu_lower: Interval,
    pub mu_upper: Interval,
    pub nu_upper: Interval,
    pub nu_lower: Interval,
}

impl NestedSupports {
    pub fn level(&self, level: Level) -> Interval {
        match level {
            Level::MuLower => self.mu_lower,
            Level::MuUpper => self.mu_upper,
            Level::NuUpper => self.nu_upper,
            Level::NuLower => self.nu_lower,
        }
    }
}

/// Cut sets at membership level `alpha` and non-membership level `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cuts {
    pub mu_lower: Interval,
    pub mu_upper: Interval,
    pub nu_lower: Interval,
    pub nu_upper: Interval,
}

/// Position of zero among the nine characteristic points
/// `a - l^nu_L <= ... <= a <= ... <= a + r^nu_L`.
///
/// Class `k` in `1..=9` is the first point that is non-negative; class 10
/// means every point is negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignClass(u8);

impl SignClass {
    pub const ALL: [SignClass; 10] = [
        SignClass(1),
        SignClass(2),
        SignClass(3),
        SignClass(4),
        SignClass(5),
        SignClass(6),
        SignClass(7),
        SignClass(8),
        SignClass(9),
        SignClass(10),
    ];

    pub fn new(k: u8) -> Option<SignClass> {
        (1..=10).contains(&k).then_some(SignClass(k))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Sign of a support for every number in this class.
    pub fn level_sign(self, level: Level) -> Sign {
        let i = level.depth();
        if self.0 <= i {
            Sign::NonNeg
        } else if self.0 >= 11 - i {
            Sign::NonPos
        } else {
            Sign::Straddle
        }
    }
}

impl fmt::Display for SignClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "class{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ivifn {
    mean: f64,
    spreads: [f64; 8],
    shapes: Shapes,
}

impl Ivifn {
    /// Validated number with linear shapes.
    pub fn new(mean: f64, spreads: [f64; 8]) -> Result<Ivifn, IvifnError> {
        Ivifn::with_shapes(mean, spreads, Shapes::linear())
    }

    pub fn with_shapes(mean: f64, spreads: [f64; 8], shapes: Shapes) -> Result<Ivifn, IvifnError> {
        let spreads = validate_spreads(mean, spreads)?;
        Ok(Ivifn {
            mean,
            spreads,
            shapes,
        })
    }

    /// A crisp value: every spread is zero.
    pub fn crisp(value: f64) -> Ivifn {
        Ivifn {
            mean: value,
            spreads: [0.0; 8],
            shapes: Shapes::linear(),
        }
    }

    pub fn crisp_with_shapes(value: f64, shapes: Shapes) -> Ivifn {
        Ivifn {
            mean: value,
            spreads: [0.0; 8],
            shapes,
        }
    }

    /// Builds a triangular number from its nine ordered abscissas
    /// `b1L <= b1U <= a1U <= a1L <= a2 <= a3L <= a3U <= b3U <= b3L`.
    pub fn from_tivifn(p: [f64; 9]) -> Result<Ivifn, IvifnError> {
        if p.windows(2).any(|w| w[1] < w[0]) {
            return Err(IvifnError::OutOfRange(
                "triangular abscissas must be non-decreasing".into(),
            ));
        }
        let [b1l, b1u, a1u, a1l, a2, a3l, a3u, b3u, b3l] = p;
        Ivifn::new(
            a2,
            [
                a2 - a1l,
                a3l - a2,
                a2 - a1u,
                a3u - a2,
                a2 - b1l,
                b3l - a2,
                a2 - b1u,
                b3u - a2,
            ],
        )
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn spreads(&self) -> &[f64; 8] {
        &self.spreads
    }

    pub fn spread(&self, s: Spread) -> f64 {
        self.spreads[s.index()]
    }

    pub fn shapes(&self) -> &Shapes {
        &self.shapes
    }

    pub fn is_crisp(&self) -> bool {
        self.spreads.iter().all(|&s| s == 0.0)
    }

    pub(crate) fn from_parts(mean: f64, spreads: [f64; 8], shapes: Shapes) -> Ivifn {
        Ivifn {
            mean,
            spreads,
            shapes,
        }
    }

    pub fn level(&self, level: Level) -> Interval {
        let (l, r) = level.spreads();
        Interval::new(self.mean - self.spread(l), self.mean + self.spread(r))
    }

    pub fn supports(&self) -> NestedSupports {
        NestedSupports {
            mu_lower: self.level(Level::MuLower),
            mu_upper: self.level(Level::MuUpper),
            nu_upper: self.level(Level::NuUpper),
            nu_lower: self.level(Level::NuLower),
        }
    }

    /// The nine characteristic points in ascending order.
    pub fn characteristic_points(&self) -> [f64; 9] {
        let s = &self.spreads;
        let a = self.mean;
        [
            a - s[4],
            a - s[6],
            a - s[2],
            a - s[0],
            a,
            a + s[1],
            a + s[3],
            a + s[7],
            a + s[5],
        ]
    }

    pub fn sign_class(&self) -> SignClass {
        let p = self.characteristic_points();
        match p.iter().position(|&v| v >= 0.0) {
            Some(i) => SignClass(i as u8 + 1),
            None => SignClass(10),
        }
    }

    /// Membership cuts at `alpha` and non-membership cuts at `beta`.
    pub fn cuts(&self, alpha: f64, beta: f64) -> Result<Cuts, IvifnError> {
        if !(alpha > 0.0 && alpha <= 1.0 && beta > 0.0 && beta <= 1.0) {
            return Err(IvifnError::OutOfRange(format!(
                "alpha and beta must lie in (0, 1], got {alpha} and {beta}"
            )));
        }
        if alpha + beta > 1.0 + 1e-12 {
            return Err(IvifnError::OutOfRange(format!(
                "alpha + beta must not exceed 1, got {}",
                alpha + beta
            )));
        }
        let s = &self.spreads;
        let sh = &self.shapes;
        let a = self.mean;
        let g = 1.0 - beta;
        Ok(Cuts {
            mu_lower: Interval::new(a - s[0] * sh.left.inverse(alpha), a + s[1] * sh.right.inverse(alpha)),
            mu_upper: Interval::new(
                a - s[2] * sh.left_upper.inverse(alpha),
                a + s[3] * sh.right_upper.inverse(alpha),
            ),
            nu_lower: Interval::new(a - s[4] * sh.left.inverse(g), a + s[5] * sh.right.inverse(g)),
            nu_upper: Interval::new(
                a - s[6] * sh.left_upper.inverse(g),
                a + s[7] * sh.right_upper.inverse(g),
            ),
        })
    }

    /// Lower membership at `x`.
    pub fn mu_lower(&self, x: f64) -> f64 {
        membership(x, self.mean, self.spreads[0], self.spreads[1], &self.shapes.left, &self.shapes.right)
    }

    /// Upper membership at `x`.
    pub fn mu_upper(&self, x: f64) -> f64 {
        membership(
            x,
            self.mean,
            self.spreads[2],
            self.spreads[3],
            &self.shapes.left_upper,
            &self.shapes.right_upper,
        )
    }

    /// Lower non-membership at `x`.
    pub fn nu_lower(&self, x: f64) -> f64 {
        1.0 - membership(x, self.mean, self.spreads[4], self.spreads[5], &self.shapes.left, &self.shapes.right)
    }

    /// Upper non-membership at `x`.
    pub fn nu_upper(&self, x: f64) -> f64 {
        1.0 - membership(
            x,
            self.mean,
            self.spreads[6],
            self.spreads[7],
            &self.shapes.left_upper,
            &self.shapes.right_upper,
        )
    }

    /// Componentwise equality within `tol`, shapes compared exactly.
    pub fn approx_eq(&self, other: &Ivifn, tol: f64) -> bool {
        self.shapes == other.shapes
            && (self.mean - other.mean).abs() <= tol
            && self
                .spreads
                .iter()
                .zip(other.spreads.iter())
                .all(|(a, b)| (a - b).abs() <= tol)
    }
}

/// Parses the tuple form `(a; l, r, l', r'; l, r, l', r')` with linear shapes.
impl std::str::FromStr for Ivifn {
    type Err = IvifnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || IvifnError::OutOfRange(format!("cannot read {s:?} as (a; 4 spreads; 4 spreads)"));
        let body = s.trim().trim_start_matches('(').trim_end_matches(')');
        let parts: Vec<&str> = body.split(';').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let mean: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let mut spreads = Vec::with_capacity(8);
        for part in &parts[1..] {
            for v in part.split(',') {
                spreads.push(v.trim().parse::<f64>().map_err(|_| bad())?);
            }
        }
        let spreads: [f64; 8] = spreads.try_into().map_err(|_| bad())?;
        Ivifn::new(mean, spreads)
    }
}

fn membership(x: f64, a: f64, l: f64, r: f64, left: &ShapeSpec, right: &ShapeSpec) -> f64 {
    if x == a {
        return 1.0;
    }
    if x < a {
        if l == 0.0 || x < a - l {
            return 0.0;
        }
        left.value((a - x) / l)
    } else {
        if r == 0.0 || x > a + r {
            return 0.0;
        }
        right.value((x - a) / r)
    }
}

fn validate_spreads(mean: f64, mut spreads: [f64; 8]) -> Result<[f64; 8], IvifnError> {
    if !mean.is_finite() || spreads.iter().any(|s| !s.is_finite()) {
        return Err(IvifnError::NonFinite);
    }
    let scale = spreads.iter().fold(mean.abs().max(1.0), |m, s| m.max(s.abs()));
    let tol = VALIDATION_TOL * scale;
    for s in Spread::ALL {
        let v = spreads[s.index()];
        if v < -tol {
            return Err(IvifnError::SpreadNegative { spread: s, value: v });
        }
        if v < 0.0 {
            spreads[s.index()] = 0.0;
        }
    }
    for (larger, smaller) in NESTING {
        let lv = spreads[larger.index()];
        let sv = spreads[smaller.index()];
        if lv < sv - tol {
            return Err(IvifnError::NestingViolated {
                larger,
                smaller,
                larger_value: lv,
                smaller_value: sv,
            });
        }
    }
    Ok(spreads)
}

impl fmt::Display for Ivifn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.spreads;
        match f.precision() {
            Some(p) => write!(
                f,
                "({:.p$}; {:.p$}, {:.p$}, {:.p$}, {:.p$}; {:.p$}, {:.p$}, {:.p$}, {:.p$})",
                self.mean, s[0], s[1], s[2], s[3], s[4], s[5], s[6], s[7]
            ),
            None => write!(
                f,
                "({}; {}, {}, {}, {}; {}, {}, {}, {})",
                self.mean, s[0], s[1], s[2], s[3], s[4], s[5], s[6], s[7]
            ),
        }
    }
}
