//! Discretizations `F(U^m, U^{m-1})` of the semilinear term `f(u)`.
//!
//! Every scheme carries the constants of the consistency bound
//! `|F(v,w) - f(v)| <= L |v - w|^q` and of the one-sided Lipschitz condition
//! (`F(v,w) + lambda0 v` nondecreasing in `v`, `|dF/dw| <= lambda1`). The
//! constants are computed over a declared, bounded solution range.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Closed interval `[lo, hi]` of solution values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(Error::InvalidParameter(format!(
                "solution range [{lo}, {hi}] must be bounded and non-degenerate"
            )))
        }
    }

    pub fn diam(&self) -> f64 {
        self.hi - self.lo
    }

    /// `n >= 2` equispaced points including both ends.
    pub fn grid(&self, n: usize) -> impl Iterator<Item = f64> + '_ {
        let n = n.max(2);
        let h = self.diam() / (n - 1) as f64;
        (0..n).map(move |i| if i + 1 == n { self.hi } else { self.lo + i as f64 * h })
    }
}

/// Splitting `f = f_c + f_e` into an implicitly treated part `f_c` and an
/// explicitly treated part `f_e`.
#[derive(Clone)]
pub struct Splitting {
    pub implicit: ScalarFn,
    pub implicit_derivative: ScalarFn,
    pub explicit: ScalarFn,
    pub explicit_derivative: ScalarFn,
}

/// Scalar nonlinearity `u -> f(u)` with optional derivatives.
#[derive(Clone)]
pub struct Nonlinearity {
    name: String,
    f: ScalarFn,
    df: Option<ScalarFn>,
    d2f: Option<ScalarFn>,
    splitting: Option<Splitting>,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("name", &self.name)
            .field("has_df", &self.df.is_some())
            .field("has_d2f", &self.d2f.is_some())
            .field("has_splitting", &self.splitting.is_some())
            .finish()
    }
}

impl Nonlinearity {
    pub fn new(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
            df: None,
            d2f: None,
            splitting: None,
        }
    }

    pub fn with_derivative(mut self, df: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.df = Some(Arc::new(df));
        self
    }

    pub fn with_second_derivative(
        mut self,
        d2f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.d2f = Some(Arc::new(d2f));
        self
    }

    pub fn with_splitting(mut self, splitting: Splitting) -> Self {
        self.splitting = Some(splitting);
        self
    }

    /// `f = 0`.
    pub fn zero() -> Self {
        Self::new("zero", |_| 0.0)
            .with_derivative(|_| 0.0)
            .with_second_derivative(|_| 0.0)
    }

    /// `f(u) = c u`.
    pub fn linear(c: f64) -> Self {
        Self::new("linear", move |u| c * u)
            .with_derivative(move |_| c)
            .with_second_derivative(|_| 0.0)
    }

    /// `f(u) = u^3`.
    pub fn cubic() -> Self {
        Self::new("cubic", |u| u * u * u)
            .with_derivative(|u| 3.0 * u * u)
            .with_second_derivative(|u| 6.0 * u)
    }

    /// Allen-Cahn nonlinearity `f(u) = u^3 - u`, split as `v^3 | -w`.
    pub fn allen_cahn() -> Self {
        Self::new("allen-cahn", |u| u * u * u - u)
            .with_derivative(|u| 3.0 * u * u - 1.0)
            .with_second_derivative(|u| 6.0 * u)
            .with_splitting(Splitting {
                implicit: Arc::new(|v| v * v * v),
                implicit_derivative: Arc::new(|v| 3.0 * v * v),
                explicit: Arc::new(|w| -w),
                explicit_derivative: Arc::new(|_| -1.0),
            })
    }

    /// `f(u) = u (1 - u)`.
    pub fn logistic() -> Self {
        Self::new("logistic", |u| u * (1.0 - u))
            .with_derivative(|u| 1.0 - 2.0 * u)
            .with_second_derivative(|_| -2.0)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        (self.f)(u)
    }

    pub fn has_derivative(&self) -> bool {
        self.df.is_some()
    }

    /// `f'(u)`, by central differences when no derivative was supplied.
    pub fn derivative(&self, u: f64) -> f64 {
        match &self.df {
            Some(df) => df(u),
            None => {
                let h = 1e-6 * (1.0 + u.abs());
                (self.value(u + h) - self.value(u - h)) / (2.0 * h)
            }
        }
    }

    /// `f''(u)`, by differences of `f'` when not supplied.
    pub fn second_derivative(&self, u: f64) -> f64 {
        match &self.d2f {
            Some(d2f) => d2f(u),
            None => {
                let h = 1e-4 * (1.0 + u.abs());
                (self.derivative(u + h) - self.derivative(u - h)) / (2.0 * h)
            }
        }
    }

    pub fn splitting(&self) -> Option<&Splitting> {
        self.splitting.as_ref()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    /// `F(v,w) = f(v)`
    Implicit,
    /// `F(v,w) = f_c(v) + f_e(w)`
    ConvexSplitting,
    /// `F(v,w) = f(w)`
    #[serde(rename = "imex1")]
    Imex1,
    /// `F(v,w) = f(w) + (v - w) f'(w)`
    #[serde(rename = "imex2")]
    Imex2Newton,
    /// `F(v,w) = f(w) + S (v - w)`
    #[serde(rename = "stabilized")]
    StabilizedImex,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 5] = [
        SchemeKind::Implicit,
        SchemeKind::ConvexSplitting,
        SchemeKind::Imex1,
        SchemeKind::Imex2Newton,
        SchemeKind::StabilizedImex,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeKind::Implicit => "implicit",
            SchemeKind::ConvexSplitting => "convex-splitting",
            SchemeKind::Imex1 => "imex1",
            SchemeKind::Imex2Newton => "imex2",
            SchemeKind::StabilizedImex => "stabilized",
        }
    }

    /// Schemes whose `F(., w)` is affine, so each step is a linear solve.
    pub fn is_linear_in_current(&self) -> bool {
        matches!(
            self,
            SchemeKind::Imex1 | SchemeKind::Imex2Newton | SchemeKind::StabilizedImex
        )
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown scheme `{s}` (expected implicit, convex-splitting, imex1, imex2 or stabilized)"
                ))
            })
    }
}

/// A semilinear-term discretization together with its constants.
#[derive(Debug, Clone)]
pub struct SchemeDescriptor {
    pub kind: SchemeKind,
    pub f: Nonlinearity,
    /// Consistency order `q`.
    pub q: u32,
    /// Consistency constant `L`.
    pub l: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    /// Stabilization parameter (zero unless the kind is stabilized).
    pub s: f64,
    pub range: Interval,
}

const SUP_GRID: usize = 4097;

impl SchemeDescriptor {
    /// Builds the scheme and computes its constants over `range`.
    ///
    /// Stabilized schemes use `S = sup |f'|` over the range; see
    /// [`SchemeDescriptor::stabilized`] to pick `S` explicitly.
    pub fn new(kind: SchemeKind, f: Nonlinearity, range: Interval) -> Result<Self> {
        match kind {
            SchemeKind::StabilizedImex => Self::stabilized(f, range, None),
            _ => Self::build(kind, f, range, 0.0),
        }
    }

    pub fn stabilized(f: Nonlinearity, range: Interval, s: Option<f64>) -> Result<Self> {
        let s = match s {
            Some(s) if s >= 0.0 && s.is_finite() => s,
            Some(s) => {
                return Err(Error::InvalidParameter(format!(
                    "stabilization S = {s} must be non-negative"
                )))
            }
            None => sup_on(range, |u| f.derivative(u).abs()),
        };
        Self::build(SchemeKind::StabilizedImex, f, range, s)
    }

    fn build(kind: SchemeKind, f: Nonlinearity, range: Interval, s: f64) -> Result<Self> {
        let sup_neg_df = || sup_on(range, |u| -f.derivative(u)).max(0.0);
        let sup_abs_df = || sup_on(range, |u| f.derivative(u).abs());
        let (q, l, lambda0, lambda1) = match kind {
            SchemeKind::Implicit => (2, 0.0, sup_neg_df(), 0.0),
            SchemeKind::ConvexSplitting => {
                let split = f.splitting().ok_or(Error::MissingDerivative {
                    scheme: "convex-splitting",
                    what: "a convex/concave splitting",
                })?;
                let l = sup_on(range, |u| (split.explicit_derivative)(u).abs());
                let lambda0 = sup_on(range, |u| -(split.implicit_derivative)(u)).max(0.0);
                (1, l, lambda0, l)
            }
            SchemeKind::Imex1 => {
                let l = sup_abs_df();
                (1, l, 0.0, l)
            }
            SchemeKind::Imex2Newton => {
                if !f.has_derivative() {
                    return Err(Error::MissingDerivative {
                        scheme: "imex2",
                        what: "f'",
                    });
                }
                let l = 0.5 * sup_on(range, |u| f.second_derivative(u).abs());
                let lambda1 = 2.0 * sup_abs_df() + 2.0 * l * range.diam();
                (2, l, sup_neg_df(), lambda1)
            }
            SchemeKind::StabilizedImex => {
                // F - f(v) = (v - w)(S - f'(xi)) and dF/dw = f'(w) - S
                let l = sup_on(range, |u| (s - f.derivative(u)).abs());
                (1, l, 0.0, l)
            }
        };
        Ok(Self {
            kind,
            f,
            q,
            l,
            lambda0,
            lambda1,
            s,
            range,
        })
    }

    /// `F(v, w)`.
    #[inline]
    pub fn eval(&self, v: f64, w: f64) -> f64 {
        match self.kind {
            SchemeKind::Implicit => self.f.value(v),
            SchemeKind::ConvexSplitting => {
                let split = self.f.splitting().expect("checked at construction");
                (split.implicit)(v) + (split.explicit)(w)
            }
            SchemeKind::Imex1 => self.f.value(w),
            SchemeKind::Imex2Newton => self.f.value(w) + (v - w) * self.f.derivative(w),
            SchemeKind::StabilizedImex => self.f.value(w) + self.s * (v - w),
        }
    }

    /// `dF/dv (v, w)`.
    #[inline]
    pub fn d_current(&self, v: f64, w: f64) -> f64 {
        match self.kind {
            SchemeKind::Implicit => self.f.derivative(v),
            SchemeKind::ConvexSplitting => {
                let split = self.f.splitting().expect("checked at construction");
                (split.implicit_derivative)(v)
            }
            SchemeKind::Imex1 => 0.0,
            SchemeKind::Imex2Newton => self.f.derivative(w),
            SchemeKind::StabilizedImex => self.s,
        }
    }

    /// For schemes affine in `v`, returns `(c, b)` with `F(v, w) = c + b v`.
    pub fn affine_parts(&self, w: f64) -> Option<(f64, f64)> {
        match self.kind {
            SchemeKind::Imex1 => Some((self.f.value(w), 0.0)),
            SchemeKind::Imex2Newton => {
                let d = self.f.derivative(w);
                Some((self.f.value(w) - w * d, d))
            }
            SchemeKind::StabilizedImex => Some((self.f.value(w) - self.s * w, self.s)),
            _ => None,
        }
    }
}

/// `sup` of `g` over the interval: grid search refined by golden-section
/// search around the best grid point.
pub fn sup_on(range: Interval, g: impl Fn(f64) -> f64) -> f64 {
    let h = range.diam() / (SUP_GRID - 1) as f64;
    let (mut best_x, mut best) = (range.lo, f64::NEG_INFINITY);
    for x in range.grid(SUP_GRID) {
        let v = g(x);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    let (mut a, mut b) = ((best_x - h).max(range.lo), (best_x + h).min(range.hi));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        let (gc, gd) = (g(c), g(d));
        best = best.max(gc).max(gd);
        if gc > gd {
            b = d;
        } else {
            a = c;
        }
    }
    best
}

/// Empirical consistency constant `max |F(v,w) - f(v)| / |v - w|^q` over an
/// `n`-point sample of pairs from `range`.
pub fn check_a1(scheme: &SchemeDescriptor, range: Interval, n_samples: usize) -> f64 {
    let side = (n_samples as f64).sqrt().ceil() as usize;
    let pts: Vec<f64> = range.grid(side).collect();
    let mut worst = 0.0_f64;
    for &v in &pts {
        for &w in &pts {
            let gap = (v - w).abs();
            if gap == 0.0 {
                continue;
            }
            let r = (scheme.eval(v, w) - scheme.f.value(v)).abs() / gap.powi(scheme.q as i32);
            worst = worst.max(r);
        }
    }
    worst
}

/// Finite-difference probes of the one-sided Lipschitz condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct A2Report {
    /// `min (F(v + nu, w) - F(v, w)) / nu`; monotonicity needs `>= -lambda0`.
    pub min_slope_current: f64,
    /// `max |F(v, w + omega) - F(v, w)| / |omega|`; must stay `<= lambda1`.
    pub max_lipschitz_previous: f64,
}

pub fn check_a2(scheme: &SchemeDescriptor, range: Interval, n_samples: usize) -> A2Report {
    let side = (n_samples as f64).sqrt().ceil() as usize;
    let pts: Vec<f64> = range.grid(side).collect();
    let mut min_slope = f64::INFINITY;
    let mut max_lip = 0.0_f64;
    for &w in &pts {
        for v in pts.windows(2) {
            let s = (scheme.eval(v[1], w) - scheme.eval(v[0], w)) / (v[1] - v[0]);
            min_slope = min_slope.min(s);
        }
    }
    for &v in &pts {
        for w in pts.windows(2) {
            let s = (scheme.eval(v, w[1]) - scheme.eval(v, w[0])).abs() / (w[1] - w[0]);
            max_lip = max_lip.max(s);
        }
    }
    A2Report {
        min_slope_current: min_slope,
        max_lipschitz_previous: max_lip,
    }
}
