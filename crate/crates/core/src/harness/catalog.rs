//! Built-in problems, keyed by id, plus the small coefficient catalog used by
//! `solve-pde` configs.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdspace::{Coefficients, PdeProblem, SpaceFn, SpaceTimeFn};
use crate::l1op::{caputo_power, check_alpha};
use crate::ode::ScalarProblem;
use crate::quasilinear::{Diffusion, QuasilinearProblem, Reaction};
use crate::schemes::{Interval, Nonlinearity, SchemeDescriptor, SchemeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemId {
    /// `d_t^alpha u = g(t)`, `u = t^sigma`.
    TestA,
    /// `d_t^alpha u - u_xx + u^3 - u = g` on `(0, pi)`, `u = t^sigma sin(x^2/pi)`.
    TestB,
    /// `d_t^alpha u - ((1+u) u_x)_x + u(1-u) = 0` on `(0, 1)`, `u0 = x(1-x)`.
    FisherKolmogorov,
}

impl ProblemId {
    pub const ALL: [ProblemId; 3] = [ProblemId::TestA, ProblemId::TestB, ProblemId::FisherKolmogorov];

    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemId::TestA => "test-a",
            ProblemId::TestB => "test-b",
            ProblemId::FisherKolmogorov => "fisher-kolmogorov",
        }
    }

    pub fn has_exact_solution(&self) -> bool {
        !matches!(self, ProblemId::FisherKolmogorov)
    }

    pub fn is_spatial(&self) -> bool {
        !matches!(self, ProblemId::TestA)
    }

    pub fn domain(&self) -> (f64, f64) {
        match self {
            ProblemId::TestA => (0.0, 0.0),
            ProblemId::TestB => (0.0, PI),
            ProblemId::FisherKolmogorov => (0.0, 1.0),
        }
    }

    /// Regularity exponent of the solution near `t = 0`.
    pub fn default_sigma(&self, alpha: f64) -> f64 {
        match self {
            ProblemId::TestA => 0.8,
            ProblemId::TestB | ProblemId::FisherKolmogorov => alpha,
        }
    }

    /// The grading `(2 - alpha)/sigma` that yields the optimal global rate.
    pub fn default_grading(&self, alpha: f64, sigma: f64) -> f64 {
        ((2.0 - alpha) / sigma).max(1.0)
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemId::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown problem id `{s}`")))
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("sigma = {sigma} must be positive")))
    }
}

/// Test A. The scheme kind is irrelevant for `f = 0` but is honoured.
pub fn test_a(alpha: f64, sigma: f64, kind: SchemeKind) -> Result<ScalarProblem> {
    check_alpha(alpha)?;
    check_sigma(sigma)?;
    let range = Interval::new(-0.5, 1.5)?;
    let scheme = match kind {
        SchemeKind::StabilizedImex => SchemeDescriptor::stabilized(Nonlinearity::zero(), range, None)?,
        k => SchemeDescriptor::new(k, Nonlinearity::zero(), range)?,
    };
    ScalarProblem::new(alpha, scheme, move |t| caputo_power(alpha, sigma, t).unwrap_or(f64::NAN), 0.0, 1.0)?
        .with_exact(move |t| t.powf(sigma))
}

pub fn test_b_exact(sigma: f64) -> impl Fn(f64, f64) -> f64 + Send + Sync + Clone + 'static {
    move |x, t| t.powf(sigma) * (x * x / PI).sin()
}

/// Test B with `f(u) = u^3 - u` discretized by `kind`.
pub fn test_b(alpha: f64, sigma: f64, kind: SchemeKind, stabilization: Option<f64>) -> Result<PdeProblem> {
    check_alpha(alpha)?;
    check_sigma(sigma)?;
    let c = caputo_power(alpha, sigma, 1.0)?;
    let source = move |x: f64, t: f64| {
        let s = (x * x / PI).sin();
        let ts = t.powf(sigma);
        let u = ts * s;
        let uxx = ts * ((2.0 / PI) * (x * x / PI).cos() - 4.0 * x * x / (PI * PI) * s);
        let dt = if t == 0.0 { 0.0 } else { c * t.powf(sigma - alpha) * s };
        dt - uxx + u * u * u - u
    };
    let range = Interval::new(-1.5, 1.5)?;
    let f = Nonlinearity::allen_cahn();
    let scheme = match kind {
        SchemeKind::StabilizedImex => SchemeDescriptor::stabilized(f, range, stabilization)?,
        k => SchemeDescriptor::new(k, f, range)?,
    };
    Ok(PdeProblem {
        alpha,
        coeffs: Coefficients::laplacian(),
        scheme,
        source: Arc::new(source),
        u0: Arc::new(|_| 0.0),
        horizon: 1.0,
        exact: Some(Arc::new(test_b_exact(sigma))),
    })
}

/// Test C: `a(u) = 1 + u`, `f(u) = u(1 - u)`, `b = 0`, `u0 = x(1 - x)`.
pub fn fisher_kolmogorov(alpha: f64) -> Result<QuasilinearProblem> {
    check_alpha(alpha)?;
    let range = Interval::new(-0.5, 1.0)?;
    Ok(QuasilinearProblem {
        alpha,
        diffusion: Diffusion::affine(1.0, 1.0, range)?,
        convection: None,
        reaction: Reaction::autonomous(Nonlinearity::logistic(), range),
        u0: Arc::new(|x| x * (1.0 - x)),
        horizon: 1.0,
        gradient_bound: Some(1.0),
    })
}

/// Coefficient `c0 + c1 x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefficientSpec {
    Constant(f64),
    Affine { c0: f64, c1: f64 },
}

impl CoefficientSpec {
    pub fn build(&self) -> SpaceTimeFn {
        let (c0, c1) = match *self {
            CoefficientSpec::Constant(c) => (c, 0.0),
            CoefficientSpec::Affine { c0, c1 } => (c0, c1),
        };
        Arc::new(move |x, _| c0 + c1 * x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonlinearitySpec {
    Zero,
    Cubic,
    AllenCahn,
    Logistic,
    Linear(f64),
}

impl NonlinearitySpec {
    pub fn build(&self) -> Nonlinearity {
        match *self {
            NonlinearitySpec::Zero => Nonlinearity::zero(),
            NonlinearitySpec::Cubic => Nonlinearity::cubic(),
            NonlinearitySpec::AllenCahn => Nonlinearity::allen_cahn(),
            NonlinearitySpec::Logistic => Nonlinearity::logistic(),
            NonlinearitySpec::Linear(c) => Nonlinearity::linear(c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceSpec {
    Zero,
    Constant(f64),
}

impl SourceSpec {
    pub fn build(&self) -> SpaceTimeFn {
        let c = match *self {
            SourceSpec::Zero => 0.0,
            SourceSpec::Constant(c) => c,
        };
        Arc::new(move |_, _| c)
    }
}

/// Initial data vanishing at both ends of `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialSpec {
    Zero,
    /// `sin(pi (x - lo)/(hi - lo))`
    Sine,
    /// `(x - lo)(hi - x)`
    Parabola,
}

impl InitialSpec {
    pub fn build(&self, lo: f64, hi: f64) -> SpaceFn {
        match *self {
            InitialSpec::Zero => Arc::new(|_| 0.0),
            InitialSpec::Sine => Arc::new(move |x| (PI * (x - lo) / (hi - lo)).sin()),
            InitialSpec::Parabola => Arc::new(move |x| (x - lo) * (hi - x)),
        }
    }
}
