//! Scalar fractional ODE `d_t^alpha u + f(u) = g(t)` discretized by
//! `delta_t^alpha U^m + F(U^m, U^{m-1}) = g(t_m)`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::l1op::{check_alpha, increment_weights_into, kappa_self};
use crate::mesh::TemporalMesh;
use crate::numerics::gamma;
use crate::schemes::SchemeDescriptor;

pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const BRACKET_EXPANSIONS: usize = 200;
const BISECTION_WIDTH: f64 = 1e-8;
const RESIDUAL_RTOL: f64 = 1e-12;

#[derive(Clone)]
pub struct ScalarProblem {
    pub alpha: f64,
    pub scheme: SchemeDescriptor,
    pub source: TimeFn,
    pub u0: f64,
    pub horizon: f64,
    pub exact: Option<TimeFn>,
}

impl std::fmt::Debug for ScalarProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarProblem")
            .field("alpha", &self.alpha)
            .field("scheme", &self.scheme.kind)
            .field("u0", &self.u0)
            .field("horizon", &self.horizon)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl ScalarProblem {
    pub fn new(
        alpha: f64,
        scheme: SchemeDescriptor,
        source: impl Fn(f64) -> f64 + Send + Sync + 'static,
        u0: f64,
        horizon: f64,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        if !(horizon > 0.0) {
            return Err(Error::InvalidParameter(format!("horizon {horizon} must be positive")));
        }
        Ok(Self {
            alpha,
            scheme,
            source: Arc::new(source),
            u0,
            horizon,
            exact: None,
        })
    }

    pub fn with_exact(mut self, exact: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let e0 = exact(0.0);
        if (e0 - self.u0).abs() > 1e-12 * (1.0 + self.u0.abs()) {
            return Err(Error::InvalidParameter(format!(
                "exact solution at t = 0 is {e0}, but u0 = {}",
                self.u0
            )));
        }
        self.exact = Some(Arc::new(exact));
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub mesh: TemporalMesh,
    pub values: Vec<f64>,
}

impl Trajectory {
    /// `|u(t_m) - U^m|` for `m = 0..=M`.
    pub fn errors(&self, exact: &dyn Fn(f64) -> f64) -> Vec<f64> {
        self.mesh
            .points()
            .iter()
            .zip(&self.values)
            .map(|(&t, &u)| (exact(t) - u).abs())
            .collect()
    }
}

/// `lambda0 tau_j^alpha < 1/Gamma(2-alpha)` for every step, i.e. `lambda0 < kappa_{j,j}`.
pub fn step_condition_ok(mesh: &TemporalMesh, alpha: f64, lambda0: f64) -> bool {
    if lambda0 <= 0.0 {
        return true;
    }
    let bound = 1.0 / gamma(2.0 - alpha);
    (1..=mesh.steps()).all(|j| lambda0 * mesh.tau(j).powf(alpha) < bound)
}

fn first_violation(mesh: &TemporalMesh, alpha: f64, lambda: f64) -> Option<(usize, f64)> {
    if lambda <= 0.0 {
        return None;
    }
    (1..=mesh.steps())
        .map(|j| (j, kappa_self(mesh, alpha, j)))
        .find(|&(_, k)| k <= lambda)
}

/// Solves `kappa_mm U + F(U, w) = rhs` for `U`.
///
/// `G(U) = (kappa_mm - lambda0) U + {F(U, w) + lambda0 U}` is continuous and
/// strictly increasing, so the root is bracketed by geometric expansion around
/// `w`, narrowed by bisection and polished by safeguarded Newton steps.
pub fn solve_step_scalar(
    kappa_mm: f64,
    lambda0: f64,
    scheme: &SchemeDescriptor,
    w: f64,
    rhs: f64,
) -> Result<f64> {
    if !(kappa_mm > lambda0) {
        return Err(Error::StepCondition {
            step: 0,
            kappa_mm,
            lambda: lambda0,
        });
    }
    if let Some((c, b)) = scheme.affine_parts(w) {
        return Ok((rhs - c) / (kappa_mm + b));
    }
    let g = |u: f64| kappa_mm * u + scheme.eval(u, w) - rhs;
    let tol = RESIDUAL_RTOL * (1.0 + rhs.abs());

    let start = if w.is_finite() { w } else { 0.0 };
    let g0 = g(start);
    if g0 == 0.0 {
        return Ok(start);
    }
    let mut step = 1e-3 * (1.0 + start.abs());
    let (mut lo, mut hi);
    let mut expansions = 0;
    if g0 < 0.0 {
        lo = start;
        hi = start + step;
        while g(hi) < 0.0 {
            lo = hi;
            step *= 2.0;
            hi = start + step;
            expansions += 1;
            if expansions >= BRACKET_EXPANSIONS {
                return Err(Error::BracketFailure(expansions));
            }
        }
    } else {
        hi = start;
        lo = start - step;
        while g(lo) > 0.0 {
            hi = lo;
            step *= 2.0;
            lo = start - step;
            expansions += 1;
            if expansions >= BRACKET_EXPANSIONS {
                return Err(Error::BracketFailure(expansions));
            }
        }
    }

    while hi - lo > BISECTION_WIDTH * (1.0 + lo.abs().max(hi.abs())) {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    // Newton polish inside the bracket
    let mut u = 0.5 * (lo + hi);
    for _ in 0..50 {
        let r = g(u);
        if r.abs() <= tol {
            return Ok(u);
        }
        if r < 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let d = kappa_mm + scheme.d_current(u, w);
        let mut next = u - r / d;
        if !(next > lo && next < hi) || !d.is_finite() || d <= 0.0 {
            next = 0.5 * (lo + hi);
        }
        if next == u {
            break;
        }
        u = next;
    }
    // bisection to machine resolution
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if g(lo).abs() <= g(hi).abs() { lo } else { hi })
}

/// Marches the scheme over `mesh`.
pub fn solve_ode(problem: &ScalarProblem, mesh: &TemporalMesh) -> Result<Trajectory> {
    let alpha = problem.alpha;
    let lambda0 = problem.scheme.lambda0;
    if let Some((step, kappa_mm)) = first_violation(mesh, alpha, lambda0) {
        return Err(Error::StepCondition {
            step,
            kappa_mm,
            lambda: lambda0,
        });
    }
    let m_max = mesh.steps();
    let mut values = Vec::with_capacity(m_max + 1);
    values.push(problem.u0);
    let mut increments: Vec<f64> = Vec::with_capacity(m_max);
    let mut weights = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        increment_weights_into(mesh, alpha, m, &mut weights);
        let kappa_mm = weights[m - 1];
        let prev = values[m - 1];
        let history = history_sum(kappa_mm, prev, &weights, &increments);
        let rhs = history + (problem.source)(mesh.t(m));
        let u = solve_step_scalar(kappa_mm, lambda0, &problem.scheme, prev, rhs).map_err(|e| match e {
            Error::StepCondition { kappa_mm, lambda, .. } => Error::StepCondition {
                step: m,
                kappa_mm,
                lambda,
            },
            other => other,
        })?;
        increments.push(u - prev);
        values.push(u);
    }
    Ok(Trajectory {
        mesh: mesh.clone(),
        values,
    })
}

/// `sum_{j<m} kappa_{m,j} U^j`, evaluated as
/// `kappa_mm U^{m-1} - sum_{j<m} w_{m,j} (U^j - U^{j-1})`.
#[inline]
fn history_sum(kappa_mm: f64, prev: f64, weights: &[f64], increments: &[f64]) -> f64 {
    let past: f64 = weights.iter().zip(increments).map(|(w, d)| w * d).sum();
    kappa_mm * prev - past
}

/// Solves the linear barrier problem
/// `(delta_t^alpha - lambda0) V^j - lambda1 V^{j-1} = rhs(j)`, `V^0 = v0`.
pub fn solve_barrier(
    mesh: &TemporalMesh,
    alpha: f64,
    lambda0: f64,
    lambda1: f64,
    v0: f64,
    rhs: impl Fn(usize) -> f64,
) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    if let Some((step, kappa_mm)) = first_violation(mesh, alpha, lambda0) {
        return Err(Error::StepCondition {
            step,
            kappa_mm,
            lambda: lambda0,
        });
    }
    let m_max = mesh.steps();
    let mut v = Vec::with_capacity(m_max + 1);
    v.push(v0);
    let mut increments = Vec::with_capacity(m_max);
    let mut weights = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        increment_weights_into(mesh, alpha, m, &mut weights);
        let kappa_mm = weights[m - 1];
        let prev = v[m - 1];
        let s = history_sum(kappa_mm, prev, &weights, &increments) + lambda1 * prev + rhs(m);
        let next = s / (kappa_mm - lambda0);
        increments.push(next - prev);
        v.push(next);
    }
    Ok(v)
}

/// Majorant `ell_gamma tau t_j^{alpha-1} (tau/t_j)^{min(0, gamma)}` of the
/// barrier problem with right-hand side `(tau/t_j)^{gamma+1}`.
pub fn stability_majorant(mesh: &TemporalMesh, alpha: f64, gamma_exp: f64, j: usize) -> f64 {
    let tau = mesh.t(1);
    let t = mesh.t(j);
    let ell = if gamma_exp == 0.0 { 1.0 + (t / tau).ln() } else { 1.0 };
    ell * tau * t.powf(alpha - 1.0) * (tau / t).powf(gamma_exp.min(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundVariant {
    /// Bound for schemes with `q = 2`.
    E,
    /// Bound including the first-order term of `q = 1` schemes.
    ETilde,
}

/// Pointwise-in-time error bound for a solution with initial singularity `t^sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBound {
    pub alpha: f64,
    pub sigma: f64,
    pub r: f64,
    pub steps: usize,
}

impl ErrorBound {
    pub fn nu(&self) -> f64 {
        1.0 + self.sigma - self.alpha
    }

    /// Grading `(2 - alpha)/nu` separating the three regimes.
    pub fn critical_grading(&self) -> f64 {
        (2.0 - self.alpha) / self.nu()
    }

    /// Evaluates the bound at `t_m`; `t_1` enters the logarithmic factor of
    /// the critical regime.
    pub fn eval(&self, t_m: f64, t_1: f64, variant: BoundVariant) -> f64 {
        let (a, s, r) = (self.alpha, self.sigma, self.r);
        let m = self.steps as f64;
        let crit = self.critical_grading();
        let e = if (r - crit).abs() <= 1e-12 * crit {
            m.powf(-(2.0 - a)) * t_m.powf(a - 1.0) * (1.0 + (t_m / t_1).ln())
        } else if r < crit {
            m.powf(-self.nu() * r) * t_m.powf(a - 1.0)
        } else {
            m.powf(-(2.0 - a)) * t_m.powf(s - (2.0 - a) / r)
        };
        match variant {
            BoundVariant::E => e,
            BoundVariant::ETilde => e + m.recip() * t_m.powf(s.min(1.0) + a - 1.0 / r),
        }
    }
}

/// Free-function form of [`ErrorBound::eval`].
pub fn theoretical_bound(
    alpha: f64,
    sigma: f64,
    r: f64,
    steps: usize,
    t_m: f64,
    t_1: f64,
    variant: BoundVariant,
) -> f64 {
    ErrorBound {
        alpha,
        sigma,
        r,
        steps,
    }
    .eval(t_m, t_1, variant)
}
