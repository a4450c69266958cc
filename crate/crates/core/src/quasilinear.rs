//! Fully implicit L1 stepper for `d_t^alpha u - (a(u) u_x + b(x,t,u))_x + f(x,t,u) = 0`.
//!
//! Each step is the fixed point `v -> w` of
//!
//! ```text
//! -D_h^2 A(w) + kappa_mm w + f(., t_m, w) = D_h b(., t_m, v) + S
//! ```
//!
//! with the Kirchhoff transform `A(w) = int_0^w a`, the standard second
//! difference `D_h^2`, the centered first difference `D_h` and the history
//! `S = sum_{j<m} kappa_{m,j} U^j`. The inner semilinear problem is solved by
//! Newton's method in the variables `W = A(w)`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fdspace::{check_step_condition, SpaceFn, SpaceTimeTrajectory, SpatialGrid, VectorHistory};
use crate::l1op::check_alpha;
use crate::mesh::TemporalMesh;
use crate::numerics::max_abs;
use crate::schemes::{sup_on, Interval, ScalarFn};
use crate::tridiag::Tridiagonal;

pub type StateFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

const OUTER_TOL: f64 = 1e-10;
const OUTER_MAX_ITERS: usize = 100;
const STALL_LIMIT: usize = 5;
const NEWTON_MAX_ITERS: usize = 50;
const NEWTON_RTOL: f64 = 1e-11;

#[derive(Clone)]
enum Inverse {
    Analytic(Arc<dyn Fn(f64) -> Option<f64> + Send + Sync>),
    Bisection,
}

/// Diffusion coefficient `a(u)` with its Kirchhoff transform.
#[derive(Clone)]
pub struct Diffusion {
    a: ScalarFn,
    da: Option<ScalarFn>,
    kirchhoff: ScalarFn,
    inverse: Inverse,
    range: Interval,
}

impl std::fmt::Debug for Diffusion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Diffusion").field("range", &self.range).finish()
    }
}

impl Diffusion {
    /// `a = a0`.
    pub fn constant(a0: f64, range: Interval) -> Result<Self> {
        Self::affine(a0, 0.0, range)
    }

    /// `a(u) = a0 + a1 u`, `A(w) = a0 w + a1 w^2 / 2`.
    pub fn affine(a0: f64, a1: f64, range: Interval) -> Result<Self> {
        let d = Self {
            a: Arc::new(move |u| a0 + a1 * u),
            da: Some(Arc::new(move |_| a1)),
            kirchhoff: Arc::new(move |w| w * (a0 + 0.5 * a1 * w)),
            inverse: Inverse::Analytic(Arc::new(move |big_w: f64| {
                // root of a1/2 w^2 + a0 w - W on the branch through 0
                let disc = a0 * a0 + 2.0 * a1 * big_w;
                if disc < 0.0 {
                    return None;
                }
                let s = disc.sqrt();
                let den = a0 + s;
                if den > 0.0 {
                    Some(2.0 * big_w / den)
                } else {
                    None
                }
            })),
            range,
        };
        d.validate()?;
        Ok(d)
    }

    /// General `a(u)`: `A` by Gauss-Legendre quadrature, `A^{-1}` by monotone bisection
    /// inside the declared range.
    pub fn from_fn(a: impl Fn(f64) -> f64 + Send + Sync + 'static, range: Interval) -> Result<Self> {
        let a: ScalarFn = Arc::new(a);
        let a_q = a.clone();
        let d = Self {
            a,
            da: None,
            kirchhoff: Arc::new(move |w| integrate(&*a_q, 0.0, w)),
            inverse: Inverse::Bisection,
            range,
        };
        d.validate()?;
        Ok(d)
    }

    fn validate(&self) -> Result<()> {
        if self.lower_bound() > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "diffusion coefficient must be bounded below by a positive constant on [{}, {}]",
                self.range.lo, self.range.hi
            )))
        }
    }

    #[inline]
    pub fn a(&self, u: f64) -> f64 {
        (self.a)(u)
    }

    /// `c_a = min a` over the declared range.
    pub fn lower_bound(&self) -> f64 {
        -sup_on(self.range, |u| -self.a(u))
    }

    /// `max a` over the declared range.
    pub fn upper_bound(&self) -> f64 {
        sup_on(self.range, |u| self.a(u))
    }

    /// Lipschitz constant `C_a` of `a` over the declared range.
    pub fn lipschitz(&self) -> f64 {
        match &self.da {
            Some(da) => sup_on(self.range, |u| da(u).abs()),
            None => {
                let h = 1e-6 * self.range.diam();
                sup_on(self.range, |u| ((self.a(u + h) - self.a(u - h)) / (2.0 * h)).abs())
            }
        }
    }

    pub fn range(&self) -> Interval {
        self.range
    }

    /// `A(w)`.
    #[inline]
    pub fn kirchhoff(&self, w: f64) -> f64 {
        (self.kirchhoff)(w)
    }

    /// `A^{-1}(W)`.
    pub fn kirchhoff_inverse(&self, big_w: f64) -> Result<f64> {
        match &self.inverse {
            Inverse::Analytic(inv) => inv(big_w).ok_or(Error::OutOfRange { value: big_w }),
            Inverse::Bisection => {
                let (mut lo, mut hi) = (self.range.lo, self.range.hi);
                let (alo, ahi) = (self.kirchhoff(lo), self.kirchhoff(hi));
                if !(big_w >= alo && big_w <= ahi) {
                    return Err(Error::OutOfRange { value: big_w });
                }
                loop {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.kirchhoff(mid) < big_w {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok(0.5 * (lo + hi))
            }
        }
    }
}

/// Composite 8-point Gauss-Legendre quadrature.
fn integrate(f: &(dyn Fn(f64) -> f64 + Send + Sync), a: f64, b: f64) -> f64 {
    const X: [f64; 4] = [
        0.183_434_642_495_649_8,
        0.525_532_409_916_329,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_3,
    ];
    const W: [f64; 4] = [
        0.362_683_783_378_362,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ];
    const PANELS: usize = 16;
    let h = (b - a) / PANELS as f64;
    let mut s = 0.0;
    for p in 0..PANELS {
        let c = a + (p as f64 + 0.5) * h;
        for (x, w) in X.iter().zip(W) {
            s += w * (f(c - 0.5 * h * x) + f(c + 0.5 * h * x));
        }
    }
    0.5 * h * s
}

/// `A(w)`.
pub fn kirchhoff(problem: &QuasilinearProblem, w: f64) -> f64 {
    problem.diffusion.kirchhoff(w)
}

/// `A^{-1}(W)`.
pub fn kirchhoff_inverse(problem: &QuasilinearProblem, big_w: f64) -> Result<f64> {
    problem.diffusion.kirchhoff_inverse(big_w)
}

/// Reaction term `f(x, t, u)` and its one-sided Lipschitz constant.
#[derive(Clone)]
pub struct Reaction {
    pub f: StateFn,
    pub df_du: StateFn,
    pub lambda0: f64,
}

impl Reaction {
    pub fn new(
        f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        df_du: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        lambda0: f64,
    ) -> Self {
        Self {
            f: Arc::new(f),
            df_du: Arc::new(df_du),
            lambda0,
        }
    }

    /// `f = f(u)`, with `lambda0 = max(0, sup(-f'))` over `range`.
    pub fn autonomous(f: crate::schemes::Nonlinearity, range: Interval) -> Self {
        let lambda0 = sup_on(range, |u| -f.derivative(u)).max(0.0);
        let g = f.clone();
        Self {
            f: Arc::new(move |_, _, u| f.value(u)),
            df_du: Arc::new(move |_, _, u| g.derivative(u)),
            lambda0,
        }
    }
}

/// Convection flux `b(x, t, u)` with Lipschitz constant `C_b` in `u`.
#[derive(Clone)]
pub struct Convection {
    pub b: StateFn,
    pub lipschitz: f64,
}

#[derive(Clone)]
pub struct QuasilinearProblem {
    pub alpha: f64,
    pub diffusion: Diffusion,
    pub convection: Option<Convection>,
    pub reaction: Reaction,
    pub u0: SpaceFn,
    pub horizon: f64,
    /// Declared `C_u >= ||u_x||_inf`; estimated by a coarse pre-run when absent.
    pub gradient_bound: Option<f64>,
}

impl std::fmt::Debug for QuasilinearProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QuasilinearProblem")
            .field("alpha", &self.alpha)
            .field("diffusion", &self.diffusion)
            .field("has_convection", &self.convection.is_some())
            .field("lambda0", &self.reaction.lambda0)
            .field("horizon", &self.horizon)
            .field("gradient_bound", &self.gradient_bound)
            .finish()
    }
}

impl QuasilinearProblem {
    /// `lambda = lambda0 + (C_a C_u + C_b)^2 / (4 c_a)` for a gradient bound `C_u`.
    pub fn step_lambda(&self, gradient_bound: f64) -> f64 {
        let c_b = self.convection.as_ref().map_or(0.0, |c| c.lipschitz);
        let c_a = self.diffusion.lipschitz();
        let lower = self.diffusion.lower_bound();
        let k = c_a * gradient_bound + c_b;
        self.reaction.lambda0 + k * k / (4.0 * lower)
    }
}

/// Outer fixed-point diagnostics of one step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuasiStepStats {
    /// Solves of the `w`-equation.
    pub outer_iterations: usize,
    /// Successive distances `||w_{k+1} - w_k||_inf`.
    pub distances: Vec<f64>,
    /// Newton iterations of each inner solve.
    pub inner_iterations: Vec<usize>,
}

impl QuasiStepStats {
    /// Largest ratio of successive distances (contraction factor estimate).
    pub fn max_contraction_ratio(&self) -> Option<f64> {
        self.distances
            .windows(2)
            .filter(|d| d[0] > 0.0 && d[1] > 1e-14)
            .map(|d| d[1] / d[0])
            .reduce(f64::max)
    }
}

fn centered_flux_difference(grid: &SpatialGrid, conv: &Convection, t: f64, v: &[f64], out: &mut [f64]) {
    let n = grid.n;
    let inv_2h = 0.5 / grid.h();
    let flux = |i: usize| -> f64 {
        // i in 0..=n+1; boundary values are zero
        let u = if i == 0 || i == n + 1 { 0.0 } else { v[i - 1] };
        (conv.b)(grid.x(i), t, u)
    };
    for (k, o) in out.iter_mut().enumerate() {
        let i = k + 1;
        *o = (flux(i + 1) - flux(i - 1)) * inv_2h;
    }
}

/// Solves `-D_h^2 A(w) + kappa w + f(., t, w) = rhs` for `w` by Newton in `W = A(w)`.
fn solve_w_equation(
    grid: &SpatialGrid,
    problem: &QuasilinearProblem,
    kappa_mm: f64,
    t: f64,
    xs: &[f64],
    start: &[f64],
    rhs: &[f64],
) -> Result<(Vec<f64>, usize)> {
    let n = grid.n;
    let diff = &problem.diffusion;
    let react = &problem.reaction;
    let inv_h2 = 1.0 / (grid.h() * grid.h());

    let eval = |big_w: &[f64], w: &mut [f64], r: &mut [f64]| -> Result<f64> {
        for i in 0..n {
            w[i] = diff.kirchhoff_inverse(big_w[i])?;
        }
        let mut norm = 0.0_f64;
        for i in 0..n {
            let left = if i > 0 { big_w[i - 1] } else { 0.0 };
            let right = if i + 1 < n { big_w[i + 1] } else { 0.0 };
            r[i] = inv_h2 * (2.0 * big_w[i] - left - right) + kappa_mm * w[i] + (react.f)(xs[i], t, w[i])
                - rhs[i];
            norm = norm.max(r[i].abs());
        }
        Ok(norm)
    };
    let scale = |big_w: &[f64], w: &[f64]| -> f64 {
        1.0 + max_abs(rhs) + 1e-4 * (4.0 * inv_h2 * max_abs(big_w) + kappa_mm * max_abs(w))
    };

    let mut big_w: Vec<f64> = start.iter().map(|&u| diff.kirchhoff(u)).collect();
    let mut w = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut rnorm = eval(&big_w, &mut w, &mut r)?;
    let mut trial = vec![0.0; n];
    let mut w_trial = vec![0.0; n];
    let mut r_trial = vec![0.0; n];
    let mut jac = Tridiagonal::zeros(n);
    for it in 0..NEWTON_MAX_ITERS {
        if rnorm <= NEWTON_RTOL * scale(&big_w, &w) {
            return Ok((w, it));
        }
        for i in 0..n {
            jac.lower[i] = if i > 0 { -inv_h2 } else { 0.0 };
            jac.upper[i] = if i + 1 < n { -inv_h2 } else { 0.0 };
            // dw/dW = 1/a(w)
            jac.diag[i] = 2.0 * inv_h2 + (kappa_mm + (react.df_du)(xs[i], t, w[i])) / diff.a(w[i]);
        }
        let mut delta: Vec<f64> = r.iter().map(|x| -x).collect();
        jac.solve_in_place(&mut delta)?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=20 {
            for i in 0..n {
                trial[i] = big_w[i] + lambda * delta[i];
            }
            if let Ok(tn) = eval(&trial, &mut w_trial, &mut r_trial) {
                if tn < rnorm {
                    std::mem::swap(&mut big_w, &mut trial);
                    std::mem::swap(&mut w, &mut w_trial);
                    std::mem::swap(&mut r, &mut r_trial);
                    rnorm = tn;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            if rnorm <= 1e3 * NEWTON_RTOL * scale(&big_w, &w) {
                return Ok((w, it + 1));
            }
            return Err(Error::NewtonFailure {
                iterations: it + 1,
                residual: rnorm,
            });
        }
    }
    if rnorm <= NEWTON_RTOL * scale(&big_w, &w) {
        return Ok((w, NEWTON_MAX_ITERS));
    }
    Err(Error::NewtonFailure {
        iterations: NEWTON_MAX_ITERS,
        residual: rnorm,
    })
}

/// One step of the fully implicit scheme.
///
/// `history` is `sum_{j<m} kappa_{m,j} U^j`; `prev` is `U^{m-1}` and seeds
/// both the outer iteration and the inner Newton solve.
pub fn quasilinear_step(
    grid: &SpatialGrid,
    problem: &QuasilinearProblem,
    kappa_mm: f64,
    history: &[f64],
    prev: &[f64],
    t_m: f64,
) -> Result<(Vec<f64>, QuasiStepStats)> {
    let n = grid.n;
    if history.len() != n || prev.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: history.len().min(prev.len()),
        });
    }
    let xs = grid.interior();
    let mut stats = QuasiStepStats::default();
    let Some(conv) = &problem.convection else {
        let (w, inner) = solve_w_equation(grid, problem, kappa_mm, t_m, &xs, prev, history)?;
        stats.outer_iterations = 1;
        stats.inner_iterations.push(inner);
        return Ok((w, stats));
    };

    let mut v = prev.to_vec();
    let mut rhs = vec![0.0; n];
    let mut stalled = 0;
    for _ in 0..OUTER_MAX_ITERS {
        centered_flux_difference(grid, conv, t_m, &v, &mut rhs);
        for (r, s) in rhs.iter_mut().zip(history) {
            *r += s;
        }
        let (w, inner) = solve_w_equation(grid, problem, kappa_mm, t_m, &xs, &v, &rhs)?;
        stats.outer_iterations += 1;
        stats.inner_iterations.push(inner);
        let dist = w.iter().zip(&v).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        if let Some(&last) = stats.distances.last() {
            if dist >= last {
                stalled += 1;
            } else {
                stalled = 0;
            }
        }
        stats.distances.push(dist);
        v = w;
        if dist <= OUTER_TOL {
            return Ok((v, stats));
        }
        if stalled >= STALL_LIMIT {
            return Err(Error::ContractionFailure { step: 0, distance: dist });
        }
    }
    Err(Error::ContractionFailure {
        step: 0,
        distance: stats.distances.last().copied().unwrap_or(f64::NAN),
    })
}

/// Trajectory plus per-step fixed-point diagnostics.
#[derive(Debug, Clone)]
pub struct QuasilinearSolution {
    pub trajectory: SpaceTimeTrajectory,
    pub steps: Vec<QuasiStepStats>,
    /// Gradient bound used for the step condition.
    pub gradient_bound: f64,
}

/// Largest centered-difference gradient of a coarse pre-run (M = 16, at most 256 nodes).
pub fn estimate_gradient_bound(problem: &QuasilinearProblem, grid: &SpatialGrid) -> Result<f64> {
    let coarse_grid = SpatialGrid::new(grid.x_lo, grid.x_hi, grid.n.min(256))?;
    let mesh = TemporalMesh::uniform(16, problem.horizon)?;
    let traj = march(problem, &mesh, &coarse_grid)?.0;
    let h = coarse_grid.h();
    let mut g = 0.0_f64;
    for u in &traj.values {
        let n = u.len();
        for i in 0..=n {
            let left = if i == 0 { 0.0 } else { u[i - 1] };
            let right = if i == n { 0.0 } else { u[i] };
            g = g.max(((right - left) / h).abs());
        }
    }
    Ok(g)
}

fn march(
    problem: &QuasilinearProblem,
    mesh: &TemporalMesh,
    grid: &SpatialGrid,
) -> Result<(SpaceTimeTrajectory, Vec<QuasiStepStats>)> {
    let xs = grid.interior();
    let mut values = Vec::with_capacity(mesh.steps() + 1);
    values.push(xs.iter().map(|&x| (problem.u0)(x)).collect::<Vec<f64>>());
    let mut history = VectorHistory::new(mesh.steps());
    let mut hist = vec![0.0; grid.n];
    let mut all_stats = Vec::with_capacity(mesh.steps());
    for m in 1..=mesh.steps() {
        let prev = &values[m - 1];
        let kappa_mm = history.history_sum(mesh, problem.alpha, m, prev, &mut hist);
        let (next, stats) = quasilinear_step(grid, problem, kappa_mm, &hist, prev, mesh.t(m)).map_err(|e| match e {
            Error::ContractionFailure { distance, .. } => Error::ContractionFailure { step: m, distance },
            other => other,
        })?;
        history.push(prev, &next);
        values.push(next);
        all_stats.push(stats);
    }
    Ok((
        SpaceTimeTrajectory {
            mesh: mesh.clone(),
            grid: *grid,
            values,
        },
        all_stats,
    ))
}

/// Full time loop. Checks `lambda tau_j^alpha < 1/Gamma(2-alpha)` first.
pub fn solve_quasilinear(
    problem: &QuasilinearProblem,
    mesh: &TemporalMesh,
    grid: &SpatialGrid,
) -> Result<QuasilinearSolution> {
    check_alpha(problem.alpha)?;
    let c_u = match problem.gradient_bound {
        Some(c) => c,
        None => estimate_gradient_bound(problem, grid)?,
    };
    check_step_condition(mesh, problem.alpha, problem.step_lambda(c_u))?;
    let (trajectory, steps) = march(problem, mesh, grid)?;
    Ok(QuasilinearSolution {
        trajectory,
        steps,
        gradient_bound: c_u,
    })
}
