//! 1-D finite differences in space and the full semilinear stepper for
//! `d_t^alpha u + L u + f(u) = g` with homogeneous Dirichlet data, where
//! `L u = -(a u_x)_x + b u_x + c u`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::l1op::{check_alpha, increment_weights_into, kappa_self};
use crate::mesh::TemporalMesh;
use crate::numerics::max_abs;
use crate::schemes::SchemeDescriptor;
use crate::tridiag::Tridiagonal;

pub type SpaceTimeFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type SpaceFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const NEWTON_MAX_ITERS: usize = 50;
const NEWTON_MAX_HALVINGS: usize = 20;
const NEWTON_RTOL: f64 = 1e-11;

/// Uniform grid with `n` interior nodes on `(x_lo, x_hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n: usize,
}

impl SpatialGrid {
    pub fn new(x_lo: f64, x_hi: f64, n: usize) -> Result<Self> {
        if !(x_hi > x_lo) || n == 0 {
            return Err(Error::InvalidParameter(format!(
                "grid needs x_lo < x_hi and at least one interior node (got ({x_lo}, {x_hi}), n = {n})"
            )));
        }
        Ok(Self { x_lo, x_hi, n })
    }

    pub fn h(&self) -> f64 {
        (self.x_hi - self.x_lo) / (self.n + 1) as f64
    }

    /// Interior node `i` in `1..=n`; `0` and `n + 1` are the boundary.
    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        if i == self.n + 1 {
            self.x_hi
        } else {
            self.x_lo + i as f64 * self.h()
        }
    }

    pub fn interior(&self) -> Vec<f64> {
        (1..=self.n).map(|i| self.x(i)).collect()
    }

    /// `max_i |v_i|`
    pub fn max_norm(&self, v: &[f64]) -> f64 {
        max_abs(v)
    }

    /// `(h sum_i v_i^2)^{1/2}`
    pub fn l2_norm(&self, v: &[f64]) -> f64 {
        (self.h() * v.iter().map(|x| x * x).sum::<f64>()).sqrt()
    }
}

/// Coefficients of `L u = -(a u_x)_x + b u_x + c u`.
#[derive(Clone)]
pub struct Coefficients {
    pub a: SpaceTimeFn,
    pub b: SpaceTimeFn,
    pub c: SpaceTimeFn,
}

impl Coefficients {
    pub fn new(
        a: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        b: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        c: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            a: Arc::new(a),
            b: Arc::new(b),
            c: Arc::new(c),
        }
    }

    /// `L = -d^2/dx^2`.
    pub fn laplacian() -> Self {
        Self::new(|_, _| 1.0, |_, _| 0.0, |_, _| 0.0)
    }
}

/// Assembled `L_h` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    pub matrix: Tridiagonal,
    pub t: f64,
}

/// Assembles `L_h` at time `t`: midpoint values of `a` in the diffusion
/// stencil, central differences for the convection term.
pub fn build_lh(grid: &SpatialGrid, coeffs: &Coefficients, t: f64) -> TridiagonalOperator {
    let n = grid.n;
    let h = grid.h();
    let inv_h2 = 1.0 / (h * h);
    let half_inv_h = 0.5 / h;
    let mut m = Tridiagonal::zeros(n);
    for k in 0..n {
        let x = grid.x(k + 1);
        let a_minus = (coeffs.a)(x - 0.5 * h, t);
        let a_plus = (coeffs.a)(x + 0.5 * h, t);
        let b = (coeffs.b)(x, t);
        let c = (coeffs.c)(x, t);
        m.diag[k] = inv_h2 * (a_plus + a_minus) + c;
        if k > 0 {
            m.lower[k] = -inv_h2 * a_minus - half_inv_h * b;
        }
        if k + 1 < n {
            m.upper[k] = -inv_h2 * a_plus + half_inv_h * b;
        }
    }
    TridiagonalOperator { matrix: m, t }
}

/// `h^{-1} >= 1/2 ||b||_inf ||1/a||_inf`, sampled at nodes, midpoints and
/// `samples_t` equispaced times in `[0, horizon]`.
pub fn check_h_condition(grid: &SpatialGrid, coeffs: &Coefficients, horizon: f64, samples_t: usize) -> bool {
    let h = grid.h();
    let nt = samples_t.max(1);
    let mut b_max = 0.0_f64;
    let mut inv_a_max = 0.0_f64;
    for it in 0..nt {
        let t = if nt == 1 { 0.0 } else { horizon * it as f64 / (nt - 1) as f64 };
        for k in 0..=2 * (grid.n + 1) {
            let x = grid.x_lo + 0.5 * h * k as f64;
            b_max = b_max.max((coeffs.b)(x, t).abs());
            inv_a_max = inv_a_max.max(1.0 / (coeffs.a)(x, t));
        }
    }
    1.0 / h >= 0.5 * b_max * inv_a_max
}

/// Semilinear problem `d_t^alpha u + L u + f(u) = g(x, t)` on `(x_lo, x_hi)`.
#[derive(Clone)]
pub struct PdeProblem {
    pub alpha: f64,
    pub coeffs: Coefficients,
    pub scheme: SchemeDescriptor,
    pub source: SpaceTimeFn,
    pub u0: SpaceFn,
    pub horizon: f64,
    pub exact: Option<SpaceTimeFn>,
}

impl std::fmt::Debug for PdeProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PdeProblem")
            .field("alpha", &self.alpha)
            .field("scheme", &self.scheme.kind)
            .field("horizon", &self.horizon)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

/// Newton diagnostics of one step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepStats {
    /// Residual max-norms, starting with the initial iterate.
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

fn residual_scale(a: &Tridiagonal, u: &[f64], rhs: &[f64]) -> f64 {
    // rounding in A u is of order eps * |A| |u|; include it so the tolerance
    // stays attainable when h is small
    let n = u.len();
    let mut op = 0.0_f64;
    for i in 0..n {
        let mut s = a.diag[i].abs() * u[i].abs();
        if i > 0 {
            s += a.lower[i].abs() * u[i - 1].abs();
        }
        if i + 1 < n {
            s += a.upper[i].abs() * u[i + 1].abs();
        }
        op = op.max(s);
    }
    1.0 + max_abs(rhs) + 1e-4 * op
}

/// One step: solves `(kappa_mm I + L_h) U + F(U, prev) = rhs` nodewise.
///
/// `rhs` already contains `sum_{j<m} kappa_{m,j} U^j + g(., t_m)`. Affine
/// schemes need a single tridiagonal solve; the others use damped Newton with
/// the tridiagonal Jacobian `kappa_mm + L_h + diag(dF/dv)`, started from `prev`.
pub fn semilinear_step(
    lh: &TridiagonalOperator,
    kappa_mm: f64,
    scheme: &SchemeDescriptor,
    prev: &[f64],
    rhs: &[f64],
) -> Result<(Vec<f64>, StepStats)> {
    let n = prev.len();
    if rhs.len() != n || lh.matrix.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: rhs.len(),
        });
    }
    let mut base = lh.matrix.clone();
    base.add_scalar_diagonal(kappa_mm);

    if scheme.kind.is_linear_in_current() {
        let mut sys = base;
        let mut b = rhs.to_vec();
        for i in 0..n {
            let (c, slope) = scheme.affine_parts(prev[i]).expect("affine scheme");
            sys.diag[i] += slope;
            b[i] -= c;
        }
        sys.solve_in_place(&mut b)?;
        return Ok((
            b,
            StepStats {
                residuals: vec![],
                iterations: 1,
            },
        ));
    }

    let residual = |u: &[f64], out: &mut [f64]| {
        base.apply(u, out);
        for i in 0..n {
            out[i] += scheme.eval(u[i], prev[i]) - rhs[i];
        }
    };
    let mut u = prev.to_vec();
    let mut r = vec![0.0; n];
    residual(&u, &mut r);
    let mut rnorm = max_abs(&r);
    let mut stats = StepStats {
        residuals: vec![rnorm],
        iterations: 0,
    };
    let mut trial = vec![0.0; n];
    let mut r_trial = vec![0.0; n];
    for it in 0..NEWTON_MAX_ITERS {
        let tol = NEWTON_RTOL * residual_scale(&base, &u, rhs);
        if rnorm <= tol {
            stats.iterations = it;
            return Ok((u, stats));
        }
        let mut jac = base.clone();
        for i in 0..n {
            jac.diag[i] += scheme.d_current(u[i], prev[i]);
        }
        let mut delta: Vec<f64> = r.iter().map(|x| -x).collect();
        jac.solve_in_place(&mut delta)?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=NEWTON_MAX_HALVINGS {
            for i in 0..n {
                trial[i] = u[i] + lambda * delta[i];
            }
            residual(&trial, &mut r_trial);
            let tn = max_abs(&r_trial);
            if tn < rnorm {
                std::mem::swap(&mut u, &mut trial);
                std::mem::swap(&mut r, &mut r_trial);
                rnorm = tn;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        stats.residuals.push(rnorm);
        if !accepted {
            // no descent left: accept only if already at rounding level
            if rnorm <= 1e3 * NEWTON_RTOL * residual_scale(&base, &u, rhs) {
                stats.iterations = it + 1;
                return Ok((u, stats));
            }
            return Err(Error::NewtonFailure {
                iterations: it + 1,
                residual: rnorm,
            });
        }
    }
    let tol = NEWTON_RTOL * residual_scale(&base, &u, rhs);
    if rnorm <= tol {
        stats.iterations = NEWTON_MAX_ITERS;
        return Ok((u, stats));
    }
    Err(Error::NewtonFailure {
        iterations: NEWTON_MAX_ITERS,
        residual: rnorm,
    })
}

/// Nodal values for every time level.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeTrajectory {
    pub mesh: TemporalMesh,
    pub grid: SpatialGrid,
    /// `values[m][i]` is `U^m` at interior node `i + 1`.
    pub values: Vec<Vec<f64>>,
}

/// Per-step errors against an exact solution.
#[derive(Debug, Clone, PartialEq)]
pub struct StepError {
    pub m: usize,
    pub t: f64,
    pub max: f64,
    pub l2: f64,
}

impl SpaceTimeTrajectory {
    pub fn errors(&self, exact: &dyn Fn(f64, f64) -> f64) -> Vec<StepError> {
        let xs = self.grid.interior();
        self.values
            .iter()
            .enumerate()
            .map(|(m, u)| {
                let t = self.mesh.t(m);
                let e: Vec<f64> = xs.iter().zip(u).map(|(&x, &v)| exact(x, t) - v).collect();
                StepError {
                    m,
                    t,
                    max: self.grid.max_norm(&e),
                    l2: self.grid.l2_norm(&e),
                }
            })
            .collect()
    }
}

/// Running L1 history for nodal vectors: keeps the increments
/// `U^j - U^{j-1}` and produces `sum_{j<m} kappa_{m,j} U^j`.
#[derive(Debug, Clone)]
pub(crate) struct VectorHistory {
    increments: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl VectorHistory {
    pub(crate) fn new(steps: usize) -> Self {
        Self {
            increments: Vec::with_capacity(steps),
            weights: Vec::with_capacity(steps),
        }
    }

    /// Returns `kappa_{m,m}` and writes the history sum into `out`.
    pub(crate) fn history_sum(
        &mut self,
        mesh: &TemporalMesh,
        alpha: f64,
        m: usize,
        prev: &[f64],
        out: &mut [f64],
    ) -> f64 {
        increment_weights_into(mesh, alpha, m, &mut self.weights);
        let kappa_mm = self.weights[m - 1];
        for (o, p) in out.iter_mut().zip(prev) {
            *o = kappa_mm * p;
        }
        for (w, d) in self.weights.iter().zip(&self.increments) {
            for (o, x) in out.iter_mut().zip(d) {
                *o -= w * x;
            }
        }
        kappa_mm
    }

    pub(crate) fn push(&mut self, prev: &[f64], next: &[f64]) {
        self.increments
            .push(next.iter().zip(prev).map(|(a, b)| a - b).collect());
    }
}

pub(crate) fn check_step_condition(mesh: &TemporalMesh, alpha: f64, lambda: f64) -> Result<()> {
    if lambda <= 0.0 {
        return Ok(());
    }
    for j in 1..=mesh.steps() {
        let k = kappa_self(mesh, alpha, j);
        if k <= lambda {
            return Err(Error::StepCondition {
                step: j,
                kappa_mm: k,
                lambda,
            });
        }
    }
    Ok(())
}

/// Full time loop for the semilinear problem.
pub fn solve_pde(problem: &PdeProblem, mesh: &TemporalMesh, grid: &SpatialGrid) -> Result<SpaceTimeTrajectory> {
    check_alpha(problem.alpha)?;
    check_step_condition(mesh, problem.alpha, problem.scheme.lambda0)?;
    if !check_h_condition(grid, &problem.coeffs, mesh.horizon(), 9) {
        return Err(Error::InvalidParameter(
            "spatial step too coarse for the convection term (h condition fails)".into(),
        ));
    }
    let xs = grid.interior();
    let n = grid.n;
    let mut values = Vec::with_capacity(mesh.steps() + 1);
    values.push(xs.iter().map(|&x| (problem.u0)(x)).collect::<Vec<f64>>());
    let mut history = VectorHistory::new(mesh.steps());
    let mut rhs = vec![0.0; n];
    for m in 1..=mesh.steps() {
        let t = mesh.t(m);
        let prev = &values[m - 1];
        let kappa_mm = history.history_sum(mesh, problem.alpha, m, prev, &mut rhs);
        for (r, &x) in rhs.iter_mut().zip(&xs) {
            *r += (problem.source)(x, t);
        }
        let lh = build_lh(grid, &problem.coeffs, t);
        debug_assert!({
            let mut shifted = lh.matrix.clone();
            shifted.add_scalar_diagonal(kappa_mm);
            shifted.is_m_matrix()
        });
        let (next, _) = semilinear_step(&lh, kappa_mm, &problem.scheme, prev, &rhs)?;
        history.push(prev, &next);
        values.push(next);
    }
    Ok(SpaceTimeTrajectory {
        mesh: mesh.clone(),
        grid: *grid,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{Interval, Nonlinearity, SchemeKind};
    use approx::assert_relative_eq;

    fn scheme(kind: SchemeKind, f: Nonlinearity) -> SchemeDescriptor {
        SchemeDescriptor::new(kind, f, Interval::new(-2.0, 2.0).unwrap()).unwrap()
    }

    #[test]
    fn laplacian_stencil() {
        let grid = SpatialGrid::new(0.0, 1.0, 3).unwrap();
        let lh = build_lh(&grid, &Coefficients::laplacian(), 0.0).matrix;
        let s = 1.0 / (grid.h() * grid.h());
        assert_eq!(lh.diag, vec![2.0 * s; 3]);
        assert_eq!(lh.lower[1..], [-s, -s]);
        assert_eq!(lh.upper[..2], [-s, -s]);
    }

    #[test]
    fn second_differences_exact_on_quadratics() {
        let grid = SpatialGrid::new(0.0, 1.0, 15).unwrap();
        let lh = build_lh(&grid, &Coefficients::laplacian(), 0.0).matrix;
        let u: Vec<f64> = grid.interior().iter().map(|x| x * (1.0 - x)).collect();
        let mut y = vec![0.0; 15];
        lh.apply(&u, &mut y);
        for v in y {
            assert_relative_eq!(v, 2.0, max_relative = 1e-11);
        }
    }

    #[test]
    fn variable_coefficient_row_by_hand() {
        // a = 1 + x, b = 1, c = 0, h = 0.25, row at x = 0.5
        let grid = SpatialGrid::new(0.0, 1.0, 3).unwrap();
        let coeffs = Coefficients::new(|x, _| 1.0 + x, |_, _| 1.0, |_, _| 0.0);
        let lh = build_lh(&grid, &coeffs, 0.0).matrix;
        // a(0.375) = 1.375, a(0.625) = 1.625, 1/h^2 = 16, 1/(2h) = 2
        assert_relative_eq!(lh.lower[1], -16.0 * 1.375 - 2.0, max_relative = 1e-15);
        assert_relative_eq!(lh.diag[1], 16.0 * (1.375 + 1.625), max_relative = 1e-15);
        assert_relative_eq!(lh.upper[1], -16.0 * 1.625 + 2.0, max_relative = 1e-15);
    }

    #[test]
    fn h_condition_examples() {
        // h = 0.4 on (0, 2) with four interior nodes
        let grid = SpatialGrid::new(0.0, 2.0, 4).unwrap();
        assert!((grid.h() - 0.4).abs() < 1e-15);
        let ok = Coefficients::new(|_, _| 1.0, |_, _| 4.0, |_, _| 0.0);
        assert!(check_h_condition(&grid, &ok, 1.0, 3));
        let mut lh = build_lh(&grid, &ok, 0.0).matrix;
        lh.add_scalar_diagonal(1e-3);
        assert!(lh.is_m_matrix());
        let bad = Coefficients::new(|_, _| 1.0, |_, _| 8.0, |_, _| 0.0);
        assert!(!check_h_condition(&grid, &bad, 1.0, 3));
        assert!(check_h_condition(&grid, &Coefficients::laplacian(), 1.0, 3));
    }

    #[test]
    fn zero_data_stays_zero() {
        let grid = SpatialGrid::new(0.0, 1.0, 8).unwrap();
        let lh = build_lh(&grid, &Coefficients::laplacian(), 0.1);
        let s = scheme(SchemeKind::Implicit, Nonlinearity::zero());
        let (u, _) = semilinear_step(&lh, 3.0, &s, &[0.0; 8], &[0.0; 8]).unwrap();
        assert!(u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn newton_converges_quadratically_for_cubic() {
        let grid = SpatialGrid::new(0.0, 1.0, 31).unwrap();
        let lh = build_lh(&grid, &Coefficients::laplacian(), 0.0);
        let s = scheme(SchemeKind::Implicit, Nonlinearity::cubic());
        let prev: Vec<f64> = grid.interior().iter().map(|x| (std::f64::consts::PI * x).sin()).collect();
        let rhs: Vec<f64> = prev.iter().map(|v| 40.0 * v + 5.0).collect();
        let (u, stats) = semilinear_step(&lh, 2.0, &s, &prev, &rhs).unwrap();
        let res = &stats.residuals;
        assert!(stats.iterations >= 2);
        // once in the asymptotic regime, r_{k+1} <~ C r_k^2
        let k = res.len() - 2;
        let c = res[k] / (res[k - 1] * res[k - 1]);
        assert!(c.is_finite() && res[k] < 1e-3 * res[k - 1], "{res:?}");
        let mut y = vec![0.0; 31];
        lh.matrix.apply(&u, &mut y);
        for i in 0..31 {
            let r = y[i] + 2.0 * u[i] + u[i].powi(3) - rhs[i];
            assert!(r.abs() < 1e-9, "{r}");
        }
    }
}
