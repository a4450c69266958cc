//! The L1 discrete Caputo operator on an arbitrary temporal mesh.
//!
//! On step `m` the operator reads
//!
//! ```text
//! delta U^m = 1/Gamma(1-a) sum_{j=1}^m (U^j - U^{j-1})/tau_j int_{t_{j-1}}^{t_j} (t_m - s)^{-a} ds
//!           = sum_{j=1}^m w_{m,j} (U^j - U^{j-1})
//!           = kappa_{m,m} U^m - sum_{j<m} kappa_{m,j} U^j
//! ```
//!
//! with increment weights `w_{m,j}` (the kernel mean over `(t_{j-1}, t_j)`),
//! `kappa_{m,m} = w_{m,m} = tau_m^{-a} / Gamma(2-a)`, `kappa_{m,0} = w_{m,1}` and
//! `kappa_{m,j} = w_{m,j+1} - w_{m,j}` otherwise.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::TemporalMesh;
use crate::numerics::{gamma, pow_diff};

/// Relative step size above which `kappa_{m,j}` is taken as a plain
/// difference of neighbouring increment weights.
const DIRECT_DIFFERENCE_EPS: f64 = 1.0 / 64.0;

pub fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// One row of the L1 operator.
#[derive(Debug, Clone, PartialEq)]
pub struct L1Row {
    pub m: usize,
    pub alpha: f64,
    /// Self coefficient `kappa_{m,m}`.
    pub kappa_mm: f64,
    /// History coefficients `kappa_{m,0..m-1}`.
    pub kappa: Vec<f64>,
    /// Increment weights `w_{m,1..m}` (stored at indices `0..m`).
    pub weights: Vec<f64>,
}

impl L1Row {
    /// `delta_t^alpha V^m` evaluated from the increments, i.e. the defining sum.
    pub fn apply(&self, history: &[f64]) -> Result<f64> {
        if history.len() != self.m + 1 {
            return Err(Error::LengthMismatch {
                expected: self.m + 1,
                got: history.len(),
            });
        }
        Ok(apply_increments(&self.weights, history))
    }

    /// `kappa_{m,m} V^m - sum_{j<m} kappa_{m,j} V^j`.
    pub fn apply_kappa(&self, history: &[f64]) -> Result<f64> {
        if history.len() != self.m + 1 {
            return Err(Error::LengthMismatch {
                expected: self.m + 1,
                got: history.len(),
            });
        }
        Ok(self.kappa_mm * history[self.m] - self.history_sum(&history[..self.m]))
    }

    /// `sum_{j<m} kappa_{m,j} V^j` for `V^0..V^{m-1}`.
    pub fn history_sum(&self, past: &[f64]) -> f64 {
        debug_assert_eq!(past.len(), self.m);
        self.kappa.iter().zip(past).map(|(k, v)| k * v).sum()
    }
}

/// Applies a row to a history of length `m + 1`.
pub fn apply_l1(row: &L1Row, history: &[f64]) -> Result<f64> {
    row.apply(history)
}

fn apply_increments(weights: &[f64], history: &[f64]) -> f64 {
    weights
        .iter()
        .zip(history.windows(2))
        .map(|(w, v)| w * (v[1] - v[0]))
        .sum()
}

fn check_step(mesh: &TemporalMesh, m: usize) -> Result<()> {
    if m == 0 || m > mesh.steps() {
        Err(Error::StepOutOfRange {
            m,
            max: mesh.steps(),
        })
    } else {
        Ok(())
    }
}

/// `kappa_{m,m} = tau_m^{-alpha} / Gamma(2 - alpha)`.
pub fn kappa_self(mesh: &TemporalMesh, alpha: f64, m: usize) -> f64 {
    mesh.tau(m).powf(-alpha) / gamma(2.0 - alpha)
}

/// Fills `out` with the increment weights `w_{m,1..m}`.
///
/// This is all the time steppers need: `sum_{j<m} kappa_{m,j} U^j` equals
/// `kappa_{m,m} U^{m-1} - sum_{j<m} w_{m,j} (U^j - U^{j-1})`.
pub fn increment_weights_into(mesh: &TemporalMesh, alpha: f64, m: usize, out: &mut Vec<f64>) {
    let p = 1.0 - alpha;
    let inv_g = 1.0 / gamma(2.0 - alpha);
    let tm = mesh.t(m);
    out.clear();
    out.extend((1..=m).map(|j| {
        let tau = mesh.tau(j);
        if j == m {
            tau.powf(-alpha) * inv_g
        } else {
            pow_diff(tm - mesh.t(j - 1), tau, p) / tau * inv_g
        }
    }));
}

pub fn increment_weights(mesh: &TemporalMesh, alpha: f64, m: usize) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    check_step(mesh, m)?;
    let mut w = Vec::with_capacity(m);
    increment_weights_into(mesh, alpha, m, &mut w);
    Ok(w)
}

/// Builds row `m` of the operator.
pub fn l1_row(mesh: &TemporalMesh, alpha: f64, m: usize) -> Result<L1Row> {
    check_alpha(alpha)?;
    check_step(mesh, m)?;
    let weights = increment_weights(mesh, alpha, m)?;
    let kappa_mm = weights[m - 1];
    let inv_g1 = (1.0 - alpha) / gamma(2.0 - alpha);
    let tm = mesh.t(m);
    let mut kappa = Vec::with_capacity(m);
    kappa.push(weights[0]);
    for j in 1..m {
        let (tau_j, tau_next) = (mesh.tau(j), mesh.tau(j + 1));
        let dist = tm - mesh.t(j + 1);
        let eps = tau_j.max(tau_next) / dist;
        let k = if !(eps < DIRECT_DIFFERENCE_EPS) {
            weights[j] - weights[j - 1]
        } else {
            inv_g1 * kernel_mean_gap(alpha, tm - mesh.t(j - 1), tau_j, tau_next, eps)
        };
        kappa.push(k);
    }
    Ok(L1Row {
        m,
        alpha,
        kappa_mm,
        kappa,
        weights,
    })
}

/// Difference of the means of `(t_m - s)^{-alpha}` over two adjacent intervals
/// `(t_j, t_{j+1})` and `(t_{j-1}, t_j)`, written as
/// `int_0^1 k(x) [(1 - d/(t_m - x))^{-alpha} - 1] d theta` with
/// `x = t_{j-1} + theta tau_j` and `d = tau_j + theta (tau_{j+1} - tau_j)`.
///
/// The bracket is evaluated with `ln_1p`/`exp_m1`, so nothing cancels even when
/// the intervals are many orders of magnitude shorter than `t_m - t_{j+1}`.
/// The integrand is analytic with singularities at distance `>= 1/eps` from
/// `[0, 1]`, so a short Gauss-Legendre rule is exact to rounding.
fn kernel_mean_gap(alpha: f64, dist_prev: f64, tau_j: f64, tau_next: f64, eps: f64) -> f64 {
    let (nodes, weights): (&[f64], &[f64]) = if eps < 1e-4 {
        (&GL2_NODES, &GL2_WEIGHTS)
    } else if eps < 4e-3 {
        (&GL3_NODES, &GL3_WEIGHTS)
    } else {
        (&GL4_NODES, &GL4_WEIGHTS)
    };
    nodes
        .iter()
        .zip(weights)
        .map(|(&theta, &w)| {
            let dx = dist_prev - theta * tau_j;
            let d = tau_j + theta * (tau_next - tau_j);
            w * dx.powf(-alpha) * (-alpha * (-d / dx).ln_1p()).exp_m1()
        })
        .sum()
}

// Gauss-Legendre rules mapped to [0, 1].
const GL2_NODES: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];
const GL2_WEIGHTS: [f64; 2] = [0.5, 0.5];
const GL3_NODES: [f64; 3] = [0.112_701_665_379_258_3, 0.5, 0.887_298_334_620_741_7];
const GL3_WEIGHTS: [f64; 3] = [5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0];
const GL4_NODES: [f64; 4] = [
    0.069_431_844_202_973_71,
    0.330_009_478_207_571_9,
    0.669_990_521_792_428_1,
    0.930_568_155_797_026_3,
];
const GL4_WEIGHTS: [f64; 4] = [
    0.173_927_422_568_727,
    0.326_072_577_431_273,
    0.326_072_577_431_273,
    0.173_927_422_568_727,
];

/// Precomputed triangular table of rows `1..=M`, for repeated sweeps on small meshes.
#[derive(Debug, Clone)]
pub struct L1Cache {
    rows: Vec<L1Row>,
}

impl L1Cache {
    pub fn new(mesh: &TemporalMesh, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let rows = (1..=mesh.steps())
            .into_par_iter()
            .map(|m| l1_row(mesh, alpha, m))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rows })
    }

    pub fn row(&self, m: usize) -> &L1Row {
        &self.rows[m - 1]
    }

    pub fn steps(&self) -> usize {
        self.rows.len()
    }
}

/// Exact Caputo derivative of `t^sigma`: `Gamma(sigma+1)/Gamma(sigma-alpha+1) t^{sigma-alpha}`.
pub fn caputo_power(alpha: f64, sigma: f64, t: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma = {sigma} must be positive")));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("t = {t} must be non-negative")));
    }
    let c = gamma(sigma + 1.0) / gamma(sigma - alpha + 1.0);
    Ok(if t == 0.0 {
        if sigma > alpha {
            0.0
        } else if sigma == alpha {
            c
        } else {
            f64::INFINITY
        }
    } else {
        c * t.powf(sigma - alpha)
    })
}

/// Exponent `gamma = min{alpha, (2-alpha)/r + alpha - sigma - 1}` of the
/// truncation bound.
pub fn truncation_exponent(alpha: f64, sigma: f64, r: f64) -> f64 {
    alpha.min((2.0 - alpha) / r + alpha - sigma - 1.0)
}

/// Truncation bound `tau^{sigma-alpha} (tau/t_m)^{gamma+1}` at step `m`.
pub fn truncation_bound(mesh: &TemporalMesh, alpha: f64, sigma: f64, m: usize) -> f64 {
    let tau = mesh.t(1);
    let g = truncation_exponent(alpha, sigma, mesh.grading());
    tau.powf(sigma - alpha) * (tau / mesh.t(m)).powf(g + 1.0)
}

/// Truncation errors `r^m = delta_t^alpha u(t_m) - d_t^alpha u(t_m)` for
/// `u(t) = t^sigma`, `m = 1..M`.
pub fn truncation_profile(mesh: &TemporalMesh, alpha: f64, sigma: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    caputo_power(alpha, sigma, 1.0)?;
    let m_max = mesh.steps();
    // increments of t^sigma, computed without cancellation
    let incr: Vec<f64> = (1..=m_max)
        .map(|j| pow_diff(mesh.t(j), mesh.tau(j), sigma))
        .collect();
    let mut w = Vec::with_capacity(m_max);
    let mut out = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        increment_weights_into(mesh, alpha, m, &mut w);
        let discrete: f64 = w.iter().zip(&incr).map(|(a, b)| a * b).sum();
        out.push(discrete - caputo_power(alpha, sigma, mesh.t(m))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mesh(m: usize, r: f64) -> TemporalMesh {
        TemporalMesh::graded(m, r, 1.0).unwrap()
    }

    #[test]
    fn first_row_on_unit_step() {
        let mesh = TemporalMesh::from_points(vec![0.0, 1.0, 2.0], 1.0).unwrap();
        let row = l1_row(&mesh, 0.5, 1).unwrap();
        assert_relative_eq!(row.kappa_mm, 2.0 / std::f64::consts::PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(row.kappa_mm, std::f64::consts::FRAC_2_SQRT_PI, max_relative = 1e-14);
    }

    #[test]
    fn row_sum_identity_uniform_half_step() {
        let mesh = TemporalMesh::from_points(vec![0.0, 0.5, 1.0], 1.0).unwrap();
        let row = l1_row(&mesh, 0.5, 2).unwrap();
        let s: f64 = row.kappa.iter().sum();
        assert!((s - row.kappa_mm).abs() <= 1e-13 * row.kappa_mm);
        assert!(row.kappa.iter().all(|&k| k > 0.0));
    }

    #[test]
    fn constants_are_annihilated() {
        let mesh = mesh(40, 2.5);
        for m in [1, 2, 17, 40] {
            let row = l1_row(&mesh, 0.3, m).unwrap();
            let hist = vec![-3.7; m + 1];
            assert_eq!(row.apply(&hist).unwrap(), 0.0);
            assert!(row.apply_kappa(&hist).unwrap().abs() <= 1e-12 * 3.7 * row.kappa_mm);
        }
    }

    #[test]
    fn exact_on_linear_history() {
        let alpha = 0.37;
        let mesh = mesh(64, 3.0);
        for m in [1, 5, 64] {
            let row = l1_row(&mesh, alpha, m).unwrap();
            let hist: Vec<f64> = mesh.points()[..=m].to_vec();
            let exact = caputo_power(alpha, 1.0, mesh.t(m)).unwrap();
            assert_relative_eq!(row.apply(&hist).unwrap(), exact, max_relative = 1e-12);
            assert_relative_eq!(row.apply_kappa(&hist).unwrap(), exact, max_relative = 1e-11);
        }
    }

    #[test]
    fn zero_history_gives_zero() {
        let row = l1_row(&mesh(8, 1.0), 0.5, 8).unwrap();
        assert_eq!(row.apply(&[0.0; 9]).unwrap(), 0.0);
    }

    #[test]
    fn errors() {
        let mesh = mesh(4, 1.0);
        assert!(matches!(l1_row(&mesh, 1.0, 1), Err(Error::InvalidAlpha(_))));
        assert!(matches!(l1_row(&mesh, 0.0, 1), Err(Error::InvalidAlpha(_))));
        assert!(matches!(l1_row(&mesh, 0.5, 0), Err(Error::StepOutOfRange { .. })));
        assert!(matches!(l1_row(&mesh, 0.5, 5), Err(Error::StepOutOfRange { .. })));
        let row = l1_row(&mesh, 0.5, 2).unwrap();
        assert!(matches!(row.apply(&[0.0; 4]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn kappa_positive_on_extreme_grading() {
        // tau = 4096^{-5} ~ 1e-18: plain differences of weights round to zero here
        let mesh = mesh(4096, 5.0);
        for m in [2, 3, 100, 4096] {
            let row = l1_row(&mesh, 0.7, m).unwrap();
            assert!(row.kappa.iter().all(|&k| k > 0.0), "m = {m}");
            let s: f64 = row.kappa.iter().sum();
            assert!((s - row.kappa_mm).abs() <= 1e-12 * row.kappa_mm);
        }
    }

    #[test]
    fn gap_quadrature_agrees_with_plain_differences() {
        // moderate cancellation: both routes are accurate to ~1e-11 here
        let mesh = TemporalMesh::uniform(2000, 1.0).unwrap();
        let alpha = 0.45;
        let row = l1_row(&mesh, alpha, 2000).unwrap();
        for j in [1, 10, 500, 1900] {
            let direct = row.weights[j] - row.weights[j - 1];
            assert_relative_eq!(row.kappa[j], direct, max_relative = 1e-9);
        }
    }

    #[test]
    fn caputo_power_values() {
        let v = caputo_power(0.4, 0.8, 1.0).unwrap();
        assert_relative_eq!(v, gamma(1.8) / gamma(1.4), max_relative = 1e-15);
        assert!((v - 1.04973).abs() < 5e-5);
        let a = 0.3;
        assert_relative_eq!(
            caputo_power(a, 1.0, 0.5).unwrap(),
            0.5f64.powf(1.0 - a) / gamma(2.0 - a),
            max_relative = 1e-14
        );
        assert_eq!(caputo_power(0.4, 0.8, 0.0).unwrap(), 0.0);
        assert!(caputo_power(0.4, -1.0, 1.0).is_err());
    }

    #[test]
    fn truncation_vanishes_for_linear_solution() {
        let mesh = mesh(256, 2.0);
        let r = truncation_profile(&mesh, 0.4, 1.0).unwrap();
        assert!(r.iter().all(|x| x.abs() <= 1e-12));
    }

    #[test]
    fn truncation_first_step_bound_is_tau_power() {
        let (alpha, sigma) = (0.4, 0.8);
        let mesh = mesh(64, 2.0);
        let tau = mesh.t(1);
        assert_relative_eq!(
            truncation_bound(&mesh, alpha, sigma, 1),
            tau.powf(sigma - alpha),
            max_relative = 1e-14
        );
        // on the first step the L1 value is the kernel mean times the increment
        let r = truncation_profile(&mesh, alpha, sigma).unwrap();
        let expect = tau.powf(sigma - alpha)
            * (1.0 / gamma(2.0 - alpha) - gamma(sigma + 1.0) / gamma(sigma - alpha + 1.0));
        assert_relative_eq!(r[0], expect, max_relative = 1e-12);
    }

    #[test]
    fn cache_matches_direct_rows() {
        let mesh = mesh(20, 2.0);
        let cache = L1Cache::new(&mesh, 0.6).unwrap();
        assert_eq!(cache.steps(), 20);
        assert_eq!(cache.row(7), &l1_row(&mesh, 0.6, 7).unwrap());
    }
}
