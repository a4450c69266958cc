//! Property suites run by `l1sub verify`: stability, comparison principle,
//! truncation bound, scheme constants and finite-difference structure.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::fdspace::{build_lh, check_h_condition, solve_pde, Coefficients, PdeProblem, SpatialGrid};
use crate::l1op::{kappa_self, truncation_bound, truncation_profile};
use crate::mesh::TemporalMesh;
use crate::numerics::{doubling_rate, gamma};
use crate::ode::{solve_barrier, stability_majorant};
use crate::schemes::{check_a1, check_a2, Interval, Nonlinearity, SchemeDescriptor, SchemeKind};

/// A named pass/fail verdict with a one-line explanation.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

/// `max / min` of positive samples.
pub fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}

/// Stability of the barrier problem `(delta - lambda0) V^j - lambda1 V^{j-1} = (tau/t_j)^{gamma+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCase {
    pub gamma: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    pub r: f64,
    /// `sup_j V^j / U^j(tau; gamma)` for each `M` of the ladder.
    pub sup_ratios: Vec<f64>,
}

pub fn stability_sup_ratio(alpha: f64, gamma_exp: f64, lambda0: f64, lambda1: f64, mesh: &TemporalMesh) -> Result<f64> {
    let tau = mesh.t(1);
    let v = solve_barrier(mesh, alpha, lambda0, lambda1, 0.0, |j| (tau / mesh.t(j)).powf(gamma_exp + 1.0))?;
    Ok((1..v.len())
        .map(|j| v[j] / stability_majorant(mesh, alpha, gamma_exp, j))
        .fold(0.0, f64::max))
}

pub fn stability_sweep(alpha: f64, gradings: &[f64], ladder: &[usize]) -> Result<Vec<StabilityCase>> {
    let mut cases = Vec::new();
    for &r in gradings {
        for gamma_exp in [-1.0, -0.2, 0.0, 0.3, alpha] {
            for lambda0 in [0.0, 0.5] {
                for lambda1 in [0.0, 0.5] {
                    cases.push((gamma_exp, lambda0, lambda1, r));
                }
            }
        }
    }
    cases
        .into_par_iter()
        .map(|(gamma_exp, lambda0, lambda1, r)| {
            let sup_ratios = ladder
                .iter()
                .map(|&m| {
                    let mesh = TemporalMesh::graded(m, r, 1.0)?;
                    stability_sup_ratio(alpha, gamma_exp, lambda0, lambda1, &mesh)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(StabilityCase {
                gamma: gamma_exp,
                lambda0,
                lambda1,
                r,
                sup_ratios,
            })
        })
        .collect()
}

/// Passes when the sup-ratio varies by less than 50% (`max/min < 1.5`) for every case.
pub fn stability_suite(alpha: f64, ladder: &[usize]) -> Result<Outcome> {
    let cases = stability_sweep(alpha, &[1.0, 2.0, 5.0], ladder)?;
    let worst = cases
        .iter()
        .max_by(|a, b| spread(&a.sup_ratios).total_cmp(&spread(&b.sup_ratios)))
        .expect("non-empty sweep");
    let s = spread(&worst.sup_ratios);
    Ok(Outcome {
        name: "stability".into(),
        passed: s < 1.5 && cases.iter().all(|c| c.sup_ratios.iter().all(|x| x.is_finite())),
        detail: format!(
            "{} cases, worst max/min = {s:.3} at gamma={}, lambda=({}, {}), r={}",
            cases.len(),
            worst.gamma,
            worst.lambda0,
            worst.lambda1,
            worst.r
        ),
    })
}

/// Summary of randomized comparison-principle trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonSummary {
    pub trials: usize,
    pub max_value: f64,
    pub violations: usize,
}

/// Random meshes, `alpha`, `lambda0` (below the step-condition threshold), `lambda1`,
/// `V^0 <= 0` and non-positive right-hand sides; counts `V^m > 1e-12`.
pub fn comparison_trials(trials: usize, seed: u64) -> Result<ComparisonSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_value = f64::NEG_INFINITY;
    let mut violations = 0;
    for _ in 0..trials {
        let m = rng.gen_range(1..=64);
        let r = rng.gen_range(1.0..4.0);
        let horizon = rng.gen_range(0.1..10.0);
        let alpha = rng.gen_range(0.05..0.95);
        let mesh = TemporalMesh::graded(m, r, horizon)?;
        let kappa_min = (1..=m).map(|j| kappa_self(&mesh, alpha, j)).fold(f64::INFINITY, f64::min);
        let lambda0 = rng.gen_range(0.0..0.99) * kappa_min;
        let lambda1 = rng.gen_range(0.0..2.0);
        let v0 = -rng.gen_range(0.0..1.0);
        let rhs: Vec<f64> = (0..=m)
            .map(|_| if rng.gen_bool(0.2) { 0.0 } else { -rng.gen_range(0.0..1.0) })
            .collect();
        let v = solve_barrier(&mesh, alpha, lambda0, lambda1, v0, |j| rhs[j])?;
        for &x in &v {
            max_value = max_value.max(x);
            if x > 1e-12 {
                violations += 1;
            }
        }
    }
    Ok(ComparisonSummary {
        trials,
        max_value,
        violations,
    })
}

pub fn comparison_suite(trials: usize, seed: u64) -> Result<Outcome> {
    let s = comparison_trials(trials, seed)?;
    Ok(Outcome {
        name: "comparison".into(),
        passed: s.violations == 0,
        detail: format!(
            "{} trials (seed {seed}), max V^m = {:.3e}, {} values above 1e-12",
            s.trials, s.max_value, s.violations
        ),
    })
}

/// `sup_m |r^m| / bound_m` across a ladder for one `(alpha, sigma, r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationCase {
    pub alpha: f64,
    pub sigma: f64,
    pub r: f64,
    pub sup_ratios: Vec<f64>,
    /// `max_m |r^m|` on the finest mesh.
    pub max_abs: f64,
}

/// Rows `(m, t_m, r_m, bound_m, ratio)` for one mesh.
pub fn truncation_rows(mesh: &TemporalMesh, alpha: f64, sigma: f64) -> Result<Vec<Vec<f64>>> {
    let prof = truncation_profile(mesh, alpha, sigma)?;
    Ok(prof
        .iter()
        .enumerate()
        .map(|(k, &rm)| {
            let m = k + 1;
            let b = truncation_bound(mesh, alpha, sigma, m);
            vec![m as f64, mesh.t(m), rm, b, rm.abs() / b]
        })
        .collect())
}

pub fn truncation_sweep(
    alphas: &[f64],
    sigmas: &[f64],
    gradings: &[f64],
    ladder: &[usize],
) -> Result<Vec<TruncationCase>> {
    let mut cases = Vec::new();
    for &a in alphas {
        for &s in sigmas {
            for &r in gradings {
                cases.push((a, s, r));
            }
        }
    }
    cases
        .into_par_iter()
        .map(|(alpha, sigma, r)| {
            let mut sup_ratios = Vec::with_capacity(ladder.len());
            let mut max_abs = 0.0;
            for &m in ladder {
                let mesh = TemporalMesh::graded(m, r, 1.0)?;
                let rows = truncation_rows(&mesh, alpha, sigma)?;
                sup_ratios.push(rows.iter().map(|row| row[4]).fold(0.0, f64::max));
                max_abs = rows.iter().map(|row| row[2].abs()).fold(0.0, f64::max);
            }
            Ok(TruncationCase {
                alpha,
                sigma,
                r,
                sup_ratios,
                max_abs,
            })
        })
        .collect()
}

/// Ratio stability within +-50% of the ladder mean (`sigma != 1`), and
/// vanishing truncation for `sigma = 1`.
pub fn truncation_suite(ladder: &[usize]) -> Result<Vec<Outcome>> {
    let alphas = [0.3, 0.5, 0.7];
    let gradings = [1.0, 2.0, 4.0];
    let cases = truncation_sweep(&alphas, &[0.4, 0.8, 1.5], &gradings, ladder)?;
    let dev = |c: &TruncationCase| {
        let mean = c.sup_ratios.iter().sum::<f64>() / c.sup_ratios.len() as f64;
        c.sup_ratios.iter().map(|x| (x / mean - 1.0).abs()).fold(0.0, f64::max)
    };
    let worst = cases.iter().max_by(|a, b| dev(a).total_cmp(&dev(b))).expect("non-empty sweep");
    let d = dev(worst);
    let linear = truncation_sweep(&alphas, &[1.0], &gradings, ladder)?;
    let lin_max = linear.iter().map(|c| c.max_abs).fold(0.0, f64::max);
    Ok(vec![
        Outcome {
            name: "truncation-ratio".into(),
            passed: d < 0.5,
            detail: format!(
                "{} cases, worst deviation from mean {:.1}% at (alpha, sigma, r) = ({}, {}, {})",
                cases.len(),
                100.0 * d,
                worst.alpha,
                worst.sigma,
                worst.r
            ),
        },
        Outcome {
            name: "truncation-linear".into(),
            passed: lin_max <= 1e-12,
            detail: format!("sigma = 1: max |r^m| = {lin_max:.2e}"),
        },
    ])
}

/// Empirical A1/A2 constants of one scheme next to its declared ones.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeCheck {
    pub kind: SchemeKind,
    pub q: u32,
    pub l_declared: f64,
    pub l_observed: f64,
    pub lambda0_declared: f64,
    pub lambda0_observed: f64,
    pub lambda1_declared: f64,
    pub lambda1_observed: f64,
}

impl SchemeCheck {
    pub fn passed(&self, slack: f64) -> bool {
        let ok = |obs: f64, decl: f64| obs <= decl + slack * decl.max(1.0);
        ok(self.l_observed, self.l_declared)
            && ok(self.lambda0_observed, self.lambda0_declared)
            && ok(self.lambda1_observed, self.lambda1_declared)
    }
}

pub fn scheme_checks(f: &Nonlinearity, range: Interval, n_samples: usize) -> Result<Vec<SchemeCheck>> {
    SchemeKind::ALL
        .iter()
        .map(|&kind| {
            let s = match kind {
                SchemeKind::StabilizedImex => SchemeDescriptor::stabilized(f.clone(), range, None)?,
                k => SchemeDescriptor::new(k, f.clone(), range)?,
            };
            let a2 = check_a2(&s, range, n_samples);
            Ok(SchemeCheck {
                kind,
                q: s.q,
                l_declared: s.l,
                l_observed: check_a1(&s, range, n_samples),
                lambda0_declared: s.lambda0,
                lambda0_observed: (-a2.min_slope_current).max(0.0),
                lambda1_declared: s.lambda1,
                lambda1_observed: a2.max_lipschitz_previous,
            })
        })
        .collect()
}

/// A1/A2 for every scheme kind on `f(u) = u^3 - u` over `[-1.5, 1.5]`.
pub fn scheme_suite(n_samples: usize) -> Result<Vec<Outcome>> {
    let range = Interval::new(-1.5, 1.5)?;
    Ok(scheme_checks(&Nonlinearity::allen_cahn(), range, n_samples)?
        .into_iter()
        .map(|c| Outcome {
            name: format!("schemes/{}", c.kind.as_str()),
            passed: c.passed(1e-6),
            detail: format!(
                "q={} L {:.6}<={:.6}, lambda0 {:.6}<={:.6}, lambda1 {:.6}<={:.6}",
                c.q,
                c.l_observed,
                c.l_declared,
                c.lambda0_observed,
                c.lambda0_declared,
                c.lambda1_observed,
                c.lambda1_declared
            ),
        })
        .collect())
}

/// Randomized scan: whenever the h condition holds, `L_h + kappa I` is an
/// M-matrix. Returns `(cases satisfying the condition, failures)`.
pub fn m_matrix_scan(cases: usize, seed: u64) -> Result<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut admitted = 0;
    let mut failures = 0;
    for _ in 0..cases {
        let n = rng.gen_range(1..=128);
        let len = rng.gen_range(0.5..4.0);
        let grid = SpatialGrid::new(0.0, len, n)?;
        let (a0, a1) = (rng.gen_range(0.05..2.0), rng.gen_range(-0.5..1.0) * 0.04 / len);
        let (b0, b1) = (rng.gen_range(-200.0..200.0), rng.gen_range(-50.0..50.0));
        let c0 = rng.gen_range(0.0..5.0);
        let coeffs = Coefficients::new(
            move |x, _| a0 + a1 * x,
            move |x, t| b0 + b1 * x * (1.0 + t),
            move |_, _| c0,
        );
        if !check_h_condition(&grid, &coeffs, 1.0, 5) {
            continue;
        }
        admitted += 1;
        for t in [0.0, 0.5, 1.0] {
            let mut m = build_lh(&grid, &coeffs, t).matrix;
            m.add_scalar_diagonal(rng.gen_range(1e-3..10.0));
            if !m.is_m_matrix() {
                failures += 1;
            }
        }
    }
    Ok((admitted, failures))
}

/// Maximum nodal error at `t = 1` for `u = t sin(pi x)` with `a = 1 + x/2`,
/// `b = 1`, `c = 1` on `(0, 1)`; exact in time, so only the spatial error remains.
pub fn spatial_error(alpha: f64, n: usize) -> Result<f64> {
    let g2 = gamma(2.0 - alpha);
    let source = move |x: f64, t: f64| {
        let (s, c) = ((PI * x).sin(), (PI * x).cos());
        let dt = t.powf(1.0 - alpha) / g2 * s;
        let flux_x = 0.5 * PI * t * c - (1.0 + 0.5 * x) * PI * PI * t * s;
        dt - flux_x + PI * t * c + t * s
    };
    let range = Interval::new(-2.0, 2.0)?;
    let p = PdeProblem {
        alpha,
        coeffs: Coefficients::new(|x, _| 1.0 + 0.5 * x, |_, _| 1.0, |_, _| 1.0),
        scheme: SchemeDescriptor::new(SchemeKind::Implicit, Nonlinearity::zero(), range)?,
        source: Arc::new(source),
        u0: Arc::new(|_| 0.0),
        horizon: 1.0,
        exact: None,
    };
    let grid = SpatialGrid::new(0.0, 1.0, n)?;
    let mesh = TemporalMesh::graded(8, 1.0, 1.0)?;
    let traj = solve_pde(&p, &mesh, &grid)?;
    Ok(traj.errors(&|x, t| t * (PI * x).sin()).iter().map(|e| e.max).fold(0.0, f64::max))
}

pub fn fd_structure_suite(seed: u64) -> Result<Vec<Outcome>> {
    let (admitted, failures) = m_matrix_scan(2000, seed)?;
    let ns = [15, 31, 63, 127];
    let errs = ns.iter().map(|&n| spatial_error(0.5, n)).collect::<Result<Vec<f64>>>()?;
    let rates: Vec<f64> = errs.windows(2).map(|w| doubling_rate(w[0], w[1])).collect();
    Ok(vec![
        Outcome {
            name: "fd/m-matrix".into(),
            passed: failures == 0 && admitted > 0,
            detail: format!("{admitted} admitted configurations, {failures} failures"),
        },
        Outcome {
            name: "fd/spatial-rate".into(),
            passed: rates.iter().all(|r| (r - 2.0).abs() <= 0.1),
            detail: format!("rates {rates:.3?} over N = {ns:?}"),
        },
    ])
}
