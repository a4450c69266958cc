//! Convergence studies and double-mesh error estimation.

use rayon::prelude::*;

use super::catalog::{fisher_kolmogorov, test_a, test_b, ProblemId};
use super::config::StudyConfig;
use super::report::{ErrorReport, ErrorRow, LadderEntry, RateRow};
use crate::error::{Error, Result};
use crate::fdspace::{solve_pde, SpaceTimeTrajectory, StepError};
use crate::mesh::{is_nested_refinement, TemporalMesh};
use crate::numerics::doubling_rate;
use crate::ode::{solve_ode, BoundVariant, ErrorBound, Trajectory};
use crate::quasilinear::solve_quasilinear;
use crate::schemes::SchemeKind;

/// Output of one ladder entry.
#[derive(Debug, Clone)]
pub enum Solution {
    Scalar(Trajectory),
    Field(SpaceTimeTrajectory),
}

impl Solution {
    pub fn mesh(&self) -> &TemporalMesh {
        match self {
            Solution::Scalar(t) => &t.mesh,
            Solution::Field(t) => &t.mesh,
        }
    }
}

/// Solves the configured problem on the graded mesh with `steps` steps.
pub fn solve_entry(cfg: &StudyConfig, steps: usize) -> Result<Solution> {
    let mesh = TemporalMesh::graded(steps, cfg.grading(), 1.0)?;
    match cfg.problem {
        ProblemId::TestA => {
            let p = test_a(cfg.alpha, cfg.sigma(), cfg.scheme)?;
            solve_ode(&p, &mesh).map(Solution::Scalar)
        }
        ProblemId::TestB => {
            let p = test_b(cfg.alpha, cfg.sigma(), cfg.scheme, cfg.stabilization)?;
            let grid = cfg.grid()?.expect("spatial problem");
            solve_pde(&p, &mesh, &grid).map(Solution::Field)
        }
        ProblemId::FisherKolmogorov => {
            let p = fisher_kolmogorov(cfg.alpha)?;
            let grid = cfg.grid()?.expect("spatial problem");
            solve_quasilinear(&p, &mesh, &grid).map(|s| Solution::Field(s.trajectory))
        }
    }
}

fn check_nested(coarse: &TemporalMesh, fine: &TemporalMesh) -> Result<()> {
    if fine.steps() == 2 * coarse.steps() && is_nested_refinement(coarse, fine) {
        Ok(())
    } else {
        Err(Error::NotNested)
    }
}

/// `|U_M^m - U_2M^{2m}|` at every coarse time level, in the nodal max and
/// discrete L2 norms.
pub fn double_mesh_error(coarse: &SpaceTimeTrajectory, fine: &SpaceTimeTrajectory) -> Result<Vec<StepError>> {
    check_nested(&coarse.mesh, &fine.mesh)?;
    if coarse.grid != fine.grid {
        return Err(Error::NotNested);
    }
    Ok(coarse
        .values
        .iter()
        .enumerate()
        .map(|(m, u)| {
            let diff: Vec<f64> = u.iter().zip(&fine.values[2 * m]).map(|(a, b)| a - b).collect();
            StepError {
                m,
                t: coarse.mesh.t(m),
                max: coarse.grid.max_norm(&diff),
                l2: coarse.grid.l2_norm(&diff),
            }
        })
        .collect())
}

/// Scalar analogue of [`double_mesh_error`].
pub fn double_mesh_error_scalar(coarse: &Trajectory, fine: &Trajectory) -> Result<Vec<f64>> {
    check_nested(&coarse.mesh, &fine.mesh)?;
    Ok(coarse
        .values
        .iter()
        .enumerate()
        .map(|(m, u)| (u - fine.values[2 * m]).abs())
        .collect())
}

fn step_errors(cfg: &StudyConfig, sol: &Solution, reference: Option<&Solution>) -> Result<Vec<StepError>> {
    match (sol, reference) {
        (Solution::Scalar(c), Some(Solution::Scalar(f))) => Ok(double_mesh_error_scalar(c, f)?
            .into_iter()
            .enumerate()
            .map(|(m, e)| StepError {
                m,
                t: c.mesh.t(m),
                max: e,
                l2: e,
            })
            .collect()),
        (Solution::Field(c), Some(Solution::Field(f))) => double_mesh_error(c, f),
        (Solution::Scalar(c), None) => {
            let sigma = cfg.sigma();
            Ok(c.errors(&|t: f64| t.powf(sigma))
                .into_iter()
                .enumerate()
                .map(|(m, e)| StepError {
                    m,
                    t: c.mesh.t(m),
                    max: e,
                    l2: e,
                })
                .collect())
        }
        (Solution::Field(c), None) => {
            let sigma = cfg.sigma();
            match cfg.problem {
                ProblemId::TestB => Ok(c.errors(&super::catalog::test_b_exact(sigma))),
                p => Err(Error::Config(format!("problem `{p}` has no exact solution"))),
            }
        }
        _ => Err(Error::NotNested),
    }
}

fn ladder_entry(cfg: &StudyConfig, sol: &Solution, errors: &[StepError]) -> LadderEntry {
    let mesh = sol.mesh();
    let bound = ErrorBound {
        alpha: cfg.alpha,
        sigma: cfg.sigma(),
        r: mesh.grading(),
        steps: mesh.steps(),
    };
    let t1 = mesh.t(1);
    let rows = errors
        .iter()
        .skip(1)
        .map(|e| {
            let bound_e = bound.eval(e.t, t1, BoundVariant::E);
            ErrorRow {
                m: e.m,
                t_m: e.t,
                error_l2: e.l2,
                error_max: e.max,
                bound_e,
                bound_e_tilde: bound.eval(e.t, t1, BoundVariant::ETilde),
                ratio: e.max / bound_e,
            }
        })
        .collect();
    LadderEntry {
        steps: mesh.steps(),
        rows,
    }
}

pub fn study_label(cfg: &StudyConfig) -> String {
    format!(
        "{} {} alpha={} sigma={} r={}",
        cfg.problem,
        cfg.scheme.as_str(),
        cfg.alpha,
        cfg.sigma(),
        cfg.grading()
    )
}

/// Runs every ladder entry (in parallel), measures errors against the exact
/// solution or the next finer run, and assembles the report.
pub fn run_convergence(cfg: &StudyConfig) -> Result<ErrorReport> {
    cfg.validate()?;
    let double = cfg.uses_double_mesh();
    let mut steps = cfg.ladder.clone();
    if double {
        steps.push(2 * steps[steps.len() - 1]);
    }
    let solutions: Vec<Solution> = steps
        .par_iter()
        .map(|&m| solve_entry(cfg, m))
        .collect::<Result<_>>()?;

    let mut entries = Vec::with_capacity(cfg.ladder.len());
    for i in 0..cfg.ladder.len() {
        let reference = if double { Some(&solutions[i + 1]) } else { None };
        let errors = step_errors(cfg, &solutions[i], reference)?;
        entries.push(ladder_entry(cfg, &solutions[i], &errors));
    }
    let rates = entries
        .windows(2)
        .map(|w| {
            let (ec, ef) = (w[0].max_error(), w[1].max_error());
            RateRow {
                m_coarse: w[0].steps,
                m_fine: w[1].steps,
                error_coarse: ec,
                error_fine: ef,
                rate: doubling_rate(ec, ef),
            }
        })
        .collect();
    Ok(ErrorReport {
        label: study_label(cfg),
        entries,
        rates,
    })
}

/// One row of the `solve-ode` profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeProfileRow {
    pub m: usize,
    pub t_m: f64,
    pub u: f64,
    pub exact: f64,
    pub error: f64,
    pub bound_e: f64,
    pub bound_e_tilde: f64,
}

/// Test A on `graded(steps, r)`: solution, exact values and bounds per step.
pub fn ode_profile(alpha: f64, sigma: f64, r: f64, steps: usize, kind: SchemeKind) -> Result<Vec<OdeProfileRow>> {
    let mesh = TemporalMesh::graded(steps, r, 1.0)?;
    let p = test_a(alpha, sigma, kind)?;
    let traj = solve_ode(&p, &mesh)?;
    let bound = ErrorBound {
        alpha,
        sigma,
        r,
        steps,
    };
    let t1 = mesh.t(1);
    Ok(traj
        .values
        .iter()
        .enumerate()
        .map(|(m, &u)| {
            let t = mesh.t(m);
            let exact = t.powf(sigma);
            let (be, bt) = if m == 0 {
                (0.0, 0.0)
            } else {
                (bound.eval(t, t1, BoundVariant::E), bound.eval(t, t1, BoundVariant::ETilde))
            };
            OdeProfileRow {
                m,
                t_m: t,
                u,
                exact,
                error: (exact - u).abs(),
                bound_e: be,
                bound_e_tilde: bt,
            }
        })
        .collect())
}
