//! Graded and quasi-graded temporal meshes.
//!
//! A mesh is stored as its explicit point set `0 = t_0 < t_1 < ... < t_M = T`
//! together with the grading exponent `r >= 1` it is meant to satisfy, so that
//! user-supplied quasi-graded meshes are handled exactly like the standard
//! graded grid `t_j = T (j/M)^r`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NESTING_RTOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalMesh {
    points: Vec<f64>,
    r: f64,
}

impl TemporalMesh {
    /// Standard graded mesh `t_j = T (j/M)^r`.
    pub fn graded(m: usize, r: f64, horizon: f64) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidMesh("M must be at least 1".into()));
        }
        check_r(r)?;
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidMesh(format!("horizon T = {horizon} must be positive")));
        }
        let mf = m as f64;
        let mut points: Vec<f64> = (0..=m).map(|j| horizon * (j as f64 / mf).powf(r)).collect();
        points[m] = horizon;
        Self::from_points(points, r)
    }

    /// Uniform mesh with `M` steps on `[0, T]`.
    pub fn uniform(m: usize, horizon: f64) -> Result<Self> {
        Self::graded(m, 1.0, horizon)
    }

    /// Mesh from an explicit point list, declared quasi-graded with exponent `r`.
    pub fn from_points(points: Vec<f64>, r: f64) -> Result<Self> {
        check_r(r)?;
        validate_points(&points)?;
        Ok(Self { points, r })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Number of steps `M`.
    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    pub fn grading(&self) -> f64 {
        self.r
    }

    pub fn horizon(&self) -> f64 {
        self.points[self.steps()]
    }

    #[inline]
    pub fn t(&self, j: usize) -> f64 {
        self.points[j]
    }

    /// Step size `tau_j = t_j - t_{j-1}` for `j >= 1`.
    #[inline]
    pub fn tau(&self, j: usize) -> f64 {
        self.points[j] - self.points[j - 1]
    }

    /// Largest step `max_j tau_j`.
    pub fn max_tau(&self) -> f64 {
        (1..=self.steps()).map(|j| self.tau(j)).fold(0.0, f64::max)
    }

    /// `max_j tau_j / (tau^{1/r} t_j^{1-1/r})` with `tau = t_1`.
    pub fn quasi_graded_constant(&self) -> f64 {
        quasi_graded_ratio(&self.points, self.r)
    }

    /// `min_{j >= 2} t_{j-1} / t_j`, the constant `c` with `t_{j-1} >= c t_j`.
    pub fn min_local_ratio(&self) -> f64 {
        (2..=self.steps())
            .map(|j| self.points[j - 1] / self.points[j])
            .fold(1.0, f64::min)
    }
}

fn check_r(r: f64) -> Result<()> {
    if r >= 1.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidMesh(format!("grading exponent r = {r} must be >= 1")))
    }
}

fn validate_points(points: &[f64]) -> Result<()> {
    if points.len() < 2 {
        return Err(Error::InvalidMesh("a mesh needs at least two points".into()));
    }
    if points[0] != 0.0 {
        return Err(Error::InvalidMesh(format!("t_0 = {} must be 0", points[0])));
    }
    for (j, w) in points.windows(2).enumerate() {
        if !w[1].is_finite() || w[1] <= w[0] {
            return Err(Error::InvalidMesh(format!(
                "points must be strictly increasing (t_{} = {}, t_{} = {})",
                j,
                w[0],
                j + 1,
                w[1]
            )));
        }
    }
    Ok(())
}

/// Quasi-graded constant of an arbitrary point list.
///
/// Fails if the points do not form a valid mesh.
pub fn quasi_graded_constant(points: &[f64], r: f64) -> Result<f64> {
    check_r(r)?;
    validate_points(points)?;
    Ok(quasi_graded_ratio(points, r))
}

fn quasi_graded_ratio(points: &[f64], r: f64) -> f64 {
    let tau = points[1];
    let scale = tau.powf(1.0 / r);
    points
        .windows(2)
        .map(|w| (w[1] - w[0]) / (scale * w[1].powf(1.0 - 1.0 / r)))
        .fold(0.0, f64::max)
}

/// True iff `fine` has twice as many steps as `coarse`, the same grading and
/// horizon, and contains every coarse point at the even positions.
pub fn is_nested_refinement(coarse: &TemporalMesh, fine: &TemporalMesh) -> bool {
    if fine.steps() != 2 * coarse.steps() {
        return false;
    }
    if (fine.r - coarse.r).abs() > NESTING_RTOL * coarse.r {
        return false;
    }
    coarse.points.iter().enumerate().all(|(j, &t)| {
        let s = fine.points[2 * j];
        (s - t).abs() <= NESTING_RTOL * t.abs().max(coarse.horizon() * f64::EPSILON)
    })
}

/// Serializable mesh description: either the graded triple or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeshSpec {
    Graded {
        #[serde(rename = "M")]
        m: usize,
        r: f64,
        #[serde(rename = "T", default = "default_horizon")]
        horizon: f64,
    },
    Points {
        points: Vec<f64>,
        #[serde(default = "default_r")]
        r: f64,
    },
}

fn default_horizon() -> f64 {
    1.0
}

fn default_r() -> f64 {
    1.0
}

impl MeshSpec {
    pub fn build(&self) -> Result<TemporalMesh> {
        match self {
            MeshSpec::Graded { m, r, horizon } => TemporalMesh::graded(*m, *r, *horizon),
            MeshSpec::Points { points, r } => TemporalMesh::from_points(points.clone(), *r),
        }
    }
}
