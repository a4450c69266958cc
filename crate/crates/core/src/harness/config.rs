//! Study and problem configuration files: TOML, with JSON as a fallback.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::catalog::{
    fisher_kolmogorov, test_b, CoefficientSpec, InitialSpec, NonlinearitySpec, ProblemId, SourceSpec,
};
use crate::error::{Error, Result};
use crate::fdspace::{Coefficients, PdeProblem, SpatialGrid};
use crate::l1op::check_alpha;
use crate::mesh::MeshSpec;
use crate::quasilinear::QuasilinearProblem;
use crate::schemes::{Interval, SchemeDescriptor, SchemeKind};

/// Parses `text` as TOML, falling back to JSON.
pub fn parse_config<T: DeserializeOwned>(text: &str) -> Result<T> {
    match toml::from_str(text) {
        Ok(v) => Ok(v),
        Err(toml_err) => serde_json::from_str(text)
            .map_err(|json_err| Error::Config(format!("not valid TOML ({toml_err}) nor JSON ({json_err})"))),
    }
}

pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// How errors are measured in a convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    /// Exact solution when known, otherwise double mesh.
    #[default]
    Auto,
    Exact,
    DoubleMesh,
}

fn default_scheme() -> SchemeKind {
    SchemeKind::Implicit
}

/// A convergence study over an `M`-ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub problem: ProblemId,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeKind,
    pub alpha: f64,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub r: Option<f64>,
    /// Step counts; each entry must double the previous one.
    pub ladder: Vec<usize>,
    /// Interior spatial nodes (spatial problems only).
    #[serde(default, rename = "N")]
    pub n: Option<usize>,
    #[serde(default)]
    pub stabilization: Option<f64>,
    #[serde(default)]
    pub reference: Reference,
}

impl StudyConfig {
    pub fn sigma(&self) -> f64 {
        self.sigma.unwrap_or_else(|| self.problem.default_sigma(self.alpha))
    }

    pub fn grading(&self) -> f64 {
        self.r
            .unwrap_or_else(|| self.problem.default_grading(self.alpha, self.sigma()))
    }

    pub fn nodes(&self) -> usize {
        self.n.unwrap_or(match self.problem {
            ProblemId::TestA => 0,
            ProblemId::TestB => 1 << 11,
            ProblemId::FisherKolmogorov => 1 << 12,
        })
    }

    pub fn uses_double_mesh(&self) -> bool {
        match self.reference {
            Reference::Auto => !self.problem.has_exact_solution(),
            Reference::Exact => false,
            Reference::DoubleMesh => true,
        }
    }

    pub fn grid(&self) -> Result<Option<SpatialGrid>> {
        if !self.problem.is_spatial() {
            return Ok(None);
        }
        let (lo, hi) = self.problem.domain();
        SpatialGrid::new(lo, hi, self.nodes()).map(Some)
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        let sigma = self.sigma();
        if !(sigma > 0.0) {
            return Err(Error::Config(format!("sigma = {sigma} must be positive")));
        }
        if !(self.grading() >= 1.0) {
            return Err(Error::Config(format!("grading r = {} must be >= 1", self.grading())));
        }
        if self.ladder.is_empty() || self.ladder.contains(&0) {
            return Err(Error::Config("ladder must be a non-empty list of positive step counts".into()));
        }
        if self.ladder.windows(2).any(|w| w[1] != 2 * w[0]) {
            return Err(Error::Config("each ladder entry must double the previous one".into()));
        }
        if self.reference == Reference::Exact && !self.problem.has_exact_solution() {
            return Err(Error::Config(format!("problem `{}` has no exact solution", self.problem)));
        }
        if self.problem.is_spatial() && self.nodes() == 0 {
            return Err(Error::Config("N must be positive".into()));
        }
        if self.problem == ProblemId::FisherKolmogorov && self.scheme != SchemeKind::Implicit {
            return Err(Error::Config("the quasilinear problem is only solved by the implicit scheme".into()));
        }
        Ok(())
    }
}

/// Problem description for `solve-pde`.
///
/// Either names a catalog problem (`problem = "test-b"`) or assembles one from
/// the coefficient catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeConfig {
    #[serde(default)]
    pub problem: Option<ProblemId>,
    pub alpha: f64,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeKind,
    #[serde(default)]
    pub stabilization: Option<f64>,
    pub mesh: MeshSpec,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default)]
    pub domain: Option<[f64; 2]>,
    #[serde(default)]
    pub a: Option<CoefficientSpec>,
    #[serde(default)]
    pub b: Option<CoefficientSpec>,
    #[serde(default)]
    pub c: Option<CoefficientSpec>,
    #[serde(default)]
    pub nonlinearity: Option<NonlinearitySpec>,
    /// Declared solution range for the scheme constants.
    #[serde(default)]
    pub range: Option<[f64; 2]>,
    #[serde(default)]
    pub source: Option<SourceSpec>,
    #[serde(default)]
    pub u0: Option<InitialSpec>,
}

/// A problem assembled from a config, ready to solve.
pub enum BuiltProblem {
    Semilinear(PdeProblem),
    Quasilinear(QuasilinearProblem),
}

impl PdeConfig {
    pub fn grid(&self) -> Result<SpatialGrid> {
        let (lo, hi) = match (self.domain, self.problem) {
            (Some([lo, hi]), _) => (lo, hi),
            (None, Some(p)) if p.is_spatial() => p.domain(),
            _ => (0.0, 1.0),
        };
        SpatialGrid::new(lo, hi, self.n)
    }

    pub fn build(&self) -> Result<BuiltProblem> {
        check_alpha(self.alpha)?;
        match self.problem {
            Some(ProblemId::TestA) => Err(Error::Config("test-a is a scalar problem; use solve-ode".into())),
            Some(ProblemId::TestB) => {
                let sigma = self.sigma.unwrap_or(self.alpha);
                Ok(BuiltProblem::Semilinear(test_b(self.alpha, sigma, self.scheme, self.stabilization)?))
            }
            Some(ProblemId::FisherKolmogorov) => Ok(BuiltProblem::Quasilinear(fisher_kolmogorov(self.alpha)?)),
            None => {
                let grid = self.grid()?;
                let coeffs = Coefficients {
                    a: self.a.unwrap_or(CoefficientSpec::Constant(1.0)).build(),
                    b: self.b.unwrap_or(CoefficientSpec::Constant(0.0)).build(),
                    c: self.c.unwrap_or(CoefficientSpec::Constant(0.0)).build(),
                };
                let [lo, hi] = self.range.unwrap_or([-2.0, 2.0]);
                let range = Interval::new(lo, hi)?;
                let f = self.nonlinearity.unwrap_or(NonlinearitySpec::Zero).build();
                let scheme = match self.scheme {
                    SchemeKind::StabilizedImex => SchemeDescriptor::stabilized(f, range, self.stabilization)?,
                    k => SchemeDescriptor::new(k, f, range)?,
                };
                Ok(BuiltProblem::Semilinear(PdeProblem {
                    alpha: self.alpha,
                    coeffs,
                    scheme,
                    source: self.source.unwrap_or(SourceSpec::Zero).build(),
                    u0: self.u0.unwrap_or(InitialSpec::Sine).build(grid.x_lo, grid.x_hi),
                    horizon: 1.0,
                    exact: None,
                }))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn study_from_toml_and_json() {
        let toml_text = r#"
problem = "test-b"
scheme = "imex2"
alpha = 0.4
ladder = [128, 256, 512]
N = 512
"#;
        let cfg: StudyConfig = parse_config(toml_text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.scheme, SchemeKind::Imex2Newton);
        assert_eq!(cfg.sigma(), 0.4);
        assert!((cfg.grading() - 4.0).abs() < 1e-15);
        assert!(!cfg.uses_double_mesh());

        let json_text = serde_json::to_string(&cfg).unwrap();
        let back: StudyConfig = parse_config(&json_text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn study_validation() {
        let base: StudyConfig =
            parse_config(r#"{"problem": "fisher-kolmogorov", "alpha": 0.5, "ladder": [16, 32]}"#).unwrap();
        base.validate().unwrap();
        assert!(base.uses_double_mesh());
        assert!((base.grading() - 3.0).abs() < 1e-15);

        let mut bad = base.clone();
        bad.ladder = vec![16, 48];
        assert!(bad.validate().is_err());
        bad = base.clone();
        bad.reference = Reference::Exact;
        assert!(bad.validate().is_err());
        bad = base.clone();
        bad.alpha = 1.0;
        assert!(bad.validate().is_err());
        bad = base.clone();
        bad.scheme = SchemeKind::Imex1;
        assert!(bad.validate().is_err());
        assert!(parse_config::<StudyConfig>("problem = \"test-a\"\nalpha = 0.5\nladder = [4]\ncolour = 1").is_err());
    }

    #[test]
    fn pde_config_from_catalog() {
        let cfg: PdeConfig = parse_config(
            r#"
alpha = 0.5
scheme = "imex1"
N = 31
mesh = { M = 16, r = 2.0 }
domain = [0.0, 2.0]
a = { c0 = 1.0, c1 = 0.5 }
c = 1.0
nonlinearity = "allen-cahn"
range = [-1.5, 1.5]
u0 = "parabola"
"#,
        )
        .unwrap();
        let grid = cfg.grid().unwrap();
        assert_eq!(grid.x_hi, 2.0);
        let BuiltProblem::Semilinear(p) = cfg.build().unwrap() else {
            panic!("expected a semilinear problem")
        };
        assert_eq!((p.coeffs.a)(1.0, 0.0), 1.5);
        assert_eq!((p.u0)(1.0), 1.0);
        assert_eq!(p.scheme.kind, SchemeKind::Imex1);
    }
}
