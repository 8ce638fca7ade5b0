//! Experiment configuration files (TOML).
//!
//! ```toml
//! seed = 1
//! n = 1000000
//! eta = 0.3
//! tol = 1e-6
//! mode = "all"            # discrete | continuum | predictor | all
//!
//! [domain]
//! shape = "ball"          # ball | cube | box | orthant | cone | cusp
//! dim = 3
//! radius = 1.0
//!
//! [density]
//! kind = "uniform"
//!
//! [field]
//! kind = "coordinate_sum"
//! dim = 3
//!
//! [t_grid]
//! count = 20
//! min = 0.01
//! max = 0.05
//! spacing = "log"
//!
//! [[points]]
//! name = "boundary"
//! coords = [1.0, 0.0, 0.0]
//! ```

use std::fmt;
use std::path::Path;

use kinklap::geometry::{DistanceMode, Domain};
use kinklap::operators::{KernelParams, DEFAULT_ETA};
use kinklap::sampling::{DensityField, Monomial, Sampler, ScalarField};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Discrete,
    Continuum,
    Predictor,
    #[default]
    All,
}

impl Mode {
    pub fn discrete(self) -> bool {
        matches!(self, Mode::Discrete | Mode::All)
    }

    pub fn continuum(self) -> bool {
        matches!(self, Mode::Continuum | Mode::All)
    }

    pub fn predictor(self) -> bool {
        matches!(self, Mode::Predictor | Mode::All)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Discrete => "discrete",
            Mode::Continuum => "continuum",
            Mode::Predictor => "predictor",
            Mode::All => "all",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainSpec {
    Ball {
        dim: usize,
        radius: f64,
    },
    Cube {
        dim: usize,
    },
    Box {
        edges: Vec<f64>,
    },
    Orthant {
        dim: usize,
        depth: usize,
        extent: f64,
    },
    Cone {
        dim: usize,
        half_angle: f64,
        height: f64,
    },
    Cusp {
        dim: usize,
        exponent: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        half_width: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        top: Option<f64>,
    },
}

impl DomainSpec {
    pub fn build(&self, mode: DistanceMode) -> kinklap::Result<Domain> {
        let d = match self {
            DomainSpec::Ball { dim, radius } => Domain::ball(*dim, *radius),
            DomainSpec::Cube { dim } => Domain::unit_cube(*dim),
            DomainSpec::Box { edges } => Domain::boxed(edges.clone()),
            DomainSpec::Orthant { dim, depth, extent } => {
                Domain::orthant_model(*dim, *depth, *extent)
            }
            DomainSpec::Cone {
                dim,
                half_angle,
                height,
            } => Domain::cone(*dim, *half_angle, *height),
            DomainSpec::Cusp {
                dim,
                exponent,
                half_width,
                top,
            } => Domain::cusp_with(
                *dim,
                *exponent,
                half_width.unwrap_or(1.0),
                top.unwrap_or(2.0),
            ),
        }?;
        Ok(d.with_mode(mode))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coef: f64,
    pub exponents: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    CoordinateSum {
        dim: usize,
    },
    Linear {
        a: Vec<f64>,
    },
    /// `½ xᵀAx + b·x + c`.
    Quadratic {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        c: f64,
    },
    Polynomial {
        dim: usize,
        terms: Vec<TermSpec>,
    },
}

impl FieldSpec {
    pub fn build(&self) -> kinklap::Result<ScalarField> {
        match self {
            FieldSpec::CoordinateSum { dim } => Ok(ScalarField::CoordinateSum { dim: *dim }),
            FieldSpec::Linear { a } => Ok(ScalarField::Linear { a: a.clone() }),
            FieldSpec::Quadratic { a, b, c } => {
                let d = a.len();
                if a.iter().any(|row| row.len() != d) {
                    return Err(kinklap::Error::Argument(
                        "quadratic matrix must be square".into(),
                    ));
                }
                let m = DMatrix::from_fn(d, d, |i, j| a[i][j]);
                ScalarField::quadratic(m, b.clone(), *c)
            }
            FieldSpec::Polynomial { dim, terms } => ScalarField::polynomial(
                *dim,
                terms
                    .iter()
                    .map(|t| Monomial {
                        coef: t.coef,
                        exponents: t.exponents.clone(),
                    })
                    .collect(),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    Uniform,
    /// A field normalized over the domain, sampled by rejection under `envelope`.
    Normalized {
        field: FieldSpec,
        envelope: f64,
    },
}

impl DensitySpec {
    pub fn build(&self, domain: &Domain) -> kinklap::Result<DensityField> {
        match self {
            DensitySpec::Uniform => Ok(DensityField::uniform(domain)),
            DensitySpec::Normalized { field, .. } => {
                DensityField::normalized(field.build()?, domain)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TGrid {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    #[serde(default)]
    pub spacing: Spacing,
}

impl TGrid {
    /// Bandwidths from `max` down to `min`.
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.max],
            c => (0..c)
                .map(|j| {
                    let s = j as f64 / (c - 1) as f64;
                    match self.spacing {
                        Spacing::Log => self.max * (self.min / self.max).powf(s),
                        Spacing::Linear => self.max - s * (self.max - self.min),
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub name: String,
    pub coords: Vec<f64>,
}

/// Deviation runs for the `concentration` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationSpec {
    pub point: String,
    pub c0: f64,
    pub beta: f64,
    pub n_grid: Vec<u64>,
    pub trials: usize,
}

fn default_eta() -> f64 {
    DEFAULT_ETA
}

fn default_tol() -> f64 {
    1e-6
}

fn default_order() -> usize {
    1
}

fn default_moment_samples() -> usize {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    pub seed: u64,
    pub n: usize,
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Relative quadrature tolerance.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub distance: DistanceMode,
    #[serde(default = "default_order")]
    pub predictor_order: usize,
    /// Monte Carlo budget for sectors without closed-form moments.
    #[serde(default = "default_moment_samples")]
    pub moment_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    pub domain: DomainSpec,
    pub density: DensitySpec,
    pub field: FieldSpec,
    pub t_grid: TGrid,
    pub points: Vec<PointSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concentration: Option<ConcentrationSpec>,
}

/// The configuration with every object built and checked.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub domain: Domain,
    pub density: DensityField,
    pub field: ScalarField,
    pub ts: Vec<f64>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.resolve()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        ExperimentConfig::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn emit(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    fn field_error(field: &str, e: impl fmt::Display) -> CliError {
        CliError::Config(format!("field `{field}`: {e}"))
    }

    /// Builds the domain, density and field and validates every cross-reference.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let domain = self
            .domain
            .build(self.distance)
            .map_err(|e| Self::field_error("domain", e))?;
        let field = self
            .field
            .build()
            .map_err(|e| Self::field_error("field", e))?;
        if field.dim() != domain.dim() {
            return Err(Self::field_error(
                "field",
                format!(
                    "dimension {} does not match the domain's {}",
                    field.dim(),
                    domain.dim()
                ),
            ));
        }
        let density = self
            .density
            .build(&domain)
            .map_err(|e| Self::field_error("density", e))?;
        if let DensitySpec::Normalized { envelope, .. } = &self.density {
            if *envelope <= 0.0 || envelope.is_nan() {
                return Err(Self::field_error("density.envelope", "must be positive"));
            }
        }
        if self.t_grid.count > 0 {
            let g = &self.t_grid;
            if !(g.min > 0.0 && g.max < 1.0 && g.min <= g.max) {
                return Err(Self::field_error("t_grid", "need 0 < min ≤ max < 1"));
            }
            KernelParams::new(g.min, self.eta).map_err(|e| Self::field_error("eta", e))?;
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Self::field_error("tol", "must lie in (0, 1)"));
        }
        if !(1..=3).contains(&self.predictor_order) {
            return Err(Self::field_error("predictor_order", "must be 1, 2 or 3"));
        }
        for (i, p) in self.points.iter().enumerate() {
            let inside = domain
                .contains(&p.coords)
                .map_err(|e| Self::field_error(&format!("points[{i}].coords"), e))?;
            if !inside {
                return Err(Self::field_error(
                    &format!("points[{i}].coords"),
                    format!("point `{}` lies outside the domain", p.name),
                ));
            }
        }
        if let Some(c) = &self.concentration {
            if self.point(&c.point).is_none() {
                return Err(Self::field_error(
                    "concentration.point",
                    format!("no point named `{}`", c.point),
                ));
            }
            if c.trials == 0 || c.n_grid.is_empty() {
                return Err(Self::field_error(
                    "concentration",
                    "need trials ≥ 1 and a nonempty n_grid",
                ));
            }
        }
        Ok(Resolved {
            ts: self.t_grid.values(),
            domain,
            density,
            field,
        })
    }

    pub fn point(&self, name: &str) -> Option<&PointSpec> {
        self.points.iter().find(|p| p.name == name)
    }

    /// Sampler for the configured density with the run's seed.
    pub fn sampler(&self, resolved: &Resolved) -> kinklap::Result<Sampler> {
        match &self.density {
            DensitySpec::Uniform => Sampler::uniform(&resolved.domain, self.seed),
            DensitySpec::Normalized { envelope, .. } => {
                Sampler::with_density(&resolved.domain, &resolved.density, *envelope, self.seed)
            }
        }
    }
}
