//! TOML scenario files: domain, physics, discretization and study plans.
//!
//! A scenario is the serializable description of one experiment. Geometry is
//! restricted to axis-aligned rectangles for material regions and obstacles,
//! which covers layered media, mesas, notches and rectangular scatterers.
//! [`Scenario::build`] turns a scenario into the generic runtime objects
//! (configuration, mesh, spectral ladder, basis) for any scalar type.

use std::sync::Arc;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::assembly::FluxParameters;
use crate::error::{Error, Result};
use crate::geometry::{build_structured, ingest_mesh, rect, Mesh, ProblemConfig, Region};
use crate::oracles::{three_layer, two_layer, FieldEval};
use crate::scalar::Real;

/// A complex number in TOML: either a plain float or `{ re = ..., im = ... }`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexSpec {
    Real(f64),
    Complex { re: f64, im: f64 },
}

impl ComplexSpec {
    pub fn to_complex<R: Real>(self) -> Complex<R> {
        match self {
            ComplexSpec::Real(re) => Complex::new(R::of(re), R::zero()),
            ComplexSpec::Complex { re, im } => Complex::new(R::of(re), R::of(im)),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainSpec {
    /// Period L of the grating.
    pub period: f64,
    /// Half-height H of the truncated cell.
    pub half_height: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhysicsSpec {
    pub k: f64,
    /// Incidence angle in [-pi, 0].
    pub theta: f64,
    #[serde(default = "one")]
    pub eps_plus: f64,
    #[serde(default = "one_spec")]
    pub eps_minus: ComplexSpec,
}

fn one() -> f64 {
    1.0
}

fn one_spec() -> ComplexSpec {
    ComplexSpec::Real(1.0)
}

/// Axis-aligned rectangular material region.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionSpec {
    pub x1: [f64; 2],
    pub x2: [f64; 2],
    pub eps: ComplexSpec,
}

/// Axis-aligned rectangular impenetrable obstacle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObstacleSpec {
    pub x1: [f64; 2],
    pub x2: [f64; 2],
}

/// DtN truncation order: explicit, or `"auto"` for one more than the
/// propagative cutoff.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TruncationSpec {
    Fixed(usize),
    Named(String2),
}

/// Newtype so that serde accepts exactly the string `"auto"`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum String2 {
    #[serde(rename = "auto")]
    Auto,
}

impl Default for TruncationSpec {
    fn default() -> Self {
        TruncationSpec::Named(String2::Auto)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FluxSpec {
    pub a: f64,
    pub b: f64,
    pub d: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscretizationSpec {
    /// Target mesh width for the structured generator.
    pub h: f64,
    /// Plane waves per element.
    pub p: usize,
    #[serde(default)]
    pub m: TruncationSpec,
    #[serde(default)]
    pub flux: Option<FluxSpec>,
    /// Rotation of the plane-wave direction fan.
    #[serde(default)]
    pub rotation: f64,
    /// Path to a mesh file; if absent the structured generator is used.
    #[serde(default)]
    pub mesh_file: Option<String>,
}

/// Reference field for error measurement in studies.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceSpec {
    /// Fresnel solution for one flat interface at x2 = 0.
    TwoLayer,
    /// Slab solution for a symmetric layer |x2| < d.
    ThreeLayer,
    /// Discrete solution with refined parameters (`p_ref`, `m_ref`).
    Refined,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudySpec {
    /// `"p"` or `"m"`.
    pub sweep: String,
    pub values: Vec<usize>,
    pub reference: ReferenceSpec,
    #[serde(default)]
    pub p_ref: Option<usize>,
    #[serde(default)]
    pub m_ref: Option<usize>,
    #[serde(default = "default_quad")]
    pub quad_order: usize,
}

fn default_quad() -> usize {
    15
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OutputSpec {
    /// Field sampling grid `[nx, ny]`.
    #[serde(default)]
    pub field_grid: Option<[usize; 2]>,
    /// Also dump the assembled matrix.
    #[serde(default)]
    pub matrix: bool,
}

/// A full experiment description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub domain: DomainSpec,
    pub physics: PhysicsSpec,
    #[serde(default, rename = "region")]
    pub regions: Vec<RegionSpec>,
    #[serde(default, rename = "obstacle")]
    pub obstacles: Vec<ObstacleSpec>,
    pub discretization: DiscretizationSpec,
    #[serde(default)]
    pub study: Option<StudySpec>,
    #[serde(default)]
    pub output: Option<OutputSpec>,
}

/// Runtime objects built from a scenario.
pub struct Problem<R: Real> {
    pub config: ProblemConfig<R>,
    pub mesh: Arc<Mesh<R>>,
    pub p: usize,
    pub m: usize,
    pub rotation: R,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Builds the physical configuration for a scalar type.
    pub fn config<R: Real>(&self) -> Result<ProblemConfig<R>> {
        let flux = match &self.discretization.flux {
            Some(f) => FluxParameters { a: R::of(f.a), b: R::of(f.b), d: R::of(f.d) },
            None => FluxParameters::default(),
        };
        let config = ProblemConfig {
            period: R::of(self.domain.period),
            half_height: R::of(self.domain.half_height),
            k: R::of(self.physics.k),
            theta: R::of(self.physics.theta),
            eps_plus: R::of(self.physics.eps_plus),
            eps_minus: self.physics.eps_minus.to_complex(),
            regions: self
                .regions
                .iter()
                .map(|r| Region {
                    polygon: rect(
                        R::of(r.x1[0]),
                        R::of(r.x1[1]),
                        R::of(r.x2[0]),
                        R::of(r.x2[1]),
                    ),
                    eps: r.eps.to_complex(),
                })
                .collect(),
            obstacles: self
                .obstacles
                .iter()
                .map(|o| {
                    rect(
                        R::of(o.x1[0]),
                        R::of(o.x1[1]),
                        R::of(o.x2[0]),
                        R::of(o.x2[1]),
                    )
                })
                .collect(),
            flux,
        };
        config.validate()?;
        Ok(config)
    }

    /// Resolves the DtN truncation order.
    pub fn truncation<R: Real>(&self, config: &ProblemConfig<R>) -> Result<usize> {
        match self.discretization.m {
            TruncationSpec::Fixed(m) => Ok(m),
            TruncationSpec::Named(String2::Auto) => crate::analysis::auto_truncation(config),
        }
    }

    /// Builds configuration and mesh (from file or structured generator).
    pub fn build<R: Real>(&self) -> Result<Problem<R>> {
        let config = self.config::<R>()?;
        let mesh = match &self.discretization.mesh_file {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                ingest_mesh(&text, &config)?
            }
            None => build_structured(&config, R::of(self.discretization.h))?,
        };
        let m = self.truncation(&config)?;
        Ok(Problem {
            config,
            mesh: Arc::new(mesh),
            p: self.discretization.p,
            m,
            rotation: R::of(self.discretization.rotation),
        })
    }

    /// Constructs the analytic reference field named by the study section,
    /// if it is analytic.
    pub fn analytic_reference<R: Real>(&self) -> Result<Option<Box<dyn FieldEval<R>>>> {
        let Some(study) = &self.study else {
            return Ok(None);
        };
        match study.reference {
            ReferenceSpec::TwoLayer => {
                let sol = two_layer(
                    R::of(self.physics.k),
                    R::of(self.physics.theta),
                    self.physics.eps_minus.to_complex::<R>(),
                )?;
                Ok(Some(Box::new(sol)))
            }
            ReferenceSpec::ThreeLayer => {
                // The slab is the (single) region differing from eps_plus;
                // it must be symmetric about x2 = 0 and span the full period.
                let slab = self
                    .regions
                    .iter()
                    .find(|r| !matches!(r.eps, ComplexSpec::Real(e) if e == self.physics.eps_plus))
                    .ok_or_else(|| Error::Config("no slab region found".into()))?;
                let d = slab.x2[1];
                if (slab.x2[0] + d).abs() > 1e-12 {
                    return Err(Error::Config("slab region must be symmetric in x2".into()));
                }
                let eps_in = match slab.eps {
                    ComplexSpec::Real(e) => e,
                    ComplexSpec::Complex { .. } => {
                        return Err(Error::Config("slab oracle needs real permittivity".into()))
                    }
                };
                let sol = three_layer(
                    R::of(self.physics.k),
                    R::of(self.physics.theta),
                    R::of(eps_in),
                    R::of(d),
                )?;
                Ok(Some(Box::new(sol)))
            }
            ReferenceSpec::Refined => Ok(None),
        }
    }
}

/// Parses a scenario from TOML, after applying `key.path=value` overrides.
pub fn load_with_overrides(text: &str, overrides: &[String]) -> Result<Scenario> {
    let mut value: toml::Value =
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    for ov in overrides {
        let (path, raw) = ov
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{ov}' is not key=value")))?;
        // Parse the right-hand side as a TOML value.
        let parsed: toml::Value = toml::from_str(&format!("v = {raw}"))
            .map(|t: toml::Value| t["v"].clone())
            .or_else(|_| {
                toml::from_str(&format!("v = \"{raw}\""))
                    .map(|t: toml::Value| t["v"].clone())
            })
            .map_err(|e| Error::Config(format!("override value '{raw}': {e}")))?;
        let mut cursor = &mut value;
        let parts: Vec<&str> = path.trim().split('.').collect();
        let (last, inner) = parts.split_last().unwrap();
        for part in inner {
            let table = cursor
                .as_table_mut()
                .ok_or_else(|| Error::Config(format!("override path '{path}' hits a non-table")))?;
            cursor = table
                .entry(part.to_string())
                .or_insert(toml::Value::Table(Default::default()));
        }
        cursor
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override path '{path}' hits a non-table")))?
            .insert(last.to_string(), parsed);
    }
    value.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
[domain]
period = 6.283185307179586
half_height = 3.0

[physics]
k = 5.0
theta = -1.0471975511965976
eps_minus = 1.5

[[region]]
x1 = [0.0, 6.283185307179586]
x2 = [-3.0, 0.0]
eps = 1.5

[discretization]
h = 1.5
p = 10

[study]
sweep = "p"
values = [3, 5, 7]
reference = "two_layer"
"#;

    #[test]
    fn parses_and_builds() {
        let sc = Scenario::from_toml_str(EXAMPLE).unwrap();
        let prob = sc.build::<f64>().unwrap();
        assert_eq!(prob.p, 10);
        // auto truncation: ceil(M*) + 1 with M* = 8.62...
        assert_eq!(prob.m, 10);
        assert!(!prob.mesh.elements.is_empty());
        assert!(sc.analytic_reference::<f64>().unwrap().is_some());
    }

    #[test]
    fn complex_permittivity_and_fixed_m() {
        let text = EXAMPLE
            .replace("eps_minus = 1.5", "eps_minus = { re = 1.5525, im = 0.25 }")
            .replace("p = 10", "p = 10\nm = 12")
            .replace("eps = 1.5", "eps = { re = 1.5525, im = 0.25 }");
        let sc = Scenario::from_toml_str(&text).unwrap();
        let prob = sc.build::<f64>().unwrap();
        assert_eq!(prob.m, 12);
        // Auto truncation must fail for lossy lower media.
        let auto = EXAMPLE
            .replace("eps_minus = 1.5", "eps_minus = { re = 1.5525, im = 0.25 }")
            .replace("eps = 1.5", "eps = { re = 1.5525, im = 0.25 }");
        let sc = Scenario::from_toml_str(&auto).unwrap();
        assert!(sc.build::<f64>().is_err());
    }

    #[test]
    fn overrides_replace_nested_keys() {
        let sc = load_with_overrides(
            EXAMPLE,
            &["discretization.p=14".into(), "physics.k=4.0".into(), "discretization.m=\"auto\"".into()],
        )
        .unwrap();
        assert_eq!(sc.discretization.p, 14);
        assert_eq!(sc.physics.k, 4.0);
        let bad = load_with_overrides(EXAMPLE, &["nonsense".into()]);
        assert!(bad.is_err());
    }
}
