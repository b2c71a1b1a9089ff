//! TOML run manifests.
//!
//! Syntax and schema problems become [`ManifestError`]s carrying a line and
//! column; builder problems are left to the runner.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use soliton_core::models::{ModelClass, ProfileKind, RadialPotential, WarpedRecipe};
use toml::Spanned;

pub const SCHEMA_VERSION: &str = "1";
pub const DEFAULT_GRID_COUNT: usize = 40;
pub const MAX_GRID_COUNT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Identities,
    Elliptic,
    Spectra,
    Classify,
    Volume,
}

impl Suite {
    pub fn as_str(&self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Elliptic => "elliptic",
            Suite::Spectra => "spectra",
            Suite::Classify => "classify",
            Suite::Volume => "volume",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    schema_version: Option<Spanned<String>>,
    models: Spanned<Vec<Spanned<RawModel>>>,
    #[serde(default)]
    suites: Vec<Suite>,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    tolerances: RawTolerances,
    output_path: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    seed: Option<u64>,
    count: Option<Spanned<i64>>,
    bounds: Option<Spanned<Vec<(f64, f64)>>>,
    volume_resolution: Option<Spanned<i64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    algebraic: Option<Spanned<f64>>,
    elliptic: Option<Spanned<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    builder: Option<String>,
    #[serde(default)]
    params: BTreeMap<String, f64>,
    warped: Option<RawWarped>,
    bounds: Option<Vec<(f64, f64)>>,
    perturb: Option<f64>,
    expect: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWarped {
    profile: String,
    #[serde(default = "one")]
    scale: f64,
    fiber_dimension: usize,
    lambda: f64,
    #[serde(default = "zero_name")]
    potential: String,
    #[serde(default)]
    coefficient: f64,
}

fn one() -> f64 {
    1.0
}

fn zero_name() -> String {
    "zero".into()
}

/// Where a model comes from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum ModelSource {
    Builder { builder: String, params: BTreeMap<String, f64> },
    Warped { recipe: WarpedRecipe },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelEntry {
    #[serde(flatten)]
    pub source: ModelSource,
    pub bounds: Option<Vec<(f64, f64)>>,
    /// `ε` in `f + ε x₁³`.
    pub perturb: Option<f64>,
    pub expect: Option<ModelClass>,
    /// 1-based line of the entry, for builder error messages.
    #[serde(skip)]
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    pub seed: u64,
    pub count: usize,
    pub bounds: Option<Vec<(f64, f64)>>,
    pub volume_resolution: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ToleranceSpec {
    pub algebraic: f64,
    pub elliptic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub schema_version: String,
    pub models: Vec<ModelEntry>,
    pub suites: Vec<Suite>,
    pub grid: GridSpec,
    pub tolerances: ToleranceSpec,
    pub output_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestError {
    pub file: String,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ManifestError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}: {}", self.file, self.line, self.column, self.message)
    }
}

impl std::error::Error for ManifestError {}

/// 1-based line and column of a byte offset.
fn locate(source: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(source.len());
    let before = &source[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(offset, |i| offset - i - 1) + 1;
    (line, column)
}

struct Locator<'a> {
    file: &'a str,
    source: &'a str,
}

impl Locator<'_> {
    fn at(&self, offset: usize, message: impl Into<String>) -> ManifestError {
        let (line, column) = locate(self.source, offset);
        ManifestError {
            file: self.file.to_string(),
            line,
            column,
            message: message.into(),
        }
    }
}

pub fn load(path: &Path) -> Result<Manifest, ManifestError> {
    let file = path.display().to_string();
    let source = std::fs::read_to_string(path).map_err(|e| ManifestError {
        file: file.clone(),
        line: 0,
        column: 0,
        message: format!("cannot read manifest: {e}"),
    })?;
    parse(&source, &file)
}

pub fn parse(source: &str, file: &str) -> Result<Manifest, ManifestError> {
    let loc = Locator { file, source };
    let raw: RawManifest = toml::from_str(source).map_err(|e| {
        let offset = e.span().map_or(0, |s| s.start);
        loc.at(offset, e.message().trim().to_string())
    })?;

    let schema_version = match raw.schema_version {
        Some(v) if v.get_ref() != SCHEMA_VERSION => {
            return Err(loc.at(v.span().start, format!("unsupported schema_version {:?}, expected \"1\"", v.get_ref())));
        }
        _ => SCHEMA_VERSION.to_string(),
    };

    let models_span = raw.models.span();
    let raw_models = raw.models.into_inner();
    if raw_models.is_empty() {
        return Err(loc.at(models_span.start, "manifest lists no models"));
    }
    let mut models = Vec::with_capacity(raw_models.len());
    for (i, spanned) in raw_models.into_iter().enumerate() {
        let start = spanned.span().start;
        let m = spanned.into_inner();
        let err = |msg: String| loc.at(start, format!("models[{i}]: {msg}"));
        let origin = match (m.builder, m.warped) {
            (Some(builder), None) => ModelSource::Builder { builder, params: m.params },
            (None, Some(w)) => {
                if !m.params.is_empty() {
                    return Err(err("`params` belongs to builder models; warped models take their values inline".into()));
                }
                let profile = ProfileKind::parse(&w.profile)
                    .ok_or_else(|| err(format!("unknown profile {:?} (sin, sinh, tanh, one)", w.profile)))?;
                let potential = RadialPotential::parse(&w.potential)
                    .ok_or_else(|| err(format!("unknown potential {:?} (zero, quadratic, log-cosh)", w.potential)))?;
                ModelSource::Warped {
                    recipe: WarpedRecipe {
                        profile,
                        scale: w.scale,
                        fiber_dimension: w.fiber_dimension,
                        lambda: w.lambda,
                        potential,
                        coefficient: w.coefficient,
                    },
                }
            }
            (Some(_), Some(_)) => return Err(err("give either `builder` or `warped`, not both".into())),
            (None, None) => return Err(err("missing `builder` or `warped`".into())),
        };
        if let Some(b) = &m.bounds {
            check_bounds(b).map_err(|msg| err(format!("bounds: {msg}")))?;
        }
        if let Some(eps) = m.perturb {
            if !eps.is_finite() {
                return Err(err("perturb must be finite".into()));
            }
        }
        let expect = match m.expect {
            Some(label) => Some(ModelClass::parse(&label).ok_or_else(|| err(format!("unknown class label {label:?}")))?),
            None => None,
        };
        models.push(ModelEntry {
            source: origin,
            bounds: m.bounds,
            perturb: m.perturb,
            expect,
            line: locate(source, start).0,
        });
    }

    let count = match raw.grid.count {
        Some(c) => {
            let v = *c.get_ref();
            if v < 1 || v as usize > MAX_GRID_COUNT {
                return Err(loc.at(c.span().start, format!("grid.count must be in [1, {MAX_GRID_COUNT}]")));
            }
            v as usize
        }
        None => DEFAULT_GRID_COUNT,
    };
    let bounds = match raw.grid.bounds {
        Some(b) => {
            check_bounds(b.get_ref()).map_err(|msg| loc.at(b.span().start, format!("grid.bounds: {msg}")))?;
            Some(b.into_inner())
        }
        None => None,
    };
    let volume_resolution = match raw.grid.volume_resolution {
        Some(r) => {
            let v = *r.get_ref();
            if !(1..=2000).contains(&v) {
                return Err(loc.at(r.span().start, "grid.volume_resolution must be in [1, 2000]"));
            }
            Some(v as usize)
        }
        None => None,
    };

    let tolerance = |t: Option<Spanned<f64>>, name: &str, default: f64| -> Result<f64, ManifestError> {
        match t {
            Some(v) if !(*v.get_ref() > 0.0 && v.get_ref().is_finite()) => {
                Err(loc.at(v.span().start, format!("tolerances.{name} must be a positive real")))
            }
            Some(v) => Ok(v.into_inner()),
            None => Ok(default),
        }
    };
    let defaults = soliton_core::verify::Tolerances::default();
    let tolerances = ToleranceSpec {
        algebraic: tolerance(raw.tolerances.algebraic, "algebraic", defaults.algebraic)?,
        elliptic: tolerance(raw.tolerances.elliptic, "elliptic", defaults.elliptic)?,
    };

    let mut suites = raw.suites;
    suites.dedup();
    Ok(Manifest {
        schema_version,
        models,
        suites,
        grid: GridSpec {
            seed: raw.grid.seed.unwrap_or(0),
            count,
            bounds,
            volume_resolution,
        },
        tolerances,
        output_path: raw.output_path,
    })
}

fn check_bounds(b: &[(f64, f64)]) -> Result<(), String> {
    for (k, (lo, hi)) in b.iter().enumerate() {
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(format!("interval {k} is [{lo}, {hi}]; need finite lo < hi"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_manifest() {
        let m = parse("[[models]]\nbuilder = \"gaussian\"\nparams = { n = 3, lambda = 0.5 }\n", "m.toml").unwrap();
        assert_eq!(m.models.len(), 1);
        assert_eq!(m.grid.count, DEFAULT_GRID_COUNT);
        assert_eq!(m.models[0].line, 1);
        match &m.models[0].source {
            ModelSource::Builder { params, .. } => assert_eq!(params["n"], 3.0),
            _ => panic!(),
        }
    }

    #[test]
    fn errors_carry_locations() {
        let e = parse("suites = [\"identities\"]\n\n[[models]]\nbuilder = \"gaussian\"\ncolour = 1\n", "m.toml").unwrap_err();
        assert_eq!(e.line, 5, "{e}");
        let e = parse("[[models]]\nbuilder = \"cigar\"\n[tolerances]\nelliptic = -1.0\n", "m.toml").unwrap_err();
        assert_eq!((e.line, e.column), (4, 12), "{e}");
        let e = parse("suites = [\"identities\", \"nope\"]\n[[models]]\nbuilder = \"cigar\"\n", "m.toml").unwrap_err();
        assert_eq!(e.line, 1);
        let e = parse("models = [\n", "m.toml").unwrap_err();
        assert!(e.line >= 1);
    }

    #[test]
    fn locate_counts_from_one() {
        assert_eq!(locate("ab\ncd", 0), (1, 1));
        assert_eq!(locate("ab\ncd", 4), (2, 2));
    }
}
