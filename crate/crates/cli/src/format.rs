//! JSON model and problem files.
//!
//! Both carry `format_version: 1`. Matrices are row-major nested arrays.
//! A cell is given either by `vertices` or by `halfspaces`
//! (`{"normal": [..], "offset": ..}` meaning `normal·x ≤ offset`); the state
//! box bounds every cell.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use reach_core::engine::{EngineConfig, Problem};
use reach_core::geometry::{convex_hull, polytope_from_halfspaces, AxisBox, Halfspace, Point};
use reach_core::linalg::{Mat, NumericsBudget, Vector};
use reach_core::model::{Cell, InitialCondition, LhaModel, Location};
use reach_core::policy::{DefaultPolicy, DeltaShrinkingPolicy, Policy, PolicyConfig};

use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfspaceSpec {
    pub normal: [f64; 2],
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halfspaces: Option<Vec<HalfspaceSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocationSpec {
    pub name: String,
    pub a: Vec<Vec<f64>>,
    pub u: Vec<f64>,
    /// Cell names.
    pub invariant: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: u32,
    pub state_box: BoxSpec,
    pub cells: Vec<CellSpec>,
    pub locations: Vec<LocationSpec>,
}

impl ModelFile {
    pub fn build(&self) -> Result<LhaModel, CliError> {
        check_version(self.format_version)?;
        let state_box = AxisBox::new(self.state_box.lower.clone(), self.state_box.upper.clone())
            .map_err(|e| CliError::Semantic(format!("state_box: {e}")))?;
        let cells = self
            .cells
            .iter()
            .map(|c| build_cell(c, &state_box))
            .collect::<Result<Vec<_>, _>>()?;
        let locations = self
            .locations
            .iter()
            .map(|l| build_location(l, &self.cells))
            .collect::<Result<Vec<_>, _>>()?;
        LhaModel::new(state_box, cells, locations).map_err(|e| CliError::Semantic(e.to_string()))
    }

    /// File form of a model, cells as vertex lists.
    pub fn from_model(model: &LhaModel) -> Self {
        let b = model.state_box();
        Self {
            format_version: FORMAT_VERSION,
            state_box: BoxSpec {
                lower: b.lower().to_vec(),
                upper: b.upper().to_vec(),
            },
            cells: model
                .cells()
                .iter()
                .map(|c| CellSpec {
                    name: c.name.clone(),
                    vertices: Some(c.polytope.vertices().iter().map(|v| [v.x, v.y]).collect()),
                    halfspaces: None,
                })
                .collect(),
            locations: model
                .locations()
                .iter()
                .map(|l| LocationSpec {
                    name: l.name.clone(),
                    a: l.a.row_iter().map(|r| r.iter().copied().collect()).collect(),
                    u: l.u.iter().copied().collect(),
                    invariant: l
                        .invariant_cells
                        .iter()
                        .map(|&c| model.cells()[c].name.clone())
                        .collect(),
                })
                .collect(),
        }
    }
}

fn check_version(v: u32) -> Result<(), CliError> {
    if v != FORMAT_VERSION {
        return Err(CliError::Semantic(format!(
            "unsupported format_version {v}, expected {FORMAT_VERSION}"
        )));
    }
    Ok(())
}

fn build_cell(spec: &CellSpec, state_box: &AxisBox) -> Result<Cell, CliError> {
    let err = |msg: String| CliError::Semantic(format!("cell `{}`: {msg}", spec.name));
    let polytope = match (&spec.vertices, &spec.halfspaces) {
        (Some(vs), None) => {
            let pts: Vec<Point> = vs.iter().map(|&[x, y]| Point::new(x, y)).collect();
            convex_hull(&pts).map_err(|e| err(e.to_string()))?
        }
        (None, Some(hs)) => {
            let hs = hs
                .iter()
                .map(|h| Halfspace::new(Point::from(h.normal), h.offset))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| err(e.to_string()))?;
            polytope_from_halfspaces(&hs, state_box).map_err(|e| err(e.to_string()))?
        }
        _ => return Err(err("give exactly one of `vertices` or `halfspaces`".into())),
    };
    Ok(Cell {
        name: spec.name.clone(),
        polytope,
    })
}

fn build_location(spec: &LocationSpec, cells: &[CellSpec]) -> Result<Location, CliError> {
    let err = |msg: String| CliError::Semantic(format!("location `{}`: {msg}", spec.name));
    let n = spec.a.len();
    if spec.a.iter().any(|r| r.len() != n) {
        return Err(err("`a` must be a square matrix".into()));
    }
    let flat: Vec<f64> = spec.a.iter().flatten().copied().collect();
    let invariant_cells = spec
        .invariant
        .iter()
        .map(|name| {
            cells
                .iter()
                .position(|c| &c.name == name)
                .ok_or_else(|| err(format!("unknown cell `{name}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Location {
        name: spec.name.clone(),
        a: Mat::from_row_slice(n, n, &flat),
        u: Vector::from_row_slice(&spec.u),
        invariant_cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    /// Path relative to the problem file.
    Path(PathBuf),
    Inline(Box<ModelFile>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub location: String,
    pub x0: [f64; 2],
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    #[default]
    Default,
    DeltaShrinking,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    pub delta: f64,
    pub max_retries: usize,
    pub shrink: f64,
    pub h_scale: f64,
}

impl Default for PolicySpec {
    fn default() -> Self {
        let c = PolicyConfig::default();
        Self {
            kind: PolicyKind::Default,
            delta: c.delta,
            max_retries: c.max_retries,
            shrink: c.shrink,
            h_scale: c.h_scale,
        }
    }
}

impl PolicySpec {
    pub fn config(&self) -> PolicyConfig {
        PolicyConfig {
            delta: self.delta,
            max_retries: self.max_retries,
            shrink: self.shrink,
            h_scale: self.h_scale,
        }
    }

    pub fn build(&self) -> Result<Box<dyn Policy>, CliError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !(positive(self.delta) && positive(self.h_scale) && self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(CliError::Semantic(
                "policy: delta and h_scale must be positive and shrink in (0, 1)".into(),
            ));
        }
        Ok(match self.kind {
            PolicyKind::Default => Box::new(DefaultPolicy::new(self.config())),
            PolicyKind::DeltaShrinking => Box::new(DeltaShrinkingPolicy::new(self.config())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub format_version: u32,
    pub model: ModelRef,
    pub initial: InitialSpec,
    pub horizon: f64,
    pub max_jumps: usize,
    pub epsilon: f64,
    #[serde(default)]
    pub budget: NumericsBudget,
    #[serde(default)]
    pub policy: PolicySpec,
    #[serde(default)]
    pub engine: EngineConfig,
}

/// A problem file with its model resolved.
#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub file: ProblemFile,
    pub model: LhaModel,
    pub init: InitialCondition,
    pub problem: Problem,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn load_model(path: &Path) -> Result<LhaModel, CliError> {
    let file: ModelFile = parse(path, &read(path)?)?;
    file.build()
}

pub fn load_problem(path: &Path) -> Result<LoadedProblem, CliError> {
    let file: ProblemFile = parse(path, &read(path)?)?;
    check_version(file.format_version)?;
    let model = match &file.model {
        ModelRef::Path(p) => {
            let base = path.parent().unwrap_or_else(|| Path::new("."));
            load_model(&base.join(p))?
        }
        ModelRef::Inline(m) => m.build()?,
    };
    let location = model.location_by_name(&file.initial.location).ok_or_else(|| {
        CliError::Semantic(format!("initial location `{}` is not in the model", file.initial.location))
    })?;
    let init = InitialCondition {
        location,
        x0: Point::from(file.initial.x0),
    };
    let problem = Problem {
        horizon: file.horizon,
        max_jumps: file.max_jumps,
        epsilon: file.epsilon,
    };
    Ok(LoadedProblem {
        file,
        model,
        init,
        problem,
    })
}
