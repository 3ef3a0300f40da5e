//! Scenario configuration (TOML). The wavenumber `k` and strip half-width
//! `kappa` are always derived from `eps`, `k1`, `k2`; setting them is an error.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use qpwh::{Params, WhError, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error in `{}`: {}", self.field, self.reason)
    }
}

impl std::error::Error for ConfigError {}

fn err(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError { field: field.into(), reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Solve,
    Continue,
    Crossing,
    Field,
    Wh1d,
    Uniqueness,
    SingularMap,
}

impl Task {
    pub fn parse(s: &str) -> Result<Task, ConfigError> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| err("task", format!("unknown task {s:?} (solve | continue | crossing | field | wh1d | uniqueness | singular-map)")))
    }

    pub fn needs_strip(&self) -> bool {
        matches!(self, Task::Solve | Task::Continue | Task::Crossing | Task::Field)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsBlock {
    pub eps: f64,
    /// [re, im]
    pub k1: [f64; 2],
    pub k2: [f64; 2],
    /// rejected when present: derived from the other three
    #[serde(default, skip_serializing)]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing)]
    pub k: Option<toml::Value>,
}

impl Default for ParamsBlock {
    fn default() -> Self {
        ParamsBlock { eps: 2.0, k1: [0.3, 0.8], k2: [0.3, 0.8], kappa: None, k: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridBlock {
    /// nodes per axis: a multiple of 16, at least 32
    pub nodes: usize,
    /// target relative residual of the first strip relation
    pub tol: f64,
    /// held-out residuals are checked against `heldout_factor * tol`
    pub heldout_factor: f64,
    pub max_iter: usize,
    /// a previously written grid CSV to reuse instead of solving
    pub input: Option<PathBuf>,
}

impl Default for GridBlock {
    fn default() -> Self {
        GridBlock { nodes: 64, tol: 1e-6, heldout_factor: 10.0, max_iter: qpwh::spectral::MAX_ITER, input: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Function {
    W,
    U,
    UPrime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinueBlock {
    /// [re xi1, im xi1, re xi2, im xi2]
    pub points: Vec<[f64; 4]>,
    pub function: Function,
    /// relative agreement required of the two strip-overlap formulas
    pub overlap_tol: f64,
}

impl Default for ContinueBlock {
    fn default() -> Self {
        ContinueBlock {
            points: vec![[0.3, -0.1, 0.2, 0.1], [-0.7, -0.1, 0.4, 0.1], [-0.3, -0.4, 0.5, 0.3], [-0.2, -0.8, -0.2, -0.8]],
            function: Function::U,
            overlap_tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrossingBlock {
    /// shore lattice points per cut
    pub lattice: usize,
    /// distance of the shore points from the cut
    pub offset: f64,
    /// Q1 points for the boundary recovery
    pub points: Vec<[f64; 2]>,
}

impl Default for CrossingBlock {
    fn default() -> Self {
        CrossingBlock { lattice: 8, offset: qpwh::contours::SHORE_OFFSET, points: vec![[1.0, 1.0], [0.5, 2.0]] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldBlock {
    /// slice height
    pub x3: f64,
    /// half-width of the square slice
    pub extent: f64,
    /// samples per side
    pub samples: usize,
    /// Helmholtz check points [x1, x2, x3], x3 != 0
    pub check_points: Vec<[f64; 3]>,
    /// allowed |Laplacian u + k^2 u| / |u|
    pub helmholtz_tol: f64,
}

impl Default for FieldBlock {
    fn default() -> Self {
        FieldBlock {
            x3: 0.5,
            extent: 2.0,
            samples: 9,
            check_points: vec![[1.0, 1.0, 1.0], [-1.0, 0.5, 0.5]],
            helmholtz_tol: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Wh1dBlock {
    /// loop words: "-" lower loop, "+" upper loop, trailing ' clockwise
    pub words: Vec<String>,
    /// [re, im] evaluation points
    pub points: Vec<[f64; 2]>,
    pub tol: f64,
}

impl Default for Wh1dBlock {
    fn default() -> Self {
        Wh1dBlock {
            words: ["", "-", "- -", "+", "- +", "+ -", "- +' - +"].iter().map(|s| s.to_string()).collect(),
            points: vec![[0.1, 0.3], [-0.4, 0.2], [0.6, 0.5]],
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Ray,
    Arc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UniquenessBlock {
    pub beta1: f64,
    pub beta2: f64,
    pub shape: Shape,
    /// arc bend, only for shape = "arc"
    pub bend: f64,
    /// direction of the synthetic jump's pole ray
    pub synthetic_angle: f64,
    pub tol: f64,
}

impl Default for UniquenessBlock {
    fn default() -> Self {
        UniquenessBlock { beta1: 0.2, beta2: 2.4, shape: Shape::Ray, bend: 0.6, synthetic_angle: 1.3, tol: 1e-5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SingularMapBlock {
    pub samples: usize,
}

impl Default for SingularMapBlock {
    fn default() -> Self {
        SingularMapBlock { samples: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub dir: PathBuf,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub task: Option<Task>,
    pub workers: usize,
    pub deterministic: bool,
    pub params: ParamsBlock,
    pub grid: GridBlock,
    pub output: OutputBlock,
    #[serde(rename = "continue")]
    pub continuation: ContinueBlock,
    pub crossing: CrossingBlock,
    pub field: FieldBlock,
    pub wh1d: Wh1dBlock,
    pub uniqueness: UniquenessBlock,
    pub singular_map: SingularMapBlock,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            task: None,
            workers: 1,
            deterministic: false,
            params: ParamsBlock::default(),
            grid: GridBlock::default(),
            output: OutputBlock::default(),
            continuation: ContinueBlock::default(),
            crossing: CrossingBlock::default(),
            field: FieldBlock::default(),
            wh1d: Wh1dBlock::default(),
            uniqueness: UniquenessBlock::default(),
            singular_map: SingularMapBlock::default(),
        }
    }
}

/// Pulls the offending key out of a TOML error message.
fn toml_field(e: &toml::de::Error) -> String {
    let msg = e.message();
    for pat in ["unknown field `", "missing field `"] {
        if let Some(i) = msg.find(pat) {
            let rest = &msg[i + pat.len()..];
            if let Some(j) = rest.find('`') {
                return rest[..j].to_string();
            }
        }
    }
    "config".into()
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| err(&toml_field(&e), e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| err("--config", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn task(&self) -> Result<Task, ConfigError> {
        self.task.ok_or_else(|| err("task", "no task given in the config or on the command line"))
    }

    /// The derived parameter set.
    pub fn params(&self) -> Result<Params, ConfigError> {
        let b = &self.params;
        if b.kappa.is_some() {
            return Err(err("params.kappa", "kappa is derived from eps, k1 and k2 and cannot be set"));
        }
        if b.k.is_some() {
            return Err(err("params.k", "k = sqrt(1 + i eps) is derived and cannot be set"));
        }
        let c = |v: [f64; 2]| C64::new(v[0], v[1]);
        Params::new(b.eps, c(b.k1), c(b.k2)).map_err(|e| match e {
            WhError::InvalidParameter { field, reason } => err(&format!("params.{field}"), reason),
            other => err("params", other.to_string()),
        })
    }

    /// Checks everything the selected task needs.
    pub fn validate(&self) -> Result<(Task, Params), ConfigError> {
        let task = self.task()?;
        let p = self.params()?;
        if self.workers == 0 {
            return Err(err("workers", "must be at least 1"));
        }
        let pos = |name: &str, v: f64| if v > 0.0 && v.is_finite() { Ok(()) } else { Err(err(name, "must be a finite positive number")) };
        if task.needs_strip() {
            let g = &self.grid;
            if g.input.is_none() && (g.nodes < 32 || g.nodes % 16 != 0) {
                return Err(err("grid.nodes", "must be a multiple of 16 and at least 32"));
            }
            pos("grid.tol", g.tol)?;
            pos("grid.heldout_factor", g.heldout_factor)?;
            if g.max_iter == 0 {
                return Err(err("grid.max_iter", "must be at least 1"));
            }
        }
        match task {
            Task::Continue => {
                if self.continuation.points.is_empty() {
                    return Err(err("continue.points", "at least one point is required"));
                }
                pos("continue.overlap_tol", self.continuation.overlap_tol)?;
            }
            Task::Crossing => {
                let c = &self.crossing;
                if c.lattice < 2 {
                    return Err(err("crossing.lattice", "must be at least 2"));
                }
                pos("crossing.offset", c.offset)?;
                if c.points.iter().any(|x| !(x[0] > 0.0 && x[1] > 0.0)) {
                    return Err(err("crossing.points", "points must lie in the open first quadrant"));
                }
            }
            Task::Field => {
                let f = &self.field;
                pos("field.x3", f.x3)?;
                pos("field.extent", f.extent)?;
                pos("field.helmholtz_tol", f.helmholtz_tol)?;
                if f.samples < 2 {
                    return Err(err("field.samples", "must be at least 2"));
                }
                if f.check_points.iter().any(|x| x[2].abs() <= qpwh::field::FD_STEP) {
                    return Err(err("field.check_points", "x3 must exceed the finite-difference step"));
                }
            }
            Task::Wh1d => {
                pos("wh1d.tol", self.wh1d.tol)?;
                for w in &self.wh1d.words {
                    qpwh::wh1d::LoopWord::parse(w).map_err(|e| err("wh1d.words", e.to_string()))?;
                }
            }
            Task::Uniqueness => {
                let u = &self.uniqueness;
                pos("uniqueness.tol", u.tol)?;
                let shape = match u.shape {
                    Shape::Ray => qpwh::uniqueness::CurveShape::Ray { angle: 0.5 * (u.beta1 + u.beta2) },
                    Shape::Arc => qpwh::uniqueness::CurveShape::Arc { angle: 0.5 * (u.beta1 + u.beta2), bend: u.bend },
                };
                qpwh::uniqueness::SectorCurve::new(u.beta1, u.beta2, shape).map_err(|e| err("uniqueness", e.to_string()))?;
                if !(u.synthetic_angle > u.beta1 && u.synthetic_angle < u.beta2) {
                    return Err(err("uniqueness.synthetic_angle", "must lie strictly between beta1 and beta2"));
                }
            }
            Task::SingularMap => {
                if self.singular_map.samples < 2 {
                    return Err(err("singular_map.samples", "must be at least 2"));
                }
            }
            Task::Solve => {}
        }
        Ok((task, p))
    }
}
