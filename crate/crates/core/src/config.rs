//! Run configuration documents (JSON).
//!
//! ```json
//! { "preset": "senp-tension",
//!   "material": { "lambda": 121.15, "mu": 80.77, "Gc": 2.7e-3, "l0": 0.0125 },
//!   "architecture": [2, 50, 50, 50, 3],
//!   "load": { "delta_u": 5e-4, "n_steps": 10 } }
//! ```
//! Every other key has a per-preset default.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::fracture::{MaterialParams, SplitMode};
use crate::geometry::presets::PRESET_NAMES;
use crate::geometry::Crack;
use crate::network::{MlpArchitecture, OutputTransform};
use crate::optimize::{AdamConfig, LbfgsConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0} required")]
    Missing(String),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("config is not valid JSON: {0}")]
    Syntax(String),
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HistoryPolicy {
    /// `H = max(H_prev, psi_plus)` inside the energy while training.
    #[default]
    Live,
    /// `H = H_prev` while training; the max is taken only at commit.
    Frozen,
}

/// Initial history around the crack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialHistory {
    /// `B Gc / (2 l0) (1 - 2 d / l0)` for `d <= l0 / 2`.
    Taper { b: f64 },
    /// Constant `value` for `d <= half_width`.
    Plateau { value: f64, half_width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BodyForce {
    /// `f(x) = sin(pi x)` along the bar.
    SinPiX,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadSchedule {
    pub delta_u: f64,
    pub n_steps: usize,
}

/// Axis-aligned box `lo..hi` (only the first `d` entries are used).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Region {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(k, &v)| v >= self.lo[k] && v <= self.hi[k])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferConfig {
    pub enabled: bool,
    pub adam: AdamConfig,
    pub lbfgs: LbfgsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Points per axis of the prediction grid.
    pub grid: usize,
    pub vtk: bool,
    pub checkpoints: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub preset: String,
    pub material: MaterialParams,
    pub split: SplitMode,
    pub architecture: Vec<usize>,
    pub seed: u64,
    pub gauss_per_dim: usize,
    pub load: LoadSchedule,
    pub transform: OutputTransform,
    pub crack: Crack,
    pub initial_history: InitialHistory,
    pub history: HistoryPolicy,
    pub body_force: Option<BodyForce>,
    pub elastic_regions: Vec<Region>,
    /// Traction component reported as the reaction load.
    pub load_axis: usize,
    pub adam: AdamConfig,
    pub lbfgs: LbfgsConfig,
    pub transfer: TransferConfig,
    pub threads: usize,
    pub output: OutputConfig,
}

impl RunConfig {
    /// Complete configuration for a named benchmark.
    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        let seg = |a: [f64; 2], b: [f64; 2]| Crack::segment(&a, &b).unwrap();
        let lbfgs = LbfgsConfig { ftol: 1e-9, ..Default::default() };
        let transfer = TransferConfig {
            enabled: true,
            adam: AdamConfig { iters: 0, ..Default::default() },
            lbfgs: LbfgsConfig { max_iters: 600, ftol: 1e-9, ..Default::default() },
        };
        let output = |grid| OutputConfig { dir: PathBuf::from(format!("out/{name}")), grid, vtk: false, checkpoints: true };
        let taper = InitialHistory::Taper { b: 1000.0 };
        let cfg = match name {
            "bar1d" => RunConfig {
                preset: name.into(),
                material: MaterialParams { lambda: 0.0, mu: 0.5, gc: 1.0, l0: 0.0125 },
                split: SplitMode::NoSplit,
                architecture: vec![1, 50, 50, 50, 2],
                seed: 0,
                gauss_per_dim: 8,
                load: LoadSchedule { delta_u: 0.0, n_steps: 1 },
                transform: OutputTransform::Bar1d,
                crack: Crack::point(&[0.0]),
                initial_history: InitialHistory::Plateau { value: 1000.0, half_width: 0.0125 },
                history: HistoryPolicy::Frozen,
                body_force: Some(BodyForce::SinPiX),
                elastic_regions: vec![],
                load_axis: 0,
                adam: AdamConfig { iters: 1500, ..Default::default() },
                lbfgs: LbfgsConfig { max_iters: 600, ..lbfgs },
                transfer,
                threads: 1,
                output: output(2001),
            },
            "senp-tension" => RunConfig {
                preset: name.into(),
                material: MaterialParams { lambda: 121.15, mu: 80.77, gc: 2.7e-3, l0: 0.0125 },
                split: SplitMode::Spectral,
                architecture: vec![2, 50, 50, 50, 3],
                seed: 0,
                gauss_per_dim: 8,
                load: LoadSchedule { delta_u: 0.5e-3, n_steps: 10 },
                transform: OutputTransform::SenpTension,
                crack: seg([0.0, 0.5], [0.5, 0.5]),
                initial_history: taper,
                history: HistoryPolicy::Live,
                body_force: None,
                elastic_regions: vec![],
                load_axis: 1,
                adam: AdamConfig { iters: 1000, ..Default::default() },
                lbfgs: LbfgsConfig { max_iters: 1000, ..lbfgs },
                transfer,
                threads: 1,
                output: output(201),
            },
            "asym-bend-3holes" => RunConfig {
                preset: name.into(),
                material: MaterialParams { lambda: 12.0, mu: 8.0, gc: 1e-3, l0: 0.25 },
                split: SplitMode::Spectral,
                architecture: vec![2, 50, 50, 50, 3],
                seed: 0,
                gauss_per_dim: 5,
                load: LoadSchedule { delta_u: 1e-2, n_steps: 10 },
                transform: OutputTransform::AsymBend3Holes,
                crack: seg([6.0, 0.0], [6.0, 1.0]),
                initial_history: taper,
                history: HistoryPolicy::Live,
                body_force: None,
                elastic_regions: vec![
                    Region { lo: [0.0, 0.0, 0.0], hi: [2.0, 8.0, 0.0] },
                    Region { lo: [18.0, 0.0, 0.0], hi: [20.0, 8.0, 0.0] },
                ],
                load_axis: 1,
                adam: AdamConfig { iters: 1000, ..Default::default() },
                lbfgs: LbfgsConfig { max_iters: 1000, ..lbfgs },
                transfer,
                threads: 1,
                output: output(201),
            },
            "cube-tension" => RunConfig {
                preset: name.into(),
                material: MaterialParams { lambda: 12.0, mu: 8.0, gc: 0.5e-3, l0: 0.0625 },
                split: SplitMode::Spectral,
                architecture: vec![3, 50, 50, 50, 4],
                seed: 0,
                gauss_per_dim: 4,
                load: LoadSchedule { delta_u: 1e-3, n_steps: 10 },
                transform: OutputTransform::CubeTension,
                crack: Crack {
                    faces: vec![crate::geometry::CrackFace::new([0.0, 0.0, 0.5], [0.5, 0.0, 0.0], [0.0, 1.0, 0.0]).unwrap()],
                    ..Default::default()
                },
                initial_history: taper,
                history: HistoryPolicy::Live,
                body_force: None,
                elastic_regions: vec![],
                load_axis: 2,
                adam: AdamConfig { iters: 1000, ..Default::default() },
                lbfgs: LbfgsConfig { max_iters: 1000, ..lbfgs },
                transfer,
                threads: 1,
                output: output(51),
            },
            other => return Err(invalid("preset", format!("unknown preset `{other}` (known: {})", PRESET_NAMES.join(", ")))),
        };
        Ok(cfg)
    }

    /// Parse a document: the named preset's defaults overlaid with the
    /// document's keys.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let doc: Value = serde_json::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        let name = doc.get("preset").and_then(Value::as_str).ok_or_else(|| ConfigError::Missing("preset".into()))?;
        let material = doc.get("material").ok_or_else(|| ConfigError::Missing("material".into()))?;
        for key in ["lambda", "mu", "Gc", "l0"] {
            if material.get(key).is_none() {
                return Err(ConfigError::Missing(format!("material.{key}")));
            }
        }
        let mut base = serde_json::to_value(Self::preset(name)?).expect("config serializes");
        merge(&mut base, &doc);
        let cfg: RunConfig = serde_json::from_value(base).map_err(|e| invalid("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn dim(&self) -> usize {
        self.architecture[0]
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let arch = MlpArchitecture::new(self.architecture.clone()).map_err(|e| invalid("architecture", e.to_string()))?;
        let dim = match self.preset.as_str() {
            "bar1d" => 1,
            "cube-tension" => 3,
            _ => 2,
        };
        arch.check_dim(dim).map_err(|e| invalid("architecture", e.to_string()))?;
        self.material.validate(dim).map_err(|e| invalid("material", e.to_string()))?;
        if !(1..=64).contains(&self.gauss_per_dim) {
            return Err(invalid("gauss_per_dim", "must lie in 1..=64"));
        }
        if self.load.n_steps == 0 {
            return Err(invalid("load.n_steps", "must be at least 1"));
        }
        if self.load.delta_u == 0.0 && self.body_force.is_none() {
            return Err(invalid("load.delta_u", "must be non-zero"));
        }
        if self.load_axis >= dim {
            return Err(invalid("load_axis", format!("must be below {dim}")));
        }
        if self.output.grid < 2 {
            return Err(invalid("output.grid", "needs at least 2 points per axis"));
        }
        match self.initial_history {
            InitialHistory::Taper { b } if !(b > 0.0) => return Err(invalid("initial_history.b", "must be positive")),
            InitialHistory::Plateau { value, half_width } if !(value >= 0.0 && half_width >= 0.0) => {
                return Err(invalid("initial_history", "value and half_width must be non-negative"))
            }
            _ => {}
        }
        Ok(())
    }
}

fn merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() && k != "initial_history" => merge(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, o) => *b = o.clone(),
    }
}
