use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::Context;
use bilinear_pdo::battery::BatteryConfig;
use bilinear_pdo::closed_form::{FunctionSpec, SymbolSpec};
use bilinear_pdo::quantization::QuantizationPair;
use bilinear_pdo::symbols::GevreyClassSpec;
use bilinear_pdo::timefreq::Exponent;
use bilinear_pdo::weights::WeightModel;
use bilinear_pdo::AxisSpec;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Bad configuration or arguments; maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// A parsed config file and the directory its relative input paths refer to.
pub struct Loaded<T> {
    pub value: T,
    pub dir: PathBuf,
}

impl<T> Loaded<T> {
    pub fn input(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.dir.join(p)
        }
    }
}

/// Reads TOML when the extension is `.toml`, JSON otherwise.
pub fn load<T: DeserializeOwned>(path: &Path) -> anyhow::Result<Loaded<T>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let is_toml = path.extension().and_then(|e| e.to_str()) == Some("toml");
    let value = if is_toml {
        toml::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))?
    } else {
        serde_json::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))?
    };
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { value, dir })
}

/// One grid axis; without `half_width` the balanced width `sqrt(N pi / 2)` is used.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub points: usize,
    #[serde(default)]
    pub half_width: Option<f64>,
}

impl AxisConfig {
    pub fn spec(&self) -> anyhow::Result<AxisSpec> {
        Ok(match self.half_width {
            Some(l) => AxisSpec::new(l, self.points)?,
            None => AxisSpec::balanced(self.points)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowDomain {
    /// One axis, for functions.
    Line,
    /// The three-axis symbol grid built on the axis.
    Symbol,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SampleItem {
    Function { function: FunctionSpec },
    Symbol { symbol: SymbolSpec },
    Window { width: f64, domain: WindowDomain },
    Battery {
        #[serde(default)]
        battery: BatteryConfig,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub axis: AxisConfig,
    pub output: String,
    pub sample: SampleItem,
}

/// `|V|` along one phase-space axis, the other coordinates fixed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceConfig {
    pub axis: usize,
    /// Coordinates of the fixed point, one per phase-space axis; the origin when absent.
    #[serde(default)]
    pub at: Option<Vec<f64>>,
    #[serde(default)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StftConfig {
    pub input: PathBuf,
    pub window: PathBuf,
    pub output: String,
    #[serde(default)]
    pub slices: Vec<SliceConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvertConfig {
    pub input: PathBuf,
    pub from: QuantizationPair,
    pub to: QuantizationPair,
    pub output: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApplyConfig {
    /// Three-axis bilinear or two-axis linear symbol.
    pub symbol: PathBuf,
    pub f: PathBuf,
    #[serde(default)]
    pub g: Option<PathBuf>,
    #[serde(default = "kohn_nirenberg")]
    pub pair: QuantizationPair,
    /// Parameter of the linear quantization.
    #[serde(default)]
    pub t: f64,
    pub output: String,
}

fn kohn_nirenberg() -> QuantizationPair {
    QuantizationPair::KOHN_NIRENBERG
}

/// A window file, or a centered Gaussian of the given width on the input grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WindowSource {
    File(PathBuf),
    Width { width: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModnormConfig {
    pub input: PathBuf,
    #[serde(default = "unit_window")]
    pub window: WindowSource,
    #[serde(default)]
    pub weight: WeightModel,
    pub p: Exponent,
    pub q: Exponent,
    pub output: String,
}

fn unit_window() -> WindowSource {
    WindowSource::Width { width: 1.0 }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyConfig {
    pub symbol: PathBuf,
    #[serde(default = "GevreyClassSpec::gaussian_class_spec")]
    pub spec: GevreyClassSpec,
    #[serde(default = "default_max_order")]
    pub max_order: usize,
    #[serde(default = "one")]
    pub window_width: f64,
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default = "default_q")]
    pub modspace_q: Exponent,
    pub output: String,
}

fn default_max_order() -> usize {
    6
}

fn one() -> f64 {
    1.0
}

fn default_batch() -> usize {
    2000
}

fn default_q() -> Exponent {
    Exponent::Finite(2.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothWeightConfig {
    pub weight: WeightModel,
    /// Gevrey exponent per axis, each in (0, 1).
    pub s: Vec<f64>,
    pub axes: Vec<AxisConfig>,
    #[serde(default = "two")]
    pub max_order: usize,
    pub output: String,
}

fn two() -> usize {
    2
}
