//! Suite configuration in TOML. Every key has a default, unknown keys are
//! rejected, and an empty file runs every suite at default scale.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use geomcert::globalint::default_nodes;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Tensors,
    Conformal,
    Gbc,
    Expansion,
    Oneill,
    Stereographic,
    Sobolev,
    YamabeDescent,
    Kleinian,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Tensors,
        Suite::Conformal,
        Suite::Gbc,
        Suite::Expansion,
        Suite::Oneill,
        Suite::Stereographic,
        Suite::Sobolev,
        Suite::YamabeDescent,
        Suite::Kleinian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Tensors => "tensors",
            Suite::Conformal => "conformal",
            Suite::Gbc => "gbc",
            Suite::Expansion => "expansion",
            Suite::Oneill => "oneill",
            Suite::Stereographic => "stereographic",
            Suite::Sobolev => "sobolev",
            Suite::YamabeDescent => "yamabe_descent",
            Suite::Kleinian => "kleinian",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Suite, String> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite '{s}' (expected one of: {})", Suite::ALL.map(|x| x.name()).join(", ")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Format, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(format!("unknown format '{s}' (expected json or csv)")),
        }
    }
}

/// Tolerance override for one check id; unset fields keep the default.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverride {
    pub abs: Option<f64>,
    pub rel: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    /// Seed for every randomized check.
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    /// Keyed by check id.
    pub tolerances: BTreeMap<String, ToleranceOverride>,
    pub tensors: TensorsConfig,
    pub conformal: ConformalConfig,
    pub gbc: GbcConfig,
    pub expansion: ExpansionConfig,
    pub oneill: OneillConfig,
    pub stereographic: StereographicConfig,
    pub sobolev: SobolevConfig,
    pub yamabe_descent: DescentConfig,
    pub kleinian: KleinianConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 20240917,
            output: None,
            format: None,
            tolerances: BTreeMap::new(),
            tensors: TensorsConfig::default(),
            conformal: ConformalConfig::default(),
            gbc: GbcConfig::default(),
            expansion: ExpansionConfig::default(),
            oneill: OneillConfig::default(),
            stereographic: StereographicConfig::default(),
            sobolev: SobolevConfig::default(),
            yamabe_descent: DescentConfig::default(),
            kleinian: KleinianConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TensorsConfig {
    /// Sample points per catalog metric.
    pub points: usize,
    /// Sample points for the hyperbolic identity.
    pub identity_points: usize,
}

impl Default for TensorsConfig {
    fn default() -> Self {
        TensorsConfig { points: 20, identity_points: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConformalConfig {
    /// Random conformal factors per catalog metric.
    pub functions: usize,
    /// Nodes per axis for the torus integration identity.
    pub torus_nodes: usize,
}

impl Default for ConformalConfig {
    fn default() -> Self {
        ConformalConfig { functions: 50, torus_nodes: 8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GbcConfig {
    /// Nodes per axis on each chart of the two-chart S⁴ atlas.
    pub s4_nodes: usize,
    /// Nodes per axis on S²×S².
    pub product_nodes: usize,
    /// Nodes per axis on each face of the cubed S⁶.
    pub s6_nodes: usize,
    pub run_s6: bool,
}

impl Default for GbcConfig {
    fn default() -> Self {
        GbcConfig { s4_nodes: default_nodes(4), product_nodes: 8, s6_nodes: default_nodes(6), run_s6: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExpansionConfig {
    pub radii: Vec<f64>,
    pub radial_nodes: usize,
    pub angle_nodes: usize,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        ExpansionConfig { radii: vec![0.05, 0.1, 0.2], radial_nodes: 10, angle_nodes: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OneillConfig {
    pub eps: Vec<f64>,
    pub lambda: f64,
    /// Base points per family.
    pub points: usize,
}

impl Default for OneillConfig {
    fn default() -> Self {
        OneillConfig { eps: vec![0.1, 0.2, 0.4], lambda: 1.1, points: 8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StereographicConfig {
    pub sphere_points: usize,
    pub subsphere_points: usize,
}

impl Default for StereographicConfig {
    fn default() -> Self {
        StereographicConfig { sphere_points: 100, subsphere_points: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SobolevConfig {
    pub polynomials: usize,
    /// Nodes per axis on each face of the cubed S⁴.
    pub nodes: usize,
}

impl Default for SobolevConfig {
    fn default() -> Self {
        SobolevConfig { polynomials: 100, nodes: 8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DescentConfig {
    /// Basis y^k, k = 0..=degree, in the last ambient coordinate.
    pub degree: usize,
    pub nodes: usize,
    pub max_iters: usize,
    /// u₀ = 1 + amplitude·y.
    pub amplitude: f64,
}

impl Default for DescentConfig {
    fn default() -> Self {
        DescentConfig { degree: 6, nodes: 10, max_iters: 500, amplitude: 0.3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KleinianConfig {
    pub schottky: GroupConfig,
    pub cyclic: GroupConfig,
    /// Word length of the random words whose fixed points sample the limit set.
    pub limit_word_length: usize,
    pub limit_points: usize,
    pub box_first: f64,
    pub box_ratio: f64,
    pub box_scales: usize,
}

impl Default for KleinianConfig {
    fn default() -> Self {
        KleinianConfig {
            schottky: GroupConfig::schottky(3.0, 10),
            cyclic: GroupConfig {
                word_length: 300,
                generators: vec![GeneratorConfig::Translation {
                    length: 1.0,
                    attracting: vec![0.6, 0.8, 0.0],
                    repelling: vec![-0.6, -0.8, 0.0],
                }],
                ..GroupConfig::default()
            },
            limit_word_length: 14,
            limit_points: 10_000,
            box_first: 0.3,
            box_ratio: 0.5,
            box_scales: 24,
        }
    }
}

/// A finitely generated group acting on hyperbolic space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroupConfig {
    pub generators: Vec<GeneratorConfig>,
    /// Declares the generators free; enables the word-based estimators.
    pub free: bool,
    pub word_length: usize,
    /// Basepoint in the Poincaré ball; the center when empty.
    pub basepoint: Vec<f64>,
    pub memory_budget: Option<usize>,
    pub seed: u64,
}

impl Default for GroupConfig {
    fn default() -> Self {
        GroupConfig { generators: Vec::new(), free: true, word_length: 10, basepoint: Vec::new(), memory_budget: None, seed: 1 }
    }
}

impl GroupConfig {
    /// Translations of length ℓ along two perpendicular axes of H³.
    pub fn schottky(length: f64, word_length: usize) -> GroupConfig {
        GroupConfig {
            word_length,
            generators: vec![
                GeneratorConfig::Translation { length, attracting: vec![1.0, 0.0, 0.0], repelling: vec![-1.0, 0.0, 0.0] },
                GeneratorConfig::Translation { length, attracting: vec![0.0, 1.0, 0.0], repelling: vec![0.0, -1.0, 0.0] },
            ],
            ..GroupConfig::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorConfig {
    /// Hyperbolic translation between two boundary points of the unit sphere.
    Translation { length: f64, attracting: Vec<f64>, repelling: Vec<f64> },
    /// Rotation of Hⁿ about the basepoint in the coordinate plane (i, j).
    Rotation { dim: usize, angle: f64, plane: [usize; 2] },
}

/// Config file for `kleinian estimate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateConfig {
    pub group: GroupConfig,
    pub limit_word_length: usize,
    /// Zero skips the limit-set sample and the box dimension.
    pub limit_points: usize,
    pub box_first: f64,
    pub box_ratio: f64,
    pub box_scales: usize,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        let k = KleinianConfig::default();
        EstimateConfig {
            group: k.schottky,
            limit_word_length: k.limit_word_length,
            limit_points: k.limit_points,
            box_first: k.box_first,
            box_ratio: k.box_ratio,
            box_scales: k.box_scales,
        }
    }
}

/// Parse failure with the offending location when the parser reports one.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub path: Option<PathBuf>,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path = self.path.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "<config>".into());
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{path}:{l}:{c}: {}", self.message),
            _ => write!(f, "{path}: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn parse_toml<T: for<'de> Deserialize<'de>>(text: &str, path: Option<&Path>) -> Result<T, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = match e.span() {
            Some(span) => {
                let before = &text[..span.start.min(text.len())];
                let line = before.matches('\n').count() + 1;
                let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
                (Some(line), Some(column))
            }
            None => (None, None),
        };
        ConfigError { path: path.map(Path::to_path_buf), line, column, message: e.message().to_string() }
    })
}

/// Reads a config file; `-` reads stdin.
fn read(path: &Path) -> Result<String, ConfigError> {
    let res = if path == Path::new("-") {
        std::io::read_to_string(std::io::stdin())
    } else {
        std::fs::read_to_string(path)
    };
    res.map_err(|e| ConfigError { path: Some(path.to_path_buf()), line: None, column: None, message: e.to_string() })
}

impl Config {
    pub fn parse(text: &str, path: Option<&Path>) -> Result<Config, ConfigError> {
        let cfg: Config = parse_toml(text, path)?;
        cfg.validate(path)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        Config::parse(&read(path)?, Some(path))
    }

    fn validate(&self, path: Option<&Path>) -> Result<(), ConfigError> {
        let fail = |message: String| ConfigError { path: path.map(Path::to_path_buf), line: None, column: None, message };
        for key in self.tolerances.keys() {
            if !crate::suites::known_check(key) {
                return Err(fail(format!("unknown check id `{key}` in [tolerances]")));
            }
        }
        for (key, t) in &self.tolerances {
            for v in [t.abs, t.rel].into_iter().flatten() {
                if !(v >= 0.0) {
                    return Err(fail(format!("tolerance for `{key}` must be nonnegative, got {v}")));
                }
            }
        }
        if self.expansion.radii.len() < 2 || self.expansion.radii.iter().any(|r| !(*r > 0.0)) {
            return Err(fail("expansion.radii needs at least two positive radii".into()));
        }
        if self.oneill.eps.len() < 2 || self.oneill.eps.iter().any(|e| !(*e > 0.0)) {
            return Err(fail("oneill.eps needs at least two positive values".into()));
        }
        Ok(())
    }

    /// Fewer sample points for quick runs. Quadrature grids keep their
    /// resolution so tolerances still apply; the S⁶ integral is skipped.
    pub fn fast(&self) -> Config {
        let h = |n: usize| (n / 2).max(2);
        let mut c = self.clone();
        c.tensors.points = h(c.tensors.points);
        c.tensors.identity_points = h(c.tensors.identity_points);
        c.conformal.functions = h(c.conformal.functions);
        c.gbc.run_s6 = false;
        c.oneill.points = h(c.oneill.points);
        c.stereographic.sphere_points = h(c.stereographic.sphere_points);
        c.stereographic.subsphere_points = h(c.stereographic.subsphere_points);
        c.sobolev.polynomials = h(c.sobolev.polynomials);
        c
    }
}

impl EstimateConfig {
    pub fn parse(text: &str, path: Option<&Path>) -> Result<EstimateConfig, ConfigError> {
        parse_toml(text, path)
    }

    pub fn load(path: &Path) -> Result<EstimateConfig, ConfigError> {
        EstimateConfig::parse(&read(path)?, Some(path))
    }
}
