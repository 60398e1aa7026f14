//! Experiment configuration: a TOML file with flat sections plus one
//! `[[edge]]` table per edge, and `--set key=value` overrides on top.
//!
//! ```toml
//! [network]
//! p = 1
//! junction = "mass-conservation"   # or "kirchhoff"
//!
//! [[edge]]                         # edge 1, incoming
//! mu = 1.0
//! alpha = 1.0
//! gamma = 1.0
//! nu = 0.0
//! length = 100.0
//!
//! [[edge]]                         # edge 2, outgoing
//! mu = 1.1
//! alpha = 1.0
//! gamma = 1.0
//! nu = 0.0
//! length = 100.0
//!
//! [grid]
//! dx = 0.025
//! dt = 0.025
//! horizon = 40.0
//!
//! [initial]
//! kind = "solitary-wave"           # or "zero", or "file" with `path`
//! c = 2.0
//! x0 = 60.0
//! host_edge = 1
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use gbbmb_core::{
    EdgeSpec, GridSpec, JunctionCondition, Orientation, ReflectionCriterion, SolitaryPlacement, StarNetwork,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_HORIZON: f64 = 60.0;
pub const DEFAULT_STRIDE: usize = 40;
pub const DEFAULT_OUTPUT_DIR: &str = "gbbmb-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub network: NetworkSection,
    #[serde(rename = "edge")]
    pub edges: Vec<EdgeSection>,
    pub grid: GridSection,
    pub initial: InitialCondition,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub verify: VerifySection,
    /// Directory that relative input paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    #[serde(default = "default_p")]
    pub p: u32,
    #[serde(default)]
    pub junction: JunctionCondition,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self {
            p: default_p(),
            junction: JunctionCondition::default(),
        }
    }
}

fn default_p() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSection {
    /// Defaults to incoming for the first edge and outgoing for the rest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<Orientation>,
    pub mu: f64,
    pub alpha: f64,
    pub gamma: f64,
    #[serde(default)]
    pub nu: f64,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dx: f64,
    pub dt: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
}

fn default_horizon() -> f64 {
    DEFAULT_HORIZON
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialCondition {
    /// A solitary wave shaped by the host edge's coefficients. `x0` is the
    /// path coordinate of the peak, with the junction at the incoming edge's
    /// length; `host_edge` is 1-based.
    SolitaryWave {
        c: f64,
        x0: f64,
        #[serde(default = "default_host_edge")]
        host_edge: usize,
    },
    Zero,
    /// Samples read from a CSV file with columns `edge,k,value` (1-based
    /// edge, node index `k` from the junction). Missing nodes are zero.
    File {
        path: PathBuf,
    },
}

fn default_host_edge() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_output_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default)]
    pub fields: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_output_dir(),
            stride: DEFAULT_STRIDE,
            fields: false,
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from(DEFAULT_OUTPUT_DIR)
}

fn default_stride() -> usize {
    DEFAULT_STRIDE
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BootstrapKind {
    ExactTranslate,
    SemiImplicit,
}

impl BootstrapKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BootstrapKind::ExactTranslate => "exact-translate",
            BootstrapKind::SemiImplicit => "semi-implicit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// When absent: exact translate for a solitary wave on a network without
    /// dissipation, semi-implicit otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<BootstrapKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_min_consecutive")]
    pub min_consecutive: usize,
    /// Absolute depth floor; defaults to the shallowest anti-solitary wave of
    /// the incoming edge.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_depth: Option<f64>,
    /// Time between the snapshots the reflection detector inspects,
    /// independent of the output stride.
    #[serde(default = "default_snapshot_interval")]
    pub snapshot_interval: f64,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self {
            threshold: default_threshold(),
            min_consecutive: default_min_consecutive(),
            min_depth: None,
            snapshot_interval: default_snapshot_interval(),
        }
    }
}

fn default_snapshot_interval() -> f64 {
    1.0
}

fn default_threshold() -> f64 {
    ReflectionCriterion::default().threshold
}

fn default_min_consecutive() -> usize {
    ReflectionCriterion::default().min_consecutive
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub y_step: f64,
    pub t_step: f64,
    pub t_final: f64,
    /// Picard stopping tolerance on the sup-norm change between sweeps.
    pub tol: f64,
    pub max_iters: usize,
    /// Largest accepted sup-norm difference between the two solvers.
    pub tolerance: f64,
    /// Extent of the initial data beyond the junction; defaults to the
    /// longest edge.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support_radius: Option<f64>,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            y_step: 0.05,
            t_step: 0.0125,
            t_final: 0.25,
            tol: 1e-10,
            max_iters: 50,
            tolerance: 1e-2,
            support_radius: None,
        }
    }
}

impl ExperimentConfig {
    /// Reads a config file, applies `--set` overrides in order and validates.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config(path.display().to_string(), format!("cannot read: {e}")))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml_str(&text, overrides, base_dir)
    }

    /// Parses TOML text. Syntax and type errors carry the line and key of the
    /// offending entry; override errors name the overridden key.
    pub fn from_toml_str(text: &str, overrides: &[String], base_dir: PathBuf) -> Result<Self, CliError> {
        let mut cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::config("config", e.to_string().trim_end().to_string()))?;
        if !overrides.is_empty() {
            let mut table: toml::Table = toml::from_str(text).expect("already parsed once");
            for item in overrides {
                let (key, raw) = split_override(item)?;
                set_path(&mut table, key, parse_override_value(raw))?;
            }
            cfg = ExperimentConfig::deserialize(toml::Value::Table(table))
                .map_err(|e| CliError::config("--set", e.to_string().trim_end().to_string()))?;
        }
        cfg.base_dir = base_dir;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Serializes back to TOML; parsing the result gives an equal config.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// Returns a copy with one numeric field replaced, addressed like a
    /// `--set` key (for example `edge.2.mu`).
    pub fn with_value(&self, key: &str, value: f64) -> Result<Self, CliError> {
        let mut table = self.to_table();
        let replacement = match lookup(&table, key) {
            Some(toml::Value::Integer(_)) if value.fract() == 0.0 => toml::Value::Integer(value as i64),
            Some(toml::Value::Integer(_)) | Some(toml::Value::Float(_)) => toml::Value::Float(value),
            Some(_) => return Err(CliError::config(key, "parameter must address a numeric field")),
            None => return Err(CliError::config(key, "no such field in the config")),
        };
        set_path(&mut table, key, replacement)?;
        let mut cfg = ExperimentConfig::deserialize(toml::Value::Table(table))
            .map_err(|e| CliError::config(key, e.to_string().trim_end().to_string()))?;
        cfg.base_dir = self.base_dir.clone();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Current value of the numeric field at `key` (a `--set` style path).
    pub fn numeric_field(&self, key: &str) -> Result<f64, CliError> {
        match lookup(&self.to_table(), key) {
            Some(toml::Value::Integer(n)) => Ok(*n as f64),
            Some(toml::Value::Float(x)) => Ok(*x),
            Some(_) => Err(CliError::config(key, "parameter must address a numeric field")),
            None => Err(CliError::config(key, "no such field in the config")),
        }
    }

    fn to_table(&self) -> toml::Table {
        toml::Table::try_from(self).expect("config is always representable as TOML")
    }

    /// Checks every invariant that can be checked without running.
    pub fn validate(&self) -> Result<(), CliError> {
        let network = self.network()?;
        let grid = self.grid()?;
        grid.intervals(&network)
            .map_err(|e| CliError::config("grid.dx", e.to_string()))?;
        if self.output.stride < 1 {
            return Err(CliError::config("output.stride", "stride must be at least 1"));
        }
        match &self.initial {
            InitialCondition::SolitaryWave { host_edge, .. } => {
                if *host_edge < 1 || *host_edge > network.num_edges() {
                    return Err(CliError::config(
                        "initial.host_edge",
                        format!("must be between 1 and {}, got {host_edge}", network.num_edges()),
                    ));
                }
                self.solitary_placement(&network)?;
            }
            InitialCondition::Zero => {}
            InitialCondition::File { .. } => {
                let path = self.initial_file().expect("file initial condition");
                if !path.is_file() {
                    return Err(CliError::config(
                        "initial.path",
                        format!("file {} does not exist", path.display()),
                    ));
                }
            }
        }
        if self.solver.bootstrap == Some(BootstrapKind::ExactTranslate)
            && !matches!(self.initial, InitialCondition::SolitaryWave { .. })
        {
            return Err(CliError::config(
                "solver.bootstrap",
                "exact-translate needs a solitary-wave initial condition",
            ));
        }
        let d = &self.diagnostics;
        if !(d.threshold >= 0.0 && d.threshold.is_finite()) {
            return Err(CliError::config("diagnostics.threshold", "must be nonnegative"));
        }
        if d.min_consecutive < 1 {
            return Err(CliError::config("diagnostics.min_consecutive", "must be at least 1"));
        }
        if !(d.snapshot_interval > 0.0 && d.snapshot_interval.is_finite()) {
            return Err(CliError::config("diagnostics.snapshot_interval", "must be positive"));
        }
        if let Some(m) = d.min_depth {
            if !(m >= 0.0 && m.is_finite()) {
                return Err(CliError::config("diagnostics.min_depth", "must be nonnegative"));
            }
        }
        let v = &self.verify;
        for (name, x) in [
            ("verify.y_step", v.y_step),
            ("verify.t_step", v.t_step),
            ("verify.tol", v.tol),
            ("verify.tolerance", v.tolerance),
        ] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(CliError::config(name, format!("must be positive, got {x}")));
            }
        }
        if !(v.t_final >= 0.0 && v.t_final.is_finite()) {
            return Err(CliError::config("verify.t_final", "must be nonnegative"));
        }
        if v.max_iters < 1 {
            return Err(CliError::config("verify.max_iters", "must be at least 1"));
        }
        Ok(())
    }

    pub fn network(&self) -> Result<StarNetwork, CliError> {
        let edges: Vec<EdgeSpec> = self
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let orientation = e.orientation.unwrap_or(if i == 0 {
                    Orientation::Incoming
                } else {
                    Orientation::Outgoing
                });
                EdgeSpec::new(orientation, e.mu, e.alpha, e.gamma, e.nu, e.length)
            })
            .collect();
        StarNetwork::new(edges, self.network.p, self.network.junction).map_err(|e| {
            let msg = e.to_string();
            let field = msg
                .split_once("edge ")
                .and_then(|(_, rest)| rest.split(':').next())
                .filter(|n| n.parse::<usize>().is_ok())
                .map(|n| format!("edge.{n}"))
                .unwrap_or_else(|| "network".to_string());
            CliError::config(field, msg)
        })
    }

    pub fn grid(&self) -> Result<GridSpec, CliError> {
        GridSpec::new(self.grid.dx, self.grid.dt, self.grid.horizon)
            .map_err(|e| CliError::config("grid", e.to_string()))
    }

    pub fn solitary_placement(&self, network: &StarNetwork) -> Result<Option<SolitaryPlacement>, CliError> {
        match self.initial {
            InitialCondition::SolitaryWave { c, x0, host_edge } => {
                SolitaryPlacement::new(network, host_edge - 1, c, x0)
                    .map(Some)
                    .map_err(|e| CliError::config("initial", e.to_string()))
            }
            _ => Ok(None),
        }
    }

    /// Resolved path of a file initial condition.
    pub fn initial_file(&self) -> Option<PathBuf> {
        match &self.initial {
            InitialCondition::File { path } if path.is_absolute() => Some(path.clone()),
            InitialCondition::File { path } => Some(self.base_dir.join(path)),
            _ => None,
        }
    }

    pub fn bootstrap_kind(&self) -> BootstrapKind {
        self.solver.bootstrap.unwrap_or_else(|| {
            let solitary = matches!(self.initial, InitialCondition::SolitaryWave { .. });
            if solitary && self.edges.iter().all(|e| e.nu == 0.0) {
                BootstrapKind::ExactTranslate
            } else {
                BootstrapKind::SemiImplicit
            }
        })
    }

    pub fn reflection_criterion(&self, network: &StarNetwork) -> ReflectionCriterion {
        let base = ReflectionCriterion::for_network(network, 0).expect("validated networks have edge 1");
        ReflectionCriterion {
            threshold: self.diagnostics.threshold,
            min_consecutive: self.diagnostics.min_consecutive,
            min_depth: self.diagnostics.min_depth.unwrap_or(base.min_depth),
        }
    }
}

fn split_override(item: &str) -> Result<(&str, &str), CliError> {
    item.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| CliError::config(item, "override must look like key=value"))
}

/// Interprets an override as a TOML literal, falling back to a bare string.
fn parse_override_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn lookup<'a>(table: &'a toml::Table, key: &str) -> Option<&'a toml::Value> {
    let mut parts = key.split('.');
    let mut current = table.get(parts.next()?)?;
    for part in parts {
        current = match current {
            toml::Value::Table(t) => t.get(part)?,
            toml::Value::Array(a) => a.get(part.parse::<usize>().ok()?.checked_sub(1)?)?,
            _ => return None,
        };
    }
    Some(current)
}

/// Sets `key` (dotted, 1-based array indices) to `value`, creating missing
/// table entries on the way.
fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), CliError> {
    let parts: Vec<&str> = key.split('.').collect();
    let mut current = table
        .entry(parts[0].to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    for part in &parts[1..] {
        current = match current {
            toml::Value::Table(t) => t
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new())),
            toml::Value::Array(a) => {
                let len = a.len();
                let index = part
                    .parse::<usize>()
                    .ok()
                    .filter(|&n| n >= 1 && n <= len)
                    .ok_or_else(|| CliError::config(key, format!("index {part} is out of range 1..={len}")))?;
                &mut a[index - 1]
            }
            _ => return Err(CliError::config(key, format!("`{part}` is below a plain value"))),
        };
    }
    *current = value;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const BASE: &str = r#"
[[edge]]
mu = 1.0
alpha = 1.0
gamma = 1.0
length = 10.0

[[edge]]
mu = 1.1
alpha = 1.0
gamma = 1.0
length = 10.0

[grid]
dx = 0.1
dt = 0.1
horizon = 1.0

[initial]
kind = "solitary-wave"
c = 2.0
x0 = 5.0
"#;

    fn parse(text: &str, overrides: &[&str]) -> Result<ExperimentConfig, CliError> {
        let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
        ExperimentConfig::from_toml_str(text, &o, PathBuf::new())
    }

    #[test]
    fn defaults_fill_optional_sections() {
        let cfg = parse(BASE, &[]).unwrap();
        assert_eq!(cfg.network.p, 1);
        assert_eq!(cfg.network.junction, JunctionCondition::MassConservation);
        assert_eq!(cfg.output.stride, DEFAULT_STRIDE);
        assert!(!cfg.output.fields);
        assert_eq!(cfg.bootstrap_kind(), BootstrapKind::ExactTranslate);
        let net = cfg.network().unwrap();
        assert_eq!(net.edge(0).orientation, Orientation::Incoming);
        assert_eq!(net.edge(1).orientation, Orientation::Outgoing);
    }

    #[test]
    fn default_horizon_applies_when_omitted() {
        let cfg = parse(&BASE.replace("horizon = 1.0", ""), &[]).unwrap();
        assert_eq!(cfg.grid.horizon, DEFAULT_HORIZON);
    }

    #[test]
    fn overrides_address_edges_by_one_based_index() {
        let cfg = parse(BASE, &["edge.2.mu=1.5", "network.junction=kirchhoff", "grid.horizon=2"]).unwrap();
        assert_eq!(cfg.edges[1].mu, 1.5);
        assert_eq!(cfg.network.junction, JunctionCondition::Kirchhoff);
        assert_eq!(cfg.grid.horizon, 2.0);
    }

    #[test]
    fn override_can_switch_initial_condition_kind() {
        let cfg = parse(BASE, &["initial={kind=\"zero\"}"]).unwrap();
        assert_eq!(cfg.initial, InitialCondition::Zero);
        assert_eq!(cfg.bootstrap_kind(), BootstrapKind::SemiImplicit);
    }

    #[test]
    fn dissipation_selects_semi_implicit_bootstrap() {
        let cfg = parse(BASE, &["edge.1.nu=1.0"]).unwrap();
        assert_eq!(cfg.bootstrap_kind(), BootstrapKind::SemiImplicit);
        let forced = parse(BASE, &["edge.1.nu=1.0", "solver.bootstrap=exact-translate"]).unwrap();
        assert_eq!(forced.bootstrap_kind(), BootstrapKind::ExactTranslate);
    }

    #[test]
    fn syntax_errors_report_the_line() {
        let bad = BASE.replace("mu = 1.1", "mu = = 1.1");
        let msg = parse(&bad, &[]).unwrap_err().to_string();
        assert!(msg.contains("line 9"), "{msg}");
    }

    #[test]
    fn type_errors_report_the_key() {
        let bad = BASE.replace("mu = 1.1", "mu = \"wide\"");
        let msg = parse(&bad, &[]).unwrap_err().to_string();
        assert!(msg.contains("line 9") && msg.contains("mu"), "{msg}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = BASE.replace("mu = 1.1", "mu = 1.1\nmuu = 2.0");
        let msg = parse(&bad, &[]).unwrap_err().to_string();
        assert!(msg.contains("muu"), "{msg}");
    }

    #[test]
    fn invalid_values_name_the_field() {
        let err = parse(BASE, &["edge.2.mu=-1"]).unwrap_err();
        assert!(err.to_string().contains("edge.2"), "{err}");
        let err = parse(BASE, &["output.stride=0"]).unwrap_err();
        assert!(err.to_string().contains("output.stride"), "{err}");
        let err = parse(BASE, &["initial.host_edge=3"]).unwrap_err();
        assert!(err.to_string().contains("initial.host_edge"), "{err}");
        let err = parse(BASE, &["edge.3.mu=1"]).unwrap_err();
        assert!(err.to_string().contains("edge.3.mu"), "{err}");
        let err = parse(BASE, &["initial.c=0.5"]).unwrap_err();
        assert!(err.to_string().contains("initial"), "{err}");
    }

    #[test]
    fn missing_initial_file_is_a_config_error() {
        let err = parse(BASE, &["initial={kind=\"file\", path=\"nope.csv\"}"]).unwrap_err();
        assert!(err.to_string().contains("initial.path"), "{err}");
    }

    #[test]
    fn serialization_round_trips() {
        let cfg = parse(BASE, &["edge.2.nu=0.1", "diagnostics.min_depth=1.5"]).unwrap();
        let again = parse(&cfg.to_toml_string(), &[]).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn with_value_replaces_numeric_fields_only() {
        let cfg = parse(BASE, &[]).unwrap();
        assert_eq!(cfg.with_value("edge.2.mu", 1.4).unwrap().edges[1].mu, 1.4);
        assert_eq!(cfg.with_value("output.stride", 5.0).unwrap().output.stride, 5);
        assert!(cfg.with_value("network.junction", 1.0).is_err());
        assert!(cfg.with_value("edge.2.missing", 1.0).is_err());
    }

    #[test]
    fn override_values_fall_back_to_strings() {
        assert_eq!(parse_override_value("1.5"), toml::Value::Float(1.5));
        assert_eq!(parse_override_value("3"), toml::Value::Integer(3));
        assert_eq!(
            parse_override_value("kirchhoff"),
            toml::Value::String("kirchhoff".into())
        );
        assert!(split_override("no-equals").is_err());
    }
}
