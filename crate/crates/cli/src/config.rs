//! TOML experiment configuration.
//!
//! ```toml
//! [settings]
//! tol = 1e-10
//! horizon = 1e4
//!
//! [params]
//! mu = 0.3
//!
//! [pair.euler]
//! v = "t^2"
//! w = "$mu * t^-2"
//! start = 1
//!
//! [[check]]
//! criterion = "moore_liminf"
//! target = "euler"
//! R = 1
//! ```
//!
//! Numbers may be given as TOML numbers or as constant expressions
//! (`"pi/2"`, `"$mu"`). Grid-valued parameters additionally accept arrays
//! and tables `{ from, to, step }` or `{ from, to, n, spacing = "geometric" }`.

use oscillate::{parse_expr, Expr64};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::fmt;
use toml::Value;

/// A configuration problem, located by section path, key and source line.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub section: String,
    pub key: Option<String>,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if !self.section.is_empty() {
            write!(f, "[{}]", self.section)?;
            if let Some(key) = &self.key {
                write!(f, " {key}")?;
            }
            write!(f, ": ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Num {
    Int(i64),
    Float(f64),
    Text(String),
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub command: Option<String>,
    pub tol: Option<f64>,
    pub horizon: Option<f64>,
    pub jobs: Option<usize>,
    pub out: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTail {
    /// `power`, `exp` or `none`.
    pub kind: String,
    pub c: Option<Num>,
    pub p: Option<Num>,
    pub rate: Option<Num>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawProfile {
    pub expr: String,
    pub tail: Option<RawTail>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCurvature {
    pub k: String,
    pub b: Option<Num>,
    pub m: Option<Num>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPair {
    pub v: Option<String>,
    pub model: Option<String>,
    pub w: String,
    pub b: Option<Num>,
    pub start: Option<Num>,
    /// `integrable` or `not_integrable`, overriding the derived status of `1/v`.
    pub v_inv_l1: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawModel {
    /// `space_form`, `cubic` or `custom`.
    pub kind: String,
    pub m: Num,
    pub kappa: Option<Num>,
    pub a: Option<Num>,
    pub f: Option<String>,
    pub df: Option<String>,
    pub ddf: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSolve {
    pub target: String,
    pub z0: Option<Num>,
    pub horizon: Option<Num>,
    pub zero_cap: Option<usize>,
    #[serde(default)]
    pub riccati: bool,
}

#[derive(Clone, Debug, Deserialize)]
pub struct RawCheck {
    pub criterion: String,
    pub target: Option<String>,
    #[serde(flatten)]
    pub params: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSweep {
    pub target: String,
    pub param: String,
    pub values: Value,
    pub zeros_horizon: Option<Num>,
    #[serde(default)]
    pub check: Vec<RawCheck>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSpectral {
    pub target: String,
    pub radii: Option<Value>,
    pub horizon: Option<Num>,
    pub a: Option<Num>,
    pub b: Option<Num>,
    #[serde(rename = "R")]
    pub r: Option<Num>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGeometry {
    pub models: Vec<String>,
    pub grid: Option<Value>,
    pub conjugate_cap: Option<Num>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub settings: Settings,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub profile: BTreeMap<String, RawProfile>,
    #[serde(default)]
    pub curvature: BTreeMap<String, RawCurvature>,
    #[serde(default)]
    pub pair: BTreeMap<String, RawPair>,
    #[serde(default)]
    pub model: BTreeMap<String, RawModel>,
    pub solve: Option<RawSolve>,
    #[serde(default)]
    pub check: Vec<RawCheck>,
    pub sweep: Option<RawSweep>,
    pub spectral: Option<RawSpectral>,
    pub geometry: Option<RawGeometry>,
}

/// Parsed configuration together with its source text.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub raw: RawConfig,
    pub source: String,
}

impl ExperimentConfig {
    pub fn parse(source: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(source).map_err(|e| {
            let line = e.span().map(|s| source[..s.start.min(source.len())].matches('\n').count() + 1);
            ConfigError { section: String::new(), key: None, line, message: e.message().trim().to_string() }
        })?;
        let cfg = ExperimentConfig { raw, source: source.to_string() };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Builds an error pointing at `[section] key`.
    pub fn error(&self, section: &str, key: Option<&str>, message: impl Into<String>) -> ConfigError {
        ConfigError {
            section: section.to_string(),
            key: key.map(str::to_string),
            line: self.line_of(section, key),
            message: message.into(),
        }
    }

    /// Source line of a section header (or of a key inside it). Array
    /// sections are addressed as `check[2]`.
    pub fn line_of(&self, section: &str, key: Option<&str>) -> Option<usize> {
        let (name, index) = match section.split_once('[') {
            Some((n, rest)) => (n, rest.trim_end_matches(']').parse::<usize>().ok()),
            None => (section, None),
        };
        let lines: Vec<&str> = self.source.lines().collect();
        let header = |l: &str| {
            let l = l.trim();
            match index {
                Some(_) => l.replace(' ', "") == format!("[[{name}]]"),
                None => l.replace(' ', "") == format!("[{name}]"),
            }
        };
        let mut seen = 0usize;
        let mut start = None;
        for (i, l) in lines.iter().enumerate() {
            if header(l) {
                if index.is_none_or(|k| k == seen) {
                    start = Some(i);
                    break;
                }
                seen += 1;
            }
        }
        let start = start?;
        let Some(key) = key else { return Some(start + 1) };
        for (i, l) in lines.iter().enumerate().skip(start + 1) {
            let t = l.trim_start();
            if t.starts_with('[') {
                break;
            }
            if let Some(rest) = t.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return Some(i + 1);
                }
            }
        }
        Some(start + 1)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let r = &self.raw;
        if let Some(tol) = r.settings.tol {
            if !(tol > 0.0) {
                return Err(self.error("settings", Some("tol"), format!("tolerance must be positive, got {tol}")));
            }
        }
        if let Some(h) = r.settings.horizon {
            if !(h > 0.0) {
                return Err(self.error("settings", Some("horizon"), format!("horizon must be positive, got {h}")));
            }
        }
        if r.settings.jobs == Some(0) {
            return Err(self.error("settings", Some("jobs"), "jobs must be at least 1"));
        }
        let names: Vec<(&str, &String)> = r
            .curvature
            .keys()
            .map(|k| ("curvature", k))
            .chain(r.pair.keys().map(|k| ("pair", k)))
            .chain(r.model.keys().map(|k| ("model", k)))
            .collect();
        for (i, (kind, name)) in names.iter().enumerate() {
            if let Some((other, _)) = names[..i].iter().find(|(_, n)| n == name) {
                return Err(self.error(
                    &format!("{kind}.{name}"),
                    None,
                    format!("name `{name}` is also declared as a {other}"),
                ));
            }
        }
        for (name, p) in &r.pair {
            let section = format!("pair.{name}");
            match (&p.v, &p.model) {
                (Some(_), Some(_)) => return Err(self.error(&section, Some("model"), "give either `v` or `model`, not both")),
                (None, None) => return Err(self.error(&section, None, "missing `v` (or `model`)")),
                (None, Some(m)) if !r.model.contains_key(m) => {
                    return Err(self.error(&section, Some("model"), format!("unknown model `{m}`")))
                }
                _ => {}
            }
        }
        if let Some(s) = &r.solve {
            self.require_target("solve", &s.target)?;
        }
        for (i, c) in r.check.iter().enumerate() {
            if let Some(t) = &c.target {
                self.require_target(&format!("check[{i}]"), t)?;
            }
        }
        if let Some(s) = &r.sweep {
            self.require_target("sweep", &s.target)?;
        }
        if let Some(s) = &r.spectral {
            if !r.pair.contains_key(&s.target) {
                return Err(self.error("spectral", Some("target"), format!("`{}` is not a declared pair", s.target)));
            }
        }
        if let Some(g) = &r.geometry {
            if g.models.is_empty() {
                return Err(self.error("geometry", Some("models"), "model list is empty"));
            }
            for m in &g.models {
                if !r.model.contains_key(m) {
                    return Err(self.error("geometry", Some("models"), format!("unknown model `{m}`")));
                }
            }
        }
        Ok(())
    }

    fn require_target(&self, section: &str, target: &str) -> Result<(), ConfigError> {
        let r = &self.raw;
        if r.curvature.contains_key(target) || r.pair.contains_key(target) || r.model.contains_key(target) {
            Ok(())
        } else {
            Err(self.error(section, Some("target"), format!("unknown target `{target}`")))
        }
    }
}

/// Variable bindings for `$name` references.
pub type Vars = BTreeMap<String, f64>;

pub fn parse_with_vars(text: &str, vars: &Vars) -> Result<Expr64, String> {
    parse_expr(text, &|name| vars.get(name).copied()).map_err(|e| format!("`{text}` {e}"))
}

pub fn num_value(n: &Num, vars: &Vars) -> Result<f64, String> {
    match n {
        Num::Int(i) => Ok(*i as f64),
        Num::Float(x) => Ok(*x),
        Num::Text(s) => parse_with_vars(s, vars)?
            .as_const()
            .ok_or_else(|| format!("`{s}` is not a constant")),
    }
}

fn value_number(v: &Value, vars: &Vars) -> Result<f64, String> {
    match v {
        Value::Integer(i) => Ok(*i as f64),
        Value::Float(x) => Ok(*x),
        Value::String(s) => num_value(&Num::Text(s.clone()), vars),
        other => Err(format!("expected a number, got {}", other.type_str())),
    }
}

/// Expands a grid value: a number, an array or a range table.
pub fn grid_values(v: &Value, vars: &Vars) -> Result<Vec<f64>, String> {
    let values = match v {
        Value::Array(items) => items.iter().map(|x| value_number(x, vars)).collect::<Result<Vec<_>, _>>()?,
        Value::Table(t) => {
            let get = |k: &str| t.get(k).map(|x| value_number(x, vars)).transpose();
            for key in t.keys() {
                if !["from", "to", "step", "n", "spacing"].contains(&key.as_str()) {
                    return Err(format!("unknown grid key `{key}`"));
                }
            }
            let from = get("from")?.ok_or("grid needs `from`")?;
            let to = get("to")?.ok_or("grid needs `to`")?;
            if !(to > from) {
                return Err(format!("grid needs from < to, got {from} and {to}"));
            }
            let spacing = match t.get("spacing") {
                None => "linear",
                Some(Value::String(s)) => s.as_str(),
                Some(_) => return Err("`spacing` must be a string".into()),
            };
            match (get("step")?, get("n")?) {
                (Some(step), None) => {
                    if spacing != "linear" {
                        return Err("`step` only applies to linear grids".into());
                    }
                    if !(step > 0.0) {
                        return Err(format!("step must be positive, got {step}"));
                    }
                    let n = ((to - from) / step + 1e-9).floor() as usize;
                    (0..=n).map(|i| from + i as f64 * step).collect()
                }
                (None, Some(n)) => {
                    let n = n as usize;
                    if n < 2 {
                        return Err("grids need n >= 2".into());
                    }
                    match spacing {
                        "linear" => oscillate::profiles::linear_grid(from, to, n),
                        "geometric" => {
                            if !(from > 0.0) {
                                return Err("geometric grids need from > 0".into());
                            }
                            oscillate::profiles::geometric_grid(from, to, n)
                        }
                        other => return Err(format!("unknown spacing `{other}`")),
                    }
                }
                _ => return Err("grid needs exactly one of `step` and `n`".into()),
            }
        }
        scalar => vec![value_number(scalar, vars)?],
    };
    if values.is_empty() {
        return Err("grid is empty".into());
    }
    if let Some(x) = values.iter().find(|x| !x.is_finite()) {
        return Err(format!("grid value {x} is not finite"));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_errors_have_lines() {
        let err = ExperimentConfig::parse("[settings]\ntol = -1\n").unwrap_err();
        assert_eq!(err.line, Some(2));
        let err = ExperimentConfig::parse("[settings]\nbogus = 1\n").unwrap_err();
        assert!(err.message.contains("bogus"), "{}", err.message);
        assert_eq!(err.line, Some(2));
    }

    #[test]
    fn unknown_targets_are_reported() {
        let src = "[curvature.k]\nk = \"1\"\n\n[[check]]\ncriterion = \"calabi\"\ntarget = \"nope\"\n";
        let err = ExperimentConfig::parse(src).unwrap_err();
        assert_eq!(err.line, Some(6));
        assert!(err.to_string().contains("nope"));
    }

    #[test]
    fn grids() {
        let vars = Vars::new();
        let g = grid_values(&toml::from_str::<toml::Table>("g = { from = 1.5, to = 1.8, step = 0.1 }").unwrap()["g"], &vars)
            .unwrap();
        assert_eq!(g.len(), 4);
        assert!((g[3] - 1.8).abs() < 1e-12);
        let g = grid_values(&Value::String("pi".into()), &vars).unwrap();
        assert_eq!(g, vec![std::f64::consts::PI]);
        let g = grid_values(
            &toml::from_str::<toml::Table>("g = { from = 1, to = 100, n = 3, spacing = \"geometric\" }").unwrap()["g"],
            &vars,
        )
        .unwrap();
        assert!((g[1] - 10.0).abs() < 1e-12);
        assert!(grid_values(&Value::Array(vec![]), &vars).is_err());
    }

    #[test]
    fn numbers_with_vars() {
        let vars: Vars = [("mu".to_string(), 0.3)].into_iter().collect();
        assert_eq!(num_value(&Num::Text("2*$mu".into()), &vars).unwrap(), 0.6);
        assert!(num_value(&Num::Text("t".into()), &vars).is_err());
    }
}
