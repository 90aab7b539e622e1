//! Criterion dispatch from configuration entries.

use crate::config::{grid_values, ConfigError, RawCheck};
use crate::resolve::{Env, TargetKind};
use oscillate::criteria::{self, default_lambda_grid, search_main_b2};
use oscillate::profiles::geometric_grid;
use oscillate::spectral::{check_yamabe, instability_at_infinity, lambda1_negative};
use oscillate::{CriterionId, Error, Verdict};
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Numeric settings shared by all checks.
#[derive(Clone, Copy, Debug)]
pub struct Tuning {
    pub tol: f64,
    pub horizon: f64,
}

/// A checker failure attributed to one configuration entry.
#[derive(Debug)]
pub struct CheckFailure {
    pub section: String,
    pub criterion: String,
    pub error: Error,
}

#[derive(Clone, Copy, PartialEq)]
enum Needs {
    Nothing,
    Curvature,
    Pair,
}

/// Parameter names accepted by each criterion, in expansion order.
fn signature(id: CriterionId) -> (Needs, &'static [&'static str]) {
    use CriterionId::*;
    match id {
        MyersGalloway => (Needs::Nothing, &["c", "F", "m"]),
        AmbroseMoore => (Needs::Curvature, &["lambda", "horizon"]),
        Nehari => (Needs::Curvature, &["lambda", "t0", "horizon"]),
        Calabi => (Needs::Curvature, &["horizon"]),
        MainB2 => (Needs::Curvature, &["lambda", "a", "b"]),
        FirstZero => (Needs::Pair, &["a", "b"]),
        Oscillation => (Needs::Pair, &["R", "horizon"]),
        MooreLiminf => (Needs::Pair, &["R", "c", "horizon"]),
        Leighton => (Needs::Pair, &[]),
        Bmr => (Needs::Pair, &["T", "horizon"]),
        DiameterRemark => (Needs::Curvature, &["D"]),
        Lambda1Negative => (Needs::Pair, &["a", "b"]),
        InstabilityAtInfinity => (Needs::Pair, &["R", "horizon"]),
        Yamabe => (Needs::Pair, &["s", "m", "B", "a", "b"]),
    }
}

fn default_value(id: CriterionId, key: &str, tuning: &Tuning) -> Option<Vec<f64>> {
    use CriterionId::*;
    Some(match (id, key) {
        (_, "horizon") => vec![tuning.horizon],
        (MyersGalloway, "F") => vec![0.0],
        (AmbroseMoore | Nehari, "lambda") => vec![0.0],
        (Nehari, "t0") => vec![1.0],
        (MainB2, "lambda") => default_lambda_grid(),
        (MainB2, "a") => geometric_grid(0.05, 10.0, 25),
        (MainB2, "b") => geometric_grid(0.1, 100.0, 49),
        (FirstZero, "a") => vec![0.0],
        (Oscillation | MooreLiminf | InstabilityAtInfinity, "R") => vec![1.0],
        (Bmr, "T") => vec![1.0],
        _ => return None,
    })
}

/// A fully resolved check with its expanded parameter grid.
pub struct PreparedCheck {
    pub section: String,
    pub id: CriterionId,
    target: Target,
    grids: BTreeMap<&'static str, Vec<f64>>,
    s_mean: Option<oscillate::Profile<f64>>,
    moore_c: bool,
}

enum Target {
    None,
    Curvature(oscillate::CurvatureProfile<f64>),
    Pair(oscillate::CoefficientPair<f64>),
}

pub fn prepare(env: &Env, check: &RawCheck, section: &str, default_target: Option<&str>, tuning: &Tuning) -> Result<PreparedCheck, ConfigError> {
    let cfg = env.cfg;
    let id = CriterionId::parse(&check.criterion).ok_or_else(|| {
        let known: Vec<&str> = CriterionId::ALL.iter().map(|c| c.as_str()).collect();
        cfg.error(section, Some("criterion"), format!("unknown criterion `{}` (known: {})", check.criterion, known.join(", ")))
    })?;
    let (needs, keys) = signature(id);
    for key in check.params.keys() {
        if !keys.contains(&key.as_str()) {
            return Err(cfg.error(
                section,
                Some(key),
                format!("`{}` takes no parameter `{key}` (accepted: {})", id, if keys.is_empty() { "none".to_string() } else { keys.join(", ") }),
            ));
        }
    }
    let target_name = check.target.as_deref().or(default_target);
    let target = match needs {
        Needs::Nothing => Target::None,
        Needs::Curvature | Needs::Pair => {
            let name = target_name.ok_or_else(|| cfg.error(section, Some("target"), format!("`{id}` needs a target")))?;
            match (needs, env.kind_of(name)) {
                (Needs::Curvature, Some(TargetKind::Curvature | TargetKind::Model)) => Target::Curvature(env.curvature(name)?),
                (Needs::Pair, Some(TargetKind::Pair)) => Target::Pair(env.pair(name)?),
                (Needs::Curvature, _) => {
                    return Err(cfg.error(section, Some("target"), format!("`{id}` needs a curvature profile or model, `{name}` is not one")))
                }
                _ => return Err(cfg.error(section, Some("target"), format!("`{id}` needs a coefficient pair, `{name}` is not one"))),
            }
        }
    };
    let mut grids = BTreeMap::new();
    let mut s_mean = None;
    for &key in keys {
        if key == "s" {
            let text = match check.params.get("s") {
                Some(toml::Value::String(s)) => s.clone(),
                Some(_) => return Err(cfg.error(section, Some("s"), "`s` must be an expression string")),
                None => return Err(cfg.error(section, Some("s"), "missing scalar curvature mean `s`")),
            };
            s_mean = Some(env.profile(&text, "S", section, "s")?);
            continue;
        }
        let values = match check.params.get(key) {
            Some(v) => grid_values(v, &env.vars).map_err(|m| cfg.error(section, Some(key), m))?,
            None => match default_value(id, key, tuning) {
                Some(v) => v,
                None if id == CriterionId::MooreLiminf && key == "c" => continue,
                None if id == CriterionId::Yamabe && key == "B" => match &target {
                    Target::Pair(p) => vec![p.b_const],
                    _ => unreachable!("yamabe targets are pairs"),
                },
                None => return Err(cfg.error(section, Some(key), format!("`{id}` needs parameter `{key}`"))),
            },
        };
        grids.insert(key, values);
    }
    Ok(PreparedCheck {
        section: section.to_string(),
        id,
        target,
        moore_c: grids.contains_key("c"),
        grids,
        s_mean,
    })
}

impl PreparedCheck {
    /// Cartesian product of the parameter grids in signature order.
    fn points(&self) -> Vec<BTreeMap<&'static str, f64>> {
        let mut out = vec![BTreeMap::new()];
        for &key in signature(self.id).1 {
            let Some(values) = self.grids.get(key) else { continue };
            out = out
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.insert(key, v);
                        q
                    })
                })
                .collect();
        }
        out
    }

    fn fail(&self, error: Error) -> CheckFailure {
        CheckFailure { section: self.section.clone(), criterion: self.id.to_string(), error }
    }

    /// Evaluates every grid point (a single search for `main_B2`).
    pub fn run(&self, tuning: &Tuning) -> Result<Vec<Verdict>, CheckFailure> {
        if self.id == CriterionId::MainB2 {
            let Target::Curvature(k) = &self.target else { unreachable!() };
            let v = search_main_b2(k, &self.grids["lambda"], &self.grids["a"], &self.grids["b"], tuning.tol)
                .map_err(|e| self.fail(e))?;
            return Ok(vec![v]);
        }
        self.points()
            .par_iter()
            .map(|p| self.run_point(p, tuning).map_err(|e| self.fail(e)))
            .collect()
    }

    fn run_point(&self, p: &BTreeMap<&'static str, f64>, tuning: &Tuning) -> oscillate::Result<Verdict> {
        use CriterionId::*;
        let tol = tuning.tol;
        let g = |k: &str| p[k];
        let as_dim = |x: f64| -> oscillate::Result<u32> {
            if x.fract() == 0.0 && x >= 0.0 {
                Ok(x as u32)
            } else {
                Err(Error::InvalidParams(format!("dimension must be an integer, got {x}")))
            }
        };
        match (&self.target, self.id) {
            (Target::None, MyersGalloway) => criteria::check_myers_galloway(g("c"), g("F"), as_dim(g("m"))?),
            (Target::Curvature(k), AmbroseMoore) => criteria::check_ambrose_moore(k, g("lambda"), g("horizon"), tol),
            (Target::Curvature(k), Nehari) => criteria::check_nehari(k, g("lambda"), g("t0"), g("horizon"), tol),
            (Target::Curvature(k), Calabi) => criteria::check_calabi(k, g("horizon"), tol),
            (Target::Curvature(k), DiameterRemark) => criteria::check_diameter_remark(k, g("D"), tol),
            (Target::Pair(q), FirstZero) => criteria::check_first_zero(q, g("a"), g("b"), tol),
            (Target::Pair(q), Oscillation) => criteria::check_oscillation(q, g("R"), g("horizon"), tol),
            (Target::Pair(q), MooreLiminf) => {
                criteria::check_moore_liminf(q, g("R"), self.moore_c.then(|| g("c")), g("horizon"), tol)
            }
            (Target::Pair(q), Leighton) => criteria::check_leighton(q),
            (Target::Pair(q), Bmr) => criteria::check_bmr(q, g("T"), g("horizon"), tol),
            (Target::Pair(q), Lambda1Negative) => lambda1_negative(q, g("a"), g("b"), tol),
            (Target::Pair(q), InstabilityAtInfinity) => instability_at_infinity(q, g("R"), g("horizon"), tol),
            (Target::Pair(q), Yamabe) => {
                let s = self.s_mean.as_ref().expect("prepared with `s`");
                check_yamabe(s, as_dim(g("m"))?, &q.v, g("B"), g("a"), g("b"), tol)
            }
            _ => unreachable!("targets are matched to criteria in prepare"),
        }
    }
}

/// `key=value` pairs identifying the instance that fired.
pub fn firing_parameters(v: &Verdict) -> String {
    const KEYS: [&str; 9] = ["lambda", "a", "b", "t0", "R", "T", "D", "c", "horizon"];
    if !v.is_satisfied() {
        return String::new();
    }
    KEYS.iter()
        .filter_map(|k| v.get(k).map(|x| format!("{k}={}", oscillate::report::fmt_g12(x))))
        .collect::<Vec<_>>()
        .join(";")
}
