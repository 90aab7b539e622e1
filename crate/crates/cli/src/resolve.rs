//! Turns named declarations into library objects under a set of bindings.

use crate::config::{num_value, parse_with_vars, ConfigError, ExperimentConfig, Num, RawTail, Vars};
use oscillate::geometry::{model_profiles, space_form, ModelManifold, Warping};
use oscillate::{CoefficientPair, CurvatureProfile, Expr64, L1Status, Profile, TailClass};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetKind {
    Curvature,
    Pair,
    Model,
}

/// Resolution context: the configuration plus parameter bindings.
pub struct Env<'a> {
    pub cfg: &'a ExperimentConfig,
    pub vars: Vars,
}

impl<'a> Env<'a> {
    pub fn new(cfg: &'a ExperimentConfig) -> Self {
        Env { cfg, vars: cfg.raw.params.clone() }
    }

    pub fn with_binding(&self, name: &str, value: f64) -> Env<'a> {
        let mut vars = self.vars.clone();
        vars.insert(name.to_string(), value);
        Env { cfg: self.cfg, vars }
    }

    fn err(&self, section: &str, key: &str, msg: impl Into<String>) -> ConfigError {
        self.cfg.error(section, Some(key), msg)
    }

    pub fn num(&self, n: &Num, section: &str, key: &str) -> Result<f64, ConfigError> {
        num_value(n, &self.vars).map_err(|m| self.err(section, key, m))
    }

    pub fn opt_num(&self, n: &Option<Num>, section: &str, key: &str, default: f64) -> Result<f64, ConfigError> {
        n.as_ref().map_or(Ok(default), |n| self.num(n, section, key))
    }

    pub fn expr(&self, text: &str, section: &str, key: &str) -> Result<Expr64, ConfigError> {
        parse_with_vars(text, &self.vars).map_err(|m| self.err(section, key, m))
    }

    /// A named `[profile.X]` or an inline expression.
    pub fn profile(&self, text: &str, label: &str, section: &str, key: &str) -> Result<Profile<f64>, ConfigError> {
        if let Some(p) = self.cfg.raw.profile.get(text) {
            let ps = format!("profile.{text}");
            let mut out = Profile::new(text, self.expr(&p.expr, &ps, "expr")?);
            if let Some(tail) = &p.tail {
                out = out.with_tail(self.tail(tail, &ps)?);
            }
            if let Some(note) = &p.note {
                out = out.with_note(note.clone());
            }
            return Ok(out);
        }
        Ok(Profile::new(label, self.expr(text, section, key)?))
    }

    fn tail(&self, t: &RawTail, section: &str) -> Result<TailClass<f64>, ConfigError> {
        let req = |n: &Option<Num>, k: &str| -> Result<f64, ConfigError> {
            match n {
                Some(n) => self.num(n, section, k),
                None => Err(self.err(section, "tail", format!("tail needs `{k}`"))),
            }
        };
        match t.kind.as_str() {
            "power" => Ok(TailClass::Power { c: req(&t.c, "c")?, p: req(&t.p, "p")? }),
            "exp" => Ok(TailClass::Exp {
                c: req(&t.c, "c")?,
                rate: req(&t.rate, "rate")?,
                p: self.opt_num(&t.p, section, "p", 0.0)?,
            }),
            "none" => Ok(TailClass::NoTailInfo),
            other => Err(self.err(section, "tail", format!("unknown tail kind `{other}`"))),
        }
    }

    pub fn kind_of(&self, name: &str) -> Option<TargetKind> {
        let r = &self.cfg.raw;
        if r.curvature.contains_key(name) {
            Some(TargetKind::Curvature)
        } else if r.pair.contains_key(name) {
            Some(TargetKind::Pair)
        } else if r.model.contains_key(name) {
            Some(TargetKind::Model)
        } else {
            None
        }
    }

    pub fn model(&self, name: &str) -> Result<ModelManifold<f64>, ConfigError> {
        let section = format!("model.{name}");
        let m = self
            .cfg
            .raw
            .model
            .get(name)
            .ok_or_else(|| self.cfg.error(&section, None, format!("unknown model `{name}`")))?;
        let dim = self.num(&m.m, &section, "m")?;
        if dim.fract() != 0.0 || dim < 2.0 {
            return Err(self.err(&section, "m", format!("dimension must be an integer >= 2, got {dim}")));
        }
        let dim = dim as u32;
        let built = match m.kind.as_str() {
            "space_form" => space_form(dim, self.opt_num(&m.kappa, &section, "kappa", 0.0)?),
            "cubic" => ModelManifold::new(dim, Warping::cubic(self.opt_num(&m.a, &section, "a", 0.0)?)),
            "custom" => {
                let f = m.f.as_ref().ok_or_else(|| self.err(&section, "f", "custom models need `f`"))?;
                let f = self.expr(f, &section, "f")?;
                let df = m.df.as_ref().map(|s| self.expr(s, &section, "df")).transpose()?;
                let ddf = m.ddf.as_ref().map(|s| self.expr(s, &section, "ddf")).transpose()?;
                let warping = match (df, ddf) {
                    (None, None) => Ok(Warping::differentiate(f)),
                    (df, ddf) => Warping::custom(f, df, ddf),
                };
                warping.and_then(|w| ModelManifold::new(dim, w))
            }
            other => return Err(self.err(&section, "kind", format!("unknown model kind `{other}`"))),
        };
        built.map_err(|e| self.err(&section, "kind", e.to_string()))
    }

    pub fn curvature(&self, name: &str) -> Result<CurvatureProfile<f64>, ConfigError> {
        if self.kind_of(name) == Some(TargetKind::Model) {
            let model = self.model(name)?;
            return model_profiles(&model).map(|(k, _)| k).map_err(|e| self.cfg.error(&format!("model.{name}"), None, e.to_string()));
        }
        let section = format!("curvature.{name}");
        let c = self
            .cfg
            .raw
            .curvature
            .get(name)
            .ok_or_else(|| self.cfg.error(&section, None, format!("`{name}` is not a curvature profile or model")))?;
        let k = self.profile(&c.k, name, &section, "k")?;
        let default_b = k.is_constant().map_or(0.0, |c| (-c).max(0.0).sqrt());
        let b = self.opt_num(&c.b, &section, "b", default_b)?;
        let m = self.opt_num(&c.m, &section, "m", 2.0)?;
        if m.fract() != 0.0 || m < 2.0 {
            return Err(self.err(&section, "m", format!("dimension must be an integer >= 2, got {m}")));
        }
        if !(b >= 0.0) {
            return Err(self.err(&section, "b", format!("B must be non-negative, got {b}")));
        }
        Ok(CurvatureProfile::new(k, b, m as u32))
    }

    pub fn pair(&self, name: &str) -> Result<CoefficientPair<f64>, ConfigError> {
        let section = format!("pair.{name}");
        let p = self
            .cfg
            .raw
            .pair
            .get(name)
            .ok_or_else(|| self.cfg.error(&section, None, format!("`{name}` is not a coefficient pair")))?;
        let v = match (&p.v, &p.model) {
            (Some(v), _) => self.profile(v, "v", &section, "v")?,
            (None, Some(m)) => {
                let model = self.model(m)?;
                model_profiles(&model).map(|(_, v)| v).map_err(|e| self.err(&section, "model", e.to_string()))?
            }
            (None, None) => return Err(self.err(&section, "v", "missing `v`")),
        };
        let w = self.profile(&p.w, "W", &section, "w")?;
        let b = self.opt_num(&p.b, &section, "b", 0.0)?;
        if !(b >= 0.0) {
            return Err(self.err(&section, "b", format!("B must be non-negative, got {b}")));
        }
        let mut pair = CoefficientPair::new(v, w, b);
        if let Some(start) = &p.start {
            let s = self.num(start, &section, "start")?;
            if !(s >= 0.0) {
                return Err(self.err(&section, "start", format!("start must be non-negative, got {s}")));
            }
            pair = pair.with_start(s);
        }
        match p.v_inv_l1.as_deref() {
            None => {}
            Some("integrable") => pair = pair.with_v_inv_l1_at_infinity(L1Status::Integrable),
            Some("not_integrable") => pair = pair.with_v_inv_l1_at_infinity(L1Status::NotIntegrable),
            Some(other) => return Err(self.err(&section, "v_inv_l1", format!("expected `integrable` or `not_integrable`, got `{other}`"))),
        }
        Ok(pair)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SRC: &str = r#"
[params]
mu = 0.3

[profile.decay]
expr = "exp(-t)"

[curvature.hyp]
k = "-1"
m = 3

[pair.euler]
v = "t^2"
w = "$mu * t^-2"
start = 1

[model.s2]
kind = "space_form"
m = 2
kappa = 1

[pair.on_sphere]
model = "s2"
w = "decay"
"#;

    #[test]
    fn resolves_declarations() {
        let cfg = ExperimentConfig::parse(SRC).unwrap();
        let env = Env::new(&cfg);
        let k = env.curvature("hyp").unwrap();
        assert_eq!(k.b_const, 1.0);
        assert_eq!(k.m, 3);
        let p = env.pair("euler").unwrap();
        assert!((p.w.eval(2.0) - 0.075).abs() < 1e-15);
        assert_eq!(p.start, 1.0);
        let p = env.with_binding("mu", 2.0).pair("euler").unwrap();
        assert!((p.w.eval(1.0) - 2.0).abs() < 1e-15);
        let k = env.curvature("s2").unwrap();
        assert_eq!(k.k.eval(0.4), 1.0);
        let p = env.pair("on_sphere").unwrap();
        assert!((p.v.eval(1.0) - 2.0 * std::f64::consts::PI * 1f64.sin()).abs() < 1e-12);
        assert_eq!(p.w.name, "decay");
    }

    #[test]
    fn resolution_errors_point_at_keys() {
        let cfg = ExperimentConfig::parse("[pair.p]\nv = \"t^2\"\nw = \"$nu\"\n").unwrap();
        let err = Env::new(&cfg).pair("p").unwrap_err();
        assert_eq!(err.line, Some(3));
        assert!(err.message.contains("nu"));
    }
}
