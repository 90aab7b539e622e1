//! The five commands and their artifacts.

use crate::checks::{firing_parameters, prepare, CheckFailure, PreparedCheck, Tuning};
use crate::config::{grid_values, ConfigError, ExperimentConfig};
use crate::resolve::{Env, TargetKind};
use crate::RunError;
use oscillate::geometry::{conjugate_radius, model_profiles, ConjugateRadius};
use oscillate::ode::{solve_jacobi_with, solve_radial_with, SolveOptions, Trajectory};
use oscillate::report::{fmt_g12, json_number};
use oscillate::riccati::riccati_from_solution;
use oscillate::spectral::{instability_at_infinity, lambda1_negative, SpectralReport};
use oscillate::{Status, Verdict};
use rayon::prelude::*;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Solve,
    Check,
    Sweep,
    Spectral,
    Geometry,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Check => "check",
            Command::Sweep => "sweep",
            Command::Spectral => "spectral",
            Command::Geometry => "geometry",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Command::Solve, Command::Check, Command::Sweep, Command::Spectral, Command::Geometry]
            .into_iter()
            .find(|c| c.as_str() == s)
    }
}

/// Everything a command needs besides the configuration itself.
pub struct Context<'a> {
    pub cfg: &'a ExperimentConfig,
    pub command: Command,
    pub out: PathBuf,
    pub tuning: Tuning,
    /// `# `-prefixed provenance header: tool, command, overrides and the config text.
    pub header: String,
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub artifacts: Vec<PathBuf>,
    pub failures: Vec<CheckFailure>,
}

impl Context<'_> {
    fn write(&self, name: &str, contents: &str, outcome: &mut Outcome) -> Result<(), RunError> {
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|source| RunError::Io { path: path.clone(), source })?;
        outcome.artifacts.push(path);
        Ok(())
    }

    /// JSON artifacts stay pure; the configuration goes into a sibling echo file.
    fn write_config_echo(&self, outcome: &mut Outcome) -> Result<(), RunError> {
        let mut echo = String::new();
        for line in self.header.lines().filter(|l| !l.starts_with("#   ")) {
            echo.push_str(line);
            echo.push('\n');
        }
        echo.push_str(&self.cfg.source);
        self.write("config.echo.toml", &echo, outcome)
    }
}

pub fn provenance_header(cfg: &ExperimentConfig, command: Command, overrides: &[(String, String)]) -> String {
    let mut h = String::new();
    let _ = writeln!(h, "# oscillate {} {}", env!("CARGO_PKG_VERSION"), command.as_str());
    for (k, v) in overrides {
        let _ = writeln!(h, "# override {k} = {v}");
    }
    let _ = writeln!(h, "# config:");
    for line in cfg.source.lines() {
        let _ = writeln!(h, "#   {line}");
    }
    h
}

pub fn execute(ctx: &Context) -> Result<Outcome, RunError> {
    fs::create_dir_all(&ctx.out).map_err(|source| RunError::Io { path: ctx.out.clone(), source })?;
    match ctx.command {
        Command::Solve => solve(ctx),
        Command::Check => check(ctx),
        Command::Sweep => sweep(ctx),
        Command::Spectral => spectral(ctx),
        Command::Geometry => geometry(ctx),
    }
}

fn missing(section: &str) -> RunError {
    RunError::Config(ConfigError {
        section: section.to_string(),
        key: None,
        line: None,
        message: format!("the configuration has no [{section}] section"),
    })
}

fn numerical(context: impl Into<String>, error: oscillate::Error) -> RunError {
    RunError::Numerical { context: context.into(), error }
}

/// Solves the Jacobi problem for curvature targets and the radial problem for pairs.
fn solve_target(env: &Env, target: &str, section: &str, z0: f64, horizon: f64, opts: &SolveOptions<f64>) -> Result<Trajectory<f64>, RunError> {
    let result = match env.kind_of(target) {
        Some(TargetKind::Pair) => solve_radial_with(&env.pair(target)?, z0, horizon, opts),
        Some(_) => solve_jacobi_with(&env.curvature(target)?, horizon, opts),
        None => return Err(RunError::Config(env.cfg.error(section, Some("target"), format!("unknown target `{target}`")))),
    };
    result.map_err(|e| numerical(format!("[{section}] solving `{target}`"), e))
}

fn solve(ctx: &Context) -> Result<Outcome, RunError> {
    let s = ctx.cfg.raw.solve.as_ref().ok_or_else(|| missing("solve"))?;
    let env = Env::new(ctx.cfg);
    let z0 = env.opt_num(&s.z0, "solve", "z0", 1.0)?;
    let horizon = env.opt_num(&s.horizon, "solve", "horizon", ctx.tuning.horizon)?;
    let mut opts = SolveOptions::new(ctx.tuning.tol);
    if let Some(cap) = s.zero_cap {
        opts = opts.with_zero_cap(cap);
    }
    let traj = solve_target(&env, &s.target, "solve", z0, horizon, &opts)?;
    let mut outcome = Outcome::default();
    let mut body = ctx.header.clone();
    let mut buf = Vec::new();
    traj.write_tsv(&mut buf).expect("writing to memory");
    body.push_str(&String::from_utf8_lossy(&buf));
    ctx.write("trajectory.tsv", &body, &mut outcome)?;
    let mut zeros = ctx.header.clone();
    zeros.push_str("# t_lo\tt_hi\tmidpoint\n");
    for z in &traj.zeros {
        let _ = writeln!(zeros, "{}\t{}\t{}", fmt_g12(z.t_lo), fmt_g12(z.t_hi), fmt_g12(z.midpoint()));
    }
    ctx.write("zeros.tsv", &zeros, &mut outcome)?;
    if s.riccati {
        let mut body = ctx.header.clone();
        let mut buf = Vec::new();
        riccati_from_solution(&traj).write_tsv(&mut buf).expect("writing to memory");
        body.push_str(&String::from_utf8_lossy(&buf));
        ctx.write("riccati.tsv", &body, &mut outcome)?;
    }
    Ok(outcome)
}

fn prepare_all(env: &Env, checks: &[crate::config::RawCheck], prefix: &str, default_target: Option<&str>, tuning: &Tuning) -> Result<Vec<PreparedCheck>, RunError> {
    checks
        .iter()
        .enumerate()
        .map(|(i, c)| prepare(env, c, &format!("{prefix}[{i}]"), default_target, tuning).map_err(RunError::Config))
        .collect()
}

fn verdicts_json(verdicts: &[Verdict]) -> String {
    let arr = Value::Array(verdicts.iter().map(Verdict::to_json).collect());
    let mut s = serde_json::to_string_pretty(&arr).expect("serializable");
    s.push('\n');
    s
}

fn check(ctx: &Context) -> Result<Outcome, RunError> {
    if ctx.cfg.raw.check.is_empty() {
        return Err(missing("[check]"));
    }
    let env = Env::new(ctx.cfg);
    let prepared = prepare_all(&env, &ctx.cfg.raw.check, "check", None, &ctx.tuning)?;
    let results: Vec<_> = prepared.par_iter().map(|p| p.run(&ctx.tuning)).collect();
    let mut outcome = Outcome::default();
    let mut verdicts = Vec::new();
    for r in results {
        match r {
            Ok(v) => verdicts.extend(v),
            Err(f) => outcome.failures.push(f),
        }
    }
    ctx.write("verdicts.json", &verdicts_json(&verdicts), &mut outcome)?;
    ctx.write_config_echo(&mut outcome)?;
    Ok(outcome)
}

/// Collapses the verdicts of one check over its grid into a table cell.
fn summarize(verdicts: &[Verdict]) -> (Status, String) {
    if let Some(v) = verdicts.iter().find(|v| v.is_satisfied()) {
        return (Status::Satisfied, firing_parameters(v));
    }
    if !verdicts.is_empty() && verdicts.iter().all(|v| v.status == Status::Violated) {
        return (Status::Violated, String::new());
    }
    (Status::Inconclusive, String::new())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn sweep(ctx: &Context) -> Result<Outcome, RunError> {
    let sw = ctx.cfg.raw.sweep.as_ref().ok_or_else(|| missing("sweep"))?;
    let base = Env::new(ctx.cfg);
    let values = grid_values(&sw.values, &base.vars).map_err(|m| RunError::Config(ctx.cfg.error("sweep", Some("values"), m)))?;
    if sw.check.is_empty() && sw.zeros_horizon.is_none() {
        return Err(RunError::Config(ctx.cfg.error("sweep", None, "nothing to tabulate: add [[sweep.check]] entries or zeros_horizon")));
    }
    let zeros_horizon = sw.zeros_horizon.as_ref().map(|n| base.num(n, "sweep", "zeros_horizon")).transpose()?;
    // Resolve every member up front so configuration errors surface before any work.
    let members: Vec<(f64, Vec<PreparedCheck>)> = values
        .iter()
        .map(|&x| {
            let env = base.with_binding(&sw.param, x);
            prepare_all(&env, &sw.check, "sweep.check", Some(&sw.target), &ctx.tuning).map(|p| (x, p))
        })
        .collect::<Result<_, _>>()?;
    let tasks: Vec<(usize, usize)> =
        (0..members.len()).flat_map(|m| (0..members[m].1.len()).map(move |c| (m, c))).collect();
    let results: Vec<Result<Vec<Verdict>, CheckFailure>> =
        tasks.par_iter().map(|&(m, c)| members[m].1[c].run(&ctx.tuning)).collect();
    let zero_counts: Vec<Option<Result<usize, RunError>>> = values
        .par_iter()
        .map(|&x| {
            zeros_horizon.map(|h| {
                let env = base.with_binding(&sw.param, x);
                solve_target(&env, &sw.target, "sweep", 1.0, h, &SolveOptions::new(ctx.tuning.tol)).map(|t| t.zeros.len())
            })
        })
        .collect();

    let mut outcome = Outcome::default();
    let mut csv = ctx.header.clone();
    let mut cols = vec![sw.param.clone()];
    if zeros_horizon.is_some() {
        cols.push("zeros".into());
    }
    for (i, c) in sw.check.iter().enumerate() {
        let name = format!("{}#{i}", c.criterion);
        cols.push(format!("{name}_status"));
        cols.push(format!("{name}_firing"));
    }
    csv.push_str(&cols.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(","));
    csv.push('\n');
    let mut json_rows = Vec::new();
    let mut results = results.into_iter();
    for (mi, (x, checks)) in members.iter().enumerate() {
        let mut row = vec![fmt_g12(*x)];
        let mut row_json = serde_json::Map::new();
        row_json.insert(sw.param.clone(), json_number(*x));
        if let Some(count) = &zero_counts[mi] {
            match count {
                Ok(n) => {
                    row.push(n.to_string());
                    row_json.insert("zeros".into(), json!(n));
                }
                Err(e) => {
                    row.push("ERROR".into());
                    row_json.insert("zeros".into(), json!(e.to_string()));
                }
            }
        }
        let mut checks_json = Vec::new();
        for _ in checks {
            match results.next().expect("one result per task") {
                Ok(vs) => {
                    let (status, firing) = summarize(&vs);
                    row.push(status.as_str().into());
                    row.push(firing);
                    checks_json.push(Value::Array(vs.iter().map(Verdict::to_json).collect()));
                }
                Err(f) => {
                    row.push(format!("ERROR:{}", f.error.kind()));
                    row.push(String::new());
                    checks_json.push(json!({"error": f.error.to_string()}));
                    outcome.failures.push(f);
                }
            }
        }
        row_json.insert("verdicts".into(), Value::Array(checks_json));
        json_rows.push(Value::Object(row_json));
        csv.push_str(&row.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(","));
        csv.push('\n');
    }
    ctx.write("sweep.csv", &csv, &mut outcome)?;
    let mut js = serde_json::to_string_pretty(&Value::Array(json_rows)).expect("serializable");
    js.push('\n');
    ctx.write("sweep.json", &js, &mut outcome)?;
    ctx.write_config_echo(&mut outcome)?;
    for z in zero_counts.into_iter().flatten() {
        z?;
    }
    Ok(outcome)
}

fn spectral(ctx: &Context) -> Result<Outcome, RunError> {
    let sp = ctx.cfg.raw.spectral.as_ref().ok_or_else(|| missing("spectral"))?;
    let env = Env::new(ctx.cfg);
    let pair = env.pair(&sp.target)?;
    let horizon = env.opt_num(&sp.horizon, "spectral", "horizon", ctx.tuning.horizon)?;
    let radii = match &sp.radii {
        Some(v) => grid_values(v, &env.vars).map_err(|m| RunError::Config(ctx.cfg.error("spectral", Some("radii"), m)))?,
        None => vec![1.0, 10.0, 100.0],
    };
    let tol = ctx.tuning.tol;
    let mut report = SpectralReport::build(&pair, &radii, horizon, tol).map_err(|e| numerical("[spectral]", e))?;
    let mut outcome = Outcome::default();
    let mut verdicts = Vec::new();
    let fail = |criterion: &str, error| CheckFailure { section: "spectral".into(), criterion: criterion.into(), error };
    match (&sp.a, &sp.b) {
        (Some(a), Some(b)) => {
            let (a, b) = (env.num(a, "spectral", "a")?, env.num(b, "spectral", "b")?);
            match lambda1_negative(&pair, a, b, tol) {
                Ok(v) => {
                    report.absorb(&v);
                    verdicts.push(v);
                }
                Err(e) => outcome.failures.push(fail("lambda1_negative", e)),
            }
        }
        (None, None) => {}
        _ => return Err(RunError::Config(ctx.cfg.error("spectral", Some("a"), "give both `a` and `b`"))),
    }
    if let Some(r) = &sp.r {
        let r = env.num(r, "spectral", "R")?;
        match instability_at_infinity(&pair, r, horizon, tol) {
            Ok(v) => verdicts.push(v),
            Err(e) => outcome.failures.push(fail("instability_at_infinity", e)),
        }
    }
    let mut j = report.to_json();
    j["verdicts"] = Value::Array(verdicts.iter().map(Verdict::to_json).collect());
    let mut js = serde_json::to_string_pretty(&j).expect("serializable");
    js.push('\n');
    ctx.write("spectral.json", &js, &mut outcome)?;
    let mut tsv = ctx.header.clone();
    let mut buf = Vec::new();
    report.write_rayleigh_tsv(&mut buf).expect("writing to memory");
    tsv.push_str(&String::from_utf8_lossy(&buf));
    ctx.write("rayleigh.tsv", &tsv, &mut outcome)?;
    ctx.write_config_echo(&mut outcome)?;
    Ok(outcome)
}

fn geometry(ctx: &Context) -> Result<Outcome, RunError> {
    let g = ctx.cfg.raw.geometry.as_ref().ok_or_else(|| missing("geometry"))?;
    let env = Env::new(ctx.cfg);
    let cap = env.opt_num(&g.conjugate_cap, "geometry", "conjugate_cap", 100.0)?;
    let mut outcome = Outcome::default();
    let mut tsv = ctx.header.clone();
    let mut summary = Vec::new();
    tsv.push_str("# model\tr\tf\tK\tv\n");
    for name in &g.models {
        let model = env.model(name)?;
        let (k, v) = model_profiles(&model).map_err(|e| numerical(format!("[model.{name}]"), e))?;
        let hi = model.r_max.min(10.0);
        let grid = match &g.grid {
            Some(val) => grid_values(val, &env.vars).map_err(|m| RunError::Config(ctx.cfg.error("geometry", Some("grid"), m)))?,
            None => oscillate::profiles::linear_grid(hi / 100.0, hi * 0.99, 100),
        };
        for r in grid {
            let _ = writeln!(
                tsv,
                "{name}\t{}\t{}\t{}\t{}",
                fmt_g12(r),
                fmt_g12(model.warping.f.eval(r)),
                fmt_g12(k.k.eval(r)),
                fmt_g12(v.eval(r))
            );
        }
        let conj = conjugate_radius(&model, cap, ctx.tuning.tol).map_err(|e| numerical(format!("[model.{name}] conjugate radius"), e))?;
        let conj_json = match conj {
            ConjugateRadius::Finite(t) => json!({"Finite": json_number(t)}),
            ConjugateRadius::Infinite => json!("Infinite"),
            ConjugateRadius::NotFoundBefore(c) => json!({"NotFoundBefore": json_number(c)}),
        };
        summary.push(json!({
            "model": name,
            "m": model.m,
            "r_max": json_number(model.r_max),
            "b_const": json_number(k.b_const),
            "curvature_lower_bound": model.warping.curvature_lower_bound().map(json_number),
            "conjugate_radius": conj_json,
        }));
    }
    ctx.write("geometry.tsv", &tsv, &mut outcome)?;
    let mut js = serde_json::to_string_pretty(&Value::Array(summary)).expect("serializable");
    js.push('\n');
    ctx.write("geometry.json", &js, &mut outcome)?;
    ctx.write_config_echo(&mut outcome)?;
    Ok(outcome)
}

pub fn default_out_dir(cfg: &ExperimentConfig, config_path: Option<&Path>) -> PathBuf {
    match (&cfg.raw.settings.out, config_path.and_then(Path::parent)) {
        (Some(out), Some(dir)) => dir.join(out),
        (Some(out), None) => PathBuf::from(out),
        (None, _) => PathBuf::from("out"),
    }
}
