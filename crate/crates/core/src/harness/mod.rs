//! Batch front door: configuration, orchestration of every experiment kind,
//! and bit-stable artifact emission with a run manifest.

mod config;
mod output;

pub use config::{EpsConfig, ExperimentConfig, FamilyConfig, Format, GridConfig, MapShape, Numerics, OutputConfig};
pub use output::{sha256_hex, to_canonical_json, write_atomic, Cell, Table};

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fatou::{ev_transitions, FatouGerm, FatouOptions, TransitionOptions, TransitionSample};
use crate::formal::{central_manifold_defect, formal_central_manifold, formal_invariant};
use crate::geometry::{imaginary_dividing_rays, real_dividing_rays};
use crate::holonomy::{
    check_orientation, circle_grid, field_monodromy, monodromy_germ, separatrix_trace, MonodromyGerm,
    MonodromyOptions, SeparatrixOptions,
};
use crate::koenigs::{
    abel_residual, build_chart, convergence_sweep, fixed_point_data, koenigs_residual, model_field,
    perturbed_transition, KoenigsOptions, Observable, SweepOptions,
};
use crate::ode::OdeOptions;

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Rays,
    Modulus,
    Koenigs,
    Transition,
    Sweep,
    Monodromy,
    Separatrix,
    CentralManifold,
    Invariant,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Rays => "rays",
            Command::Modulus => "modulus",
            Command::Koenigs => "koenigs",
            Command::Transition => "transition",
            Command::Sweep => "sweep",
            Command::Monodromy => "monodromy",
            Command::Separatrix => "separatrix",
            Command::CentralManifold => "central-manifold",
            Command::Invariant => "invariant",
        }
    }
}

/// Command-line overrides of the configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Flags {
    pub tol: Option<f64>,
    pub grid: Option<usize>,
    pub precision: Option<crate::precision::Precision>,
    pub eps: Option<C>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub k: Option<usize>,
}

/// A residual reported by one stage of the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub command: Command,
    pub json: Value,
    pub table: Table,
    pub stages: Vec<Stage>,
    /// Lines for standard output.
    pub summary: Vec<String>,
}

fn c2(c: C) -> Value {
    json!([c.re, c.im])
}

fn stage(name: &str, residual: f64) -> Stage {
    Stage { name: name.into(), residual }
}

/// Applies the flag overrides and checks the result.
pub fn effective_config(cfg: Option<ExperimentConfig>, flags: &Flags) -> Result<Option<ExperimentConfig>> {
    let Some(mut cfg) = cfg else { return Ok(None) };
    if let Some(t) = flags.tol {
        cfg.numerics.tol = t;
    }
    if let Some(g) = flags.grid {
        cfg.numerics.grid = g;
    }
    if let Some(p) = flags.precision {
        cfg.numerics.precision = p;
    }
    if let Some(e) = flags.eps {
        cfg.eps = Some(EpsConfig { list: Some(vec![e]), ..EpsConfig::default() });
    }
    if let Some(k) = flags.k {
        if cfg.k().is_some_and(|ck| ck != k) {
            return Err(Error::Config(format!("--k {k} disagrees with family.k = {}", cfg.k().unwrap_or(0))));
        }
    }
    cfg.validate()?;
    Ok(Some(cfg))
}

fn need(cfg: Option<&ExperimentConfig>, cmd: Command) -> Result<&ExperimentConfig> {
    cfg.ok_or_else(|| Error::Config(format!("`{}` needs --config", cmd.name())))
}

fn first_eps(cfg: &ExperimentConfig) -> Result<C> {
    cfg.eps_values()?
        .first()
        .copied()
        .ok_or_else(|| Error::Config("this command needs an ε (eps.list or --eps)".into()))
}

fn sweep_options(cfg: &ExperimentConfig) -> SweepOptions {
    let n = &cfg.numerics;
    SweepOptions {
        transition: transition_options(n),
        koenigs: KoenigsOptions { iter_cap: n.iter_cap, precision: n.precision, ..KoenigsOptions::default() },
        fatou: fatou_options(n),
        tol: n.tol,
        nondegeneracy_threshold: n.nondegeneracy_threshold,
        normalization: n.normalization,
    }
}

fn transition_options(n: &Numerics) -> TransitionOptions {
    TransitionOptions { fourier_range: n.fourier_range, depth: n.depth, samples: n.grid, ..TransitionOptions::default() }
}

fn fatou_options(n: &Numerics) -> FatouOptions {
    FatouOptions { iter_cap: n.iter_cap, ..FatouOptions::default() }
}

fn ode_options(n: &Numerics) -> OdeOptions {
    OdeOptions { rtol: n.ode_rtol, atol: n.ode_rtol * 1e-2, ..OdeOptions::default() }
}

fn fourier_json(s: &TransitionSample) -> Value {
    let f: Vec<Value> = s.fourier.iter().map(|(l, c)| json!({"l": l, "c": c2(*c)})).collect();
    json!({
        "j": s.j,
        "c0": c2(s.c0),
        "fourier": f,
        "half_plane_sign": s.half_plane_sign,
        "line_im": s.line_im,
        "periodicity_error": s.periodicity_error,
    })
}

fn fourier_rows(t: &mut Table, s: &TransitionSample) {
    for (l, c) in &s.fourier {
        t.push(vec![Cell::I(s.j as i64), Cell::I(*l as i64), Cell::F(c.re), Cell::F(c.im), Cell::F(c.norm())]);
    }
}

/// Runs one experiment; nothing is written.
pub fn run(cmd: Command, cfg: Option<&ExperimentConfig>, flags: &Flags) -> Result<RunOutput> {
    match cmd {
        Command::Rays => run_rays(cfg, flags),
        Command::Modulus => run_modulus(need(cfg, cmd)?),
        Command::Koenigs => run_koenigs(need(cfg, cmd)?),
        Command::Transition => run_transition(need(cfg, cmd)?),
        Command::Sweep => run_sweep(need(cfg, cmd)?),
        Command::Monodromy => run_monodromy(need(cfg, cmd)?),
        Command::Separatrix => run_separatrix(need(cfg, cmd)?),
        Command::CentralManifold => run_central_manifold(need(cfg, cmd)?),
        Command::Invariant => run_invariant(need(cfg, cmd)?),
    }
}

fn run_rays(cfg: Option<&ExperimentConfig>, flags: &Flags) -> Result<RunOutput> {
    let k = flags
        .k
        .or_else(|| cfg.and_then(|c| c.k()))
        .ok_or_else(|| Error::Config("`rays` needs --k or a config with family.k".into()))?;
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let im = imaginary_dividing_rays(k);
    let re = real_dividing_rays(k);
    let mut table = Table::new(&["kind", "index", "arg"]);
    for (kind, v) in [("imaginary", &im), ("real", &re)] {
        for (i, a) in v.iter().enumerate() {
            table.push(vec![Cell::S(kind.into()), Cell::I(i as i64), Cell::F(*a)]);
        }
    }
    Ok(RunOutput {
        command: Command::Rays,
        json: json!({"k": k, "imaginary": im, "real": re}),
        table,
        stages: vec![],
        summary: im.iter().map(|a| format!("{a:.17}")).collect(),
    })
}

fn run_modulus(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let germ = cfg.germ()?;
    let sys = FatouGerm::new(germ, fatou_options(&cfg.numerics))?;
    let ev = ev_transitions(&sys, &transition_options(&cfg.numerics))?;
    let mut table = Table::new(&["j", "l", "c_re", "c_im", "abs_c"]);
    for s in &ev.transitions {
        fourier_rows(&mut table, s);
    }
    let periodicity = ev.transitions.iter().map(|s| s.periodicity_error).fold(0.0, f64::max);
    Ok(RunOutput {
        command: Command::Modulus,
        json: json!({
            "k": ev.k,
            "lambda": c2(ev.lambda),
            "closure": c2(ev.closure),
            "norm_constants": ev.norm_constants.iter().map(|c| c2(*c)).collect::<Vec<_>>(),
            "transitions": ev.transitions.iter().map(fourier_json).collect::<Vec<_>>(),
        }),
        table,
        stages: vec![stage("periodicity", periodicity)],
        summary: vec![format!("lambda = {} {}", ev.lambda.re, ev.lambda.im)],
    })
}

fn run_koenigs(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let fam = cfg.map_family()?;
    let eps = first_eps(cfg)?;
    let mut fam = fam;
    if !fam.eps_list.contains(&eps) {
        fam.eps_list = vec![eps];
    }
    let roots = fam.roots_at(eps)?;
    let n = &cfg.numerics;
    let kopts = KoenigsOptions { iter_cap: n.iter_cap, precision: n.precision, ..KoenigsOptions::default() };
    let mut points = Vec::new();
    let mut table = Table::new(&[
        "i", "alpha_re", "alpha_im", "mu_re", "mu_im", "a_eps_re", "a_eps_im", "residual_abel", "residual_koenigs",
    ]);
    let (mut worst_abel, mut worst_koenigs) = (0.0f64, 0.0f64);
    for i in 0..roots.roots.len() {
        let fp = fixed_point_data(&fam, eps, i)?;
        let field = model_field(&fam, eps, i)?;
        let a = fp.alpha;
        let sep = roots.separation(i);
        let dir = if a.norm() > 0.0 { a / a.norm() } else { C::new(1.0, 0.0) };
        let base = dir * (0.5 * fam.radius).max(a.norm() + 0.25 * sep);
        let chart = build_chart(&fam, eps, i, base, kopts)?;
        let grid: Vec<C> = (0..16).map(|m| a + C::from_polar(0.25 * sep, 0.3 + std::f64::consts::TAU * m as f64 / 16.0)).collect();
        let ra = abel_residual(&chart, &grid)?;
        let rk = koenigs_residual(&chart, &grid)?;
        worst_abel = worst_abel.max(ra);
        worst_koenigs = worst_koenigs.max(rk);
        table.push(vec![
            Cell::I(i as i64),
            Cell::F(a.re),
            Cell::F(a.im),
            Cell::F(fp.mu.re),
            Cell::F(fp.mu.im),
            Cell::F(field.a_eps.re),
            Cell::F(field.a_eps.im),
            Cell::F(ra),
            Cell::F(rk),
        ]);
        points.push(json!({
            "i": i,
            "alpha": c2(a),
            "mu": c2(fp.mu),
            "log_mu": c2(fp.log_mu),
            "stability": fp.stability,
            "a_eps": c2(field.a_eps),
            "residual_abel": ra,
            "residual_koenigs": rk,
        }));
    }
    Ok(RunOutput {
        command: Command::Koenigs,
        json: json!({"k": fam.k, "eps": c2(eps), "fixed_points": points}),
        table,
        stages: vec![stage("abel", worst_abel), stage("koenigs", worst_koenigs)],
        summary: vec![format!("{} fixed points", roots.roots.len())],
    })
}

fn run_transition(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let mut fam = cfg.map_family()?;
    let eps = first_eps(cfg)?;
    if !fam.eps_list.contains(&eps) {
        fam.eps_list = vec![eps];
    }
    let opts = sweep_options(cfg);
    let mut table = Table::new(&["j", "l", "c_re", "c_im", "abs_c"]);
    let mut out = Vec::new();
    let (mut worst_abel, mut worst_koenigs) = (0.0f64, 0.0f64);
    for j in 0..2 * fam.k {
        let t = perturbed_transition(&fam, eps, j, &opts)?;
        fourier_rows(&mut table, &t.sample);
        worst_abel = worst_abel.max(t.residual_abel);
        worst_koenigs = worst_koenigs.max(t.residual_koenigs);
        let mut v = fourier_json(&t.sample);
        v["residual_abel"] = json!(t.residual_abel);
        v["residual_koenigs"] = json!(t.residual_koenigs);
        v["iter_count"] = json!(t.iter_count);
        v["precision_mode"] = json!(t.precision);
        out.push(v);
    }
    Ok(RunOutput {
        command: Command::Transition,
        json: json!({"k": fam.k, "eps": c2(eps), "transitions": out}),
        table,
        stages: vec![stage("abel", worst_abel), stage("koenigs", worst_koenigs)],
        summary: vec![format!("{} transitions", 2 * fam.k)],
    })
}

fn run_sweep(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let fam = cfg.map_family()?;
    if fam.eps_list.len() < 2 {
        return Err(Error::Config("the sweep needs at least two ε values".into()));
    }
    if fam.eps_list.windows(2).any(|w| w[1].norm() >= w[0].norm()) {
        return Err(Error::Config("the sweep needs strictly decreasing |ε|".into()));
    }
    let rep = convergence_sweep(&fam, &sweep_options(cfg))?;
    let mut table = Table::new(&[
        "eps_re",
        "eps_im",
        "pair",
        "l",
        "c_re",
        "c_im",
        "abs_c",
        "residual_abel",
        "residual_koenigs",
        "iter_count",
        "precision_mode",
    ]);
    for r in &rep.rows {
        table.push(vec![
            Cell::F(r.eps.re),
            Cell::F(r.eps.im),
            Cell::I(r.pair as i64),
            Cell::I(r.l as i64),
            Cell::F(r.c.re),
            Cell::F(r.c.im),
            Cell::F(r.abs_c),
            Cell::F(r.residual_abel),
            Cell::F(r.residual_koenigs),
            Cell::I(r.iter_count as i64),
            Cell::S(r.precision_mode.name().into()),
        ]);
    }
    let worst = |f: fn(&crate::koenigs::SweepRow) -> f64| rep.rows.iter().map(f).fold(0.0, f64::max);
    let stages = vec![stage("abel", worst(|r| r.residual_abel)), stage("koenigs", worst(|r| r.residual_koenigs))];
    let summary = rep
        .series
        .iter()
        .map(|s| {
            format!(
                "pair {} l {} {}: extrapolated {:?} reference {:?} decreasing {}",
                s.pair,
                s.l,
                match s.observable {
                    Observable::Abs => "abs",
                    Observable::Ratio => "ratio",
                },
                s.extrapolated,
                s.reference,
                s.decreasing_differences
            )
        })
        .collect();
    Ok(RunOutput {
        command: Command::Sweep,
        json: serde_json::to_value(&rep).map_err(|e| Error::Io(e.to_string()))?,
        table,
        stages,
        summary,
    })
}

fn monodromy_json(g: &MonodromyGerm) -> Value {
    json!({
        "delta": g.delta,
        "points": g.points.iter().map(|p| json!({
            "t0": c2(p.t0), "ft": c2(p.ft), "dft": c2(p.dft), "err_est": p.err_est,
        })).collect::<Vec<_>>(),
        "fitted_jet": g.fitted_jet,
        "fit_residual": g.fit_residual,
    })
}

fn run_monodromy(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let eps = cfg.eps_values()?.first().copied().unwrap_or_default();
    let n = &cfg.numerics;
    let grid = match &cfg.grid {
        Some(g) => g.values()?,
        None => circle_grid(0.05, 20),
    };
    let mut opts = MonodromyOptions { delta: n.delta, ode: ode_options(n), jet_degree: n.jet_degree, ..MonodromyOptions::default() };
    let germ = match cfg.family {
        FamilyConfig::Field2d { .. } => monodromy_germ(&cfg.field_family()?, eps, &grid, &opts)?,
        _ => {
            let (field, k, delta) = cfg.planar_field(eps)?;
            let delta = n.delta.unwrap_or(delta);
            let degree = n.jet_degree.unwrap_or(k.unwrap_or(0) + 3);
            opts.delta = Some(delta);
            let g = field_monodromy(&field, delta, &grid, degree, &opts)?;
            if let (Some(k), Some(j)) = (k, &g.fitted_jet) {
                check_orientation(j, k)?;
            }
            g
        }
    };
    let mut table = Table::new(&["t0_re", "t0_im", "ft_re", "ft_im", "err_est"]);
    for p in &germ.points {
        table.push(vec![Cell::F(p.t0.re), Cell::F(p.t0.im), Cell::F(p.ft.re), Cell::F(p.ft.im), Cell::F(p.err_est)]);
    }
    let err = germ.points.iter().map(|p| p.err_est).fold(0.0, f64::max);
    Ok(RunOutput {
        command: Command::Monodromy,
        json: monodromy_json(&germ),
        table,
        stages: vec![stage("integration", err), stage("fit", germ.fit_residual)],
        summary: vec![format!("{} grid points, fit residual {:e}", germ.points.len(), germ.fit_residual)],
    })
}

fn run_separatrix(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let fam = cfg.field_family()?;
    let eps = first_eps(cfg)?;
    let targets = cfg
        .grid
        .as_ref()
        .ok_or_else(|| Error::Config("`separatrix` needs [grid] targets".into()))?
        .values()?;
    let opts = SeparatrixOptions { ode: ode_options(&cfg.numerics), ..SeparatrixOptions::default() };
    let tr = separatrix_trace(&fam, eps, cfg.numerics.root, &targets, &opts)?;
    let mut table = Table::new(&["t_re", "t_im", "z_re", "z_im", "abs_dzdt", "certified"]);
    for s in &tr.samples {
        table.push(vec![
            Cell::F(s.t.re),
            Cell::F(s.t.im),
            Cell::F(s.z.re),
            Cell::F(s.z.im),
            Cell::F(s.dzdt.norm()),
            Cell::I(s.certified as i64),
        ]);
    }
    let certified = tr.certify();
    let mut summary = vec![format!("slope {} {}", tr.slope_at_alpha.re, tr.slope_at_alpha.im)];
    if let Err(e) = &certified {
        summary.push(e.to_string());
    }
    Ok(RunOutput {
        command: Command::Separatrix,
        json: json!({
            "alpha": c2(tr.alpha),
            "slope": c2(tr.slope_at_alpha),
            "theta": tr.theta,
            "samples": tr.samples.iter().map(|s| json!([s.t.re, s.t.im, s.z.re, s.z.im])).collect::<Vec<_>>(),
            "certified": tr.samples.iter().map(|s| s.certified).collect::<Vec<_>>(),
            "err_est": tr.err_est,
        }),
        table,
        stages: vec![stage("integration", tr.err_est)],
        summary,
    })
}

fn run_central_manifold(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let field = cfg.formal_field()?;
    let order = cfg.numerics.order.max(2);
    let cm = formal_central_manifold(&field, order)?;
    let q: Vec<Vec<C>> = cm.component_series.iter().map(|s| s.coeffs().to_vec()).collect();
    let defect = central_manifold_defect(&field, &q, order)
        .iter()
        .flat_map(|d| d.iter().map(|c| c.norm()))
        .fold(0.0, f64::max);
    let mut table = Table::new(&["component", "m", "c_re", "c_im"]);
    for (i, s) in cm.component_series.iter().enumerate() {
        for (m, c) in s.coeffs().iter().enumerate() {
            table.push(vec![Cell::I(i as i64), Cell::I(m as i64), Cell::F(c.re), Cell::F(c.im)]);
        }
    }
    Ok(RunOutput {
        command: Command::CentralManifold,
        json: serde_json::to_value(&cm.component_series).map_err(|e| Error::Io(e.to_string()))?,
        table,
        stages: vec![stage("defect", defect)],
        summary: vec![format!("order {order}, defect {defect:e}")],
    })
}

fn run_invariant(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let germ = cfg.germ()?;
    let order = cfg.numerics.order.max(2 * germ.k + 1);
    let jet = germ.map().jet(order)?;
    let r = formal_invariant(&jet, germ.k)?;
    let mut table = Table::new(&["k", "lambda_re", "lambda_im", "residual"]);
    table.push(vec![Cell::I(r.k as i64), Cell::F(r.lambda.re), Cell::F(r.lambda.im), Cell::F(r.residual)]);
    Ok(RunOutput {
        command: Command::Invariant,
        json: json!({"k": r.k, "lambda": c2(r.lambda), "residual": r.residual, "conjugator": r.conjugator}),
        table,
        stages: vec![stage("formal", r.residual)],
        summary: vec![format!("lambda = {} {}", r.lambda.re, r.lambda.im)],
    })
}

/// Chosen format: the flag, then the config, then the file extension.
pub fn output_format(cfg: Option<&ExperimentConfig>, flags: &Flags, path: Option<&Path>) -> Format {
    flags
        .format
        .or_else(|| cfg.and_then(|c| c.output.format))
        .or_else(|| path.and_then(|p| p.extension()).filter(|e| *e == "csv").map(|_| Format::Csv))
        .unwrap_or_default()
}

pub fn render(out: &RunOutput, format: Format) -> Result<String> {
    match format {
        Format::Json => to_canonical_json(&out.json),
        Format::Csv => Ok(out.table.to_csv()),
    }
}

/// The run manifest: what was run, on which configuration, and how well
/// each stage converged.
pub fn manifest(out: &RunOutput, cfg: Option<&ExperimentConfig>, flags: &Flags, artifact: &str, format: Format) -> Result<Value> {
    let cfg_json = match cfg {
        Some(c) => serde_json::to_value(c).map_err(|e| Error::Io(e.to_string()))?,
        None => Value::Null,
    };
    let hashed = json!({"command": out.command.name(), "config": cfg_json, "k": flags.k});
    let hash = sha256_hex(to_canonical_json(&hashed)?.as_bytes());
    Ok(json!({
        "command": out.command.name(),
        "config_hash": hash,
        "config": cfg_json,
        "numerics": cfg.map(|c| serde_json::to_value(&c.numerics)).transpose().map_err(|e| Error::Io(e.to_string()))?,
        "stages": out.stages,
        "artifact_sha256": sha256_hex(artifact.as_bytes()),
        "format": format,
        "version": env!("CARGO_PKG_VERSION"),
    }))
}

/// `<artifact>.manifest.json` beside the artifact.
pub fn manifest_path(artifact: &Path) -> PathBuf {
    let mut s = artifact.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Runs and writes the artifact and its manifest when an output path is
/// known; returns the rendered artifact.
pub fn execute(cmd: Command, cfg: Option<ExperimentConfig>, flags: &Flags) -> Result<(RunOutput, String)> {
    let cfg = effective_config(cfg, flags)?;
    let out = run(cmd, cfg.as_ref(), flags)?;
    let path = flags.out.clone().or_else(|| cfg.as_ref().and_then(|c| c.output.path.as_ref().map(PathBuf::from)));
    let format = output_format(cfg.as_ref(), flags, path.as_deref());
    let text = render(&out, format)?;
    if let Some(p) = path {
        write_atomic(&p, &text)?;
        let m = manifest(&out, cfg.as_ref(), flags, &text, format)?;
        write_atomic(&manifest_path(&p), &to_canonical_json(&m)?)?;
    }
    Ok((out, text))
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    ExperimentConfig::from_toml(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rays_for_k2() {
        let flags = Flags { k: Some(2), ..Flags::default() };
        let (out, _) = execute(Command::Rays, None, &flags).unwrap();
        assert_eq!(out.summary.len(), 4);
        assert_eq!(out.json["imaginary"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn missing_config_is_a_config_error() {
        let e = execute(Command::Sweep, None, &Flags::default()).unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn format_follows_extension() {
        let f = Flags::default();
        assert_eq!(output_format(None, &f, Some(Path::new("a.csv"))), Format::Csv);
        assert_eq!(output_format(None, &f, Some(Path::new("a.json"))), Format::Json);
        let f = Flags { format: Some(Format::Json), ..Flags::default() };
        assert_eq!(output_format(None, &f, Some(Path::new("a.csv"))), Format::Json);
    }

    #[test]
    fn invariant_and_manifest_are_deterministic() {
        let text = "[family]\nkind = \"germ\"\nk = 1\nnum = [[0.0, 0.0], [1.0, 0.0], [0.0, 6.283185307179586], [0.3, 0.0]]\nradius = 0.1\n";
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("inv.json");
        let flags = Flags { out: Some(p.clone()), ..Flags::default() };
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        execute(Command::Invariant, Some(cfg.clone()), &flags).unwrap();
        let a = std::fs::read(&p).unwrap();
        let ma = std::fs::read(manifest_path(&p)).unwrap();
        execute(Command::Invariant, Some(cfg), &flags).unwrap();
        assert_eq!(a, std::fs::read(&p).unwrap());
        assert_eq!(ma, std::fs::read(manifest_path(&p)).unwrap());
        let m: Value = serde_json::from_slice(&ma).unwrap();
        assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
        assert!(m["numerics"]["tol"].is_number());
    }
}
