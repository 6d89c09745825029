//! Scenario files: schema, pipeline execution and report artifacts.

use crate::check::{first_failure, Check};
use crate::counterex3d::{build_complex, r_grid, verify_violation};
use crate::energy::{blowup, density_probe, jump_criterion_profile, jump_sample_points, CriterionConfig, DensityProbeConfig};
use crate::geom::P2;
use crate::retract::{project_w, RetractionConfig};
use crate::sbv2d::{synthesize, vdist, vnorm, DiscreteSbvMap, SynthSpec};
use crate::sobolev_approx::{global_approx, local_phi, LocalConfig};
use crate::vexp::{log_holder_diagnose, luxembourg_norm, modular, norm_modular_bounds, ExponentField, ExponentSpec, DEFAULT_SCALES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("pipeline failed: {0}")]
    Pipeline(String),
}

pub type Result<T> = std::result::Result<T, ScenarioError>;

fn schema(path: impl Into<String>, message: impl ToString) -> ScenarioError {
    ScenarioError::Schema { path: path.into(), message: message.to_string() }
}

fn pipe(e: impl ToString) -> ScenarioError {
    ScenarioError::Pipeline(e.to_string())
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Io { path: path.display().to_string(), source }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    #[serde(default)]
    pub exponent: Option<ExponentSpec>,
    /// A synthesis spec, or `{"file": path}` holding a serialized map.
    #[serde(default)]
    pub map: Option<Value>,
    pub pipeline: Pipeline,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Pipeline {
    Norms {
        #[serde(default = "default_budget")]
        sample_budget: usize,
    },
    Approximate {
        #[serde(default)]
        x: Option<P2>,
        #[serde(default)]
        r: Option<f64>,
        eta: f64,
        #[serde(default)]
        config: LocalConfig,
    },
    Cover {
        s: f64,
        eta: f64,
        #[serde(default)]
        config: LocalConfig,
    },
    Retract {
        #[serde(default)]
        m_bound: Option<f64>,
        #[serde(default)]
        shift_samples: Option<usize>,
    },
    EnergyProbe {
        #[serde(default = "default_radii")]
        radii: Vec<f64>,
        #[serde(default)]
        points: Option<Vec<P2>>,
        #[serde(default = "default_point_count")]
        point_count: usize,
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default = "default_theta")]
        theta: f64,
        #[serde(default = "default_delta")]
        delta: f64,
        #[serde(default = "default_rho_max")]
        rho_max: f64,
        #[serde(default)]
        kappa: f64,
        #[serde(default = "default_frames")]
        blowup_frames: usize,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
    Counterexample {
        epsilon: f64,
        c_target: f64,
        #[serde(default = "default_axes")]
        axis_count: usize,
        #[serde(default = "default_mc")]
        mc_samples: usize,
        #[serde(default = "default_grid")]
        grid: usize,
        #[serde(default = "default_outer")]
        outer: f64,
        #[serde(default)]
        obj: bool,
    },
}

fn default_budget() -> usize {
    20_000
}
fn default_radii() -> Vec<f64> {
    vec![0.04, 0.02, 0.01, 0.005, 0.0025]
}
fn default_point_count() -> usize {
    8
}
fn default_c() -> f64 {
    1.0
}
fn default_theta() -> f64 {
    1.0
}
fn default_delta() -> f64 {
    0.05
}
fn default_rho_max() -> f64 {
    0.02
}
fn default_frames() -> usize {
    20
}
fn default_epsilon() -> f64 {
    0.1
}
fn default_axes() -> usize {
    200
}
fn default_mc() -> usize {
    1_000_000
}
fn default_grid() -> usize {
    32
}
fn default_outer() -> f64 {
    1.0
}

impl Pipeline {
    pub fn kind(&self) -> &'static str {
        match self {
            Pipeline::Norms { .. } => "norms",
            Pipeline::Approximate { .. } => "approximate",
            Pipeline::Cover { .. } => "cover",
            Pipeline::Retract { .. } => "retract",
            Pipeline::EnergyProbe { .. } => "energy-probe",
            Pipeline::Counterexample { .. } => "counterexample",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub affine_exact: f64,
    pub norm_modular: f64,
    pub unit_norm: f64,
    pub energy_ratio: f64,
    pub monte_carlo: f64,
    pub omega: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { affine_exact: 1e-10, norm_modular: 1e-8, unit_norm: 1e-9, energy_ratio: 1.25, monte_carlo: 0.02, omega: 0.02 }
    }
}

/// Finds the key of a `kind`-tagged object whose removal changes the deserialization error.
fn locate_key<T: DeserializeOwned>(obj: &Value) -> Option<String> {
    let Value::Object(m) = obj else { return None };
    let base = serde_json::from_value::<T>(obj.clone()).err()?.to_string();
    m.keys().filter(|k| k.as_str() != "kind").find_map(|k| {
        let mut o = m.clone();
        o.remove(k);
        match serde_json::from_value::<T>(Value::Object(o)) {
            Err(e) if e.to_string() == base => None,
            _ => Some(k.clone()),
        }
    })
}

fn join_path(prefix: &str, rest: &str) -> String {
    match (prefix, rest.trim_matches(['.', '?'])) {
        ("", "") => "<root>".into(),
        (p, "") => p.into(),
        ("", r) => r.into(),
        (p, r) => format!("{p}.{r}"),
    }
}

fn tagged<T: DeserializeOwned>(v: &Value, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(v.clone()).map_err(|e| {
        let mut path = join_path(prefix, &e.path().to_string());
        if path == prefix {
            if let Some(k) = locate_key::<T>(v) {
                path = join_path(prefix, &k);
            }
        }
        schema(path, e.inner())
    })
}

/// Parses a scenario, reporting the JSON path of the first schema violation.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let sc: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path.starts_with("pipeline") {
            if let Some(p) = serde_json::from_str::<Value>(text).ok().and_then(|v| v.get("pipeline").cloned()) {
                if let Err(err) = tagged::<Pipeline>(&p, "pipeline") {
                    return err;
                }
            }
        }
        schema(join_path("", &path), e.inner())
    })?;
    if sc.name.is_empty() || sc.name.contains(['/', '\\']) {
        return Err(schema("name", "must be a non-empty file-name-safe string"));
    }
    Ok(sc)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(io(path))?;
    parse_scenario(&text)
}

fn resolve_map(sc: &Scenario, base: &Path) -> Result<DiscreteSbvMap> {
    let v = sc.map.as_ref().ok_or_else(|| schema("map", "missing field `map`"))?;
    if let Some(f) = v.get("file") {
        let rel = f.as_str().ok_or_else(|| schema("map.file", "expected a path string"))?;
        let path = base.join(rel);
        let text = std::fs::read_to_string(&path).map_err(io(&path))?;
        let m = DiscreteSbvMap::from_json(&text).map_err(|e| schema("map.file", e))?;
        m.validate().map_err(|e| schema("map.file", e))?;
        return Ok(m);
    }
    let spec: SynthSpec = tagged(v, "map")?;
    synthesize(&spec, sc.seed).map_err(|e| schema("map", e))
}

fn resolve_exponent(sc: &Scenario) -> Result<ExponentField> {
    let spec = sc.exponent.clone().ok_or_else(|| schema("exponent", "missing field `exponent`"))?;
    ExponentField::new(spec).map_err(|e| schema("exponent", e))
}

/// Everything a run writes besides meta.json.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub report: Value,
    pub checks: Vec<Check>,
    pub csv: String,
    /// (file name, contents) under figures/.
    pub figures: Vec<(String, String)>,
    /// Other (file name, contents) at the top level.
    pub extra: Vec<(String, String)>,
}

impl RunOutput {
    pub fn failure(&self) -> Option<&Check> {
        first_failure(&self.checks)
    }

    pub fn report_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.report).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let figs = dir.join("figures");
        std::fs::create_dir_all(&figs).map_err(io(&figs))?;
        let put = |p: PathBuf, s: &str| std::fs::write(&p, s).map_err(io(&p));
        put(dir.join("report.json"), &self.report_json())?;
        put(dir.join("data.csv"), &self.csv)?;
        for (n, s) in &self.figures {
            put(figs.join(n), s)?;
        }
        for (n, s) in &self.extra {
            put(dir.join(n), s)?;
        }
        Ok(())
    }
}

fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(&r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8 csv")
}

fn disk_points(u: &DiscreteSbvMap, c: P2, r: f64, n: usize, seed: u64) -> Vec<P2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| c + P2::polar(r * rng.gen::<f64>().sqrt(), TAU * rng.gen::<f64>())).filter(|x| x.dist(u.center) < u.radius).collect()
}

/// Runs a scenario; `base` resolves relative map files.
pub fn run(sc: &Scenario, base: &Path) -> Result<RunOutput> {
    let mut out = match &sc.pipeline {
        Pipeline::Counterexample { epsilon, c_target, axis_count, mc_samples, grid, outer, obj } => {
            run_counterexample(sc, *epsilon, *c_target, *axis_count, *mc_samples, *grid, *outer, *obj)?
        }
        other => {
            let u = resolve_map(sc, base)?;
            let p = resolve_exponent(sc)?;
            match other {
                Pipeline::Norms { sample_budget } => run_norms(sc, &u, &p, *sample_budget)?,
                Pipeline::Approximate { x, r, eta, config } => run_approximate(sc, &u, &p, *x, *r, *eta, config)?,
                Pipeline::Cover { s, eta, config } => run_cover(sc, &u, &p, *s, *eta, config)?,
                Pipeline::Retract { m_bound, shift_samples } => run_retract(sc, &u, &p, *m_bound, *shift_samples)?,
                Pipeline::EnergyProbe { radii, points, point_count, c, theta, delta, rho_max, kappa, blowup_frames, epsilon } => {
                    let probe = DensityProbeConfig { delta: *delta, theta: *theta, rho_max: *rho_max, kappa: *kappa, levels: 6, c: *c };
                    run_energy(sc, &u, &p, radii, points.as_deref(), *point_count, &probe, *blowup_frames, *epsilon)?
                }
                Pipeline::Counterexample { .. } => unreachable!(),
            }
        }
    };
    out.report = json!({
        "name": sc.name,
        "seed": sc.seed,
        "pipeline": sc.pipeline.kind(),
        "passed": out.checks.iter().all(|c| c.holds),
        "checks": out.checks,
        "results": out.report,
    });
    Ok(out)
}

fn run_norms(sc: &Scenario, u: &DiscreteSbvMap, p: &ExponentField, budget: usize) -> Result<RunOutput> {
    let dom = u.domain();
    let m = modular(&u.grad_integrand(), p, &dom).map_err(pipe)?;
    let n = luxembourg_norm(&u.grad_integrand(), p, &dom).map_err(pipe)?;
    let (lo, hi) = norm_modular_bounds(m, n, p);
    let lh = log_holder_diagnose(p, budget, &DEFAULT_SCALES, sc.seed).map_err(pipe)?;
    let t = sc.tolerances.norm_modular;
    let checks = vec![Check::ge("norm-modular-lower", n, lo, t), Check::le("norm-modular-upper", n, hi, t)];
    let csv = csv_table(&["scale", "omega_log"], lh.strong_profile.iter().map(|(s, v)| vec![s.to_string(), v.to_string()]));
    Ok(RunOutput {
        report: json!({
            "modular": m, "norm": n, "bounds": [lo, hi], "p_minus": p.p_minus, "p_plus": p.p_plus,
            "c_p": lh.c_p, "ell": lh.ell, "is_strong": lh.is_strong, "sample_budget": budget,
        }),
        checks,
        csv,
        figures: vec![("map.svg".into(), u.to_svg(480.0))],
        extra: vec![],
    })
}

#[allow(clippy::too_many_arguments)]
fn run_approximate(sc: &Scenario, u: &DiscreteSbvMap, p: &ExponentField, x: Option<P2>, r: Option<f64>, eta: f64, cfg: &LocalConfig) -> Result<RunOutput> {
    let x0 = x.unwrap_or(u.center);
    let r = r.unwrap_or(0.4 * (u.radius - x0.dist(u.center)));
    let res = local_phi(u, x0, r, p, eta, sc.seed, cfg).map_err(pipe)?;
    let rep = &res.report;
    let pts = disk_points(u, x0, res.big_r * (1.0 - 1e-9), 2000, sc.seed);
    let max_error = pts
        .iter()
        .filter_map(|&q| Some(vdist(&res.phi.eval(q)?, &u.eval(q)?)))
        .fold(0.0, f64::max);
    let affine = u.jump.is_empty()
        && u.cells.iter().all(|c| c.is_affine() && c.grad == u.cells[0].grad && vdist(&c.raw(x0), &u.cells[0].raw(x0)) < 1e-12);
    let mut checks = vec![
        Check::le("no-new-jump", rep.jump_new, 0.0, 1e-9 * r),
        Check::le("linf-non-expansion", rep.linf_phi, rep.linf_u, 1e-9),
        Check::le("boundary-trace", rep.trace_gap, 0.0, 1e-9),
    ];
    if affine {
        checks.push(Check::le("affine-reproduction", max_error, 0.0, sc.tolerances.affine_exact));
    }
    let csv = csv_table(&["q", "lhs", "rhs", "c_hat"], rep.grad_q.iter().map(|g| vec![g.q.to_string(), g.lhs.to_string(), g.rhs.to_string(), g.c_hat.to_string()]));
    Ok(RunOutput {
        report: json!({ "local": rep, "max_error": max_error, "affine_input": affine }),
        checks,
        csv,
        figures: vec![
            ("grid.svg".into(), res.tri.base.to_svg(&res.tri.pos, Some(&u.jump), 480.0)),
            ("phi.svg".into(), res.phi.to_svg(480.0)),
        ],
        extra: vec![],
    })
}

fn run_cover(sc: &Scenario, u: &DiscreteSbvMap, p: &ExponentField, s: f64, eta: f64, cfg: &LocalConfig) -> Result<RunOutput> {
    let rep = global_approx(u, p, s, eta, sc.seed, cfg).map_err(pipe)?;
    let csv = csv_table(
        &["ball", "family", "x", "y", "radius"],
        rep.family.balls.iter().enumerate().map(|(i, b)| vec![i.to_string(), b.family.to_string(), b.center.x.to_string(), b.center.y.to_string(), b.radius.to_string()]),
    );
    Ok(RunOutput {
        report: json!({ "family": rep.family, "estimates": rep.estimates, "balls": rep.balls }),
        checks: rep.checks.clone(),
        csv,
        figures: vec![("cover.svg".into(), rep.family.to_svg(&u.jump, 480.0)), ("w.svg".into(), rep.w.to_svg(480.0))],
        extra: vec![],
    })
}

fn run_retract(sc: &Scenario, u: &DiscreteSbvMap, p: &ExponentField, m_bound: Option<f64>, shift_samples: Option<usize>) -> Result<RunOutput> {
    let m = m_bound.unwrap_or_else(|| u.linf(&u.domain()).max(1.0));
    let mut cfg = RetractionConfig::new(u.k, m).map_err(pipe)?;
    if let Some(n) = shift_samples {
        cfg.shift_samples = n;
    }
    let pr = project_w(u, p, &cfg, sc.seed).map_err(pipe)?;
    let pts = disk_points(u, u.center, u.radius * (1.0 - 1e-9), 2000, sc.seed);
    let unit_gap = pts.iter().filter_map(|&q| pr.w.eval(q)).map(|v| (vnorm(&v) - 1.0).abs()).fold(0.0, f64::max);
    let t = &sc.tolerances;
    let checks = vec![
        Check::le("unit-norm", unit_gap, 0.0, t.unit_norm),
        Check::le("newton-agreement", pr.newton_gap, 0.0, 1e-11),
        Check::le("energy-ratio", pr.energy_ratio, t.energy_ratio, 0.0),
    ];
    let values = pr.shift.as_ref().map(|s| s.values.clone()).unwrap_or_default();
    let csv = csv_table(
        &["a", "modular"],
        values.iter().map(|(a, m)| vec![a.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "), m.to_string()]),
    );
    Ok(RunOutput {
        report: json!({
            "shift": pr.a, "energy_in": pr.energy_in, "energy_out": pr.energy_out, "energy_ratio": pr.energy_ratio,
            "newton_gap": pr.newton_gap, "newton_max_iters": pr.newton_max_iters, "unchanged_cells": pr.unchanged_cells,
            "dropped_segments": pr.dropped_segments, "boundary_trace_gap": pr.boundary_trace_gap, "unit_gap": unit_gap,
            "lambda_lip": cfg.lambda_lip, "sigma": cfg.sigma,
        }),
        checks,
        csv,
        figures: vec![("retracted.svg".into(), pr.w.to_svg(480.0))],
        extra: vec![],
    })
}

#[allow(clippy::too_many_arguments)]
fn run_energy(
    sc: &Scenario,
    u: &DiscreteSbvMap,
    p: &ExponentField,
    radii: &[f64],
    points: Option<&[P2]>,
    count: usize,
    probe: &DensityProbeConfig,
    frames: usize,
    epsilon: f64,
) -> Result<RunOutput> {
    let pts: Vec<P2> = match points {
        Some(v) => v.to_vec(),
        None => jump_sample_points(&u.jump, count, radii.iter().copied().fold(f64::INFINITY, f64::min).min(1.0).max(0.0))
            .into_iter()
            .filter(|x| x.dist(u.center) <= u.radius - probe.delta)
            .collect(),
    };
    let cfg = CriterionConfig { c: probe.c, ..CriterionConfig::default() };
    let mut profiles = Vec::new();
    let mut csv = String::from("point,rho,ratio\n");
    for (i, &x) in pts.iter().enumerate() {
        let pr = jump_criterion_profile(u, p, x, radii, &cfg).map_err(pipe)?;
        for (r, v) in &pr.profile {
            let _ = writeln!(csv, "{i},{r},{v}");
        }
        profiles.push(json!({ "x": x, "verdict": pr.verdict, "slope": pr.slope }));
    }
    let mut checks = Vec::new();
    let density = if pts.is_empty() {
        Value::Null
    } else {
        let d = density_probe(u, p, probe, &pts).map_err(pipe)?;
        checks.push(Check::le("density-violations", d.violations as f64, 0.0, 0.0));
        json!({ "theta_hat": d.theta_hat, "violations": d.violations, "entries": d.entries.len() })
    };
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let mut gap = 0.0_f64;
    let mut dev_margin = f64::INFINITY;
    for i in 0..frames {
        let s = u.radius * (0.02 + 0.3 * rng.gen::<f64>());
        let x = u.center + P2::polar((u.radius - s) * 0.99 * rng.gen::<f64>().sqrt(), TAU * rng.gen::<f64>());
        let f = blowup(u, p, x, s, epsilon, 20_000, sc.seed.wrapping_add(i as u64)).map_err(pipe)?;
        gap = gap.max(f.jump_gap / (1.0 + f.jump_out));
        dev_margin = dev_margin.min(f.omega * (1.0 + sc.tolerances.omega) + 1e-12 - f.sup_dev);
    }
    if frames > 0 {
        checks.push(Check::le("blowup-jump-identity", gap, 0.0, 1e-12));
        checks.push(Check::ge("blowup-exponent-deviation", dev_margin, 0.0, 0.0));
    }
    Ok(RunOutput {
        report: json!({ "profiles": profiles, "density": density, "blowup_frames": frames, "max_jump_gap": gap }),
        checks,
        csv,
        figures: vec![("map.svg".into(), u.to_svg(480.0))],
        extra: vec![],
    })
}

#[allow(clippy::too_many_arguments)]
fn run_counterexample(sc: &Scenario, epsilon: f64, c: f64, axes: usize, mc: usize, grid: usize, outer: f64, obj: bool) -> Result<RunOutput> {
    if !(outer > 0.0) {
        return Err(schema("pipeline.outer", "must be positive"));
    }
    let cx = build_complex(epsilon, c, axes, sc.seed).map_err(pipe)?.with_outer(outer);
    let g = r_grid(outer, grid);
    let rep = verify_violation(&cx, &g).map_err(pipe)?;
    let mut checks = cx.checks();
    checks.push(Check::ge("violation-margin", rep.min_margin(), 1.0, 0.0));
    let bands = [(0.7 * outer, 0.35 * outer), (0.7 * outer, 0.175 * outer), (0.9 * outer, 0.9 * outer)];
    let mut mc_rows = Vec::new();
    for (i, (r, d)) in bands.iter().enumerate() {
        let a = cx.annulus_measure(*r, *d).map_err(pipe)?;
        let m = cx.annulus_measure_mc(*r, *d, mc, sc.seed.wrapping_add(i as u64)).map_err(pipe)?;
        checks.push(Check::le(format!("monte-carlo-band-{i}"), (m - a).abs() / a, sc.tolerances.monte_carlo, 0.0));
        mc_rows.push(json!({ "r": r, "delta": d, "analytic": a, "monte_carlo": m }));
    }
    let mut extra = vec![("complex.json".to_string(), serde_json::to_string_pretty(&cx).expect("complex serializes"))];
    if obj {
        extra.push(("cones.obj".to_string(), cx.to_obj(32)));
    }
    Ok(RunOutput {
        report: json!({
            "cones": cx.len(), "kappa": cx.kappa, "h0": cx.h0, "invariants": cx.invariants(),
            "min_margin": rep.min_margin(), "monte_carlo": mc_rows,
        }),
        checks,
        csv: rep.to_csv(),
        figures: vec![],
        extra,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub base_seed: u64,
    pub entries: Vec<CorpusEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusEntry {
    pub name: String,
    pub count: usize,
    /// A scenario without `name` and `seed`.
    pub template: Value,
}

/// SplitMix64 finalizer: distinct inputs give distinct outputs.
pub fn derive_seed(base: u64, entry: u64, index: u64) -> u64 {
    let mut z = base ^ entry.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index.wrapping_mul(0xBF58_476D_1CE4_E5B9).rotate_left(17);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// (file name, contents) of every scenario in the corpus, each validated against the schema.
pub fn corpus(spec: &CorpusSpec) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (ei, e) in spec.entries.iter().enumerate() {
        let Value::Object(t) = &e.template else {
            return Err(schema(format!("entries[{ei}].template"), "expected an object"));
        };
        for i in 0..e.count {
            let mut obj = t.clone();
            let name = format!("{}_{i:04}", e.name);
            obj.insert("name".into(), json!(name));
            obj.insert("seed".into(), json!(derive_seed(spec.base_seed, ei as u64, i as u64)));
            let mut text = serde_json::to_string_pretty(&Value::Object(obj)).expect("scenario serializes");
            text.push('\n');
            parse_scenario(&text).map_err(|e| match e {
                ScenarioError::Schema { path, message } => schema(format!("entries[{ei}].template.{path}"), message),
                other => other,
            })?;
            out.push((format!("{name}.json"), text));
        }
    }
    Ok(out)
}

pub fn parse_corpus(text: &str) -> Result<CorpusSpec> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| schema(e.path().to_string(), e.inner()))
}

/// SVG of the scenario's input map.
pub fn render(sc: &Scenario, base: &Path) -> Result<String> {
    Ok(resolve_map(sc, base)?.to_svg(480.0))
}
