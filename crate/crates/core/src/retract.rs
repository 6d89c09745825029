//! Sphere retractions P(y) = y/|y|, shifted projections P_a and the projection
//! of bounded maps onto S^{k-1}.

use crate::geom::{Disk, Region, P2};
use crate::sbv2d::{frob, ray_exit, sphere_project, vnorm, Cell, DiscreteSbvMap, JumpSeg, JumpSet, SbvError, Target};
use crate::vexp::{modular, modular_samples, ExponentField, Sample, VexpError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RetractError {
    #[error("retraction is singular at the origin")]
    Singular,
    #[error("every sampled shift hits the singular set after {rounds} rounds")]
    Degenerate { rounds: usize },
    #[error("inversion did not converge in {iters} iterations (residual {residual:e})")]
    Inversion { iters: usize, residual: f64 },
    #[error("invalid retraction config: {0}")]
    Config(String),
    #[error("map is not bounded by M: sup |w| = {value} > {bound}")]
    NotBounded { value: f64, bound: f64 },
    #[error(transparent)]
    Sbv(#[from] SbvError),
    #[error(transparent)]
    Vexp(#[from] VexpError),
}

pub type Result<T> = std::result::Result<T, RetractError>;

pub const SHIFT_ROUNDS: usize = 5;
pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 50;
/// Distance to the singular point below which a shift is rejected.
pub const SINGULAR_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetractionConfig {
    pub k: usize,
    pub sigma: f64,
    pub shift_samples: usize,
    pub m_bound: f64,
    /// Sup over sampled a of the Lipschitz constant of (P_a|_M)^{-1}.
    pub lambda_lip: f64,
    /// Upper limit for sigma as a fraction of the sphere radius.
    #[serde(default = "default_sigma_max")]
    pub sigma_max: f64,
    /// Put a = 0 first in the sample set.
    #[serde(default)]
    pub include_zero: bool,
}

fn default_sigma_max() -> f64 {
    0.5
}

impl RetractionConfig {
    /// σ = 0.05 M, 64 shifts, λ measured on 4096 samples.
    pub fn new(k: usize, m_bound: f64) -> Result<Self> {
        let sigma = 0.05 * m_bound;
        let cfg = RetractionConfig {
            k,
            sigma,
            shift_samples: 64,
            m_bound,
            lambda_lip: measure_lambda_lip(k, sigma, 4096, 0),
            sigma_max: default_sigma_max(),
            include_zero: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(RetractionConfig::bad("k must be at least 2"));
        }
        if !(self.sigma > 0.0) || !(self.sigma_max > 0.0 && self.sigma_max < 1.0) || self.sigma >= self.sigma_max {
            return Err(RetractionConfig::bad("need 0 < sigma < sigma_max < 1"));
        }
        if self.shift_samples == 0 {
            return Err(RetractionConfig::bad("shift_samples must be positive"));
        }
        if !(self.m_bound > 0.0) || !self.lambda_lip.is_finite() {
            return Err(RetractionConfig::bad("M and lambda_lip must be finite and positive"));
        }
        Ok(())
    }

    fn bad(msg: &str) -> RetractError {
        RetractError::Config(msg.into())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Uniform point of the ball of radius r in R^k.
pub fn sample_ball(rng: &mut ChaCha8Rng, k: usize, r: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if dot(&v, &v) <= 1.0 {
            return v.into_iter().map(|x| x * r).collect();
        }
    }
}

fn sample_sphere(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    loop {
        let v = sample_ball(rng, k, 1.0);
        let n = vnorm(&v);
        if n > 1e-3 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Operator norm of ∇(y/|y|), which is 1/|y|.
pub fn sphere_retraction_gradient(y: &[f64]) -> Result<f64> {
    let n = vnorm(y);
    if n == 0.0 {
        return Err(RetractError::Singular);
    }
    Ok(1.0 / n)
}

/// (I - ŷŷᵀ)/|y|.
pub fn retraction_jacobian(y: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = vnorm(y);
    if n == 0.0 {
        return Err(RetractError::Singular);
    }
    let k = y.len();
    Ok((0..k)
        .map(|i| (0..k).map(|j| ((i == j) as u8 as f64 - y[i] * y[j] / (n * n)) / n).collect())
        .collect())
}

/// ∇(P_a ∘ w) at x by the chain rule; `None` outside the domain or at the singular set.
pub fn shifted_gradient(w: &DiscreteSbvMap, a: &[f64], x: P2) -> Option<Vec<[f64; 2]>> {
    let c = &w.cells[w.cell_at(x)?];
    let y = sub(&c.eval(x), a);
    let j = retraction_jacobian(&y).ok()?;
    let g = c.grad_at(x);
    Some(j.iter().map(|row| [dot_col(row, &g, 0), dot_col(row, &g, 1)]).collect())
}

fn dot_col(row: &[f64], g: &[[f64; 2]], c: usize) -> f64 {
    row.iter().zip(g).map(|(r, gi)| r * gi[c]).sum()
}

/// Midpoint samples (x, area, w(x), |∇w(x)|) per cell piece of the domain.
struct Pieces {
    pts: Vec<(P2, f64, Vec<f64>, Vec<[f64; 2]>)>,
}

impl Pieces {
    fn of(w: &DiscreteSbvMap) -> Pieces {
        let pts = w
            .pieces(&w.domain())
            .into_iter()
            .map(|(i, r)| {
                let (a, c) = r.area_centroid();
                let cell = &w.cells[i];
                let x = c.unwrap_or(cell.anchor);
                (x, a, cell.eval(x), cell.grad_at(x))
            })
            .collect();
        Pieces { pts }
    }

    /// Chain-rule modular of P_a ∘ w, `None` on a singular hit.
    fn modular(&self, a: &[f64], p: &ExponentField) -> Option<f64> {
        let mut samples = Vec::with_capacity(self.pts.len());
        for (x, area, v, g) in &self.pts {
            let y = sub(v, a);
            let n = vnorm(&y);
            if n < SINGULAR_TOL {
                return None;
            }
            let j = retraction_jacobian(&y).ok()?;
            let dg: Vec<[f64; 2]> = j.iter().map(|row| [dot_col(row, g, 0), dot_col(row, g, 1)]).collect();
            samples.push(Sample { x: *x, w: *area, v: frob(&dg) });
        }
        Some(modular_samples(&samples, p))
    }
}

/// ∫ |∇(P_a ∘ w)|^{p(x)} by the chain rule.
pub fn shift_modular(w: &DiscreteSbvMap, a: &[f64], p: &ExponentField) -> Result<f64> {
    Pieces::of(w).modular(a, p).ok_or(RetractError::Singular)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftChoice {
    pub a: Vec<f64>,
    pub modular: f64,
    pub mean: f64,
    /// (a, modular) for every admissible sample.
    pub values: Vec<(Vec<f64>, f64)>,
    pub rounds: usize,
}

fn check_bound(w: &DiscreteSbvMap, cfg: &RetractionConfig) -> Result<()> {
    cfg.validate()?;
    if w.k != cfg.k {
        return Err(RetractError::Config(format!("map has k = {}, config k = {}", w.k, cfg.k)));
    }
    let sup = w.linf(&w.domain());
    if sup > cfg.m_bound * (1.0 + 1e-12) {
        return Err(RetractError::NotBounded { value: sup, bound: cfg.m_bound });
    }
    Ok(())
}

/// Argmin over sampled a ∈ B_σ of the chain-rule modular of P_a ∘ w.
pub fn choose_shift(w: &DiscreteSbvMap, p: &ExponentField, cfg: &RetractionConfig, seed: u64) -> Result<ShiftChoice> {
    check_bound(w, cfg)?;
    let pieces = Pieces::of(w);
    for round in 0..SHIFT_ROUNDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(round as u64));
        let mut shifts: Vec<Vec<f64>> = Vec::with_capacity(cfg.shift_samples);
        if cfg.include_zero && round == 0 {
            shifts.push(vec![0.0; cfg.k]);
        }
        while shifts.len() < cfg.shift_samples {
            shifts.push(sample_ball(&mut rng, cfg.k, cfg.sigma));
        }
        let vals: Vec<Option<f64>> = shifts.par_iter().map(|a| pieces.modular(a, p)).collect();
        let values: Vec<(Vec<f64>, f64)> =
            shifts.into_iter().zip(vals).filter_map(|(a, m)| m.map(|m| (a, m))).collect();
        if values.is_empty() {
            continue;
        }
        let mean = values.iter().map(|v| v.1).sum::<f64>() / values.len() as f64;
        let best = values.iter().enumerate().min_by(|x, y| x.1 .1.total_cmp(&y.1 .1).then(x.0.cmp(&y.0))).unwrap().1.clone();
        return Ok(ShiftChoice { a: best.0, modular: best.1, mean, values, rounds: round + 1 });
    }
    Err(RetractError::Degenerate { rounds: SHIFT_ROUNDS })
}

/// Solves P_a(z) = t for z on the unit sphere by Newton on the ray parameter,
/// starting from the point z0. Returns (z, iterations).
pub fn newton_invert(a: &[f64], t: &[f64], z0: &[f64]) -> Result<(Vec<f64>, usize)> {
    let at = dot(a, t);
    let aa = dot(a, a);
    let g = |mu: f64| mu * mu + 2.0 * at * mu + aa - 1.0;
    let mut mu = dot(&sub(z0, a), t);
    if !(g(mu) >= 0.0 && mu + at > 0.0) {
        mu = 1.0 + aa.sqrt();
    }
    for it in 0..=NEWTON_MAX_ITER {
        let z: Vec<f64> = a.iter().zip(t).map(|(x, y)| x + mu * y).collect();
        let res = (vnorm(&z) - 1.0).abs();
        if res <= NEWTON_TOL {
            return Ok((z, it));
        }
        if it == NEWTON_MAX_ITER {
            return Err(RetractError::Inversion { iters: it, residual: res });
        }
        let d = 2.0 * (mu + at);
        if d <= 0.0 {
            return Err(RetractError::Inversion { iters: it, residual: res });
        }
        mu -= g(mu) / d;
    }
    unreachable!()
}

/// (P_a|_M)^{-1}(P_a(y)) in closed form.
pub fn retract_point(y: &[f64], a: &[f64]) -> Vec<f64> {
    sphere_project(y, Some(a), 1.0)
}

/// max over sampled a ∈ B_σ, t ∈ S^{k-1} of μ / (z·t), the Lipschitz constant of t ↦ a + μ t.
pub fn measure_lambda_lip(k: usize, sigma: f64, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 1.0_f64;
    for _ in 0..samples {
        let a = sample_ball(&mut rng, k, sigma);
        let t = sample_sphere(&mut rng, k);
        let mu = ray_exit(&a, &t, 1.0);
        let zt = dot(&a, &t) + mu;
        best = best.max(mu / zt);
    }
    best
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Projection {
    pub w: DiscreteSbvMap,
    pub a: Vec<f64>,
    pub shift: Option<ShiftChoice>,
    pub energy_in: f64,
    pub energy_out: f64,
    pub energy_ratio: f64,
    pub newton_max_iters: usize,
    /// Max distance between Newton and closed-form inverses at the check points.
    pub newton_gap: f64,
    pub unchanged_cells: usize,
    pub dropped_segments: usize,
    /// Max |w̃ - w| at sample points of the domain boundary.
    pub boundary_trace_gap: f64,
}

fn on_unit_sphere(v: &[f64]) -> bool {
    (vnorm(v) - 1.0).abs() <= 1e-15
}

fn project_cell(c: &Cell, a: &[f64]) -> Result<Option<Cell>> {
    match (c.normalize, &c.shift, c.inner) {
        (Some(t), None, None) if t == 1.0 => Ok(None),
        (None, None, None) if c.grad.iter().all(|g| g[0] == 0.0 && g[1] == 0.0) && on_unit_sphere(&c.value) => Ok(None),
        (None, None, None) => Ok(Some(Cell { normalize: Some(1.0), shift: Some(a.to_vec()), ..c.clone() })),
        (Some(t), None, None) => Ok(Some(Cell { inner: Some(t), normalize: Some(1.0), shift: Some(a.to_vec()), ..c.clone() })),
        _ => Err(RetractError::Config("cell already carries a shifted projection".into())),
    }
}

/// w̃ = (P_a|_M)^{-1} ∘ P_a ∘ w with a from `choose_shift`.
pub fn project_w(w: &DiscreteSbvMap, p: &ExponentField, cfg: &RetractionConfig, seed: u64) -> Result<Projection> {
    let choice = choose_shift(w, p, cfg, seed)?;
    let mut out = project_with_shift(w, &choice.a, p)?;
    out.shift = Some(choice);
    Ok(out)
}

/// Projection with a prescribed shift a.
pub fn project_with_shift(w: &DiscreteSbvMap, a: &[f64], p: &ExponentField) -> Result<Projection> {
    if a.len() != w.k {
        return Err(RetractError::Config("shift dimension".into()));
    }
    let projected: Vec<Option<Cell>> = w.cells.iter().map(|c| project_cell(c, a)).collect::<Result<_>>()?;
    let checks: Vec<Result<(usize, f64)>> = w
        .cells
        .par_iter()
        .zip(&projected)
        .map(|(c, nc)| {
            let Some(nc) = nc else { return Ok((0, 0.0)) };
            let mut pts = vec![c.anchor];
            pts.extend(c.region.boundary().iter().map(|pc| pc.start()));
            let mut it_max = 0;
            let mut gap = 0.0_f64;
            for x in pts {
                let y = c.eval(x);
                let d = sub(&y, a);
                let n = vnorm(&d);
                if n < SINGULAR_TOL {
                    return Err(RetractError::Singular);
                }
                let t: Vec<f64> = d.iter().map(|v| v / n).collect();
                let z0: Vec<f64> = y.iter().map(|v| v / vnorm(&y).max(f64::MIN_POSITIVE)).collect();
                let (z, it) = newton_invert(a, &t, &z0)?;
                it_max = it_max.max(it);
                gap = gap.max(crate::sbv2d::vdist(&z, &nc.eval(x)));
            }
            Ok((it_max, gap))
        })
        .collect();
    let mut newton_max_iters = 0;
    let mut newton_gap = 0.0_f64;
    for r in checks {
        let (i, g) = r?;
        newton_max_iters = newton_max_iters.max(i);
        newton_gap = newton_gap.max(g);
    }
    let unchanged_cells = projected.iter().filter(|c| c.is_none()).count();
    let cells: Vec<Cell> = w.cells.iter().zip(projected).map(|(c, nc)| nc.unwrap_or_else(|| c.clone())).collect();
    let mut segments = Vec::new();
    let mut dropped_segments = 0;
    let fix = |v: &Vec<f64>| if on_unit_sphere(v) { v.clone() } else { retract_point(v, a) };
    for s in &w.jump.segments {
        let (plus, minus) = (fix(&s.plus), fix(&s.minus));
        if crate::sbv2d::vdist(&plus, &minus) <= 1e-12 {
            dropped_segments += 1;
            continue;
        }
        segments.push(JumpSeg { plus, minus, ..s.clone() });
    }
    let wt = DiscreteSbvMap::new(w.center, w.radius, w.k, Target::Sphere, cells, JumpSet { segments })?;
    let dom = Region::disk(Disk::new(w.center, w.radius));
    let energy_in = modular(&w.grad_integrand(), p, &dom)?;
    let energy_out = modular(&wt.grad_integrand(), p, &dom)?;
    let mut boundary_trace_gap = 0.0_f64;
    for i in 0..256 {
        let x = w.center + P2::polar(w.radius * (1.0 - 1e-9), 2.0 * PI * (i as f64 + 0.5) / 256.0);
        if let (Some(u0), Some(u1)) = (w.eval(x), wt.eval(x)) {
            boundary_trace_gap = boundary_trace_gap.max(crate::sbv2d::vdist(&u0, &u1));
        }
    }
    Ok(Projection {
        w: wt,
        a: a.to_vec(),
        shift: None,
        energy_in,
        energy_out,
        energy_ratio: crate::sobolev_approx::ratio(energy_out, energy_in),
        newton_max_iters,
        newton_gap,
        unchanged_cells,
        dropped_segments,
        boundary_trace_gap,
    })
}

/// Surface measure of S^{k-1}.
pub fn sphere_area(k: usize) -> f64 {
    match k {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => sphere_area(k - 2) * 2.0 * PI / (k - 2) as f64,
    }
}

/// ∫_{B_R ⊂ R^k} |y|^{-q} dy for q < k.
pub fn radial_power_integral(k: usize, r: f64, q: f64) -> f64 {
    sphere_area(k) * r.powf(k as f64 - q) / (k as f64 - q)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftAverage {
    /// Mean over sampled a of ∫ g(x) f(w(x) - a) dx.
    pub average: f64,
    /// ∫ g · ∫_{B_{σ+M}} f / |B_σ|.
    pub bound: f64,
    pub samples: usize,
}

/// Shift-averaging test with f = |∇P|^{q}, g = |∇w|^{p(x)}.
pub fn shift_average(w: &DiscreteSbvMap, p: &ExponentField, cfg: &RetractionConfig, q: f64, samples: usize, seed: u64) -> Result<ShiftAverage> {
    check_bound(w, cfg)?;
    if !(q < cfg.k as f64) {
        return Err(RetractError::Config("q must be below k".into()));
    }
    let pieces = Pieces::of(w);
    let g: Vec<f64> = pieces.pts.iter().map(|(x, area, _, dg)| {
        let n = frob(dg);
        if n == 0.0 { 0.0 } else { area * n.powf(p.eval(*x)) }
    }).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shifts: Vec<Vec<f64>> = (0..samples).map(|_| sample_ball(&mut rng, cfg.k, cfg.sigma)).collect();
    let total: f64 = shifts
        .par_iter()
        .map(|a| {
            pieces.pts.iter().zip(&g).map(|((_, _, v, _), gi)| {
                if *gi == 0.0 { 0.0 } else { gi * vnorm(&sub(v, a)).powf(-q) }
            }).sum::<f64>()
        })
        .sum();
    let gint: f64 = g.iter().sum();
    let ball = sphere_area(cfg.k) * cfg.sigma.powi(cfg.k as i32) / cfg.k as f64;
    Ok(ShiftAverage {
        average: total / samples as f64,
        bound: gint * radial_power_integral(cfg.k, cfg.sigma + cfg.m_bound, q) / ball,
        samples,
    })
}
