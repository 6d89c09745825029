//! Free-discontinuity energy F(u, c, A), deviation from minimality, blow-up frames
//! and jump-point diagnostics.

use crate::check::Check;
use crate::geom::{regular_polygon, Disk, Region, Shape, P2};
use crate::sbv2d::{vdist, vnorm, Cell, DiscreteSbvMap, JumpSeg, JumpSet, SbvError, Target};
use crate::vexp::{modular, modulus_of_continuity, profile_is_strong, ExponentField, VexpError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("competitor {index} rejected: {reason}")]
    Competitor { index: usize, reason: String },
    #[error("map is not sphere-valued: {0}")]
    NotSphere(String),
    #[error("ball of radius {r} about ({x}, {y}) leaves the domain")]
    OutsideDomain { x: f64, y: f64, r: f64 },
    #[error("need at least {min} radii, got {got}")]
    TooFewRadii { min: usize, got: usize },
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Sbv(#[from] SbvError),
    #[error(transparent)]
    Vexp(#[from] VexpError),
}

pub type Result<T> = std::result::Result<T, EnergyError>;

/// Sides of the polygon standing in for ∂B_{ρ'} in the upper-bound competitor.
pub const COMPETITOR_SIDES: usize = 1024;
/// Relative tolerance on the sampled modulus in the blow-up exponent check.
pub const OMEGA_TOL: f64 = 0.02;
const MATCH_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub bulk: f64,
    pub jump: f64,
    pub total: f64,
    pub region: Region,
}

pub fn ball(x: P2, r: f64) -> Region {
    Region::disk(Disk::new(x, r))
}

fn ball_inside(u: &DiscreteSbvMap, x: P2, r: f64) -> Result<()> {
    if r > 0.0 && x.dist(u.center) + r <= u.radius * (1.0 + 1e-12) {
        Ok(())
    } else {
        Err(EnergyError::OutsideDomain { x: x.x, y: x.y, r })
    }
}

/// F(u, c, A) = ∫_A |∇u|^{p(x)} + c·H¹(J_u ∩ A).
pub fn functional(u: &DiscreteSbvMap, p: &ExponentField, c: f64, region: &Region) -> Result<EnergyBreakdown> {
    if !(c > 0.0) {
        return Err(EnergyError::Params("c must be positive".into()));
    }
    let bulk = modular(&u.grad_integrand(), p, region)?;
    let jump = c * u.jump_length(region);
    Ok(EnergyBreakdown { bulk, jump, total: bulk + jump, region: region.clone() })
}

/// F over the ball B_ρ(x), which must lie in the domain.
pub fn ball_energy(u: &DiscreteSbvMap, p: &ExponentField, c: f64, x: P2, r: f64) -> Result<EnergyBreakdown> {
    ball_inside(u, x, r)?;
    functional(u, p, c, &ball(x, r))
}

fn outside_points(u: &DiscreteSbvMap, x: P2, r: f64) -> Vec<P2> {
    let (rings, spokes) = (48, 96);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut pts = Vec::new();
    for i in 0..rings {
        let rr = u.radius * ((i as f64 + 0.5) / rings as f64).sqrt();
        let off = TAU * ((i as f64 * g).fract());
        for j in 0..spokes {
            let q = u.center + P2::polar(rr, off + TAU * (j as f64 + 0.37) / spokes as f64);
            if q.dist(x) > r * (1.0 + 1e-9) {
                pts.push(q);
            }
        }
    }
    pts
}

fn near_jump(j: &JumpSet, q: P2) -> bool {
    j.min_dist(q) < 1e-7
}

/// Max deviation of |v| from t over the pieces and jump traces of v inside the ball.
fn norm_gap(v: &DiscreteSbvMap, x: P2, r: f64, t: f64) -> f64 {
    let b = ball(x, r);
    let mut gap = 0.0_f64;
    for (i, piece) in v.pieces(&b) {
        let cell = &v.cells[i];
        let q = piece.area_centroid().1.unwrap_or(cell.anchor);
        gap = gap.max((vnorm(&cell.eval(q)) - t).abs());
    }
    for s in &v.jump.segments {
        if b.clipped_length(s.a, s.b) > 0.0 {
            gap = gap.max((vnorm(&s.plus) - t).abs()).max((vnorm(&s.minus) - t).abs());
        }
    }
    gap
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    /// max(0, F(u) - min F(v)) over the supplied competitors; an upper estimate
    /// of the deviation restricted to that competitor class.
    pub value: f64,
    pub best: usize,
    pub energy_u: f64,
    pub energies: Vec<f64>,
}

/// Deviation from minimality of u in B_ρ(x) against a finite competitor list.
pub fn deviation(u: &DiscreteSbvMap, p: &ExponentField, c: f64, x: P2, r: f64, competitors: &[DiscreteSbvMap], t: f64) -> Result<Deviation> {
    ball_inside(u, x, r)?;
    if competitors.is_empty() {
        return Err(EnergyError::Params("empty competitor list".into()));
    }
    let pts = outside_points(u, x, r);
    let outside = u.domain().with(Shape::disk(Disk::new(x, r)), false);
    let ju_out = u.jump_length(&outside);
    for (index, v) in competitors.iter().enumerate() {
        let reject = |reason: String| EnergyError::Competitor { index, reason };
        if v.k != u.k || v.center.dist(u.center) > 1e-12 || (v.radius - u.radius).abs() > 1e-12 {
            return Err(reject("domain or dimension differs".into()));
        }
        for &q in &pts {
            if near_jump(&u.jump, q) || near_jump(&v.jump, q) {
                continue;
            }
            let (a, b) = (u.eval(q), v.eval(q));
            if let (Some(a), Some(b)) = (a, b) {
                if vdist(&a, &b) > MATCH_TOL * (1.0 + vnorm(&a)) {
                    return Err(reject(format!("differs from u at ({}, {})", q.x, q.y)));
                }
            }
        }
        let jv_out = v.jump_length(&outside);
        if (jv_out - ju_out).abs() > MATCH_TOL * (1.0 + ju_out) {
            return Err(reject(format!("jump length outside the ball {jv_out} vs {ju_out}")));
        }
        let gap = norm_gap(v, x, r, t);
        if gap > MATCH_TOL * t.max(1.0) {
            return Err(reject(format!("|v| deviates from {t} by {gap}")));
        }
    }
    let b = ball(x, r);
    let energy_u = functional(u, p, c, &b)?.total;
    let energies = competitors.iter().map(|v| functional(v, p, c, &b).map(|e| e.total)).collect::<Result<Vec<_>>>()?;
    let (best, min) = energies.iter().copied().enumerate().fold((0, f64::INFINITY), |acc, (i, e)| if e < acc.1 { (i, e) } else { acc });
    Ok(Deviation { value: (energy_u - min).max(0.0), best, energy_u, energies })
}

fn is_unit(v: &[f64]) -> bool {
    (vnorm(v) - 1.0).abs() <= 1e-9
}

fn require_sphere(u: &DiscreteSbvMap) -> Result<()> {
    for (i, c) in u.cells.iter().enumerate() {
        let ok = match c.normalize {
            Some(t) => (t - 1.0).abs() <= 1e-12,
            None => c.grad.iter().all(|g| g[0] == 0.0 && g[1] == 0.0) && c.inner.is_none() && is_unit(&c.value),
        };
        if !ok {
            return Err(EnergyError::NotSphere(format!("cell {i}")));
        }
    }
    for (i, s) in u.jump.segments.iter().enumerate() {
        if !is_unit(&s.plus) || !is_unit(&s.minus) {
            return Err(EnergyError::NotSphere(format!("jump segment {i}")));
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct UpperCompetitor {
    pub map: DiscreteSbvMap,
    /// Length of the jump placed on the polygon standing in for ∂B_{ρ'}.
    pub added_jump: f64,
    pub polygon: Vec<P2>,
}

/// u outside B_{ρ'}(x) and the north pole e_k inside, with ∂B_{ρ'} replaced by an
/// inscribed regular polygon.
pub fn upper_bound_competitor(u: &DiscreteSbvMap, x: P2, r: f64, r_inner: f64) -> Result<UpperCompetitor> {
    ball_inside(u, x, r)?;
    if !(r_inner > 0.0 && r_inner < r) {
        return Err(EnergyError::Params("need 0 < ρ' < ρ".into()));
    }
    require_sphere(u)?;
    let mut ek = vec![0.0; u.k];
    ek[u.k - 1] = 1.0;
    let poly = regular_polygon(x, r_inner, COMPETITOR_SIDES, 0.0);
    let shape = Shape::poly(poly.clone());
    let bb = shape.bbox();
    let tiny = 1e-15 * u.radius * u.radius;
    let mut cells = Vec::with_capacity(u.cells.len() + 1);
    for c in &u.cells {
        if !c.region.bbox().overlaps(&bb, 0.0) {
            cells.push(c.clone());
            continue;
        }
        let out = Cell { region: c.region.clone().with(shape.clone(), false), ..c.clone() };
        if out.region.area() > tiny {
            cells.push(out);
        }
    }
    cells.push(Cell {
        region: Region::polygon(poly.clone()),
        anchor: x,
        value: ek.clone(),
        grad: vec![[0.0, 0.0]; u.k],
        normalize: None,
        shift: None,
        inner: None,
    });
    let outside = u.domain().with(shape.clone(), false);
    let mut segments = Vec::new();
    for s in &u.jump.segments {
        for (t0, t1) in outside.clip_segment(s.a, s.b) {
            if (t1 - t0) * s.len() > 1e-12 * u.radius {
                segments.push(JumpSeg { a: s.a.lerp(s.b, t0), b: s.a.lerp(s.b, t1), ..s.clone() });
            }
        }
    }
    let mut added = 0.0;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let mid = a.lerp(b, 0.5);
        let probe = mid + (mid - x).unit() * (1e-9 * r_inner);
        let trace = u.eval(probe).ok_or_else(|| EnergyError::Params("polygon edge outside the domain".into()))?;
        if vdist(&trace, &ek) <= 1e-12 {
            continue;
        }
        added += a.dist(b);
        segments.push(JumpSeg::new(a, b, ek.clone(), trace));
    }
    let map = DiscreteSbvMap::new(u.center, u.radius, u.k, Target::Sphere, cells, JumpSet::new(segments)?)?;
    Ok(UpperCompetitor { map, added_jump: added, polygon: poly })
}

/// F(u, B_{ρ'}) ≤ c·2πρ + κ'ρ².
pub fn energy_upper_bound_check(u: &DiscreteSbvMap, p: &ExponentField, c: f64, x: P2, r: f64, r_inner: f64, kappa: f64) -> Result<Check> {
    let f = ball_energy(u, p, c, x, r_inner)?.total;
    Ok(Check::le("energy-upper-bound", f, c * TAU * r + kappa * r * r, 0.0))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlowupFrame {
    pub center: P2,
    pub sigma: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub t: f64,
    /// p_h(0) = p(x_h).
    pub p_center: f64,
    /// Range of p_h over the sampled unit disk.
    pub p_range: (f64, f64),
    pub u_tilde: DiscreteSbvMap,
    pub v: DiscreteSbvMap,
    pub jump_in: f64,
    pub jump_out: f64,
    /// |σ·H¹(J_ũ ∩ B₁) - H¹(J_u ∩ B_σ(x_h))|.
    pub jump_gap: f64,
    pub sup_dev: f64,
    pub omega: f64,
}

impl BlowupFrame {
    pub fn checks(&self, p: &ExponentField) -> Vec<Check> {
        vec![
            Check::le("blowup-jump-identity", self.jump_gap, 1e-12 * (1.0 + self.jump_out), 0.0),
            Check::le("blowup-exponent-deviation", self.sup_dev, self.omega * (1.0 + OMEGA_TOL), 1e-12),
            Check::ge("blowup-p-lower", self.p_range.0, p.p_minus, 1e-12),
            Check::le("blowup-p-upper", self.p_range.1, p.p_plus, 1e-12),
            Check::flag("blowup-t-positive", self.t > 0.0 && self.t.is_finite()),
        ]
    }
}

fn unit_disk_grid() -> Vec<P2> {
    let mut pts = vec![P2::ZERO];
    for i in 1..=32 {
        let r = i as f64 / 32.0;
        for j in 0..128 {
            pts.push(P2::polar(r, TAU * j as f64 / 128.0));
        }
    }
    pts
}

/// sup_{y ∈ B₁} |p(x0 + σ y) - p(x0)| over a polar grid.
pub fn rescaled_sup_dev(p: &ExponentField, x0: P2, sigma: f64) -> f64 {
    let ph = p.rescaled(x0, sigma);
    let p0 = p.eval(x0);
    unit_disk_grid().iter().map(|&y| (ph.eval(y) - p0).abs()).fold(0.0, f64::max)
}

/// Rescaled frame at x_h with scale σ_h and γ_h = 1/ε_h.
pub fn blowup(u: &DiscreteSbvMap, p: &ExponentField, x_h: P2, sigma: f64, epsilon: f64, omega_budget: usize, seed: u64) -> Result<BlowupFrame> {
    ball_inside(u, x_h, sigma)?;
    if !(epsilon > 0.0) {
        return Err(EnergyError::Params("ε must be positive".into()));
    }
    let gamma = 1.0 / epsilon;
    let p_center = p.eval(x_h);
    let t = (sigma * gamma).powf(1.0 / p_center) / sigma;
    let u_tilde = u.pullback(x_h, sigma);
    let v = u_tilde.scale_values(t);
    let jump_in = u_tilde.jump_length(&ball(P2::ZERO, 1.0));
    let jump_out = u.jump_length(&ball(x_h, sigma));
    let ph = p.rescaled(x_h, sigma);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut sup_dev = 0.0_f64;
    for y in unit_disk_grid() {
        let q = ph.eval(y);
        lo = lo.min(q);
        hi = hi.max(q);
        sup_dev = sup_dev.max((q - p_center).abs());
    }
    let omega = modulus_of_continuity(p, sigma, omega_budget, seed);
    Ok(BlowupFrame {
        center: x_h,
        sigma,
        epsilon,
        gamma,
        t,
        p_center,
        p_range: (lo, hi),
        u_tilde,
        v,
        jump_in,
        jump_out,
        jump_gap: (sigma * jump_in - jump_out).abs(),
        sup_dev,
        omega,
    })
}

/// (σ_h, sup_{B₁}|p_h - p(x0)|) along σ_h = 2^{-h}, with the strong-decay verdict.
pub fn rescaled_exponent_profile(p: &ExponentField, x0: P2, hs: &[u32]) -> (Vec<(f64, f64)>, bool) {
    let prof: Vec<(f64, f64)> = hs.iter().map(|&h| {
        let s = 0.5f64.powi(h as i32);
        (s, rescaled_sup_dev(p, x0, s))
    }).collect();
    let vals: Vec<f64> = prof.iter().map(|(_, v)| *v).collect();
    let strong = profile_is_strong(&vals);
    (prof, strong)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    NotInJump,
    InJumpCandidate,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionConfig {
    pub tau: f64,
    pub floor: f64,
    pub c: f64,
    /// Number of smallest radii in the slope fit.
    pub fit: usize,
    /// Minimum ratio min/max over the last three values for a flat profile.
    pub flatness: f64,
}

impl Default for CriterionConfig {
    fn default() -> Self {
        CriterionConfig { tau: 0.1, floor: 0.5, c: 1.0, fit: 4, flatness: 0.95 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionProfile {
    pub profile: Vec<(f64, f64)>,
    pub slope: Option<f64>,
    pub verdict: Verdict,
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(pts: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = pts.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Profile ρ ↦ F(u, B_ρ(x0))/ρ over decreasing radii, with a verdict.
pub fn jump_criterion_profile(u: &DiscreteSbvMap, p: &ExponentField, x0: P2, radii: &[f64], cfg: &CriterionConfig) -> Result<CriterionProfile> {
    if radii.len() < 4 {
        return Err(EnergyError::TooFewRadii { min: 4, got: radii.len() });
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(EnergyError::Params("radii must be strictly decreasing".into()));
    }
    let profile = radii
        .par_iter()
        .map(|&r| ball_energy(u, p, cfg.c, x0, r).map(|e| (r, e.total / r)))
        .collect::<Result<Vec<_>>>()?;
    let n = profile.len();
    let tail = &profile[n.saturating_sub(cfg.fit.max(2))..];
    let slope = loglog_slope(tail);
    let last = profile[n - 1].1;
    let last3: Vec<f64> = profile[n - 3..].iter().map(|(_, v)| *v).collect();
    let lo = last3.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = last3.iter().cloned().fold(0.0, f64::max);
    let verdict = if last < cfg.tau && (last == 0.0 || slope.is_some_and(|s| s > 0.0)) {
        Verdict::NotInJump
    } else if lo >= cfg.floor && lo >= cfg.flatness * hi {
        Verdict::InJumpCandidate
    } else {
        Verdict::Inconclusive
    };
    Ok(CriterionProfile { profile, slope, verdict })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityProbeConfig {
    pub delta: f64,
    pub theta: f64,
    pub rho_max: f64,
    pub kappa: f64,
    #[serde(default = "six")]
    pub levels: usize,
    #[serde(default = "one")]
    pub c: f64,
}

fn six() -> usize {
    6
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityEntry {
    pub point: usize,
    pub rho: f64,
    pub ratio: f64,
    pub violates: bool,
    /// F(u, B_ρ) / (c·2πρ + κ'ρ²).
    pub upper_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub entries: Vec<DensityEntry>,
    pub theta_hat: f64,
    pub violations: usize,
}

/// F(u, B_ρ(x))/ρ at jump points over ρ = ρ'_δ 2^{-i}.
pub fn density_probe(u: &DiscreteSbvMap, p: &ExponentField, cfg: &DensityProbeConfig, points: &[P2]) -> Result<DensityReport> {
    if !(cfg.delta > 0.0 && cfg.theta > 0.0 && cfg.rho_max > 0.0 && cfg.kappa >= 0.0 && cfg.c > 0.0) || cfg.levels == 0 {
        return Err(EnergyError::Params("density probe parameters must be positive".into()));
    }
    if cfg.rho_max > cfg.delta {
        return Err(EnergyError::Params("ρ'_δ must not exceed δ".into()));
    }
    for x in points {
        if x.dist(u.center) > u.radius - cfg.delta {
            return Err(EnergyError::OutsideDomain { x: x.x, y: x.y, r: cfg.delta });
        }
    }
    let jobs: Vec<(usize, f64)> = (0..points.len()).flat_map(|i| (0..cfg.levels).map(move |l| (i, cfg.rho_max * 0.5f64.powi(l as i32)))).collect();
    let entries = jobs
        .par_iter()
        .map(|&(i, r)| {
            let f = ball_energy(u, p, cfg.c, points[i], r)?.total;
            Ok(DensityEntry {
                point: i,
                rho: r,
                ratio: f / r,
                violates: f <= cfg.theta * r,
                upper_ratio: f / (cfg.c * TAU * r + cfg.kappa * r * r),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let theta_hat = entries.iter().map(|e| e.ratio).fold(f64::INFINITY, f64::min);
    let violations = entries.iter().filter(|e| e.violates).count();
    Ok(DensityReport { entries, theta_hat, violations })
}

/// Points along the jump set at least `margin` away from segment endpoints, evenly spaced by arclength.
pub fn jump_sample_points(j: &JumpSet, n: usize, margin: f64) -> Vec<P2> {
    let usable: Vec<(&JumpSeg, f64)> = j.segments.iter().map(|s| (s, s.len() - 2.0 * margin)).filter(|(_, l)| *l > 0.0).collect();
    let total: f64 = usable.iter().map(|(_, l)| l).sum();
    if total <= 0.0 || n == 0 {
        return vec![];
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut s = total * (i as f64 + 0.5) / n as f64;
        for (seg, l) in &usable {
            if s <= *l {
                let t = (margin + s) / seg.len();
                out.push(seg.a.lerp(seg.b, t));
                break;
            }
            s -= l;
        }
    }
    out
}
