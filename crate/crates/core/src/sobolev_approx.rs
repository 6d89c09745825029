//! Local piecewise-affine replacement, Besicovitch-style jump covers and the
//! global jump-removing approximation.

use crate::check::Check;
use crate::dyadic_grid::{adapt_with, build_grid_at, select_good_radius_at, AdaptOptions, AdaptedTriangulation, GridError, ANNULUS_MULT};
use crate::geom::{polygon_signed_area, BBox, Disk, Region, Shape, P2};
use crate::retract::{project_w, Projection, RetractError, RetractionConfig};
use crate::sbv2d::{affine_through, vdist, vnorm, Cell, DiscreteSbvMap, JumpSeg, JumpSet, SbvError, Target};
use crate::svg::{palette, Svg};
use crate::vexp::{luxembourg_norm, modular, ExponentField, VexpError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ApproxError {
    #[error("jump length {length} exceeds budget {bound}")]
    Budget { length: f64, bound: f64 },
    #[error("ball of radius {r} about ({x}, {y}) leaves the domain")]
    OutsideDomain { x: f64, y: f64, r: f64 },
    #[error("no density window at ({x}, {y})")]
    WindowsNotFound { x: f64, y: f64 },
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("ball {ball} (family {family}): {source}")]
    Local {
        family: usize,
        ball: usize,
        #[source]
        source: Box<ApproxError>,
    },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Sbv(#[from] SbvError),
    #[error(transparent)]
    Vexp(#[from] VexpError),
    #[error(transparent)]
    Retract(#[from] RetractError),
}

pub type Result<T> = std::result::Result<T, ApproxError>;

/// Fraction of r_x within which a jump point counts as covered by a ball.
pub const COVER_FRACTION: f64 = 0.45;
/// Deepest dyadic level searched for r_x.
pub const MAX_DYADIC: usize = 64;
/// Gaussian-order of the L¹ distance quadrature.
const L1_ORDER: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalConfig {
    pub h_max: usize,
    pub samples_per_vertex: usize,
    pub radius_trials: usize,
    /// Fresh radii tried when vertex adaptation fails.
    pub retries: usize,
    pub annulus_mult: f64,
}

impl Default for LocalConfig {
    fn default() -> Self {
        LocalConfig { h_max: 6, samples_per_vertex: 2000, radius_trials: 200, retries: 8, annulus_mult: ANNULUS_MULT }
    }
}

/// ∫|∇φ|^q ≤ c_hat ∫|∇u|^q.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QBound {
    pub q: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub c_hat: f64,
}

impl QBound {
    fn new(q: f64, lhs: f64, rhs: f64) -> Self {
        QBound { q, lhs, rhs, c_hat: ratio(lhs, rhs) }
    }
}

/// a / b with 0/0 = 0.
pub fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else if b == 0.0 {
        f64::INFINITY
    } else {
        a / b
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalReport {
    pub center: P2,
    pub r: f64,
    pub big_r: f64,
    pub eta: f64,
    pub attempts: usize,
    pub triangles: usize,
    pub kappa_hat: usize,
    pub max_perturbation_ratio: f64,
    pub grad_q: Vec<QBound>,
    pub modular_phi: f64,
    pub norm_u: f64,
    /// (1 + R²) max(N^{p⁻}, N^{p⁺}).
    pub modular_rhs: f64,
    pub k_hat: f64,
    pub l1: f64,
    pub tv_u: f64,
    /// ‖u - φ‖_{L¹(B_R)} / (R |Du|(B_R)).
    pub l1_ratio: f64,
    pub linf_phi: f64,
    pub linf_u: f64,
    /// Max |φ - u| at the boundary vertices.
    pub trace_gap: f64,
    /// Max |φ - u| along the chords of the inscribed boundary polygon.
    pub seam_gap: f64,
    pub seam_length: f64,
    /// Area between the inscribed polygon and ∂B_R, where φ = u.
    pub band_area: f64,
    pub jump_before: f64,
    pub jump_after: f64,
    pub jump_new: f64,
}

pub struct LocalResult {
    pub big_r: f64,
    pub phi: DiscreteSbvMap,
    pub tri: AdaptedTriangulation,
    /// Source cell of each cell of φ, `None` for interpolation triangles.
    pub origin: Vec<Option<usize>>,
    pub vertex_values: Vec<Vec<f64>>,
    pub report: LocalReport,
}

fn disk(c: P2, r: f64) -> Region {
    Region::disk(Disk::new(c, r))
}

/// Σ area · |∇u|^q over cell pieces of a region.
pub fn grad_power_integral(u: &DiscreteSbvMap, region: &Region, q: f64) -> f64 {
    u.pieces(region)
        .iter()
        .map(|(i, r)| {
            let (a, c) = r.area_centroid();
            let cell = &u.cells[*i];
            let g = cell.grad_norm_at(c.unwrap_or(cell.anchor));
            if g == 0.0 {
                0.0
            } else {
                a * g.powf(q)
            }
        })
        .sum()
}

/// H¹ of the part of `w` not lying on segments of `u` (within `tol`).
pub fn new_jump_length(w: &JumpSet, u: &JumpSet, tol: f64) -> f64 {
    let mut total = 0.0;
    for s in &w.segments {
        let d = s.b - s.a;
        let len2 = d.norm2();
        let len = len2.sqrt();
        let sb = BBox::of_points(&[s.a, s.b]);
        let mut cov: Vec<(f64, f64)> = Vec::new();
        for t in &u.segments {
            if !BBox::of_points(&[t.a, t.b]).overlaps(&sb, tol) {
                continue;
            }
            let off = |p: P2| d.cross(p - s.a).abs() / len;
            if off(t.a) > tol || off(t.b) > tol {
                continue;
            }
            let p0 = (t.a - s.a).dot(d) / len2;
            let p1 = (t.b - s.a).dot(d) / len2;
            let (lo, hi) = (p0.min(p1).max(0.0), p0.max(p1).min(1.0));
            if hi > lo {
                cov.push((lo, hi));
            }
        }
        cov.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut reach = 0.0_f64;
        let mut gap = 0.0;
        for (lo, hi) in cov {
            if lo > reach {
                gap += lo - reach;
            }
            reach = reach.max(hi);
        }
        gap += (1.0 - reach).max(0.0);
        total += gap * len;
    }
    total
}

/// φ(u): affine interpolation on the adapted triangles, u elsewhere.
fn interpolate(u: &DiscreteSbvMap, tri: &AdaptedTriangulation) -> Result<(DiscreteSbvMap, Vec<Option<usize>>, Vec<Vec<f64>>)> {
    let big_r = tri.base.r;
    let vals: Vec<Vec<f64>> = tri
        .pos
        .iter()
        .map(|&x| u.eval(x).ok_or(ApproxError::OutsideDomain { x: x.x, y: x.y, r: big_r }))
        .collect::<Result<_>>()?;
    let mut cells = Vec::new();
    let mut origin = Vec::new();
    for t in &tri.base.tris {
        let p = [tri.pos[t[0]], tri.pos[t[1]], tri.pos[t[2]]];
        let v = [vals[t[0]].clone(), vals[t[1]].clone(), vals[t[2]].clone()];
        let grad = affine_through(&p, &v);
        let anchor = (p[0] + p[1] + p[2]) * (1.0 / 3.0);
        let value = (0..u.k).map(|c| (v[0][c] + v[1][c] + v[2][c]) / 3.0).collect();
        cells.push(Cell { region: Region::polygon(p.to_vec()), anchor, value, grad, normalize: None, shift: None, inner: None });
        origin.push(None);
    }
    let patch = tri.base.patch();
    let pshape = Shape::poly(patch.clone());
    let pbb = BBox::of_points(&patch);
    let tiny = 1e-14 * big_r * big_r;
    for (i, c) in u.cells.iter().enumerate() {
        if !c.region.bbox().overlaps(&pbb, 0.0) {
            cells.push(c.clone());
            origin.push(Some(i));
            continue;
        }
        if c.region.clone().with(pshape.clone(), true).area() <= tiny {
            cells.push(c.clone());
            origin.push(Some(i));
            continue;
        }
        let rest = c.region.clone().with(pshape.clone(), false);
        if rest.area() <= tiny {
            continue;
        }
        cells.push(Cell { region: rest, ..c.clone() });
        origin.push(Some(i));
    }
    let preg = Region::polygon(patch);
    let mut segments = Vec::new();
    for s in &u.jump.segments {
        if !BBox::of_points(&[s.a, s.b]).overlaps(&pbb, 0.0) {
            segments.push(s.clone());
            continue;
        }
        let inside = preg.clip_segment(s.a, s.b);
        let mut t = 0.0;
        for (t0, t1) in inside.into_iter().chain(std::iter::once((1.0, 1.0))) {
            if (t0 - t) * s.len() > 1e-12 * big_r {
                segments.push(JumpSeg { a: s.a.lerp(s.b, t), b: s.a.lerp(s.b, t0), ..s.clone() });
            }
            t = t1;
        }
    }
    let phi = DiscreteSbvMap::new(u.center, u.radius, u.k, Target::Rk, cells, JumpSet { segments })?;
    Ok((phi, origin, vals))
}

/// Local replacement on B_R(x0), R ∈ (r, 2r), for u with H¹(J_u ∩ B_{2r}(x0)) < η 2r.
pub fn local_phi(u: &DiscreteSbvMap, x0: P2, r: f64, p: &ExponentField, eta: f64, seed: u64, cfg: &LocalConfig) -> Result<LocalResult> {
    if !(r > 0.0) || !(eta > 0.0) {
        return Err(ApproxError::Params("r and eta must be positive".into()));
    }
    if x0.dist(u.center) + 2.0 * r > u.radius * (1.0 + 1e-12) {
        return Err(ApproxError::OutsideDomain { x: x0.x, y: x0.y, r: 2.0 * r });
    }
    let length = u.jump_length(&disk(x0, 2.0 * r));
    let bound = eta * 2.0 * r;
    if length >= bound {
        return Err(ApproxError::Budget { length, bound });
    }
    let mut last = GridError::AdaptationFailed { h: 0, j: 0 };
    for attempt in 0..cfg.retries.max(1) {
        let s = seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(attempt as u64));
        let big_r = select_good_radius_at(&u.jump, x0, r, eta, cfg.radius_trials, s, cfg.h_max, cfg.annulus_mult)?;
        let grid = build_grid_at(x0, big_r, cfg.h_max)?;
        let tri = match adapt_with(&grid, u, AdaptOptions::light(cfg.samples_per_vertex), s) {
            Ok(t) if t.min_signed_area() > 0.0 => t,
            Ok(_) => continue,
            Err(e @ GridError::AdaptationFailed { .. }) => {
                last = e;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let (phi, origin, vertex_values) = interpolate(u, &tri)?;
        let report = local_report(u, &phi, &tri, &vertex_values, p, x0, r, eta, attempt + 1)?;
        return Ok(LocalResult { big_r, phi, tri, origin, vertex_values, report });
    }
    Err(last.into())
}

#[allow(clippy::too_many_arguments)]
fn local_report(
    u: &DiscreteSbvMap,
    phi: &DiscreteSbvMap,
    tri: &AdaptedTriangulation,
    vals: &[Vec<f64>],
    p: &ExponentField,
    x0: P2,
    r: f64,
    eta: f64,
    attempts: usize,
) -> Result<LocalReport> {
    let big_r = tri.base.r;
    let ball = disk(x0, big_r);
    let ntri = tri.base.tris.len();
    let grad_q = [1.0, p.p_minus]
        .iter()
        .map(|&q| QBound::new(q, grad_power_integral(phi, &ball, q), grad_power_integral(u, &ball, q)))
        .collect();
    let modular_phi = modular(&phi.grad_integrand(), p, &ball)?;
    let norm_u = luxembourg_norm(&u.grad_integrand(), p, &ball)?;
    let modular_rhs = (1.0 + big_r * big_r) * norm_u.powf(p.p_minus).max(norm_u.powf(p.p_plus));
    let mut l1 = 0.0;
    for cell in &phi.cells[..ntri] {
        for (i, piece) in u.pieces(&cell.region) {
            let uc = &u.cells[i];
            for (x, w) in piece.quadrature(L1_ORDER, piece.area_centroid().1) {
                l1 += w * vdist(&uc.eval(x), &cell.eval(x));
            }
        }
    }
    let tv_u = u.total_variation(&ball);
    let mut trace_gap = 0.0_f64;
    let mut seam_gap = 0.0_f64;
    for (ti, t) in tri.base.tris.iter().enumerate() {
        let fixed: Vec<usize> = t.iter().copied().filter(|&v| tri.base.is_fixed(v)).collect();
        for &v in &fixed {
            let x = tri.pos[v];
            trace_gap = trace_gap.max(vdist(&phi.cells[ti].eval(x), &vals[v]));
        }
        if let [a, b] = fixed[..] {
            for m in 1..8 {
                let x = tri.pos[a].lerp(tri.pos[b], m as f64 / 8.0);
                if let Some(uv) = u.eval(x) {
                    seam_gap = seam_gap.max(vdist(&phi.cells[ti].eval(x), &uv));
                }
            }
        }
    }
    let patch = tri.base.patch();
    let n = patch.len();
    let seam_length = (0..n).map(|i| patch[i].dist(patch[(i + 1) % n])).sum();
    let jump_before = u.jump_length(&ball);
    let jump_after = phi.jump_length(&ball);
    Ok(LocalReport {
        center: x0,
        r,
        big_r,
        eta,
        attempts,
        triangles: ntri,
        kappa_hat: tri.kappa_hat,
        max_perturbation_ratio: tri.max_perturbation_ratio,
        grad_q,
        modular_phi,
        norm_u,
        modular_rhs,
        k_hat: ratio(modular_phi, modular_rhs),
        l1,
        tv_u,
        l1_ratio: ratio(l1, big_r * tv_u),
        linf_phi: phi.linf(&ball),
        linf_u: u.linf(&ball),
        trace_gap,
        seam_gap,
        seam_length,
        band_area: PI * big_r * big_r - polygon_signed_area(&patch),
        jump_before,
        jump_after,
        jump_new: new_jump_length(&phi.jump, &u.jump, 1e-9 * u.radius),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: P2,
    pub radius: f64,
    /// 1-based subfamily index.
    pub family: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyStats {
    /// H¹(J_u ∩ B_ρ).
    pub jump_length: f64,
    pub total_perimeter: f64,
    pub total_area: f64,
    pub max_overlap: usize,
    /// (2π ξ_hat / η) H¹(J_u ∩ B_ρ).
    pub perimeter_bound: f64,
    /// min{(π ξ_hat / η) ρ H¹, π (ξ_hat H¹ / η)²}.
    pub area_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallFamily {
    pub center: P2,
    pub rho: f64,
    pub s: f64,
    pub eta: f64,
    pub balls: Vec<Ball>,
    pub xi_hat: usize,
    pub stats: FamilyStats,
    /// Arc-length spacing of the jump samples.
    pub spacing: f64,
    pub samples: usize,
}

/// Largest λ/2^k (k ≥ 1) with H¹(J ∩ B_{λ/2^k}(x)) ≥ η λ/2^k.
pub fn dyadic_radius(j: &JumpSet, x: P2, lambda: f64, eta: f64) -> Option<f64> {
    (1..=MAX_DYADIC).map(|k| lambda * 0.5f64.powi(k as i32)).find(|&r| j.length_in(&disk(x, r)) >= eta * r)
}

fn merged_gap(mut iv: Vec<(f64, f64)>, min_len: f64, len: f64) -> Option<f64> {
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut reach = 0.0_f64;
    for (lo, hi) in iv {
        if (lo - reach) * len > min_len {
            return Some(0.5 * (lo + reach));
        }
        reach = reach.max(hi);
    }
    if (1.0 - reach) * len > min_len {
        return Some(0.5 * (1.0 + reach));
    }
    None
}

/// Cover of J_u ∩ B_{sρ} by balls B_{r_x}(x), split into disjoint subfamilies.
pub fn cover_jump(u: &DiscreteSbvMap, s: f64, eta: f64, rho: f64, seed: u64) -> Result<BallFamily> {
    if !(s > 0.0 && s < 1.0) || !(eta > 0.0 && eta < 1.0) || !(rho > 0.0) {
        return Err(ApproxError::Params("need s, eta in (0,1) and rho > 0".into()));
    }
    let c = u.center;
    let jump_length = u.jump_length(&disk(c, rho));
    let bound = eta * (1.0 - s) * rho / 2.0;
    if jump_length >= bound {
        return Err(ApproxError::Budget { length: jump_length, bound });
    }
    let inner = disk(c, s * rho);
    let mut pieces: Vec<(P2, P2)> = Vec::new();
    let mut min_len = f64::INFINITY;
    for sg in &u.jump.segments {
        let iv = inner.clip_segment(sg.a, sg.b);
        if iv.is_empty() {
            continue;
        }
        min_len = min_len.min(sg.len());
        for (t0, t1) in iv {
            pieces.push((sg.a.lerp(sg.b, t0), sg.a.lerp(sg.b, t1)));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lam_lo = (1.0 - s) * rho;
    let mut radius_at = |x: P2| -> Result<f64> {
        let lambda = lam_lo * (1.0 + rng.gen::<f64>());
        dyadic_radius(&u.jump, x, lambda, eta).ok_or(ApproxError::WindowsNotFound { x: x.x, y: x.y })
    };
    let spacing = if pieces.is_empty() { 0.0 } else { min_len / 4.0 };
    let mut samples = Vec::new();
    for &(a, b) in &pieces {
        let len = a.dist(b);
        let n = (len / spacing).ceil().max(1.0) as usize;
        for i in 0..n {
            samples.push(a.lerp(b, (i as f64 + 0.5) / n as f64));
        }
    }
    let mut chosen: Vec<(P2, f64)> = Vec::new();
    let covered = |chosen: &[(P2, f64)], x: P2| chosen.iter().any(|(cc, r)| x.dist(*cc) <= COVER_FRACTION * r);
    for &x in &samples {
        if !covered(&chosen, x) {
            chosen.push((x, radius_at(x)?));
        }
    }
    let tiny = 1e-12 * rho;
    loop {
        let mut gap = None;
        for &(a, b) in &pieces {
            let len = a.dist(b);
            let iv: Vec<(f64, f64)> =
                chosen.iter().flat_map(|(cc, r)| disk(*cc, COVER_FRACTION * r).clip_segment(a, b)).collect();
            if let Some(t) = merged_gap(iv, tiny, len) {
                gap = Some(a.lerp(b, t));
                break;
            }
        }
        match gap {
            Some(x) => chosen.push((x, radius_at(x)?)),
            None => break,
        }
    }
    let mut order: Vec<usize> = (0..chosen.len()).collect();
    order.sort_by(|&i, &j| chosen[j].1.total_cmp(&chosen[i].1).then(i.cmp(&j)));
    let mut family = vec![0usize; chosen.len()];
    for (pos, &i) in order.iter().enumerate() {
        let mut used: Vec<usize> = order[..pos]
            .iter()
            .filter(|&&j| chosen[i].0.dist(chosen[j].0) <= chosen[i].1 + chosen[j].1)
            .map(|&j| family[j])
            .collect();
        used.sort_unstable();
        used.dedup();
        family[i] = (1..).find(|f| used.binary_search(f).is_err()).unwrap();
    }
    let balls: Vec<Ball> = chosen.iter().zip(&family).map(|(&(center, radius), &family)| Ball { center, radius, family }).collect();
    let xi_hat = family.iter().copied().max().unwrap_or(0);
    let probes: Vec<P2> = balls.iter().map(|b| b.center).chain(samples.iter().copied()).collect();
    let max_overlap = probes.iter().map(|&x| balls.iter().filter(|b| x.dist(b.center) <= b.radius).count()).max().unwrap_or(0);
    let xi = xi_hat as f64;
    let stats = FamilyStats {
        jump_length,
        total_perimeter: balls.iter().map(|b| 2.0 * PI * b.radius).sum(),
        total_area: balls.iter().map(|b| PI * b.radius * b.radius).sum(),
        max_overlap,
        perimeter_bound: 2.0 * PI * xi / eta * jump_length,
        area_bound: (PI * xi / eta * rho * jump_length).min(PI * (xi * jump_length / eta).powi(2)),
    };
    Ok(BallFamily { center: c, rho, s, eta, balls, xi_hat, stats, spacing, samples: samples.len() })
}

impl BallFamily {
    /// Structural and quantitative properties of the cover.
    pub fn checks(&self) -> Vec<Check> {
        let tol = 1e-12 * self.rho;
        let mut disjoint = true;
        for (i, a) in self.balls.iter().enumerate() {
            for b in &self.balls[i + 1..] {
                if a.family == b.family && a.center.dist(b.center) <= a.radius + b.radius {
                    disjoint = false;
                }
            }
        }
        let far = self.balls.iter().map(|b| b.center.dist(self.center)).fold(0.0, f64::max);
        let rmax = self.balls.iter().map(|b| b.radius).fold(0.0, f64::max);
        let reach = self.balls.iter().map(|b| b.center.dist(self.center) + b.radius).fold(0.0, f64::max);
        vec![
            Check::flag("family_disjoint", disjoint),
            Check::le("centers_in_inner_ball", far, self.s * self.rho, tol),
            Check { name: "radius_below_gap".into(), lhs: rmax, rhs: (1.0 - self.s) * self.rho, holds: rmax < (1.0 - self.s) * self.rho },
            Check::le("union_containment", reach, (1.0 + self.s) * self.rho / 2.0, tol),
            Check::le("perimeter_bound", self.stats.total_perimeter, self.stats.perimeter_bound, 1e-12),
            Check::le("area_bound", self.stats.total_area, self.stats.area_bound, 1e-12),
        ]
    }

    pub fn by_family(&self, f: usize) -> impl Iterator<Item = (usize, &Ball)> {
        self.balls.iter().enumerate().filter(move |(_, b)| b.family == f)
    }

    pub fn to_svg(&self, jump: &JumpSet, size: f64) -> String {
        let mut svg = Svg::new(self.center, self.rho * 1.05, size);
        svg.circle(self.center, self.rho, "black", "none", 1.0);
        svg.circle(self.center, self.s * self.rho, "#999999", "none", 0.6);
        for b in &self.balls {
            svg.circle(b.center, b.radius, palette(b.family - 1), "none", 0.8);
        }
        for sg in &jump.segments {
            svg.line(sg.a, sg.b, "#d62728", 1.5);
        }
        svg.finish()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallOutcome {
    pub ball: usize,
    pub family: usize,
    pub report: LocalReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxEstimates {
    pub modular_in: f64,
    pub modular_out: f64,
    pub norm_in: f64,
    pub q_ratios: Vec<QBound>,
    pub l1_distance: f64,
    pub linf_in: f64,
    pub linf_out: f64,
    pub jump_in: f64,
    pub jump_out: f64,
    /// H¹(J_w ∩ B_{sρ}).
    pub jump_out_inner: f64,
    pub jump_new: f64,
    /// ∫|∇w|^{p(x)} / ((1 + ρ²) max(‖∇u‖^{p⁻}, ‖∇u‖^{p⁺})).
    pub k_combined: f64,
    /// Same without the (1 + ρ²) factor.
    pub k_stripped: f64,
    pub outside_identity: bool,
    pub new_cells: usize,
    pub max_seam_gap: f64,
    pub band_area: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ApproxReport {
    pub w: DiscreteSbvMap,
    pub family: BallFamily,
    pub estimates: ApproxEstimates,
    pub balls: Vec<BallOutcome>,
    pub checks: Vec<Check>,
    /// Source cell in u of each cell of w, `None` for replaced parts.
    pub origin: Vec<Option<usize>>,
}

/// Replaces u on a ball cover of its jump in B_{sρ} by piecewise-affine interpolants.
pub fn global_approx(u: &DiscreteSbvMap, p: &ExponentField, s: f64, eta: f64, seed: u64, cfg: &LocalConfig) -> Result<ApproxReport> {
    let rho = u.radius;
    let family = cover_jump(u, s, eta, rho, seed)?;
    let mut w = u.clone();
    let mut origin: Vec<Option<usize>> = (0..u.cells.len()).map(Some).collect();
    let mut balls = Vec::new();
    for f in 1..=family.xi_hat {
        for (bi, b) in family.by_family(f) {
            let bseed = seed ^ (bi as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03);
            let res = local_phi(&w, b.center, b.radius / 2.0, p, 2.0 * eta, bseed, cfg)
                .map_err(|e| ApproxError::Local { family: f, ball: bi, source: Box::new(e) })?;
            origin = res.origin.iter().map(|o| o.and_then(|i| origin[i])).collect();
            w = res.phi;
            balls.push(BallOutcome { ball: bi, family: f, report: res.report });
        }
    }
    let whole = disk(u.center, rho);
    let modular_in = modular(&u.grad_integrand(), p, &whole)?;
    let modular_out = modular(&w.grad_integrand(), p, &whole)?;
    let norm_in = luxembourg_norm(&u.grad_integrand(), p, &whole)?;
    let base = norm_in.powf(p.p_minus).max(norm_in.powf(p.p_plus));
    let q_ratios = [1.0, p.p_minus]
        .iter()
        .map(|&q| QBound::new(q, grad_power_integral(&w, &whole, q), grad_power_integral(u, &whole, q)))
        .collect();
    let mut l1_distance = 0.0;
    let mut outside_identity = true;
    let mut new_cells = 0;
    for (c, o) in w.cells.iter().zip(&origin) {
        match o {
            Some(i) => {
                let uc = &u.cells[*i];
                if c.anchor != uc.anchor || c.value != uc.value || c.grad != uc.grad || c.normalize != uc.normalize || c.shift != uc.shift {
                    outside_identity = false;
                }
            }
            None => {
                new_cells += 1;
                let inside_some = c.region.boundary().iter().all(|pc| {
                    let x = pc.start();
                    family.balls.iter().any(|b| x.dist(b.center) <= b.radius * (1.0 + 1e-12))
                });
                if !inside_some {
                    outside_identity = false;
                }
                for (i, piece) in u.pieces(&c.region) {
                    for (x, wt) in piece.quadrature(L1_ORDER, piece.area_centroid().1) {
                        l1_distance += wt * vdist(&u.cells[i].eval(x), &c.eval(x));
                    }
                }
            }
        }
    }
    let tol = 1e-9 * rho;
    let estimates = ApproxEstimates {
        modular_in,
        modular_out,
        norm_in,
        q_ratios,
        l1_distance,
        linf_in: u.linf(&whole),
        linf_out: w.linf(&whole),
        jump_in: u.jump_length(&whole),
        jump_out: w.jump_length(&whole),
        jump_out_inner: w.jump_length(&disk(u.center, s * rho)),
        jump_new: new_jump_length(&w.jump, &u.jump, tol),
        k_combined: ratio(modular_out, (1.0 + rho * rho) * base),
        k_stripped: ratio(modular_out, base),
        outside_identity,
        new_cells,
        max_seam_gap: balls.iter().map(|b| b.report.seam_gap).fold(0.0, f64::max),
        band_area: balls.iter().map(|b| b.report.band_area).sum(),
    };
    let mut checks = family.checks();
    checks.push(Check::le("no_new_jump", estimates.jump_new, 0.0, tol));
    checks.push(Check::le("no_jump_in_inner_ball", estimates.jump_out_inner, 0.0, tol));
    checks.push(Check::le("linf_non_expansion", estimates.linf_out, estimates.linf_in, 1e-9));
    checks.push(Check::flag("outside_identity", outside_identity));
    checks.push(Check::le("jump_not_increased", estimates.jump_out, estimates.jump_in, tol));
    Ok(ApproxReport { w, family, estimates, balls, checks, origin })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SphereStage {
    pub map: DiscreteSbvMap,
    pub projection: Projection,
    /// Max difference of the inner and outer traces at sample points of ∂B_{sρ}.
    pub trace_gap: f64,
}

/// Sphere-valued replacement of w inside B_{sρ}, glued to w outside.
pub fn project_to_sphere_stage(w: &DiscreteSbvMap, p: &ExponentField, s: f64, cfg: &RetractionConfig, seed: u64) -> Result<SphereStage> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(ApproxError::Params("s must lie in (0, 1]".into()));
    }
    let rs = s * w.radius;
    let inner = Shape::disk(Disk::new(w.center, rs));
    let ibb = inner.bbox();
    let tiny = 1e-14 * w.radius * w.radius;
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for c in &w.cells {
        if !c.region.bbox().overlaps(&ibb, 0.0) {
            outside.push(c.clone());
            continue;
        }
        let a = Cell { region: c.region.clone().with(inner.clone(), true), ..c.clone() };
        let b = Cell { region: c.region.clone().with(inner.clone(), false), ..c.clone() };
        if a.region.area() > tiny {
            inside.push(a);
        }
        if b.region.area() > tiny {
            outside.push(b);
        }
    }
    let ireg = disk(w.center, rs);
    let mut jin = Vec::new();
    let mut jout = Vec::new();
    for sg in &w.jump.segments {
        let iv = ireg.clip_segment(sg.a, sg.b);
        let mut t = 0.0;
        for (t0, t1) in iv.iter().copied().chain(std::iter::once((1.0, 1.0))) {
            if (t0 - t) * sg.len() > 1e-12 * w.radius {
                jout.push(JumpSeg { a: sg.a.lerp(sg.b, t), b: sg.a.lerp(sg.b, t0), ..sg.clone() });
            }
            if t1 > t0 && (t1 - t0) * sg.len() > 1e-12 * w.radius {
                jin.push(JumpSeg { a: sg.a.lerp(sg.b, t0), b: sg.a.lerp(sg.b, t1), ..sg.clone() });
            }
            t = t1;
        }
    }
    let part = DiscreteSbvMap::new(w.center, rs, w.k, Target::Rk, inside, JumpSet { segments: jin })?;
    let projection = project_w(&part, p, cfg, seed)?;
    let mut cells = projection.w.cells.clone();
    let all_sphere = outside.iter().all(|c| c.normalize == Some(1.0))
        && jout.iter().all(|sg| (vnorm(&sg.plus) - 1.0).abs() < 1e-9 && (vnorm(&sg.minus) - 1.0).abs() < 1e-9);
    cells.extend(outside);
    let mut segments = projection.w.jump.segments.clone();
    segments.extend(jout);
    let target = if all_sphere { Target::Sphere } else { Target::Rk };
    let map = DiscreteSbvMap::new(w.center, w.radius, w.k, target, cells, JumpSet { segments })?;
    let mut trace_gap = 0.0_f64;
    if s < 1.0 {
        for i in 0..256 {
            let th = 2.0 * PI * (i as f64 + 0.5) / 256.0;
            let x = w.center + P2::polar(rs, th);
            let xi = w.center + P2::polar(rs * (1.0 - 1e-9), th);
            let xo = w.center + P2::polar(rs * (1.0 + 1e-9), th);
            if let (Some(a), Some(b)) = (map.cell_at(xi), map.cell_at(xo)) {
                trace_gap = trace_gap.max(vdist(&map.cells[a].eval(x), &map.cells[b].eval(x)));
            }
        }
    }
    Ok(SphereStage { map, projection, trace_gap })
}
