//! Boundary-refining dyadic triangulation of a disk and its adaptation to a jump set.

use crate::geom::{convex_hull, polygon_signed_area, regular_polygon, segments_intersect, BBox, BoxIndex, Disk, Region, Shape, P2};
use crate::sbv2d::{DiscreteSbvMap, JumpSet};
use crate::svg::Svg;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("h_max = {0} outside [2, 14]")]
    HMaxOutOfRange(usize),
    #[error("radius must be positive")]
    BadRadius,
    #[error("jump length {length} exceeds budget {bound}")]
    Budget { length: f64, bound: f64 },
    #[error("no admissible radius in {trials} trials (last violation at h = {h})")]
    SearchExhausted { trials: usize, h: usize },
    #[error("adaptation failed at vertex (h = {h}, j = {j})")]
    AdaptationFailed { h: usize, j: usize },
}

pub type Result<T> = std::result::Result<T, GridError>;

/// Multiplier of the annulus condition.
pub const ANNULUS_MULT: f64 = 10.0;
/// Vertex clearance from the jump, in units of δ_h.
pub const CLEARANCE: f64 = 1e-3;
/// Sides of the polygons standing in for perturbation balls.
pub const BALL_SIDES: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ring {
    pub h: usize,
    pub radius: f64,
    pub delta: f64,
    pub start: usize,
    pub count: usize,
    /// Boundary ring, never perturbed.
    pub fixed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicGrid {
    pub center: P2,
    pub r: f64,
    pub h_max: usize,
    /// Rings h = 0..=h_max, then the boundary ring on ∂B_R.
    pub rings: Vec<Ring>,
    pub verts: Vec<P2>,
    pub vert_ring: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    pub tris: Vec<[usize; 3]>,
    pub c1_hat: f64,
    pub c2_hat: f64,
    pub alpha: f64,
    pub min_angle: f64,
    pub max_angle: f64,
}

fn angles(t: [P2; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        let a = t[(i + 1) % 3] - t[i];
        let b = t[(i + 2) % 3] - t[i];
        out[i] = a.cross(b).abs().atan2(a.dot(b));
    }
    out
}

pub fn build_grid(r: f64, h_max: usize) -> Result<DyadicGrid> {
    build_grid_at(P2::ZERO, r, h_max)
}

pub fn build_grid_at(center: P2, r: f64, h_max: usize) -> Result<DyadicGrid> {
    if !(2..=14).contains(&h_max) {
        return Err(GridError::HMaxOutOfRange(h_max));
    }
    if !(r > 0.0) {
        return Err(GridError::BadRadius);
    }
    let mut rings = Vec::new();
    let mut verts = Vec::new();
    let mut vert_ring = Vec::new();
    for h in 0..=h_max + 1 {
        let fixed = h == h_max + 1;
        let delta = r * 0.5f64.powi(h as i32);
        let radius = if fixed { r } else { r - delta };
        let count = 1usize << h;
        rings.push(Ring { h, radius, delta, start: verts.len(), count, fixed });
        for j in 0..count {
            let th = TAU * j as f64 / count as f64;
            verts.push(center + P2::new(radius * th.cos(), radius * th.sin()));
            vert_ring.push(h);
        }
    }
    let id = |h: usize, j: usize| rings[h].start + j % rings[h].count;
    let mut tris = vec![
        [id(0, 0), id(1, 0), id(2, 1)],
        [id(0, 0), id(2, 1), id(1, 1)],
        [id(0, 0), id(1, 1), id(2, 3)],
        [id(0, 0), id(2, 3), id(1, 0)],
        [id(1, 0), id(2, 0), id(2, 1)],
        [id(1, 1), id(2, 1), id(2, 2)],
        [id(1, 1), id(2, 2), id(2, 3)],
        [id(1, 0), id(2, 3), id(2, 0)],
    ];
    for h in 2..=h_max {
        for j in 0..(1usize << h) {
            tris.push([id(h, j), id(h + 1, 2 * j), id(h + 1, 2 * j + 1)]);
            tris.push([id(h, j), id(h + 1, 2 * j + 1), id(h, j + 1)]);
            tris.push([id(h, j + 1), id(h + 1, 2 * j + 1), id(h + 1, 2 * j + 2)]);
        }
    }
    for t in tris.iter_mut() {
        if polygon_signed_area(&[verts[t[0]], verts[t[1]], verts[t[2]]]) < 0.0 {
            t.swap(1, 2);
        }
    }
    let mut edges: Vec<(usize, usize)> = tris
        .iter()
        .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    let (mut c1, mut c2) = (f64::INFINITY, 0.0_f64);
    for &(a, b) in &edges {
        let d = rings[vert_ring[a]].delta.min(rings[vert_ring[b]].delta);
        let q = verts[a].dist(verts[b]) / d;
        c1 = c1.min(q);
        c2 = c2.max(q);
    }
    let (mut amin, mut amax) = (PI, 0.0_f64);
    for t in &tris {
        for a in angles([verts[t[0]], verts[t[1]], verts[t[2]]]) {
            amin = amin.min(a);
            amax = amax.max(a);
        }
    }
    Ok(DyadicGrid {
        center,
        r,
        h_max,
        rings,
        verts,
        vert_ring,
        edges,
        tris,
        c1_hat: c1,
        c2_hat: c2,
        alpha: c1 / (8.0 * c2),
        min_angle: amin,
        max_angle: amax,
    })
}

impl DyadicGrid {
    /// x'_{h,j}, with j taken mod 2^h.
    pub fn vertex(&self, h: usize, j: usize) -> P2 {
        let ring = &self.rings[h];
        self.verts[ring.start + j % ring.count]
    }

    pub fn delta_of(&self, v: usize) -> f64 {
        self.rings[self.vert_ring[v]].delta
    }

    pub fn is_fixed(&self, v: usize) -> bool {
        self.rings[self.vert_ring[v]].fixed
    }

    /// The inscribed boundary polygon covered by the triangulation.
    pub fn patch(&self) -> Vec<P2> {
        let b = self.rings.last().unwrap();
        self.verts[b.start..b.start + b.count].to_vec()
    }

    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.verts.len()];
        for &(a, b) in &self.edges {
            nb[a].push(b);
            nb[b].push(a);
        }
        nb
    }

    pub fn to_svg(&self, pos: &[P2], jump: Option<&JumpSet>, size: f64) -> String {
        let mut svg = Svg::new(self.center, self.r * 1.05, size);
        svg.circle(self.center, self.r, "black", "none", 1.0);
        for &(a, b) in &self.edges {
            svg.line(pos[a], pos[b], "#4a6fa5", 0.6);
        }
        if let Some(j) = jump {
            for s in &j.segments {
                svg.line(s.a, s.b, "#d62728", 1.8);
            }
        }
        svg.finish()
    }
}

/// Σ over jump segments of the length inside the annulus R(1 - 2^{-h}) < |x - c| < R.
pub fn annulus_length(j: &JumpSet, c: P2, r: f64, h: usize) -> f64 {
    j.length_in(&Region::annulus(c, r * (1.0 - 0.5f64.powi(h as i32)), r))
}

/// First violated annulus level, if any.
pub fn annulus_violation(j: &JumpSet, c: P2, r: f64, eta: f64, h_max: usize, mult: f64) -> Option<usize> {
    (1..=h_max + 1).find(|&h| annulus_length(j, c, r, h) >= mult * eta * r * 0.5f64.powi(h as i32))
}

#[allow(clippy::too_many_arguments)]
pub fn select_good_radius_at(j: &JumpSet, c: P2, r: f64, eta: f64, trials: usize, seed: u64, h_max: usize, mult: f64) -> Result<f64> {
    let length = j.length_in(&Region::disk(Disk::new(c, 2.0 * r)));
    let bound = eta * 2.0 * r;
    if length >= bound {
        return Err(GridError::Budget { length, bound });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last_h = 0;
    for _ in 0..trials {
        let big_r = r * (1.0 + rng.gen::<f64>());
        if big_r <= r {
            continue;
        }
        match annulus_violation(j, c, big_r, eta, h_max, mult) {
            None => return Ok(big_r),
            Some(h) => last_h = h,
        }
    }
    Err(GridError::SearchExhausted { trials, h: last_h })
}

pub fn select_good_radius(j: &JumpSet, r: f64, eta: f64, trials: usize, seed: u64) -> Result<f64> {
    select_good_radius_at(j, P2::ZERO, r, eta, trials, seed, 8, ANNULUS_MULT)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeData {
    pub a: usize,
    pub b: usize,
    /// ∫ |∇u| along the adapted edge.
    pub line_grad: f64,
    /// (1/δ_h) ∫_{O_{x',y'}} |∇u|.
    pub envelope_avg: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptedTriangulation {
    pub base: DyadicGrid,
    pub pos: Vec<P2>,
    pub max_perturbation_ratio: f64,
    pub envelopes: Vec<Vec<P2>>,
    pub kappa_hat: usize,
    /// Envelope area ratios over reference triangles.
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Largest ratio when T is the adapted triangle.
    pub lambda_max_adapted: f64,
    pub edge_data: Vec<EdgeData>,
    pub samples_used: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct AdaptOptions {
    pub samples_per_vertex: usize,
    pub clearance: f64,
    pub record_edges: bool,
    pub record_ratios: bool,
}

impl AdaptOptions {
    pub fn new(samples_per_vertex: usize) -> Self {
        AdaptOptions { samples_per_vertex, clearance: CLEARANCE, record_edges: true, record_ratios: true }
    }

    pub fn light(samples_per_vertex: usize) -> Self {
        AdaptOptions { samples_per_vertex, clearance: CLEARANCE, record_edges: false, record_ratios: false }
    }
}

/// Polygon containing the disk: circumscribed regular polygon.
pub fn ball_polygon(c: P2, r: f64) -> Vec<P2> {
    regular_polygon(c, r / (PI / BALL_SIDES as f64).cos(), BALL_SIDES, 0.0)
}

fn stadium(a: P2, b: P2, w: f64) -> Vec<P2> {
    let mut pts = regular_polygon(a, w, 64, 0.0);
    pts.extend(regular_polygon(b, w, 64, 0.0));
    convex_hull(&pts)
}

fn point_in_convex(poly: &[P2], p: P2) -> bool {
    let n = poly.len();
    (0..n).all(|i| (poly[(i + 1) % n] - poly[i]).cross(p - poly[i]) >= -1e-12)
}

pub fn adapt_to_jump(grid: &DyadicGrid, u: &DiscreteSbvMap, samples_per_vertex: usize, seed: u64) -> Result<AdaptedTriangulation> {
    adapt_with(grid, u, AdaptOptions::new(samples_per_vertex), seed)
}

pub fn adapt_with(grid: &DyadicGrid, u: &DiscreteSbvMap, opt: AdaptOptions, seed: u64) -> Result<AdaptedTriangulation> {
    let n = grid.verts.len();
    let nb = grid.neighbors();
    let bb = Disk::new(grid.center, grid.r).bbox();
    let segs: Vec<(P2, P2)> = u
        .jump
        .segments
        .iter()
        .filter(|s| BBox::of_points(&[s.a, s.b]).overlaps(&bb, 1e-9 * grid.r))
        .map(|s| (s.a, s.b))
        .collect();
    let seg_boxes: Vec<BBox> = segs.iter().map(|(a, b)| BBox::of_points(&[*a, *b])).collect();
    let seg_index = BoxIndex::build(&seg_boxes);
    let crosses = |x: P2, y: P2| -> bool {
        let eb = BBox::of_points(&[x, y]);
        seg_index.in_box(&eb).into_iter().any(|k| seg_boxes[k].overlaps(&eb, 0.0) && segments_intersect(x, y, segs[k].0, segs[k].1))
    };
    let clear = |x: P2, d: f64| -> bool {
        let lim = opt.clearance * d;
        let pb = BBox { min: x - P2::new(lim, lim), max: x + P2::new(lim, lim) };
        seg_index
            .in_box(&pb)
            .into_iter()
            .all(|k| crate::geom::point_seg_dist(x, segs[k].0, segs[k].1) >= lim)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos = grid.verts.clone();
    let mut placed = vec![false; n];
    for (v, p) in placed.iter_mut().enumerate() {
        *p = grid.is_fixed(v);
    }
    let mut samples_used = 0;
    for ring in grid.rings.iter().rev().filter(|r| !r.fixed) {
        let d = ring.delta;
        let rad = grid.alpha * d;
        for j in 0..ring.count {
            let v = ring.start + j;
            let x0 = grid.verts[v];
            let mut ok = None;
            for s in 0..opt.samples_per_vertex.max(1) {
                let x = if s == 0 { x0 } else { x0 + P2::polar(rad * rng.gen::<f64>().sqrt(), TAU * rng.gen::<f64>()) };
                samples_used += 1;
                if !clear(x, d) {
                    continue;
                }
                if nb[v].iter().filter(|&&w| placed[w]).any(|&w| crosses(x, pos[w])) {
                    continue;
                }
                ok = Some(x);
                break;
            }
            match ok {
                Some(x) => {
                    pos[v] = x;
                    placed[v] = true;
                }
                None => return Err(GridError::AdaptationFailed { h: ring.h, j }),
            }
        }
    }
    let max_perturbation_ratio = (0..n)
        .filter(|&v| !grid.is_fixed(v))
        .map(|v| pos[v].dist(grid.verts[v]) / (grid.alpha * grid.delta_of(v)))
        .fold(0.0, f64::max);
    let ball = |v: usize| ball_polygon(grid.verts[v], grid.alpha * grid.delta_of(v));
    let envelopes: Vec<Vec<P2>> = grid
        .tris
        .iter()
        .map(|t| {
            let mut pts = ball(t[0]);
            pts.extend(ball(t[1]));
            pts.extend(ball(t[2]));
            convex_hull(&pts)
        })
        .collect();
    let env_boxes: Vec<BBox> = envelopes.iter().map(|e| BBox::of_points(e)).collect();
    let env_index = BoxIndex::build(&env_boxes);
    let mut probe: Vec<P2> = pos.clone();
    for t in &grid.tris {
        probe.push((pos[t[0]] + pos[t[1]] + pos[t[2]]) * (1.0 / 3.0));
    }
    for &(a, b) in &grid.edges {
        probe.push(pos[a].lerp(pos[b], 0.5));
    }
    let kappa_hat = probe
        .iter()
        .map(|&p| env_index.at_point(p).iter().filter(|&&k| point_in_convex(&envelopes[k], p)).count())
        .max()
        .unwrap_or(0);
    let (mut lambda_min, mut lambda_max, mut lambda_max_adapted) = (f64::INFINITY, 0.0_f64, 0.0_f64);
    if opt.record_ratios {
        let disk = Shape::disk(Disk::new(grid.center, grid.r));
        for (ti, t) in grid.tris.iter().enumerate() {
            let area_c = polygon_signed_area(&envelopes[ti]).abs();
            for (tri, adapted) in [(t.map(|v| grid.verts[v]), false), (t.map(|v| pos[v]), true)] {
                if adapted && t.iter().all(|&v| pos[v] == grid.verts[v]) {
                    continue;
                }
                let area_t = polygon_signed_area(&tri).abs();
                let mut rs = Vec::new();
                for e in 0..3 {
                    let (a, b) = (t[e], t[(e + 1) % 3]);
                    let (xa, xb) = (grid.verts[a], grid.verts[b]);
                    let q = stadium(xa, xb, xa.dist(xb) / (8.0 * grid.c2_hat));
                    let q_reg = Region::polygon(q).with(disk.clone(), true);
                    let area_q = q_reg.area();
                    let area_qt = q_reg.with(Shape::poly(tri.to_vec()), true).area();
                    let mut o = ball(a);
                    o.extend(ball(b));
                    let area_o = polygon_signed_area(&convex_hull(&o)).abs();
                    rs.push(area_c / area_q);
                    rs.push(area_t / area_qt);
                    rs.push(PI * (grid.alpha * grid.delta_of(a)).powi(2) / area_t);
                    rs.push(area_o / area_c);
                }
                for r in rs {
                    if adapted {
                        lambda_max_adapted = lambda_max_adapted.max(r);
                    } else {
                        lambda_min = lambda_min.min(r);
                        lambda_max = lambda_max.max(r);
                    }
                }
            }
        }
        lambda_max_adapted = lambda_max_adapted.max(lambda_max);
    }
    let mut edge_data = Vec::new();
    if opt.record_edges {
        for &(a, b) in &grid.edges {
            let (x, y) = (pos[a], pos[b]);
            let eb = BBox::of_points(&[x, y]);
            let line_grad: f64 = u
                .cells_near(&eb)
                .into_iter()
                .map(|c| u.cells[c].region.clipped_length(x, y) * u.cells[c].grad_norm())
                .sum();
            let mut o = ball(a);
            o.extend(ball(b));
            let o_reg = Region::polygon(convex_hull(&o));
            let integral: f64 = u.pieces(&o_reg).iter().map(|(c, r)| r.area() * u.cells[*c].grad_norm()).sum();
            let d = grid.delta_of(a).min(grid.delta_of(b));
            edge_data.push(EdgeData { a, b, line_grad, envelope_avg: integral / d });
        }
    }
    Ok(AdaptedTriangulation {
        base: grid.clone(),
        pos,
        max_perturbation_ratio,
        envelopes,
        kappa_hat,
        lambda_min,
        lambda_max,
        lambda_max_adapted,
        edge_data,
        samples_used,
    })
}

impl AdaptedTriangulation {
    /// Number of (edge, jump segment) intersections.
    pub fn edge_jump_intersections(&self, j: &JumpSet) -> usize {
        let mut n = 0;
        for &(a, b) in &self.base.edges {
            if self.base.is_fixed(a) && self.base.is_fixed(b) {
                continue;
            }
            for s in &j.segments {
                if segments_intersect(self.pos[a], self.pos[b], s.a, s.b) {
                    n += 1;
                }
            }
        }
        n
    }

    pub fn triangle(&self, t: usize) -> [P2; 3] {
        let v = self.base.tris[t];
        [self.pos[v[0]], self.pos[v[1]], self.pos[v[2]]]
    }

    pub fn min_signed_area(&self) -> f64 {
        (0..self.base.tris.len()).map(|t| polygon_signed_area(&self.triangle(t))).fold(f64::INFINITY, f64::min)
    }
}
