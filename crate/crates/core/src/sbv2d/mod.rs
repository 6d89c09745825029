//! Discrete SBV maps on planar disks: piecewise-affine bulk plus polyline jumps.

mod mesh;
mod synth;

pub use mesh::{affine_through, star_mesh, Bulk, StarLoop};
pub use synth::{synthesize, SynthSpec};

use crate::geom::{BBox, BoxIndex, Disk, Piece, Region, Shape, P2};
use crate::svg::{vector_color, Svg};
use crate::vexp::{ExponentField, Integrand, Sample, VexpError};
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SbvError {
    #[error("jump segment {0} has zero length")]
    DegenerateSegment(usize),
    #[error("jump segment {0} has coincident traces")]
    CoincidentTraces(usize),
    #[error("jump segment {0} leaves the domain")]
    JumpOutsideDomain(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("cells do not partition the domain: covered {covered}, expected {expected}")]
    NotPartition { covered: f64, expected: f64 },
    #[error("cell {0} is not sphere-valued")]
    NotOnSphere(usize),
    #[error("jump budget {budget} incompatible with domain radius {radius}")]
    Budget { budget: f64, radius: f64 },
    #[error("total variation vanishes but the map is not constant")]
    Inconsistent,
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Vexp(#[from] VexpError),
}

pub type Result<T> = std::result::Result<T, SbvError>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "radius", rename_all = "snake_case")]
pub enum Target {
    Rk,
    Sphere,
    SphereRadius(f64),
}

impl Target {
    pub fn radius(&self) -> Option<f64> {
        match self {
            Target::Rk => None,
            Target::Sphere => Some(1.0),
            Target::SphereRadius(t) => Some(*t),
        }
    }
}

pub fn vnorm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn vdist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn frob(g: &[[f64; 2]]) -> f64 {
    g.iter().map(|r| r[0] * r[0] + r[1] * r[1]).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpSeg {
    pub a: P2,
    pub b: P2,
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
    pub normal: P2,
}

impl JumpSeg {
    /// Segment with the plus trace on the left of a→b.
    pub fn new(a: P2, b: P2, plus: Vec<f64>, minus: Vec<f64>) -> Self {
        let normal = (b - a).perp().unit();
        JumpSeg { a, b, plus, minus, normal }
    }

    pub fn len(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0.0
    }

    pub fn amplitude(&self) -> f64 {
        vdist(&self.plus, &self.minus)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct JumpSet {
    pub segments: Vec<JumpSeg>,
}

impl JumpSet {
    pub fn new(segments: Vec<JumpSeg>) -> Result<Self> {
        let j = JumpSet { segments };
        j.validate()?;
        Ok(j)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.segments.iter().enumerate() {
            let len = s.len();
            if !(len > 0.0) {
                return Err(SbvError::DegenerateSegment(i));
            }
            if s.amplitude() == 0.0 {
                return Err(SbvError::CoincidentTraces(i));
            }
            if s.plus.len() != s.minus.len() {
                return Err(SbvError::Dimension(format!("traces of segment {i}")));
            }
        }
        Ok(())
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.len()).sum()
    }

    pub fn length_in(&self, region: &Region) -> f64 {
        let bb = region.bbox();
        self.segments
            .iter()
            .filter(|s| BBox::of_points(&[s.a, s.b]).overlaps(&bb, 0.0))
            .map(|s| region.clipped_length(s.a, s.b))
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn min_dist(&self, p: P2) -> f64 {
        self.segments.iter().map(|s| crate::geom::point_seg_dist(p, s.a, s.b)).fold(f64::INFINITY, f64::min)
    }
}

/// One cell: a region with affine data anchored at `anchor`.
/// With `normalize = Some(t)` values are radially projected onto the sphere of radius t;
/// with a `shift` a as well, projected along the ray from a instead of from the origin.
/// `inner = Some(s)` first projects radially onto the sphere of radius s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub region: Region,
    pub anchor: P2,
    pub value: Vec<f64>,
    pub grad: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalize: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<f64>,
}

/// μ > 0 with |a + μ e| = t for a unit vector e and |a| < t.
pub fn ray_exit(a: &[f64], e: &[f64], t: f64) -> f64 {
    let b: f64 = a.iter().zip(e).map(|(x, y)| x * y).sum();
    let c = t * t - a.iter().map(|x| x * x).sum::<f64>();
    let disc = (b * b + c).max(0.0).sqrt();
    if b <= 0.0 {
        disc - b
    } else {
        c / (disc + b)
    }
}

/// Projection of y onto the sphere of radius t along the ray from a (from the origin if a is None).
pub fn sphere_project(y: &[f64], a: Option<&[f64]>, t: f64) -> Vec<f64> {
    let zero = vec![0.0; y.len()];
    let a = a.unwrap_or(&zero);
    let v: Vec<f64> = y.iter().zip(a).map(|(p, q)| p - q).collect();
    let n = vnorm(&v);
    if n == 0.0 {
        return y.to_vec();
    }
    let e: Vec<f64> = v.iter().map(|x| x / n).collect();
    let mu = ray_exit(a, &e, t);
    a.iter().zip(&e).map(|(p, q)| p + mu * q).collect()
}

/// Jacobian of `sphere_project` at y applied to the k×2 matrix g.
pub fn sphere_project_grad(y: &[f64], a: Option<&[f64]>, t: f64, g: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let k = y.len();
    let zero = vec![0.0; k];
    let a = a.unwrap_or(&zero);
    let v: Vec<f64> = y.iter().zip(a).map(|(p, q)| p - q).collect();
    let n = vnorm(&v);
    if n == 0.0 {
        return g.to_vec();
    }
    let e: Vec<f64> = v.iter().map(|x| x / n).collect();
    let mu = ray_exit(a, &e, t);
    let z: Vec<f64> = a.iter().zip(&e).map(|(p, q)| p + mu * q).collect();
    let ze: f64 = z.iter().zip(&e).map(|(p, q)| p * q).sum();
    let mut out = vec![[0.0; 2]; k];
    for c in 0..2 {
        let col: Vec<f64> = g.iter().map(|r| r[c]).collect();
        let ec: f64 = e.iter().zip(&col).map(|(p, q)| p * q).sum();
        let du: Vec<f64> = col.iter().zip(&e).map(|(p, q)| (p - ec * q) / n).collect();
        let zdu: f64 = z.iter().zip(&du).map(|(p, q)| p * q).sum();
        for i in 0..k {
            out[i][c] = mu * (du[i] - e[i] * zdu / ze);
        }
    }
    out
}

impl Cell {
    pub fn raw(&self, x: P2) -> Vec<f64> {
        let d = x - self.anchor;
        self.value.iter().zip(&self.grad).map(|(v, g)| v + g[0] * d.x + g[1] * d.y).collect()
    }

    pub fn eval(&self, x: P2) -> Vec<f64> {
        let mut v = self.raw(x);
        if let Some(s) = self.inner {
            v = sphere_project(&v, None, s);
        }
        if let Some(t) = self.normalize {
            if let Some(a) = &self.shift {
                return sphere_project(&v, Some(a), t);
            }
            let n = vnorm(&v);
            if n > 0.0 {
                v.iter_mut().for_each(|c| *c *= t / n);
            }
        }
        v
    }

    /// Exact gradient of `eval` at x.
    pub fn grad_at(&self, x: P2) -> Vec<[f64; 2]> {
        let (mut v, mut g) = (self.raw(x), self.grad.clone());
        if let Some(s) = self.inner {
            g = sphere_project_grad(&v, None, s, &g);
            v = sphere_project(&v, None, s);
        }
        match self.normalize {
            None => g,
            Some(t) => sphere_project_grad(&v, self.shift.as_deref(), t, &g),
        }
    }

    /// |∇u| at the anchor.
    pub fn grad_norm(&self) -> f64 {
        if self.is_affine() {
            frob(&self.grad)
        } else {
            frob(&self.grad_at(self.anchor))
        }
    }

    pub fn grad_norm_at(&self, x: P2) -> f64 {
        if self.is_affine() {
            frob(&self.grad)
        } else {
            frob(&self.grad_at(x))
        }
    }

    pub fn is_affine(&self) -> bool {
        self.normalize.is_none() && self.inner.is_none()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscreteSbvMap {
    pub center: P2,
    pub radius: f64,
    pub k: usize,
    pub target: Target,
    pub cells: Vec<Cell>,
    pub jump: JumpSet,
    #[serde(skip)]
    index: OnceLock<BoxIndex>,
}

pub const PARTITION_TOL: f64 = 1e-9;
pub const SPHERE_TOL: f64 = 1e-9;

impl DiscreteSbvMap {
    /// Builds and validates a map.
    pub fn new(center: P2, radius: f64, k: usize, target: Target, cells: Vec<Cell>, jump: JumpSet) -> Result<Self> {
        let m = DiscreteSbvMap { center, radius, k, target, cells, jump, index: OnceLock::new() };
        m.validate()?;
        Ok(m)
    }

    pub(crate) fn new_unchecked(center: P2, radius: f64, k: usize, target: Target, cells: Vec<Cell>, jump: JumpSet) -> Self {
        DiscreteSbvMap { center, radius, k, target, cells, jump, index: OnceLock::new() }
    }

    pub fn validate(&self) -> Result<()> {
        self.jump.validate()?;
        for (i, c) in self.cells.iter().enumerate() {
            if c.value.len() != self.k || c.grad.len() != self.k {
                return Err(SbvError::Dimension(format!("cell {i}")));
            }
        }
        let tol = 1e-9 * (1.0 + self.radius);
        for (i, s) in self.jump.segments.iter().enumerate() {
            if s.plus.len() != self.k {
                return Err(SbvError::Dimension(format!("segment {i}")));
            }
            if s.a.dist(self.center) > self.radius + tol || s.b.dist(self.center) > self.radius + tol {
                return Err(SbvError::JumpOutsideDomain(i));
            }
        }
        let covered: f64 = self.cells.iter().map(|c| c.region.area()).sum();
        let expected = std::f64::consts::PI * self.radius * self.radius;
        if (covered - expected).abs() > PARTITION_TOL * expected {
            return Err(SbvError::NotPartition { covered, expected });
        }
        if let Some(t) = self.target.radius() {
            for (i, c) in self.cells.iter().enumerate() {
                if (vnorm(&c.eval(c.anchor)) - t).abs() > SPHERE_TOL * t.max(1.0) {
                    return Err(SbvError::NotOnSphere(i));
                }
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> Region {
        Region::disk(Disk::new(self.center, self.radius))
    }

    pub fn index(&self) -> &BoxIndex {
        self.index.get_or_init(|| BoxIndex::build(&self.cells.iter().map(|c| c.region.bbox()).collect::<Vec<_>>()))
    }

    /// Lowest-index cell whose closure contains x.
    pub fn cell_at(&self, x: P2) -> Option<usize> {
        let mut best: Option<usize> = None;
        for &i in self.index().at_point(x) {
            if best.is_some_and(|b| b < i) {
                continue;
            }
            if self.cells[i].region.contains(x) {
                best = Some(i);
            }
        }
        best
    }

    pub fn eval(&self, x: P2) -> Option<Vec<f64>> {
        self.cell_at(x).map(|i| self.cells[i].eval(x))
    }

    pub fn cells_near(&self, bb: &BBox) -> Vec<usize> {
        self.index().in_box(bb)
    }

    /// Cell pieces inside a region: (cell id, piece).
    pub fn pieces(&self, region: &Region) -> Vec<(usize, Region)> {
        let bb = region.bbox();
        self.cells_near(&bb)
            .into_iter()
            .filter(|&i| self.cells[i].region.bbox().overlaps(&bb, 0.0))
            .map(|i| (i, self.cells[i].region.intersect(region)))
            .filter(|(_, r)| r.area() > 0.0)
            .collect()
    }

    pub fn jump_length(&self, region: &Region) -> f64 {
        self.jump.length_in(region)
    }

    /// (∫|∇u|, ∫_J |u⁺ - u⁻| dH¹) over the region.
    pub fn total_variation_parts(&self, region: &Region) -> (f64, f64) {
        let bulk = self
            .pieces(region)
            .iter()
            .map(|(i, r)| {
                let (a, c) = r.area_centroid();
                let cell = &self.cells[*i];
                a * cell.grad_norm_at(c.unwrap_or(cell.anchor))
            })
            .sum();
        let bb = region.bbox();
        let jump = self
            .jump
            .segments
            .iter()
            .filter(|s| BBox::of_points(&[s.a, s.b]).overlaps(&bb, 0.0))
            .map(|s| s.amplitude() * region.clipped_length(s.a, s.b))
            .sum();
        (bulk, jump)
    }

    pub fn total_variation(&self, region: &Region) -> f64 {
        let (a, b) = self.total_variation_parts(region);
        a + b
    }

    /// Mean value over a region.
    pub fn mean(&self, region: &Region) -> Vec<f64> {
        let mut s = vec![0.0; self.k];
        let mut area = 0.0;
        for (i, r) in self.pieces(region) {
            let c = &self.cells[i];
            let (a, cen) = r.area_centroid();
            area += a;
            if c.is_affine() {
                let v = c.raw(cen.unwrap_or(c.anchor));
                s.iter_mut().zip(&v).for_each(|(acc, x)| *acc += a * x);
            } else {
                for (x, w) in r.quadrature(8, cen) {
                    let v = c.eval(x);
                    s.iter_mut().zip(&v).for_each(|(acc, y)| *acc += w * y);
                }
            }
        }
        if area > 0.0 {
            s.iter_mut().for_each(|x| *x /= area);
        }
        s
    }

    /// ∫_region |u - v| for a constant vector v.
    pub fn l1_dev(&self, region: &Region, v: &[f64], order: usize) -> f64 {
        let mut total = 0.0;
        for (i, r) in self.pieces(region) {
            let c = &self.cells[i];
            if c.is_affine() && c.grad_norm() == 0.0 {
                total += r.area() * vdist(&c.value, v);
                continue;
            }
            for (x, w) in r.quadrature(order, r.area_centroid().1) {
                total += w * vdist(&c.eval(x), v);
            }
        }
        total
    }

    /// (‖u - mean‖_{L¹}, lhs / (diam · |Du|)) over a convex region.
    pub fn bv_poincare_check(&self, region: &Region) -> Result<(f64, f64)> {
        let m = self.mean(region);
        let lhs = self.l1_dev(region, &m, 16);
        let tv = self.total_variation(region);
        let diam = region_diameter(region);
        if tv == 0.0 {
            if lhs > 1e-12 * (1.0 + vnorm(&m)) * region.area() {
                return Err(SbvError::Inconsistent);
            }
            return Ok((lhs, 0.0));
        }
        Ok((lhs, lhs / (diam * tv)))
    }

    /// Sup of |u| over cell anchors, piece vertices and jump traces.
    pub fn linf(&self, region: &Region) -> f64 {
        let mut m = 0.0_f64;
        for (i, r) in self.pieces(region) {
            let c = &self.cells[i];
            if let Some(t) = c.normalize.or(c.inner) {
                m = m.max(t);
                continue;
            }
            m = m.max(vnorm(&c.raw(c.anchor)));
            for p in r.boundary() {
                m = m.max(vnorm(&c.raw(p.start())));
                if let Piece::Arc { c: cc, r: rr, t1, t2 } = p {
                    m = m.max(arc_max(&|th| vnorm(&c.raw(cc + P2::polar(rr, th))), t1, t2));
                }
            }
        }
        m
    }

    /// Image under x ↦ x0 + σ x.
    pub fn dilate(&self, x0: P2, sigma: f64) -> DiscreteSbvMap {
        let cells = self
            .cells
            .iter()
            .map(|c| Cell {
                region: c.region.translate_scale(x0, sigma),
                anchor: x0 + c.anchor * sigma,
                value: c.value.clone(),
                grad: c.grad.iter().map(|g| [g[0] / sigma, g[1] / sigma]).collect(),
                normalize: c.normalize,
                shift: c.shift.clone(),
                inner: c.inner,
            })
            .collect();
        let jump = JumpSet {
            segments: self
                .jump
                .segments
                .iter()
                .map(|s| JumpSeg { a: x0 + s.a * sigma, b: x0 + s.b * sigma, plus: s.plus.clone(), minus: s.minus.clone(), normal: s.normal })
                .collect(),
        };
        DiscreteSbvMap::new_unchecked(x0 + self.center * sigma, self.radius * sigma, self.k, self.target, cells, jump)
    }

    /// y ↦ u(x0 + σ y).
    pub fn pullback(&self, x0: P2, sigma: f64) -> DiscreteSbvMap {
        self.dilate(x0 * (-1.0 / sigma), 1.0 / sigma)
    }

    /// Values multiplied by t.
    pub fn scale_values(&self, t: f64) -> DiscreteSbvMap {
        let cells = self
            .cells
            .iter()
            .map(|c| Cell {
                region: c.region.clone(),
                anchor: c.anchor,
                value: c.value.iter().map(|v| v * t).collect(),
                grad: c.grad.iter().map(|g| [g[0] * t, g[1] * t]).collect(),
                normalize: c.normalize.map(|r| r * t),
                shift: c.shift.as_ref().map(|a| a.iter().map(|v| v * t).collect()),
                inner: c.inner.map(|r| r * t),
            })
            .collect();
        let jump = JumpSet {
            segments: self
                .jump
                .segments
                .iter()
                .map(|s| JumpSeg {
                    a: s.a,
                    b: s.b,
                    plus: s.plus.iter().map(|v| v * t).collect(),
                    minus: s.minus.iter().map(|v| v * t).collect(),
                    normal: s.normal,
                })
                .collect(),
        };
        let target = match self.target.radius() {
            Some(r) => Target::SphereRadius(r * t),
            None => Target::Rk,
        };
        DiscreteSbvMap::new_unchecked(self.center, self.radius, self.k, target, cells, jump)
    }

    /// Gradient magnitude as a modular integrand (midpoint rule per cell piece).
    pub fn grad_integrand(&self) -> GradMagnitude<'_> {
        GradMagnitude { u: self, power: 1.0 }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("map serializes")
    }

    pub fn from_json(s: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_svg(&self, size: f64) -> String {
        let mut svg = Svg::new(self.center, self.radius * 1.05, size);
        for c in &self.cells {
            for p in c.region.boundary() {
                if let Piece::Seg { a, b } = p {
                    svg.line(a, b, "#dddddd", 0.5);
                }
            }
        }
        svg.circle(self.center, self.radius, "black", "none", 1.0);
        let off = self.radius * 0.004;
        for s in &self.jump.segments {
            svg.line(s.a + s.normal * off, s.b + s.normal * off, &vector_color(&s.plus), 2.0);
            svg.line(s.a - s.normal * off, s.b - s.normal * off, &vector_color(&s.minus), 2.0);
        }
        svg.finish()
    }
}

/// |∇u|^power sampled at cell-piece centroids.
pub struct GradMagnitude<'a> {
    pub u: &'a DiscreteSbvMap,
    pub power: f64,
}

impl Integrand for GradMagnitude<'_> {
    fn samples(&self, region: &Region, _p: &ExponentField) -> Vec<Sample> {
        self.u
            .pieces(region)
            .into_iter()
            .map(|(i, r)| {
                let (a, c) = r.area_centroid();
                let cell = &self.u.cells[i];
                let x = c.unwrap_or(cell.anchor);
                Sample { x, w: a, v: cell.grad_norm_at(x).powf(self.power) }
            })
            .collect()
    }
}

/// Max of a smooth function over [t1, t2]: sampling then golden-section refinement.
fn arc_max(f: &dyn Fn(f64) -> f64, t1: f64, t2: f64) -> f64 {
    let n = 64;
    let h = (t2 - t1) / n as f64;
    let mut best = (f(t1).max(f(t2)), t1);
    for i in 1..n {
        let th = t1 + h * i as f64;
        let v = f(th);
        if v > best.0 {
            best = (v, th);
        }
    }
    let (mut lo, mut hi) = (best.1 - h, best.1 + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if f(m1) < f(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let th = (0.5 * (lo + hi)).clamp(t1.min(t2), t1.max(t2));
    best.0.max(f(th))
}

/// Diameter of a region, exact for a single disk.
pub fn region_diameter(region: &Region) -> f64 {
    if let [c] = region.cons.as_slice() {
        if let (Shape::Disk { r, .. }, true) = (&c.shape, c.inside) {
            return 2.0 * r;
        }
    }
    let mut pts = Vec::new();
    for p in region.boundary() {
        match p {
            Piece::Seg { a, b } => {
                pts.push(a);
                pts.push(b);
            }
            Piece::Arc { c, r, t1, t2 } => {
                for s in 0..=512 {
                    pts.push(c + P2::polar(r, t1 + (t2 - t1) * s as f64 / 512.0));
                }
            }
        }
    }
    let mut d = 0.0_f64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d = d.max(pts[i].dist(pts[j]));
        }
    }
    d
}
