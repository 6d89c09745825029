//! Planar primitives and exact moment computations for regions bounded by
//! segments and circular arcs.
//!
//! A [`Region`] is an intersection of constraints, each being "inside" or
//! "outside" a disk or a convex polygon. Area and first moments are computed
//! by Green's theorem over the boundary pieces of the intersection.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct P2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for P2 {
    fn from(a: [f64; 2]) -> Self {
        P2 { x: a[0], y: a[1] }
    }
}

impl From<P2> for [f64; 2] {
    fn from(p: P2) -> Self {
        [p.x, p.y]
    }
}

impl P2 {
    pub const ZERO: P2 = P2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        P2 { x, y }
    }

    pub fn polar(r: f64, theta: f64) -> Self {
        P2::new(r * theta.cos(), r * theta.sin())
    }

    pub fn dot(self, o: P2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: P2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn dist(self, o: P2) -> f64 {
        (self - o).norm()
    }

    /// Counter-clockwise rotation by a right angle.
    pub fn perp(self) -> P2 {
        P2::new(-self.y, self.x)
    }

    pub fn unit(self) -> P2 {
        let n = self.norm();
        P2::new(self.x / n, self.y / n)
    }

    pub fn lerp(self, o: P2, t: f64) -> P2 {
        self + (o - self) * t
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }
}

impl Add for P2 {
    type Output = P2;
    fn add(self, o: P2) -> P2 {
        P2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for P2 {
    type Output = P2;
    fn sub(self, o: P2) -> P2 {
        P2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for P2 {
    type Output = P2;
    fn mul(self, s: f64) -> P2 {
        P2::new(self.x * s, self.y * s)
    }
}

impl Neg for P2 {
    type Output = P2;
    fn neg(self) -> P2 {
        P2::new(-self.x, -self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min: P2,
    pub max: P2,
}

impl BBox {
    pub const EVERYTHING: BBox = BBox {
        min: P2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        max: P2::new(f64::INFINITY, f64::INFINITY),
    };

    pub fn of_points(pts: &[P2]) -> BBox {
        let mut b = BBox {
            min: P2::new(f64::INFINITY, f64::INFINITY),
            max: P2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        };
        for p in pts {
            b.min.x = b.min.x.min(p.x);
            b.min.y = b.min.y.min(p.y);
            b.max.x = b.max.x.max(p.x);
            b.max.y = b.max.y.max(p.y);
        }
        b
    }

    pub fn intersect(&self, o: &BBox) -> BBox {
        BBox {
            min: P2::new(self.min.x.max(o.min.x), self.min.y.max(o.min.y)),
            max: P2::new(self.max.x.min(o.max.x), self.max.y.min(o.max.y)),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y
    }

    pub fn overlaps(&self, o: &BBox, pad: f64) -> bool {
        self.min.x <= o.max.x + pad
            && o.min.x <= self.max.x + pad
            && self.min.y <= o.max.y + pad
            && o.min.y <= self.max.y + pad
    }

    pub fn contains(&self, p: P2, pad: f64) -> bool {
        p.x >= self.min.x - pad && p.x <= self.max.x + pad && p.y >= self.min.y - pad && p.y <= self.max.y + pad
    }

    pub fn extent(&self) -> f64 {
        [self.min.x, self.min.y, self.max.x, self.max.y]
            .iter()
            .filter(|v| v.is_finite())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub c: P2,
    pub r: f64,
}

impl Disk {
    pub fn new(c: P2, r: f64) -> Self {
        Disk { c, r }
    }

    pub fn area(&self) -> f64 {
        PI * self.r * self.r
    }

    pub fn contains(&self, p: P2) -> bool {
        p.dist(self.c) < self.r
    }

    pub fn bbox(&self) -> BBox {
        BBox {
            min: P2::new(self.c.x - self.r, self.c.y - self.r),
            max: P2::new(self.c.x + self.r, self.c.y + self.r),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    Disk { c: P2, r: f64 },
    /// Convex polygon with vertices in counter-clockwise order.
    Poly { verts: Vec<P2> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Inside,
    Boundary,
    Outside,
}

impl Shape {
    pub fn disk(d: Disk) -> Shape {
        Shape::Disk { c: d.c, r: d.r }
    }

    /// Builds a convex polygon, reorienting to counter-clockwise if needed.
    pub fn poly(mut verts: Vec<P2>) -> Shape {
        if polygon_signed_area(&verts) < 0.0 {
            verts.reverse();
        }
        Shape::Poly { verts }
    }

    pub fn bbox(&self) -> BBox {
        match self {
            Shape::Disk { c, r } => Disk::new(*c, *r).bbox(),
            Shape::Poly { verts } => BBox::of_points(verts),
        }
    }

    /// Signed distance-like value, negative inside, positive outside.
    pub fn level(&self, p: P2) -> (f64, P2) {
        match self {
            Shape::Disk { c, r } => {
                let d = p - *c;
                let n = d.norm();
                let normal = if n > 0.0 { d * (1.0 / n) } else { P2::new(1.0, 0.0) };
                (n - r, normal)
            }
            Shape::Poly { verts } => {
                let n = verts.len();
                let mut best = f64::NEG_INFINITY;
                let mut normal = P2::new(1.0, 0.0);
                for i in 0..n {
                    let a = verts[i];
                    let b = verts[(i + 1) % n];
                    let e = b - a;
                    let len = e.norm();
                    if len == 0.0 {
                        continue;
                    }
                    let out = P2::new(e.y, -e.x) * (1.0 / len);
                    let s = (p - a).dot(out);
                    if s > best {
                        best = s;
                        normal = out;
                    }
                }
                (best, normal)
            }
        }
    }

    pub fn classify(&self, p: P2, eps: f64) -> Side {
        let (l, _) = self.level(p);
        if l < -eps {
            Side::Inside
        } else if l > eps {
            Side::Outside
        } else {
            Side::Boundary
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Shape::Disk { r, .. } => PI * r * r,
            Shape::Poly { verts } => polygon_signed_area(verts).abs(),
        }
    }

    fn curves(&self) -> Vec<Curve> {
        match self {
            Shape::Disk { c, r } => vec![Curve::Circle { c: *c, r: *r }],
            Shape::Poly { verts } => {
                let n = verts.len();
                (0..n)
                    .map(|i| Curve::Seg { a: verts[i], b: verts[(i + 1) % n] })
                    .filter(|c| match c {
                        Curve::Seg { a, b } => a != b,
                        _ => true,
                    })
                    .collect()
            }
        }
    }

    fn approx_eq(&self, o: &Shape) -> bool {
        const T: f64 = 1e-14;
        match (self, o) {
            (Shape::Disk { c, r }, Shape::Disk { c: c2, r: r2 }) => {
                c.dist(*c2) <= T * (1.0 + c.norm()) && (r - r2).abs() <= T * (1.0 + r.abs())
            }
            (Shape::Poly { verts }, Shape::Poly { verts: v2 }) => {
                verts.len() == v2.len() && verts.iter().zip(v2).all(|(a, b)| a.dist(*b) <= T * (1.0 + a.norm()))
            }
            _ => false,
        }
    }

    pub fn translate_scale(&self, x0: P2, s: f64) -> Shape {
        match self {
            Shape::Disk { c, r } => Shape::Disk { c: x0 + *c * s, r: r * s },
            Shape::Poly { verts } => Shape::Poly { verts: verts.iter().map(|v| x0 + *v * s).collect() },
        }
    }
}

pub fn polygon_signed_area(v: &[P2]) -> f64 {
    let n = v.len();
    (0..n).map(|i| v[i].cross(v[(i + 1) % n])).sum::<f64>() * 0.5
}

/// Regular polygon inscribed in a circle, first vertex at angle `phase`.
pub fn regular_polygon(c: P2, r: f64, n: usize, phase: f64) -> Vec<P2> {
    (0..n).map(|i| c + P2::polar(r, phase + TAU * i as f64 / n as f64)).collect()
}

/// Convex hull (Andrew monotone chain), counter-clockwise, collinear points dropped.
pub fn convex_hull(pts: &[P2]) -> Vec<P2> {
    let mut p: Vec<P2> = pts.to_vec();
    p.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let mut lower: Vec<P2> = Vec::new();
    for &q in &p {
        while lower.len() >= 2 && (lower[lower.len() - 1] - lower[lower.len() - 2]).cross(q - lower[lower.len() - 2]) <= 0.0 {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<P2> = Vec::new();
    for &q in p.iter().rev() {
        while upper.len() >= 2 && (upper[upper.len() - 1] - upper[upper.len() - 2]).cross(q - upper[upper.len() - 2]) <= 0.0 {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

#[derive(Clone, Copy, Debug)]
enum Curve {
    Seg { a: P2, b: P2 },
    Circle { c: P2, r: f64 },
}

/// Parameters in (0,1) where segment a->b meets the circle.
fn seg_circle_params(a: P2, b: P2, c: P2, r: f64) -> Vec<f64> {
    let d = b - a;
    let f = a - c;
    let qa = d.norm2();
    let qb = 2.0 * f.dot(d);
    let qc = f.norm2() - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if qa == 0.0 || disc < 0.0 {
        return vec![];
    }
    let sq = disc.sqrt();
    let sgn = if qb >= 0.0 { 1.0 } else { -1.0 };
    let q = -0.5 * (qb + sgn * sq);
    let mut out = Vec::with_capacity(2);
    let (t1, t2) = if q != 0.0 { (q / qa, qc / q) } else { (-qb / (2.0 * qa), -qb / (2.0 * qa)) };
    for t in [t1, t2] {
        if t.is_finite() && t > 0.0 && t < 1.0 {
            out.push(t);
        }
    }
    out
}

/// Parameter on segment a->b of its intersection with segment c->d (closed).
fn seg_seg_params(a: P2, b: P2, c: P2, d: P2, eps: f64) -> Vec<f64> {
    let r = b - a;
    let s = d - c;
    let den = r.cross(s);
    let rl = r.norm();
    let sl = s.norm();
    if rl == 0.0 || sl == 0.0 {
        return vec![];
    }
    if den.abs() <= 1e-14 * rl * sl {
        // parallel; collinear overlap contributes the other's endpoints
        if ((c - a).cross(r) / rl).abs() > eps {
            return vec![];
        }
        let mut out = vec![];
        for q in [c, d] {
            let t = (q - a).dot(r) / (rl * rl);
            if t > 0.0 && t < 1.0 {
                out.push(t);
            }
        }
        return out;
    }
    let t = (c - a).cross(s) / den;
    let u = (c - a).cross(r) / den;
    let tu = eps / sl;
    if t > 0.0 && t < 1.0 && u >= -tu && u <= 1.0 + tu {
        vec![t]
    } else {
        vec![]
    }
}

fn circle_circle_angles(c1: P2, r1: f64, c2: P2, r2: f64) -> Vec<f64> {
    let d = c2 - c1;
    let dl = d.norm();
    if dl == 0.0 || dl > r1 + r2 || dl < (r1 - r2).abs() {
        return vec![];
    }
    let a = (r1 * r1 - r2 * r2 + dl * dl) / (2.0 * dl);
    let h2 = r1 * r1 - a * a;
    let h = h2.max(0.0).sqrt();
    let base = d.angle();
    let phi = (a / r1).clamp(-1.0, 1.0).acos();
    if h == 0.0 {
        vec![base]
    } else {
        vec![base + phi, base - phi]
    }
}

fn curve_params_vs_shape(cv: &Curve, sh: &Shape, eps: f64) -> Vec<f64> {
    match (cv, sh) {
        (Curve::Seg { a, b }, Shape::Disk { c, r }) => seg_circle_params(*a, *b, *c, *r),
        (Curve::Seg { a, b }, Shape::Poly { verts }) => {
            let n = verts.len();
            let sb = BBox::of_points(&[*a, *b]);
            let mut out = vec![];
            for i in 0..n {
                let c = verts[i];
                let d = verts[(i + 1) % n];
                if !sb.overlaps(&BBox::of_points(&[c, d]), eps) {
                    continue;
                }
                out.extend(seg_seg_params(*a, *b, c, d, eps));
            }
            out
        }
        (Curve::Circle { c, r }, Shape::Disk { c: c2, r: r2 }) => circle_circle_angles(*c, *r, *c2, *r2),
        (Curve::Circle { c, r }, Shape::Poly { verts }) => {
            let n = verts.len();
            let cb = Disk::new(*c, *r).bbox();
            let mut out = vec![];
            for i in 0..n {
                let a = verts[i];
                let b = verts[(i + 1) % n];
                if !cb.overlaps(&BBox::of_points(&[a, b]), eps) {
                    continue;
                }
                for t in seg_circle_params(a, b, *c, *r) {
                    out.push((a.lerp(b, t) - *c).angle());
                }
                // vertices lying on the circle
                if ((a - *c).norm() - r).abs() <= eps {
                    out.push((a - *c).angle());
                }
            }
            out
        }
    }
}

/// Green's-theorem moments [area, ∫x, ∫y] of the directed segment a->b.
pub fn seg_moments(a: P2, b: P2) -> [f64; 3] {
    let cr = a.cross(b);
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let mx = dy * (a.x * a.x + a.x * b.x + b.x * b.x) / 6.0;
    let my = -dx * (a.y * a.y + a.y * b.y + b.y * b.y) / 6.0;
    [0.5 * cr, mx, my]
}

/// Green's-theorem moments of the counter-clockwise arc from angle t1 to t2.
pub fn arc_moments(c: P2, r: f64, t1: f64, t2: f64) -> [f64; 3] {
    let (s1, c1) = t1.sin_cos();
    let (s2, c2) = t2.sin_cos();
    let dt = t2 - t1;
    let area = 0.5 * (r * r * dt + r * (c.x * (s2 - s1) - c.y * (c2 - c1)));
    let icos = s2 - s1;
    let isin = -(c2 - c1);
    let icos2 = 0.5 * dt + 0.25 * ((2.0 * t2).sin() - (2.0 * t1).sin());
    let isin2 = 0.5 * dt - 0.25 * ((2.0 * t2).sin() - (2.0 * t1).sin());
    let icos3 = (s2 - s2 * s2 * s2 / 3.0) - (s1 - s1 * s1 * s1 / 3.0);
    let isin3 = (-c2 + c2 * c2 * c2 / 3.0) - (-c1 + c1 * c1 * c1 / 3.0);
    let mx = 0.5 * r * (c.x * c.x * icos + 2.0 * c.x * r * icos2 + r * r * icos3);
    let my = 0.5 * r * (c.y * c.y * isin + 2.0 * c.y * r * isin2 + r * r * isin3);
    [area, mx, my]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub shape: Shape,
    pub inside: bool,
}

/// A directed boundary piece of a region.
#[derive(Clone, Copy, Debug)]
pub enum Piece {
    Seg { a: P2, b: P2 },
    /// Arc of circle (c, r) from angle t1 to t2; counter-clockwise when t2 > t1.
    Arc { c: P2, r: f64, t1: f64, t2: f64 },
}

impl Piece {
    pub fn moments(&self) -> [f64; 3] {
        match *self {
            Piece::Seg { a, b } => seg_moments(a, b),
            Piece::Arc { c, r, t1, t2 } => arc_moments(c, r, t1, t2),
        }
    }

    pub fn start(&self) -> P2 {
        match *self {
            Piece::Seg { a, .. } => a,
            Piece::Arc { c, r, t1, .. } => c + P2::polar(r, t1),
        }
    }
}

/// Intersection of inside/outside constraints.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub cons: Vec<Constraint>,
}

impl Region {
    pub fn disk(d: Disk) -> Region {
        Region { cons: vec![Constraint { shape: Shape::disk(d), inside: true }] }
    }

    pub fn annulus(c: P2, r_in: f64, r_out: f64) -> Region {
        Region {
            cons: vec![
                Constraint { shape: Shape::Disk { c, r: r_out }, inside: true },
                Constraint { shape: Shape::Disk { c, r: r_in }, inside: false },
            ],
        }
    }

    pub fn polygon(verts: Vec<P2>) -> Region {
        Region { cons: vec![Constraint { shape: Shape::poly(verts), inside: true }] }
    }

    pub fn with(mut self, shape: Shape, inside: bool) -> Region {
        self.push(Constraint { shape, inside });
        self
    }

    fn push(&mut self, c: Constraint) {
        if self.cons.iter().any(|o| o.inside == c.inside && o.shape.approx_eq(&c.shape)) {
            return;
        }
        self.cons.push(c);
    }

    pub fn intersect(&self, other: &Region) -> Region {
        let mut r = self.clone();
        for c in &other.cons {
            r.push(c.clone());
        }
        r
    }

    pub fn bbox(&self) -> BBox {
        self.cons
            .iter()
            .filter(|c| c.inside)
            .fold(BBox::EVERYTHING, |b, c| b.intersect(&c.shape.bbox()))
    }

    fn eps(&self) -> f64 {
        let ext = self
            .cons
            .iter()
            .map(|c| c.shape.bbox().extent())
            .fold(0.0_f64, f64::max);
        1e-12 * (1.0 + ext)
    }

    fn degenerate(&self) -> bool {
        for (i, a) in self.cons.iter().enumerate() {
            for b in &self.cons[i + 1..] {
                if a.inside != b.inside && a.shape.approx_eq(&b.shape) {
                    return true;
                }
            }
        }
        self.bbox().is_empty()
    }

    /// Closed-region membership (boundary counts as inside).
    pub fn contains(&self, p: P2) -> bool {
        let eps = self.eps();
        self.cons.iter().all(|c| match c.shape.classify(p, eps) {
            Side::Boundary => true,
            Side::Inside => c.inside,
            Side::Outside => !c.inside,
        })
    }

    /// Strict interior membership.
    pub fn contains_strict(&self, p: P2) -> bool {
        let eps = self.eps();
        self.cons.iter().all(|c| match c.shape.classify(p, eps) {
            Side::Boundary => false,
            Side::Inside => c.inside,
            Side::Outside => !c.inside,
        })
    }

    /// Directed boundary pieces of the region (counter-clockwise outer boundary).
    pub fn boundary(&self) -> Vec<Piece> {
        if self.cons.is_empty() || self.degenerate() {
            return vec![];
        }
        let eps = self.eps();
        let bb = self.bbox();
        let mut out = Vec::new();
        for (i, ci) in self.cons.iter().enumerate() {
            for cv in ci.shape.curves() {
                let cvb = match cv {
                    Curve::Seg { a, b } => BBox::of_points(&[a, b]),
                    Curve::Circle { c, r } => Disk::new(c, r).bbox(),
                };
                if !cvb.overlaps(&bb, eps) {
                    continue;
                }
                let mut ts: Vec<f64> = Vec::new();
                for (j, cj) in self.cons.iter().enumerate() {
                    if i != j {
                        ts.extend(curve_params_vs_shape(&cv, &cj.shape, eps));
                    }
                }
                let intervals: Vec<(f64, f64)> = match cv {
                    Curve::Seg { .. } => {
                        ts.push(0.0);
                        ts.push(1.0);
                        ts.sort_by(f64::total_cmp);
                        ts.windows(2).map(|w| (w[0], w[1])).collect()
                    }
                    Curve::Circle { .. } => {
                        let mut a: Vec<f64> = ts.iter().map(|t| t.rem_euclid(TAU)).collect();
                        a.sort_by(f64::total_cmp);
                        if a.is_empty() {
                            vec![(0.0, TAU)]
                        } else {
                            let mut v: Vec<(f64, f64)> = a.windows(2).map(|w| (w[0], w[1])).collect();
                            v.push((a[a.len() - 1], a[0] + TAU));
                            v
                        }
                    }
                };
                for (t0, t1) in intervals {
                    let (piece, mid) = match cv {
                        Curve::Seg { a, b } => {
                            if (t1 - t0) * a.dist(b) <= eps {
                                continue;
                            }
                            (Piece::Seg { a: a.lerp(b, t0), b: a.lerp(b, t1) }, a.lerp(b, 0.5 * (t0 + t1)))
                        }
                        Curve::Circle { c, r } => {
                            if (t1 - t0) * r <= eps {
                                continue;
                            }
                            (Piece::Arc { c, r, t1: t0, t2: t1 }, c + P2::polar(r, 0.5 * (t0 + t1)))
                        }
                    };
                    if self.keep_piece(i, mid, eps) {
                        out.push(if ci.inside { piece } else { reverse(piece) });
                    }
                }
            }
        }
        out
    }

    fn keep_piece(&self, i: usize, mid: P2, eps: f64) -> bool {
        let ci = &self.cons[i];
        let (_, ni) = ci.shape.level(mid);
        let ni = if ci.inside { ni } else { -ni };
        for (j, cj) in self.cons.iter().enumerate() {
            if j == i {
                continue;
            }
            match cj.shape.classify(mid, eps) {
                Side::Inside if !cj.inside => return false,
                Side::Outside if cj.inside => return false,
                Side::Boundary => {
                    let (_, nj) = cj.shape.level(mid);
                    let nj = if cj.inside { nj } else { -nj };
                    if ni.dot(nj) <= 0.0 || j < i {
                        return false;
                    }
                }
                _ => {}
            }
        }
        true
    }

    /// [area, ∫x, ∫y].
    pub fn moments(&self) -> [f64; 3] {
        let mut m = [0.0; 3];
        for p in self.boundary() {
            let q = p.moments();
            m[0] += q[0];
            m[1] += q[1];
            m[2] += q[2];
        }
        m
    }

    pub fn area(&self) -> f64 {
        self.moments()[0].max(0.0)
    }

    /// Area and centroid; centroid is `None` for an empty region.
    pub fn area_centroid(&self) -> (f64, Option<P2>) {
        let m = self.moments();
        if m[0] <= 0.0 {
            (0.0, None)
        } else {
            (m[0], Some(P2::new(m[1] / m[0], m[2] / m[0])))
        }
    }

    /// Parameter intervals of segment a->b lying in the closed region.
    pub fn clip_segment(&self, a: P2, b: P2) -> Vec<(f64, f64)> {
        let eps = self.eps();
        let len = a.dist(b);
        if len == 0.0 {
            return vec![];
        }
        let sb = BBox::of_points(&[a, b]);
        if !sb.overlaps(&self.bbox(), eps) {
            return vec![];
        }
        let cv = Curve::Seg { a, b };
        let mut ts = vec![0.0, 1.0];
        for c in &self.cons {
            ts.extend(curve_params_vs_shape(&cv, &c.shape, eps));
        }
        ts.sort_by(f64::total_cmp);
        let mut out: Vec<(f64, f64)> = Vec::new();
        for w in ts.windows(2) {
            if (w[1] - w[0]) * len <= 1e-15 * (1.0 + len) {
                continue;
            }
            if self.contains(a.lerp(b, 0.5 * (w[0] + w[1]))) {
                match out.last_mut() {
                    Some(last) if (last.1 - w[0]).abs() < 1e-15 => last.1 = w[1],
                    _ => out.push((w[0], w[1])),
                }
            }
        }
        out
    }

    /// Length of segment a->b inside the closed region.
    pub fn clipped_length(&self, a: P2, b: P2) -> f64 {
        let len = a.dist(b);
        self.clip_segment(a, b).iter().map(|(t0, t1)| (t1 - t0) * len).sum()
    }

    /// Signed fan quadrature: points and weights integrating any globally
    /// defined integrand over the region. `n` Gauss points per direction.
    pub fn quadrature(&self, n: usize, apex: Option<P2>) -> Vec<(P2, f64)> {
        let pieces = self.boundary();
        if pieces.is_empty() {
            return vec![];
        }
        let o = apex.unwrap_or_else(|| pieces[0].start());
        let (gx, gw) = crate::quad::gauss_legendre_01(n);
        let mut out = Vec::new();
        for p in pieces {
            match p {
                Piece::Seg { a, b } => {
                    // Duffy map: x = o + t (a + s (b - a) - o), jacobian t * cross
                    let jac = (a - o).cross(b - a);
                    if jac == 0.0 {
                        continue;
                    }
                    for (i, &t) in gx.iter().enumerate() {
                        for (j, &s) in gx.iter().enumerate() {
                            let q = o + (a.lerp(b, s) - o) * t;
                            out.push((q, gw[i] * gw[j] * t * jac));
                        }
                    }
                }
                Piece::Arc { c, r, t1, t2 } => {
                    let nsub = ((t2 - t1).abs() / (PI / 8.0)).ceil().max(1.0) as usize;
                    let h = (t2 - t1) / nsub as f64;
                    for k in 0..nsub {
                        let a0 = t1 + h * k as f64;
                        for (j, &s) in gx.iter().enumerate() {
                            let th = a0 + h * s;
                            let g = c + P2::polar(r, th);
                            let dg = P2::polar(r, th).perp() * h;
                            let jac = (g - o).cross(dg);
                            for (i, &t) in gx.iter().enumerate() {
                                out.push((o + (g - o) * t, gw[i] * gw[j] * t * jac));
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn translate_scale(&self, x0: P2, s: f64) -> Region {
        Region {
            cons: self
                .cons
                .iter()
                .map(|c| Constraint { shape: c.shape.translate_scale(x0, s), inside: c.inside })
                .collect(),
        }
    }
}

fn reverse(p: Piece) -> Piece {
    match p {
        Piece::Seg { a, b } => Piece::Seg { a: b, b: a },
        Piece::Arc { c, r, t1, t2 } => Piece::Arc { c, r, t1: t2, t2: t1 },
    }
}

/// Closest distance from point p to segment a-b.
pub fn point_seg_dist(p: P2, a: P2, b: P2) -> f64 {
    let d = b - a;
    let l2 = d.norm2();
    if l2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(d) / l2).clamp(0.0, 1.0);
    p.dist(a + d * t)
}

/// Whether closed segments a-b and c-d intersect (touching counts).
pub fn segments_intersect(a: P2, b: P2, c: P2, d: P2) -> bool {
    let scale = 1.0 + a.norm().max(b.norm()).max(c.norm()).max(d.norm());
    let eps = 1e-13 * scale;
    let o1 = orient(a, b, c, eps);
    let o2 = orient(a, b, d, eps);
    let o3 = orient(c, d, a, eps);
    let o4 = orient(c, d, b, eps);
    if o1 != o2 && o3 != o4 && o1 * o2 <= 0 && o3 * o4 <= 0 {
        return true;
    }
    (o1 == 0 && on_seg(a, b, c, eps))
        || (o2 == 0 && on_seg(a, b, d, eps))
        || (o3 == 0 && on_seg(c, d, a, eps))
        || (o4 == 0 && on_seg(c, d, b, eps))
}

fn orient(a: P2, b: P2, c: P2, eps: f64) -> i32 {
    let v = (b - a).cross(c - a);
    let l = (b - a).norm().max(1e-300);
    if v / l > eps {
        1
    } else if v / l < -eps {
        -1
    } else {
        0
    }
}

fn on_seg(a: P2, b: P2, p: P2, eps: f64) -> bool {
    p.x >= a.x.min(b.x) - eps && p.x <= a.x.max(b.x) + eps && p.y >= a.y.min(b.y) - eps && p.y <= a.y.max(b.y) + eps
}

/// Segment distance (closed segments).
pub fn seg_seg_dist(a: P2, b: P2, c: P2, d: P2) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_seg_dist(a, c, d)
        .min(point_seg_dist(b, c, d))
        .min(point_seg_dist(c, a, b))
        .min(point_seg_dist(d, a, b))
}

/// Uniform bucket grid over bounding boxes.
#[derive(Clone, Debug, Default)]
pub struct BoxIndex {
    origin: P2,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl BoxIndex {
    pub fn build(boxes: &[BBox]) -> BoxIndex {
        if boxes.is_empty() {
            return BoxIndex::default();
        }
        let all = boxes.iter().fold(
            BBox { min: P2::new(f64::INFINITY, f64::INFINITY), max: P2::new(f64::NEG_INFINITY, f64::NEG_INFINITY) },
            |acc, b| BBox {
                min: P2::new(acc.min.x.min(b.min.x), acc.min.y.min(b.min.y)),
                max: P2::new(acc.max.x.max(b.max.x), acc.max.y.max(b.max.y)),
            },
        );
        let w = (all.max.x - all.min.x).max(1e-300);
        let h = (all.max.y - all.min.y).max(1e-300);
        let target = (boxes.len() as f64).sqrt().clamp(1.0, 256.0);
        let cell = (w.max(h) / target).max(1e-300);
        let nx = ((w / cell).ceil() as usize).clamp(1, 512);
        let ny = ((h / cell).ceil() as usize).clamp(1, 512);
        let mut idx = BoxIndex { origin: all.min, cell, nx, ny, buckets: vec![Vec::new(); nx * ny] };
        for (k, b) in boxes.iter().enumerate() {
            let (i0, j0) = idx.slot(b.min);
            let (i1, j1) = idx.slot(b.max);
            for i in i0..=i1 {
                for j in j0..=j1 {
                    idx.buckets[j * nx + i].push(k);
                }
            }
        }
        idx
    }

    fn slot(&self, p: P2) -> (usize, usize) {
        let i = ((p.x - self.origin.x) / self.cell).floor();
        let j = ((p.y - self.origin.y) / self.cell).floor();
        (
            (i.max(0.0) as usize).min(self.nx - 1),
            (j.max(0.0) as usize).min(self.ny - 1),
        )
    }

    pub fn at_point(&self, p: P2) -> &[usize] {
        if self.buckets.is_empty() {
            return &[];
        }
        let (i, j) = self.slot(p);
        &self.buckets[j * self.nx + i]
    }

    /// Candidate ids whose bucket overlaps the box (deduplicated, sorted).
    pub fn in_box(&self, b: &BBox) -> Vec<usize> {
        if self.buckets.is_empty() {
            return vec![];
        }
        let (i0, j0) = self.slot(b.min);
        let (i1, j1) = self.slot(b.max);
        let mut out = Vec::new();
        for i in i0..=i1 {
            for j in j0..=j1 {
                out.extend_from_slice(&self.buckets[j * self.nx + i]);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}
