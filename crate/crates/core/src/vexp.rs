//! Variable exponents, modulars, Luxembourg norms and log-Hölder diagnostics.

use crate::geom::{Disk, Region, Shape, P2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VexpError {
    #[error("region is not contained in the exponent domain")]
    DomainMismatch,
    #[error("modular is not finite")]
    NonFinite,
    #[error("sample budget must be positive")]
    EmptySampleBudget,
    #[error("scales must lie in (0, 1/2] and be strictly decreasing")]
    BadScales,
    #[error("exponent ordering violated at ({x}, {y}): q = {q} > p = {p}")]
    OrderingViolation { x: f64, y: f64, q: f64, p: f64 },
    #[error("invalid exponent field: {0}")]
    InvalidField(String),
}

pub type Result<T> = std::result::Result<T, VexpError>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Domain {
    Disk { center: P2, radius: f64 },
    Rect { min: P2, max: P2 },
}

impl Domain {
    pub fn unit_disk() -> Domain {
        Domain::Disk { center: P2::ZERO, radius: 1.0 }
    }

    pub fn contains(&self, p: P2, tol: f64) -> bool {
        match self {
            Domain::Disk { center, radius } => p.dist(*center) <= radius + tol,
            Domain::Rect { min, max } => {
                p.x >= min.x - tol && p.x <= max.x + tol && p.y >= min.y - tol && p.y <= max.y + tol
            }
        }
    }

    pub fn region(&self) -> Region {
        match self {
            Domain::Disk { center, radius } => Region::disk(Disk::new(*center, *radius)),
            Domain::Rect { min, max } => Region::polygon(vec![*min, P2::new(max.x, min.y), *max, P2::new(min.x, max.y)]),
        }
    }

    fn scale(&self) -> f64 {
        match self {
            Domain::Disk { center, radius } => center.norm() + radius,
            Domain::Rect { min, max } => min.norm().max(max.norm()),
        }
    }

    /// Whether a region lies inside the closed domain, tested on boundary pieces.
    pub fn contains_region(&self, region: &Region) -> bool {
        let tol = 1e-9 * (1.0 + self.scale());
        let q = region.quadrature(2, None);
        let pieces = region.boundary();
        if pieces.is_empty() {
            return true;
        }
        pieces.iter().all(|p| self.contains(p.start(), tol)) && q.iter().all(|(x, _)| self.contains(*x, tol))
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> P2 {
        match self {
            Domain::Disk { center, radius } => {
                let r = radius * rng.gen::<f64>().sqrt();
                *center + P2::polar(r, TAU * rng.gen::<f64>())
            }
            Domain::Rect { min, max } => P2::new(rng.gen_range(min.x..=max.x), rng.gen_range(min.y..=max.y)),
        }
    }

    fn candidates(&self) -> Vec<P2> {
        let mut out = Vec::new();
        match self {
            Domain::Disk { center, radius } => {
                for i in 0..1440 {
                    out.push(*center + P2::polar(*radius, TAU * i as f64 / 1440.0));
                }
                let n = 80;
                for i in 0..=n {
                    for j in 0..=n {
                        let p = *center
                            + P2::new(
                                radius * (2.0 * i as f64 / n as f64 - 1.0),
                                radius * (2.0 * j as f64 / n as f64 - 1.0),
                            );
                        if p.dist(*center) <= *radius {
                            out.push(p);
                        }
                    }
                }
                out.push(*center);
            }
            Domain::Rect { min, max } => {
                let n = 80;
                for i in 0..=n {
                    for j in 0..=n {
                        out.push(P2::new(
                            min.x + (max.x - min.x) * i as f64 / n as f64,
                            min.y + (max.y - min.y) * j as f64 / n as f64,
                        ));
                    }
                }
            }
        }
        out
    }

    /// Nearest and farthest domain points from x0.
    fn extremal_from(&self, x0: P2) -> Vec<P2> {
        match self {
            Domain::Disk { center, radius } => {
                let d = x0 - *center;
                let dir = if d.norm() > 0.0 { d.unit() } else { P2::new(1.0, 0.0) };
                let near = if d.norm() <= *radius { x0 } else { *center + dir * *radius };
                vec![near, *center - dir * *radius]
            }
            Domain::Rect { min, max } => {
                let near = P2::new(x0.x.clamp(min.x, max.x), x0.y.clamp(min.y, max.y));
                vec![near, *min, *max, P2::new(min.x, max.y), P2::new(max.x, min.y)]
            }
        }
    }
}

/// Whitelisted closed-form exponent expressions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClosedExpr {
    /// base + grad·x, or base + Σ grad_i |x_i| when `abs` is set.
    Affine {
        base: f64,
        grad: [f64; 2],
        #[serde(default)]
        abs: bool,
    },
    /// base + c / ln(1/|x - center|) for |x - center| ≤ cap, constant beyond.
    RadialLog { base: f64, c: f64, center: P2, cap: f64 },
    /// base + amp · |x - center|^power.
    RadialPower { base: f64, amp: f64, power: f64, center: P2 },
    /// `low` where normal·x < offset, `high` elsewhere.
    HalfPlane { low: f64, high: f64, normal: [f64; 2], offset: f64 },
}

impl ClosedExpr {
    fn eval(&self, x: P2) -> f64 {
        match self {
            ClosedExpr::Affine { base, grad, abs } => {
                if *abs {
                    base + grad[0] * x.x.abs() + grad[1] * x.y.abs()
                } else {
                    base + grad[0] * x.x + grad[1] * x.y
                }
            }
            ClosedExpr::RadialLog { base, c, center, cap } => {
                let r = x.dist(*center).min(*cap);
                if r <= 0.0 {
                    *base
                } else {
                    base + c / (1.0 / r).ln()
                }
            }
            ClosedExpr::RadialPower { base, amp, power, center } => base + amp * x.dist(*center).powf(*power),
            ClosedExpr::HalfPlane { low, high, normal, offset } => {
                if normal[0] * x.x + normal[1] * x.y < *offset {
                    *low
                } else {
                    *high
                }
            }
        }
    }

    fn special_points(&self, d: &Domain) -> Vec<P2> {
        match self {
            ClosedExpr::Affine { grad, abs, .. } => {
                let mut v = Vec::new();
                let g = P2::new(grad[0], grad[1]);
                match d {
                    Domain::Disk { center, radius } => {
                        if g.norm() > 0.0 {
                            v.push(*center + g.unit() * *radius);
                            v.push(*center - g.unit() * *radius);
                        }
                        if *abs {
                            for axis_pt in [P2::ZERO, P2::new(center.x, 0.0), P2::new(0.0, center.y)] {
                                if axis_pt.dist(*center) <= *radius {
                                    v.push(axis_pt);
                                }
                            }
                            for q in [P2::new(1.0, 0.0), P2::new(0.0, 1.0), P2::new(-1.0, 0.0), P2::new(0.0, -1.0)] {
                                v.push(*center + q * *radius);
                            }
                            for s in [P2::new(1.0, 1.0), P2::new(1.0, -1.0), P2::new(-1.0, 1.0), P2::new(-1.0, -1.0)] {
                                let w = P2::new(s.x * grad[0], s.y * grad[1]);
                                if w.norm() > 0.0 {
                                    v.push(*center + w.unit() * *radius);
                                }
                            }
                        }
                    }
                    Domain::Rect { min, max } => {
                        v.extend([*min, *max, P2::new(min.x, max.y), P2::new(max.x, min.y)]);
                        if *abs {
                            v.push(P2::new(0.0f64.clamp(min.x, max.x), 0.0f64.clamp(min.y, max.y)));
                        }
                    }
                }
                v
            }
            ClosedExpr::RadialLog { center, .. } | ClosedExpr::RadialPower { center, .. } => d.extremal_from(*center),
            ClosedExpr::HalfPlane { .. } => vec![],
        }
    }
}

/// Exponent description as stored in JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExponentSpec {
    Constant {
        value: f64,
        domain: Domain,
    },
    ClosedForm {
        expr: ClosedExpr,
        domain: Domain,
    },
    /// Bilinear interpolation of nodal values, row-major in x.
    Grid {
        origin: P2,
        spacing: [f64; 2],
        nx: usize,
        ny: usize,
        values: Vec<f64>,
        domain: Domain,
    },
}

impl ExponentSpec {
    pub fn closed(expr: ClosedExpr, domain: Domain) -> Self {
        ExponentSpec::ClosedForm { expr, domain }
    }

    pub fn domain(&self) -> &Domain {
        match self {
            ExponentSpec::Constant { domain, .. } | ExponentSpec::ClosedForm { domain, .. } | ExponentSpec::Grid { domain, .. } => domain,
        }
    }

    fn eval(&self, x: P2) -> f64 {
        match self {
            ExponentSpec::Constant { value, .. } => *value,
            ExponentSpec::ClosedForm { expr, .. } => expr.eval(x),
            ExponentSpec::Grid { origin, spacing, nx, ny, values, .. } => {
                let fx = ((x.x - origin.x) / spacing[0]).clamp(0.0, (*nx - 1) as f64);
                let fy = ((x.y - origin.y) / spacing[1]).clamp(0.0, (*ny - 1) as f64);
                let i = (fx.floor() as usize).min(nx - 2);
                let j = (fy.floor() as usize).min(ny - 2);
                let tx = fx - i as f64;
                let ty = fy - j as f64;
                let v = |a: usize, b: usize| values[b * nx + a];
                (1.0 - tx) * (1.0 - ty) * v(i, j) + tx * (1.0 - ty) * v(i + 1, j) + (1.0 - tx) * ty * v(i, j + 1) + tx * ty * v(i + 1, j + 1)
            }
        }
    }

    fn special_points(&self) -> Vec<P2> {
        let d = self.domain();
        match self {
            ExponentSpec::ClosedForm { expr, .. } => expr.special_points(d),
            ExponentSpec::Grid { origin, spacing, nx, ny, .. } => {
                let mut v = Vec::new();
                for j in 0..*ny {
                    for i in 0..*nx {
                        let p = *origin + P2::new(spacing[0] * i as f64, spacing[1] * j as f64);
                        if d.contains(p, 0.0) {
                            v.push(p);
                        }
                    }
                }
                v
            }
            ExponentSpec::Constant { .. } => vec![],
        }
    }

    /// Points where the exponent is singular, used as quadrature apexes.
    pub fn anchors(&self) -> Vec<P2> {
        match self {
            ExponentSpec::ClosedForm { expr: ClosedExpr::RadialLog { center, .. } | ClosedExpr::RadialPower { center, .. }, .. } => vec![*center],
            _ => vec![],
        }
    }
}

/// A variable exponent with its bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExponentSpec", into = "ExponentSpec")]
pub struct ExponentField {
    pub spec: ExponentSpec,
    pub p_minus: f64,
    pub p_plus: f64,
}

impl From<ExponentField> for ExponentSpec {
    fn from(f: ExponentField) -> Self {
        f.spec
    }
}

impl TryFrom<ExponentSpec> for ExponentField {
    type Error = VexpError;
    fn try_from(spec: ExponentSpec) -> Result<Self> {
        ExponentField::new(spec)
    }
}

impl ExponentField {
    pub fn new(spec: ExponentSpec) -> Result<Self> {
        match &spec {
            ExponentSpec::Grid { origin, spacing, nx, ny, values, domain } => {
                if *nx < 2 || *ny < 2 || values.len() != nx * ny || spacing[0] <= 0.0 || spacing[1] <= 0.0 {
                    return Err(VexpError::InvalidField("grid shape".into()));
                }
                let far = *origin + P2::new(spacing[0] * (*nx - 1) as f64, spacing[1] * (*ny - 1) as f64);
                let bb = domain.region().bbox();
                let tol = 1e-12 * (1.0 + domain.scale());
                if origin.x > bb.min.x + tol || origin.y > bb.min.y + tol || far.x < bb.max.x - tol || far.y < bb.max.y - tol {
                    return Err(VexpError::InvalidField("grid does not cover the domain".into()));
                }
            }
            ExponentSpec::ClosedForm { expr: ClosedExpr::RadialLog { cap, .. }, .. } if !(*cap > 0.0 && *cap < 1.0) => {
                return Err(VexpError::InvalidField("radial_log cap must lie in (0,1)".into()));
            }
            _ => {}
        }
        let d = spec.domain().clone();
        let mut pts = d.candidates();
        pts.extend(spec.special_points());
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in pts {
            let v = spec.eval(p);
            if !v.is_finite() {
                return Err(VexpError::InvalidField("non-finite exponent".into()));
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if let ExponentSpec::ClosedForm { expr: ClosedExpr::HalfPlane { low, high, .. }, .. } = &spec {
            lo = low.min(*high);
            hi = low.max(*high);
        }
        if lo <= 1.0 {
            return Err(VexpError::InvalidField(format!("p_minus = {lo} must exceed 1")));
        }
        Ok(ExponentField { spec, p_minus: lo, p_plus: hi })
    }

    pub fn constant(value: f64, domain: Domain) -> Result<Self> {
        ExponentField::new(ExponentSpec::Constant { value, domain })
    }

    pub fn eval(&self, x: P2) -> f64 {
        self.spec.eval(x)
    }

    pub fn domain(&self) -> &Domain {
        self.spec.domain()
    }

    pub fn is_constant(&self) -> bool {
        self.p_plus == self.p_minus
    }

    /// Splits a region along exponent discontinuities.
    pub fn split(&self, region: &Region) -> Vec<Region> {
        if let ExponentSpec::ClosedForm { expr: ClosedExpr::HalfPlane { normal, offset, .. }, .. } = &self.spec {
            let n = P2::new(normal[0], normal[1]);
            let nl = n.norm();
            let n = n * (1.0 / nl);
            let o = n * (offset / nl);
            let t = n.perp();
            let big = 1e3 * (1.0 + region.bbox().extent() + o.norm());
            let low = Shape::poly(vec![o + t * big, o + t * big - n * big, o - t * big - n * big, o - t * big]);
            let high = Shape::poly(vec![o - t * big, o - t * big + n * big, o + t * big + n * big, o + t * big]);
            return vec![region.clone().with(low, true), region.clone().with(high, true)];
        }
        vec![region.clone()]
    }

    /// Rescaled exponent y ↦ p(x0 + σ y) on the unit disk.
    pub fn rescaled(&self, x0: P2, sigma: f64) -> RescaledExponent<'_> {
        RescaledExponent { p: self, x0, sigma }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RescaledExponent<'a> {
    pub p: &'a ExponentField,
    pub x0: P2,
    pub sigma: f64,
}

impl RescaledExponent<'_> {
    pub fn eval(&self, y: P2) -> f64 {
        self.p.eval(self.x0 + y * self.sigma)
    }
}

/// Weighted magnitude sample: ∫ g ≈ Σ w · g(x, v).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub x: P2,
    pub w: f64,
    pub v: f64,
}

/// Source of magnitude samples of a field over a region.
pub trait Integrand {
    fn samples(&self, region: &Region, p: &ExponentField) -> Vec<Sample>;
}

/// A closed-form field given by its pointwise magnitude, integrated by a
/// Gauss fan rule split along exponent discontinuities.
pub struct ClosedForm<F: Fn(P2) -> f64> {
    pub f: F,
    pub order: usize,
    /// Known non-smooth point of f, used as the fan apex.
    pub apex: Option<P2>,
}

impl<F: Fn(P2) -> f64> ClosedForm<F> {
    pub fn new(f: F) -> Self {
        ClosedForm { f, order: 24, apex: None }
    }

    pub fn with_apex(mut self, apex: P2) -> Self {
        self.apex = Some(apex);
        self
    }
}

impl<F: Fn(P2) -> f64> Integrand for ClosedForm<F> {
    fn samples(&self, region: &Region, p: &ExponentField) -> Vec<Sample> {
        let apex = self.apex.or_else(|| p.spec.anchors().first().copied());
        let mut out = Vec::new();
        for part in p.split(region) {
            let apex = apex.or_else(|| part.area_centroid().1);
            for (x, w) in part.quadrature(self.order, apex) {
                out.push(Sample { x, w, v: (self.f)(x).abs() });
            }
        }
        out
    }
}

/// Σ w |v|^{p(x)}.
pub fn modular_samples(samples: &[Sample], p: &ExponentField) -> f64 {
    samples
        .iter()
        .map(|s| if s.v == 0.0 { 0.0 } else { s.w * s.v.powf(p.eval(s.x)) })
        .sum()
}

fn check_region(p: &ExponentField, region: &Region) -> Result<()> {
    if p.domain().contains_region(region) {
        Ok(())
    } else {
        Err(VexpError::DomainMismatch)
    }
}

/// ∫_region |f(x)|^{p(x)} dx.
pub fn modular<I: Integrand + ?Sized>(f: &I, p: &ExponentField, region: &Region) -> Result<f64> {
    check_region(p, region)?;
    let m = modular_samples(&f.samples(region, p), p);
    if m.is_finite() {
        Ok(m)
    } else {
        Err(VexpError::NonFinite)
    }
}

pub const LUX_TOL: f64 = 1e-10;
pub const LUX_MAX_ITER: usize = 200;

/// inf{λ > 0 : modular(f/λ) ≤ 1} over weighted samples, by bisection.
pub fn luxembourg_samples(samples: &[Sample], p: &ExponentField) -> Result<f64> {
    if samples.iter().all(|s| s.v == 0.0 || s.w == 0.0) {
        return Ok(0.0);
    }
    let m = |lam: f64| -> f64 {
        samples
            .iter()
            .map(|s| if s.v == 0.0 { 0.0 } else { s.w * (s.v / lam).powf(p.eval(s.x)) })
            .sum()
    };
    let m1 = m(1.0);
    if !m1.is_finite() {
        return Err(VexpError::NonFinite);
    }
    let (mut lo, mut hi) = (1.0, 1.0);
    if m1 > 1.0 {
        while m(hi) > 1.0 {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(VexpError::NonFinite);
            }
        }
    } else {
        while m(lo) <= 1.0 {
            hi = lo;
            lo *= 0.5;
            if lo == 0.0 {
                return Ok(0.0);
            }
        }
    }
    for _ in 0..LUX_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= LUX_TOL || mid == lo || mid == hi {
            break;
        }
        if m(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn luxembourg_norm<I: Integrand + ?Sized>(f: &I, p: &ExponentField, region: &Region) -> Result<f64> {
    check_region(p, region)?;
    luxembourg_samples(&f.samples(region, p), p)
}

/// Bounds implied by the norm-modular inequalities for a given norm.
pub fn norm_modular_bounds(modular: f64, norm: f64, p: &ExponentField) -> (f64, f64) {
    if norm > 1.0 {
        (modular.powf(1.0 / p.p_plus), modular.powf(1.0 / p.p_minus))
    } else {
        (modular.powf(1.0 / p.p_minus), modular.powf(1.0 / p.p_plus))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogHolderReport {
    pub c_p: f64,
    pub ell: f64,
    pub strong_profile: Vec<(f64, f64)>,
    pub is_strong: bool,
    pub sample_budget: usize,
    pub seed: u64,
}

/// Ratio below which consecutive profile values count as decaying.
pub const STRONG_RATIO: f64 = 0.8;

fn sample_pair(d: &Domain, rng: &mut ChaCha8Rng, dist: f64, anchors: &[P2]) -> Option<(P2, P2)> {
    for _ in 0..32 {
        let x = if !anchors.is_empty() && rng.gen::<f64>() < 0.25 {
            anchors[rng.gen_range(0..anchors.len())]
        } else {
            d.sample(rng)
        };
        let y = x + P2::polar(dist, TAU * rng.gen::<f64>());
        if d.contains(x, 0.0) && d.contains(y, 0.0) {
            return Some((x, y));
        }
    }
    None
}

/// Sampled estimate of sup_{|x-y| ≤ ρ} |p(x) - p(y)|.
pub fn modulus_of_continuity(p: &ExponentField, rho: f64, budget: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let anchors = p.spec.anchors();
    let mut w = 0.0_f64;
    for _ in 0..budget {
        let d = rho * rng.gen::<f64>().max(1e-300);
        if let Some((x, y)) = sample_pair(p.domain(), &mut rng, d, &anchors) {
            w = w.max((p.eval(x) - p.eval(y)).abs());
        }
    }
    w
}

/// Whether a profile (ordered by decreasing scale) decays at its smallest scales.
pub fn profile_is_strong(values: &[f64]) -> bool {
    let n = values.len();
    if n < 4 {
        return false;
    }
    (n - 3..n).all(|i| values[i] <= 1e-12 || values[i] < STRONG_RATIO * values[i - 1])
}

pub fn log_holder_diagnose(p: &ExponentField, sample_budget: usize, scales: &[f64], seed: u64) -> Result<LogHolderReport> {
    if sample_budget == 0 {
        return Err(VexpError::EmptySampleBudget);
    }
    if scales.iter().any(|&s| !(s > 0.0 && s <= 0.5)) || scales.windows(2).any(|w| w[1] >= w[0]) {
        return Err(VexpError::BadScales);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = p.domain();
    let anchors = p.spec.anchors();
    let mut c_p = 0.0_f64;
    for _ in 0..sample_budget {
        // log-uniform separations in [1e-8, 1/2]
        let dist = (0.5f64.ln() + rng.gen::<f64>() * (1e-8f64.ln() - 0.5f64.ln())).exp();
        if let Some((x, y)) = sample_pair(d, &mut rng, dist, &anchors) {
            let r = x.dist(y);
            if r > 0.0 && r <= 0.5 {
                c_p = c_p.max((p.eval(x) - p.eval(y)).abs() * (-r.ln()));
            }
        }
    }
    let mut ell = 1.0_f64;
    let balls = (sample_budget / 64).max(8);
    for _ in 0..balls {
        let r = (0.5f64.ln() + rng.gen::<f64>() * (1e-4f64.ln() - 0.5f64.ln())).exp();
        let c = if !anchors.is_empty() && rng.gen::<f64>() < 0.25 { anchors[rng.gen_range(0..anchors.len())] } else { d.sample(&mut rng) };
        let mut lo = p.eval(c);
        let mut hi = lo;
        for k in 0..48 {
            let q = c + P2::polar(r * if k < 24 { 1.0 } else { rng.gen::<f64>().sqrt() }, TAU * k as f64 / 24.0 + rng.gen::<f64>() * 0.01);
            if d.contains(q, 0.0) {
                let v = p.eval(q);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        let area = std::f64::consts::PI * r * r;
        ell = ell.max(area.powf(lo - hi));
    }
    let per = (sample_budget / scales.len().max(1)).max(1);
    let mut profile = Vec::with_capacity(scales.len());
    for (i, &s) in scales.iter().enumerate() {
        let w = modulus_of_continuity(p, s, per, seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i as u64 + 1)));
        profile.push((s, w * (1.0 / s).ln()));
    }
    let vals: Vec<f64> = profile.iter().map(|x| x.1).collect();
    let is_strong = profile_is_strong(&vals);
    Ok(LogHolderReport { c_p, ell, strong_profile: profile, is_strong, sample_budget, seed })
}

pub const DEFAULT_SCALES: [f64; 10] = [
    0.5,
    0.25,
    0.125,
    0.0625,
    0.03125,
    0.015625,
    0.0078125,
    0.00390625,
    0.001953125,
    0.0009765625,
];

/// min{2(1+|Ω|), 2·max(|Ω|^{s⁺}, |Ω|^{s⁻})}, s = 1/q - 1/p sampled over the region.
pub fn embedding_constant(p: &ExponentField, q: &ExponentField, region: &Region) -> Result<f64> {
    check_region(p, region)?;
    check_region(q, region)?;
    let area = region.area();
    let mut pts: Vec<P2> = region.quadrature(8, None).into_iter().map(|(x, _)| x).collect();
    pts.extend(region.boundary().iter().map(|b| b.start()));
    if let Some(c) = region.area_centroid().1 {
        pts.push(c);
    }
    let mut s_hi = f64::NEG_INFINITY;
    let mut s_lo = f64::INFINITY;
    for x in pts {
        if !region.contains(x) {
            continue;
        }
        let (pv, qv) = (p.eval(x), q.eval(x));
        if qv > pv + 1e-12 {
            return Err(VexpError::OrderingViolation { x: x.x, y: x.y, q: qv, p: pv });
        }
        let s = 1.0 / qv - 1.0 / pv;
        s_hi = s_hi.max(s);
        s_lo = s_lo.min(s);
    }
    if !s_hi.is_finite() {
        return Err(VexpError::DomainMismatch);
    }
    Ok(embedding_formula(area, s_lo, s_hi))
}

pub fn embedding_formula(area: f64, s_lo: f64, s_hi: f64) -> f64 {
    (2.0 * (1.0 + area)).min(2.0 * area.powf(s_hi).max(area.powf(s_lo)))
}
