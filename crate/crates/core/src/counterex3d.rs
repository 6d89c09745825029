//! Star-shaped union of thin cones in the 3-ball: small total area, yet a fixed
//! fraction of it in every thin spherical shell.

use crate::check::Check;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConeError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("no cone selected; increase axis_count")]
    EmptySelection,
    #[error("radius {r} outside ({lo}, {hi})")]
    OutOfRange { r: f64, lo: f64, hi: f64 },
}

pub type Result<T> = std::result::Result<T, ConeError>;

pub const MAX_AXES: usize = 1000;
pub const MC_BATCHES: usize = 16;

pub type V3 = [f64; 3];

fn dot(a: &V3, b: &V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: &V3) -> f64 {
    dot(a, a).sqrt()
}

fn cross(a: &V3, b: &V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn unit(a: V3) -> V3 {
    let n = norm(&a);
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Angle between unit vectors, accurate for small angles.
pub fn angle(a: &V3, b: &V3) -> f64 {
    norm(&cross(a, b)).atan2(dot(a, b))
}

/// Smallest integer ≥ log₂(1 + 40C/κ).
pub fn h0_for(kappa: f64, c_target: f64) -> u32 {
    (1.0 + 40.0 * c_target / kappa).log2().ceil() as u32
}

/// Half-angle ε·2^{-j}/(40π).
pub fn half_angle(epsilon: f64, j: usize) -> f64 {
    epsilon * 0.5f64.powi(j as i32) / (40.0 * PI)
}

/// Fibonacci lattice of n points on S².
fn fibonacci(n: usize) -> Vec<V3> {
    let g = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let t = g * i as f64;
            [r * t.cos(), r * t.sin(), z]
        })
        .collect()
}

/// Uniform random rotation from a unit quaternion.
fn random_rotation(rng: &mut ChaCha8Rng) -> [V3; 3] {
    let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (w, x, y, z) = (a * (TAU * u2).sin(), a * (TAU * u2).cos(), b * (TAU * u3).sin(), b * (TAU * u3).cos());
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)],
        [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)],
        [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeComplex {
    pub epsilon: f64,
    pub c_target: f64,
    /// Radius of the ball holding the cones (2r).
    pub outer: f64,
    pub axes: Vec<V3>,
    /// Enumeration index j_l of each selected axis (1-based).
    pub indices: Vec<usize>,
    pub half_angles: Vec<f64>,
    /// Enumerated candidate axes in order.
    pub candidates: Vec<V3>,
    pub kappa: f64,
    pub h0: u32,
}

/// Enumerates seeded axes, selects a disjoint subfamily greedily by decreasing angle
/// and computes κ = Σ 2^{-j_l} and h₀.
pub fn build_complex(epsilon: f64, c_target: f64, axis_count: usize, seed: u64) -> Result<ConeComplex> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(ConeError::Params("ε must lie in (0, 1)".into()));
    }
    if !(c_target > 0.0) {
        return Err(ConeError::Params("C must be positive".into()));
    }
    if !(8..=MAX_AXES).contains(&axis_count) {
        return Err(ConeError::Params(format!("axis_count must lie in [8, {MAX_AXES}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rot = random_rotation(&mut rng);
    let mut candidates: Vec<V3> = fibonacci(axis_count).iter().map(|p| unit([dot(&rot[0], p), dot(&rot[1], p), dot(&rot[2], p)])).collect();
    candidates.shuffle(&mut rng);
    let mut axes = Vec::new();
    let mut indices = Vec::new();
    let mut half_angles: Vec<f64> = Vec::new();
    for (i, x) in candidates.iter().enumerate() {
        let j = i + 1;
        let b = half_angle(epsilon, j);
        if b <= 0.0 {
            break;
        }
        if axes.iter().zip(&half_angles).all(|(y, bi)| angle(x, y) > b + bi) {
            axes.push(*x);
            indices.push(j);
            half_angles.push(b);
        }
    }
    if axes.is_empty() {
        return Err(ConeError::EmptySelection);
    }
    let kappa = indices.iter().map(|&j| 0.5f64.powi(j as i32)).sum();
    Ok(ConeComplex { epsilon, c_target, outer: 1.0, axes, indices, half_angles, candidates, kappa, h0: h0_for(kappa, c_target) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Invariants {
    /// Min over selected pairs of angle - (β_i + β_j); positive means disjoint closures.
    pub min_separation: f64,
    /// Whether each candidate cap lies in the 5× dilate of a selected cap of no smaller angle.
    pub five_cover: bool,
    /// Σ 2π β_l, compared to ε/10.
    pub boundary_sum: f64,
    /// Σ π sin β_l · outer², compared to ε · outer².
    pub area: f64,
}

impl ConeComplex {
    pub fn len(&self) -> usize {
        self.axes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axes.is_empty()
    }

    /// Same cones inside the ball of radius `outer`.
    pub fn with_outer(&self, outer: f64) -> ConeComplex {
        ConeComplex { outer, ..self.clone() }
    }

    /// Whether the point lies in the closed solid cone of selected axis l.
    pub fn contains(&self, l: usize, p: &V3) -> bool {
        dot(p, &self.axes[l]) >= norm(p) * self.half_angles[l].cos() * (1.0 - 1e-12)
    }

    /// H² of the lateral surfaces inside the ball.
    pub fn total_area(&self) -> f64 {
        self.half_angles.iter().map(|b| PI * b.sin()).sum::<f64>() * self.outer * self.outer
    }

    pub fn invariants(&self) -> Invariants {
        let mut min_separation = f64::INFINITY;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                min_separation = min_separation.min(angle(&self.axes[i], &self.axes[j]) - self.half_angles[i] - self.half_angles[j]);
            }
        }
        let five_cover = self.candidates.iter().enumerate().all(|(i, x)| {
            let b = half_angle(self.epsilon, i + 1);
            b <= 0.0 || self.axes.iter().zip(&self.half_angles).any(|(y, bi)| *bi >= b && angle(x, y) + b <= 5.0 * bi)
        });
        let boundary_sum = self.half_angles.iter().map(|b| TAU * b).sum();
        Invariants { min_separation, five_cover, boundary_sum, area: self.total_area() }
    }

    pub fn checks(&self) -> Vec<Check> {
        let inv = self.invariants();
        let o2 = self.outer * self.outer;
        vec![
            Check::ge("cone-caps-disjoint", inv.min_separation, 0.0, 0.0),
            Check::flag("cone-five-cover", inv.five_cover),
            Check::le("cone-boundary-sum", inv.boundary_sum, self.epsilon / 10.0, 0.0),
            Check::le("cone-total-area", inv.area, self.epsilon * o2, 0.0),
        ]
    }

    fn check_band(&self, r: f64, delta: f64) -> Result<()> {
        let (lo, hi) = (0.5 * self.outer, self.outer);
        if !(r > lo && r < hi) {
            return Err(ConeError::OutOfRange { r, lo, hi });
        }
        if !(delta > 0.0 && delta <= r) {
            return Err(ConeError::Params(format!("δ = {delta} must lie in (0, R]")));
        }
        Ok(())
    }

    /// Lateral area inside B_R ∖ B_{R-δ}: Σ π sin β (R² - (R-δ)²).
    pub fn annulus_measure(&self, r: f64, delta: f64) -> Result<f64> {
        self.check_band(r, delta)?;
        let band = delta * (2.0 * r - delta);
        Ok(self.half_angles.iter().map(|b| PI * b.sin() * band).sum())
    }

    /// (κ/40)·δ·(R-δ)·ε.
    pub fn annulus_lower_bound(&self, r: f64, delta: f64) -> f64 {
        self.kappa / 40.0 * delta * (r - delta) * self.epsilon
    }

    /// Monte Carlo estimate of the band area from area-uniform points on the lateral surfaces.
    pub fn annulus_measure_mc(&self, r: f64, delta: f64, samples: usize, seed: u64) -> Result<f64> {
        self.check_band(r, delta)?;
        let areas: Vec<f64> = self.half_angles.iter().map(|b| PI * b.sin() * self.outer * self.outer).collect();
        let total: f64 = areas.iter().sum();
        let mut cdf = Vec::with_capacity(areas.len());
        let mut acc = 0.0;
        for a in &areas {
            acc += a / total;
            cdf.push(acc);
        }
        let frames: Vec<(V3, V3)> = self
            .axes
            .iter()
            .map(|a| {
                let t = if a[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
                let e1 = unit(cross(a, &t));
                (e1, cross(a, &e1))
            })
            .collect();
        let per = samples.div_ceil(MC_BATCHES);
        let hits: usize = (0..MC_BATCHES)
            .into_par_iter()
            .map(|bi| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(MC_BATCHES as u64).wrapping_add(bi as u64));
                let n = per.min(samples.saturating_sub(bi * per));
                let mut h = 0;
                for _ in 0..n {
                    let u: f64 = rng.gen();
                    let l = cdf.partition_point(|c| *c < u).min(cdf.len() - 1);
                    let s = self.outer * rng.gen::<f64>().sqrt();
                    let ph = TAU * rng.gen::<f64>();
                    let (b, a, (e1, e2)) = (self.half_angles[l], &self.axes[l], &frames[l]);
                    let (cb, sb) = (b.cos(), b.sin());
                    let p = [
                        s * (cb * a[0] + sb * (ph.cos() * e1[0] + ph.sin() * e2[0])),
                        s * (cb * a[1] + sb * (ph.cos() * e1[1] + ph.sin() * e2[1])),
                        s * (cb * a[2] + sb * (ph.cos() * e1[2] + ph.sin() * e2[2])),
                    ];
                    let d = norm(&p);
                    if d > r - delta && d <= r && self.contains(l, &p) {
                        h += 1;
                    }
                }
                h
            })
            .sum();
        Ok(total * hits as f64 / samples as f64)
    }

    /// Wavefront OBJ of the lateral surfaces as triangle fans.
    pub fn to_obj(&self, segments: usize) -> String {
        let mut s = String::new();
        let mut base = 1;
        for (a, b) in self.axes.iter().zip(&self.half_angles) {
            let t = if a[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            let e1 = unit(cross(a, &t));
            let e2 = cross(a, &e1);
            let _ = writeln!(s, "v 0 0 0");
            for i in 0..segments {
                let ph = TAU * i as f64 / segments as f64;
                let p: Vec<f64> = (0..3).map(|k| self.outer * (b.cos() * a[k] + b.sin() * (ph.cos() * e1[k] + ph.sin() * e2[k]))).collect();
                let _ = writeln!(s, "v {} {} {}", p[0], p[1], p[2]);
            }
            for i in 0..segments {
                let _ = writeln!(s, "f {} {} {}", base, base + 1 + i, base + 1 + (i + 1) % segments);
            }
            base += segments + 1;
        }
        s
    }
}

/// n radii spread uniformly over [outer(1/2 + 10⁻³), outer(1 - 10⁻³)].
pub fn r_grid(outer: f64, n: usize) -> Vec<f64> {
    let (lo, hi) = (outer * (0.5 + 1e-3), outer * (1.0 - 1e-3));
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationRow {
    pub r: f64,
    pub delta: f64,
    pub measured: f64,
    pub bound: f64,
    /// measured / (C ε δ²).
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub h: u32,
    pub rows: Vec<ViolationRow>,
    pub holds: bool,
}

impl ViolationReport {
    pub fn min_margin(&self) -> f64 {
        self.rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("R,delta,measured,bound,margin\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{},{}", r.r, r.delta, r.measured, r.bound, r.margin);
        }
        s
    }
}

/// H²(J ∩ (B_R ∖ B_{R-δ})) against C ε δ² with δ = R 2^{-h}.
pub fn verify_violation_at(cx: &ConeComplex, grid: &[f64], h: u32) -> Result<ViolationReport> {
    let mut rows = Vec::with_capacity(grid.len());
    for &r in grid {
        let delta = r * 0.5f64.powi(h as i32);
        let measured = cx.annulus_measure(r, delta)?;
        let bound = cx.c_target * cx.epsilon * delta * delta;
        rows.push(ViolationRow { r, delta, measured, bound, margin: measured / bound });
    }
    let holds = rows.iter().all(|r| r.margin >= 1.0);
    Ok(ViolationReport { h, rows, holds })
}

pub fn verify_violation(cx: &ConeComplex, grid: &[f64]) -> Result<ViolationReport> {
    verify_violation_at(cx, grid, cx.h0)
}
