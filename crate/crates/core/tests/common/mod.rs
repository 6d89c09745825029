#![allow(dead_code)]

use sbvpx::energy::jump_sample_points;
use sbvpx::geom::{Disk, Region, Shape, P2};
use sbvpx::sbv2d::{synthesize, Cell, DiscreteSbvMap, JumpSeg, JumpSet, SynthSpec, Target};
use sbvpx::vexp::{ClosedExpr, Domain, ExponentField, ExponentSpec};

pub fn p_const(v: f64) -> ExponentField {
    ExponentField::constant(v, Domain::unit_disk()).unwrap()
}

pub fn p_affine() -> ExponentField {
    ExponentField::new(ExponentSpec::closed(ClosedExpr::Affine { base: 1.5, grad: [0.2, -0.1], abs: false }, Domain::unit_disk())).unwrap()
}

pub fn constant_cell(region: Region, anchor: P2, value: Vec<f64>) -> Cell {
    let k = value.len();
    Cell { region, anchor, value, grad: vec![[0.0, 0.0]; k], normalize: None, shift: None, inner: None }
}

pub fn constant_map(value: Vec<f64>) -> DiscreteSbvMap {
    let k = value.len();
    let d = Region::disk(Disk::new(P2::ZERO, 1.0));
    DiscreteSbvMap::new(P2::ZERO, 1.0, k, Target::Sphere, vec![constant_cell(d, P2::ZERO, value)], JumpSet::default()).unwrap()
}

fn half(upper: bool) -> Shape {
    let s = if upper { 1.5 } else { -1.5 };
    let v = vec![P2::new(-1.5, 0.0), P2::new(1.5, 0.0), P2::new(1.5, s), P2::new(-1.5, s)];
    Shape::poly(v)
}

/// (1,0) above the x-axis, (-1,0) below, jump along the diameter.
/// With `wiggle`, the jump detours over the triangle (-0.2,0),(0,0.15),(0.2,0).
pub fn halves(wiggle: bool) -> DiscreteSbvMap {
    let d = Region::disk(Disk::new(P2::ZERO, 1.0));
    let (up, down) = (vec![1.0, 0.0], vec![-1.0, 0.0]);
    let (l, r) = (P2::new(-1.0, 0.0), P2::new(1.0, 0.0));
    if !wiggle {
        let cells = vec![
            constant_cell(d.clone().with(half(true), true), P2::new(0.0, 0.5), up.clone()),
            constant_cell(d.with(half(false), true), P2::new(0.0, -0.5), down.clone()),
        ];
        let jump = JumpSet::new(vec![JumpSeg::new(r, l, up, down)]).unwrap();
        return DiscreteSbvMap::new(P2::ZERO, 1.0, 2, Target::Sphere, cells, jump).unwrap();
    }
    let (a, t, b) = (P2::new(-0.2, 0.0), P2::new(0.0, 0.15), P2::new(0.2, 0.0));
    let tri = Shape::poly(vec![a, b, t]);
    let cells = vec![
        constant_cell(d.clone().with(half(true), true).with(tri.clone(), false), P2::new(0.0, 0.5), up.clone()),
        constant_cell(d.with(half(false), true), P2::new(0.0, -0.5), down.clone()),
        constant_cell(Region::polygon(vec![a, b, t]), P2::new(0.0, 0.05), down.clone()),
    ];
    let segs = vec![
        JumpSeg::new(r, b, up.clone(), down.clone()),
        JumpSeg::new(b, t, up.clone(), down.clone()),
        JumpSeg::new(t, a, up.clone(), down.clone()),
        JumpSeg::new(a, l, up, down),
    ];
    DiscreteSbvMap::new(P2::ZERO, 1.0, 2, Target::Sphere, cells, JumpSet::new(segs).unwrap()).unwrap()
}

pub fn random_polyline(seed: u64, budget: f64) -> DiscreteSbvMap {
    let spec = SynthSpec::RandomCellsWithRandomPolyline {
        center: P2::ZERO,
        radius: 1.0,
        budget,
        k: 2,
        vertices: 12,
        amplitude: 0.3,
        jump_scale: 1.0,
        loop_center: None,
    };
    synthesize(&spec, seed).unwrap()
}

pub const PROBE_RADII: [f64; 5] = [0.04, 0.02, 0.01, 0.005, 0.0025];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Label {
    OnJump,
    OffJump,
    Borderline,
}

/// Labeled probe points: one on the jump away from corners, one off the jump
/// beyond the smallest radius, one borderline within [ρ_min/2, ρ_min].
pub fn labeled_points(u: &DiscreteSbvMap, seed: u64) -> Vec<(P2, Label)> {
    let rmin = *PROBE_RADII.last().unwrap();
    let pts = jump_sample_points(&u.jump, 7, 8.0 * rmin);
    let mut out = Vec::new();
    let normal_at = |x: P2| {
        let s = u.jump.segments.iter().min_by(|a, b| sbvpx::geom::point_seg_dist(x, a.a, a.b).total_cmp(&sbvpx::geom::point_seg_dist(x, b.a, b.b))).unwrap();
        s.normal
    };
    let f = (seed % 7) as f64 / 7.0;
    let on = pts[(seed as usize) % pts.len()];
    out.push((on, Label::OnJump));
    let off_base = pts[(seed as usize + 2) % pts.len()];
    let sign = if seed % 2 == 0 { 1.0 } else { -1.0 };
    let off = off_base + normal_at(off_base) * (sign * rmin * (1.2 + 2.0 * f));
    out.push((off, if u.jump.min_dist(off) > rmin { Label::OffJump } else { Label::Borderline }));
    let bl_base = pts[(seed as usize + 4) % pts.len()];
    let bl = bl_base + normal_at(bl_base) * (-sign * rmin * (0.5 + 0.45 * f));
    let d = u.jump.min_dist(bl);
    out.push((bl, if d > rmin { Label::OffJump } else { Label::Borderline }));
    out
}
