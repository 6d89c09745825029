//! Seeded test-map generator.

use super::mesh::{build, loop_jump, Bulk, StarLoop};
use super::{DiscreteSbvMap, JumpSeg, JumpSet, Result, SbvError, Target};
use crate::geom::{Disk, P2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

fn one() -> f64 {
    1.0
}
fn two() -> usize {
    2
}
fn sides() -> usize {
    32
}
fn twelve() -> usize {
    12
}
fn half() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SynthSpec {
    /// u(x) = value + grad (x - center).
    Affine {
        #[serde(default)]
        center: P2,
        #[serde(default = "one")]
        radius: f64,
        value: Vec<f64>,
        grad: Vec<[f64; 2]>,
    },
    /// `inside` within a regular polygon of perimeter `budget`, `outside` elsewhere.
    PiecewiseConstantWithArcJump {
        #[serde(default)]
        center: P2,
        #[serde(default = "one")]
        radius: f64,
        budget: f64,
        #[serde(default)]
        loop_center: Option<P2>,
        #[serde(default = "sides")]
        sides: usize,
        inside: Vec<f64>,
        outside: Vec<f64>,
    },
    /// Half-angle vortex around the inner end of a slit of length `budget` reaching the boundary.
    SphereVortexWithSlit {
        #[serde(default)]
        center: P2,
        #[serde(default = "one")]
        radius: f64,
        budget: f64,
        #[serde(default)]
        angle: Option<f64>,
    },
    /// Smooth random bulk with a random star-shaped loop of perimeter `budget` across which it jumps.
    RandomCellsWithRandomPolyline {
        #[serde(default)]
        center: P2,
        #[serde(default = "one")]
        radius: f64,
        budget: f64,
        #[serde(default = "two")]
        k: usize,
        #[serde(default = "twelve")]
        vertices: usize,
        #[serde(default = "half")]
        amplitude: f64,
        #[serde(default = "one")]
        jump_scale: f64,
        #[serde(default)]
        loop_center: Option<P2>,
    },
}

impl SynthSpec {
    pub fn budget(&self) -> f64 {
        match self {
            SynthSpec::Affine { .. } => 0.0,
            SynthSpec::PiecewiseConstantWithArcJump { budget, .. }
            | SynthSpec::SphereVortexWithSlit { budget, .. }
            | SynthSpec::RandomCellsWithRandomPolyline { budget, .. } => *budget,
        }
    }

    pub fn domain(&self) -> Disk {
        match self {
            SynthSpec::Affine { center, radius, .. }
            | SynthSpec::PiecewiseConstantWithArcJump { center, radius, .. }
            | SynthSpec::SphereVortexWithSlit { center, radius, .. }
            | SynthSpec::RandomCellsWithRandomPolyline { center, radius, .. } => Disk::new(*center, *radius),
        }
    }
}

fn place(rng: &mut ChaCha8Rng, d: Disk, reach: f64, budget: f64, given: Option<P2>) -> Result<P2> {
    let room = d.r * (1.0 - 1e-6) - reach;
    if room <= 0.0 {
        return Err(SbvError::Budget { budget, radius: d.r });
    }
    match given {
        Some(c) if c.dist(d.c) < room => Ok(c),
        Some(_) => Err(SbvError::Params("loop does not fit inside the domain".into())),
        None => Ok(d.c + P2::polar(room * rng.gen::<f64>().sqrt(), TAU * rng.gen::<f64>())),
    }
}

/// Half-angle vortex about c with slit direction d: value and gradient.
pub fn vortex(c: P2, d: P2, x: P2) -> (Vec<f64>, Vec<[f64; 2]>) {
    let q = x - c;
    let r = q.norm();
    let mut phi = d.cross(q).atan2(d.dot(q));
    if phi < 0.0 {
        phi += TAU;
    }
    let dp = d.perp();
    let v = d * (phi / 2.0).cos() + dp * (phi / 2.0).sin();
    let dv = (d * (-(phi / 2.0).sin()) + dp * (phi / 2.0).cos()) * 0.5;
    let et = if r > 0.0 { q.perp() * (1.0 / (r * r)) } else { P2::ZERO };
    (vec![v.x, v.y], vec![[dv.x * et.x, dv.x * et.y], [dv.y * et.x, dv.y * et.y]])
}

pub fn synthesize(spec: &SynthSpec, seed: u64) -> Result<DiscreteSbvMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dom = spec.domain();
    if !(dom.r > 0.0) {
        return Err(SbvError::Params("radius must be positive".into()));
    }
    let budget = spec.budget();
    if budget < 0.0 || !budget.is_finite() {
        return Err(SbvError::Budget { budget, radius: dom.r });
    }
    match spec {
        SynthSpec::Affine { value, grad, .. } => {
            if value.len() != grad.len() || value.is_empty() {
                return Err(SbvError::Dimension("affine value/gradient".into()));
            }
            let f = |x: P2| {
                let d = x - dom.c;
                (value.iter().zip(grad).map(|(v, g)| v + g[0] * d.x + g[1] * d.y).collect(), grad.clone())
            };
            let lp = StarLoop::regular(dom.c, dom.r / 2.0, 16, 0.0);
            build(&lp, dom, value.len(), Target::Rk, &Bulk::Exact { f: &f, normalize: None }, JumpSet::default())
        }
        SynthSpec::PiecewiseConstantWithArcJump { budget, loop_center, sides, inside, outside, .. } => {
            if inside.len() != outside.len() || inside.is_empty() {
                return Err(SbvError::Dimension("inside/outside values".into()));
            }
            if *sides < 3 || *budget <= 0.0 {
                return Err(SbvError::Params("need at least 3 sides and a positive budget".into()));
            }
            let n = *sides as f64;
            let r = budget / (2.0 * n * (PI / n).sin());
            let c = place(&mut rng, dom, r, *budget, *loop_center)?;
            let lp = StarLoop::regular(c, r, *sides, TAU * rng.gen::<f64>());
            let out = outside.clone();
            let f = move |_: P2| out.clone();
            let offset: Vec<f64> = inside.iter().zip(outside).map(|(a, b)| a - b).collect();
            let jump = loop_jump(&lp, &f, &offset);
            build(&lp, dom, inside.len(), Target::Rk, &Bulk::P1 { f: &f, offset: Some(offset) }, jump)
        }
        SynthSpec::SphereVortexWithSlit { budget, angle, .. } => {
            if *budget <= 0.0 || *budget >= 2.0 * dom.r {
                return Err(SbvError::Budget { budget: *budget, radius: dom.r });
            }
            let th = angle.unwrap_or_else(|| TAU * rng.gen::<f64>());
            let d = P2::polar(1.0, th);
            let c = dom.c + d * (dom.r - budget);
            let r0 = budget.min(dom.r) / 2.0;
            let lp = StarLoop::regular(c, r0, 32, th);
            let end = dom.c + d * dom.r;
            let mesh = super::mesh::star_mesh(&lp, dom);
            let mut pts = vec![c];
            for l in &mesh.layers {
                if l[0].dist(c) < budget * (1.0 - 1e-12) {
                    pts.push(l[0]);
                }
            }
            pts.push(end);
            let segments = pts.windows(2).map(|w| JumpSeg::new(w[0], w[1], vec![d.x, d.y], vec![-d.x, -d.y])).collect();
            let f = move |x: P2| vortex(c, d, x);
            build(&lp, dom, 2, Target::Sphere, &Bulk::Exact { f: &f, normalize: Some(1.0) }, JumpSet { segments })
        }
        SynthSpec::RandomCellsWithRandomPolyline { budget, k, vertices, amplitude, jump_scale, loop_center, .. } => {
            if *k == 0 || *vertices < 3 {
                return Err(SbvError::Params("k ≥ 1 and at least 3 loop vertices".into()));
            }
            let a: Vec<f64> = (0..*k).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b: Vec<[f64; 2]> = (0..*k).map(|_| [amplitude * rng.gen_range(-1.0..1.0), amplitude * rng.gen_range(-1.0..1.0)]).collect();
            let w: Vec<(P2, f64, f64)> = (0..*k)
                .map(|_| {
                    (P2::polar(3.0 / dom.r * rng.gen::<f64>(), TAU * rng.gen::<f64>()), amplitude * rng.gen::<f64>(), TAU * rng.gen::<f64>())
                })
                .collect();
            let (dc, rr) = (dom.c, dom.r);
            let f = move |x: P2| -> Vec<f64> {
                let y = (x - dc) * (1.0 / rr);
                (0..a.len()).map(|i| a[i] + b[i][0] * y.x + b[i][1] * y.y + w[i].1 * (w[i].0.dot(x - dc) + w[i].2).sin()).collect()
            };
            if *budget == 0.0 {
                let lp = StarLoop::regular(dom.c, dom.r / 2.0, 16, 0.0);
                return build(&lp, dom, *k, Target::Rk, &Bulk::P1 { f: &f, offset: None }, JumpSet::default());
            }
            let n = *vertices;
            let raw: Vec<P2> = (0..n)
                .map(|i| {
                    let th = TAU * (i as f64 + 0.6 * (rng.gen::<f64>() - 0.5)) / n as f64;
                    P2::polar(1.0 + 0.5 * rng.gen::<f64>(), th)
                })
                .collect();
            let unit = StarLoop { c: P2::ZERO, verts: raw };
            let s = budget / unit.perimeter();
            let reach = unit.max_dist() * s;
            let c = place(&mut rng, dom, reach, *budget, *loop_center)?;
            let lp = StarLoop { c, verts: unit.verts.iter().map(|v| c + *v * s).collect() };
            let dir = TAU * rng.gen::<f64>();
            let mag = jump_scale * rng.gen_range(0.5..1.5);
            let offset: Vec<f64> = (0..*k).map(|i| if i == 0 { mag * dir.cos() } else if i == 1 { mag * dir.sin() } else { 0.0 }).collect();
            let offset = if *k == 1 { vec![mag] } else { offset };
            let jump = loop_jump(&lp, &f, &offset);
            build(&lp, dom, *k, Target::Rk, &Bulk::P1 { f: &f, offset: Some(offset) }, jump)
        }
    }
}
