//! Star meshes conforming to a star-shaped loop.

use super::{Cell, DiscreteSbvMap, JumpSeg, JumpSet, Result, SbvError, Target};
use crate::geom::{point_seg_dist, Disk, Region, Shape, P2};

/// Closed loop, counter-clockwise and star-shaped about `c`.
#[derive(Clone, Debug)]
pub struct StarLoop {
    pub c: P2,
    pub verts: Vec<P2>,
}

impl StarLoop {
    pub fn regular(c: P2, r: f64, n: usize, phase: f64) -> Self {
        StarLoop { c, verts: crate::geom::regular_polygon(c, r, n, phase) }
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.verts.len();
        (0..n).map(|i| self.verts[i].dist(self.verts[(i + 1) % n])).sum()
    }

    pub fn min_dist(&self) -> f64 {
        let n = self.verts.len();
        (0..n).map(|i| point_seg_dist(self.c, self.verts[i], self.verts[(i + 1) % n])).fold(f64::INFINITY, f64::min)
    }

    pub fn max_dist(&self) -> f64 {
        self.verts.iter().map(|v| v.dist(self.c)).fold(0.0, f64::max)
    }

    pub fn edges(&self) -> impl Iterator<Item = (P2, P2)> + '_ {
        let n = self.verts.len();
        (0..n).map(move |i| (self.verts[i], self.verts[(i + 1) % n]))
    }
}

pub enum Bulk<'a> {
    /// Piecewise-linear interpolation of `f` at mesh vertices, plus `offset` inside the loop.
    P1 { f: &'a dyn Fn(P2) -> Vec<f64>, offset: Option<Vec<f64>> },
    /// Exact value and gradient at each cell anchor.
    Exact { f: &'a dyn Fn(P2) -> (Vec<f64>, Vec<[f64; 2]>), normalize: Option<f64> },
}

pub struct StarMesh {
    pub c: P2,
    /// Layer scale factors, inner to outer; layer 3 is the loop itself.
    pub t: Vec<f64>,
    /// layers[l][i] = c + t[l] (loop_i - c).
    pub layers: Vec<Vec<P2>>,
    pub tris: Vec<([P2; 3], bool)>,
}

pub const INNER_LAYERS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];
pub const OUTER_RATIO: f64 = 1.25;

pub fn star_mesh(lp: &StarLoop, domain: Disk) -> StarMesh {
    let t_max = (lp.c.dist(domain.c) + domain.r) / lp.min_dist() * 1.01;
    let mut t: Vec<f64> = INNER_LAYERS.to_vec();
    while *t.last().unwrap() < t_max {
        let next = t.last().unwrap() * OUTER_RATIO;
        t.push(next);
    }
    let layers: Vec<Vec<P2>> = t.iter().map(|&s| lp.verts.iter().map(|v| lp.c + (*v - lp.c) * s).collect()).collect();
    let n = lp.verts.len();
    let mut tris = Vec::new();
    for i in 0..n {
        tris.push(([lp.c, layers[0][i], layers[0][(i + 1) % n]], true));
    }
    for l in 0..layers.len() - 1 {
        let inside = t[l + 1] <= 1.0;
        let (a, b) = (&layers[l], &layers[l + 1]);
        for i in 0..n {
            let j = (i + 1) % n;
            tris.push(([a[i], b[i], b[j]], inside));
            tris.push(([a[i], b[j], a[j]], inside));
        }
    }
    StarMesh { c: lp.c, t, layers, tris }
}

/// Gradient of the affine map taking values v at the triangle p.
pub fn affine_through(p: &[P2; 3], v: &[Vec<f64>; 3]) -> Vec<[f64; 2]> {
    let e1 = p[1] - p[0];
    let e2 = p[2] - p[0];
    let det = e1.cross(e2);
    (0..v[0].len())
        .map(|c| {
            let d1 = v[1][c] - v[0][c];
            let d2 = v[2][c] - v[0][c];
            [(d1 * e2.y - d2 * e1.y) / det, (e1.x * d2 - e2.x * d1) / det]
        })
        .collect()
}

/// Cells of the mesh restricted to the domain.
pub fn mesh_cells(mesh: &StarMesh, domain: Disk, bulk: &Bulk) -> Vec<Cell> {
    let dshape = Shape::disk(domain);
    let mut cells = Vec::new();
    for (tri, inside) in &mesh.tris {
        let all_in = tri.iter().all(|v| v.dist(domain.c) <= domain.r * (1.0 - 1e-12));
        let region = if all_in {
            Region::polygon(tri.to_vec())
        } else {
            if (0..3).all(|i| point_seg_dist(domain.c, tri[i], tri[(i + 1) % 3]) >= domain.r) && !Region::polygon(tri.to_vec()).contains(domain.c) {
                continue;
            }
            Region::polygon(tri.to_vec()).with(dshape.clone(), true)
        };
        let (area, cen) = region.area_centroid();
        if area <= 1e-15 * domain.r * domain.r {
            continue;
        }
        let anchor = cen.unwrap();
        let cell = match bulk {
            Bulk::P1 { f, offset } => {
                let mut v = [f(tri[0]), f(tri[1]), f(tri[2])];
                if let (Some(o), true) = (offset, inside) {
                    for vv in v.iter_mut() {
                        vv.iter_mut().zip(o).for_each(|(a, b)| *a += b);
                    }
                }
                let grad = affine_through(tri, &v);
                let d = anchor - tri[0];
                let value = v[0].iter().zip(&grad).map(|(a, g)| a + g[0] * d.x + g[1] * d.y).collect();
                Cell { region, anchor, value, grad, normalize: None, shift: None, inner: None }
            }
            Bulk::Exact { f, normalize } => {
                let (value, grad) = f(anchor);
                Cell { region, anchor, value, grad, normalize: *normalize, shift: None, inner: None }
            }
        };
        cells.push(cell);
    }
    cells
}

/// Jump along the loop for a P1 bulk with an inside offset.
pub fn loop_jump(lp: &StarLoop, f: &dyn Fn(P2) -> Vec<f64>, offset: &[f64]) -> JumpSet {
    let segments = lp
        .edges()
        .map(|(a, b)| {
            let m = a.lerp(b, 0.5);
            let minus = f(m);
            let plus = minus.iter().zip(offset).map(|(x, o)| x + o).collect();
            JumpSeg::new(a, b, plus, minus)
        })
        .collect();
    JumpSet { segments }
}

pub fn build(
    lp: &StarLoop,
    domain: Disk,
    k: usize,
    target: Target,
    bulk: &Bulk,
    jump: JumpSet,
) -> Result<DiscreteSbvMap> {
    if lp.verts.len() < 3 {
        return Err(SbvError::Params("loop needs at least three vertices".into()));
    }
    let mesh = star_mesh(lp, domain);
    let cells = mesh_cells(&mesh, domain, bulk);
    DiscreteSbvMap::new(domain.c, domain.r, k, target, cells, jump)
}
