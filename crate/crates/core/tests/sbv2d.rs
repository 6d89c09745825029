use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sbvpx::geom::{Disk, Region, Shape, P2};
use sbvpx::sbv2d::*;
use std::f64::consts::PI;

fn unit_disk() -> Region {
    Region::disk(Disk::new(P2::ZERO, 1.0))
}

fn half_plane(x0: f64, left: bool) -> Shape {
    let s = 10.0;
    if left {
        Shape::poly(vec![P2::new(x0 - s, -s), P2::new(x0, -s), P2::new(x0, s), P2::new(x0 - s, s)])
    } else {
        Shape::poly(vec![P2::new(x0, -s), P2::new(x0 + s, -s), P2::new(x0 + s, s), P2::new(x0, s)])
    }
}

/// Two constant halves split by the vertical diameter.
fn step_map(radius: f64, left: Vec<f64>, right: Vec<f64>) -> DiscreteSbvMap {
    let d = Region::disk(Disk::new(P2::ZERO, radius));
    let mk = |side: bool, v: &Vec<f64>| {
        let region = d.clone().with(half_plane(0.0, side), true);
        let anchor = region.area_centroid().1.unwrap();
        Cell { region, anchor, value: v.clone(), grad: vec![[0.0, 0.0]; v.len()], normalize: None, shift: None, inner: None }
    };
    let cells = vec![mk(true, &left), mk(false, &right)];
    let jump = JumpSet::new(vec![JumpSeg::new(P2::new(0.0, -radius), P2::new(0.0, radius), left.clone(), right.clone())]).unwrap();
    DiscreteSbvMap::new(P2::ZERO, radius, left.len(), Target::Rk, cells, jump).unwrap()
}

fn affine(center: P2, radius: f64, value: Vec<f64>, grad: Vec<[f64; 2]>) -> DiscreteSbvMap {
    synthesize(&SynthSpec::Affine { center, radius, value, grad }, 0).unwrap()
}

#[test]
fn empty_jump_has_zero_length() {
    let u = affine(P2::ZERO, 1.0, vec![1.0], vec![[0.0, 0.0]]);
    assert_eq!(u.jump_length(&unit_disk()), 0.0);
}

#[test]
fn diameter_fully_contained() {
    let u = step_map(1.0, vec![0.0], vec![1.0]);
    assert!((u.jump_length(&unit_disk()) - 2.0).abs() < 1e-14);
}

#[test]
fn annulus_clipping_matches_monte_carlo() {
    let (r_out, delta) = (0.8, 0.15);
    let ann = Region::annulus(P2::ZERO, r_out - delta, r_out);
    let th: f64 = 0.7;
    let a = P2::new(-0.2, -0.9);
    let b = a + P2::polar(1.9, th);
    let seg = JumpSeg::new(a, b, vec![1.0], vec![0.0]);
    let exact = ann.clipped_length(seg.a, seg.b);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 1_000_000;
    let hits = (0..n)
        .filter(|_| {
            let p = a.lerp(b, rng.gen::<f64>());
            let r = p.norm();
            r <= r_out && r >= r_out - delta
        })
        .count();
    let mc = hits as f64 / n as f64 * a.dist(b);
    assert!(exact > 0.0);
    assert!((mc - exact).abs() / exact < 0.005, "exact {exact} mc {mc}");
}

#[test]
fn tv_of_constant_is_zero() {
    let u = affine(P2::ZERO, 1.0, vec![0.3, -0.2], vec![[0.0, 0.0], [0.0, 0.0]]);
    assert_eq!(u.total_variation_parts(&unit_disk()), (0.0, 0.0));
}

#[test]
fn tv_of_unit_jump_of_norm_three() {
    let u = step_map(0.5, vec![3.0, 0.0], vec![0.0, 0.0]);
    let (b, j) = u.total_variation_parts(&Region::disk(Disk::new(P2::ZERO, 0.5)));
    assert_eq!(b, 0.0);
    assert!((j - 3.0).abs() < 1e-14);
}

#[test]
fn tv_of_affine() {
    let g = vec![[0.3, -0.4], [1.2, 0.5]];
    let nrm = (0.09f64 + 0.16 + 1.44 + 0.25).sqrt();
    let u = affine(P2::ZERO, 0.7, vec![0.1, 0.2], g);
    let (b, j) = u.total_variation_parts(&Region::disk(Disk::new(P2::ZERO, 0.7)));
    assert!((b - nrm * PI * 0.49).abs() < 1e-12);
    assert_eq!(j, 0.0);
}

#[test]
fn poincare_constant_and_step() {
    let u = affine(P2::ZERO, 1.0, vec![2.0], vec![[0.0, 0.0]]);
    assert_eq!(u.bv_poincare_check(&unit_disk()).unwrap().0, 0.0);
    let s = step_map(1.0, vec![0.0], vec![1.0]);
    let (lhs, ratio) = s.bv_poincare_check(&unit_disk()).unwrap();
    assert!((lhs - PI / 2.0).abs() < 1e-12, "{lhs}");
    assert!((ratio - PI / 8.0).abs() < 1e-12, "{ratio}");
}

#[test]
fn poincare_affine_on_square_matches_grid_oracle() {
    let g = [0.8, -0.5];
    let u = affine(P2::new(0.5, 0.5), 1.0, vec![0.3], vec![g]);
    let sq = Region::polygon(vec![P2::new(0.0, 0.0), P2::new(1.0, 0.0), P2::new(1.0, 1.0), P2::new(0.0, 1.0)]);
    let (lhs, ratio) = u.bv_poincare_check(&sq).unwrap();
    // mean over the square is the value at its center
    let n = 2000;
    let h = 1.0 / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = (i as f64 + 0.5) * h - 0.5;
            let y = (j as f64 + 0.5) * h - 0.5;
            acc += (g[0] * x + g[1] * y).abs() * h * h;
        }
    }
    let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
    let oracle = acc / (2f64.sqrt() * gn);
    assert!((lhs - acc).abs() < 1e-6, "{lhs} vs {acc}");
    assert!((ratio - oracle).abs() < 1e-6);
}

#[test]
fn poincare_rejects_inconsistent_map() {
    let d = Region::disk(Disk::new(P2::ZERO, 1.0));
    let mk = |side: bool, v: f64| {
        let region = d.clone().with(half_plane(0.0, side), true);
        let anchor = region.area_centroid().1.unwrap();
        Cell { region, anchor, value: vec![v], grad: vec![[0.0, 0.0]], normalize: None, shift: None, inner: None }
    };
    let u = DiscreteSbvMap::new(P2::ZERO, 1.0, 1, Target::Rk, vec![mk(true, 0.0), mk(false, 1.0)], JumpSet::default()).unwrap();
    assert_eq!(u.bv_poincare_check(&d), Err(SbvError::Inconsistent));
}

#[test]
fn synth_affine_has_gradient_everywhere() {
    let g = vec![[0.3, 0.1], [-0.2, 0.4]];
    let u = affine(P2::ZERO, 1.0, vec![1.0, 0.0], g.clone());
    assert_eq!(u.jump_length(&unit_disk()), 0.0);
    assert!(u.cells.iter().all(|c| c.grad == g));
}

#[test]
fn synth_arc_jump_budget() {
    for seed in 0..10 {
        let spec = SynthSpec::PiecewiseConstantWithArcJump {
            center: P2::ZERO,
            radius: 1.0,
            budget: 0.3,
            loop_center: None,
            sides: 32,
            inside: vec![1.0, 0.0],
            outside: vec![0.0, 1.0],
        };
        let u = synthesize(&spec, seed).unwrap();
        assert!((u.jump_length(&unit_disk()) - 0.3).abs() < 0.003);
    }
}

#[test]
fn synth_budget_too_large() {
    let spec = SynthSpec::PiecewiseConstantWithArcJump {
        center: P2::ZERO,
        radius: 1.0,
        budget: 7.0,
        loop_center: None,
        sides: 32,
        inside: vec![1.0],
        outside: vec![0.0],
    };
    assert!(matches!(synthesize(&spec, 1), Err(SbvError::Budget { .. })));
    let v = SynthSpec::SphereVortexWithSlit { center: P2::ZERO, radius: 1.0, budget: 2.5, angle: None };
    assert!(matches!(synthesize(&v, 1), Err(SbvError::Budget { .. })));
}

#[test]
fn synth_vortex_is_sphere_valued() {
    let u = synthesize(&SynthSpec::SphereVortexWithSlit { center: P2::ZERO, radius: 1.0, budget: 0.4, angle: None }, 3).unwrap();
    assert!((u.jump_length(&unit_disk()) - 0.4).abs() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..2000 {
        let x = P2::polar(rng.gen::<f64>().sqrt(), 6.3 * rng.gen::<f64>());
        let v = u.eval(x).unwrap();
        assert!((vnorm(&v) - 1.0).abs() < 1e-9);
    }
}

#[test]
fn synth_random_budget_and_determinism() {
    for seed in 0..10 {
        let spec = SynthSpec::RandomCellsWithRandomPolyline {
            center: P2::new(0.2, -0.1),
            radius: 1.5,
            budget: 0.5,
            k: 3,
            vertices: 12,
            amplitude: 0.5,
            jump_scale: 1.0,
            loop_center: None,
        };
        let u = synthesize(&spec, seed).unwrap();
        let dom = Region::disk(Disk::new(P2::new(0.2, -0.1), 1.5));
        assert!((u.jump_length(&dom) - 0.5).abs() < 0.005);
        assert_eq!(u.to_json(), synthesize(&spec, seed).unwrap().to_json());
    }
}

#[test]
fn dilation_covariance() {
    let spec = SynthSpec::RandomCellsWithRandomPolyline {
        center: P2::ZERO,
        radius: 1.0,
        budget: 0.6,
        k: 2,
        vertices: 9,
        amplitude: 0.5,
        jump_scale: 1.0,
        loop_center: None,
    };
    let u = synthesize(&spec, 7).unwrap();
    let (x0, s) = (P2::new(0.3, -1.1), 2.5);
    let v = u.dilate(x0, s);
    let big = Region::disk(Disk::new(x0, s * 1.0));
    assert!((v.jump_length(&big) - s * u.jump_length(&unit_disk())).abs() < 1e-12);
    for (a, b) in u.cells.iter().zip(&v.cells) {
        assert!((b.region.area() - s * s * a.region.area()).abs() < 1e-12 * (1.0 + b.region.area()));
    }
}

#[test]
fn tv_additive_over_disjoint_regions() {
    let spec = SynthSpec::RandomCellsWithRandomPolyline {
        center: P2::ZERO,
        radius: 1.0,
        budget: 0.8,
        k: 2,
        vertices: 10,
        amplitude: 0.5,
        jump_scale: 1.0,
        loop_center: None,
    };
    let u = synthesize(&spec, 2).unwrap();
    let inner = Region::disk(Disk::new(P2::ZERO, 0.45));
    let ring = Region::annulus(P2::ZERO, 0.45, 1.0);
    let whole = u.total_variation(&unit_disk());
    let parts = u.total_variation(&inner) + u.total_variation(&ring);
    assert!((whole - parts).abs() < 1e-10 * whole);
}

#[test]
fn poincare_ratio_bounded_on_corpus() {
    let mut worst = 0.0_f64;
    for seed in 0..100 {
        let spec = SynthSpec::RandomCellsWithRandomPolyline {
            center: P2::ZERO,
            radius: 1.0,
            budget: 0.2 + 0.02 * (seed % 20) as f64,
            k: 2,
            vertices: 8,
            amplitude: 0.5,
            jump_scale: 1.0,
            loop_center: None,
        };
        let u = synthesize(&spec, seed).unwrap();
        let (_, r) = u.bv_poincare_check(&unit_disk()).unwrap();
        assert!(r.is_finite());
        worst = worst.max(r);
    }
    println!("empirical C(2,k) over corpus: {worst:.4}");
    assert!(worst < 0.5);
}

#[test]
fn json_round_trip_and_rejects_degenerate() {
    let u = step_map(1.0, vec![0.0], vec![1.0]);
    let v = DiscreteSbvMap::from_json(&u.to_json()).unwrap();
    assert_eq!(v.to_json(), u.to_json());
    assert_eq!(v.eval(P2::new(-0.5, 0.0)), Some(vec![0.0]));
    assert!(JumpSet::new(vec![JumpSeg::new(P2::ZERO, P2::ZERO, vec![1.0], vec![0.0])]).is_err());
    assert!(JumpSet::new(vec![JumpSeg::new(P2::ZERO, P2::new(1.0, 0.0), vec![1.0], vec![1.0])]).is_err());
    assert!(u.to_svg(200.0).starts_with("<svg"));
}
