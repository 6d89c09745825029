mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sbvpx::energy::*;
use sbvpx::geom::P2;
use sbvpx::sbv2d::{synthesize, vdist, SynthSpec};
use std::f64::consts::{PI, TAU};

fn vortex() -> sbvpx::sbv2d::DiscreteSbvMap {
    synthesize(&SynthSpec::SphereVortexWithSlit { center: P2::ZERO, radius: 1.0, budget: 0.4, angle: Some(0.3) }, 0).unwrap()
}

#[test]
fn constant_map_has_zero_energy() {
    let u = constant_map(vec![0.0, 1.0]);
    let e = functional(&u, &p_affine(), 1.0, &u.domain()).unwrap();
    assert_eq!((e.bulk, e.jump, e.total), (0.0, 0.0, 0.0));
}

#[test]
fn straight_jump_energy_is_its_length() {
    let u = halves(false);
    let e = functional(&u, &p_const(1.5), 1.0, &u.domain()).unwrap();
    assert_eq!(e.bulk, 0.0);
    assert!((e.total - 2.0).abs() < 1e-12);
    let e = ball_energy(&u, &p_const(1.5), 3.0, P2::new(0.1, 0.0), 0.3).unwrap();
    assert!((e.total - 1.8).abs() < 1e-12);
    assert_eq!(e.total, e.bulk + e.jump);
    assert!(functional(&u, &p_const(1.5), 0.0, &u.domain()).is_err());
    assert!(matches!(ball_energy(&u, &p_const(1.5), 1.0, P2::new(0.5, 0.0), 0.6), Err(EnergyError::OutsideDomain { .. })));
}

#[test]
fn energy_is_monotone_in_the_radius() {
    let p = p_affine();
    for seed in 0..50 {
        let u = random_polyline(seed, 0.8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = P2::polar(0.5 * rng.gen::<f64>(), TAU * rng.gen::<f64>());
        let mut last = 0.0;
        for i in 1..=8 {
            let r = 0.45 * i as f64 / 8.0;
            let e = ball_energy(&u, &p, 1.0, x, r).unwrap();
            assert!(e.bulk >= 0.0 && e.jump >= 0.0);
            assert!(e.total >= last * (1.0 - 1e-12), "seed {seed} r {r}: {} < {last}", e.total);
            last = e.total;
        }
    }
}

#[test]
fn deviation_against_itself_is_zero() {
    let u = halves(true);
    let d = deviation(&u, &p_const(1.5), 1.0, P2::ZERO, 0.5, &[u.clone()], 1.0).unwrap();
    assert_eq!(d.value, 0.0);
}

#[test]
fn straightening_a_wiggle_gains_its_excess_length() {
    let (u, v) = (halves(true), halves(false));
    let p = p_const(1.5);
    let d = deviation(&u, &p, 1.0, P2::ZERO, 0.5, &[v.clone()], 1.0).unwrap();
    let direct = ball_energy(&u, &p, 1.0, P2::ZERO, 0.5).unwrap().total - ball_energy(&v, &p, 1.0, P2::ZERO, 0.5).unwrap().total;
    assert!((d.value - direct).abs() < 1e-14);
    assert!((d.value - (2.0 * 0.25 - 0.4)).abs() < 1e-12, "{}", d.value);
}

#[test]
fn deviation_rejects_inadmissible_competitors() {
    let u = halves(true);
    let p = p_const(1.5);
    let flipped = halves(false).scale_values(-1.0);
    let e = deviation(&u, &p, 1.0, P2::ZERO, 0.5, &[u.clone(), flipped], 1.0).unwrap_err();
    assert!(matches!(e, EnergyError::Competitor { index: 1, .. }), "{e}");
    let mut shrunk = upper_bound_competitor(&u, P2::new(0.0, -0.5), 0.3, 0.2).unwrap().map;
    let last = shrunk.cells.len() - 1;
    shrunk.cells[last].value = vec![0.0, 0.5];
    let e = deviation(&u, &p, 1.0, P2::new(0.0, -0.5), 0.3, &[shrunk], 1.0).unwrap_err();
    assert!(matches!(e, EnergyError::Competitor { index: 0, .. }), "{e}");
}

#[test]
fn constants_are_minimal() {
    let u = constant_map(vec![1.0, 0.0]);
    let comps: Vec<_> = [0.1, 0.2, 0.3].iter().map(|&r| upper_bound_competitor(&u, P2::new(0.1, 0.2), 0.4, r).unwrap().map).collect();
    let d = deviation(&u, &p_affine(), 1.0, P2::new(0.1, 0.2), 0.4, &comps, 1.0).unwrap();
    assert_eq!(d.value, 0.0);
    assert!(d.energies.iter().all(|e| *e > 0.0));
}

#[test]
fn north_pole_competitor_of_north_pole_is_itself() {
    let u = constant_map(vec![0.0, 0.0, 1.0]);
    let c = upper_bound_competitor(&u, P2::ZERO, 0.5, 0.3).unwrap();
    assert_eq!(c.added_jump, 0.0);
    assert!(c.map.jump.is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let x = P2::polar(0.99 * rng.gen::<f64>().sqrt(), TAU * rng.gen::<f64>());
        assert_eq!(c.map.eval(x).unwrap(), u.eval(x).unwrap());
    }
}

#[test]
fn south_pole_competitor_jumps_on_the_whole_circle() {
    let u = constant_map(vec![0.0, -1.0]);
    let (r, ri) = (0.5, 0.3);
    let c = upper_bound_competitor(&u, P2::new(0.2, 0.1), r, ri).unwrap();
    let n = COMPETITOR_SIDES as f64;
    assert!((c.added_jump - 2.0 * n * ri * (PI / n).sin()).abs() < 1e-12);
    assert!((c.added_jump - TAU * ri).abs() < 2e-6 * TAU * ri);
    assert!((c.map.jump_length(&ball(P2::new(0.2, 0.1), r)) - c.added_jump).abs() < 1e-12);
}

#[test]
fn vortex_competitor_jump_is_bounded() {
    let u = vortex();
    let p = p_const(1.5);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10 {
        let x = P2::polar(0.4 * rng.gen::<f64>(), TAU * rng.gen::<f64>());
        let r = 0.2 + 0.3 * rng.gen::<f64>();
        let ri = r * (0.2 + 0.7 * rng.gen::<f64>());
        let c = upper_bound_competitor(&u, x, r, ri).unwrap();
        let measured = c.map.jump_length(&ball(x, r));
        let ring = u.jump_length(&sbvpx::geom::Region::annulus(x, ri, r));
        assert!(measured <= TAU * ri + ring + 1e-5 * r, "{measured} vs {}", TAU * ri + ring);
        let f_v = ball_energy(&c.map, &p, 1.0, x, r).unwrap().total;
        let f_u = ball_energy(&u, &p, 1.0, x, r).unwrap().total;
        let kappa = ((f_u - f_v) / (r * r)).max(0.0);
        assert!(energy_upper_bound_check(&u, &p, 1.0, x, r, ri, kappa).unwrap().holds);
    }
}

#[test]
fn competitor_needs_sphere_values() {
    let u = synthesize(&SynthSpec::Affine { center: P2::ZERO, radius: 1.0, value: vec![0.7, 0.0], grad: vec![[0.1, 0.0], [0.0, 0.1]] }, 0).unwrap();
    assert!(matches!(upper_bound_competitor(&u, P2::ZERO, 0.5, 0.2), Err(EnergyError::NotSphere(_))));
}

#[test]
fn identity_blowup() {
    let u = random_polyline(3, 1.0);
    let p = p_affine();
    let f = blowup(&u, &p, P2::ZERO, 1.0, 0.5, 1000, 0).unwrap();
    for (a, b) in f.u_tilde.cells.iter().zip(&u.cells) {
        assert_eq!(a.value, b.value);
        assert_eq!(a.grad, b.grad);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..200 {
        let y = P2::polar(0.99 * rng.gen::<f64>().sqrt(), TAU * rng.gen::<f64>());
        assert_eq!(p.rescaled(P2::ZERO, 1.0).eval(y), p.eval(y));
        assert!(vdist(&f.u_tilde.eval(y).unwrap(), &u.eval(y).unwrap()) < 1e-14);
    }
    assert!(f.jump_gap < 1e-12);
}

#[test]
fn blowup_rescales_jump_length() {
    let u = halves(false);
    let (x, s) = (P2::new(0.1, 0.0), 0.25);
    let f = blowup(&u, &p_const(1.5), x, s, 0.1, 100, 0).unwrap();
    assert!((f.jump_out - 0.5).abs() < 1e-15);
    assert!((f.jump_in - 0.5 / s).abs() < 1e-12);
    assert!(f.jump_gap < 1e-12);
    assert!(blowup(&u, &p_const(1.5), P2::new(0.9, 0.0), 0.2, 0.1, 100, 0).is_err());
}

#[test]
fn blowup_amplitude_formula() {
    let u = vortex();
    for (s, eps, pv) in [(0.1, 0.01, 1.5), (0.5, 0.2, 1.2), (0.03, 1e-3, 1.9)] {
        let f = blowup(&u, &p_const(pv), P2::new(0.1, -0.1), s, eps, 10, 0).unwrap();
        let direct = ((s / eps) as f64).powf(1.0 / pv) / s;
        assert!((f.t - direct).abs() <= 1e-14 * direct);
        assert_eq!(f.gamma, 1.0 / eps);
        let x = P2::new(0.3, 0.2);
        assert!(vdist(&f.v.eval(x).unwrap(), &f.u_tilde.eval(x).unwrap().iter().map(|v| v * f.t).collect::<Vec<_>>()) < 1e-12 * f.t);
    }
}

#[test]
fn blowup_checks_hold_for_lipschitz_exponent() {
    let u = random_polyline(5, 1.0);
    let p = p_affine();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..20 {
        let s = 0.02 + 0.3 * rng.gen::<f64>();
        let x = P2::polar((0.95 - s) * rng.gen::<f64>(), TAU * rng.gen::<f64>());
        let f = blowup(&u, &p, x, s, 0.1, 20_000, i).unwrap();
        for c in f.checks(&p) {
            assert!(c.holds, "{c:?}");
        }
    }
    let (prof, strong) = rescaled_exponent_profile(&p, P2::new(0.1, 0.1), &[1, 2, 3, 4, 5, 6]);
    assert!(strong);
    assert!(prof.windows(2).all(|w| w[1].1 < w[0].1));
}

#[test]
fn affine_map_is_not_in_jump() {
    let u = synthesize(&SynthSpec::Affine { center: P2::ZERO, radius: 1.0, value: vec![0.2, 0.1], grad: vec![[0.5, 0.2], [-0.1, 0.4]] }, 0).unwrap();
    let pr = jump_criterion_profile(&u, &p_const(1.5), P2::new(0.2, 0.3), &PROBE_RADII, &CriterionConfig::default()).unwrap();
    assert_eq!(pr.verdict, Verdict::NotInJump);
    assert!((pr.slope.unwrap() - 1.0).abs() < 1e-9);
    // F/ρ = |G|^p πρ
    let g: f64 = (0.25f64 + 0.04 + 0.01 + 0.16).sqrt();
    for (r, v) in &pr.profile {
        assert!((v - g.powf(1.5) * PI * r).abs() < 1e-12);
    }
}

#[test]
fn jump_point_is_a_candidate() {
    let u = halves(false);
    let pr = jump_criterion_profile(&u, &p_const(1.5), P2::new(-0.3, 0.0), &PROBE_RADII, &CriterionConfig::default()).unwrap();
    assert_eq!(pr.verdict, Verdict::InJumpCandidate);
    assert!(pr.profile.iter().all(|(_, v)| (v - 2.0).abs() < 1e-10), "{:?}", pr.profile);
}

#[test]
fn criterion_input_errors() {
    let u = halves(false);
    let cfg = CriterionConfig::default();
    assert!(matches!(jump_criterion_profile(&u, &p_const(1.5), P2::ZERO, &[0.1, 0.05, 0.02], &cfg), Err(EnergyError::TooFewRadii { .. })));
    assert!(matches!(jump_criterion_profile(&u, &p_const(1.5), P2::ZERO, &[0.1, 0.05, 0.05, 0.01], &cfg), Err(EnergyError::Params(_))));
}

#[test]
fn labeled_corpus_verdicts() {
    let p = p_affine();
    let cfg = CriterionConfig::default();
    let mut inconclusive = 0;
    for seed in 0..50 {
        let u = random_polyline(seed, 1.0);
        for (x, label) in labeled_points(&u, seed) {
            let v = jump_criterion_profile(&u, &p, x, &PROBE_RADII, &cfg).unwrap().verdict;
            match label {
                Label::OnJump => assert_eq!(v, Verdict::InJumpCandidate, "seed {seed} {x:?}"),
                Label::OffJump => assert_eq!(v, Verdict::NotInJump, "seed {seed} {x:?}"),
                Label::Borderline => {
                    assert_ne!(v, Verdict::InJumpCandidate, "seed {seed} {x:?}");
                    inconclusive += usize::from(v == Verdict::Inconclusive);
                }
            }
        }
    }
    println!("borderline inconclusive: {inconclusive}");
}

#[test]
fn density_on_straight_jump() {
    let u = halves(false);
    let cfg = DensityProbeConfig { delta: 0.2, theta: 1.0, rho_max: 0.1, kappa: 0.0, levels: 5, c: 1.0 };
    let pts = [P2::new(-0.3, 0.0), P2::new(0.0, 0.0), P2::new(0.5, 0.0)];
    let r = density_probe(&u, &p_const(1.5), &cfg, &pts).unwrap();
    assert_eq!(r.entries.len(), 15);
    assert!(r.entries.iter().all(|e| e.ratio >= 2.0 - 1e-12));
    assert_eq!(r.violations, 0);
    let off = density_probe(&u, &p_const(1.5), &DensityProbeConfig { rho_max: 0.05, ..cfg.clone() }, &[P2::new(0.0, 0.1)]).unwrap();
    assert!(off.entries.iter().all(|e| e.ratio == 0.0 && e.violates));
    assert!(density_probe(&u, &p_const(1.5), &cfg, &[P2::new(0.9, 0.0)]).is_err());
}

fn theta_hat(base: u64) -> f64 {
    let p = p_affine();
    let cfg = DensityProbeConfig { delta: 0.05, theta: 1.0, rho_max: 0.02, kappa: 1.0, levels: 4, c: 1.0 };
    (0..30)
        .map(|i| {
            let u = random_polyline(base + i, 1.0);
            let pts: Vec<P2> = jump_sample_points(&u.jump, 10, 0.0).into_iter().filter(|x| x.norm() < 0.95).collect();
            density_probe(&u, &p, &cfg, &pts).unwrap().theta_hat
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn density_theta_hat_is_stable() {
    let (a, b) = (theta_hat(0), theta_hat(1000));
    println!("theta_hat {a} {b}");
    assert!(a >= 1.0 && b >= 1.0);
    assert!((a - b).abs() <= 0.15 * a.min(b));
}
