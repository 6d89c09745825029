//! Acceptance criteria 1 to 10. Each test prints one PASS/FAIL line to stderr.

mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sbvpx::counterex3d::{build_complex, r_grid, verify_violation};
use sbvpx::energy::{blowup, jump_criterion_profile, CriterionConfig, Verdict};
use sbvpx::geom::{Disk, Region, P2};
use sbvpx::retract::{project_w, shifted_gradient, RetractionConfig};
use sbvpx::sbv2d::{synthesize, vdist, vnorm, DiscreteSbvMap, SynthSpec};
use sbvpx::scenario::{corpus, load_scenario, parse_corpus, run};
use sbvpx::sobolev_approx::{global_approx, local_phi, LocalConfig};
use sbvpx::vexp::{luxembourg_norm, modular, ClosedExpr, ClosedForm, Domain, ExponentField, ExponentSpec};
use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::path::Path;
use std::time::Instant;

/// Modular-bound constant for the criterion 3 corpus, frozen from measurement.
const K_FROZEN: f64 = 1.05;
/// Retraction energy-ratio ceiling, frozen from measurement.
const C_HAT: f64 = 1.25;

const ETA: f64 = 0.05;

fn report(n: u32, title: &str, outcome: Result<String, String>) {
    let line = match &outcome {
        Ok(d) => format!("acceptance {n:>2} PASS  {title}: {d}"),
        Err(d) => format!("acceptance {n:>2} FAIL  {title}: {d}"),
    };
    let _ = writeln!(std::io::stderr(), "{line}");
    if let Err(d) = outcome {
        panic!("criterion {n} failed: {d}");
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn disk(c: P2, r: f64) -> Region {
    Region::disk(Disk::new(c, r))
}

fn points_in(c: P2, r: f64, n: usize, seed: u64) -> Vec<P2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| c + P2::polar(r * rng.gen::<f64>().sqrt(), TAU * rng.gen::<f64>())).collect()
}

fn unit3(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n = vnorm(&v);
        if n > 0.1 && n <= 1.0 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

fn tangent(rng: &mut ChaCha8Rng, v: &[f64; 3], scale: f64) -> [f64; 3] {
    let w = unit3(rng);
    let d = w[0] * v[0] + w[1] * v[1] + w[2] * v[2];
    [scale * (w[0] - d * v[0]), scale * (w[1] - d * v[1]), scale * (w[2] - d * v[2])]
}

#[test]
fn criterion_01_affine_exactness() {
    let run = || -> Result<String, String> {
        let mut worst: f64 = 0.0;
        let mut slowest: f64 = 0.0;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = unit3(&mut rng);
            let (s1, s2) = (rng.gen_range(0.1..1.0), rng.gen_range(0.1..1.0));
            let (t1, t2) = (tangent(&mut rng, &v, s1), tangent(&mut rng, &v, s2));
            let grad = (0..3).map(|c| [t1[c], t2[c]]).collect();
            let u = synthesize(&SynthSpec::Affine { center: P2::ZERO, radius: 1.0, value: v.to_vec(), grad }, seed).map_err(|e| e.to_string())?;
            let x0 = P2::polar(0.3 * rng.gen::<f64>(), TAU * rng.gen::<f64>());
            let r = rng.gen_range(0.15..0.3);
            let t = Instant::now();
            let res = local_phi(&u, x0, r, &p_const(1.5), ETA, seed, &LocalConfig::default()).map_err(|e| format!("seed {seed}: {e}"))?;
            let dt = t.elapsed().as_secs_f64();
            let err = points_in(x0, res.big_r, 2000, seed)
                .into_iter()
                .map(|x| vdist(&res.phi.eval(x).unwrap(), &u.eval(x).unwrap()))
                .fold(0.0, f64::max);
            ensure(err < 1e-10, || format!("seed {seed}: max error {err:e}"))?;
            ensure(dt < 1.0, || format!("seed {seed}: {dt:.2} s"))?;
            worst = worst.max(err);
            slowest = slowest.max(dt);
        }
        Ok(format!("20 maps, max error {worst:.2e} (< 1e-10), slowest {slowest:.3} s (< 1 s)"))
    };
    report(1, "affine exactness", run());
}

#[test]
fn criterion_02_piecewise_constant_collapse() {
    let run = || -> Result<String, String> {
        let mut worst: f64 = 0.0;
        let mut slowest: f64 = 0.0;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let x0 = P2::polar(0.3 * rng.gen::<f64>(), TAU * rng.gen::<f64>());
            let r = rng.gen_range(0.2..0.3);
            let lc = x0 + P2::polar(0.25 * r * rng.gen::<f64>(), TAU * rng.gen::<f64>());
            let budget = rng.gen_range(0.2..0.45) * ETA * 2.0 * r;
            let spec = SynthSpec::PiecewiseConstantWithArcJump {
                center: P2::ZERO,
                radius: 1.0,
                budget,
                loop_center: Some(lc),
                sides: 12,
                inside: vec![1.0, 0.0],
                outside: vec![0.0, 1.0],
            };
            let u = synthesize(&spec, seed).map_err(|e| e.to_string())?;
            let t = Instant::now();
            let res = local_phi(&u, x0, r, &p_affine(), ETA, seed, &LocalConfig::default()).map_err(|e| format!("seed {seed}: {e}"))?;
            let dt = t.elapsed().as_secs_f64();
            let hits = res.tri.edge_jump_intersections(&u.jump);
            ensure(hits == 0, || format!("seed {seed}: {hits} adapted edges cross the jump"))?;
            let ball = disk(x0, res.big_r);
            let gmax = res.phi.pieces(&ball).iter().map(|(i, _)| res.phi.cells[*i].grad_norm()).fold(0.0, f64::max);
            ensure(gmax < 1e-10, || format!("seed {seed}: max gradient {gmax:e}"))?;
            ensure(dt < 2.0, || format!("seed {seed}: {dt:.2} s"))?;
            worst = worst.max(gmax);
            slowest = slowest.max(dt);
        }
        Ok(format!("20 maps, max gradient {worst:.2e} (< 1e-10), slowest {slowest:.3} s (< 2 s)"))
    };
    report(2, "piecewise-constant collapse", run());
}

/// 50 maps with H¹(J_u) below η(1-s)ρ/2, cycling s over {0.5, 0.75, 0.9}.
fn cover_corpus() -> Vec<(DiscreteSbvMap, f64, u64)> {
    (0..50u64)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
            let s = [0.5, 0.75, 0.9][seed as usize % 3];
            let budget = rng.gen_range(0.3..0.9) * ETA * (1.0 - s) / 2.0;
            let spec = if seed % 5 == 4 {
                SynthSpec::PiecewiseConstantWithArcJump {
                    center: P2::ZERO,
                    radius: 1.0,
                    budget,
                    loop_center: None,
                    sides: 8,
                    inside: vec![0.6, 0.8],
                    outside: vec![-0.8, 0.6],
                }
            } else {
                SynthSpec::RandomCellsWithRandomPolyline {
                    center: P2::ZERO,
                    radius: 1.0,
                    budget,
                    k: 2,
                    vertices: 10,
                    amplitude: 0.3,
                    jump_scale: 1.0,
                    loop_center: None,
                }
            };
            (synthesize(&spec, seed).unwrap(), s, seed)
        })
        .collect()
}

#[test]
fn criterion_03_approximation_inequalities() {
    let run = || -> Result<String, String> {
        let t = Instant::now();
        let p = p_affine();
        let mut sampled = 0usize;
        for (u, s, seed) in cover_corpus() {
            ensure(u.jump.total_length() < ETA * (1.0 - s) * u.radius / 2.0, || format!("seed {seed}: corpus precondition"))?;
            let rep = global_approx(&u, &p, s, ETA, seed, &LocalConfig::default()).map_err(|e| format!("seed {seed}: {e}"))?;
            let e = &rep.estimates;
            ensure(e.jump_new <= 1e-9 * u.radius, || format!("seed {seed}: (a) new jump {:e}", e.jump_new))?;
            ensure(e.outside_identity, || format!("seed {seed}: (b) cells changed outside the balls"))?;
            for x in points_in(u.center, u.radius * (1.0 - 1e-9), 1000, seed) {
                if rep.family.balls.iter().all(|b| x.dist(b.center) > b.radius) {
                    ensure(rep.w.eval(x) == u.eval(x), || format!("seed {seed}: (b) w != u at {x:?}"))?;
                    sampled += 1;
                }
            }
            ensure(e.linf_out <= e.linf_in + 1e-12, || format!("seed {seed}: (c) {} > {}", e.linf_out, e.linf_in))?;
            for c in rep.family.checks() {
                ensure(c.holds, || format!("seed {seed}: (d/e) {} lhs {:e} rhs {:e}", c.name, c.lhs, c.rhs))?;
            }
            let reach = rep.family.balls.iter().map(|b| b.center.dist(u.center) + b.radius).fold(0.0, f64::max);
            ensure(reach <= (1.0 + s) * u.radius / 2.0 + 1e-12, || format!("seed {seed}: (e) reach {reach}"))?;
            ensure(e.jump_out_inner <= 1e-9 * u.radius, || format!("seed {seed}: jump left in the inner ball"))?;
        }
        let dt = t.elapsed().as_secs_f64();
        ensure(dt < 180.0, || format!("corpus took {dt:.1} s"))?;
        Ok(format!("50 instances, 0 violations of (a)-(e), {sampled} outside samples equal, {dt:.1} s (< 180 s)"))
    };
    report(3, "approximation inequality suite", run());
}

#[test]
fn criterion_04_modular_bound() {
    let run = || -> Result<String, String> {
        let p = p_affine();
        let pc = p_const(1.6);
        let (mut k_var, mut k_const) = (0.0_f64, 0.0_f64);
        for (u, s, seed) in cover_corpus() {
            let a = global_approx(&u, &p, s, ETA, seed, &LocalConfig::default()).map_err(|e| e.to_string())?;
            let b = global_approx(&u, &pc, s, ETA, seed, &LocalConfig::default()).map_err(|e| e.to_string())?;
            k_var = k_var.max(a.estimates.k_combined);
            k_const = k_const.max(b.estimates.k_stripped);
        }
        ensure(k_var <= K_FROZEN, || format!("variable exponent K {k_var:.4} > {K_FROZEN}"))?;
        ensure(k_const <= K_FROZEN, || format!("constant exponent K without (1+ρ²) {k_const:.4} > {K_FROZEN}"))?;
        Ok(format!("max K with (1+ρ²) {k_var:.4}, constant exponent without factor {k_const:.6}, frozen K = {K_FROZEN}"))
    };
    report(4, "variable-exponent modular bound", run());
}

fn random_exponent(rng: &mut ChaCha8Rng) -> ExponentField {
    let base = rng.gen_range(1.2..1.8);
    let expr = match rng.gen_range(0..3) {
        0 => ClosedExpr::Affine { base, grad: [rng.gen_range(-0.15..0.15), rng.gen_range(-0.15..0.15)], abs: false },
        1 => ClosedExpr::RadialPower { base, amp: rng.gen_range(0.0..0.4), power: rng.gen_range(0.5..2.0), center: P2::new(rng.gen_range(-0.3..0.3), 0.0) },
        _ => ClosedExpr::HalfPlane { low: base, high: base + rng.gen_range(0.0..0.6), normal: [1.0, 0.0], offset: rng.gen_range(-0.5..0.5) },
    };
    ExponentField::new(ExponentSpec::closed(expr, Domain::unit_disk())).unwrap()
}

#[test]
fn criterion_05_luxembourg_norm_suite() {
    let run = || -> Result<String, String> {
        let t = Instant::now();
        let unit = disk(P2::ZERO, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (mut above, mut below) = (0, 0);
        for i in 0..200 {
            let p = random_exponent(&mut rng);
            let (a, b, c) = (rng.gen_range(0.01..4.0), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
            let f = ClosedForm::new(move |x: P2| a * (1.0 + b * x.norm2() + c * x.x));
            let m = modular(&f, &p, &unit).map_err(|e| e.to_string())?;
            let n = luxembourg_norm(&f, &p, &unit).map_err(|e| e.to_string())?;
            let (lo, hi) = if n > 1.0 {
                above += 1;
                (m.powf(1.0 / p.p_plus), m.powf(1.0 / p.p_minus))
            } else {
                below += 1;
                (m.powf(1.0 / p.p_minus), m.powf(1.0 / p.p_plus))
            };
            ensure(lo <= n + 1e-8 && n <= hi + 1e-8, || format!("case {i}: {lo} <= {n} <= {hi} fails"))?;
        }
        let mut worst: f64 = 0.0;
        for i in 0..50 {
            let (a, b) = (rng.gen_range(0.1..3.0), rng.gen_range(-0.9..0.9));
            let f = ClosedForm::new(move |x: P2| a * (1.0 + b * x.x));
            // ∫(1 + b x)^q over the unit disk in closed form
            let classical = [
                (2.0, a * (PI * (1.0 + b * b / 4.0)).sqrt()),
                (3.0, a * (PI * (1.0 + 3.0 * b * b / 4.0)).cbrt()),
                (4.0, a * (PI * (1.0 + 1.5 * b * b + b.powi(4) / 8.0)).powf(0.25)),
            ];
            for (pv, want) in classical {
                let got = luxembourg_norm(&f, &p_const(pv), &unit).map_err(|e| e.to_string())?;
                let rel = (got - want).abs() / want;
                ensure(rel < 1e-10, || format!("classical case {i} p={pv}: {got} vs {want}"))?;
                worst = worst.max(rel);
            }
        }
        let dt = t.elapsed().as_secs_f64();
        ensure(dt < 30.0, || format!("{dt:.1} s"))?;
        Ok(format!("200 pairs ({above} with norm > 1, {below} with norm ≤ 1) within 1e-8, classical agreement {worst:.1e}, {dt:.1} s"))
    };
    report(5, "Luxembourg norm suite", run());
}

fn bounded_affine(seed: u64) -> DiscreteSbvMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let th = TAU * rng.gen::<f64>();
    let g = 0.3 * rng.gen::<f64>() + 0.1;
    let grad = vec![[g * th.cos(), -g * th.sin()], [g * th.sin(), g * th.cos()]];
    synthesize(&SynthSpec::Affine { center: P2::ZERO, radius: 1.0, value: vec![th.cos(), th.sin()], grad }, 0).unwrap()
}

fn fd_error(w: &DiscreteSbvMap, a: &[f64], seed: u64) -> Result<f64, String> {
    let comp = |x: P2| {
        let y = w.eval(x).unwrap();
        let d: Vec<f64> = y.iter().zip(a).map(|(u, v)| u - v).collect();
        let n = vnorm(&d);
        d.into_iter().map(|v| v / n).collect::<Vec<_>>()
    };
    let h = 1e-6;
    let (mut done, mut worst) = (0, 0.0_f64);
    for x in points_in(w.center, w.radius * 0.999, 1000, seed) {
        if done == 100 {
            break;
        }
        let c = w.cell_at(x);
        let probes = [x + P2::new(h, 0.0), x - P2::new(h, 0.0), x + P2::new(0.0, h), x - P2::new(0.0, h)];
        if probes.iter().any(|q| w.cell_at(*q) != c || !w.cells[c.unwrap()].region.contains_strict(*q)) {
            continue;
        }
        let g = shifted_gradient(w, a, x).ok_or("singular point")?;
        let (px, mx, py, my) = (comp(probes[0]), comp(probes[1]), comp(probes[2]), comp(probes[3]));
        let (mut err, mut norm) = (0.0_f64, 0.0_f64);
        for i in 0..a.len() {
            err = err.max(((px[i] - mx[i]) / (2.0 * h) - g[i][0]).abs()).max(((py[i] - my[i]) / (2.0 * h) - g[i][1]).abs());
            norm = norm.max(g[i][0].abs()).max(g[i][1].abs());
        }
        worst = worst.max(err / norm.max(1e-12));
        done += 1;
    }
    ensure(done == 100, || format!("only {done} interior points"))?;
    Ok(worst)
}

#[test]
fn criterion_06_retraction_suite() {
    let run = || -> Result<String, String> {
        let p = p_affine();
        let mut fixed: f64 = 0.0;
        let sphere_maps = [
            synthesize(&SynthSpec::SphereVortexWithSlit { center: P2::ZERO, radius: 1.0, budget: 0.3, angle: Some(1.1) }, 0).unwrap(),
            halves(true),
        ];
        for (i, w) in sphere_maps.iter().enumerate() {
            let pr = project_w(w, &p, &RetractionConfig::new(w.k, 1.0).unwrap(), i as u64).map_err(|e| e.to_string())?;
            for x in points_in(w.center, 0.999, 2000, i as u64) {
                fixed = fixed.max(vdist(&pr.w.eval(x).unwrap(), &w.eval(x).unwrap()));
            }
        }
        ensure(fixed <= 1e-10, || format!("fixed-point deviation {fixed:e}"))?;
        let (mut unit, mut ratio, mut fd) = (0.0_f64, 0.0_f64, 0.0_f64);
        for seed in 0..10u64 {
            let w = if seed % 2 == 0 { bounded_affine(seed) } else { random_polyline(seed, 0.5) };
            let m = w.linf(&w.domain()).max(1.0);
            let pr = project_w(&w, &p, &RetractionConfig::new(w.k, m).unwrap(), seed).map_err(|e| format!("seed {seed}: {e}"))?;
            for x in points_in(w.center, 0.999, 1000, seed) {
                if let Some(v) = pr.w.eval(x) {
                    unit = unit.max((vnorm(&v) - 1.0).abs());
                }
            }
            if seed % 2 == 0 {
                ratio = ratio.max(pr.energy_ratio);
            }
            fd = fd.max(fd_error(&w, &pr.a, seed)?);
        }
        ensure(unit <= 1e-9, || format!("unit-norm deviation {unit:e}"))?;
        ensure(ratio <= C_HAT, || format!("energy ratio {ratio} > {C_HAT}"))?;
        ensure(fd <= 1e-4, || format!("chain rule vs finite differences {fd:e}"))?;
        Ok(format!("fixed points {fixed:.1e}, unit norm {unit:.1e}, energy ratio {ratio:.3} (frozen {C_HAT}), chain rule {fd:.1e} over 100 points x 10 maps"))
    };
    report(6, "retraction suite", run());
}

#[test]
fn criterion_07_counterexample_verification() {
    let run = || -> Result<String, String> {
        let (mut min_margin, mut worst_mc, mut slowest) = (f64::INFINITY, 0.0_f64, 0.0_f64);
        for eps in [0.05, 0.1, 0.3] {
            for c in [1.0, 5.0, 20.0] {
                let t = Instant::now();
                let cx = build_complex(eps, c, 200, 1).map_err(|e| e.to_string())?;
                let rep = verify_violation(&cx, &r_grid(1.0, 32)).map_err(|e| e.to_string())?;
                ensure(rep.rows.len() == 32 && rep.min_margin() >= 1.0, || format!("ε={eps} C={c}: min margin {}", rep.min_margin()))?;
                for (i, (r, d)) in [(0.7, 0.35), (0.7, 0.175), (0.9, 0.9)].into_iter().enumerate() {
                    let a = cx.annulus_measure(r, d).map_err(|e| e.to_string())?;
                    let mc = cx.annulus_measure_mc(r, d, 1_000_000, 17 + i as u64).map_err(|e| e.to_string())?;
                    let rel = (mc - a).abs() / a;
                    ensure(rel < 0.02, || format!("ε={eps} C={c} band ({r},{d}): Monte Carlo {mc} vs {a}"))?;
                    worst_mc = worst_mc.max(rel);
                }
                let area = cx.invariants().area;
                ensure(area < eps, || format!("ε={eps}: area {area}"))?;
                let dt = t.elapsed().as_secs_f64();
                ensure(dt < 60.0, || format!("ε={eps} C={c}: {dt:.1} s"))?;
                min_margin = min_margin.min(rep.min_margin());
                slowest = slowest.max(dt);
            }
        }
        Ok(format!("9 configurations, min margin {min_margin:.3} (≥ 1), Monte Carlo gap {:.2}% (< 2%), slowest {slowest:.2} s", 100.0 * worst_mc))
    };
    report(7, "counterexample verification", run());
}

#[test]
fn criterion_08_blowup_identities() {
    let run = || -> Result<String, String> {
        let fields = [
            p_affine(),
            ExponentField::new(ExponentSpec::closed(ClosedExpr::RadialPower { base: 1.4, amp: 0.3, power: 0.5, center: P2::new(0.1, -0.2) }, Domain::unit_disk())).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (mut gap, mut dev_ratio) = (0.0_f64, 0.0_f64);
        for i in 0..100u64 {
            let u = random_polyline(i % 10, 1.0);
            let p = &fields[(i % 2) as usize];
            let s = 0.02 + 0.3 * rng.gen::<f64>();
            let x = P2::polar((0.95 - s) * rng.gen::<f64>(), TAU * rng.gen::<f64>());
            let f = blowup(&u, p, x, s, 0.1, 20_000, i).map_err(|e| format!("frame {i}: {e}"))?;
            for c in f.checks(p) {
                ensure(c.holds, || format!("frame {i}: {} lhs {:e} rhs {:e}", c.name, c.lhs, c.rhs))?;
            }
            gap = gap.max(f.jump_gap / (1.0 + f.jump_out));
            if f.omega > 0.0 {
                dev_ratio = dev_ratio.max(f.sup_dev / f.omega);
            }
        }
        ensure(gap <= 1e-12, || format!("jump identity gap {gap:e}"))?;
        Ok(format!("100 frames, jump identity gap {gap:.1e} (≤ 1e-12), max sup-dev/ω {dev_ratio:.4}"))
    };
    report(8, "blow-up identities", run());
}

#[test]
fn criterion_09_jump_criterion_classification() {
    let run = || -> Result<String, String> {
        let p = p_affine();
        let cfg = CriterionConfig::default();
        let (mut on, mut off, mut border, mut flagged) = (0, 0, 0, 0);
        for seed in 0..50u64 {
            let u = random_polyline(seed, 1.0);
            for (x, label) in labeled_points(&u, seed) {
                let v = jump_criterion_profile(&u, &p, x, &PROBE_RADII, &cfg).map_err(|e| e.to_string())?.verdict;
                match label {
                    Label::OnJump => {
                        ensure(v == Verdict::InJumpCandidate, || format!("seed {seed}: on-jump point {x:?} got {v:?}"))?;
                        on += 1;
                    }
                    Label::OffJump => {
                        ensure(v == Verdict::NotInJump, || format!("seed {seed}: off-jump point {x:?} got {v:?}"))?;
                        off += 1;
                    }
                    Label::Borderline => {
                        ensure(v == Verdict::Inconclusive, || format!("seed {seed}: borderline point {x:?} got {v:?}"))?;
                        border += 1;
                        flagged += 1;
                    }
                }
            }
        }
        Ok(format!("{on} on-jump and {off} off-jump points all correct, {flagged}/{border} borderline flagged inconclusive"))
    };
    report(9, "jump-criterion classification", run());
}

#[test]
fn criterion_10_determinism() {
    let run = || -> Result<String, String> {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
        let mut kinds = std::collections::BTreeSet::new();
        let mut files: Vec<_> = std::fs::read_dir(&dir).map_err(|e| e.to_string())?.map(|e| e.unwrap().path()).collect();
        files.sort();
        let mut n = 0;
        for path in files {
            let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
            if path.file_name().unwrap().to_string_lossy().starts_with("corpus") {
                let spec = parse_corpus(&text).map_err(|e| e.to_string())?;
                ensure(corpus(&spec).map_err(|e| e.to_string())? == corpus(&spec).map_err(|e| e.to_string())?, || "corpus output differs".into())?;
                continue;
            }
            let sc = load_scenario(&path).map_err(|e| e.to_string())?;
            let a = run(&sc, &dir).map_err(|e| format!("{}: {e}", sc.name))?;
            let b = run(&sc, &dir).map_err(|e| format!("{}: {e}", sc.name))?;
            ensure(a.report_json() == b.report_json(), || format!("{}: report.json differs", sc.name))?;
            ensure(a.csv == b.csv && a.figures == b.figures, || format!("{}: data or figures differ", sc.name))?;
            kinds.insert(sc.pipeline.kind());
            n += 1;
        }
        ensure(kinds.len() == 6, || format!("pipelines covered: {kinds:?}"))?;
        Ok(format!("{n} scenarios over all 6 pipelines rerun byte-identically, corpus expansion identical"))
    };
    report(10, "determinism", run());
}
