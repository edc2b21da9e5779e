//! Acceptance suite. Runs every criterion in sequence, prints one PASS/FAIL
//! line per criterion with its measurements, and exits non-zero if any
//! criterion fails. Oracles here are written independently of the library.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use sdlane::dataio::{
    degrade, load_scene, predict_from_gt, read_tensor, save_scene, synth_scene, write_tensor,
    DegradeConfig, SceneFile, SynthConfig, Tensor,
};
use sdlane::geometry::{Extent, Point2, Polyline};
use sdlane::lane_model::{LaneGraph, LaneSegment, LineType, ScoreMatrix, SegmentKind, Topology};
use sdlane::metrics::{
    chamfer, discrete_frechet, evaluate, lane_seg_distance, match_and_ap, EvalConfig,
};
use sdlane::noise::{noise_level, parse_noise_spec, sample_transform};
use sdlane::sd_encode::{rasterize, CanvasConfig, Channel, SdCategory, SdElement, SdMapLocal};
use sdlane::topo::{
    grad_check, grad_check_with, random_instance, smooth_instance, topo_enhance, GradCheckOptions,
};
use sdlane::Error;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(start: Instant, budget: Duration) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure(t < budget, || format!("took {t:.2?}, budget {budget:?}"))?;
    Ok(t)
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

fn dist(a: Point2, b: Point2) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Top-down memoized recursion over the full coupling table.
fn frechet_oracle(a: &[Point2], b: &[Point2]) -> f64 {
    fn go(i: usize, j: usize, a: &[Point2], b: &[Point2], memo: &mut Vec<Vec<Option<f64>>>) -> f64 {
        if let Some(v) = memo[i][j] {
            return v;
        }
        let d = dist(a[i], b[j]);
        let v = if i == 0 && j == 0 {
            d
        } else if i == 0 {
            go(0, j - 1, a, b, memo).max(d)
        } else if j == 0 {
            go(i - 1, 0, a, b, memo).max(d)
        } else {
            let prev = go(i - 1, j, a, b, memo)
                .min(go(i - 1, j - 1, a, b, memo))
                .min(go(i, j - 1, a, b, memo));
            prev.max(d)
        };
        memo[i][j] = Some(v);
        v
    }
    let mut memo = vec![vec![None; b.len()]; a.len()];
    go(a.len() - 1, b.len() - 1, a, b, &mut memo)
}

fn chamfer_oracle(a: &[Point2], b: &[Point2]) -> f64 {
    let directed = |from: &[Point2], to: &[Point2]| {
        let mut total = 0.0;
        for &p in from {
            let mut best = f64::INFINITY;
            for &q in to {
                best = best.min(dist(p, q));
            }
            total += best;
        }
        total / from.len() as f64
    };
    (directed(a, b) + directed(b, a)) / 2.0
}

/// Greedy matching plus AP by enumerating the PR curve: for every recall
/// level m/n_gt take the best precision reached at any cutoff with at least
/// m true positives.
fn ap_oracle(
    preds: &[LaneSegment],
    gts: &[LaneSegment],
    threshold: f64,
) -> (f64, Vec<Option<usize>>) {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    for i in 0..order.len() {
        for j in 0..order.len() - 1 - i {
            let (a, b) = (&preds[order[j]], &preds[order[j + 1]]);
            let swap = a.confidence() < b.confidence()
                || (a.confidence() == b.confidence() && (a.id, order[j]) > (b.id, order[j + 1]));
            if swap {
                order.swap(j, j + 1);
            }
        }
    }
    let mut used = vec![false; gts.len()];
    let mut matching = vec![None; preds.len()];
    for &p in &order {
        let mut best: Option<usize> = None;
        for g in 0..gts.len() {
            let d = lane_seg_distance(&preds[p], &gts[g]);
            if !used[g]
                && d <= threshold
                && best.is_none_or(|b| d < lane_seg_distance(&preds[p], &gts[b]))
            {
                best = Some(g);
            }
        }
        if let Some(g) = best {
            used[g] = true;
            matching[p] = Some(g);
        }
    }
    if gts.is_empty() {
        return (0.0, matching);
    }
    let cutoffs: Vec<(usize, f64)> = (1..=order.len())
        .map(|k| {
            let tp = order[..k]
                .iter()
                .filter(|&&p| matching[p].is_some())
                .count();
            (tp, tp as f64 / k as f64)
        })
        .collect();
    let mut ap = 0.0;
    for m in 1..=gts.len() {
        let best = cutoffs
            .iter()
            .filter(|(tp, _)| *tp >= m)
            .map(|(_, p)| *p)
            .fold(0.0, f64::max);
        ap += best / gts.len() as f64;
    }
    (ap, matching)
}

fn seg_dist_sq(p: Point2, a: Point2, b: Point2) -> f64 {
    let (abx, aby) = (b.x - a.x, b.y - a.y);
    let t = ((p.x - a.x) * abx + (p.y - a.y) * aby) / (abx * abx + aby * aby);
    let (qx, qy) = if t <= 0.0 {
        (a.x, a.y)
    } else if t >= 1.0 {
        (b.x, b.y)
    } else {
        (a.x + abx * t, a.y + aby * t)
    };
    (p.x - qx) * (p.x - qx) + (p.y - qy) * (p.y - qy)
}

// ---------------------------------------------------------------------------
// Random inputs
// ---------------------------------------------------------------------------

fn random_walk(rng: &mut ChaCha8Rng, n: usize, step: f64, origin: Point2) -> Vec<Point2> {
    let mut p = origin;
    let mut out = vec![p];
    while out.len() < n {
        let angle = rng.random::<f64>() * std::f64::consts::TAU;
        let len = step * (0.1 + rng.random::<f64>());
        p = p + Point2::new(angle.cos(), angle.sin()) * len;
        out.push(p);
    }
    out
}

fn random_point(rng: &mut ChaCha8Rng, e: &Extent) -> Point2 {
    Point2::new(
        rng.random_range(e.x_min..e.x_max),
        rng.random_range(e.y_min..e.y_max),
    )
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, xs: &[T]) -> T {
    xs[rng.random_range(0..xs.len())]
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

fn c1_metric_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst_chamfer = 0.0f64;
    for _ in 0..1000 {
        let na = rng.random_range(3..=30);
        let nb = rng.random_range(3..=30);
        let oa = random_point(&mut rng, &Extent::PERCEPTION);
        let ob = random_point(&mut rng, &Extent::PERCEPTION);
        let a = random_walk(&mut rng, na, 3.0, oa);
        let b = random_walk(&mut rng, nb, 3.0, ob);
        let f = discrete_frechet(&a, &b);
        let fo = frechet_oracle(&a, &b);
        ensure(f == fo, || format!("Fréchet {f} vs oracle {fo}"))?;
        let c = chamfer(&a, &b).map_err(|e| e.to_string())?;
        let co = chamfer_oracle(&a, &b);
        worst_chamfer = worst_chamfer.max((c - co).abs() / co.abs().max(f64::MIN_POSITIVE));
    }
    ensure(worst_chamfer <= 1e-12, || {
        format!("Chamfer relative error {worst_chamfer:e}")
    })?;
    let t = within_budget(start, Duration::from_secs(10))?;
    Ok(format!(
        "1000 pairs: Fréchet exact, Chamfer max rel err {worst_chamfer:.1e}, {t:.2?}"
    ))
}

fn random_ap_scene(rng: &mut ChaCha8Rng, seed: u64) -> (Vec<LaneSegment>, Vec<LaneSegment>) {
    let gt = loop {
        let cfg = SynthConfig {
            roads: rng.random_range(1..=2),
            lanes_per_road: rng.random_range(1..=2),
            segments_per_lane: rng.random_range(1..=3),
            crossings: rng.random_range(0..=2),
            curvature_max: 0.004,
            seed: rng.random(),
            ..SynthConfig::default()
        };
        if let Ok(s) = synth_scene(&cfg) {
            if s.graph.segments.len() <= 10 {
                break s;
            }
        }
    };
    let degraded = degrade(
        &gt,
        &DegradeConfig {
            lateral_std: rng.random_range(0.0..2.5),
            drop_prob: rng.random_range(0.0..0.5),
            seed,
            ..DegradeConfig::default()
        },
    )
    .expect("valid degradation");
    let mut preds: Vec<LaneSegment> = degraded.graph.segments;
    // Far false positives, then cap the scene at 10 predictions.
    for k in 0..rng.random_range(0..=3) {
        let src = &gt.graph.segments[rng.random_range(0..gt.graph.segments.len())];
        let off = Point2::new(rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0));
        let mut fp = src.transformed(&sdlane::RigidTransform::new(0.0, off));
        fp.id = 100 + k;
        preds.push(fp);
    }
    preds.shuffle(rng);
    preds.truncate(10);
    // Mix quantized (tied) and continuous confidences.
    let preds = preds
        .into_iter()
        .map(|p| {
            let c = if rng.random::<f64>() < 0.4 {
                pick(rng, &[0.25, 0.5, 0.75, 1.0])
            } else {
                rng.random::<f64>()
            };
            p.with_confidence(c).expect("confidence in range")
        })
        .collect();
    (preds, gt.graph.segments)
}

fn c2_ap_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0f64;
    let mut nonzero = 0;
    for s in 0..200 {
        let (preds, gts) = random_ap_scene(&mut rng, s);
        for t in [0.5, 1.0, 2.0, 3.0] {
            let r = match_and_ap(&preds, &gts, t, lane_seg_distance);
            let (ap, matching) = ap_oracle(&preds, &gts, t);
            ensure(r.matching == matching, || {
                format!("scene {s} t {t}: matching differs")
            })?;
            worst = worst.max((r.ap - ap).abs());
            nonzero += usize::from(ap > 0.0 && ap < 1.0);
        }
    }
    ensure(worst <= 1e-12, || format!("max |AP − oracle| = {worst:e}"))?;
    let t = within_budget(start, Duration::from_secs(30))?;
    Ok(format!(
        "200 scenes × 4 thresholds: max |ΔAP| {worst:.1e}, {nonzero} fractional APs, {t:.2?}"
    ))
}

fn random_sd_map(rng: &mut ChaCha8Rng) -> SdMapLocal {
    let window = Extent::new(-60.0, 60.0, -32.0, 32.0);
    let elements = (0..rng.random_range(0..=20))
        .map(|_| {
            let category = pick(rng, &SdCategory::ALL);
            let n = rng.random_range(2..=5);
            let o = random_point(rng, &window);
            SdElement::new(
                category,
                Polyline::new(random_walk(rng, n, 15.0, o)).expect("distinct points"),
            )
        })
        .collect();
    SdMapLocal::new(elements, Extent::SD_RANGE).expect("valid range")
}

fn c3_canvas_fidelity() -> Outcome {
    let start = Instant::now();
    let cfg = CanvasConfig::default();
    let (h, w) = (800usize, 400usize);
    ensure(
        cfg.height_px == h
            && cfg.width_px == w
            && cfg.resolution == 0.125
            && cfg.extent == Extent::new(-50.0, 50.0, -25.0, 25.0),
        || format!("unexpected default canvas {cfg:?}"),
    )?;
    ensure(
        h as f64 * cfg.resolution == 100.0 && w as f64 * cfg.resolution == 50.0,
        || "span".into(),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut covered = 0usize;
    let mut max_norm_dev = 0.0f64;
    for m in 0..100 {
        let map = random_sd_map(&mut rng);
        let canvas = rasterize(&map, &cfg).map_err(|e| e.to_string())?;
        ensure(canvas.dims() == [6, h, w], || {
            format!("dims {:?}", canvas.dims())
        })?;

        let segs: Vec<(SdCategory, Point2, Point2)> = map
            .elements
            .iter()
            .flat_map(|e| {
                e.polyline
                    .points()
                    .windows(2)
                    .map(move |p| (e.category, p[0], p[1]))
            })
            .collect();
        for r in 0..h {
            let x = 50.0 - (r as f64 + 0.5) * 0.125;
            for c in 0..w {
                let y = 25.0 - (c as f64 + 0.5) * 0.125;
                let p = Point2::new(x, y);
                let mut hit = [false; 3];
                let mut best: Option<(f64, f32, f32)> = None;
                for &(cat, a, b) in &segs {
                    let half = if cat == SdCategory::Road { 3.0 } else { 0.625 };
                    if x < a.x.min(b.x) - half
                        || x > a.x.max(b.x) + half
                        || y < a.y.min(b.y) - half
                        || y > a.y.max(b.y) + half
                    {
                        continue;
                    }
                    let d2 = seg_dist_sq(p, a, b);
                    if d2 <= half * half {
                        hit[cat.index()] = true;
                        if cat == SdCategory::Road && best.is_none_or(|(bd, _, _)| d2 < bd) {
                            let len = dist(a, b);
                            best =
                                Some((d2, ((b.x - a.x) / len) as f32, ((b.y - a.y) / len) as f32));
                        }
                    }
                }
                for (ch, k) in [
                    (Channel::Road, 0),
                    (Channel::Sidewalk, 1),
                    (Channel::Crosswalk, 2),
                ] {
                    let v = canvas.get(ch, r, c);
                    ensure(v == f32::from(u8::from(hit[k])), || {
                        format!(
                            "map {m} pixel ({r}, {c}) {ch:?}: canvas {v}, oracle {}",
                            hit[k]
                        )
                    })?;
                }
                covered += usize::from(hit[0]);
                let (dx, dy) = (
                    canvas.get(Channel::DirCos, r, c),
                    canvas.get(Channel::DirSin, r, c),
                );
                let (ex, ey) = best.map_or((0.0, 0.0), |(_, ex, ey)| (ex, ey));
                ensure(dx == ex && dy == ey, || {
                    format!(
                        "map {m} pixel ({r}, {c}): direction ({dx}, {dy}) vs oracle ({ex}, {ey})"
                    )
                })?;
                let n2 = f64::from(dx) * f64::from(dx) + f64::from(dy) * f64::from(dy);
                let dev = n2.min((n2 - 1.0).abs());
                ensure(dev <= 1e-6, || {
                    format!("map {m} pixel ({r}, {c}): dx²+dy² = {n2}")
                })?;
                max_norm_dev = max_norm_dev.max(if best.is_some() { (n2 - 1.0).abs() } else { n2 });
            }
        }
    }
    let t = within_budget(start, Duration::from_secs(60))?;
    Ok(format!(
        "100 maps, 6×800×400 @ 0.125 m over ±50×±25 m, masks exact ({covered} road px), max |dx²+dy²−{{0,1}}| {max_norm_dev:.1e}, {t:.2?}"
    ))
}

fn c4_topology_block() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst_small = 0.0f64;
    let mut checked = 0;
    let mut skipped = 0;
    for k in 0..50 {
        let (n, d, de) = (
            rng.random_range(1..=8),
            rng.random_range(1..=8),
            rng.random_range(1..=6),
        );
        let inst = smooth_instance(n, d, de, 4000 + k, 1e-3).map_err(|e| e.to_string())?;
        let r = grad_check(inst.f.view(), inst.m.view(), &inst.params, 1e-5)
            .map_err(|e| e.to_string())?;
        worst_small = worst_small.max(r.max_rel_error);
        checked += r.checked;
        skipped += r.skipped_kinks;
    }
    ensure(worst_small < 1e-5, || {
        format!("small instances: max rel err {worst_small:e}")
    })?;

    let big = random_instance(200, 256, 128, 4242).map_err(|e| e.to_string())?;
    let r = grad_check_with(
        big.f.view(),
        big.m.view(),
        &big.params,
        GradCheckOptions {
            max_coords_per_tensor: Some(12),
            seed: 7,
            ..GradCheckOptions::default()
        },
    )
    .map_err(|e| e.to_string())?;
    ensure(r.checked > 0 && r.max_rel_error < 1e-5, || {
        format!("N=200 D=256: {r:?}")
    })?;

    let mut worst_perm = 0.0f64;
    for k in 0..20 {
        let (n, d, de) = (
            rng.random_range(2..=16),
            rng.random_range(1..=16),
            rng.random_range(1..=8),
        );
        let inst = random_instance(n, d, de, 5000 + k).map_err(|e| e.to_string())?;
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let pf = Array2::from_shape_fn((n, d), |(i, j)| inst.f[[perm[i], j]]);
        let pm = Array2::from_shape_fn((n, n), |(i, j)| inst.m[[perm[i], perm[j]]]);
        let out =
            topo_enhance(inst.f.view(), inst.m.view(), &inst.params).map_err(|e| e.to_string())?;
        let pout = topo_enhance(pf.view(), pm.view(), &inst.params).map_err(|e| e.to_string())?;
        for i in 0..n {
            for j in 0..out.ncols() {
                worst_perm = worst_perm.max((pout[[i, j]] - out[[perm[i], j]]).abs());
            }
        }
    }
    ensure(worst_perm < 1e-9, || {
        format!("permutation residual {worst_perm:e}")
    })?;
    let t = start.elapsed();
    Ok(format!(
        "50 smooth N≤8: max rel err {worst_small:.1e} ({checked} checked, {skipped} kinks skipped); \
         N=200 D=256: {:.1e} ({} checked, {} skipped); 20 permutations: residual {worst_perm:.1e}; {t:.2?}",
        r.max_rel_error, r.checked, r.skipped_kinks
    ))
}

fn c5_noise_statistics() -> Outcome {
    let cfg = parse_noise_spec("rot5_std5_prob1").map_err(|e| e.to_string())?;
    let n = 10_000u64;
    let draws: Vec<_> = (0..n)
        .map(|s| sample_transform(&cfg, s).expect("prob 1 always applies"))
        .collect();
    let stats = |v: Vec<f64>| {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        (mean, var.sqrt())
    };
    let (mx, sx) = stats(draws.iter().map(|t| t.translation.x).collect());
    let (my, sy) = stats(draws.iter().map(|t| t.translation.y).collect());
    let angles: Vec<f64> = draws.iter().map(|t| t.angle_rad.to_degrees()).collect();
    let max_angle = angles.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let (ma, _) = stats(angles);
    for (axis, s, m) in [("x", sx, mx), ("y", sy, my)] {
        ensure((s - 5.0).abs() <= 0.05 * 5.0, || {
            format!("{axis} shift std {s}")
        })?;
        ensure(m.abs() < 0.15, || format!("{axis} shift mean {m}"))?;
    }
    ensure(max_angle <= 5.0, || {
        format!("rotation {max_angle}° exceeds 5°")
    })?;
    ensure(ma.abs() < 0.15, || format!("rotation mean {ma}°"))?;

    let half = parse_noise_spec("rot5_std5_prob0.5").map_err(|e| e.to_string())?;
    let applied = (0..n)
        .filter(|&s| sample_transform(&half, s).is_some())
        .count();
    let rate = applied as f64 / n as f64;
    ensure((rate - 0.5).abs() <= 0.02, || {
        format!("prob 0.5 applied at rate {rate}")
    })?;
    Ok(format!(
        "std ({sx:.3}, {sy:.3}) m, mean ({mx:.3}, {my:.3}) m, |rot| ≤ {max_angle:.3}°, mean rot {ma:.3}°, prob0.5 rate {rate:.4}"
    ))
}

fn c6_noise_monotonicity() -> Outcome {
    let scenes: Vec<SceneFile> = (0..50)
        .map(|s| {
            synth_scene(&SynthConfig {
                seed: s,
                ..SynthConfig::default()
            })
        })
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let eval_cfg = EvalConfig::default();
    let mut means = Vec::new();
    for level in [0, 2, 4, 6] {
        let noise = noise_level(level).map_err(|e| e.to_string())?;
        let mut total = 0.0;
        for (k, gt) in scenes.iter().enumerate() {
            let pred = predict_from_gt(gt);
            let graph = match sample_transform(&noise, 9000 + k as u64) {
                Some(t) => pred.graph.transformed(&t),
                None => pred.graph,
            };
            total += evaluate(&graph, &gt.graph, &eval_cfg)
                .map_err(|e| e.to_string())?
                .map;
        }
        means.push((level, total / scenes.len() as f64));
    }
    for w in means.windows(2) {
        ensure(w[1].1 <= w[0].1 + 0.01, || {
            format!(
                "mean mAP rises from level {} to {}: {means:?}",
                w[0].0, w[1].0
            )
        })?;
    }
    let shown: Vec<String> = means.iter().map(|(l, m)| format!("L{l} {m:.4}")).collect();
    Ok(format!("mean mAP over 50 scenes: {}", shown.join(" → ")))
}

fn c7_end_to_end() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut scenes = 0;
    while scenes < 50 {
        let cfg = SynthConfig {
            roads: rng.random_range(1..=3),
            lanes_per_road: rng.random_range(1..=3),
            segments_per_lane: rng.random_range(2..=4),
            crossings: rng.random_range(1..=3),
            curvature_max: rng.random_range(0.0..0.003),
            seed: rng.random(),
            ..SynthConfig::default()
        };
        let Ok(gt) = synth_scene(&cfg) else { continue };
        scenes += 1;
        let exact = degrade(
            &gt,
            &DegradeConfig {
                seed: rng.random(),
                ..DegradeConfig::default()
            },
        )
        .map_err(|e| e.to_string())?;
        let r =
            evaluate(&exact.graph, &gt.graph, &EvalConfig::default()).map_err(|e| e.to_string())?;
        ensure(r.map == 1.0 && r.top_lsls == Some(1.0), || {
            format!(
                "zero degradation on {cfg:?}: mAP {} TOP {:?}",
                r.map, r.top_lsls
            )
        })?;
        let none = degrade(
            &gt,
            &DegradeConfig {
                drop_prob: 1.0,
                seed: rng.random(),
                ..DegradeConfig::default()
            },
        )
        .map_err(|e| e.to_string())?;
        let r =
            evaluate(&none.graph, &gt.graph, &EvalConfig::default()).map_err(|e| e.to_string())?;
        ensure(r.map == 0.0, || {
            format!("drop-all on {cfg:?}: mAP {}", r.map)
        })?;
    }
    Ok(format!(
        "{scenes} synth scenes: zero degradation mAP = TOP = 1, drop-all mAP = 0"
    ))
}

fn random_json(rng: &mut ChaCha8Rng, depth: usize) -> Value {
    match rng.random_range(0..if depth == 0 { 5 } else { 7 }) {
        0 => Value::Null,
        1 => Value::Bool(rng.random()),
        2 => Value::from(rng.random::<i64>()),
        3 => Value::from(rng.random::<f64>() * 10f64.powi(rng.random_range(-30..30))),
        4 => Value::String(random_text(rng)),
        5 => Value::Array(
            (0..rng.random_range(0..4))
                .map(|_| random_json(rng, depth - 1))
                .collect(),
        ),
        _ => Value::Object(
            (0..rng.random_range(0..4))
                .map(|i| {
                    (
                        format!("{}{i}", random_text(rng)),
                        random_json(rng, depth - 1),
                    )
                })
                .collect(),
        ),
    }
}

fn random_text(rng: &mut ChaCha8Rng) -> String {
    const ALPHABET: &[char] = &[
        'a', 'Z', '0', ' ', '"', '\\', '/', '\n', '\t', '\u{1}', 'é', 'ß', '✓', '😀',
    ];
    (0..rng.random_range(0..8))
        .map(|_| pick(rng, ALPHABET))
        .collect()
}

fn random_polyline(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<Point2> {
    let origin = Point2::new(
        rng.random_range(-1.0..1.0) * 50.0 * scale,
        rng.random_range(-1.0..1.0) * 25.0 * scale,
    );
    random_walk(rng, n, scale, origin)
}

fn random_scene(rng: &mut ChaCha8Rng) -> SceneFile {
    let scale = 10f64.powf(rng.random_range(-2.0..2.0));
    let segments: Vec<LaneSegment> = (0..rng.random_range(0..8))
        .map(|i| {
            let n = rng.random_range(2..=12);
            let c = random_polyline(rng, n, scale);
            let jitter = |rng: &mut ChaCha8Rng, p: &Point2| {
                *p + Point2::new(rng.random::<f64>(), rng.random::<f64>()) * scale
            };
            let l: Vec<Point2> = c.iter().map(|p| jitter(rng, p)).collect();
            let r: Vec<Point2> = c.iter().map(|p| jitter(rng, p)).collect();
            let types = [LineType::NonVisible, LineType::Solid, LineType::Dashed];
            LaneSegment::new(
                rng.random::<u64>() >> rng.random_range(0..64),
                pick(rng, &[SegmentKind::Lane, SegmentKind::PedestrianCrossing]),
                Polyline::new(c).unwrap(),
                Polyline::new(l).unwrap(),
                Polyline::new(r).unwrap(),
                pick(rng, &types),
                pick(rng, &types),
                if i % 3 == 0 { 1.0 } else { rng.random() },
            )
            .unwrap()
        })
        .collect();
    let n = segments.len();
    let topology = if rng.random::<bool>() || n < 2 {
        Topology::Edges(
            (0..rng.random_range(0..=2 * n))
                .filter_map(|_| {
                    let (i, j) = (rng.random_range(0..n.max(1)), rng.random_range(0..n.max(1)));
                    (i != j).then_some((i, j))
                })
                .collect(),
        )
    } else {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        let u = rng.random::<f64>();
                        pick(rng, &[0.0, 1.0, u, 0.5])
                    })
                    .collect()
            })
            .collect();
        Topology::Scores(ScoreMatrix::from_rows(&rows).unwrap())
    };
    let elements = (0..rng.random_range(0..6))
        .map(|_| {
            let n = rng.random_range(2..=8);
            SdElement::new(
                pick(rng, &SdCategory::ALL),
                Polyline::new(random_polyline(rng, n, scale)).unwrap(),
            )
        })
        .collect();
    let x0 = rng.random_range(-80.0..0.0);
    let y0 = rng.random_range(-40.0..0.0);
    SceneFile {
        scene_id: random_text(rng),
        extent: Extent::new(
            x0,
            x0 + rng.random_range(1.0..160.0),
            y0,
            y0 + rng.random_range(1.0..80.0),
        ),
        graph: LaneGraph::new(segments, topology),
        sd_map: SdMapLocal::new(elements, pick(rng, &[Extent::SD_RANGE, Extent::PERCEPTION]))
            .unwrap(),
        extra: (0..rng.random_range(0..3))
            .map(|k| (format!("x_{k}{}", random_text(rng)), random_json(rng, 3)))
            .collect(),
    }
}

fn schema_error_path(bytes: &[u8]) -> Result<String, String> {
    match load_scene(bytes) {
        Err(Error::Schema { path, message }) => Ok(format!("{path}: {message}")),
        Err(e) => Err(format!("non-schema error {e}")),
        Ok(_) => Err("corrupted scene accepted".into()),
    }
}

fn c8_serialization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    for k in 0..500 {
        let scene = random_scene(&mut rng);
        let bytes = save_scene(&scene);
        let back = load_scene(&bytes).map_err(|e| format!("scene {k}: {e}"))?;
        ensure(back == scene, || format!("scene {k} changed on load"))?;
        ensure(save_scene(&back) == bytes, || {
            format!("scene {k} bytes differ")
        })?;

        let rank = rng.random_range(1..=4);
        let dims: Vec<usize> = (0..rank).map(|_| rng.random_range(0..=6)).collect();
        let len: usize = dims.iter().product();
        let data: Vec<f32> = (0..len).map(|_| f32::from_bits(rng.random())).collect();
        let t = Tensor::new(dims, data).map_err(|e| e.to_string())?;
        let tb = write_tensor(&t);
        let back = read_tensor(&tb).map_err(|e| format!("tensor {k}: {e}"))?;
        ensure(
            back.dims() == t.dims()
                && back
                    .data()
                    .iter()
                    .zip(t.data())
                    .all(|(a, b)| a.to_bits() == b.to_bits()),
            || format!("tensor {k} changed"),
        )?;
        ensure(write_tensor(&back) == tb, || {
            format!("tensor {k} bytes differ")
        })?;
    }

    // Corruptions of a valid scene, each with the path its error must name.
    let gt = synth_scene(&SynthConfig::default()).map_err(|e| e.to_string())?;
    let base: Value = serde_json::from_slice(&save_scene(&predict_from_gt(&gt))).unwrap();
    type Edit = fn(&mut Value);
    let cases: [(Edit, &str); 9] = [
        (
            |v| {
                v["lane_segments"][2]["left_boundary"]
                    .as_array_mut()
                    .unwrap()
                    .pop();
            },
            "lane_segments[2] (id 2)",
        ),
        (
            |v| v["lane_segments"][1]["confidence"] = Value::from(1.5),
            "lane_segments[1] (id 1)",
        ),
        (
            |v| v["lane_segments"][3]["right_type"] = Value::from("wavy"),
            "lane_segments[3].right_type",
        ),
        (
            |v| v["lane_segments"][0]["width"] = Value::from(3),
            "lane_segments[0].width",
        ),
        (
            |v| v["lane_segments"][4]["centerline"][2] = Value::from("x"),
            "lane_segments[4].centerline[2]",
        ),
        (
            |v| v["topology"]["scores"][1][0] = Value::from(-0.5),
            "topology.scores[1][0]",
        ),
        (
            |v| v["sd_map"]["elements"][0]["category"] = Value::from("river"),
            "sd_map.elements[0].category",
        ),
        (|v| v["schema_version"] = Value::from(7), "schema_version"),
        (|v| v["extent"]["x_max"] = Value::from(-100.0), "extent"),
    ];
    let mut messages = Vec::new();
    for (edit, expect) in cases {
        let mut v = base.clone();
        edit(&mut v);
        let msg = schema_error_path(&serde_json::to_vec(&v).unwrap())?;
        ensure(msg.starts_with(&format!("{expect}:")), || {
            format!("expected path {expect}, got `{msg}`")
        })?;
        messages.push(msg);
    }
    let good = write_tensor(&Tensor::new(vec![2, 3], vec![0.0; 6]).unwrap());
    let mut bad_magic = good.clone();
    bad_magic[0] = b'X';
    let mut overflow = b"LGT1".to_vec();
    for w in [3u32, u32::MAX, u32::MAX, u32::MAX] {
        overflow.extend_from_slice(&w.to_le_bytes());
    }
    for (name, bytes) in [
        ("bad magic", bad_magic),
        ("truncated", good[..good.len() - 2].to_vec()),
        (
            "zero rank",
            [b"LGT1".as_slice(), &0u32.to_le_bytes()].concat(),
        ),
        ("overflow", overflow),
    ] {
        ensure(read_tensor(&bytes).is_err(), || {
            format!("{name} tensor accepted")
        })?;
    }
    Ok(format!(
        "500 scenes + 500 tensors bit-identical; 9 scene corruptions path-qualified (e.g. `{}`), 4 tensor corruptions rejected",
        messages[0]
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        (
            "metric oracles (Fréchet exact, Chamfer 1e-12, < 10 s)",
            c1_metric_oracles,
        ),
        ("AP oracle equivalence (1e-12, < 30 s)", c2_ap_oracle),
        (
            "canvas fidelity (per-pixel oracle, < 60 s)",
            c3_canvas_fidelity,
        ),
        (
            "topology block gradients and equivariance",
            c4_topology_block,
        ),
        ("noise protocol statistics", c5_noise_statistics),
        ("noise-degradation monotonicity", c6_noise_monotonicity),
        ("end-to-end sanity", c7_end_to_end),
        ("serialization round trips and errors", c8_serialization),
    ];
    let suite = Instant::now();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = run();
        let t = t.elapsed();
        match outcome {
            Ok(detail) => println!("PASS criterion {} — {name}: {detail} [{t:.2?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {} — {name}: {why} [{t:.2?}]", i + 1);
            }
        }
    }
    let total = suite.elapsed();
    let in_budget = total < Duration::from_secs(300);
    println!(
        "{} suite runtime {total:.2?} (target < 5 min)",
        if in_budget { "PASS" } else { "FAIL" }
    );
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 && in_budget {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
