//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng as _;
use weathersynth_core::auxprep::{colored_instance_map, greedy_color, instance_adjacency, one_hot_semseg, EXPECTED_MAX_COLORS};
use weathersynth_core::blend::{blend_images, build_weight_map, ClassWeightTable};
use weathersynth_core::colormatch::{clamp_preserving_anchor, compute_stats, reinhard_transfer, sample_w_orig, Region};
use weathersynth_core::datastats::equivalent_radius;
use weathersynth_core::imgcore::{quantize_u8, GaussianBlur, LabImage};
use weathersynth_core::manifest::{build_manifest, ManifestEntry, MixMode, Origin};
use weathersynth_core::pipeline::{run_pipeline, tree_digest, PipelineConfig};
use weathersynth_core::seed::{derive_seed, rng_from_seed};
use weathersynth_core::taxonomy::{class_id, CLASS_COUNT};
use weathersynth_core::weatheraug::{
    channel_scale, color_mix, desaturate, gaussian_overlay, glass_blur, line_streak_overlay, snow_bleach, tone_adjust,
    BlobOverlay, BlobRadius, Recipe, StreakParams, IDENTITY_MATRIX,
};
use weathersynth_core::weathercfg::{
    intervals, sample_weather, SimCondition, MIE_SCATTERING_SCALE, RAYLEIGH_SCATTERING_SCALE, SCATTERING_INTENSITY,
};
use weathersynth_core::{Condition, Plane, RasterImage};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn blend_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(1);
    let table = ClassWeightTable::default();
    let (mut max_err, mut max_lsb) = (0.0f64, 0i32);
    for _ in 0..50 {
        let (w, h) = (rng.gen_range(8..96), rng.gen_range(8..96));
        let sim = common::random_image(&mut rng, w, h);
        let diff = common::random_image(&mut rng, w, h);
        let weights = if rng.gen_bool(0.5) {
            build_weight_map(&common::random_labels(&mut rng, w, h), &table).map_err(|e| e.to_string())?
        } else {
            Plane::from_fn(w, h, |_, _| rng.gen::<f32>())
        };
        let out = blend_images(&sim, &diff, &weights).map_err(|e| e.to_string())?;
        for y in 0..h {
            for x in 0..w {
                let wt = f64::from(weights.get(x, y));
                let (s, d, o) = (sim.pixel(x, y), diff.pixel(x, y), out.pixel(x, y));
                for c in 0..3 {
                    let want = wt * f64::from(d[c]) + (1.0 - wt) * f64::from(s[c]);
                    max_err = max_err.max((f64::from(o[c]) - want).abs());
                    let q_want = (want * 255.0).round().clamp(0.0, 255.0) as i32;
                    max_lsb = max_lsb.max((i32::from(quantize_u8(o[c])) - q_want).abs());
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(max_err <= 1e-6, || format!("max abs error {max_err:e}"))?;
    ensure(max_lsb <= 1, || format!("max quantized error {max_lsb} LSB"))?;
    ensure(secs < 1.0, || format!("took {secs:.2}s"))?;
    Ok(format!("50 pairs, max err {max_err:.1e}, max {max_lsb} LSB, {secs:.3}s"))
}

fn weight_table() -> Outcome {
    let tiers: [(f32, &[&str]); 6] = [
        (
            0.9,
            &[
                "unlabeled", "sidewalk", "building", "wall", "fence", "vegetation", "terrain", "sky", "static",
                "other", "water", "ground", "bridge", "guard rail",
            ],
        ),
        (0.8, &["road"]),
        (0.7, &["pole", "dynamic", "road line", "rail track"]),
        (0.5, &["traffic sign"]),
        (0.3, &["pedestrian", "rider", "motorcycle", "bicycle"]),
        (0.1, &["traffic light", "car", "truck", "bus", "train"]),
    ];
    let table = ClassWeightTable::default();
    let mut seen = 0;
    for (w, names) in tiers {
        for name in names {
            let id = class_id(name).ok_or_else(|| format!("unknown class {name}"))?;
            ensure(table.get(id) == Some(w), || format!("{name}: {:?} != {w}", table.get(id)))?;
            seen += 1;
        }
    }
    ensure(seen == CLASS_COUNT && table.len() == CLASS_COUNT, || {
        format!("{seen} listed, table has {}", table.len())
    })?;
    Ok(format!("{seen} classes in 6 tiers"))
}

fn region_moments(lab: &LabImage, idx: &[usize], c: usize) -> (f64, f64) {
    let n = idx.len() as f64;
    let mean = idx.iter().map(|&i| f64::from(lab.data()[i * 3 + c])).sum::<f64>() / n;
    let var = idx.iter().map(|&i| (f64::from(lab.data()[i * 3 + c]) - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn reinhard() -> Outcome {
    let mut rng = rng_from_seed(2);
    let (mut mean_err, mut std_rel) = (0.0f64, 0.0f64);
    for gamma in [0.5, 1.0] {
        for _ in 0..100 {
            let (w, h) = (rng.gen_range(4..64), rng.gen_range(4..64));
            let data: Vec<f32> = (0..w * h)
                .flat_map(|_| [rng.gen_range(0.0..100.0), rng.gen_range(-80.0..80.0), rng.gen_range(-80.0..80.0)])
                .collect();
            let lab = LabImage::new(w, h, data).map_err(|e| e.to_string())?;
            let keep = rng.gen_range(0.05..1.0);
            let mut idx: Vec<usize> = (0..w * h).filter(|_| rng.gen_bool(keep)).collect();
            if idx.len() < 2 {
                idx = vec![0, w * h - 1];
            }
            let src = compute_stats(&lab, Region::Pixels(&idx)).map_err(|e| e.to_string())?;
            let mut tgt = src;
            for c in 0..3 {
                tgt.mean[c] = rng.gen_range(-60.0..110.0);
                tgt.std[c] = rng.gen_range(1.0..40.0);
            }
            let out = reinhard_transfer(&lab, &src, &tgt, gamma, Region::Pixels(&idx));
            for c in 0..3 {
                let (m, s) = region_moments(&out, &idx, c);
                let want = src.std[c].powf(1.0 - gamma) * tgt.std[c].powf(gamma);
                mean_err = mean_err.max((m - tgt.mean[c]).abs());
                if want > 0.0 {
                    std_rel = std_rel.max((s - want).abs() / want);
                }
            }
        }
    }
    ensure(mean_err <= 1e-5, || format!("mean error {mean_err:e}"))?;
    ensure(std_rel <= 1e-4, || format!("std relative error {std_rel:e}"))?;
    Ok(format!("200 regions, mean err {mean_err:.1e}, std rel err {std_rel:.1e}"))
}

fn clamp_anchor() -> Outcome {
    let mut rng = rng_from_seed(3);
    let ranges = [(0.0f32, 100.0f32), (-128.0, 127.0)];
    let mut overflowed = 0;
    for k in 0..1000 {
        let range = ranges[k % 2];
        let anchor = rng.gen_range(range.0..range.1);
        let spread = rng.gen_range(1.0..200.0f32);
        let n = rng.gen_range(2..300);
        let mut values: Vec<f32> = (0..n).map(|_| anchor + rng.gen_range(-spread..spread)).collect();
        values.push(anchor);
        let out = clamp_preserving_anchor(&values, anchor, range);
        let (vmin, vmax) = values.iter().fold((f32::INFINITY, f32::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let (hi_over, lo_over) = (vmax > range.1, vmin < range.0);
        overflowed += usize::from(hi_over || lo_over);
        ensure(out.iter().all(|v| (range.0..=range.1).contains(v)), || format!("channel {k}: out of range"))?;
        ensure(out[n] == anchor, || format!("channel {k}: anchor {anchor} moved to {}", out[n]))?;
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        ensure(order.windows(2).all(|p| out[p[0]] <= out[p[1]]), || format!("channel {k}: not monotone"))?;
        for (v, o) in values.iter().zip(&out) {
            let untouched = (!hi_over && *v >= anchor) || (!lo_over && *v <= anchor);
            ensure(!untouched || v.to_bits() == o.to_bits(), || format!("channel {k}: {v} changed to {o}"))?;
        }
    }
    Ok(format!("1000 channels, {overflowed} overflowing"))
}

fn w_orig_ks() -> Outcome {
    let draws: Vec<f64> = (0..10_000u64).map(|i| f64::from(sample_w_orig(derive_seed(4, &[&i.to_string()]), (0.0, 0.5)))).collect();
    ensure(draws.iter().all(|w| (0.0..=0.5).contains(w)), || "draw outside [0, 0.5]".into())?;
    let (ok, d, crit) = common::ks_uniform_passes(&draws, 0.0, 0.5);
    ensure(ok, || format!("KS D={d:.4} > {crit:.4}"))?;
    Ok(format!("10000 draws, KS D={d:.4} <= {crit:.4}"))
}

fn coloring() -> Outcome {
    let mut rng = rng_from_seed(5);
    let mut worst_sparse = 0;
    for k in 0..200 {
        let (w, h) = (rng.gen_range(32..160), rng.gen_range(32..160));
        let sparse = k % 2 == 0;
        let inst = if sparse {
            let count = rng.gen_range(1..=50);
            common::sparse_instances(&mut rng, w, h, count)
        } else {
            let count = rng.gen_range(2..200);
            common::voronoi_instances(&mut rng, w, h, count)
        };
        let graph = instance_adjacency(&inst);
        let colors = greedy_color(&graph);
        for (a, b) in graph.edges() {
            ensure(colors[&a] != colors[&b], || format!("map {k}: {a} and {b} share a color"))?;
        }
        let used = colors.values().max().map_or(0, |m| m + 1);
        ensure(used <= graph.max_degree() + 1, || format!("map {k}: {used} colors, max degree {}", graph.max_degree()))?;
        let colored = colored_instance_map(&inst).map_err(|e| e.to_string())?;
        ensure(colored.colors_used == used, || format!("map {k}: map reports {} colors", colored.colors_used))?;
        for y in 0..h {
            for x in 0..w {
                let id = inst.get(x, y);
                let c = colored.map.get(x, y);
                let want = if id == 0 { 255 } else { colors[&id] as u8 };
                ensure(c == want, || format!("map {k}: pixel ({x},{y}) colored {c}, want {want}"))?;
            }
        }
        if sparse {
            worst_sparse = worst_sparse.max(used);
            ensure(used <= EXPECTED_MAX_COLORS, || format!("sparse map {k}: {used} colors"))?;
        }
    }
    Ok(format!("200 maps valid, sparse maps use at most {worst_sparse} colors"))
}

fn one_hot() -> Outcome {
    let mut rng = rng_from_seed(6);
    for k in 0..50 {
        let (w, h) = (rng.gen_range(1..80), rng.gen_range(1..80));
        let labels = common::random_labels(&mut rng, w, h);
        let oh = one_hot_semseg(&labels, CLASS_COUNT).map_err(|e| e.to_string())?;
        for i in 0..w * h {
            let sum: u32 = (0..CLASS_COUNT).map(|c| u32::from(oh.data()[c * w * h + i])).sum();
            ensure(sum == 1, || format!("map {k}: pixel {i} sums to {sum}"))?;
            let hot = oh.data()[usize::from(labels.data()[i]) * w * h + i];
            ensure(hot == 1, || format!("map {k}: pixel {i} not hot at its label"))?;
        }
    }
    Ok("50 maps, every pixel sums to 1".into())
}

fn weather() -> Outcome {
    for cond in SimCondition::ALL {
        let bounds = intervals(cond);
        for i in 0..1000u64 {
            let seed = derive_seed(7, &[cond.as_str(), &i.to_string()]);
            let p = sample_weather(cond, seed);
            for (v, (lo, hi)) in p.variable_values().iter().zip(bounds) {
                ensure((lo..=hi).contains(v), || format!("{cond:?} draw {i}: {v} outside [{lo}, {hi}]"))?;
            }
            ensure(
                p.mie_scattering_scale == 0.03 && p.rayleigh_scattering_scale == 0.0331 && p.scattering_intensity == 1.0,
                || format!("{cond:?} draw {i}: scattering constants changed"),
            )?;
            ensure(p == sample_weather(cond, seed), || format!("{cond:?} draw {i}: not reproducible"))?;
        }
    }
    ensure(
        MIE_SCATTERING_SCALE == 0.03 && RAYLEIGH_SCATTERING_SCALE == 0.0331 && SCATTERING_INTENSITY == 1.0,
        || "constants".into(),
    )?;
    Ok("4 conditions x 1000 draws in range, constants exact, reproducible".into())
}

fn manifest() -> Outcome {
    let synth: Vec<ManifestEntry> = (0..10_000)
        .map(|i| ManifestEntry {
            image: format!("synthetic/clear/images/{i:05}.png").into(),
            label: format!("synthetic/clear/labels/{i:05}.png").into(),
            condition: Condition::Clear,
            origin: Origin::Synthetic,
            seed: i,
        })
        .collect();
    let real: Vec<ManifestEntry> = (0..500)
        .map(|i| ManifestEntry {
            image: format!("real/images/{i:04}.png").into(),
            label: format!("real/labels/{i:04}.png").into(),
            condition: Condition::Clear,
            origin: Origin::Real,
            seed: 0,
        })
        .collect();
    let mut counts = Vec::new();
    for seed in [8, 9, 10] {
        let a = build_manifest(&synth, &real, 10.0, seed, MixMode::Bernoulli).map_err(|e| e.to_string())?;
        let b = build_manifest(&synth, &real, 10.0, seed, MixMode::Bernoulli).map_err(|e| e.to_string())?;
        ensure(a.to_json() == b.to_json(), || format!("seed {seed}: not deterministic"))?;
        let n = a.replaced_count();
        ensure((910..=1090).contains(&n), || format!("seed {seed}: {n} replacements"))?;
        counts.push(n);
    }
    Ok(format!("replacements {counts:?}, deterministic"))
}

fn identity_checks(img: &RasterImage) -> Result<(), String> {
    let same = |name: &str, out: RasterImage| ensure(out == *img, || format!("{name} is not identity at neutral"));
    let e = |e: weathersynth_core::Error| e.to_string();
    same("desaturate", desaturate(img, 0.0).map_err(e)?)?;
    same("channel_scale", channel_scale(img, [1.0; 3]).map_err(e)?)?;
    same("tone_adjust", tone_adjust(img, 1.0, 1.0).map_err(e)?)?;
    same("color_mix", color_mix(img, IDENTITY_MATRIX).map_err(e)?)?;
    same("snow_bleach", snow_bleach(img, 0.6, 0.0).map_err(e)?)?;
    same("glass_blur", glass_blur(img, 0, 11))?;
    same("gaussian_blur", img.gaussian_blur(0.0).map_err(e)?)?;
    let blobs = BlobOverlay {
        count: 50,
        alpha: 0.0,
        radius: BlobRadius::Pixels { min: 2.0, max: 6.0 },
        sharpness: 2.0,
        color: [1.0; 3],
        vertical_extent: 1.0,
    };
    same("gaussian_overlay", gaussian_overlay(img, &blobs, 12).map_err(e)?)?;
    let streaks = StreakParams { alpha: (0.0, 0.0), ..StreakParams::default() };
    same("line_streak_overlay", line_streak_overlay(img, &streaks, 13).map_err(e)?.0)?;
    Ok(())
}

fn augmentation() -> Outcome {
    let mut rng = rng_from_seed(14);
    let img = common::textured_image(&mut rng, 96, 72);
    identity_checks(&img)?;

    for cond in Condition::ADVERSE {
        let recipe = Recipe::default_for(cond).map_err(|e| e.to_string())?;
        for seed in [1u64, 99] {
            let a = recipe.apply(&img, seed).map_err(|e| e.to_string())?.to_rgb8();
            let b = recipe.apply(&img, seed).map_err(|e| e.to_string())?.to_rgb8();
            ensure(a == b, || format!("{cond} recipe not byte-deterministic"))?;
        }
    }

    let n = 64;
    let coded = RasterImage::from_fn(n, n, |x, y| [x as f32 / 63.0, y as f32 / 63.0, 0.5]);
    let mut checked = 0;
    for radius in 1..=6u32 {
        for seed in 0..4u64 {
            let out = glass_blur(&coded, radius, seed);
            for y in 0..n {
                for x in 0..n {
                    let p = out.pixel(x, y);
                    let (sx, sy) = ((p[0] * 63.0).round() as i64, (p[1] * 63.0).round() as i64);
                    let d = (sx - x as i64).abs().max((sy - y as i64).abs());
                    ensure(d <= i64::from(radius), || {
                        format!("glass r={radius}: ({x},{y}) took ({sx},{sy})")
                    })?;
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("9 primitives identity, 4 recipes deterministic, {checked} glass pixels contained"))
}

fn radii() -> Outcome {
    let small = equivalent_radius(32.0 * 32.0).map_err(|e| e.to_string())?;
    let medium = equivalent_radius(96.0 * 96.0).map_err(|e| e.to_string())?;
    ensure((small - 18.054).abs() <= 1e-3, || format!("r(32^2) = {small}"))?;
    ensure((medium - 54.163).abs() <= 1e-3, || format!("r(96^2) = {medium}"))?;
    Ok(format!("r(32^2)={small:.4}, r(96^2)={medium:.4}"))
}

fn end_to_end() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = tmp.path().join("in");
    common::write_fixture(&input, 20, 5, 160, 120, 15);
    let start = Instant::now();
    let mut digests = BTreeMap::new();
    for workers in [1usize, 4, 8] {
        let mut cfg = PipelineConfig::new(&input, tmp.path().join(format!("out{workers}")), 2024);
        cfg.workers = workers;
        cfg.calibration_dir = Some(input.join("calib"));
        let report = run_pipeline(&cfg).map_err(|e| e.to_string())?;
        ensure(report.failure_count() == 0 && report.success_count() == 20, || {
            format!("workers {workers}: {} ok, {} failed", report.success_count(), report.failure_count())
        })?;
        digests.insert(workers, tree_digest(&cfg.output_dir).map_err(|e| e.to_string())?);
    }
    let secs = start.elapsed().as_secs_f64();
    let first = digests[&1].clone();
    ensure(digests.values().all(|d| *d == first), || format!("digests differ: {digests:?}"))?;
    ensure(secs < 30.0, || format!("took {secs:.1}s"))?;
    Ok(format!("20 items, digest {} for workers 1/4/8, {secs:.2}s", &first[..12]))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("blend matches scalar oracle", blend_oracle),
        ("default class weight table", weight_table),
        ("Reinhard transfer moments", reinhard),
        ("clamp_preserving_anchor", clamp_anchor),
        ("palette blend w_orig uniform", w_orig_ks),
        ("greedy instance coloring", coloring),
        ("one-hot semseg partition", one_hot),
        ("weather sampler", weather),
        ("manifest replacement ratio", manifest),
        ("augmentation recipes", augmentation),
        ("equivalent radius thresholds", radii),
        ("end-to-end run determinism", end_to_end),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
