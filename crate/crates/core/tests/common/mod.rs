#![allow(dead_code)]

use std::path::Path;

use rand::Rng as _;
use weathersynth_core::imgcore::io;
use weathersynth_core::pipeline::{DIFF_DIR, INSTANCES_DIR, SEMSEG_DIR, SIM_DIR};
use weathersynth_core::seed::{rng_from_seed, Rng};
use weathersynth_core::taxonomy::CLASS_COUNT;
use weathersynth_core::{InstanceMap, LabelMap, Plane, RasterImage};

/// Asymptotic Kolmogorov-Smirnov critical value at alpha = 0.01.
pub const KS_C_001: f64 = 1.628;

/// One-sample KS statistic against a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

pub fn ks_uniform_passes(samples: &[f64], lo: f64, hi: f64) -> (bool, f64, f64) {
    let d = ks_statistic(samples, |x| ((x - lo) / (hi - lo)).clamp(0.0, 1.0));
    let crit = KS_C_001 / (samples.len() as f64).sqrt();
    (d <= crit, d, crit)
}

pub fn random_image(rng: &mut Rng, w: usize, h: usize) -> RasterImage {
    RasterImage::from_fn(w, h, |_, _| [rng.gen(), rng.gen(), rng.gen()])
}

/// Smooth-ish image: gradients plus noise, closer to a photo than pure noise.
pub fn textured_image(rng: &mut Rng, w: usize, h: usize) -> RasterImage {
    let base: [f32; 3] = [rng.gen(), rng.gen(), rng.gen()];
    RasterImage::from_fn(w, h, |x, y| {
        let gx = x as f32 / w.max(1) as f32;
        let gy = y as f32 / h.max(1) as f32;
        std::array::from_fn(|c| (0.6 * base[c] + 0.2 * gx + 0.2 * gy * (c as f32 / 2.0)) + rng.gen_range(-0.05..0.05))
    })
}

/// Label map made of random axis-aligned rectangles of known classes.
pub fn random_labels(rng: &mut Rng, w: usize, h: usize) -> LabelMap {
    let mut map = Plane::filled(w, h, rng.gen_range(0..CLASS_COUNT as u8));
    for _ in 0..rng.gen_range(1..12) {
        let class = rng.gen_range(0..CLASS_COUNT as u8);
        let (x0, y0) = (rng.gen_range(0..w), rng.gen_range(0..h));
        let (x1, y1) = (rng.gen_range(x0..w) + 1, rng.gen_range(y0..h) + 1);
        for y in y0..y1 {
            for x in x0..x1 {
                map.set(x, y, class);
            }
        }
    }
    map
}

/// Sparse instance map: `count` rectangles of moderate size on background.
pub fn sparse_instances(rng: &mut Rng, w: usize, h: usize, count: u16) -> InstanceMap {
    let mut map = Plane::filled(w, h, 0u16);
    for id in 1..=count {
        let bw = rng.gen_range(2..=(w / 6).max(3));
        let bh = rng.gen_range(2..=(h / 6).max(3));
        let x0 = rng.gen_range(0..w - bw.min(w - 1));
        let y0 = rng.gen_range(0..h - bh.min(h - 1));
        for y in y0..(y0 + bh).min(h) {
            for x in x0..(x0 + bw).min(w) {
                map.set(x, y, id);
            }
        }
    }
    map
}

/// Dense partition: nearest of `count` random seeds, no background.
pub fn voronoi_instances(rng: &mut Rng, w: usize, h: usize, count: u16) -> InstanceMap {
    let seeds: Vec<(f32, f32)> = (0..count)
        .map(|_| (rng.gen_range(0.0..w as f32), rng.gen_range(0.0..h as f32)))
        .collect();
    Plane::from_fn(w, h, |x, y| {
        let (px, py) = (x as f32 + 0.5, y as f32 + 0.5);
        let best = seeds
            .iter()
            .enumerate()
            .min_by(|a, b| {
                let da = (a.1 .0 - px).powi(2) + (a.1 .1 - py).powi(2);
                let db = (b.1 .0 - px).powi(2) + (b.1 .1 - py).powi(2);
                da.total_cmp(&db)
            })
            .map(|(i, _)| i)
            .unwrap();
        best as u16 + 1
    })
}

/// Writes `items` pipeline inputs (sim, diff, semseg, instances) under `root`
/// and `frames` calibration frames under `root/calib`.
pub fn write_fixture(root: &Path, items: usize, frames: usize, w: usize, h: usize, seed: u64) {
    let mut rng = rng_from_seed(seed);
    for d in [SIM_DIR, DIFF_DIR, SEMSEG_DIR, INSTANCES_DIR, "calib"] {
        std::fs::create_dir_all(root.join(d)).unwrap();
    }
    for i in 0..items {
        let stem = format!("item_{i:03}");
        io::write_rgb(root.join(SIM_DIR).join(format!("{stem}.png")), &textured_image(&mut rng, w, h)).unwrap();
        io::write_rgb(root.join(DIFF_DIR).join(format!("{stem}.png")), &textured_image(&mut rng, w, h)).unwrap();
        io::write_gray8(root.join(SEMSEG_DIR).join(format!("{stem}.png")), &random_labels(&mut rng, w, h)).unwrap();
        let inst = sparse_instances(&mut rng, w, h, 8);
        io::write_gray16(root.join(INSTANCES_DIR).join(format!("{stem}.png")), &inst).unwrap();
    }
    for i in 0..frames {
        let img = textured_image(&mut rng, w / 2 + 7, h / 2 + 3);
        io::write_rgb(root.join("calib").join(format!("frame_{i:02}.png")), &img).unwrap();
    }
}
