use std::path::Path;
use std::process::{Command, Output};

use image::{ImageBuffer, Luma, Rgb};

fn weathersynth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weathersynth")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn rgb(path: &Path, w: u32, h: u32, seed: u32) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    ImageBuffer::from_fn(w, h, |x, y| {
        let v = (x * 7 + y * 13 + seed * 31) % 256;
        Rgb([v as u8, (255 - v) as u8, ((v * 3) % 256) as u8])
    })
    .save(path)
    .unwrap();
}

fn labels(path: &Path, w: u32, h: u32) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    ImageBuffer::from_fn(w, h, |x, y| Luma([if y < h / 2 { 11u8 } else if x < w / 2 { 1 } else { 14 }]))
        .save(path)
        .unwrap();
}

fn instances(path: &Path, w: u32, h: u32) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    ImageBuffer::from_fn(w, h, |x, y| Luma([if y < 4 { 0u16 } else { (1 + x / 8 + 4 * (y / 8)) as u16 }]))
        .save(path)
        .unwrap();
}

fn fixture(root: &Path, items: u32) {
    for i in 0..items {
        let f = format!("{i:02}.png");
        rgb(&root.join("sim").join(&f), 32, 24, i);
        rgb(&root.join("diff").join(&f), 32, 24, i + 100);
        labels(&root.join("semseg").join(&f), 32, 24);
        instances(&root.join("instances").join(&f), 32, 24);
    }
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn run_is_deterministic_across_workers() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    fixture(&input, 4);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let in_s = input.to_str().unwrap();
    let out = weathersynth(&["--seed", "5", "run", "--input", in_s, "--output", a.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = weathersynth(&["--seed", "5", "--workers", "3", "run", "--input", in_s, "--output", b.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(files(&a), files(&b));
    assert!(a.join("00.png").is_file() && a.join("00.json").is_file() && a.join("report.json").is_file());
}

#[test]
fn run_with_config_file_and_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    fixture(&input, 2);
    let cfg = tmp.path().join("cfg.json");
    let text = format!(
        r#"{{"seed": 1, "input_dir": {:?}, "output_dir": {:?}, "smoothing": {{"dither_amplitude": 0.0, "sigma": 2.0}}}}"#,
        input,
        tmp.path().join("unused")
    );
    std::fs::write(&cfg, text).unwrap();
    let out_dir = tmp.path().join("out");
    let out = weathersynth(&["run", "--config", cfg.to_str().unwrap(), "--output", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("01.png").is_file());
    assert!(!tmp.path().join("unused").exists());
}

#[test]
fn run_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let out = weathersynth(&["run", "--input", empty.to_str().unwrap(), "--output", tmp.path().join("o1").to_str().unwrap()]);
    assert_eq!(code(&out), 0);

    let input = tmp.path().join("in");
    fixture(&input, 3);
    std::fs::write(input.join("sim").join("01.png"), b"garbage").unwrap();
    let o2 = tmp.path().join("o2");
    let out = weathersynth(&["run", "--input", input.to_str().unwrap(), "--output", o2.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(o2.join("00.png").is_file() && o2.join("02.png").is_file() && !o2.join("01.png").exists());
    let report = std::fs::read_to_string(o2.join("report.json")).unwrap();
    assert!(report.contains("\"01\""));

    let out = weathersynth(&["run", "--input", tmp.path().join("missing").to_str().unwrap(), "--output", "x"]);
    assert_eq!(code(&out), 2);
    let out = weathersynth(&["run"]);
    assert_eq!(code(&out), 2);
    let out = weathersynth(&["--workers", "0", "run", "--input", empty.to_str().unwrap(), "--output", "x"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn blend_colormatch_calibrate_write_images() {
    let tmp = tempfile::tempdir().unwrap();
    let p = |s: &str| tmp.path().join(s);
    rgb(&p("sim.png"), 40, 30, 1);
    rgb(&p("diff.png"), 40, 30, 2);
    labels(&p("sem.png"), 40, 30);
    instances(&p("inst.png"), 40, 30);
    rgb(&p("calib/a.png"), 20, 10, 3);
    rgb(&p("calib/b.png"), 25, 15, 4);
    let s = |n: &str| p(n).to_str().unwrap().to_string();

    let out = weathersynth(&[
        "blend", "--sim", &s("sim.png"), "--diff", &s("diff.png"), "--semseg", &s("sem.png"), "--out", &s("o/blend.png"),
        "--weight-map-out", &s("o/w.png"),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(image::open(p("o/blend.png")).unwrap().width(), 40);
    assert!(p("o/w.png").is_file());

    let out = weathersynth(&[
        "colormatch", "--src", &s("sim.png"), "--tgt", &s("diff.png"), "--instances", &s("inst.png"), "--out",
        &s("o/cm.png"),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let out = weathersynth(&["calibrate", "--input", &s("o/blend.png"), "--calib-dir", &s("calib"), "--out", &s("o/cal.png")]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let w = summary["w_orig"].as_f64().unwrap();
    assert!((0.0..=0.5).contains(&w));

    let out = weathersynth(&["blend", "--sim", &s("sim.png"), "--diff", &s("calib/a.png"), "--semseg", &s("sem.png"), "--out", &s("o/x.png")]);
    assert_eq!(code(&out), 1);
}

#[test]
fn augment_directory_in_parallel_matches_serial() {
    let tmp = tempfile::tempdir().unwrap();
    for i in 0..5 {
        rgb(&tmp.path().join("imgs").join(format!("im{i}.png")), 48, 32, i);
    }
    let inp = tmp.path().join("imgs");
    let run = |workers: &str, out: &str| {
        let o = tmp.path().join(out);
        let r = weathersynth(&[
            "--seed", "3", "--workers", workers, "augment", "--condition", "rain", "--input", inp.to_str().unwrap(),
            "--out", o.to_str().unwrap(),
        ]);
        assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
        files(&o)
    };
    let serial = run("1", "s");
    assert_eq!(serial.len(), 10);
    assert_eq!(serial, run("4", "p"));
    let side: serde_json::Value = serde_json::from_slice(&serial.iter().find(|f| f.0 == "im0.json").unwrap().1).unwrap();
    assert_eq!(side["condition"], "rain");
    assert_eq!(side["recipe"]["condition"], "rain");
}

#[test]
fn augment_overrides_and_bad_condition() {
    let tmp = tempfile::tempdir().unwrap();
    let img = tmp.path().join("a.png");
    rgb(&img, 32, 32, 0);
    let params = tmp.path().join("p.json");
    std::fs::write(&params, r#"{"gamma": 1.0, "sky": {"count": 0}}"#).unwrap();
    let out = tmp.path().join("n.png");
    let r = weathersynth(&[
        "augment", "--condition", "night", "--params", params.to_str().unwrap(), "--input", img.to_str().unwrap(), "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let side = std::fs::read_to_string(out.with_extension("json")).unwrap();
    assert!(side.contains("\"count\": 0"));

    let r = weathersynth(&["augment", "--condition", "hail", "--input", img.to_str().unwrap(), "--out", "x.png"]);
    assert_eq!(code(&r), 2);
    std::fs::write(&params, r#"{"no_such_field": 1}"#).unwrap();
    let r = weathersynth(&[
        "augment", "--condition", "fog", "--params", params.to_str().unwrap(), "--input", img.to_str().unwrap(), "--out", "x.png",
    ]);
    assert_eq!(code(&r), 2);
}

#[test]
fn auxprep_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let depth = tmp.path().join("d.png");
    ImageBuffer::from_fn(16, 8, |x, _| Luma([(x * 1000) as u16])).save(&depth).unwrap();
    let sem = tmp.path().join("s.png");
    labels(&sem, 16, 8);
    let inst = tmp.path().join("i.png");
    instances(&inst, 16, 8);
    let out_dir = tmp.path().join("aux");
    let r = weathersynth(&[
        "auxprep", "--depth", depth.to_str().unwrap(), "--semseg", sem.to_str().unwrap(), "--instances",
        inst.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let d = image::open(out_dir.join("d_depth.png")).unwrap().into_luma16();
    assert_eq!(d.get_pixel(0, 0)[0], 0);
    assert_eq!(d.get_pixel(15, 0)[0], u16::MAX);
    let npy = std::fs::read(out_dir.join("s_onehot.npy")).unwrap();
    assert_eq!(&npy[..6], b"\x93NUMPY");
    assert_eq!(npy.len() % 64, (29 * 16 * 8) % 64);
    let colored = image::open(out_dir.join("i_instances.png")).unwrap().into_luma8();
    assert_eq!(colored.get_pixel(0, 0)[0], 255);

    let r = weathersynth(&[
        "auxprep", "--semseg", sem.to_str().unwrap(), "--onehot-format", "png", "--out-dir", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 0);
    assert!(out_dir.join("s_onehot").join("class_28.png").is_file());
    let r = weathersynth(&["auxprep", "--semseg", sem.to_str().unwrap(), "--classes", "5", "--out-dir", out_dir.to_str().unwrap()]);
    assert_ne!(code(&r), 0);
}

#[test]
fn sample_weather_files() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("w");
    let r = weathersynth(&["--seed", "9", "sample-weather", "--condition", "all", "--count", "3", "--out-dir", dir.to_str().unwrap()]);
    assert_eq!(code(&r), 0);
    assert_eq!(files(&dir).len(), 12);
    let fog: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("fog_0000.json")).unwrap()).unwrap();
    assert_eq!(fog["mie_scattering_scale"], 0.03);
    let r = weathersynth(&["sample-weather", "--condition", "snow", "--out-dir", dir.to_str().unwrap()]);
    assert_eq!(code(&r), 2);
}

#[test]
fn manifest_and_stats() {
    let tmp = tempfile::tempdir().unwrap();
    let p = |s: &str| tmp.path().join(s);
    for i in 0..20 {
        for d in ["synth/clear/images", "synth/clear/labels", "real/images", "real/labels"] {
            labels(&p(d).join(format!("{i:02}.png")), 4, 4);
        }
    }
    for d in ["synth/fog/images", "synth/fog/labels"] {
        labels(&p(d).join("f.png"), 4, 4);
    }
    let m = p("m.json");
    let (synth, real) = (p("synth"), p("real"));
    let args = [
        "--seed", "1", "manifest", "--synthetic-dir", synth.to_str().unwrap(), "--real-dir", real.to_str().unwrap(),
        "--ratio", "50", "--exact", "--out", m.to_str().unwrap(),
    ];
    assert_eq!(code(&weathersynth(&args)), 0);
    let first = std::fs::read(&m).unwrap();
    assert_eq!(code(&weathersynth(&args)), 0);
    assert_eq!(first, std::fs::read(&m).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&first).unwrap();
    let entries = v["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 21);
    assert_eq!(entries.iter().filter(|e| e["origin"] == "real").count(), 10);

    let coco = p("ann.json");
    std::fs::write(
        &coco,
        r#"{"images": [{"id": 1, "file_name": "fog/a.png"}, {"id": 2, "file_name": "night/b.png"}],
            "annotations": [{"image_id": 1, "category_id": 1, "bbox": [0, 0, 10, 10]},
                            {"image_id": 1, "category_id": 2, "bbox": [0, 0, 50, 50]},
                            {"image_id": 2, "category_id": 1, "bbox": [0, 0, 200, 100]}],
            "categories": [{"id": 1, "name": "car"}, {"id": 2, "name": "person"}]}"#,
    )
    .unwrap();
    let out = p("stats");
    let r = weathersynth(&["stats", "--annotations", coco.to_str().unwrap(), "--svg", "--ranking", "2,1", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let buckets = std::fs::read_to_string(out.join("coco_buckets.csv")).unwrap();
    assert!(buckets.contains("fog,1,1,0,2"), "{buckets}");
    assert!(buckets.contains("night,0,0,1,1"), "{buckets}");
    let cats = std::fs::read_to_string(out.join("categories.csv")).unwrap();
    assert!(cats.lines().nth(1).unwrap().starts_with("fog,2,person"), "{cats}");
    assert!(std::fs::read_to_string(out.join("sizes.svg")).unwrap().starts_with("<svg"));
    let r = weathersynth(&["stats", "--annotations", coco.to_str().unwrap(), "--by", "all", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code(&r), 0);
    assert!(std::fs::read_to_string(out.join("coco_buckets.csv")).unwrap().contains("all,1,1,1,3"));
}
