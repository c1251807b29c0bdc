//! Object size and category distributions of COCO-style detection annotations,
//! grouped by weather condition.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::condition::Condition;
use crate::error::{Error, Result};

/// COCO small/medium boundary area (`32^2`).
pub const COCO_SMALL_MAX_AREA: f64 = 32.0 * 32.0;
/// COCO medium/large boundary area (`96^2`).
pub const COCO_MEDIUM_MAX_AREA: f64 = 96.0 * 96.0;

/// Condition label used when none can be determined.
pub const UNKNOWN_CONDITION: &str = "unknown";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub image_id: u64,
    pub condition: String,
    pub category_id: u64,
    /// `[x, y, w, h]` in pixels.
    pub bbox: Option<[f64; 4]>,
    /// Object area in pixels^2.
    pub area: f64,
}

/// Radius of the circle with the given area.
pub fn equivalent_radius(area: f64) -> Result<f64> {
    if area.is_nan() || area < 0.0 {
        return Err(Error::param("area", format!("must be >= 0, got {area}")));
    }
    Ok((area / std::f64::consts::PI).sqrt())
}

/// Which area an annotation contributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AreaSource {
    /// `w * h` of the bounding box.
    #[default]
    Box,
    /// The annotation's `area` field (segmentation mask area).
    Mask,
}

#[derive(Debug, Deserialize)]
struct CocoFile {
    images: Vec<CocoImage>,
    annotations: Vec<CocoAnnotation>,
    #[serde(default)]
    categories: Vec<CocoCategory>,
}

#[derive(Debug, Deserialize)]
struct CocoImage {
    id: u64,
    #[serde(default)]
    file_name: String,
    #[serde(default)]
    condition: Option<String>,
}

#[derive(Debug, Deserialize)]
struct CocoAnnotation {
    image_id: u64,
    category_id: u64,
    #[serde(default)]
    bbox: Option<[f64; 4]>,
    #[serde(default)]
    area: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct CocoCategory {
    pub id: u64,
    pub name: String,
}

#[derive(Debug, Clone)]
pub struct AnnotationSet {
    pub annotations: Vec<Annotation>,
    pub categories: Vec<CocoCategory>,
}

impl AnnotationSet {
    pub fn category_name(&self, id: u64) -> Option<&str> {
        self.categories.iter().find(|c| c.id == id).map(|c| c.name.as_str())
    }
}

/// Infers the condition from an explicit tag or from a path component of the
/// file name (e.g. `rgb_anon/fog/train/...`).
pub fn infer_condition(file_name: &str, explicit: Option<&str>) -> String {
    if let Some(c) = explicit {
        return c.to_ascii_lowercase();
    }
    file_name
        .split(['/', '\\'])
        .find_map(|part| part.parse::<Condition>().ok())
        .map_or_else(|| UNKNOWN_CONDITION.to_string(), |c| c.as_str().to_string())
}

pub fn parse_coco(text: &str, source: AreaSource) -> Result<AnnotationSet> {
    let coco: CocoFile = serde_json::from_str(text)?;
    let conditions: BTreeMap<u64, String> = coco
        .images
        .iter()
        .map(|im| (im.id, infer_condition(&im.file_name, im.condition.as_deref())))
        .collect();
    let mut annotations = Vec::with_capacity(coco.annotations.len());
    for a in coco.annotations {
        let condition = conditions
            .get(&a.image_id)
            .cloned()
            .ok_or_else(|| Error::Config(format!("annotation refers to unknown image {}", a.image_id)))?;
        let area = match (source, a.bbox, a.area) {
            (AreaSource::Box, Some([_, _, w, h]), _) => {
                if !(w > 0.0 && h > 0.0) {
                    return Err(Error::Config(format!(
                        "degenerate box {w}x{h} on image {}",
                        a.image_id
                    )));
                }
                w * h
            }
            (_, _, Some(area)) => area,
            (AreaSource::Mask, Some([_, _, w, h]), None) => w * h,
            (_, None, None) => {
                return Err(Error::Config(format!(
                    "annotation on image {} has neither bbox nor area",
                    a.image_id
                )))
            }
        };
        if area.is_nan() || area <= 0.0 {
            return Err(Error::Config(format!("non-positive area on image {}", a.image_id)));
        }
        annotations.push(Annotation {
            image_id: a.image_id,
            condition,
            category_id: a.category_id,
            bbox: a.bbox,
            area,
        });
    }
    Ok(AnnotationSet {
        annotations,
        categories: coco.categories,
    })
}

pub fn read_coco(path: &Path, source: AreaSource) -> Result<AnnotationSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_coco(&text, source)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CocoBuckets {
    pub small: usize,
    pub medium: usize,
    pub large: usize,
}

impl CocoBuckets {
    pub fn add(&mut self, area: f64) {
        if area < COCO_SMALL_MAX_AREA {
            self.small += 1;
        } else if area < COCO_MEDIUM_MAX_AREA {
            self.medium += 1;
        } else {
            self.large += 1;
        }
    }

    pub fn total(&self) -> usize {
        self.small + self.medium + self.large
    }
}

/// Equivalent-radius histogram of one group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeHistogram {
    /// Counts for `[edges[i], edges[i + 1])`; the last bin includes its upper edge.
    pub bins: Vec<usize>,
    pub below: usize,
    pub above: usize,
    pub coco: CocoBuckets,
    pub count: usize,
    pub mean_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeReport {
    pub edges: Vec<f64>,
    pub groups: BTreeMap<String, SizeHistogram>,
}

/// `count + 1` evenly spaced edges from 0 to `max_radius`.
pub fn uniform_edges(max_radius: f64, count: usize) -> Vec<f64> {
    (0..=count).map(|i| max_radius * i as f64 / count as f64).collect()
}

fn bin_index(edges: &[f64], r: f64) -> Option<usize> {
    let last = edges.len() - 1;
    if r < edges[0] || r > edges[last] {
        return None;
    }
    if r == edges[last] {
        return Some(last - 1);
    }
    Some(edges.partition_point(|&e| e <= r) - 1)
}

/// Histograms of equivalent radius per condition, with COCO buckets on area.
pub fn size_histogram(annotations: &[Annotation], edges: &[f64]) -> Result<SizeReport> {
    if annotations.is_empty() {
        return Err(Error::EmptyInput("annotation list"));
    }
    if edges.len() < 2 || edges.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
        return Err(Error::param("edges", "need at least two strictly increasing edges"));
    }
    let mut groups: BTreeMap<String, SizeHistogram> = BTreeMap::new();
    let mut radius_sums: BTreeMap<String, f64> = BTreeMap::new();
    for a in annotations {
        let r = equivalent_radius(a.area)?;
        let h = groups.entry(a.condition.clone()).or_insert_with(|| SizeHistogram {
            bins: vec![0; edges.len() - 1],
            below: 0,
            above: 0,
            coco: CocoBuckets::default(),
            count: 0,
            mean_radius: 0.0,
        });
        match bin_index(edges, r) {
            Some(i) => h.bins[i] += 1,
            None if r < edges[0] => h.below += 1,
            None => h.above += 1,
        }
        h.coco.add(a.area);
        h.count += 1;
        *radius_sums.entry(a.condition.clone()).or_default() += r;
    }
    for (k, h) in &mut groups {
        h.mean_radius = radius_sums[k] / h.count as f64;
    }
    Ok(SizeReport {
        edges: edges.to_vec(),
        groups,
    })
}

/// Normalized category frequencies per condition; each row sums to 1.
pub fn category_distribution(annotations: &[Annotation]) -> Result<BTreeMap<String, BTreeMap<u64, f64>>> {
    if annotations.is_empty() {
        return Err(Error::EmptyInput("annotation list"));
    }
    let mut counts: BTreeMap<String, BTreeMap<u64, usize>> = BTreeMap::new();
    for a in annotations {
        *counts
            .entry(a.condition.clone())
            .or_default()
            .entry(a.category_id)
            .or_default() += 1;
    }
    Ok(counts
        .into_iter()
        .map(|(cond, row)| {
            let total: usize = row.values().sum();
            let freqs = row
                .into_iter()
                .map(|(cat, n)| (cat, n as f64 / total as f64))
                .collect();
            (cond, freqs)
        })
        .collect())
}

/// Relabels every annotation with a single group, for reports not split by condition.
pub fn merge_conditions(annotations: &[Annotation], label: &str) -> Vec<Annotation> {
    annotations
        .iter()
        .map(|a| Annotation {
            condition: label.to_string(),
            ..a.clone()
        })
        .collect()
}

pub fn sizes_csv(report: &SizeReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["condition", "radius_lo", "radius_hi", "count"])?;
    for (cond, h) in &report.groups {
        for (i, n) in h.bins.iter().enumerate() {
            w.write_record([
                cond.as_str(),
                &report.edges[i].to_string(),
                &report.edges[i + 1].to_string(),
                &n.to_string(),
            ])?;
        }
    }
    into_string(w)
}

pub fn coco_csv(report: &SizeReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["condition", "small", "medium", "large", "total", "mean_equivalent_radius"])?;
    for (cond, h) in &report.groups {
        w.write_record([
            cond.clone(),
            h.coco.small.to_string(),
            h.coco.medium.to_string(),
            h.coco.large.to_string(),
            h.count.to_string(),
            format!("{:.4}", h.mean_radius),
        ])?;
    }
    into_string(w)
}

/// Category table. Categories listed in `ranking` come first, in that order
/// (e.g. hardest first); the rest follow by id.
pub fn categories_csv(
    dist: &BTreeMap<String, BTreeMap<u64, f64>>,
    set: &AnnotationSet,
    ranking: &[u64],
) -> Result<String> {
    let mut all: Vec<u64> = dist.values().flat_map(|r| r.keys().copied()).collect();
    all.sort_unstable();
    all.dedup();
    let mut order: Vec<u64> = ranking.iter().copied().filter(|c| all.contains(c)).collect();
    order.extend(all.iter().copied().filter(|c| !ranking.contains(c)));

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["condition", "category_id", "category", "frequency"])?;
    for (cond, row) in dist {
        for cat in &order {
            let f = row.get(cat).copied().unwrap_or(0.0);
            w.write_record([
                cond.clone(),
                cat.to_string(),
                set.category_name(*cat).unwrap_or("").to_string(),
                format!("{f:.6}"),
            ])?;
        }
    }
    into_string(w)
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Config(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

/// Line plot of the normalized radius histograms, with the COCO thresholds as
/// red vertical lines.
pub fn size_histogram_svg(report: &SizeReport) -> String {
    const W: f64 = 640.0;
    const H: f64 = 360.0;
    const PAD: f64 = 40.0;
    const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#17becf"];
    let lo = report.edges[0];
    let hi = *report.edges.last().expect("at least two edges");
    let sx = |r: f64| PAD + (r - lo) / (hi - lo) * (W - 2.0 * PAD);
    let frac = |h: &SizeHistogram, n: usize| n as f64 / h.count.max(1) as f64;
    let ymax = report
        .groups
        .values()
        .flat_map(|h| h.bins.iter().map(move |&n| frac(h, n)))
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let sy = |f: f64| H - PAD - f / ymax * (H - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{PAD}" y1="{y}" x2="{x2}" y2="{y}" stroke="black"/>"#,
        y = H - PAD,
        x2 = W - PAD
    );
    for area in [COCO_SMALL_MAX_AREA, COCO_MEDIUM_MAX_AREA] {
        let r = (area / std::f64::consts::PI).sqrt();
        if (lo..=hi).contains(&r) {
            let x = sx(r);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{PAD}" x2="{x:.2}" y2="{y2}" stroke="red" stroke-dasharray="4 3"/>"#,
                y2 = H - PAD
            );
        }
    }
    for (k, (cond, h)) in report.groups.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = h
            .bins
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let mid = 0.5 * (report.edges[i] + report.edges[i + 1]);
                format!("{:.2},{:.2}", sx(mid), sy(frac(h, n)))
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{y}" font-size="12" fill="{color}">{cond}</text>"#,
            x = W - PAD - 80.0,
            y = PAD + 14.0 * (k as f64 + 1.0)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{x}" y="{y}" font-size="12" text-anchor="middle">equivalent radius (px)</text>"#,
        x = W / 2.0,
        y = H - 8.0
    );
    s.push_str("</svg>\n");
    s
}
