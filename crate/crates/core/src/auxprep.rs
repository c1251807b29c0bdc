//! Auxiliary inputs for the translation network: normalized depth, one-hot
//! semantic planes and greedy-colored instance maps.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::imgcore::{DepthMap, InstanceMap, LabelMap, Plane};

/// Instance id treated as "no object".
pub const BACKGROUND_INSTANCE: u16 = 0;

/// Value written for background pixels in a colored instance map.
pub const RESERVED_COLOR: u8 = u8::MAX;

/// Color count above which a colored map carries a warning.
pub const EXPECTED_MAX_COLORS: usize = 5;

/// Min-max normalization of the finite values to `[0, 1]`.
///
/// A constant map becomes all zeros. Non-finite entries map to 1 for `+inf`
/// (far plane) and 0 otherwise.
pub fn normalize_depth(depth: &DepthMap) -> Result<DepthMap> {
    let (min, max) = depth
        .data()
        .iter()
        .filter(|v| v.is_finite())
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if min > max {
        return Err(Error::NoFiniteDepth);
    }
    let span = f64::from(max) - f64::from(min);
    Ok(depth.map(|&v| {
        if v.is_finite() {
            if span > 0.0 {
                ((f64::from(v) - f64::from(min)) / span) as f32
            } else {
                0.0
            }
        } else if v == f32::INFINITY {
            1.0
        } else {
            0.0
        }
    }))
}

/// `classes` binary planes stored plane-major (`[class][y][x]`).
#[derive(Debug, Clone, PartialEq)]
pub struct OneHot {
    classes: usize,
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl OneHot {
    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn plane(&self, class: usize) -> Plane<u8> {
        let n = self.width * self.height;
        Plane::new(self.width, self.height, self.data[class * n..(class + 1) * n].to_vec())
            .expect("plane slice has width * height samples")
    }

    /// Writes an uncompressed `.npy` array of dtype `u1` and shape `(classes, height, width)`.
    pub fn write_npy(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
        f.write_all(&npy_bytes(&self.data, &[self.classes, self.height, self.width]))
            .and_then(|_| f.flush())
            .map_err(|e| Error::io(path, e))
    }
}

fn npy_bytes(data: &[u8], shape: &[usize]) -> Vec<u8> {
    let dims: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
    let mut header = format!(
        "{{'descr': '|u1', 'fortran_order': False, 'shape': ({}{}), }}",
        dims.join(", "),
        if shape.len() == 1 { "," } else { "" }
    );
    // magic (6) + version (2) + header length (2) + header, padded to 64 with a trailing newline
    let unpadded = 10 + header.len() + 1;
    header.push_str(&" ".repeat((64 - unpadded % 64) % 64));
    header.push('\n');
    let mut out = Vec::with_capacity(10 + header.len() + data.len());
    out.extend_from_slice(b"\x93NUMPY\x01\x00");
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(data);
    out
}

pub fn one_hot_semseg(labels: &LabelMap, classes: usize) -> Result<OneHot> {
    if classes == 0 {
        return Err(Error::param("classes", "must be at least 1"));
    }
    let n = labels.data().len();
    let mut data = vec![0u8; classes * n];
    for (i, &l) in labels.data().iter().enumerate() {
        let l = usize::from(l);
        if l >= classes {
            return Err(Error::LabelOutOfRange {
                label: l as u32,
                classes,
            });
        }
        data[l * n + i] = 1;
    }
    Ok(OneHot {
        classes,
        width: labels.width(),
        height: labels.height(),
        data,
    })
}

/// Undirected adjacency between instances.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InstanceGraph {
    adjacency: BTreeMap<u16, BTreeSet<u16>>,
}

impl InstanceGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: u16) {
        self.adjacency.entry(id).or_default();
    }

    /// Adds an undirected edge. Self-loops are ignored.
    pub fn add_edge(&mut self, a: u16, b: u16) {
        if a == b {
            self.add_node(a);
            return;
        }
        self.adjacency.entry(a).or_default().insert(b);
        self.adjacency.entry(b).or_default().insert(a);
    }

    pub fn nodes(&self) -> impl Iterator<Item = u16> + '_ {
        self.adjacency.keys().copied()
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    /// Each edge once, as `(smaller, larger)`.
    pub fn edges(&self) -> impl Iterator<Item = (u16, u16)> + '_ {
        self.adjacency
            .iter()
            .flat_map(|(&a, ns)| ns.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    pub fn neighbors(&self, id: u16) -> impl Iterator<Item = u16> + '_ {
        self.adjacency.get(&id).into_iter().flatten().copied()
    }

    pub fn degree(&self, id: u16) -> usize {
        self.adjacency.get(&id).map_or(0, BTreeSet::len)
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.values().map(BTreeSet::len).max().unwrap_or(0)
    }
}

/// 4-connected adjacency of non-background instances.
pub fn instance_adjacency(inst: &InstanceMap) -> InstanceGraph {
    let mut g = InstanceGraph::new();
    let (w, h) = inst.dims();
    for y in 0..h {
        for x in 0..w {
            let id = inst.get(x, y);
            if id == BACKGROUND_INSTANCE {
                continue;
            }
            g.add_node(id);
            if x + 1 < w {
                let r = inst.get(x + 1, y);
                if r != BACKGROUND_INSTANCE && r != id {
                    g.add_edge(id, r);
                }
            }
            if y + 1 < h {
                let d = inst.get(x, y + 1);
                if d != BACKGROUND_INSTANCE && d != id {
                    g.add_edge(id, d);
                }
            }
        }
    }
    g
}

/// Welsh-Powell order: descending degree, ties by ascending id.
pub fn welsh_powell_order(graph: &InstanceGraph) -> Vec<u16> {
    let mut order: Vec<u16> = graph.nodes().collect();
    order.sort_by_key(|&n| (std::cmp::Reverse(graph.degree(n)), n));
    order
}

/// Greedy coloring in Welsh-Powell order: each node takes the smallest color
/// not used by an already colored neighbor.
pub fn greedy_color(graph: &InstanceGraph) -> BTreeMap<u16, usize> {
    let mut colors: BTreeMap<u16, usize> = BTreeMap::new();
    let mut taken = Vec::new();
    for node in welsh_powell_order(graph) {
        taken.clear();
        taken.resize(graph.degree(node) + 1, false);
        for nb in graph.neighbors(node) {
            if let Some(&c) = colors.get(&nb) {
                if c < taken.len() {
                    taken[c] = true;
                }
            }
        }
        let c = taken.iter().position(|t| !t).expect("degree + 1 slots, at most degree taken");
        colors.insert(node, c);
    }
    colors
}

#[derive(Debug, Clone, Serialize)]
pub struct ColoringWarning {
    pub colors_used: usize,
    pub limit: usize,
    pub instances: usize,
}

#[derive(Debug, Clone)]
pub struct ColoredInstances {
    /// Color index per pixel, [`RESERVED_COLOR`] for background.
    pub map: Plane<u8>,
    pub colors: BTreeMap<u16, usize>,
    pub colors_used: usize,
    pub warning: Option<ColoringWarning>,
}

/// Replaces instance ids by greedy color indices. Coloring more than
/// [`EXPECTED_MAX_COLORS`] colors succeeds but carries a warning.
pub fn colored_instance_map(inst: &InstanceMap) -> Result<ColoredInstances> {
    let graph = instance_adjacency(inst);
    let colors = greedy_color(&graph);
    let colors_used = colors.values().max().map_or(0, |m| m + 1);
    if colors_used > usize::from(RESERVED_COLOR) {
        return Err(Error::param(
            "instances",
            format!("{colors_used} colors do not fit below the reserved value"),
        ));
    }
    let map = inst.map(|id| match colors.get(id) {
        Some(&c) => c as u8,
        None => RESERVED_COLOR,
    });
    let warning = (colors_used > EXPECTED_MAX_COLORS).then(|| {
        log::warn!(
            "greedy coloring used {colors_used} colors for {} instances (expected at most {EXPECTED_MAX_COLORS})",
            graph.node_count()
        );
        ColoringWarning {
            colors_used,
            limit: EXPECTED_MAX_COLORS,
            instances: graph.node_count(),
        }
    });
    Ok(ColoredInstances {
        map,
        colors,
        colors_used,
        warning,
    })
}
