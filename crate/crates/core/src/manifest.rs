//! Training manifests that swap a fraction of synthetic clear images for real
//! clear images.

use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::condition::Condition;
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Real,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub image: PathBuf,
    pub label: PathBuf,
    pub condition: Condition,
    pub origin: Origin,
    pub seed: u64,
}

impl ManifestEntry {
    fn validate(&self) -> Result<()> {
        if self.image.as_os_str().is_empty() || self.label.as_os_str().is_empty() {
            return Err(Error::Config("manifest entry with empty path".into()));
        }
        Ok(())
    }

    pub fn is_synthetic_clear(&self) -> bool {
        self.origin == Origin::Synthetic && self.condition == Condition::Clear
    }
}

/// How many synthetic clear entries get replaced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixMode {
    /// Each entry independently with probability `ratio / 100`.
    #[default]
    Bernoulli,
    /// Exactly `round(ratio / 100 * n)` entries, chosen uniformly.
    ExactCount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    /// Percent in `[0, 100]`.
    pub mix_ratio: f64,
    pub seed: u64,
    pub mode: MixMode,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn replaced_count(&self) -> usize {
        self.entries.iter().filter(|e| e.origin == Origin::Real).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        check_ratio(m.mix_ratio)?;
        for e in &m.entries {
            e.validate()?;
        }
        Ok(m)
    }
}

fn check_ratio(r: f64) -> Result<()> {
    if !(0.0..=100.0).contains(&r) {
        return Err(Error::param("mix_ratio", format!("{r} outside [0, 100]")));
    }
    Ok(())
}

/// Replaces synthetic clear entries by real clear entries drawn uniformly
/// with replacement. Other entries, order and count are preserved. A
/// replacement keeps the slot's seed.
pub fn build_manifest(
    synthetic: &[ManifestEntry],
    real_clear: &[ManifestEntry],
    mix_ratio: f64,
    seed: u64,
    mode: MixMode,
) -> Result<DatasetManifest> {
    check_ratio(mix_ratio)?;
    for e in synthetic.iter().chain(real_clear) {
        e.validate()?;
    }
    if mix_ratio > 0.0 && real_clear.is_empty() {
        return Err(Error::EmptyInput("real clear pool"));
    }
    let p = mix_ratio / 100.0;
    let mut rng = rng_from_seed(seed);
    let clear_slots: Vec<usize> = synthetic
        .iter()
        .enumerate()
        .filter(|(_, e)| e.is_synthetic_clear())
        .map(|(i, _)| i)
        .collect();

    let chosen: Vec<usize> = match mode {
        MixMode::Bernoulli => clear_slots
            .iter()
            .copied()
            .filter(|_| rng.gen::<f64>() < p)
            .collect(),
        MixMode::ExactCount => {
            let k = ((p * clear_slots.len() as f64).round() as usize).min(clear_slots.len());
            let mut picked: Vec<usize> = sample(&mut rng, clear_slots.len(), k)
                .into_iter()
                .map(|j| clear_slots[j])
                .collect();
            picked.sort_unstable();
            picked
        }
    };

    let mut entries = synthetic.to_vec();
    for slot in chosen {
        let real = &real_clear[rng.gen_range(0..real_clear.len())];
        entries[slot] = ManifestEntry {
            image: real.image.clone(),
            label: real.label.clone(),
            condition: Condition::Clear,
            origin: Origin::Real,
            seed: entries[slot].seed,
        };
    }
    Ok(DatasetManifest {
        mix_ratio,
        seed,
        mode,
        entries,
    })
}

fn png_stems(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let rd = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in rd {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.push((stem.to_string(), path.clone()));
            }
        }
    }
    out.sort();
    Ok(out)
}

fn pair_dir(root: &Path, condition: Condition, origin: Origin, seed: u64) -> Result<Vec<ManifestEntry>> {
    let labels = root.join("labels");
    png_stems(&root.join("images"))?
        .into_iter()
        .map(|(stem, image)| {
            let label = labels.join(format!("{stem}.png"));
            if !label.is_file() {
                return Err(Error::Config(format!("no label for {}", image.display())));
            }
            Ok(ManifestEntry {
                image,
                label,
                condition,
                origin,
                seed: derive_seed(seed, &["entry", condition.as_str(), &stem]),
            })
        })
        .collect()
}

/// Scans `<dir>/<condition>/{images,labels}/<stem>.png` for every condition
/// subdirectory present.
pub fn scan_synthetic(dir: &Path, seed: u64) -> Result<Vec<ManifestEntry>> {
    if !dir.is_dir() {
        return Err(Error::Config(format!("{} is not a directory", dir.display())));
    }
    let mut out = Vec::new();
    for c in Condition::ALL {
        let sub = dir.join(c.as_str());
        if sub.is_dir() {
            out.extend(pair_dir(&sub, c, Origin::Synthetic, seed)?);
        }
    }
    Ok(out)
}

/// Scans `<dir>/{images,labels}/<stem>.png` as real clear images.
pub fn scan_real(dir: &Path) -> Result<Vec<ManifestEntry>> {
    pair_dir(dir, Condition::Clear, Origin::Real, 0)
}
