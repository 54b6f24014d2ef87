use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ingest::PairRecord;
use crate::error::{Error, Result};
use crate::flow::TrainExample;
use crate::image::ImageBuffer;
use crate::io::{quantize8, read_png, write_png, BitDepth};
use crate::retinex::{build_group, validate_strengths, GroupEntry, InterpMethod, StrengthGroup};
use crate::spatial::BilateralParams;
use crate::weights::{read_weight_png, weight_file_name, weight_map_for_pair, write_weight_png, MaskParams, WeightMap};

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const IMAGES_DIR: &str = "images";
pub const WEIGHTS_DIR: &str = "weights";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetParams {
    pub bilateral: BilateralParams,
    pub mask: MaskParams,
    pub tau: f64,
    /// Intermediate strengths; `0` and `1` are always present as endpoints.
    pub strengths: Vec<f64>,
    pub method: InterpMethod,
}

/// One strength of a constructed group. Paths are relative to the dataset root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub strength: f64,
    pub image: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_map: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    #[serde(flatten)]
    pub pair: PairRecord,
    #[serde(default)]
    pub entries: Vec<ManifestEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub parameters: DatasetParams,
    pub records: Vec<ManifestRecord>,
}

impl DatasetManifest {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let manifest: Self = serde_json::from_str(text)?;
        if manifest.version != MANIFEST_VERSION {
            return Err(Error::Data(format!(
                "manifest version {} is not supported (expected {MANIFEST_VERSION})",
                manifest.version
            )));
        }
        Ok(manifest)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn accepted(&self) -> impl Iterator<Item = &ManifestRecord> {
        self.records.iter().filter(|r| r.pair.accepted)
    }
}

fn image_file_name(pair_id: &str, strength: f64) -> String {
    format!("{pair_id}_s{:03}.png", (strength * 100.0).round() as u32)
}

/// Removes written files if the build does not complete.
struct Cleanup {
    files: Vec<PathBuf>,
    dirs: Vec<PathBuf>,
    armed: bool,
}

impl Drop for Cleanup {
    fn drop(&mut self) {
        if self.armed {
            for f in &self.files {
                let _ = std::fs::remove_file(f);
            }
            for d in self.dirs.iter().rev() {
                let _ = std::fs::remove_dir(d);
            }
        }
    }
}

fn ensure_dir(path: &Path, cleanup: &mut Cleanup) -> Result<()> {
    if !path.exists() {
        std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))?;
        cleanup.dirs.push(path.to_path_buf());
    }
    Ok(())
}

struct BuiltPair {
    entries: Vec<ManifestEntry>,
    files: Vec<PathBuf>,
}

/// Constructs strength groups and weight maps for every accepted record and
/// writes `manifest.json` under `out_dir`.
///
/// Layout: `images/<id>_sNNN.png` (8-bit sRGB) for every strength including
/// the endpoints, `weights/<id>_sNNN.w16.png` for every strength above 0.
/// Weight maps are computed from the images as stored. On failure every file
/// written by this call is removed again.
pub fn build_dataset(
    records: &[PairRecord],
    params: &DatasetParams,
    out_dir: impl AsRef<Path>,
) -> Result<DatasetManifest> {
    validate_strengths(&params.strengths)?;
    params.bilateral.validate()?;
    params.mask.validate()?;
    if !records.iter().any(|r| r.accepted) {
        return Err(Error::Data("no accepted pairs to build".into()));
    }
    let out = out_dir.as_ref();
    let mut cleanup = Cleanup {
        files: Vec::new(),
        dirs: Vec::new(),
        armed: true,
    };
    ensure_dir(out, &mut cleanup)?;
    ensure_dir(&out.join(IMAGES_DIR), &mut cleanup)?;
    ensure_dir(&out.join(WEIGHTS_DIR), &mut cleanup)?;

    let built: Vec<Result<BuiltPair>> = records
        .par_iter()
        .map(|r| {
            if r.accepted {
                build_pair(r, params, out)
            } else {
                Ok(BuiltPair {
                    entries: Vec::new(),
                    files: Vec::new(),
                })
            }
        })
        .collect();
    let mut manifest_records = Vec::with_capacity(records.len());
    let mut first_err = None;
    for (record, result) in records.iter().zip(built) {
        match result {
            Ok(b) => {
                cleanup.files.extend(b.files);
                manifest_records.push(ManifestRecord {
                    pair: record.clone(),
                    entries: b.entries,
                });
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_err {
        return Err(e);
    }
    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        parameters: params.clone(),
        records: manifest_records,
    };
    let manifest_path = out.join(MANIFEST_FILE);
    manifest.write(&manifest_path)?;
    cleanup.armed = false;
    Ok(manifest)
}

fn build_pair(record: &PairRecord, params: &DatasetParams, out: &Path) -> Result<BuiltPair> {
    let i0 = read_png(&record.path_low)?;
    let i1 = read_png(&record.path_normal)?;
    let group = build_group(
        &record.pair_id,
        &i0,
        &i1,
        &params.strengths,
        params.method,
        &params.bilateral,
    )?;
    let mut files = Vec::new();
    let mut entries = Vec::new();
    let mut stored = Vec::new();
    for e in &group.entries {
        let rel = Path::new(IMAGES_DIR).join(image_file_name(&record.pair_id, e.strength));
        let path = out.join(&rel);
        write_png(&path, &e.image, BitDepth::Eight)?;
        files.push(path);
        stored.push(quantize8(&e.image));
        entries.push(ManifestEntry {
            strength: e.strength,
            image: rel,
            weight_map: None,
        });
    }
    let weights: Vec<Result<WeightMap>> = stored[1..]
        .par_iter()
        .map(|img| weight_map_for_pair(&stored[0], img, &params.mask))
        .collect();
    for (entry, w) in entries[1..].iter_mut().zip(weights) {
        let rel = Path::new(WEIGHTS_DIR).join(weight_file_name(&record.pair_id, entry.strength));
        let path = out.join(&rel);
        write_weight_png(&path, &w?)?;
        files.push(path);
        entry.weight_map = Some(rel);
    }
    Ok(BuiltPair { entries, files })
}

/// A built dataset on disk.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub root: PathBuf,
    pub manifest: DatasetManifest,
}

impl Dataset {
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        let manifest = DatasetManifest::read(root.join(MANIFEST_FILE))?;
        Ok(Self { root, manifest })
    }

    pub fn record(&self, pair_id: &str) -> Option<&ManifestRecord> {
        self.manifest.accepted().find(|r| r.pair.pair_id == pair_id)
    }

    /// Loads the stored strength group of an accepted pair.
    pub fn load_group(&self, record: &ManifestRecord) -> Result<StrengthGroup> {
        let entries = record
            .entries
            .iter()
            .map(|e| {
                Ok(GroupEntry {
                    strength: e.strength,
                    image: read_png(self.root.join(&e.image))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if entries.len() < 2 {
            return Err(Error::Data(format!("pair {} has no stored group", record.pair.pair_id)));
        }
        Ok(StrengthGroup {
            pair_id: record.pair.pair_id.clone(),
            method: self.manifest.parameters.method,
            entries,
        })
    }

    /// Stored low-light input and normal-light reference of a pair.
    pub fn load_endpoints(&self, record: &ManifestRecord) -> Result<(ImageBuffer, ImageBuffer)> {
        let first = record.entries.first();
        let last = record.entries.last();
        match (first, last) {
            (Some(a), Some(b)) if a.strength == 0.0 && b.strength == 1.0 => {
                Ok((read_png(self.root.join(&a.image))?, read_png(self.root.join(&b.image))?))
            }
            _ => Err(Error::Data(format!(
                "pair {} is missing its endpoints",
                record.pair.pair_id
            ))),
        }
    }

    pub fn load_weights(&self, record: &ManifestRecord) -> Result<Vec<(f64, WeightMap)>> {
        let w_min = self.manifest.parameters.mask.w_min;
        record
            .entries
            .iter()
            .filter_map(|e| e.weight_map.as_ref().map(|p| (e.strength, p)))
            .map(|(s, p)| Ok((s, read_weight_png(self.root.join(p), w_min)?)))
            .collect()
    }

    /// Every accepted pair as a training example.
    pub fn training_examples(&self) -> Result<Vec<TrainExample>> {
        self.manifest
            .accepted()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|r| {
                let group = self.load_group(r)?;
                Ok(TrainExample {
                    input: group.entries[0].image.clone(),
                    weights: self.load_weights(r)?,
                    group,
                })
            })
            .collect()
    }

    /// Recomputes and rewrites every weight map with new mask parameters and
    /// updates the manifest.
    pub fn regenerate_weights(&mut self, mask: MaskParams) -> Result<()> {
        mask.validate()?;
        let root = &self.root;
        let results: Vec<Result<Vec<ManifestEntry>>> = self
            .manifest
            .records
            .par_iter()
            .map(|r| {
                if !r.pair.accepted {
                    return Ok(r.entries.clone());
                }
                let images = r
                    .entries
                    .iter()
                    .map(|e| read_png(root.join(&e.image)))
                    .collect::<Result<Vec<_>>>()?;
                let mut entries = r.entries.clone();
                for (entry, img) in entries.iter_mut().zip(&images).skip(1) {
                    let rel = Path::new(WEIGHTS_DIR).join(weight_file_name(&r.pair.pair_id, entry.strength));
                    let w = weight_map_for_pair(&images[0], img, &mask)?;
                    write_weight_png(root.join(&rel), &w)?;
                    entry.weight_map = Some(rel);
                }
                Ok(entries)
            })
            .collect();
        for (record, entries) in self.manifest.records.iter_mut().zip(results) {
            record.entries = entries?;
        }
        self.manifest.parameters.mask = mask;
        self.manifest.write(self.root.join(MANIFEST_FILE))
    }
}
