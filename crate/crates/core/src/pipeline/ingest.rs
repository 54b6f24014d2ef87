use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use super::consistency::edge_consistency_score;
use crate::error::{Error, Result};
use crate::io::read_png;
use crate::weights::MaskParams;

/// Default edge-consistency acceptance threshold.
pub const DEFAULT_TAU: f64 = 0.02;

/// One discovered low/normal pair and its filtering verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub pair_id: String,
    pub path_low: PathBuf,
    pub path_normal: PathBuf,
    pub width: usize,
    pub height: usize,
    pub consistency_score: f64,
    pub accepted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Clone, Debug, Default)]
pub struct IngestReport {
    pub records: Vec<PairRecord>,
    /// Files that did not form a complete pair.
    pub skipped: Vec<String>,
}

/// Discovers `<id>_low.png` / `<id>_normal.png` pairs in `dir`, scores each
/// with [`edge_consistency_score`] and accepts it iff the score is `≤ tau`.
///
/// Records are sorted by id. Unreadable files and size mismatches produce a
/// rejected record with a reason rather than an error.
pub fn ingest(dir: impl AsRef<Path>, tau: f64, params: &MaskParams) -> Result<IngestReport> {
    let dir = dir.as_ref();
    let abs = dir.canonicalize().map_err(|e| Error::io(dir, e))?;
    let mut lows = BTreeMap::new();
    let mut normals = BTreeMap::new();
    for entry in std::fs::read_dir(&abs).map_err(|e| Error::io(&abs, e))? {
        let entry = entry.map_err(|e| Error::io(&abs, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(id) = name.strip_suffix("_low.png") {
            lows.insert(id.to_string(), entry.path());
        } else if let Some(id) = name.strip_suffix("_normal.png") {
            normals.insert(id.to_string(), entry.path());
        }
    }

    let mut report = IngestReport::default();
    for (id, path) in &normals {
        if !lows.contains_key(id) {
            warn!("skipping {}: no matching _low.png", path.display());
            report.skipped.push(format!("{id}_normal.png"));
        }
    }
    for (id, low) in lows {
        let Some(normal) = normals.get(&id) else {
            warn!("skipping {}: no matching _normal.png", low.display());
            report.skipped.push(format!("{id}_low.png"));
            continue;
        };
        report.records.push(score_pair(&id, low, normal.clone(), tau, params));
    }
    Ok(report)
}

fn score_pair(id: &str, low: PathBuf, normal: PathBuf, tau: f64, params: &MaskParams) -> PairRecord {
    let mut record = PairRecord {
        pair_id: id.to_string(),
        path_low: low,
        path_normal: normal,
        width: 0,
        height: 0,
        consistency_score: 0.0,
        accepted: false,
        reason: None,
    };
    let images = read_png(&record.path_low).and_then(|a| Ok((a, read_png(&record.path_normal)?)));
    let (i0, i1) = match images {
        Ok(pair) => pair,
        Err(e) => {
            record.reason = Some(e.to_string());
            return record;
        }
    };
    record.height = i0.height();
    record.width = i0.width();
    if !i0.same_shape(&i1) {
        record.reason = Some(format!(
            "size mismatch: low {}x{}x{}, normal {}x{}x{}",
            i0.height(),
            i0.width(),
            i0.channels(),
            i1.height(),
            i1.width(),
            i1.channels()
        ));
        return record;
    }
    if i0.channels() != 3 {
        record.reason = Some("pair images must be RGB".into());
        return record;
    }
    if let Err(e) = i0.check_pipeline_size() {
        record.reason = Some(e.to_string());
        return record;
    }
    match edge_consistency_score(&i0, &i1, params) {
        Ok(score) => {
            record.consistency_score = score;
            record.accepted = score <= tau;
            if !record.accepted {
                record.reason = Some(format!("edge consistency {score:.5} exceeds tau {tau}"));
            }
        }
        Err(e) => record.reason = Some(e.to_string()),
    }
    record
}

/// Re-applies a threshold to already-scored records.
pub fn refilter(records: &mut [PairRecord], tau: f64) {
    for r in records.iter_mut() {
        let scorable = r.reason.as_deref().is_none_or(|m| m.starts_with("edge consistency"));
        if scorable {
            r.accepted = r.consistency_score <= tau;
            r.reason = (!r.accepted).then(|| format!("edge consistency {:.5} exceeds tau {tau}", r.consistency_score));
        }
    }
}
