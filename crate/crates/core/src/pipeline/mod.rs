//! Pair ingest, edge-consistency filtering, dataset building and manifests.

mod consistency;
mod dataset;
mod ingest;

pub use consistency::edge_consistency_score;
pub use dataset::{
    build_dataset, Dataset, DatasetManifest, DatasetParams, ManifestEntry, ManifestRecord, IMAGES_DIR, MANIFEST_FILE,
    MANIFEST_VERSION, WEIGHTS_DIR,
};
pub use ingest::{ingest, refilter, IngestReport, PairRecord, DEFAULT_TAU};
