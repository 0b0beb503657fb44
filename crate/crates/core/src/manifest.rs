//! Run directories: one `EMB1` file per layer, a shared label file and a
//! `run.json` manifest listing the layers in order.
//!
//! ```json
//! {"run_id": "seed0", "layers": [{"name": "conv1", "file": "conv1.emb"}], "labels": "labels.csv"}
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::embedding::load_embeddings;
use crate::error::{Error, Result};
use crate::fsio::write_atomic;
use crate::labels::{load_labels, LabeledDataset};

pub const MANIFEST_FILE: &str = "run.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerEntry {
    pub name: String,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub layers: Vec<LayerEntry>,
    pub labels: String,
}

/// A loaded run: every layer joined with the shared labels.
#[derive(Debug, Clone)]
pub struct Run {
    pub run_id: String,
    pub layers: Vec<(String, LabeledDataset)>,
}

fn manifest_path(dir_or_file: &Path) -> PathBuf {
    if dir_or_file.is_dir() {
        dir_or_file.join(MANIFEST_FILE)
    } else {
        dir_or_file.to_path_buf()
    }
}

pub fn read_manifest(dir_or_file: impl AsRef<Path>) -> Result<(RunManifest, PathBuf)> {
    let path = manifest_path(dir_or_file.as_ref());
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| Error::Manifest {
        path: path.clone(),
        message: e.to_string(),
    })?;
    if manifest.layers.is_empty() {
        return Err(Error::Manifest {
            path,
            message: "no layers listed".into(),
        });
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((manifest, base))
}

pub fn load_run(dir_or_file: impl AsRef<Path>) -> Result<Run> {
    let (manifest, base) = read_manifest(dir_or_file)?;
    let labels = load_labels(base.join(&manifest.labels))?;
    let layers = manifest
        .layers
        .iter()
        .map(|entry| {
            let emb = load_embeddings(base.join(&entry.file))?.named(&entry.name, &manifest.run_id);
            Ok((entry.name.clone(), LabeledDataset::new(emb, labels.clone())?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Run {
        run_id: manifest.run_id,
        layers,
    })
}

pub fn write_manifest(manifest: &RunManifest, dir: impl AsRef<Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    write_atomic(&dir.as_ref().join(MANIFEST_FILE), text.as_bytes())
}
