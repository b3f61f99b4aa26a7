//! Trained-model persistence: a directory bundle of json files with a
//! format version and per-file sha256 checksums.
//!
//! Layout:
//!   meta.json       version + pipeline settings + wavelet + class count
//!   templates.json  template bank(s)
//!   forest.json     decision forest
//!   manifest.json   sha256 of the three payload files

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::pipeline::{PipelineSettings, TrainedModel};
use crate::template::TemplateSet;
use crate::wavelet::WaveletSpec;
use crate::ForestModel;

pub const BUNDLE_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    version: u32,
    settings: PipelineSettings,
    wavelet: WaveletSpec,
    class_count: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct BundleManifest {
    checksums: BTreeMap<String, String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("{:x}", hasher.finalize())
}

pub fn save_model(model: &TrainedModel<f64>, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let meta = Meta {
        version: BUNDLE_VERSION,
        settings: model.settings.clone(),
        wavelet: model.wavelet,
        class_count: model.class_count,
    };
    let files = [
        ("meta.json", serde_json::to_vec_pretty(&meta).map_err(json_err)?),
        ("templates.json", serde_json::to_vec(&model.templates).map_err(json_err)?),
        ("forest.json", serde_json::to_vec(&model.forest).map_err(json_err)?),
    ];
    let mut checksums = BTreeMap::new();
    for (name, bytes) in &files {
        checksums.insert(name.to_string(), sha256_hex(bytes));
        std::fs::write(dir.join(name), bytes)?;
    }
    let manifest = BundleManifest { checksums };
    std::fs::write(
        dir.join("manifest.json"),
        serde_json::to_vec_pretty(&manifest).map_err(json_err)?,
    )?;
    Ok(())
}

pub fn load_model(dir: &Path) -> Result<TrainedModel<f64>> {
    let read = |name: &str| -> Result<Vec<u8>> {
        std::fs::read(dir.join(name))
            .map_err(|_| Error::MissingFile(dir.join(name).display().to_string()))
    };
    let manifest: BundleManifest = serde_json::from_slice(&read("manifest.json")?)
        .map_err(|e| Error::CorruptBundle(format!("manifest.json: {e}")))?;
    let mut payload = BTreeMap::new();
    for name in ["meta.json", "templates.json", "forest.json"] {
        let bytes = read(name)?;
        match manifest.checksums.get(name) {
            Some(expected) if *expected == sha256_hex(&bytes) => {}
            Some(_) => {
                return Err(Error::CorruptBundle(format!("checksum mismatch for {name}")));
            }
            None => return Err(Error::CorruptBundle(format!("no checksum for {name}"))),
        }
        payload.insert(name, bytes);
    }
    let meta: Meta = serde_json::from_slice(&payload["meta.json"])
        .map_err(|e| Error::CorruptBundle(format!("meta.json: {e}")))?;
    if meta.version != BUNDLE_VERSION {
        return Err(Error::VersionMismatch { found: meta.version, expected: BUNDLE_VERSION });
    }
    let templates: TemplateSet<f64> = serde_json::from_slice(&payload["templates.json"])
        .map_err(|e| Error::CorruptBundle(format!("templates.json: {e}")))?;
    let forest: ForestModel = serde_json::from_slice(&payload["forest.json"])
        .map_err(|e| Error::CorruptBundle(format!("forest.json: {e}")))?;
    Ok(TrainedModel {
        settings: meta.settings,
        templates,
        wavelet: meta.wavelet,
        forest,
        class_count: meta.class_count,
    })
}

fn json_err(e: serde_json::Error) -> Error {
    Error::CorruptBundle(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtw::DtwOptions;
    use crate::filtering::FilterParams;
    use crate::forest::{FeatureSubset, ForestParams};
    use crate::pipeline::{prepare_all, train_model};
    use crate::synth::{generate, synth_reference, synth_symmetry, SynthSpec};

    fn trained() -> (TrainedModel<f64>, Vec<crate::RawSequence>) {
        let settings = PipelineSettings {
            filter: FilterParams::default(),
            dtw: DtwOptions::default(),
            forest: ForestParams {
                n_trees: 20,
                features_per_split: FeatureSubset::Sqrt,
                max_depth: None,
                min_samples_leaf: 1,
                rng_seed: 2,
            },
            mirroring: false,
            max_objects: 0,
            reference: synth_reference(),
            symmetry: synth_symmetry(),
        };
        let seqs = generate(&SynthSpec {
            n_classes: 2,
            n_subjects: 2,
            reps: 2,
            noise_sigma: 0.004,
            speed_range: (1.0, 1.0),
            handed: false,
            base_frames: 24,
            seed: 13,
        })
        .unwrap();
        let samples = prepare_all(&seqs, &settings).unwrap();
        (train_model(&samples, &settings, WaveletSpec::default()).unwrap(), seqs)
    }

    #[test]
    fn save_load_round_trip_preserves_predictions() {
        let (model, seqs) = trained();
        let dir = tempfile::tempdir().unwrap();
        save_model(&model, dir.path()).unwrap();
        let loaded = load_model(dir.path()).unwrap();
        assert_eq!(loaded, model);
        for seq in &seqs {
            assert_eq!(loaded.predict(seq).unwrap(), model.predict(seq).unwrap());
        }
    }

    #[test]
    fn corrupted_payload_detected() {
        let (model, _) = trained();
        let dir = tempfile::tempdir().unwrap();
        save_model(&model, dir.path()).unwrap();
        let path = dir.path().join("forest.json");
        let mut bytes = std::fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] = bytes[mid].wrapping_add(1);
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(load_model(dir.path()), Err(Error::CorruptBundle(_))));
    }

    #[test]
    fn version_mismatch_detected() {
        let (model, _) = trained();
        let dir = tempfile::tempdir().unwrap();
        save_model(&model, dir.path()).unwrap();
        // rewrite meta.json with a bumped version and a fixed-up checksum
        let meta_path = dir.path().join("meta.json");
        let text = std::fs::read_to_string(&meta_path).unwrap();
        let text = text.replacen("\"version\": 1", "\"version\": 99", 1);
        std::fs::write(&meta_path, &text).unwrap();
        let manifest_path = dir.path().join("manifest.json");
        let mut manifest: BundleManifest =
            serde_json::from_slice(&std::fs::read(&manifest_path).unwrap()).unwrap();
        manifest.checksums.insert("meta.json".into(), sha256_hex(text.as_bytes()));
        std::fs::write(&manifest_path, serde_json::to_vec_pretty(&manifest).unwrap()).unwrap();
        assert!(matches!(
            load_model(dir.path()),
            Err(Error::VersionMismatch { found: 99, expected: 1 })
        ));
    }

    #[test]
    fn missing_file_reported() {
        let (model, _) = trained();
        let dir = tempfile::tempdir().unwrap();
        save_model(&model, dir.path()).unwrap();
        std::fs::remove_file(dir.path().join("templates.json")).unwrap();
        assert!(matches!(load_model(dir.path()), Err(Error::MissingFile(_))));
    }
}
