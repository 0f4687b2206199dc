//! Line-delimited JSON manifests and prediction files.
//!
//! A manifest starts with a header line `{"dataset_name": "..."}` followed by
//! one entry per line:
//!
//! ```text
//! {"image_id":"a","image_path":"images/a.ppm","actual_class":"EB",
//!  "gt_mask_path":"masks/a.pgm","gt_boxes":[{"x_min":1,"y_min":2,"x_max":5,"y_max":9,"class":"EB"}]}
//! ```
//!
//! A predictions file has one record per image:
//!
//! ```text
//! {"image_id":"a","detections":[{"x_min":1,"y_min":2,"x_max":5,"y_max":9,"class":"EB","confidence":0.93}],
//!  "saliency_path":"saliency/a.ppm","attention_path":"attention/a.pgm","predicted_class":"EB"}
//! ```
//!
//! Every field except `image_id` is optional in a prediction record.
//! Relative paths are resolved against the directory of the file that
//! mentions them. Blank lines and lines starting with `//` are ignored.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::detection::{BoundingBox, ClassLabel, Detection};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledBox {
    #[serde(flatten)]
    pub bbox: BoundingBox,
    pub class: ClassLabel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestHeader {
    dataset_name: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image_id: String,
    pub image_path: PathBuf,
    pub actual_class: ClassLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_mask_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_boxes: Option<Vec<LabeledBox>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub dataset_name: String,
    /// Sorted by `image_id`; paths are resolved.
    pub entries: Vec<ManifestEntry>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub image_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detections: Option<Vec<Detection>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saliency_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attention_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_class: Option<ClassLabel>,
}

/// Model outputs keyed by image id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PredictionSet {
    pub records: BTreeMap<String, PredictionRecord>,
}

impl PredictionSet {
    pub fn get(&self, image_id: &str) -> Option<&PredictionRecord> {
        self.records.get(image_id)
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn json_lines<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with("//")
        })
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map(|v| (i + 1, v))
                .map_err(|e| Error::Parse {
                    file: path.to_path_buf(),
                    line: i + 1,
                    message: e.to_string(),
                })
        })
        .collect()
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let base = base_dir(path);
    let lines: Vec<(usize, serde_json::Value)> = json_lines(path)?;
    let mut it = lines.into_iter();
    let (line, header) = it.next().ok_or_else(|| Error::Empty(format!("{} has no header line", path.display())))?;
    let header: ManifestHeader = serde_json::from_value(header).map_err(|e| Error::Parse {
        file: path.to_path_buf(),
        line,
        message: format!("bad header: {e}"),
    })?;

    let mut seen = BTreeMap::new();
    for (line, value) in it {
        let mut entry: ManifestEntry = serde_json::from_value(value).map_err(|e| Error::Parse {
            file: path.to_path_buf(),
            line,
            message: e.to_string(),
        })?;
        entry.image_path = resolve(&base, &entry.image_path);
        entry.gt_mask_path = entry.gt_mask_path.map(|p| resolve(&base, &p));
        for p in std::iter::once(&entry.image_path).chain(entry.gt_mask_path.as_ref()) {
            if !p.is_file() {
                return Err(Error::MissingFile {
                    id: entry.image_id.clone(),
                    path: p.clone(),
                });
            }
        }
        for b in entry.gt_boxes.iter().flatten() {
            b.bbox.validate().map_err(|e| Error::Parse {
                file: path.to_path_buf(),
                line,
                message: format!("entry `{}`: {e}", entry.image_id),
            })?;
        }
        if seen.contains_key(&entry.image_id) {
            return Err(Error::DuplicateId(entry.image_id));
        }
        seen.insert(entry.image_id.clone(), entry);
    }
    if seen.is_empty() {
        return Err(Error::Empty(format!("{} has no entries", path.display())));
    }
    Ok(DatasetManifest {
        dataset_name: header.dataset_name,
        entries: seen.into_values().collect(),
    })
}

/// Loads predictions; ids must be unique and present in `manifest`.
pub fn load_predictions(path: &Path, manifest: &DatasetManifest) -> Result<PredictionSet> {
    let base = base_dir(path);
    let known: std::collections::BTreeSet<&str> = manifest.entries.iter().map(|e| e.image_id.as_str()).collect();
    let mut records = BTreeMap::new();
    for (line, mut rec) in json_lines::<PredictionRecord>(path)? {
        if !known.contains(rec.image_id.as_str()) {
            return Err(Error::UnknownId(rec.image_id));
        }
        for d in rec.detections.iter().flatten() {
            d.validate().map_err(|e| Error::Parse {
                file: path.to_path_buf(),
                line,
                message: format!("record `{}`: {e}", rec.image_id),
            })?;
        }
        rec.saliency_path = rec.saliency_path.map(|p| resolve(&base, &p));
        rec.attention_path = rec.attention_path.map(|p| resolve(&base, &p));
        if records.contains_key(&rec.image_id) {
            return Err(Error::DuplicateId(rec.image_id));
        }
        records.insert(rec.image_id.clone(), rec);
    }
    Ok(PredictionSet { records })
}

fn write_lines<T: Serialize>(path: &Path, header: Option<&ManifestHeader>, rows: &[T]) -> Result<()> {
    let mut out = Vec::new();
    let mut push = |v: String| {
        out.extend_from_slice(v.as_bytes());
        out.push(b'\n');
    };
    if let Some(h) = header {
        push(serde_json::to_string(h).expect("header serialises"));
    }
    for r in rows {
        push(serde_json::to_string(r).expect("record serialises"));
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&out).map_err(|e| Error::io(path, e))
}

/// Writes a manifest with paths exactly as given in `entries`.
pub fn write_manifest(path: &Path, dataset_name: &str, entries: &[ManifestEntry]) -> Result<()> {
    let header = ManifestHeader {
        dataset_name: dataset_name.to_string(),
    };
    write_lines(path, Some(&header), entries)
}

pub fn write_predictions(path: &Path, records: &[PredictionRecord]) -> Result<()> {
    write_lines(path, None, records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn touch(dir: &Path, name: &str) {
        std::fs::write(dir.join(name), b"x").unwrap();
    }

    #[test]
    fn minimal_manifest() {
        let dir = tempfile::tempdir().unwrap();
        touch(dir.path(), "a.ppm");
        let m = dir.path().join("m.jsonl");
        std::fs::write(&m, "{\"dataset_name\":\"demo\"}\n\n{\"image_id\":\"a\",\"image_path\":\"a.ppm\",\"actual_class\":\"HL\"}\n").unwrap();
        let manifest = load_manifest(&m).unwrap();
        assert_eq!(manifest.dataset_name, "demo");
        assert_eq!(manifest.entries.len(), 1);
        assert_eq!(manifest.entries[0].image_path, dir.path().join("a.ppm"));
    }

    #[test]
    fn duplicate_id_is_named() {
        let dir = tempfile::tempdir().unwrap();
        touch(dir.path(), "a.ppm");
        let m = dir.path().join("m.jsonl");
        let entry = "{\"image_id\":\"leaf-7\",\"image_path\":\"a.ppm\",\"actual_class\":\"EB\"}";
        std::fs::write(&m, format!("{{\"dataset_name\":\"d\"}}\n{entry}\n{entry}\n")).unwrap();
        let err = load_manifest(&m).unwrap_err();
        assert!(matches!(&err, Error::DuplicateId(id) if id == "leaf-7"), "{err}");
    }

    #[test]
    fn missing_file_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let m = dir.path().join("m.jsonl");
        std::fs::write(&m, "{\"dataset_name\":\"d\"}\n{\"image_id\":\"x\",\"image_path\":\"nope.ppm\",\"actual_class\":\"EB\"}\n").unwrap();
        assert!(matches!(load_manifest(&m).unwrap_err(), Error::MissingFile { id, .. } if id == "x"));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let m = dir.path().join("m.jsonl");
        std::fs::write(&m, "{\"dataset_name\":\"d\"}\n{\"image_id\":\"x\",\"actual_class\":\"ZZ\"}\n").unwrap();
        assert!(matches!(load_manifest(&m).unwrap_err(), Error::Parse { line: 2, .. }));
        std::fs::write(&m, "").unwrap();
        assert!(load_manifest(&m).is_err());
    }

    #[test]
    fn predictions_must_reference_manifest_ids() {
        let dir = tempfile::tempdir().unwrap();
        touch(dir.path(), "a.ppm");
        let m = dir.path().join("m.jsonl");
        std::fs::write(&m, "{\"dataset_name\":\"d\"}\n{\"image_id\":\"a\",\"image_path\":\"a.ppm\",\"actual_class\":\"EB\"}\n").unwrap();
        let manifest = load_manifest(&m).unwrap();
        let p = dir.path().join("p.jsonl");
        std::fs::write(&p, "{\"image_id\":\"a\",\"detections\":[{\"x_min\":0,\"y_min\":0,\"x_max\":2,\"y_max\":2,\"class\":\"EB\",\"confidence\":0.9}],\"predicted_class\":\"LB\"}\n").unwrap();
        let preds = load_predictions(&p, &manifest).unwrap();
        assert_eq!(preds.get("a").unwrap().detections.as_ref().unwrap().len(), 1);
        assert_eq!(preds.get("a").unwrap().predicted_class, Some(ClassLabel::LateBlight));

        std::fs::write(&p, "{\"image_id\":\"b\"}\n").unwrap();
        assert!(matches!(load_predictions(&p, &manifest).unwrap_err(), Error::UnknownId(id) if id == "b"));
    }
}
