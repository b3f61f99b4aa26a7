//! Dataset ingestion: manifests, per-format skeleton loaders, object
//! trajectory files and the generic-csv interchange format.
//!
//! Every loader emits meters with z up and joints in the documented
//! per-format canonical order. Object 3-D extraction from RGB or depth is
//! out of scope; object trajectories arrive as pre-extracted csv files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skeleton::{AlignmentReference, Frame, Point3, RawSequence, SymmetryMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetFormat {
    Cad60,
    Cad120,
    Utkinect,
    Ucfkinect,
    Tst,
    GenericCsv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub path: String,
    /// Class label in 1..=C.
    pub label: usize,
    pub subject: usize,
    /// Pre-extracted 3-D object trajectory file (generic-csv, obj columns).
    #[serde(default)]
    pub objects: Option<String>,
    /// Inclusive frame bounds cutting a continuous recording.
    #[serde(default)]
    pub start: Option<usize>,
    #[serde(default)]
    pub end: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format: DatasetFormat,
    /// Base directory for entry paths; defaults to the manifest directory.
    #[serde(default)]
    pub root: Option<String>,
    #[serde(default)]
    pub class_names: Vec<String>,
    pub samples: Vec<ManifestEntry>,
}

pub fn load_manifest(path: &Path) -> Result<(DatasetManifest, PathBuf)> {
    let text = std::fs::read_to_string(path)
        .map_err(|_| Error::MissingFile(path.display().to_string()))?;
    let manifest: DatasetManifest =
        toml::from_str(&text).map_err(|e| Error::ConfigError(e.to_string()))?;
    let base = match &manifest.root {
        Some(r) => PathBuf::from(r),
        None => path.parent().unwrap_or(Path::new(".")).to_path_buf(),
    };
    validate_labels(&manifest)?;
    Ok((manifest, base))
}

fn validate_labels(manifest: &DatasetManifest) -> Result<()> {
    let mut labels: Vec<usize> = manifest.samples.iter().map(|s| s.label).collect();
    labels.sort_unstable();
    labels.dedup();
    if labels.is_empty() {
        return Err(Error::LabelMapError("manifest lists no samples".into()));
    }
    let c = *labels.last().unwrap();
    let expected: Vec<usize> = (1..=c).collect();
    if labels != expected {
        return Err(Error::LabelMapError(format!(
            "labels must form a contiguous 1..C set, found {labels:?}"
        )));
    }
    Ok(())
}

/// Joint conventions for a format: canonical order, alignment joints and
/// the left/right symmetry pairing.
pub struct FormatInfo {
    pub joint_count: usize,
    pub reference: AlignmentReference,
    pub symmetry: SymmetryMap,
}

pub fn format_info(format: DatasetFormat, joint_count_hint: usize) -> FormatInfo {
    match format {
        // CAD-60/CAD-120/UCF-Kinect: 15 OpenNI joints in order HEAD, NECK,
        // TORSO, L_SHOULDER, L_ELBOW, R_SHOULDER, R_ELBOW, L_HIP, L_KNEE,
        // R_HIP, R_KNEE, L_HAND, R_HAND, L_FOOT, R_FOOT. The torso stands
        // in for the hip center.
        DatasetFormat::Cad60 | DatasetFormat::Cad120 | DatasetFormat::Ucfkinect => FormatInfo {
            joint_count: 15,
            reference: AlignmentReference { hip: 2, left_hip: 7, right_hip: 9 },
            symmetry: SymmetryMap {
                joint_pairs: vec![(3, 5), (4, 6), (7, 9), (8, 10), (11, 12), (13, 14)],
            },
        },
        // UT-Kinect: 20 Kinect SDK joints, HIP_CENTER first.
        DatasetFormat::Utkinect => FormatInfo {
            joint_count: 20,
            reference: AlignmentReference { hip: 0, left_hip: 12, right_hip: 16 },
            symmetry: SymmetryMap {
                joint_pairs: vec![
                    (4, 8),
                    (5, 9),
                    (6, 10),
                    (7, 11),
                    (12, 16),
                    (13, 17),
                    (14, 18),
                    (15, 19),
                ],
            },
        },
        // TST Fall Detection: 25 Kinect v2 joints, SPINE_BASE first.
        DatasetFormat::Tst => FormatInfo {
            joint_count: 25,
            reference: AlignmentReference { hip: 0, left_hip: 12, right_hip: 16 },
            symmetry: SymmetryMap {
                joint_pairs: vec![
                    (4, 8),
                    (5, 9),
                    (6, 10),
                    (7, 11),
                    (12, 16),
                    (13, 17),
                    (14, 18),
                    (15, 19),
                    (21, 23),
                    (22, 24),
                ],
            },
        },
        // generic-csv: joint order is the header order; hip joints default
        // to the synthetic skeleton convention (hip, left hip, right hip
        // first) unless callers override.
        DatasetFormat::GenericCsv => FormatInfo {
            joint_count: joint_count_hint,
            reference: AlignmentReference { hip: 0, left_hip: 1, right_hip: 2 },
            symmetry: SymmetryMap { joint_pairs: vec![(1, 2), (3, 4)] },
        },
    }
}

pub fn load_dataset(manifest: &DatasetManifest, base: &Path) -> Result<Vec<RawSequence<f64>>> {
    let mut out = Vec::with_capacity(manifest.samples.len());
    for (index, entry) in manifest.samples.iter().enumerate() {
        let path = base.join(&entry.path);
        let mut seq = match manifest.format {
            DatasetFormat::GenericCsv => load_generic_csv(&path)?,
            DatasetFormat::Cad60 | DatasetFormat::Cad120 => load_cad60(&path)?,
            DatasetFormat::Utkinect => load_joint_rows(&path, 20, 1.0, true)?,
            DatasetFormat::Ucfkinect => load_joint_rows(&path, 15, 1e-3, true)?,
            DatasetFormat::Tst => load_joint_rows(&path, 25, 1.0, true)?,
        };
        if let (Some(start), Some(end)) = (entry.start, entry.end) {
            if start > end || end >= seq.frames.len() {
                return Err(Error::ParseError {
                    file: entry.path.clone(),
                    line: 0,
                    message: format!(
                        "segment {start}..{end} out of range for {} frames",
                        seq.frames.len()
                    ),
                });
            }
            seq.frames = seq.frames[start..=end].to_vec();
        }
        if let Some(obj_path) = &entry.objects {
            attach_objects(&mut seq, &base.join(obj_path))?;
        }
        seq.class_label = entry.label;
        seq.subject_id = entry.subject;
        seq.sample_index = index;
        out.push(seq);
    }
    Ok(out)
}

fn empty_sequence() -> RawSequence<f64> {
    RawSequence { frames: Vec::new(), subject_id: 0, class_label: 1, sample_index: 0 }
}

/// generic-csv: header `frame,<id>_x,<id>_y,<id>_z,...`, one frame per row,
/// decimal meters, z-up. Column ids starting with `obj` are objects (in
/// canonical object order); all other ids are joints in header order.
pub fn load_generic_csv(path: &Path) -> Result<RawSequence<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|_| Error::MissingFile(path.display().to_string()))?;
    let fname = path.display().to_string();
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(&fname, 1, "empty file"))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    if columns.first() != Some(&"frame") {
        return Err(parse_err(&fname, 1, "header must start with 'frame'"));
    }
    // Column ids appear as <id>_x,<id>_y,<id>_z triplets.
    let mut joint_ids: Vec<String> = Vec::new();
    let mut object_ids: Vec<String> = Vec::new();
    let coords = &columns[1..];
    if coords.len() % 3 != 0 {
        return Err(parse_err(&fname, 1, "coordinate columns must come in x,y,z triplets"));
    }
    for triplet in coords.chunks(3) {
        let id = triplet[0]
            .strip_suffix("_x")
            .ok_or_else(|| parse_err(&fname, 1, "expected <id>_x column"))?;
        if triplet[1] != format!("{id}_y") || triplet[2] != format!("{id}_z") {
            return Err(parse_err(&fname, 1, "expected <id>_x,<id>_y,<id>_z triplet"));
        }
        if id.starts_with("obj") {
            object_ids.push(id.to_string());
        } else if !object_ids.is_empty() {
            return Err(parse_err(&fname, 1, "joint columns must precede object columns"));
        } else {
            joint_ids.push(id.to_string());
        }
    }
    let mut seq = empty_sequence();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let values: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(&fname, lineno + 1, &e.to_string()))?;
        if values.len() != columns.len() {
            return Err(parse_err(
                &fname,
                lineno + 1,
                &format!("expected {} values, found {}", columns.len(), values.len()),
            ));
        }
        let mut points = values[1..].chunks(3).map(|c| [c[0], c[1], c[2]]);
        let joint_positions: Vec<Point3<f64>> = points.by_ref().take(joint_ids.len()).collect();
        let object_positions: Vec<Point3<f64>> = points.collect();
        seq.frames.push(Frame {
            joint_positions,
            object_positions,
            timestamp_index: values[0] as usize,
        });
    }
    if seq.frames.is_empty() {
        return Err(parse_err(&fname, 1, "no frames"));
    }
    Ok(seq)
}

pub fn write_generic_csv(seq: &RawSequence<f64>, path: &Path) -> Result<()> {
    let joints = seq.frames.first().map_or(0, |f| f.joint_positions.len());
    let objects = seq.frames.first().map_or(0, |f| f.object_positions.len());
    let mut header = String::from("frame");
    for j in 0..joints {
        for axis in ["x", "y", "z"] {
            header.push_str(&format!(",j{j}_{axis}"));
        }
    }
    for o in 0..objects {
        for axis in ["x", "y", "z"] {
            header.push_str(&format!(",obj{o}_{axis}"));
        }
    }
    let mut out = header;
    out.push('\n');
    for frame in &seq.frames {
        out.push_str(&frame.timestamp_index.to_string());
        for p in frame.joint_positions.iter().chain(&frame.object_positions) {
            for axis in 0..3 {
                // RFC-style shortest float representation round-trips.
                out.push_str(&format!(",{}", fmt_f64(p[axis])));
            }
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn fmt_f64(v: f64) -> String {
    let mut s = format!("{v}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}

/// CAD-60 per-frame records: frame number, 11 joints with a 3x3 orientation
/// block (9 values + confidence) followed by position (3 values +
/// confidence), then 4 joints with position + confidence only, comma
/// separated; the file ends with an END line. Positions are millimeters in
/// camera coordinates (y up); converted here to meters, z-up.
pub fn load_cad60(path: &Path) -> Result<RawSequence<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|_| Error::MissingFile(path.display().to_string()))?;
    let fname = path.display().to_string();
    let mut seq = empty_sequence();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim().trim_end_matches(',');
        if line.is_empty() {
            continue;
        }
        if line == "END" {
            break;
        }
        let values: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(&fname, lineno + 1, &e.to_string()))?;
        // 1 frame number + 11 * 14 + 4 * 4 = 171 values.
        if values.len() != 171 {
            return Err(parse_err(
                &fname,
                lineno + 1,
                &format!("expected 171 values per CAD-60 frame, found {}", values.len()),
            ));
        }
        let mut joint_positions = Vec::with_capacity(15);
        let mut cursor = 1;
        for _ in 0..11 {
            cursor += 10; // orientation block + its confidence
            joint_positions.push(camera_mm_to_world(&values[cursor..cursor + 3]));
            cursor += 4; // position + confidence
        }
        for _ in 0..4 {
            joint_positions.push(camera_mm_to_world(&values[cursor..cursor + 3]));
            cursor += 4;
        }
        seq.frames.push(Frame {
            joint_positions,
            object_positions: Vec::new(),
            timestamp_index: values[0] as usize,
        });
    }
    if seq.frames.is_empty() {
        return Err(parse_err(&fname, 1, "no frames"));
    }
    Ok(seq)
}

/// Camera (x right, y up, z depth) in millimeters to world meters, z-up.
fn camera_mm_to_world(p: &[f64]) -> Point3<f64> {
    [p[0] * 1e-3, p[2] * 1e-3, p[1] * 1e-3]
}

/// Plain joint-row formats (UT-Kinect, UCF-Kinect, TST): one frame per
/// line, whitespace or comma separated, an optional leading frame index,
/// then x y z per joint in canonical order. `scale` converts to meters;
/// `y_up` swaps camera y-up into z-up.
pub fn load_joint_rows(
    path: &Path,
    joint_count: usize,
    scale: f64,
    y_up: bool,
) -> Result<RawSequence<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|_| Error::MissingFile(path.display().to_string()))?;
    let fname = path.display().to_string();
    let mut seq = empty_sequence();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let values: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(&fname, lineno + 1, &e.to_string()))?;
        let coords = joint_count * 3;
        let (timestamp, values) = if values.len() == coords + 1 {
            (values[0] as usize, &values[1..])
        } else if values.len() == coords {
            (seq.frames.len(), &values[..])
        } else {
            return Err(parse_err(
                &fname,
                lineno + 1,
                &format!("expected {coords} or {} values, found {}", coords + 1, values.len()),
            ));
        };
        let joint_positions = values
            .chunks(3)
            .map(|c| {
                let p = [c[0] * scale, c[1] * scale, c[2] * scale];
                if y_up {
                    [p[0], p[2], p[1]]
                } else {
                    p
                }
            })
            .collect();
        seq.frames.push(Frame {
            joint_positions,
            object_positions: Vec::new(),
            timestamp_index: timestamp,
        });
    }
    if seq.frames.is_empty() {
        return Err(parse_err(&fname, 1, "no frames"));
    }
    Ok(seq)
}

/// Merge an object trajectory file (generic-csv with obj columns only)
/// into a loaded skeleton sequence. Object ids are sorted  into canonical
/// order; the frame counts must match.
fn attach_objects(seq: &mut RawSequence<f64>, path: &Path) -> Result<()> {
    let objects = load_generic_csv(path)?;
    let fname = path.display().to_string();
    if !objects.frames.iter().all(|f| f.joint_positions.is_empty()) {
        return Err(parse_err(&fname, 1, "object file must contain only obj columns"));
    }
    if objects.frames.len() != seq.frames.len() {
        return Err(parse_err(
            &fname,
            0,
            &format!(
                "object frame count {} does not match skeleton frame count {}",
                objects.frames.len(),
                seq.frames.len()
            ),
        ));
    }
    for (frame, obj) in seq.frames.iter_mut().zip(objects.frames) {
        frame.object_positions = obj.object_positions;
    }
    Ok(())
}

fn parse_err(file: &str, line: usize, message: &str) -> Error {
    Error::ParseError { file: file.to_string(), line, message: message.to_string() }
}

/// Write a toy dataset (sequences + manifest) under `dir`.
pub fn write_dataset(
    sequences: &[RawSequence<f64>],
    dir: &Path,
    class_names: &[String],
) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    let mut counters: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for seq in sequences {
        let rep = counters.entry((seq.class_label, seq.subject_id)).or_insert(0);
        let name = format!("c{}_s{}_r{}.csv", seq.class_label, seq.subject_id, rep);
        *rep += 1;
        write_generic_csv(seq, &dir.join(&name))?;
        entries.push(ManifestEntry {
            path: name,
            label: seq.class_label,
            subject: seq.subject_id,
            objects: None,
            start: None,
            end: None,
        });
    }
    let manifest = DatasetManifest {
        format: DatasetFormat::GenericCsv,
        root: None,
        class_names: class_names.to_vec(),
        samples: entries,
    };
    let path = dir.join("manifest.toml");
    std::fs::write(&path, toml::to_string_pretty(&manifest).unwrap())?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generic_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let seq = RawSequence {
            frames: (0..5)
                .map(|t| Frame {
                    joint_positions: vec![[t as f64 * 0.1, -1.25, 3.0], [0.0, 0.5, 0.125]],
                    object_positions: vec![[1.0, 2.0, 3.0]],
                    timestamp_index: t,
                })
                .collect(),
            subject_id: 0,
            class_label: 1,
            sample_index: 0,
        };
        let path = dir.path().join("a.csv");
        write_generic_csv(&seq, &path).unwrap();
        let loaded = load_generic_csv(&path).unwrap();
        assert_eq!(loaded.frames, seq.frames);
    }

    #[test]
    fn generic_csv_toy_example() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.csv");
        std::fs::write(
            &path,
            "frame,a_x,a_y,a_z,b_x,b_y,b_z\n0,0.0,0.1,0.2,1.0,1.1,1.2\n1,0.3,0.4,0.5,1.3,1.4,1.5\n",
        )
        .unwrap();
        let seq = load_generic_csv(&path).unwrap();
        assert_eq!(seq.frames.len(), 2);
        assert_eq!(seq.frames[0].joint_positions.len(), 2);
        // J=2, O=0 -> K would be 6.
        let s = crate::skeleton::to_trajectory_sample(&seq, 0).unwrap();
        assert_eq!(s.dims(), 6);
    }

    #[test]
    fn generic_csv_bad_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "time,a_x,a_y,a_z\n0,1,2,3\n").unwrap();
        assert!(matches!(load_generic_csv(&path), Err(Error::ParseError { .. })));
    }

    #[test]
    fn cad60_frame_parses_positions_and_units() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("0.txt");
        let mut vals = vec![1.0];
        for j in 0..11 {
            vals.extend(std::iter::repeat(0.0).take(9)); // orientation
            vals.push(1.0); // orientation confidence
            vals.extend([j as f64 * 1000.0, 100.0, 2000.0]); // mm position
            vals.push(1.0); // position confidence
        }
        for j in 11..15 {
            vals.extend([j as f64 * 1000.0, 100.0, 2000.0]);
            vals.push(1.0);
        }
        let line: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
        std::fs::write(&path, format!("{},\nEND\n", line.join(","))).unwrap();
        let seq = load_cad60(&path).unwrap();
        assert_eq!(seq.frames.len(), 1);
        assert_eq!(seq.frames[0].joint_positions.len(), 15);
        // mm -> m and y-up -> z-up: (3000, 100, 2000) -> (3.0, 2.0, 0.1).
        assert_eq!(seq.frames[0].joint_positions[3], [3.0, 2.0, 0.1]);
    }

    #[test]
    fn cad60_wrong_arity_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, "1,2,3\nEND\n").unwrap();
        assert!(matches!(load_cad60(&path), Err(Error::ParseError { .. })));
    }

    #[test]
    fn joint_rows_with_segmentation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("joints.txt");
        let mut text = String::new();
        for t in 0..10 {
            let row: Vec<String> = std::iter::once((t * 100).to_string())
                .chain((0..60).map(|i| format!("{}", t as f64 + i as f64 * 0.01)))
                .collect();
            text.push_str(&row.join(" "));
            text.push('\n');
        }
        std::fs::write(&path, text).unwrap();
        let seq = load_joint_rows(&path, 20, 1.0, true).unwrap();
        assert_eq!(seq.frames.len(), 10);
        assert_eq!(seq.frames[0].joint_positions.len(), 20);

        let dir2 = dir.path();
        let manifest = DatasetManifest {
            format: DatasetFormat::Utkinect,
            root: Some(dir2.display().to_string()),
            class_names: vec![],
            samples: vec![ManifestEntry {
                path: "joints.txt".into(),
                label: 1,
                subject: 1,
                objects: None,
                start: Some(2),
                end: Some(5),
            }],
        };
        let seqs = load_dataset(&manifest, dir2).unwrap();
        assert_eq!(seqs[0].frames.len(), 4);
        assert_eq!(seqs[0].class_label, 1);
    }

    #[test]
    fn object_frame_count_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("s.csv"),
            "frame,a_x,a_y,a_z\n0,0,0,0\n1,1,1,1\n",
        )
        .unwrap();
        std::fs::write(dir.path().join("o.csv"), "frame,obj0_x,obj0_y,obj0_z\n0,0,0,0\n").unwrap();
        let manifest = DatasetManifest {
            format: DatasetFormat::GenericCsv,
            root: None,
            class_names: vec![],
            samples: vec![ManifestEntry {
                path: "s.csv".into(),
                label: 1,
                subject: 1,
                objects: Some("o.csv".into()),
                start: None,
                end: None,
            }],
        };
        assert!(matches!(
            load_dataset(&manifest, dir.path()),
            Err(Error::ParseError { .. })
        ));
    }

    #[test]
    fn non_contiguous_labels_rejected() {
        let manifest = DatasetManifest {
            format: DatasetFormat::GenericCsv,
            root: None,
            class_names: vec![],
            samples: vec![ManifestEntry {
                path: "x.csv".into(),
                label: 3,
                subject: 1,
                objects: None,
                start: None,
                end: None,
            }],
        };
        assert!(matches!(validate_labels(&manifest), Err(Error::LabelMapError(_))));
    }
}
