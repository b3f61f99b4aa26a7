//! Domain types and geometric normalization: person-centric alignment,
//! object-count equalization and handedness mirroring.
//!
//! Coordinates are meters, z-up. Alignment moves the hip joint to the origin
//! and rotates about z so the left-hip to right-hip vector, projected to the
//! horizontal plane, points along +x. The same rigid transform is applied to
//! every joint and every tracked object of the frame.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Real;

pub type Point3<F> = [F; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame<F> {
    pub joint_positions: Vec<Point3<F>>,
    /// Tracked objects in canonical object order (loader responsibility).
    pub object_positions: Vec<Point3<F>>,
    pub timestamp_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSequence<F> {
    pub frames: Vec<Frame<F>>,
    pub subject_id: usize,
    /// Class label in 1..=C.
    pub class_label: usize,
    pub sample_index: usize,
}

/// One action sample as K = (J + O) * 3 scalar sub-signals, ordered joints
/// first then objects, each as (x, y, z). Sub-signal lengths are equal for a
/// freshly represented sample and may diverge only after warping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample<F> {
    pub sub_signals: Vec<Vec<F>>,
    pub joint_count: usize,
    pub object_count: usize,
    pub class_label: usize,
    pub subject_id: usize,
    pub sample_index: usize,
}

impl<F: Real> TrajectorySample<F> {
    pub fn dims(&self) -> usize {
        self.sub_signals.len()
    }
}

/// Which joints define the person-centric frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentReference {
    pub hip: usize,
    pub left_hip: usize,
    pub right_hip: usize,
}

/// Left/right joint pairing used by mirroring. Unpaired joints map to
/// themselves; the mirrored axis is x (the hip-to-hip axis after alignment).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryMap {
    pub joint_pairs: Vec<(usize, usize)>,
}

/// Rotation about the vertical (z) axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZRotation<F> {
    cos: F,
    sin: F,
}

impl<F: Real> ZRotation<F> {
    pub fn identity() -> Self {
        Self { cos: F::one(), sin: F::zero() }
    }

    fn apply(&self, p: Point3<F>) -> Point3<F> {
        // Rotation by -atan2(sin, cos): maps (cos, sin) to (1, 0).
        [self.cos * p[0] + self.sin * p[1], -self.sin * p[0] + self.cos * p[1], p[2]]
    }
}

pub const DEGENERACY_TOLERANCE: f64 = 1e-6;

/// Rotation that aligns the frame's hip axis to +x, or an error when the
/// hip-to-hip horizontal projection is too short to define one.
pub fn frame_rotation<F: Real>(frame: &Frame<F>, r: &AlignmentReference) -> Result<ZRotation<F>> {
    let l = frame.joint_positions[r.left_hip];
    let rt = frame.joint_positions[r.right_hip];
    let vx = rt[0] - l[0];
    let vy = rt[1] - l[1];
    let norm = (vx * vx + vy * vy).sqrt();
    let tol = F::from_f64(DEGENERACY_TOLERANCE).unwrap();
    if norm < tol {
        return Err(Error::DegenerateOrientation {
            norm: norm.to_f64().unwrap_or(0.0),
            tolerance: DEGENERACY_TOLERANCE,
        });
    }
    Ok(ZRotation { cos: vx / norm, sin: vy / norm })
}

/// Translate the hip to the origin and apply `rotation` to all joints and
/// objects.
pub fn align_frame_with<F: Real>(
    frame: &Frame<F>,
    r: &AlignmentReference,
    rotation: ZRotation<F>,
) -> Frame<F> {
    let hip = frame.joint_positions[r.hip];
    let transform = |p: &Point3<F>| rotation.apply([p[0] - hip[0], p[1] - hip[1], p[2] - hip[2]]);
    Frame {
        joint_positions: frame.joint_positions.iter().map(transform).collect(),
        object_positions: frame.object_positions.iter().map(transform).collect(),
        timestamp_index: frame.timestamp_index,
    }
}

/// Person-centric alignment of a single frame.
pub fn align_frame<F: Real>(frame: &Frame<F>, r: &AlignmentReference) -> Result<Frame<F>> {
    let rot = frame_rotation(frame, r)?;
    Ok(align_frame_with(frame, r, rot))
}

/// Frame-by-frame alignment of a sequence. A degenerate frame reuses the
/// previous frame's rotation; a degenerate first frame is an error.
pub fn align_sequence<F: Real>(seq: &RawSequence<F>, r: &AlignmentReference) -> Result<RawSequence<F>> {
    let mut frames = Vec::with_capacity(seq.frames.len());
    let mut last_rotation: Option<ZRotation<F>> = None;
    for frame in &seq.frames {
        let rotation = match frame_rotation(frame, r) {
            Ok(rot) => rot,
            Err(e) => last_rotation.ok_or(e)?,
        };
        last_rotation = Some(rotation);
        frames.push(align_frame_with(frame, r, rotation));
    }
    Ok(RawSequence {
        frames,
        subject_id: seq.subject_id,
        class_label: seq.class_label,
        sample_index: seq.sample_index,
    })
}

/// Flatten an aligned sequence into K = (J + max_objects) * 3 sub-signals.
/// Missing objects pad with all-zero sub-signals (the hip location after
/// alignment).
pub fn to_trajectory_sample<F: Real>(
    seq: &RawSequence<F>,
    max_objects: usize,
) -> Result<TrajectorySample<F>> {
    if seq.frames.is_empty() {
        return Err(Error::EmptySequence);
    }
    let joints = seq.frames[0].joint_positions.len();
    for (i, frame) in seq.frames.iter().enumerate() {
        if frame.object_positions.len() > max_objects {
            return Err(Error::ObjectOverflow {
                frame: i,
                found: frame.object_positions.len(),
                max: max_objects,
            });
        }
        if frame.joint_positions.len() != joints {
            return Err(Error::DimensionMismatch {
                expected: joints,
                got: frame.joint_positions.len(),
            });
        }
    }
    let t = seq.frames.len();
    let k = (joints + max_objects) * 3;
    let mut sub_signals = vec![Vec::with_capacity(t); k];
    for frame in &seq.frames {
        for (j, p) in frame.joint_positions.iter().enumerate() {
            for axis in 0..3 {
                sub_signals[j * 3 + axis].push(p[axis]);
            }
        }
        for slot in 0..max_objects {
            let p = frame.object_positions.get(slot).copied().unwrap_or([F::zero(); 3]);
            for axis in 0..3 {
                sub_signals[(joints + slot) * 3 + axis].push(p[axis]);
            }
        }
    }
    Ok(TrajectorySample {
        sub_signals,
        joint_count: joints,
        object_count: max_objects,
        class_label: seq.class_label,
        subject_id: seq.subject_id,
        sample_index: seq.sample_index,
    })
}

/// Reflect an aligned sample across the body's bisector plane: x sub-signals
/// are negated and paired left/right joints swap all three axes. Objects are
/// only x-negated.
pub fn mirror_sample<F: Real>(s: &TrajectorySample<F>, map: &SymmetryMap) -> TrajectorySample<F> {
    let mut sub_signals = s.sub_signals.clone();
    for &(a, b) in &map.joint_pairs {
        for axis in 0..3 {
            sub_signals.swap(a * 3 + axis, b * 3 + axis);
        }
    }
    let total = s.joint_count + s.object_count;
    for idx in 0..total {
        for v in sub_signals[idx * 3].iter_mut() {
            *v = -*v;
        }
    }
    TrajectorySample { sub_signals, ..s.clone() }
}
