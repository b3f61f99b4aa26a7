//! Deterministic synthetic motion generator for tests, benchmarks and the
//! `synth` CLI subcommand.
//!
//! A six-joint stick figure (hip, left hip, right hip, left hand, right
//! hand, head) performs per-class parametric motions. Variation knobs:
//! per-subject style offsets, per-sample speed factors, additive Gaussian
//! noise, and optional handedness flips. With `noise_sigma = 0` and a
//! degenerate speed range all samples of a class are identical.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::skeleton::{AlignmentReference, Frame, Point3, RawSequence, SymmetryMap};

pub const SYNTH_JOINTS: usize = 6;

pub fn synth_reference() -> AlignmentReference {
    AlignmentReference { hip: 0, left_hip: 1, right_hip: 2 }
}

pub fn synth_symmetry() -> SymmetryMap {
    // (left hip, right hip), (left hand, right hand).
    SymmetryMap { joint_pairs: vec![(1, 2), (3, 4)] }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_classes: usize,
    pub n_subjects: usize,
    /// Repetitions per (class, subject) pair.
    pub reps: usize,
    /// Standard deviation of additive joint noise; also scales the
    /// per-subject style offsets so sigma = 0 removes all variation.
    pub noise_sigma: f64,
    /// Uniform speed-factor range; (1.0, 1.0) disables time warping.
    pub speed_range: (f64, f64),
    /// Mirror a random half of the samples left/right.
    pub handed: bool,
    pub base_frames: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_classes: 4,
            n_subjects: 5,
            reps: 3,
            noise_sigma: 0.01,
            speed_range: (0.8, 1.25),
            handed: false,
            base_frames: 40,
            seed: 7,
        }
    }
}

/// Nominal skeleton pose at phase `t` in [0, 1] for class `class` (1-based).
fn pose(class: usize, t: f64) -> [Point3<f64>; SYNTH_JOINTS] {
    use std::f64::consts::PI;
    let hip = [0.0, 0.0, 1.0];
    let lhip = [-0.15, 0.0, 1.0];
    let rhip = [0.15, 0.0, 1.0];
    let head = [0.0, 0.02 * (2.0 * PI * t).sin(), 1.6];
    // Distinct right-hand motion per class; the left hand idles.
    let rhand = match (class - 1) % 6 {
        // raise hand: vertical arc
        0 => [0.35, 0.1, 1.0 + 0.6 * (PI * t).sin()],
        // wave: oscillation at head height
        1 => [0.35 + 0.15 * (4.0 * PI * t).sin(), 0.1, 1.5],
        // reach forward: ramp in y
        2 => [0.35, 0.1 + 0.5 * t, 1.1],
        // circular stir in the x-y plane
        3 => [0.3 + 0.2 * (2.0 * PI * t).cos(), 0.2 + 0.2 * (2.0 * PI * t).sin(), 1.1],
        // push down then up
        4 => [0.35, 0.1, 1.2 - 0.4 * (2.0 * PI * t).sin().abs()],
        // diagonal sweep
        _ => [0.35 - 0.5 * t, 0.1 + 0.3 * t, 0.9 + 0.6 * t],
    };
    let lhand = [-0.35, 0.1, 1.0];
    [hip, lhip, rhip, lhand, rhand, head]
}

/// Linearly resample a sequence of frames to `new_len` frames.
pub fn reparameterize(frames: &[Frame<f64>], new_len: usize) -> Vec<Frame<f64>> {
    assert!(new_len >= 2 && frames.len() >= 2);
    let scale = (frames.len() - 1) as f64 / (new_len - 1) as f64;
    (0..new_len)
        .map(|i| {
            let pos = i as f64 * scale;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(frames.len() - 1);
            let frac = pos - lo as f64;
            let lerp = |a: &[Point3<f64>], b: &[Point3<f64>]| {
                a.iter()
                    .zip(b)
                    .map(|(p, q)| {
                        [
                            p[0] + frac * (q[0] - p[0]),
                            p[1] + frac * (q[1] - p[1]),
                            p[2] + frac * (q[2] - p[2]),
                        ]
                    })
                    .collect::<Vec<_>>()
            };
            Frame {
                joint_positions: lerp(&frames[lo].joint_positions, &frames[hi].joint_positions),
                object_positions: lerp(&frames[lo].object_positions, &frames[hi].object_positions),
                timestamp_index: i,
            }
        })
        .collect()
}

fn mirror_frames(frames: &mut [Frame<f64>], symmetry: &SymmetryMap) {
    for frame in frames {
        for &(a, b) in &symmetry.joint_pairs {
            frame.joint_positions.swap(a, b);
        }
        for p in frame.joint_positions.iter_mut().chain(&mut frame.object_positions) {
            p[0] = -p[0];
        }
    }
}

pub fn generate(spec: &SynthSpec) -> Result<Vec<RawSequence<f64>>> {
    if spec.n_classes == 0 || spec.n_subjects == 0 || spec.reps == 0 {
        return Err(Error::InvalidSpec(
            "n_classes, n_subjects and reps must all be positive".into(),
        ));
    }
    if spec.base_frames < 8 {
        return Err(Error::InvalidSpec("base_frames must be at least 8".into()));
    }
    if !(spec.noise_sigma >= 0.0) {
        return Err(Error::InvalidSpec("noise_sigma must be nonnegative".into()));
    }
    if !(spec.speed_range.0 > 0.0 && spec.speed_range.0 <= spec.speed_range.1) {
        return Err(Error::InvalidSpec(
            "speed_range must satisfy 0 < low <= high".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    // Per-subject style: a fixed small offset for each moving joint,
    // scaled by noise_sigma so sigma = 0 yields identical subjects.
    let styles: Vec<[f64; 3]> = (0..spec.n_subjects)
        .map(|_| {
            [
                rng.gen_range(-1.0..1.0) * 3.0 * spec.noise_sigma,
                rng.gen_range(-1.0..1.0) * 3.0 * spec.noise_sigma,
                rng.gen_range(-1.0..1.0) * 3.0 * spec.noise_sigma,
            ]
        })
        .collect();
    let symmetry = synth_symmetry();
    let mut out = Vec::new();
    let mut sample_index = 0;
    for class in 1..=spec.n_classes {
        for subject in 0..spec.n_subjects {
            for _ in 0..spec.reps {
                let speed = if spec.speed_range.0 < spec.speed_range.1 {
                    rng.gen_range(spec.speed_range.0..spec.speed_range.1)
                } else {
                    spec.speed_range.0
                };
                let base: Vec<Frame<f64>> = (0..spec.base_frames)
                    .map(|i| {
                        let t = i as f64 / (spec.base_frames - 1) as f64;
                        let mut joints = pose(class, t).to_vec();
                        let style = styles[subject];
                        for j in [3, 4, 5] {
                            joints[j][0] += style[0];
                            joints[j][1] += style[1];
                            joints[j][2] += style[2];
                        }
                        for p in joints.iter_mut() {
                            for axis in 0..3 {
                                if spec.noise_sigma > 0.0 {
                                    p[axis] += gaussian(&mut rng) * spec.noise_sigma;
                                }
                            }
                        }
                        Frame {
                            joint_positions: joints,
                            object_positions: Vec::new(),
                            timestamp_index: i,
                        }
                    })
                    .collect();
                let new_len = ((spec.base_frames as f64 * speed).round() as usize).max(8);
                let mut frames = if new_len == spec.base_frames {
                    base
                } else {
                    reparameterize(&base, new_len)
                };
                if spec.handed && rng.gen_bool(0.5) {
                    mirror_frames(&mut frames, &symmetry);
                }
                out.push(RawSequence {
                    frames,
                    subject_id: subject + 1,
                    class_label: class,
                    sample_index,
                });
                sample_index += 1;
            }
        }
    }
    Ok(out)
}

/// Box-Muller standard normal draw.
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_same_seed() {
        let spec = SynthSpec::default();
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.frames, y.frames);
        }
    }

    #[test]
    fn zero_sigma_unit_speed_collapses_within_class() {
        let spec = SynthSpec {
            noise_sigma: 0.0,
            speed_range: (1.0, 1.0),
            handed: false,
            ..SynthSpec::default()
        };
        let samples = generate(&spec).unwrap();
        for class in 1..=spec.n_classes {
            let of_class: Vec<_> =
                samples.iter().filter(|s| s.class_label == class).collect();
            for s in &of_class[1..] {
                assert_eq!(s.frames, of_class[0].frames);
            }
        }
    }

    #[test]
    fn classes_differ() {
        let spec = SynthSpec { noise_sigma: 0.0, speed_range: (1.0, 1.0), ..Default::default() };
        let samples = generate(&spec).unwrap();
        let a = samples.iter().find(|s| s.class_label == 1).unwrap();
        let b = samples.iter().find(|s| s.class_label == 2).unwrap();
        assert_ne!(a.frames, b.frames);
    }

    #[test]
    fn reparameterize_endpoints_and_length() {
        let spec = SynthSpec { noise_sigma: 0.0, speed_range: (1.0, 1.0), ..Default::default() };
        let seq = &generate(&spec).unwrap()[0];
        let shorter = reparameterize(&seq.frames, 20);
        assert_eq!(shorter.len(), 20);
        assert_eq!(shorter[0].joint_positions, seq.frames[0].joint_positions);
        assert_eq!(
            shorter.last().unwrap().joint_positions,
            seq.frames.last().unwrap().joint_positions
        );
    }

    #[test]
    fn invalid_spec_rejected() {
        let bad = SynthSpec { n_classes: 0, ..Default::default() };
        assert!(matches!(generate(&bad), Err(crate::error::Error::InvalidSpec(_))));
        let bad = SynthSpec { speed_range: (1.5, 0.5), ..Default::default() };
        assert!(matches!(generate(&bad), Err(crate::error::Error::InvalidSpec(_))));
    }

    #[test]
    fn reparameterized_copy_is_dtw_close_but_euclidean_far() {
        let spec = SynthSpec { noise_sigma: 0.0, speed_range: (1.0, 1.0), ..Default::default() };
        let seq = &generate(&spec).unwrap()[0];
        let slow = reparameterize(&seq.frames, seq.frames.len() * 2);
        // right-hand z trajectory carries the motion for class 1
        let a: Vec<f64> = seq.frames.iter().map(|f| f.joint_positions[4][2]).collect();
        let b: Vec<f64> = slow.iter().map(|f| f.joint_positions[4][2]).collect();
        let dtw = crate::dtw::dtw(&a, &b).unwrap().distance;
        let euclid: f64 = a
            .iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        // interpolation midpoints keep DTW small but nonzero
        assert!(dtw < 0.05, "dtw {dtw}");
        assert!(euclid > 100.0 * dtw, "euclid {euclid} dtw {dtw}");
    }

    #[test]
    fn speed_range_changes_lengths() {
        let spec = SynthSpec { speed_range: (0.5, 1.5), reps: 10, ..Default::default() };
        let samples = generate(&spec).unwrap();
        let lengths: std::collections::BTreeSet<usize> =
            samples.iter().map(|s| s.frames.len()).collect();
        assert!(lengths.len() > 1);
    }
}
