//! Per-class action templates: mean-sample search, index-wise averaging of
//! warped training samples, and warping of arbitrary samples to every
//! template.
//!
//! Each mean-sample sub-signal is chosen independently per dimension k as
//! the training sub-signal minimizing the summed DTW distance to all
//! corresponding sub-signals of the class, so a mean-sample can mix
//! sub-signals of different training samples and lengths.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dtw::{self, DtwOptions};
use crate::error::{Error, Result};
use crate::skeleton::{mirror_sample, SymmetryMap, TrajectorySample};
use crate::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanSample<F> {
    pub sub_signals: Vec<Vec<F>>,
    /// Position (within the class sample list) each sub-signal came from.
    pub source_sample_index: Vec<usize>,
    pub class_label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionTemplate<F> {
    pub sub_signals: Vec<Vec<F>>,
    pub class_label: usize,
}

/// Templates for all classes, in class order; with mirroring enabled a
/// second bank built from the mirrored training set follows, so the warp
/// order is (original 1..C, mirrored 1..C).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateSet<F> {
    pub templates: Vec<ActionTemplate<F>>,
    pub mirrored: Option<Vec<ActionTemplate<F>>>,
}

impl<F: Real> TemplateSet<F> {
    pub fn class_count(&self) -> usize {
        self.templates.len()
    }

    /// All templates in warp order.
    pub fn all(&self) -> Vec<&ActionTemplate<F>> {
        let mut out: Vec<&ActionTemplate<F>> = self.templates.iter().collect();
        if let Some(m) = &self.mirrored {
            out.extend(m.iter());
        }
        out
    }
}

/// One sample warped to every template, in template warp order.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpedSampleSet<F> {
    pub warped: Vec<TrajectorySample<F>>,
}

/// Pick the class medoid: the sample minimizing summed warping distance
/// to every other sample of the class.
pub fn mean_sample<F: Real>(
    samples: &[TrajectorySample<F>],
    opts: DtwOptions,
) -> Result<MeanSample<F>> {
    let class = samples.first().map(|s| s.class_label).unwrap_or(0);
    if samples.is_empty() {
        return Err(Error::EmptyClass { class });
    }
    let k_dims = samples[0].dims();
    for s in samples {
        if s.dims() != k_dims {
            return Err(Error::DimensionMismatch { expected: k_dims, got: s.dims() });
        }
    }
    let picks: Result<Vec<(usize, Vec<F>)>> = (0..k_dims)
        .into_par_iter()
        .map(|k| {
            let subs: Vec<&[F]> = samples.iter().map(|s| s.sub_signals[k].as_slice()).collect();
            let n = subs.len();
            // Symmetric pairwise distance matrix; the self term is zero.
            let mut dist = vec![F::zero(); n * n];
            for j in 0..n {
                for j2 in (j + 1)..n {
                    let d = dtw::dtw_with(subs[j], subs[j2], opts)?.distance;
                    dist[j * n + j2] = d;
                    dist[j2 * n + j] = d;
                }
            }
            let mut best = 0usize;
            let mut best_total = F::infinity();
            for j in 0..n {
                let total: F = (0..n).map(|j2| dist[j * n + j2]).sum();
                if total < best_total {
                    best_total = total;
                    best = j;
                }
            }
            Ok((best, subs[best].to_vec()))
        })
        .collect();
    let picks = picks?;
    Ok(MeanSample {
        source_sample_index: picks.iter().map(|(j, _)| *j).collect(),
        sub_signals: picks.into_iter().map(|(_, s)| s).collect(),
        class_label: class,
    })
}

/// Warp every training sample of the class to the mean-sample and average
/// index-wise.
pub fn build_template<F: Real>(
    samples: &[TrajectorySample<F>],
    mean: &MeanSample<F>,
    opts: DtwOptions,
) -> Result<ActionTemplate<F>> {
    if samples.is_empty() {
        return Err(Error::EmptyClass { class: mean.class_label });
    }
    let warped: Result<Vec<TrajectorySample<F>>> = samples
        .par_iter()
        .map(|s| dtw::warp(s, &mean.sub_signals, opts))
        .collect();
    let warped = warped?;
    let scale = F::from_usize(samples.len()).unwrap();
    let sub_signals = (0..mean.sub_signals.len())
        .map(|k| {
            let len = mean.sub_signals[k].len();
            (0..len)
                .map(|l| {
                    let sum: F = warped.iter().map(|w| w.sub_signals[k][l]).sum();
                    sum / scale
                })
                .collect()
        })
        .collect();
    Ok(ActionTemplate { sub_signals, class_label: mean.class_label })
}

/// Build one template per class (labels 1..=C), from training samples only.
pub fn build_templates<F: Real>(
    samples: &[TrajectorySample<F>],
    class_count: usize,
    opts: DtwOptions,
) -> Result<Vec<ActionTemplate<F>>> {
    (1..=class_count)
        .map(|class| {
            let class_samples: Vec<TrajectorySample<F>> =
                samples.iter().filter(|s| s.class_label == class).cloned().collect();
            if class_samples.is_empty() {
                return Err(Error::EmptyClass { class });
            }
            let mean = mean_sample(&class_samples, opts)?;
            build_template(&class_samples, &mean, opts)
        })
        .collect()
}

/// Template bank for the pipeline: one bank from the original training set,
/// plus, when a symmetry map is given, a second bank from its mirrored copy.
pub fn build_template_set<F: Real>(
    samples: &[TrajectorySample<F>],
    class_count: usize,
    mirror: Option<&SymmetryMap>,
    opts: DtwOptions,
) -> Result<TemplateSet<F>> {
    let templates = build_templates(samples, class_count, opts)?;
    let mirrored = match mirror {
        Some(map) => {
            let reflected: Vec<TrajectorySample<F>> =
                samples.iter().map(|s| mirror_sample(s, map)).collect();
            Some(build_templates(&reflected, class_count, opts)?)
        }
        None => None,
    };
    Ok(TemplateSet { templates, mirrored })
}

/// Warp `s` with the templates of all actions, in warp order.
pub fn warp_to_templates<F: Real>(
    s: &TrajectorySample<F>,
    set: &TemplateSet<F>,
    opts: DtwOptions,
) -> Result<WarpedSampleSet<F>> {
    let warped: Result<Vec<TrajectorySample<F>>> = set
        .all()
        .into_iter()
        .map(|t| dtw::warp(s, &t.sub_signals, opts))
        .collect();
    Ok(WarpedSampleSet { warped: warped? })
}
