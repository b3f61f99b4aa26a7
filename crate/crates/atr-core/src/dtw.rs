//! Dynamic time warping between scalar sub-signals, and warping of a
//! multidimensional sample onto a base signal of possibly different length.
//!
//! The distance is the sum of squared differences over the matched index
//! pairs (no square root). Backtracking is deterministic: on cost ties the
//! diagonal predecessor wins, then the one advancing the source index, then
//! the one advancing the base index. That order makes warping a signal onto
//! itself the exact identity.

use crate::error::{Error, Result};
use crate::skeleton::TrajectorySample;
use crate::Real;

/// Index correspondence between a source sequence A and a base sequence B.
/// Indices are 1-based; the path runs from (1,1) to (|A|,|B|) and each step
/// advances one or both indices by exactly 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WarpingPath {
    pub pairs: Vec<(usize, usize)>,
}

impl WarpingPath {
    /// The source-index component of the path.
    pub fn source_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.pairs.iter().map(|&(p, _)| p)
    }

    /// The base-index component of the path.
    pub fn base_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.pairs.iter().map(|&(_, q)| q)
    }
}

#[derive(Debug, Clone)]
pub struct DtwResult<F> {
    pub distance: F,
    pub path: WarpingPath,
}

/// Optional Sakoe-Chiba band half-width. `None` leaves warping unconstrained.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct DtwOptions {
    pub band: Option<usize>,
}

/// DTW distance and one optimal warping path from `a` (source) to `b` (base).
pub fn dtw<F: Real>(a: &[F], b: &[F]) -> Result<DtwResult<F>> {
    dtw_with(a, b, DtwOptions::default())
}

pub fn dtw_with<F: Real>(a: &[F], b: &[F], opts: DtwOptions) -> Result<DtwResult<F>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySequence);
    }
    let n = a.len();
    let m = b.len();
    let inf = F::infinity();

    // Accumulated-cost table, (n+1) x (m+1), row 0 / col 0 are sentinels.
    let mut acc = vec![inf; (n + 1) * (m + 1)];
    acc[0] = F::zero();
    let idx = |i: usize, j: usize| i * (m + 1) + j;

    for i in 1..=n {
        let (lo, hi) = match opts.band {
            Some(w) => band_range(i, n, m, w),
            None => (1, m),
        };
        for j in lo..=hi {
            let diff = a[i - 1] - b[j - 1];
            let cost = diff * diff;
            let best = min3(acc[idx(i - 1, j - 1)], acc[idx(i - 1, j)], acc[idx(i, j - 1)]);
            acc[idx(i, j)] = cost + best;
        }
    }

    let distance = acc[idx(n, m)];
    if !distance.is_finite() {
        // Band too narrow to connect the corners.
        return Err(Error::DegenerateData(format!(
            "no warping path within band {:?} for lengths {}x{}",
            opts.band, n, m
        )));
    }

    // Backtrack from (n, m). Tie order: diagonal, source-advancing, base-advancing.
    let mut pairs = Vec::with_capacity(n + m);
    let mut i = n;
    let mut j = m;
    pairs.push((i, j));
    while i > 1 || j > 1 {
        let (ni, nj) = if i == 1 {
            (i, j - 1)
        } else if j == 1 {
            (i - 1, j)
        } else {
            let diag = acc[idx(i - 1, j - 1)];
            let up = acc[idx(i - 1, j)];
            let left = acc[idx(i, j - 1)];
            if diag <= up && diag <= left {
                (i - 1, j - 1)
            } else if up <= left {
                (i - 1, j)
            } else {
                (i, j - 1)
            }
        };
        i = ni;
        j = nj;
        pairs.push((i, j));
    }
    pairs.reverse();

    Ok(DtwResult { distance, path: WarpingPath { pairs } })
}

fn band_range(i: usize, n: usize, m: usize, w: usize) -> (usize, usize) {
    // Center of the band follows the main diagonal of the (possibly
    // rectangular) table.
    let center = ((i as f64) * (m as f64) / (n as f64)).round() as usize;
    let lo = center.saturating_sub(w).max(1);
    let hi = (center + w).min(m);
    (lo, hi.max(lo))
}

fn min3<F: Real>(a: F, b: F, c: F) -> F {
    a.min(b).min(c)
}

/// Warp one sub-signal onto `base`: each base index takes the mean of the
/// source values matched to it; unmatched base indices (possible only under
/// a band constraint) are filled by linear interpolation between the nearest
/// defined neighbors.
pub fn warp_sub_signal<F: Real>(source: &[F], base: &[F], opts: DtwOptions) -> Result<Vec<F>> {
    let res = dtw_with(source, base, opts)?;
    let mut out: Vec<Option<F>> = vec![None; base.len()];
    let mut sum = F::zero();
    let mut count = 0usize;
    let mut current = 1usize;
    for &(p, q) in &res.path.pairs {
        if q != current {
            if count >= 1 {
                out[current - 1] = Some(sum / F::from_usize(count).unwrap());
            }
            sum = F::zero();
            count = 0;
            current = q;
        }
        sum = sum + source[p - 1];
        count += 1;
    }
    if count >= 1 {
        out[current - 1] = Some(sum / F::from_usize(count).unwrap());
    }
    Ok(fill_gaps(out))
}

/// Linear interpolation over `None` runs; ends clamp to the nearest value.
fn fill_gaps<F: Real>(values: Vec<Option<F>>) -> Vec<F> {
    let n = values.len();
    let mut out = Vec::with_capacity(n);
    for (i, v) in values.iter().enumerate() {
        if let Some(v) = v {
            out.push(*v);
            continue;
        }
        let prev = values[..i].iter().rposition(|v| v.is_some());
        let next = values[i + 1..].iter().position(|v| v.is_some()).map(|p| i + 1 + p);
        let filled = match (prev, next) {
            (Some(p), Some(q)) => {
                let vp = values[p].unwrap();
                let vq = values[q].unwrap();
                let t = F::from_usize(i - p).unwrap() / F::from_usize(q - p).unwrap();
                vp + (vq - vp) * t
            }
            (Some(p), None) => values[p].unwrap(),
            (None, Some(q)) => values[q].unwrap(),
            (None, None) => F::zero(),
        };
        out.push(filled);
    }
    out
}

/// Warp every sub-signal of `s` onto the corresponding sub-signal of `base`.
/// Output lengths follow `base`; metadata is copied from `s`.
pub fn warp<F: Real>(
    s: &TrajectorySample<F>,
    base: &[Vec<F>],
    opts: DtwOptions,
) -> Result<TrajectorySample<F>> {
    if s.sub_signals.len() != base.len() {
        return Err(Error::DimensionMismatch { expected: base.len(), got: s.sub_signals.len() });
    }
    let mut warped = Vec::with_capacity(base.len());
    for (src, dst) in s.sub_signals.iter().zip(base) {
        warped.push(warp_sub_signal(src, dst, opts)?);
    }
    Ok(TrajectorySample { sub_signals: warped, ..s.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_of(a: &[f64], b: &[f64]) -> Vec<(usize, usize)> {
        dtw(a, b).unwrap().path.pairs
    }

    #[test]
    fn identical_sequences_zero_distance_diagonal_path() {
        let r = dtw(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.distance, 0.0);
        assert_eq!(r.path.pairs, vec![(1, 1), (2, 2), (3, 3)]);
    }

    #[test]
    fn single_elements() {
        let r = dtw(&[1.0], &[5.0]).unwrap();
        assert_eq!(r.distance, 16.0);
        assert_eq!(r.path.pairs, vec![(1, 1)]);
    }

    #[test]
    fn two_element_enumerated_minimum() {
        // Three valid paths; the minimum total is 1.
        let r = dtw(&[0.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(r.distance, 1.0);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(dtw::<f64>(&[], &[1.0]), Err(Error::EmptySequence)));
        assert!(matches!(dtw::<f64>(&[1.0], &[]), Err(Error::EmptySequence)));
    }

    #[test]
    fn path_is_valid_monotone_cover() {
        let a = [0.0, 1.0, 2.0, 1.5, 0.5];
        let b = [0.0, 2.0, 0.0];
        let pairs = path_of(&a, &b);
        assert_eq!(*pairs.first().unwrap(), (1, 1));
        assert_eq!(*pairs.last().unwrap(), (a.len(), b.len()));
        for w in pairs.windows(2) {
            let dp = w[1].0 - w[0].0;
            let dq = w[1].1 - w[0].1;
            assert!(dp <= 1 && dq <= 1 && dp + dq >= 1);
        }
    }

    #[test]
    fn warp_three_onto_two() {
        // Optimal path (1,1),(2,1),(3,2): base index 1 averages {0,2}.
        let out = warp_sub_signal(&[0.0, 2.0, 4.0], &[0.0, 4.0], DtwOptions::default()).unwrap();
        assert_eq!(out, vec![1.0, 4.0]);
    }

    #[test]
    fn warp_two_onto_three() {
        // Diagonal-preferred backtrack matches base index 2 to source index 1.
        let out = warp_sub_signal(&[0.0, 4.0], &[0.0, 2.0, 4.0], DtwOptions::default()).unwrap();
        assert_eq!(out, vec![0.0, 0.0, 4.0]);
    }

    #[test]
    fn warp_onto_self_is_identity() {
        let x = [0.3, -1.2, 4.5, 4.5, 0.0, 7.1];
        let out = warp_sub_signal(&x, &x, DtwOptions::default()).unwrap();
        assert_eq!(out.as_slice(), &x);
    }

    #[test]
    fn fill_gaps_interpolates_and_clamps() {
        let v = vec![None, Some(2.0), None, None, Some(5.0), None];
        assert_eq!(fill_gaps(v), vec![2.0, 2.0, 3.0, 4.0, 5.0, 5.0]);
    }

    #[test]
    fn band_distance_at_least_unconstrained() {
        let a = [0.0, 1.0, 3.0, 2.0, 0.0, -1.0];
        let b = [0.0, 3.0, 0.0];
        let free = dtw(&a, &b).unwrap().distance;
        let banded = dtw_with(&a, &b, DtwOptions { band: Some(1) }).unwrap().distance;
        assert!(banded >= free);
    }
}
