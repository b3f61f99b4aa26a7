//! Noise suppression on sub-signals: median spike removal followed by
//! Savitzky-Golay least-squares smoothing.
//!
//! Boundaries never invent data: the median filter shrinks its window and
//! the Savitzky-Golay filter evaluates the boundary-window polynomial fits
//! off-center.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skeleton::TrajectorySample;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterParams {
    pub median_window: usize,
    pub savgol_window: usize,
    pub savgol_order: usize,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self { median_window: 5, savgol_window: 11, savgol_order: 3 }
    }
}

/// Running median with a centered window. Boundary windows shrink
/// symmetrically so they stay centered and odd-sized.
pub fn median_filter<F: Real>(x: &[F], window: usize) -> Result<Vec<F>> {
    if window == 0 || window % 2 == 0 {
        return Err(Error::InvalidWindow { window });
    }
    let half = window / 2;
    let n = x.len();
    let mut out = Vec::with_capacity(n);
    let mut buf: Vec<F> = Vec::with_capacity(window);
    for i in 0..n {
        let radius = half.min(i).min(n - 1 - i);
        buf.clear();
        buf.extend_from_slice(&x[i - radius..=i + radius]);
        buf.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.push(buf[buf.len() / 2]);
    }
    Ok(out)
}

/// Savitzky-Golay smoothing. Interior points take the center value of the
/// degree-`order` least-squares fit over the window; the first and last
/// `window/2` points evaluate the first/last window's fit off-center.
pub fn savgol_filter<F: Real>(x: &[F], window: usize, order: usize) -> Result<Vec<F>> {
    if window == 0 || window % 2 == 0 {
        return Err(Error::InvalidWindow { window });
    }
    if order >= window {
        return Err(Error::InvalidWindow { window });
    }
    if x.len() < window {
        return Err(Error::SignalTooShort { len: x.len(), required: window });
    }
    let smoother = smoother_matrix::<F>(window, order);
    let half = window / 2;
    let n = x.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (start, row) = if i < half {
            (0, i)
        } else if i >= n - half {
            (n - window, window - (n - i))
        } else {
            (i - half, half)
        };
        let mut acc = F::zero();
        for (c, &w) in smoother[row].iter().enumerate() {
            acc = acc + w * x[start + c];
        }
        out.push(acc);
    }
    Ok(out)
}

/// The w x w projection matrix onto degree-`order` polynomials over window
/// positions t = 0..w-1, built from the normal equations.
fn smoother_matrix<F: Real>(window: usize, order: usize) -> Vec<Vec<F>> {
    let p = order + 1;
    // Vandermonde A: window x p, centered abscissae for conditioning.
    let a: Vec<Vec<F>> = (0..window)
        .map(|r| {
            let t = F::from_usize(r).unwrap() - F::from_usize(window / 2).unwrap();
            (0..p).map(|c| t.powi(c as i32)).collect()
        })
        .collect();
    // G = A^T A, p x p.
    let mut g = vec![vec![F::zero(); p]; p];
    for i in 0..p {
        for j in 0..p {
            g[i][j] = (0..window).map(|r| a[r][i] * a[r][j]).sum();
        }
    }
    let ginv = invert(g);
    // Projection = A G^-1 A^T.
    let mut proj = vec![vec![F::zero(); window]; window];
    for r in 0..window {
        for c in 0..window {
            let mut acc = F::zero();
            for i in 0..p {
                for j in 0..p {
                    acc = acc + a[r][i] * ginv[i][j] * a[c][j];
                }
            }
            proj[r][c] = acc;
        }
    }
    proj
}

/// Gauss-Jordan inverse with partial pivoting; matrices here are tiny
/// (order+1 square) and symmetric positive definite.
fn invert<F: Real>(mut m: Vec<Vec<F>>) -> Vec<Vec<F>> {
    let n = m.len();
    let mut inv: Vec<Vec<F>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { F::one() } else { F::zero() }).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())
            .unwrap();
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let d = m[col][col];
        for j in 0..n {
            m[col][j] = m[col][j] / d;
            inv[col][j] = inv[col][j] / d;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r][col];
            for j in 0..n {
                m[r][j] = m[r][j] - f * m[col][j];
                inv[r][j] = inv[r][j] - f * inv[col][j];
            }
        }
    }
    inv
}

/// Median then Savitzky-Golay on each sub-signal. Sub-signals shorter than
/// the Savitzky-Golay window fall back to median-only filtering.
pub fn smooth_sample<F: Real>(s: &TrajectorySample<F>, p: &FilterParams) -> Result<TrajectorySample<F>> {
    let mut sub_signals = Vec::with_capacity(s.sub_signals.len());
    for x in &s.sub_signals {
        let m = median_filter(x, p.median_window)?;
        let sm = match savgol_filter(&m, p.savgol_window, p.savgol_order) {
            Ok(v) => v,
            Err(Error::SignalTooShort { .. }) => m,
            Err(e) => return Err(e),
        };
        sub_signals.push(sm);
    }
    Ok(TrajectorySample { sub_signals, ..s.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_removes_single_spike() {
        let out = median_filter(&[1.0, 1.0, 9.0, 1.0, 1.0], 3).unwrap();
        assert_eq!(out, vec![1.0; 5]);
    }

    #[test]
    fn median_keeps_constant_and_monotone() {
        assert_eq!(median_filter(&[2.0; 6], 5).unwrap(), vec![2.0; 6]);
        assert_eq!(median_filter(&[1.0, 2.0, 3.0, 4.0], 3).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn median_idempotent_on_monotone() {
        let x = vec![0.0, 0.5, 1.5, 2.0, 2.0, 3.0];
        let once = median_filter(&x, 3).unwrap();
        let twice = median_filter(&once, 3).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn invalid_windows_rejected() {
        assert!(matches!(median_filter(&[1.0], 4), Err(Error::InvalidWindow { .. })));
        assert!(matches!(median_filter(&[1.0], 0), Err(Error::InvalidWindow { .. })));
        assert!(matches!(savgol_filter(&[1.0; 9], 6, 2), Err(Error::InvalidWindow { .. })));
        assert!(matches!(savgol_filter(&[1.0; 9], 5, 5), Err(Error::InvalidWindow { .. })));
        assert!(matches!(savgol_filter(&[1.0; 3], 5, 2), Err(Error::SignalTooShort { .. })));
    }

    #[test]
    fn savgol_reproduces_quadratic_exactly() {
        let x: Vec<f64> = (0..=10).map(|t| (t * t) as f64).collect();
        let out = savgol_filter(&x, 5, 2).unwrap();
        for (a, b) in out.iter().zip(&x) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn savgol_constant_unchanged() {
        let out: Vec<f64> = savgol_filter(&[3.5; 20], 11, 3).unwrap();
        for v in out {
            assert!((v - 3.5).abs() < 1e-9);
        }
    }

    #[test]
    fn savgol_reduces_white_noise_variance() {
        // Monte-Carlo: smoothing must shrink the variance of white noise.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut wins = 0;
        for _ in 0..1000 {
            let x: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y = savgol_filter(&x, 11, 3).unwrap();
            if variance(&y) < variance(&x) {
                wins += 1;
            }
        }
        assert_eq!(wins, 1000);
    }

    fn variance(x: &[f64]) -> f64 {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64
    }

    #[test]
    fn smooth_sample_preserves_shape_and_metadata() {
        let s = TrajectorySample {
            sub_signals: vec![vec![0.0; 30], (0..30).map(|t| t as f64).collect(), vec![1.0; 4]],
            joint_count: 1,
            object_count: 0,
            class_label: 2,
            subject_id: 3,
            sample_index: 4,
        };
        let out = smooth_sample(&s, &FilterParams::default()).unwrap();
        assert_eq!(out.class_label, 2);
        for (a, b) in out.sub_signals.iter().zip(&s.sub_signals) {
            assert_eq!(a.len(), b.len());
        }
        // Short third sub-signal took the median-only fallback.
        assert_eq!(out.sub_signals[2], vec![1.0; 4]);
    }
}
