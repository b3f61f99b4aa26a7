//! Multilevel discrete wavelet decomposition of warped sub-signals and
//! feature-vector assembly.
//!
//! Analysis uses orthonormal filter banks (Daubechies, Symlet, Coiflet)
//! with half-point symmetric boundary extension. Each stage produces
//! floor((L + filter_len - 1) / 2) approximation and detail coefficients;
//! the approximation feeds the next stage. A stage whose input is shorter
//! than the filter stops the cascade and the remaining detail blocks are
//! emitted empty, so the coefficient layout stays a pure function of the
//! template lengths and the spec.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WaveletFamily {
    Daubechies,
    Coiflet,
    Symlet,
}

impl WaveletFamily {
    pub fn name(&self) -> &'static str {
        match self {
            WaveletFamily::Daubechies => "daubechies",
            WaveletFamily::Coiflet => "coiflet",
            WaveletFamily::Symlet => "symlet",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WaveletSpec {
    pub family: WaveletFamily,
    pub order: usize,
    pub levels: usize,
}

impl WaveletSpec {
    pub fn new(family: WaveletFamily, order: usize, levels: usize) -> Result<Self> {
        let spec = Self { family, order, levels };
        spec.low_pass::<f64>()?;
        if levels == 0 {
            return Err(Error::ConfigError("wavelet levels must be positive".into()));
        }
        Ok(spec)
    }

    /// Orthonormal scaling (low-pass reconstruction) filter.
    pub fn low_pass<F: Real>(&self) -> Result<Vec<F>> {
        let taps: &[f64] = match (self.family, self.order) {
            (WaveletFamily::Daubechies, 1) => &DB1,
            (WaveletFamily::Daubechies, 2) => &DB2,
            (WaveletFamily::Daubechies, 3) => &DB3,
            (WaveletFamily::Daubechies, 4) => &DB4,
            (WaveletFamily::Daubechies, 5) => &DB5,
            (WaveletFamily::Symlet, 2) => &DB2,
            (WaveletFamily::Symlet, 3) => &DB3,
            (WaveletFamily::Symlet, 4) => &SYM4,
            (WaveletFamily::Symlet, 5) => &SYM5,
            (WaveletFamily::Coiflet, 1) => &COIF1,
            (WaveletFamily::Coiflet, 2) => &COIF2,
            (f, o) => {
                return Err(Error::ConfigError(format!(
                    "unsupported wavelet {} order {o}",
                    f.name()
                )))
            }
        };
        Ok(taps.iter().map(|&v| F::from_f64(v).unwrap()).collect())
    }

    pub fn filter_len(&self) -> Result<usize> {
        Ok(self.low_pass::<f64>()?.len())
    }
}

impl Default for WaveletSpec {
    fn default() -> Self {
        Self { family: WaveletFamily::Daubechies, order: 4, levels: 3 }
    }
}

// Orthonormal scaling filters (sum = sqrt(2), unit norm, even shifts
// orthogonal). sym2/sym3 coincide with db2/db3.
const DB1: [f64; 2] = [0.7071067811865476, 0.7071067811865476];
const DB2: [f64; 4] =
    [0.48296291314469025, 0.836516303737469, 0.22414386804185735, -0.12940952255092145];
const DB3: [f64; 6] = [
    0.3326705529509569,
    0.8068915093133388,
    0.4598775021193313,
    -0.13501102001039084,
    -0.08544127388224149,
    0.035226291882100656,
];
const DB4: [f64; 8] = [
    0.23037781330885523,
    0.7148465705525415,
    0.6308807679295904,
    -0.02798376941698385,
    -0.18703481171888114,
    0.030841381835986965,
    0.032883011666982945,
    -0.010597401784997278,
];
const DB5: [f64; 10] = [
    0.160102397974125,
    0.6038292697974729,
    0.7243085284385744,
    0.13842814590110342,
    -0.24229488706619015,
    -0.03224486958502952,
    0.07757149384006515,
    -0.006241490213011705,
    -0.012580751999015526,
    0.003335725285001549,
];
const SYM4: [f64; 8] = [
    0.03222310060404270,
    -0.012603967262037833,
    -0.09921954357684722,
    0.29785779560527736,
    0.8037387518059161,
    0.49761866763201545,
    -0.02963552764599851,
    -0.07576571478927333,
];
const SYM5: [f64; 10] = [
    0.019538882735286728,
    -0.021101834024758855,
    -0.17532808990845047,
    0.01660210576452232,
    0.6339789634582119,
    0.7234076904024206,
    0.1993975339773936,
    -0.039134249302383094,
    0.029519490925774643,
    0.027333068345077982,
];
const COIF1: [f64; 6] = [
    -0.0727326195128539,
    0.3378976624578092,
    0.8525720202122554,
    0.38486484686420286,
    -0.0727326195128539,
    -0.01565572813546454,
];
const COIF2: [f64; 12] = [
    0.016387336463522112,
    -0.04146493678175915,
    -0.06737255472196302,
    0.3861100668211622,
    0.8127236354455423,
    0.41700518442169254,
    -0.0764885990783064,
    -0.0594344186464569,
    0.023680171946334084,
    0.0056114348193944995,
    -0.0018232088707029932,
    -0.0007205494453645122,
];

/// Quadrature-mirror high-pass reconstruction filter:
/// g[n] = (-1)^n h[len-1-n].
pub fn high_pass<F: Real>(low: &[F]) -> Vec<F> {
    let n = low.len();
    (0..n)
        .map(|i| {
            let v = low[n - 1 - i];
            if i % 2 == 0 {
                v
            } else {
                -v
            }
        })
        .collect()
}

/// Half-point symmetric reflection of index `i` into `0..len`.
fn sym_index(mut i: isize, len: usize) -> usize {
    let n = len as isize;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// One analysis stage: approximation and detail coefficients, each of
/// length floor((len + filter_len - 1) / 2).
fn analysis_stage<F: Real>(x: &[F], rec_lo: &[F]) -> (Vec<F>, Vec<F>) {
    let flen = rec_lo.len();
    let len = x.len();
    // Analysis filters are the time-reversed reconstruction filters.
    let dec_lo: Vec<F> = rec_lo.iter().rev().copied().collect();
    let dec_hi: Vec<F> = high_pass(rec_lo).into_iter().rev().collect();
    let n_out = (len + flen - 1) / 2;
    let mut approx = Vec::with_capacity(n_out);
    let mut detail = Vec::with_capacity(n_out);
    for k in 0..n_out {
        let mut a = F::zero();
        let mut d = F::zero();
        for m in 0..flen {
            let xi = x[sym_index(2 * k as isize + 1 - m as isize, len)];
            a = a + dec_lo[m] * xi;
            d = d + dec_hi[m] * xi;
        }
        approx.push(a);
        detail.push(d);
    }
    (approx, detail)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition<F> {
    /// Approximation coefficients at the deepest computed level.
    pub approx: Vec<F>,
    /// Detail coefficients, deepest level first.
    pub details: Vec<Vec<F>>,
    /// Input length of each computed stage, outermost first. Stages past
    /// the cascade cutoff are absent; their detail blocks are empty.
    pub stage_lengths: Vec<usize>,
}

impl<F: Real> Decomposition<F> {
    /// Coefficients in feature order: deepest approximation, then details
    /// from deepest to level 1.
    pub fn concat(&self) -> Vec<F> {
        let mut out = self.approx.clone();
        for d in &self.details {
            out.extend_from_slice(d);
        }
        out
    }

    pub fn coeff_count(&self) -> usize {
        self.approx.len() + self.details.iter().map(Vec::len).sum::<usize>()
    }
}

/// Multilevel decomposition of `x` under `spec`.
pub fn wavedec<F: Real>(x: &[F], spec: &WaveletSpec) -> Result<Decomposition<F>> {
    if x.len() < 2 {
        return Err(Error::SignalTooShort { len: x.len(), required: 2 });
    }
    let rec_lo = spec.low_pass::<F>()?;
    let flen = rec_lo.len();
    if x.len() < flen {
        return Err(Error::SignalTooShort { len: x.len(), required: flen });
    }
    let mut approx = x.to_vec();
    let mut details_rev: Vec<Vec<F>> = Vec::with_capacity(spec.levels);
    let mut stage_lengths = Vec::with_capacity(spec.levels);
    for _ in 0..spec.levels {
        if approx.len() < flen {
            // Cascade stops early; keep the layout level count by emitting
            // empty detail blocks.
            details_rev.push(Vec::new());
            continue;
        }
        stage_lengths.push(approx.len());
        let (a, d) = analysis_stage(&approx, &rec_lo);
        details_rev.push(d);
        approx = a;
    }
    details_rev.reverse();
    Ok(Decomposition { approx, details: details_rev, stage_lengths })
}

/// Coefficient layout for a fixed warped-signal length: per-block lengths
/// in concat order. Depends only on (length, spec), never on signal values.
pub fn layout(len: usize, spec: &WaveletSpec) -> Result<Vec<usize>> {
    let flen = spec.filter_len()?;
    let mut sizes_rev = Vec::with_capacity(spec.levels);
    let mut cur = len;
    for _ in 0..spec.levels {
        if cur < flen {
            sizes_rev.push(0);
            continue;
        }
        cur = (cur + flen - 1) / 2;
        sizes_rev.push(cur);
    }
    let mut out = vec![cur];
    sizes_rev.reverse();
    out.extend(sizes_rev);
    Ok(out)
}

/// Flatten a sample-vs-all-templates warp result into one feature vector:
/// for each template (in warp order) and each sub-signal, the concatenated
/// multilevel coefficients `[A_L, D_L, ..., D_1]`. Because every warped
/// sub-signal has its template's length, the layout — and therefore the
/// feature dimension — is fixed per trained model.
pub fn feature_vector<F: Real>(
    warped: &crate::template::WarpedSampleSet<F>,
    spec: &WaveletSpec,
) -> Result<Vec<F>> {
    let mut out = Vec::new();
    for sample in &warped.warped {
        for sub in &sample.sub_signals {
            out.extend(wavedec(sub, spec)?.concat());
        }
    }
    Ok(out)
}

/// Feature dimension implied by a set of template lengths and dims.
pub fn feature_dimension(template_shapes: &[(usize, usize)], spec: &WaveletSpec) -> Result<usize> {
    let mut total = 0;
    for &(len, dims) in template_shapes {
        total += dims * layout(len, spec)?.iter().sum::<usize>();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_vector_matches_predicted_dimension() {
        use crate::skeleton::TrajectorySample;
        use crate::template::WarpedSampleSet;
        let make = |len: usize, dims: usize| TrajectorySample {
            sub_signals: (0..dims)
                .map(|d| (0..len).map(|i| (i * (d + 1)) as f64 * 0.1).collect())
                .collect(),
            joint_count: dims / 3,
            object_count: 0,
            class_label: 1,
            subject_id: 1,
            sample_index: 0,
        };
        let warped = WarpedSampleSet { warped: vec![make(16, 6), make(37, 6)] };
        let spec = WaveletSpec::new(WaveletFamily::Daubechies, 4, 3).unwrap();
        let fv = feature_vector(&warped, &spec).unwrap();
        let dim = feature_dimension(&[(16, 6), (37, 6)], &spec).unwrap();
        assert_eq!(fv.len(), dim);
        assert!(fv.iter().all(|v| v.is_finite()));
    }

    const HAAR: WaveletSpec =
        WaveletSpec { family: WaveletFamily::Daubechies, order: 1, levels: 1 };

    #[test]
    fn haar_constant_signal() {
        let d = wavedec(&[1.0, 1.0, 1.0, 1.0], &HAAR).unwrap();
        let r2 = 2f64.sqrt();
        assert_eq!(d.approx.len(), 2);
        for v in &d.approx {
            assert!((v - r2).abs() < 1e-12);
        }
        for v in &d.details[0] {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn haar_pure_alternation() {
        let d = wavedec(&[1.0f64, -1.0], &HAAR).unwrap();
        assert_eq!(d.approx.len(), 1);
        assert_eq!(d.details[0].len(), 1);
        assert!(d.approx[0].abs() < 1e-12);
        assert!((d.details[0][0] - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn layout_matches_decomposition() {
        let spec = WaveletSpec { family: WaveletFamily::Symlet, order: 4, levels: 3 };
        for len in [16usize, 37, 100] {
            let x: Vec<f64> = (0..len).map(|i| (i as f64).sin()).collect();
            let d = wavedec(&x, &spec).unwrap();
            let lay = layout(len, &spec).unwrap();
            let mut got = vec![d.approx.len()];
            got.extend(d.details.iter().map(Vec::len));
            assert_eq!(got, lay);
        }
    }

    #[test]
    fn short_signal_stops_cascade_with_empty_blocks() {
        let spec = WaveletSpec { family: WaveletFamily::Daubechies, order: 4, levels: 5 };
        let x: Vec<f64> = (0..16).map(|i| i as f64).collect();
        let d = wavedec(&x, &spec).unwrap();
        assert_eq!(d.details.len(), 5);
        // 16 -> 11 -> 9 -> 8 -> 7 (stop: 7 < 8)
        assert!(d.details.iter().any(|b| b.is_empty()));
        let lay = layout(16, &spec).unwrap();
        assert_eq!(lay[0], d.approx.len());
    }

    #[test]
    fn too_short_rejected() {
        let spec = WaveletSpec { family: WaveletFamily::Coiflet, order: 2, levels: 1 };
        assert!(matches!(wavedec(&[1.0; 4], &spec), Err(Error::SignalTooShort { .. })));
        assert!(matches!(wavedec::<f64>(&[1.0], &HAAR), Err(Error::SignalTooShort { .. })));
    }

    #[test]
    fn unsupported_order_rejected() {
        assert!(WaveletSpec::new(WaveletFamily::Daubechies, 9, 1).is_err());
        assert!(WaveletSpec::new(WaveletFamily::Daubechies, 4, 0).is_err());
    }

    #[test]
    fn filters_are_orthonormal() {
        for (family, orders) in [
            (WaveletFamily::Daubechies, vec![1, 2, 3, 4, 5]),
            (WaveletFamily::Symlet, vec![2, 3, 4, 5]),
            (WaveletFamily::Coiflet, vec![1, 2]),
        ] {
            for order in orders {
                let h: Vec<f64> =
                    WaveletSpec { family, order, levels: 1 }.low_pass().unwrap();
                let sum: f64 = h.iter().sum();
                assert!((sum - 2f64.sqrt()).abs() < 1e-9, "{family:?} {order}");
                for shift in 0..h.len() / 2 {
                    let dot: f64 =
                        (0..h.len() - 2 * shift).map(|n| h[n] * h[n + 2 * shift]).sum();
                    let target = if shift == 0 { 1.0 } else { 0.0 };
                    assert!((dot - target).abs() < 1e-9, "{family:?} {order} shift {shift}");
                }
            }
        }
    }
}
