//! Per-position overlap statistics over a finished alignment, downsampled to
//! a fixed-length curve and smoothed with a 1D Gaussian filter.

use serde::{Deserialize, Serialize};

use super::{AlignError, Msa};

/// Overlap curves are always downsampled to this many positions.
pub const CURVE_LEN: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapMetric {
    /// Fraction of all row pairs with equal non-gap characters at a column;
    /// a pair with any gap counts as a non-match.
    PairwiseMatch,
    /// Fraction of rows whose character equals that of at least 5 other rows.
    AlignedWithAtLeast5,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapCurve {
    /// Exactly [`CURVE_LEN`] values in [0, 1].
    pub values: Vec<f64>,
    pub metric: OverlapMetric,
    pub smoothing_sigma: f64,
}

/// Computes the overlap curve of an alignment: drop columns with fewer than
/// `min_support` non-gap rows, score each surviving column under `metric`,
/// average into [`CURVE_LEN`] equal-width buckets, then smooth with a
/// Gaussian of standard deviation `sigma` (kernel radius 4*sigma,
/// renormalized at the boundaries).
pub fn overlap_curve(
    msa: &Msa,
    metric: OverlapMetric,
    min_support: usize,
    sigma: f64,
) -> Result<OverlapCurve, AlignError> {
    let n = msa.n_rows();
    if n < 2 {
        return Err(AlignError::TooFewSequences { n });
    }

    let mut column_values = Vec::with_capacity(msa.columns);
    for col in 0..msa.columns {
        let counts = msa.column_counts(col);
        let nongap: usize = counts.iter().map(|&(_, c)| c).sum();
        if nongap < min_support {
            continue;
        }
        let value = match metric {
            OverlapMetric::PairwiseMatch => {
                let matching: usize = counts.iter().map(|&(_, c)| c * (c - 1) / 2).sum();
                matching as f64 / (n * (n - 1) / 2) as f64
            }
            OverlapMetric::AlignedWithAtLeast5 => {
                let aligned: usize = counts.iter().filter(|&&(_, c)| c >= 6).map(|&(_, c)| c).sum();
                aligned as f64 / n as f64
            }
        };
        column_values.push(value);
    }
    if column_values.is_empty() {
        return Err(AlignError::NoSurvivingColumns);
    }

    let buckets = downsample(&column_values, CURVE_LEN);
    let values = gaussian_smooth(&buckets, sigma);
    Ok(OverlapCurve { values, metric, smoothing_sigma: sigma })
}

/// Equal-width bucket averaging. When fewer columns than buckets exist, a
/// bucket repeats its nearest column.
fn downsample(values: &[f64], buckets: usize) -> Vec<f64> {
    let c = values.len();
    let mut out = Vec::with_capacity(buckets);
    for b in 0..buckets {
        let lo = b * c / buckets;
        let mut hi = (b + 1) * c / buckets;
        if hi <= lo {
            hi = lo + 1;
        }
        let slice = &values[lo..hi.min(c)];
        out.push(slice.iter().sum::<f64>() / slice.len() as f64);
    }
    out
}

/// Discrete Gaussian convolution with truncation radius 4*sigma; the kernel
/// is renormalized over in-range taps, so every output is a convex
/// combination of inputs and a constant signal is preserved exactly.
fn gaussian_smooth(values: &[f64], sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return values.to_vec();
    }
    let radius = (4.0 * sigma).ceil() as isize;
    let weights: Vec<f64> =
        (-radius..=radius).map(|t| (-((t * t) as f64) / (2.0 * sigma * sigma)).exp()).collect();

    let len = values.len() as isize;
    let mut out = Vec::with_capacity(values.len());
    for i in 0..len {
        let mut acc = 0.0;
        let mut norm = 0.0;
        for (wi, t) in (-radius..=radius).enumerate() {
            let j = i + t;
            if j < 0 || j >= len {
                continue;
            }
            acc += weights[wi] * values[j as usize];
            norm += weights[wi];
        }
        out.push(acc / norm);
    }
    out
}

/// Position-wise mean over curves of the same metric (for averaging across
/// prompts). Returns None on an empty slice.
pub fn mean_curve_values(curves: &[OverlapCurve]) -> Option<Vec<f64>> {
    if curves.is_empty() {
        return None;
    }
    let mut mean = vec![0.0f64; CURVE_LEN];
    for curve in curves {
        for (m, v) in mean.iter_mut().zip(curve.values.iter()) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= curves.len() as f64;
    }
    Some(mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::{progressive_msa_strs, ScoringScheme, GAP};

    fn identical_msa(n: usize, text: &str) -> Msa {
        let seqs: Vec<&str> = std::iter::repeat(text).take(n).collect();
        progressive_msa_strs(&seqs, &ScoringScheme::default(), 3).unwrap()
    }

    #[test]
    fn unanimous_rows_give_ones() {
        let msa = identical_msa(10, "a shared sentence everyone emits");
        for metric in [OverlapMetric::PairwiseMatch, OverlapMetric::AlignedWithAtLeast5] {
            let curve = overlap_curve(&msa, metric, 5, 2.0).unwrap();
            assert_eq!(curve.values.len(), CURVE_LEN);
            assert!(curve.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn pairwise_distinct_rows_give_zero() {
        // 10 rows, alphabet of 10 distinct letters per column position.
        let seqs: Vec<String> = (0..10)
            .map(|r| {
                (0..40)
                    .map(|c| (b'a' + ((r + c) % 10) as u8) as char)
                    .collect::<String>()
            })
            .collect();
        let refs: Vec<&str> = seqs.iter().map(|s| s.as_str()).collect();
        let msa = progressive_msa_strs(&refs, &ScoringScheme::default(), 3).unwrap();
        // Columns are straight-through (equal lengths); no pair matches anywhere.
        if msa.columns == 40 {
            let curve = overlap_curve(&msa, OverlapMetric::PairwiseMatch, 5, 2.0).unwrap();
            assert!(curve.values.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn single_column_pair_fraction() {
        // Chars [A, A, A, B, B, C]: (C(3,2)+C(2,2))/C(6,2) = 4/15.
        let msa = Msa {
            columns: 1,
            rows: vec![vec!['A'], vec!['A'], vec!['A'], vec!['B'], vec!['B'], vec!['C']],
            row_ids: (0..6).collect(),
        };
        let curve = overlap_curve(&msa, OverlapMetric::PairwiseMatch, 5, 0.0).unwrap();
        assert!((curve.values[0] - 4.0 / 15.0).abs() < 1e-15);
    }

    #[test]
    fn low_support_columns_dropped() {
        // Second column has only 4 non-gap rows and must be dropped.
        let mut rows = vec![vec!['x', 'y']; 4];
        rows.extend(vec![vec!['x', GAP]; 6]);
        let msa = Msa { columns: 2, rows, row_ids: (0..10).collect() };
        let curve = overlap_curve(&msa, OverlapMetric::PairwiseMatch, 5, 0.0).unwrap();
        // Only the unanimous first column survives.
        assert!(curve.values.iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn no_surviving_columns_is_error() {
        let msa = Msa { columns: 1, rows: vec![vec!['a'], vec![GAP]], row_ids: vec![0, 1] };
        assert!(matches!(
            overlap_curve(&msa, OverlapMetric::PairwiseMatch, 5, 2.0),
            Err(AlignError::NoSurvivingColumns)
        ));
    }

    #[test]
    fn gaussian_preserves_constant_exactly() {
        let smoothed = gaussian_smooth(&vec![0.37; 100], 2.0);
        for v in smoothed {
            assert!((v - 0.37).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_weighted_means_stay_in_range() {
        let raw: Vec<f64> = (0..100).map(|i| if i % 3 == 0 { 1.0 } else { 0.0 }).collect();
        let smoothed = gaussian_smooth(&raw, 2.0);
        assert!(smoothed.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn downsample_shorter_than_curve() {
        let vals = vec![0.5; 7];
        let out = downsample(&vals, CURVE_LEN);
        assert_eq!(out.len(), CURVE_LEN);
        assert!(out.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn downsample_partial_final_bucket() {
        // 250 columns: buckets of width 2 and 3; all averages stay exact
        // for a piecewise-constant input.
        let vals = vec![1.0; 250];
        let out = downsample(&vals, CURVE_LEN);
        assert!(out.iter().all(|&v| v == 1.0));
    }
}
