//! Error metrics, box-plot statistics and the simulated comparison runners.

mod experiment;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::N_BANDS;

pub use experiment::{
    evaluate_rooms, run_experiment, ClassicalInput, ExperimentConfig, Family, MethodResult, MethodSpec, Report,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub method: String,
    pub room: usize,
    /// `None` for a record pooled over bands.
    pub band: Option<usize>,
    pub estimate: f64,
    pub label: f64,
    pub absolute_error: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorSet {
    pub records: Vec<ErrorRecord>,
    /// (room, band) pairs without an estimate.
    pub unavailable: usize,
}

impl ErrorSet {
    pub fn values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.absolute_error).collect()
    }

    pub fn band_values(&self, band: usize) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.band == Some(band))
            .map(|r| r.absolute_error)
            .collect()
    }
}

/// Absolute errors per (room, band), or per room averaged over the available
/// bands when `aggregate_over_bands` is set. Estimates are clipped to
/// `[0, 1]` first.
pub fn absolute_errors(
    method: &str,
    estimates: &[[Option<f64>; N_BANDS]],
    labels: &[[f64; N_BANDS]],
    aggregate_over_bands: bool,
) -> Result<ErrorSet> {
    if estimates.len() != labels.len() {
        return Err(Error::Misaligned(format!(
            "{} estimates for {} labels",
            estimates.len(),
            labels.len()
        )));
    }
    let mut set = ErrorSet::default();
    for (room, (est, lab)) in estimates.iter().zip(labels).enumerate() {
        let mut pooled = (0.0, 0.0, 0.0, 0usize);
        for b in 0..N_BANDS {
            let Some(e) = est[b] else {
                set.unavailable += 1;
                continue;
            };
            let e = e.clamp(0.0, 1.0);
            let err = (e - lab[b]).abs();
            if aggregate_over_bands {
                pooled = (pooled.0 + e, pooled.1 + lab[b], pooled.2 + err, pooled.3 + 1);
            } else {
                set.records.push(ErrorRecord {
                    method: method.to_string(),
                    room,
                    band: Some(b),
                    estimate: e,
                    label: lab[b],
                    absolute_error: err,
                });
            }
        }
        if aggregate_over_bands && pooled.3 > 0 {
            let k = pooled.3 as f64;
            set.records.push(ErrorRecord {
                method: method.to_string(),
                room,
                band: None,
                estimate: pooled.0 / k,
                label: pooled.1 / k,
                absolute_error: pooled.2 / k,
            });
        }
    }
    Ok(set)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

/// Linearly interpolated quantile of sorted data (`p` in `[0, 1]`).
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let (lo, frac) = (h.floor() as usize, h - h.floor());
    if lo + 1 < sorted.len() {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[lo]
    }
}

impl BoxStats {
    /// Quartiles by linear interpolation between order statistics; whiskers
    /// at the most extreme data within 1.5 IQR of the box, never inside it. `std` is the
    /// population standard deviation.
    pub fn compute(values: &[f64]) -> Result<BoxStats> {
        if values.is_empty() {
            return Err(Error::InvalidInput("box statistics of an empty list".into()));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidInput("box statistics of NaN values".into()));
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let (q1, median, q3) = (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75));
        let iqr = q3 - q1;
        let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
        // An interpolated quartile can sit beyond the last datum inside the
        // fence; the whisker then collapses onto the box edge.
        let whisker_low = v.iter().find(|&&x| x >= lo_fence).unwrap().min(q1);
        let whisker_high = v.iter().rev().find(|&&x| x <= hi_fence).unwrap().max(q3);
        let n = v.len();
        // Shifted by the first datum so a constant list has an exact mean.
        let mean = v[0] + v.iter().map(|x| x - v[0]).sum::<f64>() / n as f64;
        let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        Ok(BoxStats {
            median,
            q1,
            q3,
            whisker_low,
            whisker_high,
            mean,
            std,
            n,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn five_values() {
        let s = BoxStats::compute(&[3.0, 1.0, 5.0, 2.0, 4.0]).unwrap();
        assert_eq!((s.median, s.q1, s.q3), (3.0, 2.0, 4.0));
        assert_eq!((s.whisker_low, s.whisker_high), (1.0, 5.0));
        assert_eq!(s.n, 5);
        assert_eq!(BoxStats::compute(&[1.0, 2.0, 3.0, 4.0]).unwrap().median, 2.5);
    }

    #[test]
    fn constant_and_outliers() {
        let s = BoxStats::compute(&[0.4; 7]).unwrap();
        assert!([s.median, s.q1, s.q3, s.whisker_low, s.whisker_high].iter().all(|&v| v == 0.4));
        assert!((s.mean - 0.4).abs() < 1e-15);
        assert_eq!(s.std, 0.0);
        let s = BoxStats::compute(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        assert_eq!(s.whisker_high, 4.0);
        assert!(BoxStats::compute(&[]).is_err());
    }

    /// Quantile by counting: the value at fractional rank `p (n - 1)` found
    /// without sorting, by ranking every element.
    fn rank_quantile(values: &[f64], p: f64) -> f64 {
        let n = values.len();
        let kth = |k: usize| {
            *values
                .iter()
                .find(|&&x| {
                    let below = values.iter().filter(|&&y| y < x).count();
                    let equal = values.iter().filter(|&&y| y == x).count();
                    below <= k && k < below + equal
                })
                .unwrap()
        };
        let h = p * (n - 1) as f64;
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(n - 1);
        kth(lo) + (h - lo as f64) * (kth(hi) - kth(lo))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn matches_rank_oracle(values in prop::collection::vec(0.0f64..1.0, 1..40)) {
            let s = BoxStats::compute(&values).unwrap();
            for (p, got) in [(0.25, s.q1), (0.5, s.median), (0.75, s.q3)] {
                prop_assert!((rank_quantile(&values, p) - got).abs() < 1e-12);
            }
            prop_assert!(s.q1 <= s.median && s.median <= s.q3);
            prop_assert!(s.whisker_low <= s.q1 + 1e-15 && s.whisker_high >= s.q3 - 1e-15);
            prop_assert!(s.whisker_low >= s.q1 - 1.5 * (s.q3 - s.q1) - 1e-12);
        }
    }

    #[test]
    fn error_records() {
        let est = [[Some(0.2); 6], [Some(0.0), None, Some(0.5), Some(1.7), None, Some(0.3)]];
        let lab = [[0.2; 6], [1.0; 6]];
        let set = absolute_errors("eyring", &est, &lab, false).unwrap();
        assert_eq!(set.unavailable, 2);
        assert_eq!(set.records.len(), 12 - 2);
        assert!(set.records[..6].iter().all(|r| r.absolute_error == 0.0));
        assert_eq!(set.records[6].absolute_error, 1.0);
        // Estimates above 1 are clipped.
        assert_eq!(set.records[8].absolute_error, 0.0);
        let per_band: usize = (0..6).map(|b| set.band_values(b).len()).sum();
        assert_eq!(per_band, set.records.len());

        let pooled = absolute_errors("eyring", &est, &lab, true).unwrap();
        assert_eq!(pooled.records.len(), 2);
        assert!((pooled.records[1].absolute_error - (1.0 + 0.5 + 0.0 + 0.7) / 4.0).abs() < 1e-12);
        assert!(matches!(
            absolute_errors("x", &est[..1], &lab, false),
            Err(Error::Misaligned(_))
        ));
    }
}
