use crate::error::{Error, Result};
use crate::sim::Rir;

/// Kaiser-window low-pass taps; the group delay (120 samples) is a multiple
/// of the decimation factor, so it is removed exactly.
pub const DECIMATION_TAPS: usize = 241;
const FACTOR: usize = 3;
const CUTOFF_HZ: f64 = 7200.0;
const STOPBAND_DB: f64 = 80.0;

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Linear-phase anti-alias filter for 48 → 16 kHz, normalized to unit DC gain.
pub fn decimation_filter() -> Vec<f64> {
    let fs = 48_000.0;
    let beta = 0.1102 * (STOPBAND_DB - 8.7);
    let m = (DECIMATION_TAPS - 1) as f64;
    let wc = CUTOFF_HZ / fs;
    let mut h: Vec<f64> = (0..DECIMATION_TAPS)
        .map(|n| {
            let k = n as f64 - m / 2.0;
            let sinc = if k == 0.0 {
                2.0 * wc
            } else {
                (std::f64::consts::TAU * wc * k).sin() / (std::f64::consts::PI * k)
            };
            let r = 2.0 * n as f64 / m - 1.0;
            sinc * bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / bessel_i0(beta)
        })
        .collect();
    let sum: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= sum);
    h
}

/// Factor-3 decimation with delay compensation. Edges are extended by
/// holding the first and last samples.
pub fn resample_48_to_16(rir: &Rir) -> Result<Rir> {
    if rir.sample_rate != 48_000.0 {
        return Err(Error::WrongSampleRate {
            expected: 48_000.0,
            actual: rir.sample_rate,
        });
    }
    let h = decimation_filter();
    let x = &rir.samples;
    let n = x.len();
    if n == 0 {
        return Ok(Rir {
            samples: Vec::new(),
            sample_rate: 16_000.0,
        });
    }
    let delay = (DECIMATION_TAPS - 1) / 2;
    let at = |i: isize| -> f64 { x[i.clamp(0, n as isize - 1) as usize] };
    let out = (0..n.div_ceil(FACTOR))
        .map(|k| {
            let centre = (k * FACTOR) as isize;
            h.iter()
                .enumerate()
                .map(|(j, &c)| c * at(centre + delay as isize - j as isize))
                .sum()
        })
        .collect();
    Ok(Rir {
        samples: out,
        sample_rate: 16_000.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(f: f64, n: usize) -> Rir {
        Rir {
            samples: (0..n).map(|i| (std::f64::consts::TAU * f * i as f64 / 48_000.0).sin()).collect(),
            sample_rate: 48_000.0,
        }
    }

    fn interior_peak(r: &Rir) -> f64 {
        let s = &r.samples;
        s[200..s.len() - 200].iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    #[test]
    fn dc_and_length() {
        let r = resample_48_to_16(&Rir {
            samples: vec![0.7; 48_000],
            sample_rate: 48_000.0,
        })
        .unwrap();
        assert_eq!(r.samples.len(), 16_000);
        assert!(r.samples.iter().all(|v| (v - 0.7).abs() < 1e-6));
    }

    #[test]
    fn passband_and_stopband() {
        let pass = resample_48_to_16(&sine(1000.0, 48_000)).unwrap();
        assert!((interior_peak(&pass) - 1.0).abs() < 0.01);
        let stop = resample_48_to_16(&sine(7900.0, 48_000)).unwrap();
        assert!(20.0 * interior_peak(&stop).log10() <= -60.0);
    }

    #[test]
    fn timing_preserved() {
        let mut samples = vec![0.0; 4800];
        samples[3000] = 1.0;
        let r = resample_48_to_16(&Rir {
            samples,
            sample_rate: 48_000.0,
        })
        .unwrap();
        let peak = r
            .samples
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(peak, 1000);
    }

    #[test]
    fn wrong_rate() {
        let r = Rir {
            samples: vec![0.0; 10],
            sample_rate: 16_000.0,
        };
        assert!(matches!(resample_48_to_16(&r), Err(Error::WrongSampleRate { .. })));
    }
}
