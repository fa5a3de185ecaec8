//! Signal analysis and preprocessing.

pub mod butterworth;
mod resample;
mod schroeder;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::sim::Rir;
use crate::types::{band_edges, BAND_CENTERS, N_BANDS};
use butterworth::SosFilter;

pub use resample::{decimation_filter, resample_48_to_16, DECIMATION_TAPS};
pub use schroeder::{line_fit as schroeder_line_fit, backward_integrate, estimate_rt, DecayCurve, RtEstimate, SchroederCurve};

/// Length of a preprocessed network input: 500 ms at 16 kHz.
pub const INPUT_LEN: usize = 8000;
pub const INPUT_RATE: f64 = 16_000.0;
pub const DEFAULT_SNR_DB: f64 = 30.0;

/// Splits a waveform into the six octave bands with zero-phase third-order
/// Butterworth band-passes.
pub fn octave_filter_bank(rir: &Rir) -> Result<Vec<Vec<f64>>> {
    let (_, top) = band_edges(BAND_CENTERS[N_BANDS - 1]);
    if rir.sample_rate < 2.0 * top {
        return Err(Error::SampleRateTooLow {
            rate: rir.sample_rate,
            required: 2.0 * top,
        });
    }
    Ok(BAND_CENTERS
        .iter()
        .map(|&fc| {
            let (lo, hi) = band_edges(fc);
            SosFilter::bandpass(3, lo, hi, rir.sample_rate).filtfilt(&rir.samples)
        })
        .collect())
}

/// Schroeder curves of all six bands.
pub fn schroeder_curves(rir: &Rir) -> Result<SchroederCurve> {
    let bands = octave_filter_bank(rir)?;
    let bands = bands
        .iter()
        .map(|b| backward_integrate(b, rir.sample_rate))
        .collect::<Result<Vec<_>>>()?;
    Ok(SchroederCurve { bands })
}

fn mean_power(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
    }
}

/// Adds white Gaussian noise at `snr_db` relative to the mean power of the
/// whole signal. `f64::INFINITY` leaves the signal untouched.
pub fn add_noise_snr<R: Rng + ?Sized>(rir: &Rir, snr_db: f64, rng: &mut R) -> Result<Rir> {
    add_noise_snr_window(rir, snr_db, rir.samples.len(), rng)
}

/// As [`add_noise_snr`], with signal power measured over the first `window`
/// samples only. Noise is added over the whole signal.
pub fn add_noise_snr_window<R: Rng + ?Sized>(
    rir: &Rir,
    snr_db: f64,
    window: usize,
    rng: &mut R,
) -> Result<Rir> {
    let power = mean_power(&rir.samples[..window.min(rir.samples.len())]);
    if power <= 0.0 {
        return Err(Error::ZeroSignal);
    }
    if snr_db == f64::INFINITY {
        return Ok(rir.clone());
    }
    let sigma = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    let samples = rir
        .samples
        .iter()
        .map(|&v| v + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Ok(Rir {
        samples,
        sample_rate: rir.sample_rate,
    })
}

/// Network input: resample to 16 kHz, keep exactly 8,000 samples, add noise
/// at `snr_db`, and scale to a peak of 1.
pub fn preprocess<R: Rng + ?Sized>(rir: &Rir, snr_db: f64, rng: &mut R) -> Result<Vec<f64>> {
    let mut low = resample_48_to_16(rir)?;
    low.samples.resize(INPUT_LEN, 0.0);
    let noisy = add_noise_snr(&low, snr_db, rng)?;
    let peak = noisy.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak <= 0.0 {
        return Err(Error::ZeroSignal);
    }
    Ok(noisy.samples.iter().map(|v| v / peak).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sine(f: f64, fs: f64, n: usize) -> Rir {
        Rir {
            samples: (0..n).map(|i| (std::f64::consts::TAU * f * i as f64 / fs).sin()).collect(),
            sample_rate: fs,
        }
    }

    fn energy(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    #[test]
    fn sine_lands_in_its_band() {
        let bands = octave_filter_bank(&sine(1000.0, 48_000.0, 48_000)).unwrap();
        let e: Vec<f64> = bands.iter().map(|b| energy(b)).collect();
        let total: f64 = e.iter().sum();
        let max = e.iter().cloned().fold(0.0, f64::max);
        assert_eq!(e[3], max);
        assert!(e[0] < 0.01 * total && e[1] < 0.01 * total);
    }

    #[test]
    fn zero_input_zero_bands() {
        let rir = Rir {
            samples: vec![0.0; 1000],
            sample_rate: 48_000.0,
        };
        for b in octave_filter_bank(&rir).unwrap() {
            assert!(b.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn sample_rate_edge() {
        assert!(octave_filter_bank(&sine(100.0, 16_000.0, 100)).is_ok());
        assert!(matches!(
            octave_filter_bank(&sine(100.0, 10_000.0, 100)),
            Err(Error::SampleRateTooLow { .. })
        ));
    }

    #[test]
    fn noise_power_matches_definition() {
        let rir = sine(440.0, 16_000.0, 8000);
        let p = mean_power(&rir.samples);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let noisy = add_noise_snr(&rir, 30.0, &mut rng).unwrap();
        let noise: Vec<f64> = noisy.samples.iter().zip(&rir.samples).map(|(a, b)| a - b).collect();
        let ratio = mean_power(&noise) / (p / 1000.0);
        assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
        let clean = add_noise_snr(&rir, f64::INFINITY, &mut rng).unwrap();
        assert_eq!(clean, rir);
        let silent = Rir {
            samples: vec![0.0; 10],
            sample_rate: 16_000.0,
        };
        assert!(matches!(add_noise_snr(&silent, 30.0, &mut rng), Err(Error::ZeroSignal)));
    }

    #[test]
    fn empirical_snr_over_seeds() {
        let rir = sine(440.0, 16_000.0, 8000);
        let p = mean_power(&rir.samples);
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let noisy = add_noise_snr(&rir, 30.0, &mut rng).unwrap();
            let noise: Vec<f64> = noisy.samples.iter().zip(&rir.samples).map(|(a, b)| a - b).collect();
            let snr = 10.0 * (p / mean_power(&noise)).log10();
            assert!((snr - 30.0).abs() < 0.5, "seed {seed}: {snr}");
        }
    }

    #[test]
    fn preprocess_contract() {
        let mut samples = vec![0.0; 30_000];
        for (i, v) in samples.iter_mut().enumerate() {
            *v = (-(i as f64) / 4000.0).exp() * ((i * 7919) % 13) as f64 / 13.0;
        }
        let rir = Rir {
            samples,
            sample_rate: 48_000.0,
        };
        let a = preprocess(&rir, 30.0, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a.len(), INPUT_LEN);
        let peak = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((peak - 1.0).abs() < 1e-15);
        let b = preprocess(&rir.scaled(10.0), 30.0, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        let c = preprocess(&rir, 30.0, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, c);
    }
}
