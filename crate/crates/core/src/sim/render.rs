//! Echogram to waveform: per-band amplitude sequences convolved with
//! minimum-phase octave kernels.

use rustfft::{num_complex::Complex64, FftPlanner};

use super::{Echogram, Rir, SimConfig};
use crate::dsp::butterworth::SosFilter;
use crate::types::{band_edges, BAND_CENTERS, N_BANDS};

const DESIGN_FFT: usize = 4096;
/// Magnitude floor before taking logarithms (-100 dB).
const MAG_FLOOR: f64 = 1e-5;

/// Minimum-phase band-pass kernels, one per octave band.
#[derive(Debug, Clone, PartialEq)]
pub struct BandKernels {
    pub sample_rate: f64,
    pub taps: Vec<Vec<f64>>,
}

impl BandKernels {
    /// Third-order Butterworth band-pass magnitudes on a 4096-point grid,
    /// made minimum phase by folding the real cepstrum, then truncated to
    /// `n_taps` with a half-Hann fade over the last quarter.
    pub fn new(sample_rate: f64, n_taps: usize) -> Self {
        let n = DESIGN_FFT.max(n_taps.next_power_of_two());
        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let taps = BAND_CENTERS
            .iter()
            .map(|&fc| {
                let (lo, hi) = band_edges(fc);
                let filter = SosFilter::bandpass(3, lo, hi, sample_rate);
                let mut buf: Vec<Complex64> = (0..n)
                    .map(|k| {
                        let bin = k.min(n - k);
                        let f = bin as f64 * sample_rate / n as f64;
                        let mag = filter.response(f, sample_rate).norm().max(MAG_FLOOR);
                        Complex64::new(mag.ln(), 0.0)
                    })
                    .collect();
                ifft.process(&mut buf);
                // Real cepstrum, folded onto positive quefrencies.
                for (k, v) in buf.iter_mut().enumerate() {
                    let w = if k == 0 || k == n / 2 {
                        1.0
                    } else if k < n / 2 {
                        2.0
                    } else {
                        0.0
                    };
                    *v = Complex64::new(v.re / n as f64 * w, 0.0);
                }
                fft.process(&mut buf);
                for v in buf.iter_mut() {
                    *v = v.exp();
                }
                ifft.process(&mut buf);
                let mut h: Vec<f64> = buf[..n_taps].iter().map(|v| v.re / n as f64).collect();
                let fade = n_taps / 4;
                for i in 0..fade {
                    let x = (i as f64 + 0.5) / fade as f64;
                    h[n_taps - fade + i] *= 0.5 * (1.0 + (std::f64::consts::PI * x).cos());
                }
                h
            })
            .collect();
        BandKernels { sample_rate, taps }
    }

    pub fn len(&self) -> usize {
        self.taps[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps[0].is_empty()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Renders the echogram to a waveform of `n_samples + taps - 1` samples.
///
/// Specular arrivals add `sqrt(energy)` coherently at their nearest sample.
/// Diffuse bins are incoherent, so each contributes `sqrt(energy)` with a
/// pseudo-random sign shared across bands.
pub fn render_rir(echogram: &Echogram, config: &SimConfig) -> Rir {
    let kernels = BandKernels::new(config.sample_rate, config.kernel_taps);
    render_with(echogram, config, &kernels)
}

pub(crate) fn render_with(echogram: &Echogram, config: &SimConfig, kernels: &BandKernels) -> Rir {
    let len = config.n_samples();
    let fs = config.sample_rate;
    let mut bands = vec![vec![0.0; len]; N_BANDS];
    let index = |t: f64| ((t * fs).round() as usize).min(len - 1);
    for a in &echogram.specular {
        let n = index(a.time);
        for (b, band) in bands.iter_mut().enumerate() {
            band[n] += a.energy[b].sqrt();
        }
    }
    for a in &echogram.diffuse {
        let n = index(a.time);
        let sign = if splitmix64(echogram.noise_seed.wrapping_add(n as u64)) & 1 == 0 {
            1.0
        } else {
            -1.0
        };
        for (b, band) in bands.iter_mut().enumerate() {
            band[n] += sign * a.energy[b].sqrt();
        }
    }
    Rir {
        samples: overlap_add(&bands, &kernels.taps),
        sample_rate: fs,
    }
}

/// `Σ_b bands[b] * kernels[b]` by FFT overlap-add. Blocks that are zero in
/// every band are skipped, so output before the first nonzero input is exact.
fn overlap_add(bands: &[Vec<f64>], kernels: &[Vec<f64>]) -> Vec<f64> {
    let len = bands[0].len();
    let taps = kernels[0].len();
    let n_fft = (4 * taps).next_power_of_two().max(4096);
    let block = n_fft - taps + 1;
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n_fft);
    let ifft = planner.plan_fft_inverse(n_fft);
    let spectra: Vec<Vec<Complex64>> = kernels
        .iter()
        .map(|k| {
            let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
            for (d, &v) in buf.iter_mut().zip(k) {
                d.re = v;
            }
            fft.process(&mut buf);
            buf
        })
        .collect();

    let mut out = vec![0.0; len + taps - 1];
    let mut acc = vec![Complex64::new(0.0, 0.0); n_fft];
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    let mut start = 0;
    while start < len {
        let end = (start + block).min(len);
        if bands.iter().all(|b| b[start..end].iter().all(|&v| v == 0.0)) {
            start = end;
            continue;
        }
        acc.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for (band, spectrum) in bands.iter().zip(&spectra) {
            let seg = &band[start..end];
            if seg.iter().all(|&v| v == 0.0) {
                continue;
            }
            buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            for (d, &v) in buf.iter_mut().zip(seg) {
                d.re = v;
            }
            fft.process(&mut buf);
            for ((a, x), k) in acc.iter_mut().zip(&buf).zip(spectrum) {
                *a += x * k;
            }
        }
        ifft.process(&mut acc);
        let span = (end - start + taps - 1).min(out.len() - start);
        for (o, v) in out[start..start + span].iter_mut().zip(&acc) {
            *o += v.re / n_fft as f64;
        }
        start = end;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Arrival;

    fn config() -> SimConfig {
        SimConfig {
            max_time: 0.05,
            ..SimConfig::default()
        }
    }

    fn single(band: usize, time: f64, energy: f64) -> Echogram {
        let mut e = [0.0; N_BANDS];
        e[band] = energy;
        Echogram {
            specular: vec![Arrival { time, energy: e }],
            ..Echogram::default()
        }
    }

    #[test]
    fn empty_is_silent() {
        let rir = render_rir(&Echogram::default(), &config());
        assert!(rir.samples.iter().all(|&v| v == 0.0));
        assert_eq!(rir.samples.len(), config().n_samples() + 511);
    }

    #[test]
    fn unit_impulse_reproduces_kernel() {
        let kernels = BandKernels::new(48_000.0, 512);
        let rir = render_rir(&single(3, 0.0, 1.0), &config());
        for (i, &k) in kernels.taps[3].iter().enumerate() {
            assert!((rir.samples[i] - k).abs() < 1e-12);
        }
        assert!(rir.samples[512..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn coincident_arrivals_add_linearly() {
        let one = render_rir(&single(2, 0.01, 0.5), &config());
        let mut two = single(2, 0.01, 0.5);
        two.specular.push(two.specular[0]);
        let two = render_rir(&two, &config());
        for (a, b) in one.samples.iter().zip(&two.samples) {
            assert!((2.0 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn kernels_are_band_limited_and_causal() {
        let kernels = BandKernels::new(48_000.0, 512);
        // A bilinear Butterworth band-pass has its poles inside and its zeros
        // on the unit circle, so its own impulse response is the
        // minimum-phase reference for the kernel.
        for (h, &fc) in kernels.taps.iter().zip(&BAND_CENTERS) {
            let (lo, hi) = band_edges(fc);
            let mut imp = vec![0.0; 384];
            imp[0] = 1.0;
            let y = SosFilter::bandpass(3, lo, hi, 48_000.0).filter(&imp);
            let err: f64 = h.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum();
            let e: f64 = y.iter().map(|v| v * v).sum();
            assert!(err < 5e-3 * e, "{fc} Hz: {}", err / e);
        }
        // 1 kHz kernel passes 1 kHz far more than 125 Hz or 4 kHz.
        let h = &kernels.taps[3];
        let gain = |f: f64| {
            let w = std::f64::consts::TAU * f / 48_000.0;
            let (re, im) = h.iter().enumerate().fold((0.0, 0.0), |(re, im), (n, &v)| {
                (re + v * (w * n as f64).cos(), im - v * (w * n as f64).sin())
            });
            (re * re + im * im).sqrt()
        };
        assert!((gain(1000.0) - 1.0).abs() < 0.1);
        assert!(gain(4000.0) < 0.05 && gain(125.0) < 0.05);
    }
}
