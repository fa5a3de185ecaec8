//! Digital Butterworth band-pass design (bilinear transform with prewarping)
//! and second-order-section filtering.

use rustfft::num_complex::Complex64;

/// One biquad, `a[0]` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
}

impl SosFilter {
    /// Band-pass between `f_lo` and `f_hi` Hz; `order` is the prototype order,
    /// so the band-pass has `2 * order` poles.
    pub fn bandpass(order: usize, f_lo: f64, f_hi: f64, fs: f64) -> SosFilter {
        assert!(order >= 1 && 0.0 < f_lo && f_lo < f_hi && f_hi < fs / 2.0);
        let warp = |f: f64| 2.0 * fs * (std::f64::consts::PI * f / fs).tan();
        let (wl, wh) = (warp(f_lo), warp(f_hi));
        let w0 = (wl * wh).sqrt();
        let bw = wh - wl;

        let mut analog_poles = Vec::with_capacity(2 * order);
        for k in 0..order {
            let theta = std::f64::consts::PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            let p = Complex64::from_polar(1.0, theta);
            let pb = p * bw;
            let disc = (pb * pb - 4.0 * w0 * w0).sqrt();
            analog_poles.push((pb + disc) / 2.0);
            analog_poles.push((pb - disc) / 2.0);
        }
        let two_fs = Complex64::new(2.0 * fs, 0.0);
        let digital: Vec<Complex64> = analog_poles
            .iter()
            .map(|&s| (two_fs + s) / (two_fs - s))
            .collect();

        // Upper-half-plane poles define conjugate pairs; real poles pair up.
        let mut complex: Vec<Complex64> = digital.iter().copied().filter(|p| p.im > 1e-12).collect();
        let mut real: Vec<f64> = digital
            .iter()
            .filter(|p| p.im.abs() <= 1e-12)
            .map(|p| p.re)
            .collect();
        complex.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        real.sort_by(|a, b| a.total_cmp(b));

        let mut sections = Vec::with_capacity(order);
        for p in complex {
            sections.push(Biquad {
                b: [1.0, 0.0, -1.0],
                a: [1.0, -2.0 * p.re, p.norm_sqr()],
            });
        }
        for pair in real.chunks(2) {
            let (p1, p2) = (pair[0], *pair.get(1).unwrap_or(&0.0));
            sections.push(Biquad {
                b: [1.0, 0.0, -1.0],
                a: [1.0, -(p1 + p2), p1 * p2],
            });
        }
        let mut filter = SosFilter { sections };
        // Unit gain at the (warped) geometric centre.
        let fc = (w0 / (2.0 * fs)).atan() * fs / std::f64::consts::PI;
        let g = filter.response(fc, fs).norm();
        for c in filter.sections[0].b.iter_mut() {
            *c /= g;
        }
        filter
    }

    pub fn response(&self, f: f64, fs: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f / fs);
        let z2 = z1 * z1;
        self.sections.iter().fold(Complex64::new(1.0, 0.0), |acc, s| {
            let num = s.b[0] + z1 * s.b[1] + z2 * s.b[2];
            let den = s.a[0] + z1 * s.a[1] + z2 * s.a[2];
            acc * num / den
        })
    }

    /// Samples for the slowest pole to decay by `1e-12` in amplitude.
    pub fn settle_len(&self) -> usize {
        let r = self
            .sections
            .iter()
            .map(|s| s.a[2].abs().sqrt())
            .fold(0.0f64, f64::max);
        if r <= 0.0 || r >= 1.0 {
            return 0;
        }
        ((1e-12f64).ln() / r.ln()).ceil() as usize
    }

    /// Causal filtering, transposed direct form II per section.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for s in &self.sections {
            let (mut z1, mut z2) = (0.0, 0.0);
            for v in y.iter_mut() {
                let input = *v;
                let out = s.b[0] * input + z1;
                z1 = s.b[1] * input - s.a[1] * out + z2;
                z2 = s.b[2] * input - s.a[2] * out;
                *v = out;
            }
        }
        y
    }

    /// Zero-phase forward-backward filtering. The signal is zero-padded on
    /// both sides long enough for the transients to die out, then trimmed.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let pad = self.settle_len();
        let mut buf = vec![0.0; x.len() + 2 * pad];
        buf[pad..pad + x.len()].copy_from_slice(x);
        let mut y = self.filter(&buf);
        y.reverse();
        let mut y = self.filter(&y);
        y.reverse();
        y[pad..pad + x.len()].to_vec()
    }
}
