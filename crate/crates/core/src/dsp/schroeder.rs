use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Backward-integrated energy of one band.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayCurve {
    pub linear: Vec<f64>,
    /// `10 log10(linear / linear[0])`; `-inf` once the energy runs out.
    pub db: Vec<f64>,
    pub sample_rate: f64,
}

/// Decay curves for the six octave bands.
#[derive(Debug, Clone, PartialEq)]
pub struct SchroederCurve {
    pub bands: Vec<DecayCurve>,
}

impl SchroederCurve {
    /// `time_s` followed by the dB curve of each band, tab separated.
    pub fn write_table<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "time_s\tdb125\tdb250\tdb500\tdb1000\tdb2000\tdb4000")?;
        let n = self.bands.iter().map(|b| b.db.len()).min().unwrap_or(0);
        let fs = self.bands.first().map_or(1.0, |b| b.sample_rate);
        for i in 0..n {
            write!(out, "{:.6}", i as f64 / fs)?;
            for b in &self.bands {
                write!(out, "\t{:.3}", b.db[i].max(-200.0))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RtEstimate {
    /// Reverberation time in seconds (extrapolated to 60 dB of decay).
    pub rt: f64,
    pub start_db: f64,
    pub depth_db: f64,
    /// Coefficient of determination of the line fit.
    pub fit_quality: f64,
}

pub fn backward_integrate(signal: &[f64], sample_rate: f64) -> Result<DecayCurve> {
    let mut linear = vec![0.0; signal.len()];
    let mut acc = 0.0;
    for (e, x) in linear.iter_mut().zip(signal).rev() {
        acc += x * x;
        *e = acc;
    }
    if acc <= 0.0 || !acc.is_finite() {
        return Err(Error::UndefinedCurve);
    }
    let db = linear.iter().map(|e| 10.0 * (e / acc).log10()).collect();
    Ok(DecayCurve {
        linear,
        db,
        sample_rate,
    })
}

/// First sample at or below `level` dB.
pub fn crossing(curve: &DecayCurve, level: f64) -> Option<usize> {
    curve.db.iter().position(|&v| v <= level)
}

/// Least-squares line through `(n / fs, db[n])` for `n` in `lo..=hi`.
/// Returns `(slope in dB/s, R²)`.
pub fn line_fit(curve: &DecayCurve, lo: usize, hi: usize) -> (f64, f64) {
    let pts = &curve.db[lo..=hi];
    let n = pts.len() as f64;
    let t = |i: usize| (lo + i) as f64 / curve.sample_rate;
    let mean_t = (0..pts.len()).map(t).sum::<f64>() / n;
    let mean_y = pts.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (i, &y) in pts.iter().enumerate() {
        let dt = t(i) - mean_t;
        let dy = y - mean_y;
        sxy += dt * dy;
        sxx += dt * dt;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return (0.0, 0.0);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, r2)
}

/// RT from the slope of the decay between -5 dB and `-5 - depth_db`.
pub fn estimate_rt(curve: &DecayCurve, depth_db: f64) -> Result<RtEstimate> {
    let start_db = -5.0;
    let end_db = start_db - depth_db;
    let lo = crossing(curve, start_db).ok_or(Error::InsufficientDecay(start_db))?;
    let hi = crossing(curve, end_db).ok_or(Error::InsufficientDecay(end_db))?;
    if hi <= lo || curve.db[lo..=hi].iter().any(|v| !v.is_finite()) {
        return Err(Error::InsufficientDecay(end_db));
    }
    let (slope, fit_quality) = line_fit(curve, lo, hi);
    if slope >= 0.0 {
        return Err(Error::InsufficientDecay(end_db));
    }
    Ok(RtEstimate {
        rt: -60.0 / slope,
        start_db,
        depth_db,
        fit_quality,
    })
}
