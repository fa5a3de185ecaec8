//! Reverberation-theory estimators of mean absorption and the reference
//! aggregation used for measured corpora.

use serde::{Deserialize, Serialize};

use crate::dsp::{self, DecayCurve, RtEstimate};
use crate::error::{Error, Result};
use crate::sim::Rir;
use crate::types::{RoomGeometry, N_BANDS};

pub const SABINE_CONSTANT: f64 = 0.163;
/// Minimum R² of the [-5, -15] dB fit for a curve to be screened in.
pub const SCREENING_R2: f64 = 0.985;

pub fn sabine(volume: f64, surface: f64, rt: f64) -> Result<f64> {
    if !(volume > 0.0 && surface > 0.0 && rt > 0.0) {
        return Err(Error::InvalidInput(format!(
            "Sabine needs positive V, S, RT (got {volume}, {surface}, {rt})"
        )));
    }
    Ok(SABINE_CONSTANT * volume / (surface * rt))
}

pub fn eyring(alpha_sabine: f64) -> Result<f64> {
    if alpha_sabine >= 1.0 || alpha_sabine.is_nan() {
        return Err(Error::EyringDomain(alpha_sabine));
    }
    Ok(-(1.0 - alpha_sabine).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sabine,
    Eyring,
}

/// Why a band has no estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Unavailable {
    SilentBand,
    InsufficientDecay,
    EyringDomain(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandAlpha {
    pub alpha: f64,
    pub rt: RtEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalEstimate {
    pub method: Method,
    pub bands: [std::result::Result<BandAlpha, Unavailable>; N_BANDS],
    pub volume: f64,
    pub surface: f64,
}

impl ClassicalEstimate {
    pub fn alpha(&self, band: usize) -> Option<f64> {
        self.bands[band].as_ref().ok().map(|b| b.alpha)
    }
}

fn band_alpha(
    curve: Option<&DecayCurve>,
    geometry: &RoomGeometry,
    depth_db: f64,
    method: Method,
) -> std::result::Result<BandAlpha, Unavailable> {
    let curve = curve.ok_or(Unavailable::SilentBand)?;
    let rt = dsp::estimate_rt(curve, depth_db).map_err(|_| Unavailable::InsufficientDecay)?;
    let s = sabine(geometry.volume(), geometry.surface(), rt.rt)
        .map_err(|_| Unavailable::InsufficientDecay)?;
    let alpha = match method {
        Method::Sabine => s,
        Method::Eyring => eyring(s).map_err(|_| Unavailable::EyringDomain(s))?,
    };
    Ok(BandAlpha { alpha, rt })
}

/// Per-band decay curves of a waveform; silent bands are `None`.
pub fn band_curves(rir: &Rir) -> Result<Vec<Option<DecayCurve>>> {
    Ok(dsp::octave_filter_bank(rir)?
        .iter()
        .map(|b| dsp::backward_integrate(b, rir.sample_rate).ok())
        .collect())
}

/// Octave filtering, Schroeder integration, RT fit over `[-5, -5 - depth_db]`,
/// then Sabine (and Eyring on top when requested). Bands that cannot be
/// estimated are reported, never filled in.
pub fn estimate_alpha_classical(
    rir: &Rir,
    geometry: &RoomGeometry,
    depth_db: f64,
    method: Method,
) -> Result<ClassicalEstimate> {
    let curves = band_curves(rir)?;
    Ok(estimate_from_curves(&curves, geometry, depth_db, method))
}

pub fn estimate_from_curves(
    curves: &[Option<DecayCurve>],
    geometry: &RoomGeometry,
    depth_db: f64,
    method: Method,
) -> ClassicalEstimate {
    let bands = std::array::from_fn(|b| band_alpha(curves[b].as_ref(), geometry, depth_db, method));
    ClassicalEstimate {
        method,
        bands,
        volume: geometry.volume(),
        surface: geometry.surface(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Screening {
    A,
    B,
}

/// A when the curve decays linearly at least from -5 to -15 dB.
pub fn classify_schroeder(curve: &DecayCurve) -> Screening {
    match dsp::estimate_rt(curve, 10.0) {
        Ok(rt) if rt.fit_quality >= SCREENING_R2 => Screening::A,
        _ => Screening::B,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub alpha: f64,
    /// Number of A-screened estimates the median was taken over.
    pub count: usize,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Per band, the median Eyring estimate over measurements screened as A.
pub fn aggregate_reference(
    estimates: &[ClassicalEstimate],
    screening: &[[Screening; N_BANDS]],
) -> Result<[Result<Reference>; N_BANDS]> {
    if estimates.len() != screening.len() {
        return Err(Error::Misaligned(format!(
            "{} estimates, {} screening rows",
            estimates.len(),
            screening.len()
        )));
    }
    Ok(std::array::from_fn(|b| {
        let mut values: Vec<f64> = estimates
            .iter()
            .zip(screening)
            .filter(|(_, s)| s[b] == Screening::A)
            .filter_map(|(e, _)| e.alpha(b))
            .collect();
        if values.is_empty() {
            return Err(Error::EmptyScreening);
        }
        Ok(Reference {
            count: values.len(),
            alpha: median(&mut values),
        })
    }))
}
