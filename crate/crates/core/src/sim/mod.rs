//! Hybrid room impulse response engine: image sources for specular arrivals,
//! diffuse rain for scattered energy, and minimum-phase band synthesis.

mod air;
mod diffuse;
mod image_source;
mod render;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{RoomSpec, BAND_CENTERS, N_BANDS};

pub use air::{air_attenuation, AirConditions};
pub use diffuse::{trace_diffuse_rain, DiffuseTrace, EnergyLedger, RAY_BLOCK};
pub use image_source::enumerate_image_sources;
pub use render::{render_rir, BandKernels};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub sample_rate: f64,
    pub n_rays: usize,
    /// `None` keeps every image source inside the distance bound.
    pub max_image_order: Option<usize>,
    pub max_time: f64,
    /// `None` disables air absorption.
    pub air: Option<AirConditions>,
    pub receiver_radius: f64,
    pub speed_of_sound: f64,
    pub kernel_taps: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            sample_rate: 48_000.0,
            n_rays: 50_000,
            max_image_order: Some(50),
            max_time: 0.5,
            air: Some(AirConditions::default()),
            receiver_radius: 0.1,
            speed_of_sound: 343.0,
            kernel_taps: 512,
        }
    }
}

impl SimConfig {
    /// Full-fidelity profile: 50,000 rays, image order 50.
    pub fn paper() -> Self {
        SimConfig::default()
    }

    /// Desk-scale profile: 10,000 rays, images pruned by distance only.
    pub fn fast() -> Self {
        SimConfig {
            n_rays: 10_000,
            max_image_order: None,
            ..SimConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate > 0.0 && self.max_time > 0.0 && self.speed_of_sound > 0.0) {
            return Err(Error::InvalidInput(
                "sample_rate, max_time and speed_of_sound must be positive".into(),
            ));
        }
        if !(self.receiver_radius > 0.0) || self.kernel_taps == 0 {
            return Err(Error::InvalidInput(
                "receiver_radius and kernel_taps must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn max_distance(&self) -> f64 {
        self.speed_of_sound * self.max_time
    }

    pub(crate) fn air_coefficients(&self) -> [f64; N_BANDS] {
        match &self.air {
            Some(air) => BAND_CENTERS.map(|f| air.energy_coefficient(f)),
            None => [0.0; N_BANDS],
        }
    }

    pub fn n_samples(&self) -> usize {
        (self.max_time * self.sample_rate).round() as usize + 1
    }
}

/// One arrival at the receiver: time in seconds and energy per band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub time: f64,
    pub energy: [f64; N_BANDS],
}

/// Specular arrivals (sorted by time) and diffuse energy binned per sample.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Echogram {
    pub specular: Vec<Arrival>,
    pub diffuse: Vec<Arrival>,
    /// Seeds the random sign sequence given to diffuse bins.
    pub noise_seed: u64,
}

impl Echogram {
    /// Tabular dump: `stream time_s e125 ... e4000`.
    pub fn write_table<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "stream\ttime_s\te125\te250\te500\te1000\te2000\te4000")?;
        for (name, list) in [("specular", &self.specular), ("diffuse", &self.diffuse)] {
            for a in list {
                write!(out, "{name}\t{:.9}", a.time)?;
                for e in a.energy {
                    write!(out, "\t{e:.6e}")?;
                }
                writeln!(out)?;
            }
        }
        Ok(())
    }
}

/// Sampled pressure waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Rir {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
}

impl Rir {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("waveform contains non-finite samples".into()));
        }
        Ok(Rir {
            samples,
            sample_rate,
        })
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn scaled(&self, gain: f64) -> Rir {
        Rir {
            samples: self.samples.iter().map(|v| v * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }
}

/// Image-source and diffuse-rain arrivals for one room.
pub fn simulate_echogram(spec: &RoomSpec, config: &SimConfig, seed: u64) -> Result<Echogram> {
    spec.validate()?;
    config.validate()?;
    let specular = enumerate_image_sources(spec, config);
    let diffuse = if config.n_rays > 0 {
        trace_diffuse_rain(spec, config, seed).arrivals
    } else {
        Vec::new()
    };
    Ok(Echogram {
        specular,
        diffuse,
        noise_seed: seed ^ 0x5eed_d1ff_u64,
    })
}

/// Simulates the room impulse response; deterministic in `(spec, config, seed)`.
pub fn simulate(spec: &RoomSpec, config: &SimConfig, seed: u64) -> Result<Rir> {
    let echogram = simulate_echogram(spec, config, seed)?;
    Ok(render_rir(&echogram, config))
}
