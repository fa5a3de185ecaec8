//! Shared room vocabulary: octave bands, surfaces, geometry, and the
//! area-weighted mean absorption label.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const N_BANDS: usize = 6;

/// Octave band centre frequencies in Hz.
pub const BAND_CENTERS: [f64; N_BANDS] = [125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0];

/// Lower and upper edges of an octave band, `fc/sqrt(2)` and `fc*sqrt(2)`.
pub fn band_edges(center: f64) -> (f64, f64) {
    (center / std::f64::consts::SQRT_2, center * std::f64::consts::SQRT_2)
}

/// One value per octave band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BandProfile(pub [f64; N_BANDS]);

impl BandProfile {
    pub const fn flat(v: f64) -> Self {
        BandProfile([v; N_BANDS])
    }

    pub fn values(&self) -> &[f64; N_BANDS] {
        &self.0
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / N_BANDS as f64
    }

    pub fn is_flat(&self) -> bool {
        self.0.iter().all(|&v| v == self.0[0])
    }

    /// True when every value is a valid coefficient in `[0, 1]`.
    pub fn is_coefficient(&self) -> bool {
        self.0.iter().all(|v| (0.0..=1.0).contains(v))
    }
}

impl std::ops::Index<usize> for BandProfile {
    type Output = f64;
    fn index(&self, b: usize) -> &f64 {
        &self.0[b]
    }
}

/// The six faces of a shoebox, in serialization order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Face {
    Floor,
    Ceiling,
    West,
    South,
    East,
    North,
}

impl Face {
    pub const ALL: [Face; 6] = [
        Face::Floor,
        Face::Ceiling,
        Face::West,
        Face::South,
        Face::East,
        Face::North,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_wall(self) -> bool {
        matches!(self, Face::West | Face::South | Face::East | Face::North)
    }

    /// Axis the face is perpendicular to (0 = x, 1 = y, 2 = z).
    pub fn axis(self) -> usize {
        match self {
            Face::West | Face::East => 0,
            Face::South | Face::North => 1,
            Face::Floor | Face::Ceiling => 2,
        }
    }

    /// Whether the face sits at the upper end of its axis.
    pub fn is_upper(self) -> bool {
        matches!(self, Face::East | Face::North | Face::Ceiling)
    }

    pub fn from_axis(axis: usize, upper: bool) -> Face {
        match (axis, upper) {
            (0, false) => Face::West,
            (0, true) => Face::East,
            (1, false) => Face::South,
            (1, true) => Face::North,
            (2, false) => Face::Floor,
            (2, true) => Face::Ceiling,
            _ => unreachable!("axis out of range"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoomGeometry {
    pub lx: f64,
    pub ly: f64,
    pub lz: f64,
}

impl RoomGeometry {
    pub fn new(lx: f64, ly: f64, lz: f64) -> Result<Self> {
        let g = RoomGeometry { lx, ly, lz };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if [self.lx, self.ly, self.lz]
            .iter()
            .all(|d| d.is_finite() && *d > 0.0)
        {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "room dimensions must be positive, got {:?}",
                self.dims()
            )))
        }
    }

    pub fn dims(&self) -> [f64; 3] {
        [self.lx, self.ly, self.lz]
    }

    pub fn volume(&self) -> f64 {
        self.lx * self.ly * self.lz
    }

    pub fn surface(&self) -> f64 {
        2.0 * (self.lx * self.ly + self.lx * self.lz + self.ly * self.lz)
    }

    pub fn face_area(&self, face: Face) -> f64 {
        match face.axis() {
            0 => self.ly * self.lz,
            1 => self.lx * self.lz,
            _ => self.lx * self.ly,
        }
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        p.iter()
            .zip(self.dims())
            .all(|(&c, d)| c > 0.0 && c < d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub absorption: BandProfile,
    pub scattering: BandProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomSpec {
    pub geometry: RoomGeometry,
    /// Indexed by [`Face::index`]: floor, ceiling, west, south, east, north.
    pub surfaces: [Surface; 6],
    pub source: [f64; 3],
    pub receiver: [f64; 3],
}

impl RoomSpec {
    pub fn new(
        geometry: RoomGeometry,
        surfaces: [Surface; 6],
        source: [f64; 3],
        receiver: [f64; 3],
    ) -> Result<Self> {
        let spec = RoomSpec {
            geometry,
            surfaces,
            source,
            receiver,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// A room with the same absorption and scattering on every surface.
    pub fn uniform(
        geometry: RoomGeometry,
        absorption: BandProfile,
        scattering: BandProfile,
        source: [f64; 3],
        receiver: [f64; 3],
    ) -> Result<Self> {
        let s = Surface {
            absorption,
            scattering,
        };
        RoomSpec::new(geometry, [s; 6], source, receiver)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if !self.geometry.contains(self.source) || !self.geometry.contains(self.receiver) {
            return Err(Error::InvalidInput(
                "source and receiver must lie strictly inside the room".into(),
            ));
        }
        if self.source == self.receiver {
            return Err(Error::InvalidInput("source and receiver coincide".into()));
        }
        for (face, s) in Face::ALL.iter().zip(&self.surfaces) {
            if !s.absorption.is_coefficient() || !s.scattering.is_coefficient() {
                return Err(Error::InvalidInput(format!(
                    "{face:?}: coefficients must lie in [0, 1]"
                )));
            }
        }
        Ok(())
    }

    pub fn surface(&self, face: Face) -> &Surface {
        &self.surfaces[face.index()]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("room spec serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: RoomSpec =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("room spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Mean scattering over surfaces (area weighted) per band.
    pub fn mean_scattering(&self) -> BandProfile {
        self.area_weighted(|s| &s.scattering)
    }

    fn area_weighted(&self, pick: impl Fn(&Surface) -> &BandProfile) -> BandProfile {
        let total = self.geometry.surface();
        let mut out = [0.0; N_BANDS];
        for face in Face::ALL {
            let area = self.geometry.face_area(face);
            let profile = pick(self.surface(face));
            for (o, v) in out.iter_mut().zip(profile.values()) {
                *o += v * area;
            }
        }
        BandProfile(out.map(|v| (v / total).clamp(0.0, 1.0)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionLabel {
    pub alpha_bar: BandProfile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_bar: Option<BandProfile>,
}

/// Face-area-weighted mean absorption per band.
pub fn mean_absorption(spec: &RoomSpec) -> AbsorptionLabel {
    AbsorptionLabel {
        alpha_bar: spec.area_weighted(|s| &s.absorption),
        s_bar: None,
    }
}

/// Mean absorption together with the mean scattering profile.
pub fn full_label(spec: &RoomSpec) -> AbsorptionLabel {
    AbsorptionLabel {
        s_bar: Some(spec.mean_scattering()),
        ..mean_absorption(spec)
    }
}
