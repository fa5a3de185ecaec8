//! Random room generation: geometry, placements, and surface acoustics under
//! the uniform (`Unif`) and reflectivity-biased (`RB`) strategies, plus the
//! crafted evaluation families.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dsp;
use crate::error::{Error, Result};
use crate::sim::{self, SimConfig};
use crate::types::{mean_absorption, BandProfile, Face, RoomGeometry, RoomSpec, Surface, N_BANDS};

const DEFAULT_ENVELOPES: &str = include_str!("../data/envelopes.toml");
const DEFAULT_MATERIALS: &str = include_str!("../data/materials.toml");

pub const HEIGHT_RANGE: (f64, f64) = (2.5, 4.0);
pub const WIDTH_RANGE: (f64, f64) = (1.5, 10.0);
pub const WALL_MARGIN: f64 = 0.5;
pub const MIN_SEPARATION: f64 = 1.0;
pub const DEFAULT_MAX_ATTEMPTS: usize = 10_000;

/// The five fixed geometries of the realistic test set.
pub const REALISTIC_GEOMETRIES: [[f64; 3]; 5] = [
    [4.0, 5.0, 3.0],
    [10.0, 2.0, 3.0],
    [10.0, 5.0, 3.0],
    [5.0, 8.0, 2.5],
    [10.0, 10.0, 5.0],
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub lower: [f64; N_BANDS],
    pub upper: [f64; N_BANDS],
}

impl Envelope {
    fn validate(&self, name: &str) -> Result<()> {
        for (lo, hi) in self.lower.iter().zip(&self.upper) {
            if !(0.0 <= *lo && lo <= hi && *hi <= 1.0) {
                return Err(Error::InvalidInput(format!(
                    "{name} envelope needs 0 <= lower <= upper <= 1"
                )));
            }
        }
        Ok(())
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> BandProfile {
        let mut out = [0.0; N_BANDS];
        for (b, o) in out.iter_mut().enumerate() {
            *o = uniform(rng, self.lower[b], self.upper[b]);
        }
        BandProfile(out)
    }
}

/// Absorption ranges used by reflectivity-biased sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialRanges {
    pub reflective: (f64, f64),
    pub wall: Envelope,
    pub floor: Envelope,
    pub ceiling: Envelope,
}

impl Default for MaterialRanges {
    fn default() -> Self {
        MaterialRanges::from_toml(DEFAULT_ENVELOPES).expect("bundled envelopes parse")
    }
}

impl MaterialRanges {
    pub fn from_toml(text: &str) -> Result<Self> {
        let ranges: MaterialRanges =
            toml::from_str(text).map_err(|e| Error::Format(format!("envelopes: {e}")))?;
        ranges.validate()?;
        Ok(ranges)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.reflective;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(Error::InvalidInput("reflective range".into()));
        }
        self.wall.validate("wall")?;
        self.floor.validate("floor")?;
        self.ceiling.validate("ceiling")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Unif,
    Rb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingStrategy {
    pub kind: StrategyKind,
    pub material_ranges: MaterialRanges,
    /// Per-band `(low, high)` bounds for the shared scattering profile.
    pub scattering: [(f64, f64); N_BANDS],
}

impl SamplingStrategy {
    pub fn unif() -> Self {
        SamplingStrategy {
            kind: StrategyKind::Unif,
            material_ranges: MaterialRanges::default(),
            scattering: [(0.0, 1.0); N_BANDS],
        }
    }

    pub fn rb() -> Self {
        SamplingStrategy {
            kind: StrategyKind::Rb,
            material_ranges: MaterialRanges::default(),
            scattering: [
                (0.0, 0.3),
                (0.0, 0.3),
                (0.0, 0.3),
                (0.2, 1.0),
                (0.2, 1.0),
                (0.2, 1.0),
            ],
        }
    }

    pub fn of_kind(kind: StrategyKind) -> Self {
        match kind {
            StrategyKind::Unif => Self::unif(),
            StrategyKind::Rb => Self::rb(),
        }
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

pub fn sample_geometry<R: Rng + ?Sized>(rng: &mut R) -> RoomGeometry {
    let lx = uniform(rng, WIDTH_RANGE.0, WIDTH_RANGE.1);
    let ly = uniform(rng, WIDTH_RANGE.0, WIDTH_RANGE.1);
    let lz = uniform(rng, HEIGHT_RANGE.0, HEIGHT_RANGE.1);
    RoomGeometry { lx, ly, lz }
}

/// Source and receiver drawn uniformly at least `WALL_MARGIN` from every face
/// and `MIN_SEPARATION` apart, by rejection.
pub fn sample_positions<R: Rng + ?Sized>(
    rng: &mut R,
    geometry: &RoomGeometry,
    max_attempts: usize,
) -> Result<([f64; 3], [f64; 3])> {
    let inner = geometry.dims().map(|d| d - 2.0 * WALL_MARGIN);
    if inner.iter().any(|&d| d <= 0.0) {
        return Err(Error::InfeasibleGeometry(format!(
            "{:?} leaves no interior {WALL_MARGIN} m from the walls",
            geometry.dims()
        )));
    }
    if inner.iter().map(|d| d * d).sum::<f64>().sqrt() < MIN_SEPARATION {
        return Err(Error::InfeasibleGeometry(format!(
            "{:?} cannot separate source and receiver by {MIN_SEPARATION} m",
            geometry.dims()
        )));
    }
    let draw = |rng: &mut R| -> [f64; 3] {
        let d = geometry.dims();
        [0, 1, 2].map(|i| WALL_MARGIN + rng.gen::<f64>() * (d[i] - 2.0 * WALL_MARGIN))
    };
    for _ in 0..max_attempts {
        let src = draw(rng);
        let rcv = draw(rng);
        if distance(src, rcv) >= MIN_SEPARATION {
            return Ok((src, rcv));
        }
    }
    Err(Error::IterationCap(max_attempts))
}

pub(crate) fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    a.iter()
        .zip(&b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Draws absorption and scattering for the six surfaces.
pub fn sample_acoustics<R: Rng + ?Sized>(rng: &mut R, strategy: &SamplingStrategy) -> [Surface; 6] {
    let mut absorption = [BandProfile::flat(0.0); 6];
    match strategy.kind {
        StrategyKind::Unif => {
            for a in absorption.iter_mut() {
                *a = BandProfile([0; N_BANDS].map(|_| rng.gen::<f64>()));
            }
        }
        StrategyKind::Rb => {
            let ranges = &strategy.material_ranges;
            let (rlo, rhi) = ranges.reflective;
            let walls_reflective = rng.gen_bool(0.5);
            let floor_reflective = rng.gen_bool(0.5);
            let ceiling_reflective = rng.gen_bool(0.5);
            for face in Face::ALL {
                let (reflective, envelope) = match face {
                    Face::Floor => (floor_reflective, &ranges.floor),
                    Face::Ceiling => (ceiling_reflective, &ranges.ceiling),
                    _ => (walls_reflective, &ranges.wall),
                };
                absorption[face.index()] = if reflective {
                    BandProfile::flat(uniform(rng, rlo, rhi))
                } else {
                    envelope.draw(rng)
                };
            }
        }
    }
    let mut scattering = [0.0; N_BANDS];
    for (b, s) in scattering.iter_mut().enumerate() {
        let (lo, hi) = strategy.scattering[b];
        *s = uniform(rng, lo, hi);
    }
    let scattering = BandProfile(scattering);
    absorption.map(|absorption| Surface {
        absorption,
        scattering,
    })
}

/// One complete random room under `strategy`.
pub fn sample_room<R: Rng + ?Sized>(rng: &mut R, strategy: &SamplingStrategy) -> Result<RoomSpec> {
    let geometry = sample_geometry(rng);
    room_in(rng, geometry, strategy)
}

fn room_in<R: Rng + ?Sized>(
    rng: &mut R,
    geometry: RoomGeometry,
    strategy: &SamplingStrategy,
) -> Result<RoomSpec> {
    let (source, receiver) = sample_positions(rng, &geometry, DEFAULT_MAX_ATTEMPTS)?;
    let surfaces = sample_acoustics(rng, strategy);
    RoomSpec::new(geometry, surfaces, source, receiver)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceClass {
    Reflective,
    Wall,
    Floor,
    Ceiling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    pub class: SurfaceClass,
    pub absorption: [f64; N_BANDS],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialTable {
    #[serde(rename = "material")]
    pub materials: Vec<Material>,
}

impl Default for MaterialTable {
    fn default() -> Self {
        MaterialTable::from_toml(DEFAULT_MATERIALS).expect("bundled materials parse")
    }
}

impl MaterialTable {
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: MaterialTable =
            toml::from_str(text).map_err(|e| Error::Format(format!("materials: {e}")))?;
        for m in &table.materials {
            if !BandProfile(m.absorption).is_coefficient() {
                return Err(Error::InvalidInput(format!("material {}", m.name)));
            }
        }
        for face in Face::ALL {
            if table.candidates(face).is_empty() {
                return Err(Error::InvalidInput(format!("no material usable on {face:?}")));
            }
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Materials allowed on `face`: its own class plus reflective finishes.
    pub fn candidates(&self, face: Face) -> Vec<&Material> {
        let class = match face {
            Face::Floor => SurfaceClass::Floor,
            Face::Ceiling => SurfaceClass::Ceiling,
            _ => SurfaceClass::Wall,
        };
        self.materials
            .iter()
            .filter(|m| m.class == class || m.class == SurfaceClass::Reflective)
            .collect()
    }
}

/// Evaluation families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestSetKind {
    Realistic,
    CubeLike,
    Flat,
    Elongated,
    /// RB rooms whose simulated RT30 lies in `[lo, hi]` seconds in every band.
    RtConstrained { lo: f64, hi: f64 },
    /// RB rooms; the noise level is varied later by the experiment runner.
    SnrSweep,
    ScatteringFixed(f64),
    AbsorptionFixed(f64),
    /// Cube-like RB rooms close to a diffuse field: mean absorption below
    /// `max_alpha` in every band, scattering drawn in `[min_scattering, 1]`.
    Diffuse { max_alpha: f64, min_scattering: f64 },
}

impl TestSetKind {
    pub const SLIGHTLY_REVERBERANT: TestSetKind = TestSetKind::RtConstrained { lo: 0.1, hi: 0.3 };
    pub const SEMI_REVERBERANT: TestSetKind = TestSetKind::RtConstrained { lo: 0.3, hi: 0.8 };
    pub const REVERBERANT: TestSetKind = TestSetKind::RtConstrained { lo: 0.8, hi: 2.0 };
    pub const DSF: TestSetKind = TestSetKind::Diffuse {
        max_alpha: 0.2,
        min_scattering: 0.5,
    };
}

#[derive(Debug, Clone)]
pub struct CraftOptions {
    pub strategy: SamplingStrategy,
    pub materials: MaterialTable,
    /// Rejection bound for `RtConstrained`, in candidate rooms per accepted room.
    pub max_rejections_per_room: usize,
}

impl Default for CraftOptions {
    fn default() -> Self {
        CraftOptions {
            strategy: SamplingStrategy::rb(),
            materials: MaterialTable::default(),
            max_rejections_per_room: 200,
        }
    }
}

fn draw_dims<R: Rng + ?Sized>(rng: &mut R, x: (f64, f64), y: (f64, f64), lz: f64) -> RoomGeometry {
    RoomGeometry {
        lx: uniform(rng, x.0, x.1),
        ly: uniform(rng, y.0, y.1),
        lz,
    }
}

/// Builds `n` rooms of the requested family.
pub fn craft_test_set<R: Rng + ?Sized>(
    kind: TestSetKind,
    n: usize,
    rng: &mut R,
    sim_config: &SimConfig,
    options: &CraftOptions,
) -> Result<Vec<RoomSpec>> {
    let strategy = &options.strategy;
    let mut rooms = Vec::with_capacity(n);
    match kind {
        TestSetKind::Realistic => {
            for _ in 0..n {
                let [lx, ly, lz] = REALISTIC_GEOMETRIES[rng.gen_range(0..REALISTIC_GEOMETRIES.len())];
                let geometry = RoomGeometry { lx, ly, lz };
                let (source, receiver) = sample_positions(rng, &geometry, DEFAULT_MAX_ATTEMPTS)?;
                // Scattering follows the RB rule; absorption comes from the table.
                let shared = sample_acoustics(rng, &SamplingStrategy::rb())[0].scattering;
                let mut surfaces = [Surface {
                    absorption: BandProfile::flat(0.0),
                    scattering: shared,
                }; 6];
                for face in Face::ALL {
                    let pool = options.materials.candidates(face);
                    let m = pool[rng.gen_range(0..pool.len())];
                    surfaces[face.index()].absorption = BandProfile(m.absorption);
                }
                rooms.push(RoomSpec::new(geometry, surfaces, source, receiver)?);
            }
        }
        TestSetKind::CubeLike | TestSetKind::Flat | TestSetKind::Elongated => {
            let (x, y) = match kind {
                TestSetKind::CubeLike => ((2.0, 4.0), (2.0, 4.0)),
                TestSetKind::Flat => ((8.0, 10.0), (8.0, 10.0)),
                _ => ((2.0, 4.0), (8.0, 10.0)),
            };
            for _ in 0..n {
                let geometry = draw_dims(rng, x, y, 2.5);
                rooms.push(room_in(rng, geometry, strategy)?);
            }
        }
        TestSetKind::SnrSweep => {
            for _ in 0..n {
                rooms.push(sample_room(rng, strategy)?);
            }
        }
        TestSetKind::ScatteringFixed(s) | TestSetKind::AbsorptionFixed(s) => {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::InvalidInput(format!("coefficient {s} outside [0, 1]")));
            }
            for _ in 0..n {
                let mut room = sample_room(rng, strategy)?;
                for surface in room.surfaces.iter_mut() {
                    match kind {
                        TestSetKind::ScatteringFixed(_) => surface.scattering = BandProfile::flat(s),
                        _ => surface.absorption = BandProfile::flat(s),
                    }
                }
                rooms.push(room);
            }
        }
        TestSetKind::Diffuse {
            max_alpha,
            min_scattering,
        } => {
            let cap = options.max_rejections_per_room.saturating_mul(n.max(1));
            let mut tried = 0usize;
            while rooms.len() < n {
                if tried >= cap {
                    return Err(Error::IterationCap(tried));
                }
                tried += 1;
                let geometry = draw_dims(rng, (2.0, 4.0), (2.0, 4.0), 2.5);
                let mut room = room_in(rng, geometry, strategy)?;
                let scattering = BandProfile([0; N_BANDS].map(|_| uniform(rng, min_scattering, 1.0)));
                for surface in room.surfaces.iter_mut() {
                    surface.scattering = scattering;
                }
                if mean_absorption(&room).alpha_bar.0.iter().all(|&a| a < max_alpha) {
                    rooms.push(room);
                }
            }
        }
        TestSetKind::RtConstrained { lo, hi } => {
            let cap = options.max_rejections_per_room.saturating_mul(n.max(1));
            let mut tried = 0usize;
            while rooms.len() < n {
                if tried >= cap {
                    return Err(Error::IterationCap(tried));
                }
                tried += 1;
                let room = sample_room(rng, strategy)?;
                let seed: u64 = rng.gen();
                let rir = sim::simulate(&room, sim_config, seed)?;
                let bands = dsp::octave_filter_bank(&rir)?;
                let in_range = bands.iter().all(|band| {
                    dsp::backward_integrate(band, rir.sample_rate)
                        .and_then(|curve| dsp::estimate_rt(&curve, 30.0))
                        .map(|rt| rt.rt >= lo && rt.rt <= hi)
                        .unwrap_or(false)
                });
                if in_range {
                    rooms.push(room);
                }
            }
        }
    }
    Ok(rooms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn geometry_ranges_and_determinism() {
        let mut r = rng(3);
        let mut sum_lz = 0.0;
        let n = 10_000;
        for _ in 0..n {
            let g = sample_geometry(&mut r);
            assert!((1.5..=10.0).contains(&g.lx) && (1.5..=10.0).contains(&g.ly));
            assert!((2.5..=4.0).contains(&g.lz));
            sum_lz += g.lz;
        }
        // Standard error of the mean is 1.5/sqrt(12 * 10_000) ≈ 0.0043.
        assert!((sum_lz / n as f64 - 3.25).abs() < 0.02);
        assert_eq!(sample_geometry(&mut rng(9)), sample_geometry(&mut rng(9)));
    }

    #[test]
    fn positions_respect_margins() {
        let g = RoomGeometry::new(4.0, 5.0, 3.0).unwrap();
        let mut r = rng(1);
        for _ in 0..1000 {
            let (s, q) = sample_positions(&mut r, &g, DEFAULT_MAX_ATTEMPTS).unwrap();
            for p in [s, q] {
                for (c, d) in p.iter().zip(g.dims()) {
                    assert!(*c >= 0.5 && *c <= d - 0.5);
                }
            }
            assert!(distance(s, q) >= 1.0);
        }
    }

    #[test]
    fn tight_room_still_feasible() {
        // Inner box 0.8 x 0.8 x 1.6, diagonal ≈ 1.96 m.
        let g = RoomGeometry::new(1.8, 1.8, 2.6).unwrap();
        let inner: f64 = [0.8f64, 0.8, 1.6].iter().map(|d| d * d).sum::<f64>().sqrt();
        assert!((inner - 1.96).abs() < 0.01);
        let (s, q) = sample_positions(&mut rng(5), &g, DEFAULT_MAX_ATTEMPTS).unwrap();
        assert!(distance(s, q) >= 1.0);
    }

    #[test]
    fn degenerate_room_is_infeasible() {
        let g = RoomGeometry::new(1.0, 5.0, 3.0).unwrap();
        assert!(matches!(
            sample_positions(&mut rng(0), &g, 100),
            Err(Error::InfeasibleGeometry(_))
        ));
    }

    #[test]
    fn rb_profiles() {
        let strategy = SamplingStrategy::rb();
        let mut r = rng(11);
        let mut saw_flat_walls = false;
        for _ in 0..2000 {
            let surfaces = sample_acoustics(&mut r, &strategy);
            let walls: Vec<&Surface> = Face::ALL
                .iter()
                .filter(|f| f.is_wall())
                .map(|f| &surfaces[f.index()])
                .collect();
            if walls[0].absorption.is_flat() {
                saw_flat_walls = true;
                for w in &walls {
                    assert!(w.absorption.is_flat());
                    assert!((0.01..=0.12).contains(&w.absorption[0]));
                }
            }
            for s in &surfaces {
                assert_eq!(s.scattering, surfaces[0].scattering);
                for b in 0..3 {
                    assert!((0.0..=0.3).contains(&s.scattering[b]));
                }
                for b in 3..6 {
                    assert!((0.2..=1.0).contains(&s.scattering[b]));
                }
            }
        }
        assert!(saw_flat_walls);
    }

    #[test]
    fn rb_distribution_has_reflective_mass() {
        let mut r = rng(21);
        let n = 10_000;
        let mut count = |strategy: SamplingStrategy| {
            (0..n)
                .filter(|_| {
                    let room = sample_room(&mut r, &strategy).unwrap();
                    mean_absorption(&room).alpha_bar[3] < 0.15
                })
                .count() as f64
                / n as f64
        };
        let rb = count(SamplingStrategy::rb());
        let unif = count(SamplingStrategy::unif());
        assert!(rb >= 0.20, "RB fraction {rb}");
        assert!(unif < 0.02, "Unif fraction {unif}");
    }

    #[test]
    fn sampled_values_stay_in_range() {
        let mut r = rng(8);
        for strategy in [SamplingStrategy::unif(), SamplingStrategy::rb()] {
            for _ in 0..10_000 {
                let room = sample_room(&mut r, &strategy).unwrap();
                room.validate().unwrap();
                for s in &room.surfaces {
                    assert!(s.absorption.is_coefficient() && s.scattering.is_coefficient());
                }
            }
        }
    }

    #[test]
    fn stream_is_deterministic() {
        let strategy = SamplingStrategy::rb();
        let a: Vec<RoomSpec> = {
            let mut r = rng(77);
            (0..20).map(|_| sample_room(&mut r, &strategy).unwrap()).collect()
        };
        let b: Vec<RoomSpec> = {
            let mut r = rng(77);
            (0..20).map(|_| sample_room(&mut r, &strategy).unwrap()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn crafted_families() {
        let cfg = SimConfig::fast();
        let opts = CraftOptions::default();
        let mut r = rng(4);
        for room in craft_test_set(TestSetKind::Realistic, 50, &mut r, &cfg, &opts).unwrap() {
            let d = room.geometry.dims();
            assert!(REALISTIC_GEOMETRIES.contains(&d));
        }
        for room in craft_test_set(TestSetKind::CubeLike, 50, &mut r, &cfg, &opts).unwrap() {
            assert!((2.0..=4.0).contains(&room.geometry.lx));
            assert!((2.0..=4.0).contains(&room.geometry.ly));
            assert_eq!(room.geometry.lz, 2.5);
        }
        for room in craft_test_set(TestSetKind::Elongated, 20, &mut r, &cfg, &opts).unwrap() {
            assert!((8.0..=10.0).contains(&room.geometry.ly));
        }
        for room in craft_test_set(TestSetKind::AbsorptionFixed(0.3), 20, &mut r, &cfg, &opts).unwrap() {
            for v in mean_absorption(&room).alpha_bar.values() {
                assert!((v - 0.3).abs() < 1e-12);
            }
        }
        for room in craft_test_set(TestSetKind::ScatteringFixed(0.7), 5, &mut r, &cfg, &opts).unwrap() {
            assert!(room.surfaces.iter().all(|s| s.scattering == BandProfile::flat(0.7)));
        }
        for room in craft_test_set(TestSetKind::DSF, 20, &mut r, &cfg, &opts).unwrap() {
            assert!(mean_absorption(&room).alpha_bar.values().iter().all(|&a| a < 0.2));
            assert!(room.mean_scattering().values().iter().all(|&s| s >= 0.5));
            assert!((2.0..=4.0).contains(&room.geometry.lx) && room.geometry.lz == 2.5);
        }
    }

    #[test]
    fn bundled_tables_load() {
        let ranges = MaterialRanges::default();
        assert_eq!(ranges.reflective, (0.01, 0.12));
        let table = MaterialTable::default();
        assert!(table
            .materials
            .iter()
            .filter(|m| m.class == SurfaceClass::Reflective)
            .all(|m| m.absorption.iter().all(|&a| a <= 0.12)));
    }
}
