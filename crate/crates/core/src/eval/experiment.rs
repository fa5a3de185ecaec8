use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{absolute_errors, BoxStats, ErrorSet};
use crate::baselines::{estimate_alpha_classical, Method};
use crate::dataset::item_rng;
use crate::dsp::{self, INPUT_LEN};
use crate::error::{Error, Result};
use crate::nn::{self, Model};
use crate::sampler::{craft_test_set, CraftOptions, TestSetKind};
use crate::sim::{self, Rir, SimConfig};
use crate::types::{mean_absorption, RoomSpec, BAND_CENTERS, N_BANDS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Crafted(TestSetKind),
    /// RB rooms re-noised at every level of the sweep.
    SnrSweep,
    /// Realistic rooms simulated with diffuse rain, for comparing models
    /// trained with and without it.
    SpecularAblation,
}

impl Family {
    pub const NAMES: &'static [&'static str] = &[
        "realistic",
        "cube_like",
        "flat",
        "elongated",
        "slightly_reverberant",
        "semi_reverberant",
        "reverberant",
        "dsf",
        "snr_sweep",
        "specular_ablation",
        "scattering_<s>",
        "absorption_<a>",
    ];

    pub fn parse(name: &str) -> Result<Family> {
        use TestSetKind as K;
        Ok(match name {
            "realistic" => Family::Crafted(K::Realistic),
            "cube_like" => Family::Crafted(K::CubeLike),
            "flat" => Family::Crafted(K::Flat),
            "elongated" => Family::Crafted(K::Elongated),
            "slightly_reverberant" => Family::Crafted(K::SLIGHTLY_REVERBERANT),
            "semi_reverberant" => Family::Crafted(K::SEMI_REVERBERANT),
            "reverberant" => Family::Crafted(K::REVERBERANT),
            "dsf" => Family::Crafted(K::DSF),
            "snr_sweep" => Family::SnrSweep,
            "specular_ablation" => Family::SpecularAblation,
            other => {
                let fixed = |prefix: &str| {
                    other
                        .strip_prefix(prefix)
                        .and_then(|v| v.parse::<f64>().ok())
                        .filter(|v| (0.0..=1.0).contains(v))
                };
                if let Some(s) = fixed("scattering_") {
                    Family::Crafted(K::ScatteringFixed(s))
                } else if let Some(a) = fixed("absorption_") {
                    Family::Crafted(K::AbsorptionFixed(a))
                } else {
                    return Err(Error::InvalidInput(format!(
                        "unknown family {other:?}; expected one of {}",
                        Family::NAMES.join(", ")
                    )));
                }
            }
        })
    }

    pub fn name(&self) -> String {
        use TestSetKind as K;
        match *self {
            Family::SnrSweep => "snr_sweep".into(),
            Family::SpecularAblation => "specular_ablation".into(),
            Family::Crafted(kind) => match kind {
                K::Realistic => "realistic".into(),
                K::CubeLike => "cube_like".into(),
                K::Flat => "flat".into(),
                K::Elongated => "elongated".into(),
                K::SnrSweep => "snr_sweep".into(),
                K::ScatteringFixed(s) => format!("scattering_{s}"),
                K::AbsorptionFixed(a) => format!("absorption_{a}"),
                k if k == K::SLIGHTLY_REVERBERANT => "slightly_reverberant".into(),
                k if k == K::SEMI_REVERBERANT => "semi_reverberant".into(),
                k if k == K::REVERBERANT => "reverberant".into(),
                k if k == K::DSF => "dsf".into(),
                K::RtConstrained { lo, hi } => format!("rt_{lo}_{hi}"),
                K::Diffuse {
                    max_alpha,
                    min_scattering,
                } => format!("diffuse_{max_alpha}_{min_scattering}"),
            },
        }
    }

    fn kind(&self) -> TestSetKind {
        match *self {
            Family::Crafted(k) => k,
            Family::SnrSweep => TestSetKind::SnrSweep,
            Family::SpecularAblation => TestSetKind::Realistic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSpec {
    Classical(Method),
    Learned { name: String, path: PathBuf },
}

impl MethodSpec {
    pub fn name(&self) -> String {
        match self {
            MethodSpec::Classical(Method::Eyring) => "eyring".into(),
            MethodSpec::Classical(Method::Sabine) => "sabine".into(),
            MethodSpec::Learned { name, .. } => name.clone(),
        }
    }
}

/// Waveform analysed by the classical methods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassicalInput {
    /// The preprocessed network input (first 500 ms at 16 kHz, noisy).
    Excerpt,
    /// A separate full-band simulation of `time` seconds with image order
    /// capped at `image_order`; noise power is measured on its first 500 ms.
    Full { time: f64, image_order: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_rooms: usize,
    pub seed: u64,
    /// Simulation of the 0.5 s excerpt fed to learned models.
    pub sim: SimConfig,
    pub classical_input: ClassicalInput,
    /// Noise level of the test waveforms; infinite for none.
    pub snr_db: f64,
    pub snr_levels: Vec<f64>,
    /// RT fit depth below -5 dB.
    pub depth_db: f64,
    pub aggregate_over_bands: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_rooms: 100,
            seed: 0,
            sim: SimConfig::fast(),
            classical_input: ClassicalInput::Excerpt,
            snr_db: dsp::DEFAULT_SNR_DB,
            snr_levels: vec![10.0, 20.0, 30.0, 40.0, 50.0, f64::INFINITY],
            depth_db: 30.0,
            aggregate_over_bands: false,
        }
    }
}

impl ExperimentConfig {
    /// Simulation used for crafting rooms and for full-length analysis.
    pub fn analysis_sim(&self) -> SimConfig {
        match self.classical_input {
            ClassicalInput::Excerpt => self.sim.clone(),
            ClassicalInput::Full { time, image_order } => SimConfig {
                max_time: time,
                max_image_order: Some(image_order),
                ..self.sim.clone()
            },
        }
    }
}

fn snr_tag(snr: f64) -> String {
    if snr.is_infinite() {
        "snr_inf".into()
    } else {
        format!("snr{snr}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    /// Noise condition, e.g. `snr30` or `snr_inf`.
    pub condition: String,
    pub errors: ErrorSet,
    pub stats: Option<BoxStats>,
    pub band_stats: [Option<BoxStats>; N_BANDS],
}

impl MethodResult {
    /// Output name: the method, plus the condition inside a sweep.
    pub fn label(&self, sweep: bool) -> String {
        if sweep {
            format!("{}_{}", self.method, self.condition)
        } else {
            self.method.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub family: String,
    pub n_rooms: usize,
    pub sweep: bool,
    pub results: Vec<MethodResult>,
}

impl Report {
    pub fn result(&self, method: &str, condition: Option<&str>) -> Option<&MethodResult> {
        self.results
            .iter()
            .find(|r| r.method == method && condition.is_none_or(|c| r.condition == c))
    }

    /// Writes `<family>_<method>.csv` error records, `<family>_box.csv` and
    /// `<family>_summary.txt`; `header` is written as a leading `#` comment.
    pub fn write(&self, dir: &Path, header: &str) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let comment: String = header.lines().map(|l| format!("# {l}\n")).collect();
        let mut written = Vec::new();
        let mut put = |name: String, body: String| -> Result<()> {
            let path = dir.join(name);
            fs::write(&path, format!("{comment}{body}")).map_err(|e| Error::io(&path, e))?;
            written.push(path);
            Ok(())
        };
        for r in &self.results {
            let mut body = String::from("method,condition,room,band_hz,estimate,label,absolute_error\n");
            for e in &r.errors.records {
                let band = e.band.map_or("all".to_string(), |b| BAND_CENTERS[b].to_string());
                writeln!(
                    body,
                    "{},{},{},{band},{:.6},{:.6},{:.6}",
                    e.method, r.condition, e.room, e.estimate, e.label, e.absolute_error
                )
                .unwrap();
            }
            put(format!("{}_{}.csv", self.family, r.label(self.sweep)), body)?;
        }
        let mut body =
            String::from("method,condition,band_hz,n,unavailable,median,q1,q3,whisker_low,whisker_high,mean,std\n");
        let mut summary = format!("family {} ({} rooms)\n", self.family, self.n_rooms);
        for r in &self.results {
            let rows = std::iter::once(("all".to_string(), r.stats))
                .chain((0..N_BANDS).map(|b| (BAND_CENTERS[b].to_string(), r.band_stats[b])));
            for (band, s) in rows {
                match s {
                    Some(s) => writeln!(
                        body,
                        "{},{},{band},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                        r.method,
                        r.condition,
                        s.n,
                        r.errors.unavailable,
                        s.median,
                        s.q1,
                        s.q3,
                        s.whisker_low,
                        s.whisker_high,
                        s.mean,
                        s.std
                    ),
                    None => writeln!(body, "{},{},{band},0,{},,,,,,,", r.method, r.condition, r.errors.unavailable),
                }
                .unwrap();
            }
            match r.stats {
                Some(s) => writeln!(
                    summary,
                    "{:<24} {:<8} median {:.4}  mean {:.4}  n {}  unavailable {}",
                    r.method, r.condition, s.median, s.mean, s.n, r.errors.unavailable
                ),
                None => writeln!(summary, "{:<24} {:<8} no estimates", r.method, r.condition),
            }
            .unwrap();
        }
        put(format!("{}_box.csv", self.family), body)?;
        put(format!("{}_summary.txt", self.family), summary)?;
        Ok(written)
    }
}

enum Loaded {
    Classical(Method),
    Learned(Box<Model>),
}

fn load_methods(methods: &[MethodSpec]) -> Result<Vec<Loaded>> {
    methods
        .iter()
        .map(|m| match m {
            MethodSpec::Classical(c) => Ok(Loaded::Classical(*c)),
            MethodSpec::Learned { name, path } => {
                if !path.exists() {
                    return Err(Error::MissingModel(format!("{name} ({})", path.display())));
                }
                Ok(Loaded::Learned(Box::new(nn::load_model_expecting(path, INPUT_LEN)?)))
            }
        })
        .collect()
}

const LONG_NOISE: u64 = 100;
const SHORT_NOISE: u64 = 200;
const SIM_SEED: u64 = 300;

/// Per-band estimates of every method for one room at each noise level:
/// `[level][method]`.
fn room_estimates(
    room: &RoomSpec,
    index: usize,
    methods: &[Loaded],
    levels: &[f64],
    config: &ExperimentConfig,
) -> Result<Vec<Vec<[Option<f64>; N_BANDS]>>> {
    let seed: u64 = item_rng(config.seed, index, SIM_SEED).gen();
    let classical = methods.iter().any(|m| matches!(m, Loaded::Classical(_)));
    let full = matches!(config.classical_input, ClassicalInput::Full { .. });
    let long = if classical && full {
        Some(sim::simulate(room, &config.analysis_sim(), seed)?)
    } else {
        None
    };
    let short = if !(classical && full) || methods.iter().any(|m| matches!(m, Loaded::Learned(_))) {
        Some(sim::simulate(room, &config.sim, seed)?)
    } else {
        None
    };
    let window = (0.5 * config.sim.sample_rate).round() as usize;
    let mut out = Vec::with_capacity(levels.len());
    for (li, &snr) in levels.iter().enumerate() {
        let tag = li as u64;
        let input = match &short {
            Some(rir) => {
                let mut rng = item_rng(config.seed, index, SHORT_NOISE + tag);
                Some(dsp::preprocess(rir, snr, &mut rng)?)
            }
            None => None,
        };
        let analysed = match &long {
            Some(rir) => {
                let mut rng = item_rng(config.seed, index, LONG_NOISE + tag);
                Some(dsp::add_noise_snr_window(rir, snr, window, &mut rng)?)
            }
            None => match &input {
                Some(x) => Some(Rir::new(x.clone(), dsp::INPUT_RATE)?),
                None => None,
            },
        };
        let input: Option<Vec<f32>> = input.map(|x| x.into_iter().map(|v| v as f32).collect());
        let mut row = Vec::with_capacity(methods.len());
        for m in methods {
            row.push(match m {
                Loaded::Classical(c) => {
                    let est = estimate_alpha_classical(
                        analysed.as_ref().unwrap(),
                        &room.geometry,
                        config.depth_db,
                        *c,
                    )?;
                    std::array::from_fn(|b| est.alpha(b))
                }
                Loaded::Learned(model) => {
                    let y = nn::predict(model, input.as_ref().unwrap())?;
                    y.alpha_bar.0.map(Some)
                }
            });
        }
        out.push(row);
    }
    Ok(out)
}

/// Runs `methods` on the given rooms at every noise level in `levels`.
pub fn evaluate_rooms(
    family: &str,
    rooms: &[RoomSpec],
    methods: &[MethodSpec],
    levels: &[f64],
    config: &ExperimentConfig,
) -> Result<Report> {
    let loaded = load_methods(methods)?;
    let per_room: Vec<Result<_>> = rooms
        .par_iter()
        .enumerate()
        .map(|(i, room)| room_estimates(room, i, &loaded, levels, config))
        .collect();
    let per_room = per_room.into_iter().collect::<Result<Vec<_>>>()?;
    let labels: Vec<[f64; N_BANDS]> = rooms.iter().map(|r| mean_absorption(r).alpha_bar.0).collect();
    let mut results = Vec::new();
    for (li, &snr) in levels.iter().enumerate() {
        for (mi, m) in methods.iter().enumerate() {
            let estimates: Vec<_> = per_room.iter().map(|r| r[li][mi]).collect();
            let errors = absolute_errors(&m.name(), &estimates, &labels, config.aggregate_over_bands)?;
            let stats = BoxStats::compute(&errors.values()).ok();
            let band_stats = std::array::from_fn(|b| BoxStats::compute(&errors.band_values(b)).ok());
            results.push(MethodResult {
                method: m.name(),
                condition: snr_tag(snr),
                errors,
                stats,
                band_stats,
            });
        }
    }
    Ok(Report {
        family: family.to_string(),
        n_rooms: rooms.len(),
        sweep: levels.len() > 1,
        results,
    })
}

/// Crafts the family's test rooms and evaluates every method on them.
pub fn run_experiment(
    family: Family,
    methods: &[MethodSpec],
    config: &ExperimentConfig,
) -> Result<Report> {
    // Fail on missing models before spending time on simulation.
    load_methods(methods)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let rooms = craft_test_set(
        family.kind(),
        config.n_rooms,
        &mut rng,
        &config.analysis_sim(),
        &CraftOptions::default(),
    )?;
    let levels = match family {
        Family::SnrSweep => config.snr_levels.clone(),
        _ => vec![config.snr_db],
    };
    evaluate_rooms(&family.name(), &rooms, methods, &levels, config)
}
